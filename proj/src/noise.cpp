#include "oqs/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace oqs {

void NoiseConfig::validate() const {
    if (p2 < 0 || p2 > 1 || one_qubit() < 0 || one_qubit() > 1)
        throw std::invalid_argument("NoiseConfig: probabilities must lie in [0,1]");
}

namespace {

void apply_pauli(QuantumState& state, int qubit, int pauli /* 1=X 2=Y 3=Z */) {
    static const Mat2 x = pauli_x();
    static const Mat2 y = pauli_y();
    static const Mat2 z = pauli_z();
    switch (pauli) {
        case 1: state.apply_one_qubit(qubit, x); break;
        case 2: state.apply_one_qubit(qubit, y); break;
        case 3: state.apply_one_qubit(qubit, z); break;
        default: break;
    }
}

} // namespace

void noisy_execute(const Circuit& circuit, QuantumState& state, const NoiseConfig& noise,
                   CounterRng& rng, std::span<int> slots) {
    noise.validate();
    if (!circuit.is_native())
        throw std::invalid_argument("noisy_execute: non-native gate encountered; lower first");
    const double p1 = noise.one_qubit();
    const double p2 = noise.p2;
    for (const Gate& g : circuit.gates) {
        switch (g.kind) {
            case GateKind::Measure: {
                const int outcome = state.measure_qubit(g.qubits[0], rng);
                if (g.slot >= 0 && std::size_t(g.slot) < slots.size())
                    slots[std::size_t(g.slot)] = outcome;
                break;
            }
            case GateKind::Reset:
                state.reset_qubit(g.qubits[0], rng);
                break;
            case GateKind::CNOT: {
                const Control ctl{g.qubits[0], 1};
                state.apply_controlled({&ctl, 1}, g.qubits[1], gate_matrix_1q(GateKind::X, 0));
                if (p2 > 0 && rng.next_double() < p2) {
                    // uniform over the 15 non-identity two-qubit Paulis
                    const int k = int(rng.next_below(15)) + 1;
                    apply_pauli(state, g.qubits[0], k >> 2);
                    apply_pauli(state, g.qubits[1], k & 3);
                }
                break;
            }
            default: {
                state.apply_one_qubit(g.qubits[0], gate_matrix_1q(g.kind, g.angle));
                if (p1 > 0 && rng.next_double() < p1)
                    apply_pauli(state, g.qubits[0], int(rng.next_below(3)) + 1);
            }
        }
    }
}

// ---------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 12)
        throw std::invalid_argument("DensityMatrix: n_qubits must be in [1, 12]");
    const Eigen::Index d = Eigen::Index(1) << n_qubits;
    m_ = Eigen::MatrixXcd::Zero(d, d);
}

DensityMatrix::DensityMatrix(int n_qubits, Eigen::MatrixXcd m) : DensityMatrix(n_qubits) {
    if (m.rows() != dim() || m.cols() != dim())
        throw std::invalid_argument("DensityMatrix: matrix dimension mismatch");
    m_ = std::move(m);
}

DensityMatrix DensityMatrix::from_state(const QuantumState& psi) {
    DensityMatrix rho(psi.n_qubits());
    const auto amps = psi.amplitudes();
    Eigen::Map<const Eigen::VectorXcd> v(amps.data(), Eigen::Index(amps.size()));
    rho.m_ = v * v.adjoint();
    return rho;
}

DensityMatrix DensityMatrix::basis_state(int n_qubits, std::uint64_t bits) {
    DensityMatrix rho(n_qubits);
    rho.m_(Eigen::Index(bits), Eigen::Index(bits)) = 1.0;
    return rho;
}

double DensityMatrix::hermiticity_defect() const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

void DensityMatrix::validate(bool check_eigenvalues) const {
    if (std::abs(trace_real() - 1.0) > 1e-8)
        throw std::runtime_error("DensityMatrix: trace deviates from 1 by " +
                                 std::to_string(trace_real() - 1.0));
    if (hermiticity_defect() > 1e-10)
        throw std::runtime_error("DensityMatrix: not Hermitian");
    if (check_eigenvalues) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-8)
            throw std::runtime_error("DensityMatrix: negative eigenvalue " +
                                     std::to_string(es.eigenvalues().minCoeff()));
    }
}

DensityMatrix density_from_ensemble(std::span<const QuantumState> states) {
    if (states.empty())
        throw std::invalid_argument("density_from_ensemble: no states");
    const int n = states[0].n_qubits();
    DensityMatrix rho(n);
    for (const QuantumState& s : states) {
        if (s.n_qubits() != n)
            throw std::invalid_argument("density_from_ensemble: dimension mismatch");
        const auto amps = s.amplitudes();
        Eigen::Map<const Eigen::VectorXcd> v(amps.data(), Eigen::Index(amps.size()));
        rho.matrix().noalias() += v * v.adjoint();
    }
    rho.matrix() /= double(states.size());
    return rho;
}

namespace {

Eigen::MatrixXcd hermitian_sqrt(const Eigen::MatrixXcd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-6)
            throw std::runtime_error(std::string(what) + ": eigenvalue " +
                                     std::to_string(ev[i]) + " below -1e-6");
        ev[i] = ev[i] > 0 ? std::sqrt(ev[i]) : 0.0;
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
    if (rho1.dim() != rho2.dim())
        throw std::invalid_argument("fidelity: dimension mismatch");
    if (rho1.n_qubits() > 8)
        throw std::invalid_argument("fidelity: limited to 8 qubits");
    const Eigen::MatrixXcd s1 = hermitian_sqrt(rho1.matrix(), "fidelity(rho1)");
    const Eigen::MatrixXcd inner = s1 * rho2.matrix() * s1;
    // inner is Hermitian PSD up to float noise
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        Eigen::MatrixXcd(0.5 * (inner + inner.adjoint())), Eigen::EigenvaluesOnly);
    double tr = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double ev = es.eigenvalues()[i];
        if (ev < -1e-6)
            throw std::runtime_error("fidelity: invalid density matrix (eigenvalue " +
                                     std::to_string(ev) + ")");
        tr += ev > 0 ? std::sqrt(ev) : 0.0;
    }
    const double f = tr * tr;
    return f < 0 ? 0.0 : (f > 1.0 + 1e-9 ? 1.0 : std::min(f, 1.0));
}

} // namespace oqs
