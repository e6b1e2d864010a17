#include "oqs/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace oqs {

Mat2 pauli_x() { return {cplx(0), cplx(1), cplx(1), cplx(0)}; }
Mat2 pauli_y() { return {cplx(0), cplx(0, -1), cplx(0, 1), cplx(0)}; }
Mat2 pauli_z() { return {cplx(1), cplx(0), cplx(0), cplx(-1)}; }
Mat2 sigma_minus() { return {cplx(0), cplx(0), cplx(1), cplx(0)}; }
Mat2 sigma_plus() { return {cplx(0), cplx(1), cplx(0), cplx(0)}; }
Mat2 number_op() { return {cplx(1), cplx(0), cplx(0), cplx(0)}; }

std::vector<cplx> one_site_matrix(const Mat2& m) {
    return std::vector<cplx>(m.begin(), m.end());
}

LocalTerm make_term(std::vector<int> sites, std::vector<cplx> matrix, cplx coefficient,
                    std::string label) {
    LocalTerm t;
    t.sites = std::move(sites);
    t.matrix = std::move(matrix);
    t.coefficient = coefficient;
    t.label = std::move(label);
    return t;
}

std::vector<cplx> two_site_matrix(const Mat2& bit1_mat, const Mat2& bit0_mat) {
    std::vector<cplx> m(16);
    for (int r1 = 0; r1 < 2; ++r1)
        for (int r0 = 0; r0 < 2; ++r0)
            for (int c1 = 0; c1 < 2; ++c1)
                for (int c0 = 0; c0 < 2; ++c0)
                    m[std::size_t((r1 << 1 | r0) * 4 + (c1 << 1 | c0))] =
                        bit1_mat[std::size_t(r1 * 2 + c1)] * bit0_mat[std::size_t(r0 * 2 + c0)];
    return m;
}

double LocalTerm::hermiticity_defect() const {
    const std::size_t d = std::size_t(1) << sites.size();
    double worst = 0.0;
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            cplx diff = coefficient * matrix[r * d + c] -
                        std::conj(coefficient * matrix[c * d + r]);
            worst = std::max(worst, std::abs(diff));
        }
    return worst;
}

void LocalTerm::validate(int n_qubits) const {
    const int k = n_sites();
    if (k < 1 || k > 3)
        throw std::invalid_argument("LocalTerm: 1..3 sites required");
    const std::size_t d = std::size_t(1) << k;
    if (matrix.size() != d * d)
        throw std::invalid_argument("LocalTerm '" + label + "': matrix size mismatch");
    for (int i = 0; i < k; ++i) {
        if (sites[std::size_t(i)] < 0 || sites[std::size_t(i)] >= n_qubits)
            throw std::invalid_argument("LocalTerm '" + label + "': site out of range");
        for (int j = i + 1; j < k; ++j)
            if (sites[std::size_t(i)] == sites[std::size_t(j)])
                throw std::invalid_argument("LocalTerm '" + label + "': duplicate sites");
    }
}

void ModelSpec::validate() const {
    if (n_sites < 1) throw std::invalid_argument("ModelSpec: n_sites >= 1 required");
    if (gamma < 0 || kappa < 0)
        throw std::invalid_argument("ModelSpec: rates must be nonnegative");
}

std::pair<OperatorSum, std::vector<LindbladDescriptor>>
build_dti(int N, double J, double Delta, double gamma) {
    if (N < 1) throw std::invalid_argument("build_dti: N >= 1 required");
    if (gamma < 0) throw std::invalid_argument("build_dti: negative decay rate");
    OperatorSum H;
    for (int i = 0; i + 1 < N; ++i) {
        LocalTerm t;
        t.sites = {i, i + 1};
        t.matrix = two_site_matrix(pauli_z(), pauli_z());
        t.coefficient = -J;
        t.label = "zz";
        H.terms.push_back(std::move(t));
    }
    for (int i = 0; i < N; ++i) {
        LocalTerm t;
        t.sites = {i};
        t.matrix = one_site_matrix(pauli_x());
        t.coefficient = Delta;
        t.label = "x";
        H.terms.push_back(std::move(t));
    }
    std::vector<LindbladDescriptor> Ls;
    for (int i = 0; i < N; ++i) {
        LindbladDescriptor d;
        d.kind = LindbladKind::decay;
        d.sites = {i};
        d.rate = gamma;
        d.L.sites = {i};
        d.L.matrix = one_site_matrix(sigma_minus());
        d.L.coefficient = std::sqrt(gamma);
        d.L.label = "sigma-";
        d.LdagL.sites = {i};
        d.LdagL.matrix = one_site_matrix(number_op());
        d.LdagL.coefficient = gamma;
        d.LdagL.label = "n";
        Ls.push_back(std::move(d));
    }
    return {std::move(H), std::move(Ls)};
}

namespace {

LindbladDescriptor make_pair_descriptor(LindbladKind kind, int m, int l, double kappa) {
    LindbladDescriptor d;
    d.kind = kind;
    d.sites = {m, l};
    d.rate = kappa;
    d.L.sites = {m, l};
    d.LdagL.sites = {m, l};
    d.L.coefficient = std::sqrt(kappa);
    d.LdagL.coefficient = kappa;
    const Mat2 n = number_op();
    const Mat2 one_minus_n{cplx(0), cplx(0), cplx(0), cplx(1)};
    if (kind == LindbladKind::branching) {
        d.L.matrix = two_site_matrix(sigma_plus(), n);        // n on m (bit0), sigma+ on l
        d.LdagL.matrix = two_site_matrix(one_minus_n, n);     // n_m (1 - n_l)
        d.L.label = "n⊗sigma+";
        d.LdagL.label = "n⊗(1-n)";
    } else {
        d.L.matrix = two_site_matrix(sigma_minus(), n);
        d.LdagL.matrix = two_site_matrix(n, n);               // n_m n_l
        d.L.label = "n⊗sigma-";
        d.LdagL.label = "n⊗n";
    }
    return d;
}

} // namespace

std::pair<OperatorSum, std::vector<LindbladDescriptor>>
build_qcp(int N, double omega, double kappa, double gamma) {
    if (N < 1) throw std::invalid_argument("build_qcp: N >= 1 required");
    if (gamma < 0 || kappa < 0)
        throw std::invalid_argument("build_qcp: negative rates");
    OperatorSum H;
    if (omega != 0.0) {
        for (int i = 0; i + 1 < N; ++i) {
            for (auto [m, l] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
                LocalTerm t;
                t.sites = {m, l};
                t.matrix = two_site_matrix(pauli_x(), number_op()); // n_m x_l
                t.coefficient = omega;
                t.label = "n⊗x";
                H.terms.push_back(std::move(t));
            }
        }
    }
    std::vector<LindbladDescriptor> Ls;
    auto decay = build_dti(N, 0.0, 0.0, gamma).second;
    Ls.insert(Ls.end(), decay.begin(), decay.end());
    for (int i = 0; i + 1 < N; ++i) {
        for (auto [m, l] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
            Ls.push_back(make_pair_descriptor(LindbladKind::branching, m, l, kappa));
            Ls.push_back(make_pair_descriptor(LindbladKind::coagulation, m, l, kappa));
        }
    }
    return {std::move(H), std::move(Ls)};
}

std::pair<OperatorSum, std::vector<LindbladDescriptor>> build_model(const ModelSpec& spec) {
    spec.validate();
    if (spec.model == ModelKind::DTI)
        return build_dti(spec.n_sites, spec.J, spec.Delta, spec.gamma);
    return build_qcp(spec.n_sites, spec.omega, spec.kappa, spec.gamma);
}

std::vector<cplx> apply_term(const LocalTerm& term, std::span<const cplx> psi, int n_qubits) {
    term.validate(n_qubits);
    std::vector<cplx> out(psi.begin(), psi.end());
    apply_k_site_matrix(out, n_qubits, term.sites, term.matrix);
    if (term.coefficient != cplx(1.0))
        for (cplx& a : out) a *= term.coefficient;
    return out;
}

void apply_sum_into(const OperatorSum& op, std::span<const cplx> in,
                    std::span<cplx> out, int n_qubits) {
    std::fill(out.begin(), out.end(), cplx(0.0));
    std::vector<cplx> scratch(in.size());
    for (const LocalTerm& t : op.terms) {
        t.validate(n_qubits);
        std::copy(in.begin(), in.end(), scratch.begin());
        apply_k_site_matrix(scratch, n_qubits, t.sites, t.matrix);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += t.coefficient * scratch[i];
    }
}

std::vector<cplx> apply_sum(const OperatorSum& op, const QuantumState& state) {
    std::vector<cplx> out(state.dim());
    apply_sum_into(op, state.amplitudes(), out, state.n_qubits());
    return out;
}

OperatorSum sum_LdagL(std::span<const LindbladDescriptor> Ls) {
    OperatorSum out;
    for (const LindbladDescriptor& d : Ls) out.terms.push_back(d.LdagL);
    return out;
}

double expectation_local(const QuantumState& state, const LocalTerm& term) {
    std::vector<cplx> v = apply_term(term, state.amplitudes(), state.n_qubits());
    cplx acc = 0.0;
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < v.size(); ++i) acc += std::conj(amps[i]) * v[i];
    if (term.hermiticity_defect() < 1e-12 && std::abs(acc.imag()) > 1e-8)
        throw std::runtime_error("expectation_local: imaginary part " +
                                 std::to_string(acc.imag()) + " for Hermitian term '" +
                                 term.label + "'");
    return acc.real();
}

double expectation_sum(const QuantumState& state, const OperatorSum& op) {
    double acc = 0.0;
    for (const LocalTerm& t : op.terms) acc += expectation_local(state, t);
    return acc;
}

OperatorSum mean_sigma_z(int n_sites) {
    OperatorSum op;
    for (int i = 0; i < n_sites; ++i) {
        LocalTerm t;
        t.sites = {i};
        t.matrix = one_site_matrix(pauli_z());
        t.coefficient = 1.0 / n_sites;
        t.label = "z";
        op.terms.push_back(std::move(t));
    }
    return op;
}

OperatorSum mean_number(int n_sites) {
    OperatorSum op;
    for (int i = 0; i < n_sites; ++i) {
        LocalTerm t;
        t.sites = {i};
        t.matrix = one_site_matrix(number_op());
        t.coefficient = 1.0 / n_sites;
        t.label = "n";
        op.terms.push_back(std::move(t));
    }
    return op;
}

} // namespace oqs
