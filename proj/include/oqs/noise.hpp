#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "oqs/circuits.hpp"
#include "oqs/rng.hpp"
#include "oqs/state.hpp"

namespace oqs {

/// Depolarising gate-noise model: two-qubit error probability p2 and
/// one-qubit probability p1 (default p2/10). Convention:
/// E(rho) = (1-p) rho + p/(4^k - 1) sum_{P != I} P rho P.
struct NoiseConfig {
    double p2 = 0.0;
    double p1 = -1.0; // negative = use p2/10

    double one_qubit() const { return p1 < 0 ? p2 / 10.0 : p1; }
    void validate() const;
};

/// Execute a native circuit, inserting a uniformly random non-identity Pauli
/// after each one-qubit unitary (probability p1) and after each CNOT
/// (probability p2, over the 15 two-qubit Paulis). Measure and Reset are
/// noiseless. Throws on non-native gates. With p = 0 the RNG consumption
/// matches the noiseless executor draw for draw.
void noisy_execute(const Circuit& native, QuantumState& state, const NoiseConfig& noise,
                   CounterRng& rng, std::span<int> slots = {});

/// Hermitian trace-1 matrix over n qubits.
class DensityMatrix {
public:
    explicit DensityMatrix(int n_qubits);
    DensityMatrix(int n_qubits, Eigen::MatrixXcd m);
    static DensityMatrix from_state(const QuantumState& psi);
    static DensityMatrix basis_state(int n_qubits, std::uint64_t bits);

    int n_qubits() const { return n_qubits_; }
    Eigen::Index dim() const { return m_.rows(); }
    const Eigen::MatrixXcd& matrix() const { return m_; }
    Eigen::MatrixXcd& matrix() { return m_; }

    double trace_real() const { return m_.trace().real(); }
    double hermiticity_defect() const;
    /// trace within 1e-8 of 1, Hermiticity within 1e-10, eigenvalues >= -1e-8.
    void validate(bool check_eigenvalues = true) const;

private:
    int n_qubits_;
    Eigen::MatrixXcd m_;
};

/// (1/M) sum |psi_i><psi_i|; all states must share the dimension (N <= 12).
DensityMatrix density_from_ensemble(std::span<const QuantumState> states);

/// Uhlmann fidelity F = Tr[sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2 via Hermitian
/// eigendecompositions. Eigenvalues below -1e-6 signal an invalid input;
/// tiny negatives are clamped to zero. N <= 8.
double fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

struct ModelSpec;      // operators.hpp
struct TrajectoryConfig; // engine.hpp

/// For each N: fidelity between the noisy and noiseless ensemble density
/// matrices at fixed physical time `at_time`, matched seeds and counts.
std::vector<std::pair<int, double>>
fidelity_vs_size(const ModelSpec& base, const TrajectoryConfig& cfg,
                 const NoiseConfig& noise, std::span<const int> n_list, double at_time);

} // namespace oqs
