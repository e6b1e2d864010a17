#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oqs/rng.hpp"

namespace oqs {

using cplx = std::complex<double>;

// 2x2 complex matrix, row-major: {m00, m01, m10, m11}.
using Mat2 = std::array<cplx, 4>;

struct Control {
    int qubit;
    int value; // 0 = open (acts when |0>), 1 = filled
};

/// Dense statevector over n qubits, little-endian: qubit 0 is the least
/// significant bit of the basis index. The ancilla, when present, sits at
/// the highest index by convention.
///
/// Gates mutate amplitudes in place via stride loops; no dense circuit
/// matrix is ever formed here. All public operations keep the norm within
/// 1e-9 (projections renormalise explicitly, unitary streams renormalise
/// every 100 gates to cap float drift).
class QuantumState {
public:
    explicit QuantumState(int n_qubits);
    static QuantumState basis_state(int n_qubits, std::uint64_t bits);
    static QuantumState from_amplitudes(int n_qubits, std::vector<cplx> amps);

    int n_qubits() const { return n_qubits_; }
    std::uint64_t dim() const { return amps_.size(); }
    std::span<const cplx> amplitudes() const { return amps_; }
    std::span<cplx> amplitudes_mut() { return amps_; }
    cplx amplitude(std::uint64_t i) const { return amps_[i]; }

    void set_ancilla(int index);
    std::optional<int> ancilla() const { return ancilla_; }

    double norm_sq() const;
    void normalize();

    /// Apply a 2x2 unitary to `qubit`. Rejects non-unitary u (deviation > 1e-8).
    void apply_one_qubit(int qubit, const Mat2& u);

    /// Apply u to `target` on basis states where every control matches its
    /// polarity. Supports 1 or 2 controls.
    void apply_controlled(std::span<const Control> controls, int target, const Mat2& u);

    /// Born-rule measurement; projects and renormalises. Returns the outcome bit.
    int measure_qubit(int qubit, CounterRng& rng);

    /// Measure followed by X on outcome 1: leaves the qubit in |0>.
    void reset_qubit(int qubit, CounterRng& rng);

    /// Probability that `qubit` reads 1.
    double probability_one(int qubit) const;

    /// Multinomial sample of basis states; keys are bitstrings printed
    /// most-significant qubit first (q_{n-1}...q_0). Counts sum to shots.
    std::map<std::string, std::uint64_t> sample_bitstrings(std::uint64_t shots,
                                                           CounterRng& rng) const;

private:
    void check_qubit(int qubit) const;
    void maybe_renormalize();

    int n_qubits_;
    std::optional<int> ancilla_;
    std::vector<cplx> amps_;
    int gates_since_renorm_ = 0;
};

/// Frobenius deviation of u from unitarity (|| u u^+ - I ||_max).
double unitary_deviation(const Mat2& u);

/// Apply a dense 2^k x 2^k matrix (row-major, bit i of the local index
/// addressing sites[i]) to a length-2^n vector. Shared kernel for gate
/// application, operator sums and density-matrix columns. Not required to
/// be unitary.
void apply_k_site_matrix(std::span<cplx> vec, int n_qubits,
                         std::span<const int> sites,
                         std::span<const cplx> matrix);

} // namespace oqs
