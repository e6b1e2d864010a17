#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "oqs/operators.hpp"
#include "oqs/rng.hpp"
#include "oqs/state.hpp"

namespace oqs {

enum class GateKind { Rx, Ry, Rz, H, S, Sdg, X, CNOT, CRy, CCRy, Measure, Reset };

/// One IR gate. Operand layout: controls first, target last (qubits[arity-1]).
/// polarity[i] belongs to the i-th control (0 = open, acts on |0>).
struct Gate {
    GateKind kind;
    std::array<int, 3> qubits{-1, -1, -1};
    double angle = 0.0;
    std::array<std::int8_t, 2> polarity{1, 1};
    int slot = -1; // Measure only

    static Gate rx(int q, double a);
    static Gate ry(int q, double a);
    static Gate rz(int q, double a);
    static Gate h(int q);
    static Gate s(int q);
    static Gate sdg(int q);
    static Gate x(int q);
    static Gate cnot(int control, int target);
    static Gate cry(int control, int pol, int target, double a);
    static Gate ccry(int c0, int p0, int c1, int p1, int target, double a);
    static Gate measure(int q, int slot);
    static Gate reset(int q);

    int arity() const;
    int target() const { return qubits[std::size_t(arity() - 1)]; }
    bool is_unitary() const { return kind != GateKind::Measure && kind != GateKind::Reset; }
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    std::map<int, int> counts; // arity -> gate count (all kinds)
    int classical_slots = 0;

    explicit Circuit(int n = 0) : n_qubits(n) {}
    void push(const Gate& g);
    void append(const Circuit& other);
    std::map<int, int> recount() const;
    bool has_measurement() const;
    bool is_native() const;
    std::size_t size() const { return gates.size(); }
};

/// 2x2 matrix of a one-qubit gate kind (Rx(a)=exp(-i a X/2) convention).
Mat2 gate_matrix_1q(GateKind kind, double angle);

/// Symmetric-Trotter circuit approximating exp(-i H tau) to O(tau^3):
/// single-site half steps, even-bond halves, odd bonds full (internally
/// symmetrised when a bond carries non-commuting terms), mirrored closing
/// halves. A single-term H is emitted as one exact factor. Rejects 3-site terms.
Circuit trotter_step(const OperatorSum& H, double tau, int n_qubits);

/// Exact circuit for exp(-i coefficient * matrix * tau) of a 1-site term,
/// up to global phase.
Circuit one_qubit_exponential(const LocalTerm& term, double tau, int n_qubits);

/// Exact circuit for exp(-i coefficient * matrix * tau) of a supported
/// 2-site term class: z(x)z (CNOT-Rz-CNOT), projector(x)Pauli (controlled
/// rotation) and sums of two commuting two-qubit Pauli strings (magic-basis
/// route). Throws naming the term label otherwise.
Circuit synthesize_two_qubit_exponential(const LocalTerm& term, double tau, int n_qubits);

enum class JumpBasis {
    paper_occupied_one, // |1> is the occupied/jumping state, as drawn in the source circuits
    up_is_zero          // control polarities flipped to the |0>=up spin convention
};

/// Ancilla jump block for one Lindblad descriptor: (multi-)controlled
/// Ry(theta) onto the ancilla with theta = 2 arcsin(sqrt(rate*dt)),
/// corrective CNOT from the ancilla to the flipped site, Measure(ancilla)
/// into slot 0, Reset(ancilla). Requires rate*dt <= 1.
Circuit jump_block(const LindbladDescriptor& ld, double dt, int ancilla,
                   JumpBasis basis = JumpBasis::paper_occupied_one);

/// Rewrites to {Rx, Ry, Rz, H, S, Sdg, X, CNOT, Measure, Reset}: CRy via
/// {Ry, CNOT, Ry, CNOT}, CCRy via the controlled-V ladder with V = Ry(theta/2),
/// open controls via X conjugation. Idempotent on native circuits.
Circuit lower_to_native(const Circuit& c);

/// Dense unitary of a measurement-free circuit (row-major, dim 2^n), n <= 10.
/// Test oracle; not used on production paths.
std::vector<cplx> circuit_unitary(const Circuit& c);

/// Run the circuit on a state. Measurement outcomes are written to
/// slots[gate.slot] when provided.
void execute_circuit(const Circuit& c, QuantumState& state, CounterRng& rng,
                     std::span<int> slots = {});

/// Line-oriented text dump, one gate per line `KIND q0[,q1[,q2]] [angle]`
/// (controls before target; MEASURE's second index is the classical slot),
/// preceded by a `# qubits=N` header. parse_circuit is the exact inverse.
std::string dump_circuit(const Circuit& c);
Circuit parse_circuit(const std::string& text);

} // namespace oqs
