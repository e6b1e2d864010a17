#pragma once

#include <span>
#include <string>
#include <vector>

#include "oqs/state.hpp"

namespace oqs {

// Spin convention used throughout: |0> = up = active, |1> = down = inactive,
// so sigma_z = diag(+1,-1), n = |0><0| counts active sites, and the fully-up
// initial state is the all-zeros bitstring.

/// Few-site operator: a dense 2^k x 2^k matrix on 1..3 sites times a scalar.
/// Local matrix index bit i addresses sites[i] (bit 0 = sites[0]).
struct LocalTerm {
    std::vector<int> sites;
    std::vector<cplx> matrix; // row-major 2^k x 2^k
    cplx coefficient = 1.0;
    std::string label;

    int n_sites() const { return static_cast<int>(sites.size()); }
    /// max |M - M^+| of coefficient*matrix.
    double hermiticity_defect() const;
    void validate(int n_qubits) const;
};

struct OperatorSum {
    std::vector<LocalTerm> terms;
    bool empty() const { return terms.empty(); }
};

enum class LindbladKind { decay, branching, coagulation, custom };

/// One Lindblad operator together with its precomputed L^+L.
/// decay:       L = sqrt(gamma) sigma-_l,      L^+L = gamma n_l
/// branching:   L = sqrt(kappa) n_m sigma+_l,  L^+L = kappa n_m (1 - n_l)
/// coagulation: L = sqrt(kappa) n_m sigma-_l,  L^+L = kappa n_m n_l
struct LindbladDescriptor {
    LindbladKind kind;
    std::vector<int> sites; // {l} for decay, ordered {m, l} otherwise
    double rate = 0.0;
    LocalTerm L;
    LocalTerm LdagL;
};

enum class ModelKind { DTI, QCP };

struct ModelSpec {
    ModelKind model = ModelKind::DTI;
    int n_sites = 1;
    double J = 0.0, Delta = 0.0; // DTI couplings
    double omega = 0.0, kappa = 0.0; // QCP rates
    double gamma = 0.0; // decay rate (both models)

    void validate() const;
};

// single-site matrices (spin convention above)
Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();
Mat2 sigma_minus(); // |1><0| : up -> down
Mat2 sigma_plus();  // |0><1| : down -> up
Mat2 number_op();   // |0><0|

/// Local matrix for a 2-site term: bit0_mat on sites[0], bit1_mat on sites[1].
std::vector<cplx> two_site_matrix(const Mat2& bit1_mat, const Mat2& bit0_mat);
std::vector<cplx> one_site_matrix(const Mat2& m);

LocalTerm make_term(std::vector<int> sites, std::vector<cplx> matrix, cplx coefficient,
                    std::string label);

/// H = -J sum_<m,l> z_l z_m + Delta sum_l x_l (one term per undirected bond),
/// plus N decay descriptors at rate gamma.
std::pair<OperatorSum, std::vector<LindbladDescriptor>>
build_dti(int N, double J, double Delta, double gamma);

/// H = omega sum over directed nearest-neighbour pairs of n_m x_l; per
/// directed pair one branching and one coagulation descriptor at rate kappa;
/// per site one decay descriptor at rate gamma.
std::pair<OperatorSum, std::vector<LindbladDescriptor>>
build_qcp(int N, double omega, double kappa, double gamma);

std::pair<OperatorSum, std::vector<LindbladDescriptor>> build_model(const ModelSpec&);

/// coefficient * (term matrix on sites) |psi>, unnormalised; input unchanged.
std::vector<cplx> apply_term(const LocalTerm& term, std::span<const cplx> psi, int n_qubits);

/// Sum of coefficient*(matrix on sites)|psi> over all terms, unnormalised.
std::vector<cplx> apply_sum(const OperatorSum& op, const QuantumState& state);
void apply_sum_into(const OperatorSum& op, std::span<const cplx> in,
                    std::span<cplx> out, int n_qubits);

/// Collects every descriptor's L^+L into one OperatorSum.
OperatorSum sum_LdagL(std::span<const LindbladDescriptor> Ls);

/// <psi|term|psi>.real; throws if a Hermitian-looking term produces an
/// imaginary part above 1e-8.
double expectation_local(const QuantumState& state, const LocalTerm& term);
double expectation_sum(const QuantumState& state, const OperatorSum& op);

/// Mean over sites of sigma_z (DTI observable) / n (QCP observable), over the
/// first n_sites qubits.
OperatorSum mean_sigma_z(int n_sites);
OperatorSum mean_number(int n_sites);

} // namespace oqs
