#pragma once

#include <span>
#include <string>
#include <vector>

#include "oqs/engine.hpp"
#include "oqs/noise.hpp"
#include "oqs/operators.hpp"

namespace oqs {

/// -i[H,rho] + sum_l (L rho L^+ - 1/2 {L^+L, rho}), built matrix-free by
/// applying local terms to the columns (and, for right products, mixing
/// columns) of rho.
Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const OperatorSum& H,
                              std::span<const LindbladDescriptor> Ls);

struct LindbladIntegration {
    std::vector<double> times;
    std::vector<std::string> observable_names;
    std::vector<std::vector<double>> values; // [obs][record]
    std::vector<DensityMatrix> snapshots;    // filled when requested
    double step_halving_error = 0.0;         // filled when requested
};

/// Fixed-step RK4 integration of the Lindblad equation, recording the model
/// observables every record_dt (n_records+1 points including t=0). The
/// internal step is record_dt divided so that it never exceeds h_target and
/// records land exactly. Hermitised by symmetrisation each step; trace
/// preserved within 1e-8 over the horizon; diagonal positivity monitored,
/// violations beyond -1e-6 abort. N <= 10.
LindbladIntegration integrate_lindblad(const Model& model, const DensityMatrix& rho0,
                                       double record_dt, int n_records, double h_target,
                                       bool keep_snapshots = false,
                                       bool estimate_error = false);

/// First-order quantum-jump Monte Carlo of the stochastic Schroedinger
/// equation, structurally independent of the circuit engine: per step either
/// one jump L_l / ||.|| with probability <L^+L> dt, or the no-jump drift
/// (1 - i H dt - 1/2 sum L^+L dt) followed by renormalisation. Warns once
/// when sum <L^+L> dt exceeds 0.1. Shares EnsembleResult with the engine.
EnsembleResult jump_monte_carlo(const Model& model, const TrajectoryConfig& cfg);

} // namespace oqs
