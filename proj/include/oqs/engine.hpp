#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oqs/circuits.hpp"
#include "oqs/noise.hpp"
#include "oqs/operators.hpp"
#include "oqs/rng.hpp"
#include "oqs/state.hpp"

namespace oqs {

/// Everything the steppers need about a model: Hamiltonian, Lindblad
/// descriptors and the observables recorded for it (mean sigma_z for DTI,
/// mean n for QCP). Immutable after construction; shared across workers.
struct Model {
    ModelSpec spec;
    OperatorSum H;
    std::vector<LindbladDescriptor> lindblads;
    std::vector<std::string> observable_names;
    std::vector<OperatorSum> observables;

    static Model make(const ModelSpec& spec);
    int n_sites() const { return spec.n_sites; }
};

struct XSchedule {
    enum class Mode { constant, initial, adaptive };
    Mode mode = Mode::initial;
    double value = 0.5; // constant mode only

    static XSchedule parse(const std::string& text); // "const:<v>" | "initial" | "adaptive"
    std::string to_string() const;
};

struct TrajectoryConfig {
    double dt = 0.05;
    int n_steps = 0;
    int n_traj = 1;
    std::uint64_t master_seed = 1;
    XSchedule x_schedule;
    int shots = 0;   // 0 = exact expectation values, else sampled estimates
    int n_threads = 0; // 0 = hardware concurrency

    void validate(const Model& model) const; // checks dt > 0, max rate*dt <= 1
};

struct OptimiseXResult {
    double x = 0.5;
    bool degenerate = false; // objective independent of x (empty H)
};

/// Minimiser of the leading (dt)^2 error norm over x in [0,1]:
/// || { -(1-2x+2x^2)/2 H^2 + i/2 H (D - <D>) - i/2 x [H, D] } |psi> ||^2
/// with D = sum L^+L. The objective is a quartic in x whose derivative is
/// solved in closed form; ties break toward 0.5.
OptimiseXResult optimise_x(const OperatorSum& H, std::span<const LindbladDescriptor> Ls,
                           const QuantumState& state);

/// Per-step circuits of the splitting: exp(-i x H dt), the spin-adapted jump
/// blocks in ascending descriptor order, exp(-i (1-x) H dt). With noise
/// enabled all three are lowered to the native gate set.
struct StepCircuits {
    Circuit pre{0}, post{0};
    std::vector<Circuit> jumps;        // only descriptors with rate > 0
    std::vector<int> jump_descriptor;  // descriptor index per entry
    int n_descriptors = 0;
};

StepCircuits build_step_circuits(const Model& model, double dt, double x, bool native);

/// One MSSE step. Requires the ancilla (highest qubit) in |0>; records one
/// (descriptor, dN) pair per descriptor into jump_log.
void msse_step(QuantumState& state, const StepCircuits& circuits, CounterRng& rng,
               std::vector<std::pair<int, int>>& jump_log,
               const NoiseConfig* noise = nullptr);

struct TrajectoryResult {
    std::vector<std::vector<double>> observables; // [obs][0..n_steps]
    std::vector<std::vector<std::pair<int, int>>> jump_log; // [step][descriptor]
    std::vector<double> x_values; // [step]
};

/// Single trajectory from the fully-up initial state. x_initial is the
/// precomputed x(0) used by the `initial` schedule mode.
TrajectoryResult run_trajectory(const Model& model, const TrajectoryConfig& cfg,
                                int traj_index, double x_initial,
                                const NoiseConfig* noise = nullptr);

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> observable_names;
    std::vector<std::vector<double>> mean;   // [obs][time]
    std::vector<std::vector<double>> stderr_; // [obs][time]
    std::vector<double> x_mean, x_stderr;    // [step]
    double x_initial = 0.5;
    bool x_degenerate = false;
};

/// Trajectory-parallel ensemble. Trajectory i draws from RNG streams keyed
/// by (master_seed, i, step); the reduction runs in fixed trajectory order,
/// so results are bit-identical for any worker count.
EnsembleResult run_ensemble(const Model& model, const TrajectoryConfig& cfg,
                            const NoiseConfig* noise = nullptr);

/// System-restricted trajectory states captured after `capture_step` steps
/// (ancilla removed; it is exactly |0> at step boundaries).
std::vector<QuantumState> ensemble_states_at(const Model& model, const TrajectoryConfig& cfg,
                                             int capture_step,
                                             const NoiseConfig* noise = nullptr);

} // namespace oqs
