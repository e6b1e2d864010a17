#include "oqs/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace oqs {

// ---------------------------------------------------------------- Model

Model Model::make(const ModelSpec& spec) {
    Model m;
    m.spec = spec;
    auto [H, Ls] = build_model(spec);
    m.H = std::move(H);
    m.lindblads = std::move(Ls);
    if (spec.model == ModelKind::DTI) {
        m.observable_names = {"sigma_z"};
        m.observables = {mean_sigma_z(spec.n_sites)};
    } else {
        m.observable_names = {"n"};
        m.observables = {mean_number(spec.n_sites)};
    }
    return m;
}

// ---------------------------------------------------------------- XSchedule

XSchedule XSchedule::parse(const std::string& text) {
    XSchedule s;
    if (text == "initial") {
        s.mode = Mode::initial;
    } else if (text == "adaptive") {
        s.mode = Mode::adaptive;
    } else if (text.rfind("const:", 0) == 0) {
        s.mode = Mode::constant;
        s.value = std::stod(text.substr(6));
        if (s.value < 0.0 || s.value > 1.0)
            throw std::invalid_argument("x-mode const value must lie in [0,1]");
    } else {
        throw std::invalid_argument("x-mode must be const:<v>, initial or adaptive");
    }
    return s;
}

std::string XSchedule::to_string() const {
    switch (mode) {
        case Mode::initial: return "initial";
        case Mode::adaptive: return "adaptive";
        default: return "const:" + std::to_string(value);
    }
}

void TrajectoryConfig::validate(const Model& model) const {
    if (dt <= 0) throw std::invalid_argument("TrajectoryConfig: dt > 0 required");
    if (n_steps < 0) throw std::invalid_argument("TrajectoryConfig: n_steps >= 0 required");
    if (n_traj < 1) throw std::invalid_argument("TrajectoryConfig: n_traj >= 1 required");
    if (shots < 0) throw std::invalid_argument("TrajectoryConfig: shots >= 0 required");
    for (const LindbladDescriptor& d : model.lindblads)
        if (d.rate * dt > 1.0)
            throw std::invalid_argument(
                "TrajectoryConfig: rate*dt = " + std::to_string(d.rate * dt) +
                " exceeds 1; shrink dt");
}

// ---------------------------------------------------------------- optimise_x

namespace {

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

// real roots of a*x^3 + b*x^2 + c*x + d = 0
std::vector<double> cubic_real_roots(double a, double b, double c, double d) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d), 1e-300});
    if (std::abs(a) < 1e-13 * scale) {
        if (std::abs(b) < 1e-13 * scale) {
            if (std::abs(c) < 1e-13 * scale) return {};
            return {-d / c};
        }
        const double disc = c * c - 4 * b * d;
        if (disc < 0) return {};
        const double r = std::sqrt(disc);
        return {(-c + r) / (2 * b), (-c - r) / (2 * b)};
    }
    // depressed cubic t^3 + p2 t + q2, x = t - b/(3a)
    const double shift = b / (3 * a);
    const double p2 = (3 * a * c - b * b) / (3 * a * a);
    const double q2 = (2 * b * b * b - 9 * a * b * c + 27 * a * a * d) / (27 * a * a * a);
    std::vector<double> roots;
    const double disc = q2 * q2 / 4 + p2 * p2 * p2 / 27;
    if (disc > 1e-18 * scale / std::abs(a)) {
        const double r = std::sqrt(disc);
        const double t = std::cbrt(-q2 / 2 + r) + std::cbrt(-q2 / 2 - r);
        roots.push_back(t - shift);
    } else if (std::abs(p2) < 1e-15) {
        roots.push_back(std::cbrt(-q2) - shift);
    } else {
        const double m = 2 * std::sqrt(-p2 / 3);
        const double arg = std::clamp(3 * q2 / (p2 * m), -1.0, 1.0);
        const double phi = std::acos(arg) / 3;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(phi - 2 * std::numbers::pi * k / 3) - shift);
    }
    return roots;
}

} // namespace

OptimiseXResult optimise_x(const OperatorSum& H, std::span<const LindbladDescriptor> Ls,
                           const QuantumState& state) {
    if (H.empty()) return {0.5, true};
    const int n = state.n_qubits();
    const std::size_t dim = state.dim();

    std::vector<cplx> h_psi(dim), v1(dim), d_psi(dim), v2(dim), v3(dim);
    apply_sum_into(H, state.amplitudes(), h_psi, n);
    apply_sum_into(H, h_psi, v1, n);

    const OperatorSum D = sum_LdagL(Ls);
    if (!D.empty()) {
        apply_sum_into(D, state.amplitudes(), d_psi, n);
        const cplx d_expect = inner(state.amplitudes(), d_psi);
        std::vector<cplx> h_d_psi(dim), d_h_psi(dim);
        apply_sum_into(H, d_psi, h_d_psi, n);
        apply_sum_into(D, h_psi, d_h_psi, n);
        for (std::size_t i = 0; i < dim; ++i) {
            v2[i] = h_d_psi[i] - d_expect.real() * h_psi[i];
            v3[i] = h_d_psi[i] - d_h_psi[i];
        }
    }

    const double s11 = inner(v1, v1).real();
    const double s22 = inner(v2, v2).real();
    const double s33 = inner(v3, v3).real();
    const cplx s12 = inner(v1, v2);
    const cplx s13 = inner(v1, v3);
    const cplx s23 = inner(v2, v3);

    // f(x) = A(x)^2 s11 + s22/4 + x^2 s33/4 - Im(s12) A(x) + Im(s13) A(x) x
    //        - Re(s23) x / 2,  with A(x) = -(1 - 2x + 2x^2)/2
    const double c4 = s11;
    const double c3 = -2 * s11 - s13.imag();
    const double c2 = 2 * s11 + s33 / 4 + s12.imag() + s13.imag();
    const double c1 = -s11 - s12.imag() - 0.5 * s13.imag() - 0.5 * s23.real();
    const double c0 = s11 / 4 + s22 / 4 + 0.5 * s12.imag();

    const auto f = [&](double x) {
        return (((c4 * x + c3) * x + c2) * x + c1) * x + c0;
    };

    const double scale = std::max({std::abs(c4), std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    if (scale < 1e-300 || (std::abs(c4) + std::abs(c3) + std::abs(c2) + std::abs(c1)) < 1e-13 * scale)
        return {0.5, true}; // objective does not depend on x

    std::vector<double> candidates{0.0, 1.0};
    for (double r : cubic_real_roots(4 * c4, 3 * c3, 2 * c2, c1))
        if (r > 0.0 && r < 1.0) candidates.push_back(r);

    double f_min = std::numeric_limits<double>::infinity();
    for (double x : candidates) f_min = std::min(f_min, f(x));
    const double tie_tol = 1e-12 * std::max(std::abs(f_min), scale);
    double best_x = std::numeric_limits<double>::quiet_NaN();
    for (double x : candidates) {
        if (f(x) > f_min + tie_tol) continue; // ties break toward 0.5
        if (std::isnan(best_x) || std::abs(x - 0.5) < std::abs(best_x - 0.5)) best_x = x;
    }
    return {best_x, false};
}

// ---------------------------------------------------------------- stepping

StepCircuits build_step_circuits(const Model& model, double dt, double x, bool native) {
    const int n_sys = model.n_sites();
    const int ancilla = n_sys;
    const int n_qubits = n_sys + 1;
    StepCircuits sc;
    sc.pre = trotter_step(model.H, x * dt, n_qubits);
    sc.post = trotter_step(model.H, (1.0 - x) * dt, n_qubits);
    sc.n_descriptors = static_cast<int>(model.lindblads.size());
    for (int i = 0; i < sc.n_descriptors; ++i) {
        const LindbladDescriptor& d = model.lindblads[std::size_t(i)];
        if (d.rate <= 0.0) continue;
        sc.jumps.push_back(jump_block(d, dt, ancilla, JumpBasis::up_is_zero));
        sc.jump_descriptor.push_back(i);
    }
    if (native) {
        sc.pre = lower_to_native(sc.pre);
        sc.post = lower_to_native(sc.post);
        for (Circuit& j : sc.jumps) j = lower_to_native(j);
    }
    return sc;
}

namespace {

void run_segment(const Circuit& c, QuantumState& state, CounterRng& rng,
                 const NoiseConfig* noise, std::span<int> slots = {}) {
    if (noise)
        noisy_execute(c, state, *noise, rng, slots);
    else
        execute_circuit(c, state, rng, slots);
}

} // namespace

void msse_step(QuantumState& state, const StepCircuits& circuits, CounterRng& rng,
               std::vector<std::pair<int, int>>& jump_log, const NoiseConfig* noise) {
    const int ancilla = state.n_qubits() - 1;
    if (state.probability_one(ancilla) > 1e-9)
        throw std::runtime_error("msse_step: ancilla not in |0> at entry");

    jump_log.clear();
    jump_log.reserve(std::size_t(circuits.n_descriptors));
    for (int i = 0; i < circuits.n_descriptors; ++i) jump_log.emplace_back(i, 0);

    run_segment(circuits.pre, state, rng, noise);
    std::array<int, 1> slot{0};
    for (std::size_t j = 0; j < circuits.jumps.size(); ++j) {
        slot[0] = 0;
        run_segment(circuits.jumps[j], state, rng, noise, slot);
        jump_log[std::size_t(circuits.jump_descriptor[j])].second = slot[0];
    }
    run_segment(circuits.post, state, rng, noise);
    state.normalize();
}

// ---------------------------------------------------------------- trajectories

namespace {

double estimate_from_counts(const std::map<std::string, std::uint64_t>& counts,
                            const OperatorSum& obs, int n_qubits) {
    // supported for sums of single-site diagonal terms (sigma_z / n)
    double acc = 0.0;
    std::uint64_t total = 0;
    for (const auto& [bits, count] : counts) total += count;
    if (total == 0) return 0.0;
    for (const auto& [bits, count] : counts) {
        double v = 0.0;
        for (const LocalTerm& t : obs.terms) {
            const int site = t.sites[0];
            const char ch = bits[std::size_t(n_qubits - 1 - site)];
            const std::size_t d = ch == '0' ? 0 : 3; // diagonal entry index
            v += (t.coefficient * t.matrix[d]).real();
        }
        acc += v * double(count);
    }
    return acc / double(total);
}

void record_observables(const Model& model, const TrajectoryConfig& cfg,
                        const QuantumState& state, CounterRng& rng,
                        std::vector<std::vector<double>>& out, std::size_t step_idx) {
    if (cfg.shots > 0) {
        const auto counts = state.sample_bitstrings(std::uint64_t(cfg.shots), rng);
        for (std::size_t o = 0; o < model.observables.size(); ++o)
            out[o][step_idx] = estimate_from_counts(counts, model.observables[o],
                                                    state.n_qubits());
    } else {
        for (std::size_t o = 0; o < model.observables.size(); ++o)
            out[o][step_idx] = expectation_sum(state, model.observables[o]);
    }
}

} // namespace

TrajectoryResult run_trajectory(const Model& model, const TrajectoryConfig& cfg,
                                int traj_index, double x_initial,
                                const NoiseConfig* noise) {
    cfg.validate(model);
    const int n_qubits = model.n_sites() + 1;
    QuantumState state(n_qubits); // fully up spins = all-zeros bitstring
    state.set_ancilla(n_qubits - 1);

    TrajectoryResult result;
    result.observables.assign(model.observables.size(),
                              std::vector<double>(std::size_t(cfg.n_steps) + 1, 0.0));
    result.jump_log.resize(std::size_t(cfg.n_steps));
    result.x_values.resize(std::size_t(cfg.n_steps), 0.0);

    {
        CounterRng rng0(cfg.master_seed, std::uint64_t(traj_index), 0);
        record_observables(model, cfg, state, rng0, result.observables, 0);
    }

    const bool native = noise != nullptr;
    std::optional<StepCircuits> fixed;
    if (cfg.x_schedule.mode != XSchedule::Mode::adaptive) {
        const double x = cfg.x_schedule.mode == XSchedule::Mode::constant
                             ? cfg.x_schedule.value
                             : x_initial;
        fixed.emplace(build_step_circuits(model, cfg.dt, x, native));
        std::fill(result.x_values.begin(), result.x_values.end(), x);
    }

    for (int k = 0; k < cfg.n_steps; ++k) {
        CounterRng rng(cfg.master_seed, std::uint64_t(traj_index), std::uint64_t(k) + 1);
        const StepCircuits* sc = fixed ? &*fixed : nullptr;
        StepCircuits adaptive_sc;
        if (!sc) {
            const double x = optimise_x(model.H, model.lindblads, state).x;
            result.x_values[std::size_t(k)] = x;
            adaptive_sc = build_step_circuits(model, cfg.dt, x, native);
            sc = &adaptive_sc;
        }
        msse_step(state, *sc, rng, result.jump_log[std::size_t(k)], noise);
        record_observables(model, cfg, state, rng, result.observables, std::size_t(k) + 1);
    }
    return result;
}

namespace {

double initial_x(const Model& model, const TrajectoryConfig& cfg, bool* degenerate) {
    if (cfg.x_schedule.mode == XSchedule::Mode::constant) {
        if (degenerate) *degenerate = false;
        return cfg.x_schedule.value;
    }
    QuantumState psi0(model.n_sites() + 1);
    const OptimiseXResult r = optimise_x(model.H, model.lindblads, psi0);
    if (degenerate) *degenerate = r.degenerate;
    return r.x;
}

} // namespace

EnsembleResult run_ensemble(const Model& model, const TrajectoryConfig& cfg,
                            const NoiseConfig* noise) {
    cfg.validate(model);
    bool degenerate = false;
    const double x0 = initial_x(model, cfg, &degenerate);

    const std::size_t n_obs = model.observables.size();
    const std::size_t n_times = std::size_t(cfg.n_steps) + 1;
    const std::size_t n_traj = std::size_t(cfg.n_traj);

    // per-trajectory storage, reduced in fixed order afterwards
    std::vector<std::vector<double>> traj_obs(n_traj);
    std::vector<std::vector<double>> traj_x(n_traj);

    std::atomic<int> next{0};
    const auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_traj) return;
            TrajectoryResult r = run_trajectory(model, cfg, i, x0, noise);
            std::vector<double> flat(n_obs * n_times);
            for (std::size_t o = 0; o < n_obs; ++o)
                std::copy(r.observables[o].begin(), r.observables[o].end(),
                          flat.begin() + long(o * n_times));
            traj_obs[std::size_t(i)] = std::move(flat);
            traj_x[std::size_t(i)] = std::move(r.x_values);
        }
    };

    int hw = int(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    const int n_threads = std::min(cfg.n_traj, cfg.n_threads > 0 ? cfg.n_threads : hw);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    EnsembleResult out;
    out.x_initial = x0;
    out.x_degenerate = degenerate;
    out.observable_names = model.observable_names;
    out.times.resize(n_times);
    for (std::size_t k = 0; k < n_times; ++k) out.times[k] = double(k) * cfg.dt;

    out.mean.assign(n_obs, std::vector<double>(n_times, 0.0));
    out.stderr_.assign(n_obs, std::vector<double>(n_times, 0.0));
    for (std::size_t o = 0; o < n_obs; ++o) {
        for (std::size_t k = 0; k < n_times; ++k) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < n_traj; ++i) {
                const double v = traj_obs[i][o * n_times + k];
                s += v;
                s2 += v * v;
            }
            const double mean = s / double(n_traj);
            out.mean[o][k] = mean;
            if (n_traj > 1) {
                const double var = std::max(0.0, (s2 - double(n_traj) * mean * mean) /
                                                     double(n_traj - 1));
                out.stderr_[o][k] = std::sqrt(var / double(n_traj));
            }
        }
    }

    out.x_mean.assign(std::size_t(cfg.n_steps), 0.0);
    out.x_stderr.assign(std::size_t(cfg.n_steps), 0.0);
    for (std::size_t k = 0; k < std::size_t(cfg.n_steps); ++k) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n_traj; ++i) {
            const double v = traj_x[i][k];
            s += v;
            s2 += v * v;
        }
        const double mean = s / double(n_traj);
        out.x_mean[k] = mean;
        if (n_traj > 1) {
            const double var =
                std::max(0.0, (s2 - double(n_traj) * mean * mean) / double(n_traj - 1));
            out.x_stderr[k] = std::sqrt(var / double(n_traj));
        }
    }
    return out;
}

std::vector<QuantumState> ensemble_states_at(const Model& model, const TrajectoryConfig& cfg,
                                             int capture_step, const NoiseConfig* noise) {
    cfg.validate(model);
    if (capture_step < 0 || capture_step > cfg.n_steps)
        throw std::invalid_argument("ensemble_states_at: capture_step out of range");
    bool degenerate = false;
    const double x0 = initial_x(model, cfg, &degenerate);

    const int n_sys = model.n_sites();
    std::vector<QuantumState> states(std::size_t(cfg.n_traj), QuantumState(n_sys));

    std::atomic<int> next{0};
    const auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_traj) return;
            QuantumState state(n_sys + 1);
            state.set_ancilla(n_sys);
            const bool native = noise != nullptr;
            std::optional<StepCircuits> fixed;
            if (cfg.x_schedule.mode != XSchedule::Mode::adaptive)
                fixed.emplace(build_step_circuits(
                    model, cfg.dt,
                    cfg.x_schedule.mode == XSchedule::Mode::constant ? cfg.x_schedule.value : x0,
                    native));
            std::vector<std::pair<int, int>> log;
            for (int k = 0; k < capture_step; ++k) {
                CounterRng rng(cfg.master_seed, std::uint64_t(i), std::uint64_t(k) + 1);
                StepCircuits adaptive_sc;
                const StepCircuits* sc = fixed ? &*fixed : nullptr;
                if (!sc) {
                    adaptive_sc = build_step_circuits(model, cfg.dt,
                                                      optimise_x(model.H, model.lindblads, state).x,
                                                      native);
                    sc = &adaptive_sc;
                }
                msse_step(state, *sc, rng, log, noise);
            }
            // ancilla is |0> at the boundary: keep the lower block
            std::vector<cplx> sys(state.amplitudes().begin(),
                                  state.amplitudes().begin() + (std::int64_t(1) << n_sys));
            states[std::size_t(i)] = QuantumState::from_amplitudes(n_sys, std::move(sys));
        }
    };

    int hw = int(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    const int n_threads = std::min(cfg.n_traj, cfg.n_threads > 0 ? cfg.n_threads : hw);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return states;
}

} // namespace oqs
