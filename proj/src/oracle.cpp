#include "oqs/oracle.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace oqs {

namespace {

// rho <- (coeff * little on sites) rho : little matrix applied to every column
void left_apply_term(const LocalTerm& t, Eigen::MatrixXcd& rho, int n_qubits) {
    const Eigen::Index d = rho.rows();
    for (Eigen::Index j = 0; j < d; ++j) {
        std::span<cplx> col(rho.col(j).data(), std::size_t(d));
        apply_k_site_matrix(col, n_qubits, t.sites, t.matrix);
    }
    if (t.coefficient != cplx(1.0)) rho *= t.coefficient;
}

// rho <- rho (coeff * little on sites) : mixes columns, (rho A)[:,j] = sum_k rho[:,k] A[k,j]
void right_apply_term(const LocalTerm& t, Eigen::MatrixXcd& rho, int /*n_qubits*/) {
    const int k = t.n_sites();
    const Eigen::Index d = rho.rows();
    const std::uint64_t dloc = std::uint64_t(1) << k;
    std::uint64_t site_mask = 0;
    for (int s : t.sites) site_mask |= std::uint64_t(1) << s;

    std::vector<Eigen::VectorXcd> cols(dloc, Eigen::VectorXcd(d));
    std::array<std::uint64_t, 8> idx{};
    for (std::uint64_t base = 0; base < std::uint64_t(d); ++base) {
        if (base & site_mask) continue;
        for (std::uint64_t loc = 0; loc < dloc; ++loc) {
            std::uint64_t i = base;
            for (int b = 0; b < k; ++b)
                if (loc & (std::uint64_t(1) << b)) i |= std::uint64_t(1) << t.sites[std::size_t(b)];
            idx[loc] = i;
            cols[loc] = rho.col(Eigen::Index(i));
        }
        for (std::uint64_t j = 0; j < dloc; ++j) {
            Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
            for (std::uint64_t kk = 0; kk < dloc; ++kk)
                acc.noalias() += t.matrix[std::size_t(kk * dloc + j)] * cols[kk];
            rho.col(Eigen::Index(idx[j])) = acc;
        }
    }
    if (t.coefficient != cplx(1.0)) rho *= t.coefficient;
}

LocalTerm adjoint_term(const LocalTerm& t) {
    LocalTerm a = t;
    const std::size_t d = std::size_t(1) << t.sites.size();
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c)
            a.matrix[r * d + c] = std::conj(t.matrix[c * d + r]);
    a.coefficient = std::conj(t.coefficient);
    return a;
}

} // namespace

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const OperatorSum& H,
                              std::span<const LindbladDescriptor> Ls) {
    const Eigen::Index d = rho.rows();
    const int n_qubits = int(std::round(std::log2(double(d))));
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
    Eigen::MatrixXcd tmp(d, d);

    const cplx minus_i(0.0, -1.0);
    for (const LocalTerm& t : H.terms) {
        tmp = rho;
        left_apply_term(t, tmp, n_qubits);
        out += minus_i * tmp; // -i H rho
        tmp = rho;
        right_apply_term(t, tmp, n_qubits);
        out -= minus_i * tmp; // +i rho H
    }
    for (const LindbladDescriptor& ld : Ls) {
        if (ld.rate == 0.0) continue;
        tmp = rho;
        left_apply_term(ld.L, tmp, n_qubits);
        right_apply_term(adjoint_term(ld.L), tmp, n_qubits);
        out += tmp; // L rho L^+
        tmp = rho;
        left_apply_term(ld.LdagL, tmp, n_qubits);
        out -= 0.5 * tmp;
        tmp = rho;
        right_apply_term(ld.LdagL, tmp, n_qubits);
        out -= 0.5 * tmp;
    }
    return out;
}

namespace {

struct Rk4Run {
    std::vector<std::vector<double>> values;
    std::vector<DensityMatrix> snapshots;
};

Rk4Run rk4_integrate(const Model& model, const DensityMatrix& rho0, double record_dt,
                     int n_records, double h_target, bool keep_snapshots) {
    const int n_qubits = rho0.n_qubits();
    if (n_qubits > 10)
        throw std::invalid_argument("integrate_lindblad: limited to 10 qubits");
    const int substeps = std::max(1, int(std::ceil(record_dt / h_target - 1e-12)));
    const double h = record_dt / substeps;

    Eigen::MatrixXcd rho = rho0.matrix();
    const Eigen::Index d = rho.rows();

    // observables as dense diagonals/matrices for cheap evaluation
    std::vector<Eigen::MatrixXcd> obs;
    for (const OperatorSum& o : model.observables) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
        for (const LocalTerm& t : o.terms) {
            Eigen::MatrixXcd e = Eigen::MatrixXcd::Identity(d, d);
            left_apply_term(t, e, n_qubits);
            m += e;
        }
        obs.push_back(std::move(m));
    }

    Rk4Run run;
    run.values.assign(obs.size(), std::vector<double>(std::size_t(n_records) + 1, 0.0));
    const auto record = [&](int rec) {
        for (std::size_t o = 0; o < obs.size(); ++o)
            run.values[o][std::size_t(rec)] = (obs[o] * rho).trace().real();
        if (keep_snapshots) run.snapshots.emplace_back(n_qubits, rho);
        const double tr = rho.trace().real();
        if (std::abs(tr - 1.0) > 1e-8)
            throw std::runtime_error("integrate_lindblad: trace drifted to " + std::to_string(tr));
        double min_diag = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) min_diag = std::min(min_diag, rho(i, i).real());
        if (min_diag < -1e-6)
            throw std::runtime_error("integrate_lindblad: positivity violation, diagonal " +
                                     std::to_string(min_diag));
    };

    record(0);
    Eigen::MatrixXcd k1, k2, k3, k4;
    for (int rec = 1; rec <= n_records; ++rec) {
        for (int s = 0; s < substeps; ++s) {
            k1 = lindblad_rhs(rho, model.H, model.lindblads);
            k2 = lindblad_rhs(rho + 0.5 * h * k1, model.H, model.lindblads);
            k3 = lindblad_rhs(rho + 0.5 * h * k2, model.H, model.lindblads);
            k4 = lindblad_rhs(rho + h * k3, model.H, model.lindblads);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            rho = 0.5 * (rho + rho.adjoint()).eval(); // keep Hermitian
        }
        record(rec);
    }
    return run;
}

} // namespace

LindbladIntegration integrate_lindblad(const Model& model, const DensityMatrix& rho0,
                                       double record_dt, int n_records, double h_target,
                                       bool keep_snapshots, bool estimate_error) {
    if (record_dt <= 0 || h_target <= 0)
        throw std::invalid_argument("integrate_lindblad: positive steps required");
    if (n_records < 0)
        throw std::invalid_argument("integrate_lindblad: n_records >= 0 required");

    LindbladIntegration out;
    out.observable_names = model.observable_names;
    out.times.resize(std::size_t(n_records) + 1);
    for (int k = 0; k <= n_records; ++k) out.times[std::size_t(k)] = k * record_dt;

    Rk4Run run = rk4_integrate(model, rho0, record_dt, n_records, h_target, keep_snapshots);
    out.values = run.values;
    out.snapshots = std::move(run.snapshots);

    if (estimate_error) {
        Rk4Run half = rk4_integrate(model, rho0, record_dt, n_records, h_target / 2, false);
        double worst = 0.0;
        for (std::size_t o = 0; o < run.values.size(); ++o)
            for (std::size_t k = 0; k < run.values[o].size(); ++k)
                worst = std::max(worst, std::abs(run.values[o][k] - half.values[o][k]));
        out.step_halving_error = worst;
    }
    return out;
}

// ---------------------------------------------------------------- jump MC

EnsembleResult jump_monte_carlo(const Model& model, const TrajectoryConfig& cfg) {
    cfg.validate(model);
    const int n = model.n_sites();
    const std::size_t n_obs = model.observables.size();
    const std::size_t n_times = std::size_t(cfg.n_steps) + 1;
    const std::size_t n_traj = std::size_t(cfg.n_traj);

    static std::atomic<bool> warned{false};

    std::vector<std::vector<double>> traj_obs(n_traj);

    const OperatorSum LdagL_sum = sum_LdagL(model.lindblads);

    std::atomic<int> next{0};
    const auto worker = [&] {
        std::vector<cplx> h_psi(std::size_t(1) << n), d_psi(std::size_t(1) << n);
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_traj) return;
            QuantumState state(n);
            std::vector<double> flat(n_obs * n_times);
            for (std::size_t o = 0; o < n_obs; ++o)
                flat[o * n_times] = expectation_sum(state, model.observables[std::size_t(o)]);

            for (int k = 0; k < cfg.n_steps; ++k) {
                CounterRng rng(cfg.master_seed, std::uint64_t(i), std::uint64_t(k) + 1);
                // per-descriptor jump probabilities <L^+L> dt
                double total = 0.0;
                std::vector<double> probs(model.lindblads.size(), 0.0);
                for (std::size_t l = 0; l < model.lindblads.size(); ++l) {
                    const LindbladDescriptor& ld = model.lindblads[l];
                    if (ld.rate == 0.0) continue;
                    probs[l] = expectation_local(state, ld.LdagL) * cfg.dt;
                    total += probs[l];
                }
                if (total > 0.1 && !warned.exchange(true))
                    std::fprintf(stderr,
                                 "jump_monte_carlo: sum <L^+L> dt = %.3f exceeds 0.1; "
                                 "first-order validity is marginal\n",
                                 total);
                const double u = rng.next_double();
                if (u < total) {
                    // pick l proportionally, apply L_l and renormalise
                    double acc = 0.0;
                    std::size_t pick = model.lindblads.size() - 1;
                    for (std::size_t l = 0; l < probs.size(); ++l) {
                        acc += probs[l];
                        if (u < acc) { pick = l; break; }
                    }
                    std::vector<cplx> jumped = apply_term(model.lindblads[pick].L,
                                                          state.amplitudes(), n);
                    double norm2 = 0.0;
                    for (const cplx& a : jumped) norm2 += std::norm(a);
                    const double inv = 1.0 / std::sqrt(norm2);
                    for (cplx& a : jumped) a *= inv;
                    state = QuantumState::from_amplitudes(n, std::move(jumped));
                } else {
                    // (1 - i H dt - 1/2 sum L^+L dt) |psi>, renormalised
                    apply_sum_into(model.H, state.amplitudes(), h_psi, n);
                    apply_sum_into(LdagL_sum, state.amplitudes(), d_psi, n);
                    std::vector<cplx> drift(state.amplitudes().begin(), state.amplitudes().end());
                    const cplx mi(0.0, -1.0);
                    for (std::size_t a = 0; a < drift.size(); ++a)
                        drift[a] += cfg.dt * (mi * h_psi[a] - 0.5 * d_psi[a]);
                    double norm2 = 0.0;
                    for (const cplx& a : drift) norm2 += std::norm(a);
                    const double inv = 1.0 / std::sqrt(norm2);
                    for (cplx& a : drift) a *= inv;
                    state = QuantumState::from_amplitudes(n, std::move(drift));
                }
                for (std::size_t o = 0; o < n_obs; ++o)
                    flat[o * n_times + std::size_t(k) + 1] =
                        expectation_sum(state, model.observables[o]);
            }
            traj_obs[std::size_t(i)] = std::move(flat);
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

    EnsembleResult out;
    out.observable_names = model.observable_names;
    out.times.resize(n_times);
    for (std::size_t k = 0; k < n_times; ++k) out.times[k] = double(k) * cfg.dt;
    out.mean.assign(n_obs, std::vector<double>(n_times, 0.0));
    out.stderr_.assign(n_obs, std::vector<double>(n_times, 0.0));
    for (std::size_t o = 0; o < n_obs; ++o)
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
                const double var =
                    std::max(0.0, (s2 - double(n_traj) * mean * mean) / double(n_traj - 1));
                out.stderr_[o][k] = std::sqrt(var / double(n_traj));
            }
        }
    return out;
}

} // namespace oqs
