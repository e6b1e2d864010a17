#include <cmath>
#include <stdexcept>

#include "oqs/engine.hpp"
#include "oqs/noise.hpp"

namespace oqs {

std::vector<std::pair<int, double>>
fidelity_vs_size(const ModelSpec& base, const TrajectoryConfig& cfg,
                 const NoiseConfig& noise, std::span<const int> n_list, double at_time) {
    noise.validate();
    const int capture_step = int(std::lround(at_time / cfg.dt));
    if (capture_step < 0 || capture_step > cfg.n_steps)
        throw std::invalid_argument("fidelity_vs_size: at_time outside the simulated range");

    std::vector<std::pair<int, double>> out;
    for (int n : n_list) {
        ModelSpec spec = base;
        spec.n_sites = n;
        const Model model = Model::make(spec);
        const auto ideal = ensemble_states_at(model, cfg, capture_step, nullptr);
        const auto noisy = ensemble_states_at(model, cfg, capture_step, &noise);
        const DensityMatrix rho_ideal = density_from_ensemble(ideal);
        const DensityMatrix rho_noisy = density_from_ensemble(noisy);
        out.emplace_back(n, fidelity(rho_noisy, rho_ideal));
    }
    return out;
}

} // namespace oqs
