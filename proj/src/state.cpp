#include "oqs/state.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oqs {

namespace {
constexpr double kUnitaryTol = 1e-8;
constexpr int kRenormInterval = 100;
} // namespace

QuantumState::QuantumState(int n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits < 1 || n_qubits > 30)
        throw std::invalid_argument("QuantumState: n_qubits must be in [1, 30]");
    amps_.assign(std::uint64_t(1) << n_qubits, cplx(0.0, 0.0));
    amps_[0] = 1.0;
}

QuantumState QuantumState::basis_state(int n_qubits, std::uint64_t bits) {
    QuantumState s(n_qubits);
    if (bits >= s.dim())
        throw std::invalid_argument("basis_state: index out of range");
    s.amps_[0] = 0.0;
    s.amps_[bits] = 1.0;
    return s;
}

QuantumState QuantumState::from_amplitudes(int n_qubits, std::vector<cplx> amps) {
    QuantumState s(n_qubits);
    if (amps.size() != s.dim())
        throw std::invalid_argument("from_amplitudes: wrong length");
    s.amps_ = std::move(amps);
    double n2 = s.norm_sq();
    if (std::abs(n2 - 1.0) > 1e-6)
        throw std::invalid_argument("from_amplitudes: vector not normalised");
    s.normalize();
    return s;
}

void QuantumState::set_ancilla(int index) {
    check_qubit(index);
    ancilla_ = index;
}

double QuantumState::norm_sq() const {
    double n2 = 0.0;
    for (const cplx& a : amps_) n2 += std::norm(a);
    return n2;
}

void QuantumState::normalize() {
    double n = std::sqrt(norm_sq());
    if (n <= 0.0)
        throw std::runtime_error("QuantumState: zero-norm state");
    double inv = 1.0 / n;
    for (cplx& a : amps_) a *= inv;
    gates_since_renorm_ = 0;
}

void QuantumState::check_qubit(int qubit) const {
    if (qubit < 0 || qubit >= n_qubits_)
        throw std::invalid_argument("qubit index out of range");
}

void QuantumState::maybe_renormalize() {
    if (++gates_since_renorm_ >= kRenormInterval) normalize();
}

double unitary_deviation(const Mat2& u) {
    // u u^+ - I, max abs entry
    cplx a = u[0] * std::conj(u[0]) + u[1] * std::conj(u[1]) - 1.0;
    cplx b = u[0] * std::conj(u[2]) + u[1] * std::conj(u[3]);
    cplx c = u[2] * std::conj(u[0]) + u[3] * std::conj(u[1]);
    cplx d = u[2] * std::conj(u[2]) + u[3] * std::conj(u[3]) - 1.0;
    return std::max(std::max(std::abs(a), std::abs(b)),
                    std::max(std::abs(c), std::abs(d)));
}

void QuantumState::apply_one_qubit(int qubit, const Mat2& u) {
    check_qubit(qubit);
    if (unitary_deviation(u) > kUnitaryTol)
        throw std::invalid_argument("apply_one_qubit: matrix not unitary");
    const std::uint64_t step = std::uint64_t(1) << qubit;
    const std::uint64_t block = step << 1;
    const std::uint64_t n = amps_.size();
    for (std::uint64_t base = 0; base < n; base += block) {
        for (std::uint64_t off = 0; off < step; ++off) {
            const std::uint64_t i0 = base + off;
            const std::uint64_t i1 = i0 + step;
            const cplx a = amps_[i0], b = amps_[i1];
            amps_[i0] = u[0] * a + u[1] * b;
            amps_[i1] = u[2] * a + u[3] * b;
        }
    }
    maybe_renormalize();
}

void QuantumState::apply_controlled(std::span<const Control> controls, int target,
                                    const Mat2& u) {
    if (controls.empty() || controls.size() > 2)
        throw std::invalid_argument("apply_controlled: 1 or 2 controls supported");
    check_qubit(target);
    for (const Control& c : controls) {
        check_qubit(c.qubit);
        if (c.qubit == target)
            throw std::invalid_argument("apply_controlled: duplicate qubit operands");
        if (c.value != 0 && c.value != 1)
            throw std::invalid_argument("apply_controlled: polarity must be 0 or 1");
    }
    if (controls.size() == 2 && controls[0].qubit == controls[1].qubit)
        throw std::invalid_argument("apply_controlled: duplicate qubit operands");
    if (unitary_deviation(u) > kUnitaryTol)
        throw std::invalid_argument("apply_controlled: matrix not unitary");

    std::uint64_t ctrl_mask = 0, ctrl_want = 0;
    for (const Control& c : controls) {
        ctrl_mask |= std::uint64_t(1) << c.qubit;
        if (c.value) ctrl_want |= std::uint64_t(1) << c.qubit;
    }
    const std::uint64_t step = std::uint64_t(1) << target;
    const std::uint64_t block = step << 1;
    const std::uint64_t n = amps_.size();
    for (std::uint64_t base = 0; base < n; base += block) {
        for (std::uint64_t off = 0; off < step; ++off) {
            const std::uint64_t i0 = base + off;
            if ((i0 & ctrl_mask) != ctrl_want) continue;
            const std::uint64_t i1 = i0 + step;
            const cplx a = amps_[i0], b = amps_[i1];
            amps_[i0] = u[0] * a + u[1] * b;
            amps_[i1] = u[2] * a + u[3] * b;
        }
    }
    maybe_renormalize();
}

double QuantumState::probability_one(int qubit) const {
    const std::uint64_t mask = std::uint64_t(1) << qubit;
    double p1 = 0.0;
    for (std::uint64_t i = 0; i < amps_.size(); ++i)
        if (i & mask) p1 += std::norm(amps_[i]);
    return p1;
}

int QuantumState::measure_qubit(int qubit, CounterRng& rng) {
    check_qubit(qubit);
    double p1 = probability_one(qubit);
    if (p1 < -1e-9 || p1 > 1.0 + 1e-9)
        throw std::runtime_error("measure_qubit: corrupted state (p1 outside [0,1])");
    p1 = std::clamp(p1, 0.0, 1.0);
    const int outcome = rng.next_double() < p1 ? 1 : 0;
    const double keep = outcome ? p1 : 1.0 - p1;
    if (keep <= 0.0)
        throw std::runtime_error("measure_qubit: zero-probability branch selected");
    const double inv = 1.0 / std::sqrt(keep);
    const std::uint64_t mask = std::uint64_t(1) << qubit;
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        const bool one = (i & mask) != 0;
        if (one != static_cast<bool>(outcome))
            amps_[i] = 0.0;
        else
            amps_[i] *= inv;
    }
    gates_since_renorm_ = 0;
    return outcome;
}

void QuantumState::reset_qubit(int qubit, CounterRng& rng) {
    const int outcome = measure_qubit(qubit, rng);
    if (outcome == 1) {
        static const Mat2 x{cplx(0), cplx(1), cplx(1), cplx(0)};
        apply_one_qubit(qubit, x);
    }
}

std::map<std::string, std::uint64_t>
QuantumState::sample_bitstrings(std::uint64_t shots, CounterRng& rng) const {
    std::vector<double> cum(amps_.size());
    double acc = 0.0;
    for (std::uint64_t i = 0; i < amps_.size(); ++i) {
        acc += std::norm(amps_[i]);
        cum[i] = acc;
    }
    const double total = acc;
    std::map<std::string, std::uint64_t> counts;
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.next_double() * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        std::uint64_t idx = it == cum.end() ? amps_.size() - 1
                                            : std::uint64_t(it - cum.begin());
        std::string bits(n_qubits_, '0');
        for (int q = 0; q < n_qubits_; ++q)
            if (idx & (std::uint64_t(1) << q)) bits[n_qubits_ - 1 - q] = '1';
        ++counts[bits];
    }
    return counts;
}

void apply_k_site_matrix(std::span<cplx> vec, int n_qubits,
                         std::span<const int> sites,
                         std::span<const cplx> matrix) {
    const int k = static_cast<int>(sites.size());
    if (k < 1 || k > 3)
        throw std::invalid_argument("apply_k_site_matrix: 1..3 sites supported");
    const std::uint64_t d = std::uint64_t(1) << k;
    if (matrix.size() != d * d)
        throw std::invalid_argument("apply_k_site_matrix: matrix size mismatch");
    std::uint64_t site_mask = 0;
    for (int s : sites) {
        if (s < 0 || s >= n_qubits)
            throw std::invalid_argument("apply_k_site_matrix: site index out of range");
        site_mask |= std::uint64_t(1) << s;
    }

    const std::uint64_t n = vec.size();
    std::array<cplx, 8> in{}, out{};
    std::array<std::uint64_t, 8> idx{};
    for (std::uint64_t base = 0; base < n; ++base) {
        if (base & site_mask) continue; // enumerate local-zero representatives
        for (std::uint64_t loc = 0; loc < d; ++loc) {
            std::uint64_t i = base;
            for (int b = 0; b < k; ++b)
                if (loc & (std::uint64_t(1) << b)) i |= std::uint64_t(1) << sites[b];
            idx[loc] = i;
            in[loc] = vec[i];
        }
        for (std::uint64_t r = 0; r < d; ++r) {
            cplx acc = 0.0;
            for (std::uint64_t c = 0; c < d; ++c) acc += matrix[r * d + c] * in[c];
            out[r] = acc;
        }
        for (std::uint64_t loc = 0; loc < d; ++loc) vec[idx[loc]] = out[loc];
    }
}

} // namespace oqs
