#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dense_reference.hpp"
#include "oqs/rng.hpp"
#include "oqs/state.hpp"

using namespace oqs;

namespace {
const Mat2 kH{cplx(std::numbers::sqrt2 / 2), cplx(std::numbers::sqrt2 / 2),
              cplx(std::numbers::sqrt2 / 2), cplx(-std::numbers::sqrt2 / 2)};
const Mat2 kX{cplx(0), cplx(1), cplx(1), cplx(0)};
} // namespace

TEST_CASE("Hadamard on |0> gives the equal superposition") {
    QuantumState s(1);
    s.apply_one_qubit(0, kH);
    CHECK(std::abs(s.amplitude(0) - cplx(std::numbers::sqrt2 / 2)) < 1e-12);
    CHECK(std::abs(s.amplitude(1) - cplx(std::numbers::sqrt2 / 2)) < 1e-12);
}

TEST_CASE("X on qubit 1 of |00> gives |10> (bit order q1 q0)") {
    QuantumState s(2);
    s.apply_one_qubit(1, kX);
    CHECK(std::abs(s.amplitude(0b10) - cplx(1)) < 1e-12);
}

TEST_CASE("Ry matches the dense matrix-vector product") {
    const double theta = std::numbers::pi / 3;
    const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
    const Mat2 ry{cplx(c), cplx(-sn), cplx(sn), cplx(c)};
    QuantumState s = QuantumState::basis_state(1, 1);
    s.apply_one_qubit(0, ry);
    // dense oracle
    dense::Mat m = dense::mat2(ry);
    dense::Vec v(2); v << 0, 1;
    dense::Vec want = m * v;
    CHECK(std::abs(s.amplitude(0) - want[0]) < 1e-12);
    CHECK(std::abs(s.amplitude(1) - want[1]) < 1e-12);
}

TEST_CASE("non-unitary matrices are rejected") {
    QuantumState s(1);
    const Mat2 bad{cplx(1), cplx(0), cplx(0), cplx(0.5)};
    CHECK_THROWS_AS(s.apply_one_qubit(0, bad), std::invalid_argument);
    CHECK_THROWS_AS(s.apply_one_qubit(3, kX), std::invalid_argument);
}

TEST_CASE("CNOT and open-controlled X") {
    QuantumState s = QuantumState::basis_state(2, 0b10);
    const Control filled{1, 1};
    s.apply_controlled({&filled, 1}, 0, kX);
    CHECK(std::abs(s.amplitude(0b11) - cplx(1)) < 1e-12); // |10> -> |11>

    QuantumState t = QuantumState::basis_state(2, 0b10);
    const Control open{1, 0};
    t.apply_controlled({&open, 1}, 0, kX);
    CHECK(std::abs(t.amplitude(0b10) - cplx(1)) < 1e-12); // unchanged
}

TEST_CASE("CC-Ry on |110> against the dense 8x8 oracle") {
    const double theta = 0.83;
    const double c = std::cos(theta / 2), sn = std::sin(theta / 2);
    const Mat2 ry{cplx(c), cplx(-sn), cplx(sn), cplx(c)};
    QuantumState s = QuantumState::basis_state(3, 0b110);
    const std::array<Control, 2> ctls{Control{1, 1}, Control{2, 1}};
    s.apply_controlled(ctls, 0, ry);

    // dense: projector on q1=q2=1 tensored with ry on q0
    dense::Mat u = dense::identity(3);
    dense::Mat p1 = dense::Mat::Zero(2, 2); p1(1, 1) = 1;
    dense::Mat block = dense::kron(p1, dense::kron(p1, dense::mat2(ry)));
    dense::Mat rest = dense::identity(3) - dense::kron(p1, dense::kron(p1, dense::identity(1)));
    u = rest + block;
    dense::Vec v = dense::Vec::Zero(8); v[0b110] = 1;
    dense::Vec want = u * v;
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(s.amplitude(std::uint64_t(i)) - want[i]) < 1e-12);
}

TEST_CASE("duplicate control/target operands are rejected") {
    QuantumState s(2);
    const Control c{0, 1};
    CHECK_THROWS_AS(s.apply_controlled({&c, 1}, 0, kX), std::invalid_argument);
}

TEST_CASE("measurement statistics follow the Born rule") {
    CounterRng rng(42);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        QuantumState s(1);
        s.apply_one_qubit(0, kH);
        ones += s.measure_qubit(0, rng);
    }
    // p = 0.5, 4 sigma band
    const double sigma = std::sqrt(0.25 * n);
    CHECK(std::abs(ones - n / 2.0) < 4 * sigma);
}

TEST_CASE("measuring |1> always yields 1 and leaves |1>") {
    CounterRng rng(7);
    QuantumState s = QuantumState::basis_state(1, 1);
    CHECK(s.measure_qubit(0, rng) == 1);
    CHECK(std::abs(s.amplitude(1) - cplx(1)) < 1e-12);
}

TEST_CASE("skewed Born frequencies: p(1) = 0.2") {
    CounterRng rng(3);
    const int n = 20000;
    int ones = 0;
    std::vector<cplx> amps{std::sqrt(0.8), std::sqrt(0.2)};
    for (int i = 0; i < n; ++i) {
        QuantumState s = QuantumState::from_amplitudes(1, amps);
        ones += s.measure_qubit(0, rng);
    }
    const double sigma = std::sqrt(0.2 * 0.8 * n);
    CHECK(std::abs(ones - 0.2 * n) < 4 * sigma);
}

TEST_CASE("reset forces |0> from any state") {
    CounterRng rng(11);
    QuantumState s = QuantumState::basis_state(1, 1);
    s.reset_qubit(0, rng);
    CHECK(std::abs(s.amplitude(0) - cplx(1)) < 1e-12);

    for (int rep = 0; rep < 20; ++rep) {
        QuantumState t(1);
        t.apply_one_qubit(0, kH);
        t.reset_qubit(0, rng);
        CHECK(std::abs(t.amplitude(0) - cplx(1)) < 1e-12);
    }
}

TEST_CASE("reset of one half of a Bell pair matches the projector oracle") {
    CounterRng rng(5);
    int saw0 = 0, saw1 = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<cplx> bell{std::numbers::sqrt2 / 2, 0, 0, std::numbers::sqrt2 / 2};
        QuantumState s = QuantumState::from_amplitudes(2, bell);
        s.reset_qubit(0, rng);
        // outcome 0 branch: |00>; outcome 1 branch: |11> -> X on q0 -> |10>
        if (std::abs(s.amplitude(0b00)) > 0.5) ++saw0;
        if (std::abs(s.amplitude(0b10)) > 0.5) ++saw1;
        CHECK(std::abs(s.probability_one(0)) < 1e-12);
    }
    CHECK(saw0 + saw1 == 200);
    CHECK(saw0 > 50); // p = 1/2 each, 200 draws
    CHECK(saw1 > 50);
}

TEST_CASE("sample_bitstrings is multinomial with the right marginals") {
    CounterRng rng(9);
    QuantumState s(2);
    auto counts = s.sample_bitstrings(8192, rng);
    CHECK(counts.size() == 1);
    CHECK(counts.at("00") == 8192);

    QuantumState plus(1);
    plus.apply_one_qubit(0, kH);
    auto c2 = plus.sample_bitstrings(8192, rng);
    const double sigma = std::sqrt(8192 * 0.25);
    CHECK(std::abs(double(c2["0"]) - 4096) < 4 * sigma);

    // 3-qubit W state: each one-hot string at 1/3
    std::vector<cplx> w(8, 0.0);
    w[0b001] = w[0b010] = w[0b100] = 1.0 / std::sqrt(3.0);
    QuantumState ws = QuantumState::from_amplitudes(3, w);
    auto c3 = ws.sample_bitstrings(30000, rng);
    const double sw = std::sqrt(30000 * (1.0 / 3) * (2.0 / 3));
    CHECK(std::abs(double(c3["001"]) - 10000) < 4 * sw);
    CHECK(std::abs(double(c3["010"]) - 10000) < 4 * sw);
    CHECK(std::abs(double(c3["100"]) - 10000) < 4 * sw);
    std::uint64_t total = 0;
    for (auto& [k, v] : c3) total += v;
    CHECK(total == 30000);
}

TEST_CASE("norm is conserved across long unitary streams") {
    CounterRng rng(1);
    QuantumState s(4);
    const int gates = 2000;
    for (int i = 0; i < gates; ++i) {
        const double a = rng.next_double() * 6.28;
        const double c = std::cos(a / 2), sn = std::sin(a / 2);
        const Mat2 ry{cplx(c), cplx(-sn), cplx(sn), cplx(c)};
        s.apply_one_qubit(int(rng.next_below(4)), ry);
    }
    CHECK(std::abs(s.norm_sq() - 1.0) < 1e-9 * gates);
}

TEST_CASE("identical seeds give bit-identical trajectories") {
    const auto run = [] {
        CounterRng rng(1234, 7);
        QuantumState s(3);
        for (int i = 0; i < 50; ++i) {
            s.apply_one_qubit(int(rng.next_below(3)), kH);
            if (i % 7 == 3) s.measure_qubit(int(rng.next_below(3)), rng);
        }
        return std::vector<cplx>(s.amplitudes().begin(), s.amplitudes().end());
    };
    const auto a = run(), b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].real() == b[i].real());
        CHECK(a[i].imag() == b[i].imag());
    }
}
