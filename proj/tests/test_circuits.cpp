#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dense_reference.hpp"
#include "oqs/circuits.hpp"

using namespace oqs;

namespace {

dense::Mat expm_of_term(const LocalTerm& t, double tau, int n_qubits) {
    dense::Mat m = dense::term_matrix(t, n_qubits);
    return (cplx(0, -tau) * m).exp();
}

LocalTerm term_2site(std::vector<int> sites, const Mat2& bit1, const Mat2& bit0,
                     cplx coeff, const char* label) {
    return make_term(std::move(sites), two_site_matrix(bit1, bit0), coeff, label);
}

} // namespace

TEST_CASE("circuit counts stay consistent with recount") {
    Circuit c(3);
    c.push(Gate::h(0));
    c.push(Gate::cnot(0, 1));
    c.push(Gate::ccry(0, 1, 1, 0, 2, 0.3));
    c.push(Gate::measure(2, 0));
    CHECK(c.counts == c.recount());
    Circuit low = lower_to_native(c);
    CHECK(low.counts == low.recount());
    CHECK(low.is_native());
}

TEST_CASE("empty circuit unitary is the identity; single CNOT is the permutation") {
    Circuit empty(2);
    CHECK(dense::phase_distance(dense::circuit_matrix(empty), dense::identity(2)) < 1e-15);

    Circuit cn(2);
    cn.push(Gate::cnot(0, 1)); // control q0, target q1
    dense::Mat want(4, 4);
    want << 1, 0, 0, 0,
            0, 0, 0, 1,
            0, 0, 1, 0,
            0, 1, 0, 0;
    CHECK((dense::circuit_matrix(cn) - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("circuit_unitary agrees with statevector execution on a random circuit") {
    Circuit c(3);
    c.push(Gate::h(0));
    c.push(Gate::rx(1, 0.7));
    c.push(Gate::cnot(0, 2));
    c.push(Gate::cry(2, 0, 1, 1.1));
    c.push(Gate::rz(2, -0.4));
    c.push(Gate::ccry(0, 1, 2, 0, 1, 0.9));
    c.push(Gate::s(1));

    dense::Vec psi = dense::random_state(3, 77);
    QuantumState s = dense::to_state(psi, 3);
    CounterRng rng(1);
    execute_circuit(c, s, rng);
    dense::Vec want = dense::circuit_matrix(c) * psi;
    for (int i = 0; i < 8; ++i)
        CHECK(std::abs(s.amplitude(std::uint64_t(i)) - want[i]) < 1e-11);
}

TEST_CASE("one-qubit exponential: axis fast paths and the general ZYZ route") {
    for (auto [m, label] : {std::pair{pauli_x(), "x"}, {pauli_y(), "y"}, {pauli_z(), "z"},
                            {number_op(), "n"}}) {
        LocalTerm t = make_term({0}, one_site_matrix(m), 0.83, label);
        Circuit c = one_qubit_exponential(t, 0.37, 1);
        CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(t, 0.37, 1)) < 1e-10);
    }
    // general Hermitian
    std::vector<cplx> h{cplx(0.3), cplx(0.2, -0.4), cplx(0.2, 0.4), cplx(-1.1)};
    LocalTerm t = make_term({0}, h, 1.0, "h");
    Circuit c = one_qubit_exponential(t, 0.52, 1);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(t, 0.52, 1)) < 1e-10);
}

TEST_CASE("z(x)z synthesis is exact and periodic") {
    LocalTerm zz = term_2site({0, 1}, pauli_z(), pauli_z(), -1.0, "zz");
    for (double tau : {0.01, 0.3, 1.7}) {
        Circuit c = synthesize_two_qubit_exponential(zz, tau, 2);
        CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(zz, tau, 2)) < 1e-10);
    }
    // angle 2*pi returns to the identity up to phase
    LocalTerm zz1 = term_2site({0, 1}, pauli_z(), pauli_z(), 1.0, "zz");
    Circuit c = synthesize_two_qubit_exponential(zz1, std::numbers::pi, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), dense::identity(2)) < 1e-10);
}

TEST_CASE("n(x)x synthesis is a controlled rotation: omega*tau = 0.5 gives CRx(1.0)") {
    LocalTerm nx = term_2site({0, 1}, pauli_x(), number_op(), 1.0, "n⊗x"); // n on q0, x on q1
    Circuit c = synthesize_two_qubit_exponential(nx, 0.5, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(nx, 0.5, 2)) < 1e-10);
    // the CRy it carries has angle 1.0 = 2 * omega * tau
    bool found = false;
    for (const Gate& g : c.gates)
        if (g.kind == GateKind::CRy) {
            found = true;
            CHECK(g.angle == doctest::Approx(1.0));
            CHECK(g.polarity[0] == 0); // n = |0><0| under the spin convention
        }
    CHECK(found);
}

TEST_CASE("n(x)x with n on the high site and negative coefficients") {
    LocalTerm xn = term_2site({0, 1}, number_op(), pauli_x(), -0.8, "x⊗n");
    for (double tau : {0.1, 0.9}) {
        Circuit c = synthesize_two_qubit_exponential(xn, tau, 2);
        CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(xn, tau, 2)) < 1e-10);
    }
}

TEST_CASE("projector(x)z and projector(x)y route through the axis conjugations") {
    LocalTerm nz = term_2site({0, 1}, pauli_z(), number_op(), 0.6, "n⊗z");
    Circuit cz = synthesize_two_qubit_exponential(nz, 0.4, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(cz), expm_of_term(nz, 0.4, 2)) < 1e-10);
    LocalTerm ny = term_2site({0, 1}, pauli_y(), number_op(), 0.6, "n⊗y");
    Circuit cy = synthesize_two_qubit_exponential(ny, 0.4, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(cy), expm_of_term(ny, 0.4, 2)) < 1e-10);
}

TEST_CASE("magic-basis route: exp(-i w dt (ZX + XZ)) matches the dense exponential") {
    std::vector<cplx> zxxz(16, 0.0);
    {
        const auto zx = two_site_matrix(pauli_z(), pauli_x()); // z on bit1, x on bit0
        const auto xz = two_site_matrix(pauli_x(), pauli_z());
        for (int i = 0; i < 16; ++i) zxxz[std::size_t(i)] = zx[std::size_t(i)] + xz[std::size_t(i)];
    }
    LocalTerm t = make_term({0, 1}, zxxz, 1.0, "zx+xz");
    const double wdt = 0.3;
    Circuit c = synthesize_two_qubit_exponential(t, wdt, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(t, wdt, 2)) < 1e-10);
    // the paper's simplified shape: 2 CNOTs, one Rz, one Rx, Hadamard conjugation
    CHECK(c.recount()[2] == 2);
}

TEST_CASE("magic-basis route: ZZ + XX with unequal weights") {
    std::vector<cplx> m(16, 0.0);
    const auto zz = two_site_matrix(pauli_z(), pauli_z());
    const auto xx = two_site_matrix(pauli_x(), pauli_x());
    for (int i = 0; i < 16; ++i)
        m[std::size_t(i)] = 0.7 * zz[std::size_t(i)] - 0.2 * xx[std::size_t(i)];
    LocalTerm t = make_term({0, 1}, m, 1.0, "zz+xx");
    Circuit c = synthesize_two_qubit_exponential(t, 0.45, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(t, 0.45, 2)) < 1e-10);
}

TEST_CASE("magic-basis route: XY + YX (generic commuting pair)") {
    std::vector<cplx> m(16, 0.0);
    const auto xy = two_site_matrix(pauli_x(), pauli_y());
    const auto yx = two_site_matrix(pauli_y(), pauli_x());
    for (int i = 0; i < 16; ++i)
        m[std::size_t(i)] = 0.5 * xy[std::size_t(i)] + 0.3 * yx[std::size_t(i)];
    LocalTerm t = make_term({0, 1}, m, 1.0, "xy+yx");
    Circuit c = synthesize_two_qubit_exponential(t, 0.6, 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(c), expm_of_term(t, 0.6, 2)) < 1e-10);
}

TEST_CASE("unsupported term classes are rejected by name") {
    // ZX + XZ + YY is three strings
    std::vector<cplx> m(16, 0.0);
    const auto zx = two_site_matrix(pauli_z(), pauli_x());
    const auto xz = two_site_matrix(pauli_x(), pauli_z());
    const auto yy = two_site_matrix(pauli_y(), pauli_y());
    for (int i = 0; i < 16; ++i)
        m[std::size_t(i)] = zx[std::size_t(i)] + xz[std::size_t(i)] + yy[std::size_t(i)];
    LocalTerm t = make_term({0, 1}, m, 1.0, "threeway");
    CHECK_THROWS_WITH_AS(synthesize_two_qubit_exponential(t, 0.1, 2),
                         doctest::Contains("threeway"), std::invalid_argument);

    // anticommuting pair ZX + XX
    std::vector<cplx> m2(16, 0.0);
    const auto xx = two_site_matrix(pauli_x(), pauli_x());
    for (int i = 0; i < 16; ++i) m2[std::size_t(i)] = zx[std::size_t(i)] + xx[std::size_t(i)];
    LocalTerm t2 = make_term({0, 1}, m2, 1.0, "anticommuting");
    CHECK_THROWS_AS(synthesize_two_qubit_exponential(t2, 0.1, 2), std::invalid_argument);
}

TEST_CASE("trotter_step: single-term H is exact") {
    auto [H, Ls] = build_dti(2, 1.0, 0.0, 0.0); // one zz bond only
    OperatorSum single;
    single.terms.push_back(H.terms[0]);
    Circuit c = trotter_step(single, 0.9, 2);
    dense::Mat want = (cplx(0, -0.9) * dense::sum_matrix(single, 2)).exp();
    CHECK(dense::phase_distance(dense::circuit_matrix(c), want) < 1e-10);
}

TEST_CASE("trotter_step rejects 3-site terms") {
    OperatorSum H;
    std::vector<cplx> m(64, 0.0);
    for (int i = 0; i < 8; ++i) m[std::size_t(i * 8 + i)] = 1.0;
    H.terms.push_back(make_term({0, 1, 2}, m, 1.0, "three"));
    CHECK_THROWS_AS(trotter_step(H, 0.1, 3), std::invalid_argument);
}

TEST_CASE("trotter_step error is third order on DTI N=4") {
    auto [H, Ls] = build_dti(4, 1.0, 1.0, 0.5);
    dense::Mat Hm = dense::sum_matrix(H, 4);
    std::vector<double> taus{0.04, 0.02, 0.01};
    std::vector<double> errs;
    for (double tau : taus) {
        Circuit c = trotter_step(H, tau, 4);
        dense::Mat diff = dense::circuit_matrix(c) - (cplx(0, -tau) * Hm).exp();
        // operator 2-norm via largest singular value
        Eigen::JacobiSVD<dense::Mat> svd(diff);
        errs.push_back(svd.singularValues()[0]);
    }
    // log-log slope over the three points
    const double slope =
        std::log(errs[0] / errs[2]) / std::log(taus[0] / taus[2]);
    CHECK(slope >= 2.7);
    // and c*tau^3 bounds with the fitted constant
    const double cfit = errs[2] / std::pow(taus[2], 3);
    for (std::size_t i = 0; i < taus.size(); ++i)
        CHECK(errs[i] <= 1.5 * cfit * std::pow(taus[i], 3));
}

TEST_CASE("trotter_step on QCP N=3: error ratio ~ 8 when tau doubles") {
    auto [H, Ls] = build_qcp(3, 6.0, 0.0, 1.0);
    dense::Mat Hm = dense::sum_matrix(H, 3);
    double e1, e2;
    {
        Circuit c = trotter_step(H, 0.01, 3);
        e1 = (dense::circuit_matrix(c) - (cplx(0, -0.01) * Hm).exp()).norm();
    }
    {
        Circuit c = trotter_step(H, 0.02, 3);
        e2 = (dense::circuit_matrix(c) - (cplx(0, -0.02) * Hm).exp()).norm();
    }
    CHECK(e2 / e1 == doctest::Approx(8.0).epsilon(0.25));
}

TEST_CASE("jump_block angles: rate*dt = 1/4 gives theta = pi/3") {
    auto [H, Ls] = build_dti(1, 0, 0, 0.5);
    Circuit c = jump_block(Ls[0], 0.5, 1);
    REQUIRE(c.gates.size() == 4);
    CHECK(c.gates[0].kind == GateKind::CRy);
    CHECK(c.gates[0].angle == doctest::Approx(std::numbers::pi / 3));
    CHECK(c.gates[1].kind == GateKind::CNOT);
    CHECK(c.gates[2].kind == GateKind::Measure);
    CHECK(c.gates[3].kind == GateKind::Reset);
}

TEST_CASE("jump_block rejects rate*dt > 1 with guidance") {
    auto [H, Ls] = build_dti(1, 0, 0, 3.0);
    CHECK_THROWS_WITH_AS(jump_block(Ls[0], 0.5, 1), doctest::Contains("shrink"),
                         std::invalid_argument);
}

TEST_CASE("decay block reproduces the pre-measurement state of the source circuit") {
    // paper basis: (a0|0> + a1|1>) (x) |0>  ->
    //   [a0|0> + a1 cos(theta/2)|1>] (x) |0> + a1 sin(theta/2)|0> (x) |1>
    auto [H, Ls] = build_dti(1, 0, 0, 0.4);
    const double dt = 0.6;
    const double theta = 2 * std::asin(std::sqrt(0.4 * dt));
    Circuit block = jump_block(Ls[0], dt, 1);
    Circuit pre(2); // gates before the dotted line only
    pre.push(block.gates[0]);
    pre.push(block.gates[1]);

    const cplx a0(0.6, 0.2), a1(0.3, -0.7);
    const double norm = std::sqrt(std::norm(a0) + std::norm(a1));
    dense::Vec psi = dense::Vec::Zero(4);
    psi[0b00] = a0 / norm;
    psi[0b01] = a1 / norm; // system is qubit 0, ancilla qubit 1
    dense::Vec got = dense::circuit_matrix(pre) * psi;

    dense::Vec want = dense::Vec::Zero(4);
    want[0b00] = a0 / norm;
    want[0b01] = a1 / norm * std::cos(theta / 2);
    want[0b10] = a1 / norm * std::sin(theta / 2); // |0> (x) |1>: ancilla excited, system dropped to |0>
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coagulation block maps all four basis states as the source circuit") {
    // paper basis: filled controls on m and l; |11> component rotates, CNOT drops l
    auto [H, Ls] = build_qcp(2, 0.0, 0.9, 0.0);
    const LindbladDescriptor* coag = nullptr;
    for (const auto& d : Ls)
        if (d.kind == LindbladKind::coagulation && d.sites == std::vector<int>{0, 1}) coag = &d;
    REQUIRE(coag != nullptr);
    const double dt = 0.5;
    const double theta = 2 * std::asin(std::sqrt(0.9 * dt));
    Circuit block = jump_block(*coag, dt, 2);
    Circuit pre(3);
    pre.push(block.gates[0]);
    pre.push(block.gates[1]);

    dense::Vec psi = dense::Vec::Zero(8);
    const cplx a00(0.1, 0.2), a01(0.3, -0.1), a10(-0.4, 0.2), a11(0.5, 0.5);
    const double nn = std::sqrt(std::norm(a00) + std::norm(a01) + std::norm(a10) + std::norm(a11));
    // bit order: ancilla q2, l = q1, m = q0; paper writes |m l>
    psi[0b000] = a00 / nn; psi[0b010] = a01 / nn; psi[0b001] = a10 / nn; psi[0b011] = a11 / nn;
    dense::Vec got = dense::circuit_matrix(pre) * psi;

    dense::Vec want = dense::Vec::Zero(8);
    want[0b000] = a00 / nn;
    want[0b010] = a01 / nn;
    want[0b001] = a10 / nn;
    want[0b011] = a11 / nn * std::cos(theta / 2);
    want[0b101] = a11 / nn * std::sin(theta / 2); // |10> (x) |1>: l flipped down
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("branching block: jumped branch activates l, consistent with L sqrt(dt)|psi>") {
    auto [H, Ls] = build_qcp(2, 0.0, 0.9, 0.0);
    const LindbladDescriptor* branch = nullptr;
    for (const auto& d : Ls)
        if (d.kind == LindbladKind::branching && d.sites == std::vector<int>{0, 1}) branch = &d;
    REQUIRE(branch != nullptr);
    const double dt = 0.5;
    const double theta = 2 * std::asin(std::sqrt(0.9 * dt));
    Circuit block = jump_block(*branch, dt, 2);
    Circuit pre(3);
    pre.push(block.gates[0]);
    pre.push(block.gates[1]);

    dense::Vec psi = dense::Vec::Zero(8);
    const cplx a10(0.8, 0.0), a00(0.6, 0.0);
    psi[0b001] = a10; psi[0b000] = a00; // m=1,l=0 and m=0,l=0 in paper bit values
    dense::Vec got = dense::circuit_matrix(pre) * psi;

    dense::Vec want = dense::Vec::Zero(8);
    want[0b000] = a00;
    want[0b001] = a10 * std::cos(theta / 2);
    want[0b111] = a10 * std::sin(theta / 2); // |11> (x) |1>: l activated by the corrective CNOT
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spin-adapted jump blocks flip the system-side control polarities") {
    auto [H, Ls] = build_qcp(2, 0.0, 0.9, 0.3);
    for (const auto& d : Ls) {
        Circuit paper = jump_block(d, 0.5, 2, JumpBasis::paper_occupied_one);
        Circuit sim = jump_block(d, 0.5, 2, JumpBasis::up_is_zero);
        REQUIRE(paper.gates.size() == sim.gates.size());
        for (std::size_t i = 0; i < paper.gates.size(); ++i) {
            const Gate& a = paper.gates[i];
            const Gate& b = sim.gates[i];
            CHECK(a.kind == b.kind);
            if (a.kind == GateKind::CRy) CHECK(int(a.polarity[0]) == 1 - int(b.polarity[0]));
            if (a.kind == GateKind::CCRy) {
                CHECK(int(a.polarity[0]) == 1 - int(b.polarity[0]));
                CHECK(int(a.polarity[1]) == 1 - int(b.polarity[1]));
            }
        }
    }
}

TEST_CASE("lowering: CRy becomes 2 CNOTs + 2 Ry and stays unitary-equivalent") {
    Circuit c(2);
    c.push(Gate::cry(0, 1, 1, 0.77));
    Circuit low = lower_to_native(c);
    CHECK(low.recount()[2] == 2);
    CHECK(low.recount()[1] == 2);
    CHECK(dense::phase_distance(dense::circuit_matrix(low), dense::circuit_matrix(c)) < 1e-10);

    // open control wraps with X
    Circuit o(2);
    o.push(Gate::cry(0, 0, 1, 0.77));
    Circuit lo = lower_to_native(o);
    CHECK(dense::phase_distance(dense::circuit_matrix(lo), dense::circuit_matrix(o)) < 1e-10);
}

TEST_CASE("lowering is the identity on native circuits") {
    Circuit c(2);
    c.push(Gate::h(0));
    c.push(Gate::cnot(0, 1));
    c.push(Gate::rz(1, 0.2));
    Circuit low = lower_to_native(c);
    CHECK(low.gates.size() == c.gates.size());
    CHECK(low.counts == c.counts);
}

TEST_CASE("lowering CCRy: unitary-equivalent for every polarity pattern") {
    for (int p0 = 0; p0 < 2; ++p0)
        for (int p1 = 0; p1 < 2; ++p1) {
            Circuit c(3);
            c.push(Gate::ccry(0, p0, 1, p1, 2, 0.91));
            Circuit low = lower_to_native(c);
            CHECK(low.is_native());
            CHECK(dense::phase_distance(dense::circuit_matrix(low), dense::circuit_matrix(c)) <
                  1e-10);
        }
}

TEST_CASE("lowered step segments preserve measurement targets and slots") {
    auto [H, Ls] = build_dti(2, 1, 1, 0.5);
    Circuit block = jump_block(Ls[1], 0.4, 2, JumpBasis::up_is_zero);
    Circuit low = lower_to_native(block);
    int measures = 0;
    for (const Gate& g : low.gates)
        if (g.kind == GateKind::Measure) {
            ++measures;
            CHECK(g.qubits[0] == 2);
            CHECK(g.slot == 0);
        }
    CHECK(measures == 1);
}

TEST_CASE("dump/parse round-trip is lossless") {
    auto [H, Ls] = build_qcp(3, 6.04, 0.5, 1.0);
    Circuit c = trotter_step(H, 0.05, 4);
    c.append(jump_block(Ls[2], 0.05, 3, JumpBasis::up_is_zero));
    const std::string text = dump_circuit(c);
    Circuit back = parse_circuit(text);
    REQUIRE(back.gates.size() == c.gates.size());
    CHECK(back.n_qubits == c.n_qubits);
    CHECK(back.counts == c.counts);
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        CHECK(back.gates[i].kind == c.gates[i].kind);
        CHECK(back.gates[i].qubits == c.gates[i].qubits);
        CHECK(back.gates[i].angle == c.gates[i].angle); // bit-exact via %.17g
        CHECK(back.gates[i].polarity == c.gates[i].polarity);
        CHECK(back.gates[i].slot == c.gates[i].slot);
    }
    CHECK(dump_circuit(back) == text);
}

TEST_CASE("circuit_unitary guards") {
    Circuit c(2);
    c.push(Gate::measure(0, 0));
    CHECK_THROWS_AS(circuit_unitary(c), std::invalid_argument);
}
