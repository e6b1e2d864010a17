#include "oqs/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace oqs {

namespace {
constexpr double kTiny = 1e-14;
}

// ---------------------------------------------------------------- Gate

Gate Gate::rx(int q, double a) { Gate g; g.kind = GateKind::Rx; g.qubits[0] = q; g.angle = a; return g; }
Gate Gate::ry(int q, double a) { Gate g; g.kind = GateKind::Ry; g.qubits[0] = q; g.angle = a; return g; }
Gate Gate::rz(int q, double a) { Gate g; g.kind = GateKind::Rz; g.qubits[0] = q; g.angle = a; return g; }
Gate Gate::h(int q) { Gate g; g.kind = GateKind::H; g.qubits[0] = q; return g; }
Gate Gate::s(int q) { Gate g; g.kind = GateKind::S; g.qubits[0] = q; return g; }
Gate Gate::sdg(int q) { Gate g; g.kind = GateKind::Sdg; g.qubits[0] = q; return g; }
Gate Gate::x(int q) { Gate g; g.kind = GateKind::X; g.qubits[0] = q; return g; }
Gate Gate::cnot(int control, int target) {
    Gate g; g.kind = GateKind::CNOT; g.qubits[0] = control; g.qubits[1] = target; return g;
}
Gate Gate::cry(int control, int pol, int target, double a) {
    Gate g; g.kind = GateKind::CRy; g.qubits[0] = control; g.qubits[1] = target;
    g.angle = a; g.polarity[0] = static_cast<std::int8_t>(pol); return g;
}
Gate Gate::ccry(int c0, int p0, int c1, int p1, int target, double a) {
    Gate g; g.kind = GateKind::CCRy; g.qubits = {c0, c1, target}; g.angle = a;
    g.polarity = {static_cast<std::int8_t>(p0), static_cast<std::int8_t>(p1)}; return g;
}
Gate Gate::measure(int q, int slot) {
    Gate g; g.kind = GateKind::Measure; g.qubits[0] = q; g.slot = slot; return g;
}
Gate Gate::reset(int q) { Gate g; g.kind = GateKind::Reset; g.qubits[0] = q; return g; }

int Gate::arity() const {
    switch (kind) {
        case GateKind::CNOT:
        case GateKind::CRy: return 2;
        case GateKind::CCRy: return 3;
        default: return 1;
    }
}

// ---------------------------------------------------------------- Circuit

void Circuit::push(const Gate& g) {
    for (int i = 0; i < g.arity(); ++i) {
        const int q = g.qubits[std::size_t(i)];
        if (q < 0 || q >= n_qubits)
            throw std::invalid_argument("Circuit::push: qubit out of range");
        for (int j = i + 1; j < g.arity(); ++j)
            if (q == g.qubits[std::size_t(j)])
                throw std::invalid_argument("Circuit::push: duplicate qubit operands");
    }
    if (!std::isfinite(g.angle))
        throw std::invalid_argument("Circuit::push: non-finite angle");
    if (g.kind == GateKind::Measure)
        classical_slots = std::max(classical_slots, g.slot + 1);
    ++counts[g.arity()];
    gates.push_back(g);
}

void Circuit::append(const Circuit& other) {
    if (other.n_qubits > n_qubits)
        throw std::invalid_argument("Circuit::append: qubit count mismatch");
    for (const Gate& g : other.gates) push(g);
}

std::map<int, int> Circuit::recount() const {
    std::map<int, int> m;
    for (const Gate& g : gates) ++m[g.arity()];
    return m;
}

bool Circuit::has_measurement() const {
    return std::any_of(gates.begin(), gates.end(),
                       [](const Gate& g) { return !g.is_unitary(); });
}

bool Circuit::is_native() const {
    return std::none_of(gates.begin(), gates.end(), [](const Gate& g) {
        return g.kind == GateKind::CRy || g.kind == GateKind::CCRy;
    });
}

// ---------------------------------------------------------------- matrices

Mat2 gate_matrix_1q(GateKind kind, double angle) {
    const double c = std::cos(angle / 2), s = std::sin(angle / 2);
    const double r = std::numbers::sqrt2 / 2;
    switch (kind) {
        case GateKind::Rx: return {cplx(c), cplx(0, -s), cplx(0, -s), cplx(c)};
        case GateKind::Ry: return {cplx(c), cplx(-s), cplx(s), cplx(c)};
        case GateKind::Rz: return {std::polar(1.0, -angle / 2), cplx(0), cplx(0),
                                   std::polar(1.0, angle / 2)};
        case GateKind::H: return {cplx(r), cplx(r), cplx(r), cplx(-r)};
        case GateKind::S: return {cplx(1), cplx(0), cplx(0), cplx(0, 1)};
        case GateKind::Sdg: return {cplx(1), cplx(0), cplx(0), cplx(0, -1)};
        case GateKind::X: return {cplx(0), cplx(1), cplx(1), cplx(0)};
        default: throw std::invalid_argument("gate_matrix_1q: not a one-qubit unitary");
    }
}

namespace {

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 mat_adj(const Mat2& a) {
    return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

const Mat2 kPauli[4] = {
    {cplx(1), cplx(0), cplx(0), cplx(1)},   // I
    {cplx(0), cplx(1), cplx(1), cplx(0)},   // X
    {cplx(0), cplx(0, -1), cplx(0, 1), cplx(0)}, // Y
    {cplx(1), cplx(0), cplx(0), cplx(-1)},  // Z
};

// One-qubit Clifford group as words over {H, S}, deduped up to phase.
struct CliffordWord {
    std::vector<GateKind> word; // applied left to right
    Mat2 u;
};

Mat2 word_matrix(const std::vector<GateKind>& w) {
    Mat2 u = kPauli[0];
    for (GateKind k : w) u = mat_mul(gate_matrix_1q(k, 0.0), u);
    return u;
}

bool same_up_to_phase(const Mat2& a, const Mat2& b) {
    // phase from the largest entry of b
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(b[std::size_t(i)]) > std::abs(b[std::size_t(best)])) best = i;
    if (std::abs(b[std::size_t(best)]) < kTiny) return false;
    const cplx ph = a[std::size_t(best)] / b[std::size_t(best)];
    if (std::abs(std::abs(ph) - 1.0) > 1e-9) return false;
    for (int i = 0; i < 4; ++i)
        if (std::abs(a[std::size_t(i)] - ph * b[std::size_t(i)]) > 1e-9) return false;
    return true;
}

const std::vector<CliffordWord>& clifford_table() {
    static const std::vector<CliffordWord> table = [] {
        std::vector<CliffordWord> out;
        std::vector<std::vector<GateKind>> frontier{{}};
        out.push_back({{}, kPauli[0]});
        while (!frontier.empty() && out.size() < 24) {
            std::vector<std::vector<GateKind>> next;
            for (const auto& w : frontier) {
                for (GateKind k : {GateKind::H, GateKind::S}) {
                    auto w2 = w;
                    w2.push_back(k);
                    Mat2 u = word_matrix(w2);
                    bool seen = false;
                    for (const auto& e : out)
                        if (same_up_to_phase(u, e.u)) { seen = true; break; }
                    if (!seen) {
                        out.push_back({w2, u});
                        next.push_back(w2);
                    }
                }
            }
            frontier = std::move(next);
        }
        return out;
    }();
    return table;
}

// Image of pauli p under conjugation by c: c p c^+ = sign * pauli[out], or -1.
struct PauliImage { int pauli; double sign; };

PauliImage conjugate_pauli(const Mat2& c, int p) {
    const Mat2 m = mat_mul(mat_mul(c, kPauli[p]), mat_adj(c));
    for (int q = 1; q < 4; ++q) {
        for (double s : {1.0, -1.0}) {
            bool ok = true;
            for (int i = 0; i < 4 && ok; ++i)
                if (std::abs(m[std::size_t(i)] - s * kPauli[q][std::size_t(i)]) > 1e-9) ok = false;
            if (ok) return {q, s};
        }
    }
    return {-1, 0.0};
}

// Clifford word mapping pauli a -> +-Z and pauli b -> +-X; returns signs.
struct AxisMap {
    const CliffordWord* word;
    double sign_z, sign_x;
};

AxisMap find_axis_map(int pauli_to_z, int pauli_to_x) {
    for (const auto& cw : clifford_table()) {
        const PauliImage iz = conjugate_pauli(cw.u, pauli_to_z);
        const PauliImage ix = conjugate_pauli(cw.u, pauli_to_x);
        if (iz.pauli == 3 && ix.pauli == 1) return {&cw, iz.sign, ix.sign};
    }
    throw std::logic_error("find_axis_map: no Clifford found (distinct Paulis required)");
}

void emit_word(Circuit& c, const std::vector<GateKind>& w, int qubit, bool dagger) {
    if (!dagger) {
        for (GateKind k : w) c.push(Gate{k, {qubit, -1, -1}});
    } else {
        for (auto it = w.rbegin(); it != w.rend(); ++it) {
            GateKind k = *it;
            if (k == GateKind::S) k = GateKind::Sdg;
            else if (k == GateKind::Sdg) k = GateKind::S;
            c.push(Gate{k, {qubit, -1, -1}});
        }
    }
}

// Pauli coefficients of a Hermitian 4x4 (bit1 index a, bit0 index b).
std::array<std::array<double, 4>, 4> pauli_coefficients(const LocalTerm& term) {
    if (term.hermiticity_defect() > 1e-10)
        throw std::invalid_argument("two-qubit synthesis: term '" + term.label +
                                    "' is not Hermitian");
    std::array<std::array<double, 4>, 4> p{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const std::vector<cplx> pm = two_site_matrix(kPauli[a], kPauli[b]);
            cplx tr = 0.0;
            for (int r = 0; r < 4; ++r)
                for (int col = 0; col < 4; ++col)
                    tr += pm[std::size_t(r * 4 + col)] * term.coefficient *
                          term.matrix[std::size_t(col * 4 + r)];
            if (std::abs(tr.imag()) > 1e-10)
                throw std::invalid_argument("two-qubit synthesis: complex Pauli weight in '" +
                                            term.label + "'");
            p[std::size_t(a)][std::size_t(b)] = tr.real() / 4.0;
        }
    return p;
}

// Controlled single-axis rotation, conjugating CRy into the requested axis.
void emit_controlled_rotation(Circuit& c, int axis_pauli, int control, int pol,
                              int target, double angle) {
    switch (axis_pauli) {
        case 1: // X: Rx = S^+ Ry S
            c.push(Gate::s(target));
            c.push(Gate::cry(control, pol, target, angle));
            c.push(Gate::sdg(target));
            break;
        case 2: // Y
            c.push(Gate::cry(control, pol, target, angle));
            break;
        case 3: // Z: Rz = H Rx H
            c.push(Gate::h(target));
            c.push(Gate::s(target));
            c.push(Gate::cry(control, pol, target, angle));
            c.push(Gate::sdg(target));
            c.push(Gate::h(target));
            break;
        default: throw std::logic_error("emit_controlled_rotation: bad axis");
    }
}

bool paulis_commute(int a1, int b1, int a2, int b2) {
    const auto anti = [](int p, int q) { return p != 0 && q != 0 && p != q; };
    return (int(anti(a1, a2)) + int(anti(b1, b2))) % 2 == 0;
}

} // namespace

// ----------------------------------------------------- one-qubit exponential

Circuit one_qubit_exponential(const LocalTerm& term, double tau, int n_qubits) {
    if (term.n_sites() != 1)
        throw std::invalid_argument("one_qubit_exponential: 1-site term required");
    term.validate(n_qubits);
    if (term.hermiticity_defect() > 1e-10)
        throw std::invalid_argument("one_qubit_exponential: term '" + term.label +
                                    "' is not Hermitian");
    const int q = term.sites[0];
    Circuit c(n_qubits);
    // coefficient*matrix = a0 I + v . sigma  (all real by hermiticity)
    const cplx m00 = term.coefficient * term.matrix[0];
    const cplx m01 = term.coefficient * term.matrix[1];
    const cplx m11 = term.coefficient * term.matrix[3];
    const double vx = m01.real();
    const double vy = -m01.imag();
    const double vz = (m00.real() - m11.real()) / 2.0;
    const double vnorm = std::sqrt(vx * vx + vy * vy + vz * vz);
    if (vnorm * std::abs(tau) < kTiny) return c; // identity up to phase
    if (std::abs(vy) < kTiny && std::abs(vz) < kTiny) {
        c.push(Gate::rx(q, 2 * tau * vx));
    } else if (std::abs(vx) < kTiny && std::abs(vz) < kTiny) {
        c.push(Gate::ry(q, 2 * tau * vy));
    } else if (std::abs(vx) < kTiny && std::abs(vy) < kTiny) {
        c.push(Gate::rz(q, 2 * tau * vz));
    } else {
        // general axis: build U = exp(-i tau v.sigma), extract ZYZ angles
        const double phi = tau * vnorm;
        const double cp = std::cos(phi), sp = std::sin(phi);
        const cplx u00 = cplx(cp, -sp * vz / vnorm);
        const cplx u01 = cplx(-sp * vy / vnorm, -sp * vx / vnorm);
        const cplx u10 = cplx(sp * vy / vnorm, -sp * vx / vnorm);
        const double beta = 2.0 * std::atan2(std::abs(u10), std::abs(u00));
        double a, cang;
        if (std::abs(u00) < kTiny) {
            a = 2.0 * std::arg(u10);
            cang = 0.0;
        } else if (std::abs(u10) < kTiny) {
            a = -2.0 * std::arg(u00);
            cang = 0.0;
        } else {
            const double alpha = -std::arg(u00), delta = std::arg(u10);
            a = alpha + delta;
            cang = alpha - delta;
        }
        (void)u01;
        c.push(Gate::rz(q, cang));
        c.push(Gate::ry(q, beta));
        c.push(Gate::rz(q, a));
    }
    return c;
}

// ----------------------------------------------------- two-qubit exponential

Circuit synthesize_two_qubit_exponential(const LocalTerm& term, double tau, int n_qubits) {
    if (term.n_sites() != 2)
        throw std::invalid_argument("synthesize_two_qubit_exponential: 2-site term required");
    term.validate(n_qubits);
    const int s0 = term.sites[0], s1 = term.sites[1];
    const auto p = pauli_coefficients(term);

    struct Component { int a, b; double w; };
    std::vector<Component> comps;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            if (a == 0 && b == 0) continue; // global phase
            if (std::abs(p[std::size_t(a)][std::size_t(b)]) > kTiny)
                comps.push_back({a, b, p[std::size_t(a)][std::size_t(b)]});
        }

    Circuit c(n_qubits);
    if (comps.empty()) return c;

    // single Pauli string
    if (comps.size() == 1) {
        const auto [a, b, w] = comps[0];
        if (a == 0 || b == 0) {
            // effectively one-qubit
            LocalTerm t1;
            t1.sites = {a == 0 ? s0 : s1};
            const Mat2& pm = kPauli[a == 0 ? b : a];
            t1.matrix.assign(pm.begin(), pm.end());
            t1.coefficient = w;
            t1.label = term.label;
            return one_qubit_exponential(t1, tau, n_qubits);
        }
        if (a == 3 && b == 3) { // z(x)z: CNOT Rz CNOT
            c.push(Gate::cnot(s0, s1));
            c.push(Gate::rz(s1, 2 * tau * w));
            c.push(Gate::cnot(s0, s1));
            return c;
        }
        // conjugate onto ZZ per site
        const AxisMap m1 = find_axis_map(a, a == 1 ? 3 : 1); // second Pauli irrelevant, reuse helper
        const AxisMap m0 = find_axis_map(b, b == 1 ? 3 : 1);
        emit_word(c, m0.word->word, s0, false);
        emit_word(c, m1.word->word, s1, false);
        c.push(Gate::cnot(s0, s1));
        c.push(Gate::rz(s1, 2 * tau * w * m1.sign_z * m0.sign_z));
        c.push(Gate::cnot(s0, s1));
        emit_word(c, m1.word->word, s1, true);
        emit_word(c, m0.word->word, s0, true);
        return c;
    }

    if (comps.size() == 2) {
        const Component c1 = comps[0], c2 = comps[1];
        // projector (x) Pauli: {I,Z} on one slot, equal non-I Pauli on the other
        const bool proj_on_bit1 = (c1.a == 0 || c1.a == 3) && (c2.a == 0 || c2.a == 3) &&
                                  c1.a != c2.a && c1.b == c2.b && c1.b != 0;
        const bool proj_on_bit0 = (c1.b == 0 || c1.b == 3) && (c2.b == 0 || c2.b == 3) &&
                                  c1.b != c2.b && c1.a == c2.a && c1.a != 0;
        if (proj_on_bit1 || proj_on_bit0) {
            const double wI = proj_on_bit1 ? (c1.a == 0 ? c1.w : c2.w)
                                           : (c1.b == 0 ? c1.w : c2.w);
            const double wZ = proj_on_bit1 ? (c1.a == 3 ? c1.w : c2.w)
                                           : (c1.b == 3 ? c1.w : c2.w);
            if (std::abs(std::abs(wI) - std::abs(wZ)) < 1e-12) {
                const int control = proj_on_bit1 ? s1 : s0;
                const int target = proj_on_bit1 ? s0 : s1;
                const int axis = proj_on_bit1 ? c1.b : c1.a;
                const int pol = (wI * wZ > 0) ? 0 : 1; // (I+Z)/2 = |0><0|
                emit_controlled_rotation(c, axis, control, pol, target, 4 * wI * tau);
                return c;
            }
        }
        // two commuting Pauli strings, both acting on both sites: magic route
        if (c1.a != 0 && c1.b != 0 && c2.a != 0 && c2.b != 0 &&
            paulis_commute(c1.a, c1.b, c2.a, c2.b)) {
            const AxisMap m1 = find_axis_map(c1.a, c2.a); // bit1 slot: P1 -> Z, P2 -> X
            const AxisMap m0 = find_axis_map(c1.b, c2.b);
            const double wzz = c1.w * m1.sign_z * m0.sign_z;
            const double wxx = c2.w * m1.sign_x * m0.sign_x;
            emit_word(c, m0.word->word, s0, false);
            emit_word(c, m1.word->word, s1, false);
            c.push(Gate::cnot(s0, s1));
            c.push(Gate::rz(s1, 2 * tau * wzz));
            c.push(Gate::rx(s0, 2 * tau * wxx));
            c.push(Gate::cnot(s0, s1));
            emit_word(c, m1.word->word, s1, true);
            emit_word(c, m0.word->word, s0, true);
            return c;
        }
    }

    throw std::invalid_argument("synthesize_two_qubit_exponential: unsupported term class '" +
                                term.label + "'");
}

// ---------------------------------------------------------------- Trotter

namespace {

Circuit term_exponential(const LocalTerm& t, double tau, int n_qubits) {
    if (t.n_sites() == 1) return one_qubit_exponential(t, tau, n_qubits);
    return synthesize_two_qubit_exponential(t, tau, n_qubits);
}

} // namespace

Circuit trotter_step(const OperatorSum& H, double tau, int n_qubits) {
    Circuit c(n_qubits);
    if (H.terms.empty()) return c;
    for (const LocalTerm& t : H.terms) {
        if (t.n_sites() > 2)
            throw std::invalid_argument("trotter_step: 3-site terms not supported");
        t.validate(n_qubits);
    }
    if (H.terms.size() == 1) {
        c.append(term_exponential(H.terms[0], tau, n_qubits));
        return c;
    }

    using Factor = std::pair<const LocalTerm*, double>; // term, fraction of tau
    std::vector<Factor> opening;
    for (const LocalTerm& t : H.terms)
        if (t.n_sites() == 1) opening.push_back({&t, 0.5});

    // bonds keyed by sorted site pair, parity from the low site
    std::map<std::pair<int, int>, std::vector<const LocalTerm*>> bonds;
    for (const LocalTerm& t : H.terms)
        if (t.n_sites() == 2) {
            auto key = std::minmax(t.sites[0], t.sites[1]);
            bonds[{key.first, key.second}].push_back(&t);
        }
    for (const auto& [key, terms] : bonds)
        if (key.first % 2 == 0)
            for (const LocalTerm* t : terms) opening.push_back({t, 0.5});

    std::vector<Factor> middle;
    for (const auto& [key, terms] : bonds) {
        if (key.first % 2 == 0) continue;
        // symmetric inside the bond: halves of all but the last, last full, mirrored
        for (std::size_t i = 0; i + 1 < terms.size(); ++i) middle.push_back({terms[i], 0.5});
        middle.push_back({terms.back(), 1.0});
        for (std::size_t i = terms.size() - 1; i-- > 0;) middle.push_back({terms[i], 0.5});
    }

    for (const auto& [t, f] : opening) c.append(term_exponential(*t, f * tau, n_qubits));
    for (const auto& [t, f] : middle) c.append(term_exponential(*t, f * tau, n_qubits));
    for (auto it = opening.rbegin(); it != opening.rend(); ++it)
        c.append(term_exponential(*it->first, it->second * tau, n_qubits));
    return c;
}

// ---------------------------------------------------------------- jump block

Circuit jump_block(const LindbladDescriptor& ld, double dt, int ancilla, JumpBasis basis) {
    if (ld.kind == LindbladKind::custom)
        throw std::invalid_argument("jump_block: custom descriptors have no circuit form");
    if (ld.rate < 0 || dt <= 0)
        throw std::invalid_argument("jump_block: rate >= 0 and dt > 0 required");
    if (ld.rate * dt > 1.0)
        throw std::invalid_argument(
            "jump_block: rate*dt = " + std::to_string(ld.rate * dt) +
            " exceeds 1; shrink the time step so that rate*dt <= 1");
    for (int s : ld.sites)
        if (s == ancilla)
            throw std::invalid_argument("jump_block: ancilla collides with descriptor site");

    const double theta = 2.0 * std::asin(std::sqrt(ld.rate * dt));
    int n = ancilla + 1;
    for (int s : ld.sites) n = std::max(n, s + 1);
    Circuit c(n);

    // Polarities as drawn in the source circuits: |1> is the occupied state;
    // the spin convention |0>=up flips every system-side control.
    const bool flip = basis == JumpBasis::up_is_zero;
    const auto pol = [flip](int paper_polarity) {
        return flip ? 1 - paper_polarity : paper_polarity;
    };

    switch (ld.kind) {
        case LindbladKind::decay: {
            const int l = ld.sites[0];
            c.push(Gate::cry(l, pol(1), ancilla, theta));
            c.push(Gate::cnot(ancilla, l));
            break;
        }
        case LindbladKind::branching: {
            const int m = ld.sites[0], l = ld.sites[1];
            c.push(Gate::ccry(m, pol(1), l, pol(0), ancilla, theta));
            c.push(Gate::cnot(ancilla, l));
            break;
        }
        case LindbladKind::coagulation: {
            const int m = ld.sites[0], l = ld.sites[1];
            c.push(Gate::ccry(m, pol(1), l, pol(1), ancilla, theta));
            c.push(Gate::cnot(ancilla, l));
            break;
        }
        default: break;
    }
    c.push(Gate::measure(ancilla, 0));
    c.push(Gate::reset(ancilla));
    return c;
}

// ---------------------------------------------------------------- lowering

namespace {

void lower_cry(Circuit& out, int control, int pol, int target, double angle) {
    if (pol == 0) out.push(Gate::x(control));
    out.push(Gate::ry(target, angle / 2));
    out.push(Gate::cnot(control, target));
    out.push(Gate::ry(target, -angle / 2));
    out.push(Gate::cnot(control, target));
    if (pol == 0) out.push(Gate::x(control));
}

} // namespace

Circuit lower_to_native(const Circuit& c) {
    Circuit out(c.n_qubits);
    for (const Gate& g : c.gates) {
        switch (g.kind) {
            case GateKind::CRy:
                lower_cry(out, g.qubits[0], g.polarity[0], g.qubits[1], g.angle);
                break;
            case GateKind::CCRy: {
                const int c0 = g.qubits[0], c1 = g.qubits[1], t = g.qubits[2];
                if (g.polarity[0] == 0) out.push(Gate::x(c0));
                if (g.polarity[1] == 0) out.push(Gate::x(c1));
                // controlled-V ladder, V = Ry(angle/2)
                lower_cry(out, c1, 1, t, g.angle / 2);
                out.push(Gate::cnot(c0, c1));
                lower_cry(out, c1, 1, t, -g.angle / 2);
                out.push(Gate::cnot(c0, c1));
                lower_cry(out, c0, 1, t, g.angle / 2);
                if (g.polarity[1] == 0) out.push(Gate::x(c1));
                if (g.polarity[0] == 0) out.push(Gate::x(c0));
                break;
            }
            default:
                out.push(g);
        }
    }
    return out;
}

// ---------------------------------------------------------------- dense oracle

namespace {

// little matrix + site list of a unitary gate; controlled gates put the
// target at local bit 0 and controls above it
std::pair<std::vector<int>, std::vector<cplx>> gate_dense(const Gate& g) {
    switch (g.kind) {
        case GateKind::CNOT:
        case GateKind::CRy: {
            const Mat2 u = g.kind == GateKind::CNOT ? gate_matrix_1q(GateKind::X, 0)
                                                    : gate_matrix_1q(GateKind::Ry, g.angle);
            const int pol = g.kind == GateKind::CNOT ? 1 : g.polarity[0];
            std::vector<cplx> m(16, cplx(0));
            for (int cbit = 0; cbit < 2; ++cbit) {
                if (cbit == pol) {
                    for (int r = 0; r < 2; ++r)
                        for (int col = 0; col < 2; ++col)
                            m[std::size_t((cbit << 1 | r) * 4 + (cbit << 1 | col))] =
                                u[std::size_t(r * 2 + col)];
                } else {
                    for (int r = 0; r < 2; ++r)
                        m[std::size_t((cbit << 1 | r) * 4 + (cbit << 1 | r))] = 1.0;
                }
            }
            return {{g.qubits[1], g.qubits[0]}, std::move(m)};
        }
        case GateKind::CCRy: {
            const Mat2 u = gate_matrix_1q(GateKind::Ry, g.angle);
            std::vector<cplx> m(64, cplx(0));
            for (int b2 = 0; b2 < 2; ++b2)
                for (int b1 = 0; b1 < 2; ++b1) {
                    const bool act = b1 == g.polarity[0] && b2 == g.polarity[1];
                    for (int r = 0; r < 2; ++r)
                        for (int col = 0; col < 2; ++col) {
                            const int rr = b2 << 2 | b1 << 1 | r;
                            const int cc = b2 << 2 | b1 << 1 | col;
                            m[std::size_t(rr * 8 + cc)] =
                                act ? u[std::size_t(r * 2 + col)] : cplx(r == col ? 1 : 0);
                        }
                }
            return {{g.qubits[2], g.qubits[0], g.qubits[1]}, std::move(m)};
        }
        default: {
            const Mat2 u = gate_matrix_1q(g.kind, g.angle);
            return {{g.qubits[0]}, std::vector<cplx>(u.begin(), u.end())};
        }
    }
}

} // namespace

std::vector<cplx> circuit_unitary(const Circuit& c) {
    if (c.n_qubits > 10)
        throw std::invalid_argument("circuit_unitary: limited to n_qubits <= 10");
    if (c.has_measurement())
        throw std::invalid_argument("circuit_unitary: circuit contains Measure/Reset");
    const std::uint64_t dim = std::uint64_t(1) << c.n_qubits;
    std::vector<cplx> u(dim * dim, cplx(0));
    std::vector<cplx> col(dim);
    for (std::uint64_t j = 0; j < dim; ++j) {
        std::fill(col.begin(), col.end(), cplx(0));
        col[j] = 1.0;
        for (const Gate& g : c.gates) {
            auto [sites, m] = gate_dense(g);
            apply_k_site_matrix(col, c.n_qubits, sites, m);
        }
        for (std::uint64_t r = 0; r < dim; ++r) u[r * dim + j] = col[r];
    }
    return u;
}

// ---------------------------------------------------------------- execution

void execute_circuit(const Circuit& c, QuantumState& state, CounterRng& rng,
                     std::span<int> slots) {
    if (state.n_qubits() < c.n_qubits)
        throw std::invalid_argument("execute_circuit: state too small for circuit");
    for (const Gate& g : c.gates) {
        switch (g.kind) {
            case GateKind::Measure: {
                const int outcome = state.measure_qubit(g.qubits[0], rng);
                if (g.slot >= 0 && std::size_t(g.slot) < slots.size())
                    slots[std::size_t(g.slot)] = outcome;
                break;
            }
            case GateKind::Reset:
                state.reset_qubit(g.qubits[0], rng);
                break;
            case GateKind::CNOT: {
                const Control ctl{g.qubits[0], 1};
                state.apply_controlled({&ctl, 1}, g.qubits[1], gate_matrix_1q(GateKind::X, 0));
                break;
            }
            case GateKind::CRy: {
                const Control ctl{g.qubits[0], g.polarity[0]};
                state.apply_controlled({&ctl, 1}, g.qubits[1],
                                       gate_matrix_1q(GateKind::Ry, g.angle));
                break;
            }
            case GateKind::CCRy: {
                const std::array<Control, 2> ctls{Control{g.qubits[0], g.polarity[0]},
                                                  Control{g.qubits[1], g.polarity[1]}};
                state.apply_controlled(ctls, g.qubits[2],
                                       gate_matrix_1q(GateKind::Ry, g.angle));
                break;
            }
            default:
                state.apply_one_qubit(g.qubits[0], gate_matrix_1q(g.kind, g.angle));
        }
    }
}

// ---------------------------------------------------------------- dump/parse

namespace {

const char* kind_token(const Gate& g) {
    switch (g.kind) {
        case GateKind::Rx: return "RX";
        case GateKind::Ry: return "RY";
        case GateKind::Rz: return "RZ";
        case GateKind::H: return "H";
        case GateKind::S: return "S";
        case GateKind::Sdg: return "SDG";
        case GateKind::X: return "X";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CRy: return g.polarity[0] ? "CRY1" : "CRY0";
        case GateKind::CCRy:
            switch (g.polarity[0] * 2 + g.polarity[1]) {
                case 0: return "CCRY00";
                case 1: return "CCRY01";
                case 2: return "CCRY10";
                default: return "CCRY11";
            }
        case GateKind::Measure: return "MEASURE";
        case GateKind::Reset: return "RESET";
    }
    return "?";
}

} // namespace

std::string dump_circuit(const Circuit& c) {
    std::ostringstream os;
    os << "# qubits=" << c.n_qubits << "\n";
    os.precision(17);
    for (const Gate& g : c.gates) {
        os << kind_token(g);
        os << ' ' << g.qubits[0];
        if (g.kind == GateKind::Measure) {
            os << ',' << g.slot;
        } else {
            for (int i = 1; i < g.arity(); ++i) os << ',' << g.qubits[std::size_t(i)];
        }
        if (g.kind == GateKind::Rx || g.kind == GateKind::Ry || g.kind == GateKind::Rz ||
            g.kind == GateKind::CRy || g.kind == GateKind::CCRy)
            os << ' ' << g.angle;
        os << '\n';
    }
    return os.str();
}

Circuit parse_circuit(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int n_qubits = -1;
    Circuit c(0);
    bool have_circuit = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto pos = line.find("qubits=");
            if (pos != std::string::npos) {
                n_qubits = std::stoi(line.substr(pos + 7));
                c = Circuit(n_qubits);
                have_circuit = true;
            }
            continue;
        }
        if (!have_circuit)
            throw std::invalid_argument("parse_circuit: missing '# qubits=N' header");
        std::istringstream ls(line);
        std::string tok, ops;
        ls >> tok >> ops;
        std::vector<int> q;
        std::istringstream qs(ops);
        std::string part;
        while (std::getline(qs, part, ',')) q.push_back(std::stoi(part));
        double angle = 0.0;
        ls >> angle;

        if (tok == "RX") c.push(Gate::rx(q.at(0), angle));
        else if (tok == "RY") c.push(Gate::ry(q.at(0), angle));
        else if (tok == "RZ") c.push(Gate::rz(q.at(0), angle));
        else if (tok == "H") c.push(Gate::h(q.at(0)));
        else if (tok == "S") c.push(Gate::s(q.at(0)));
        else if (tok == "SDG") c.push(Gate::sdg(q.at(0)));
        else if (tok == "X") c.push(Gate::x(q.at(0)));
        else if (tok == "CNOT") c.push(Gate::cnot(q.at(0), q.at(1)));
        else if (tok == "CRY0") c.push(Gate::cry(q.at(0), 0, q.at(1), angle));
        else if (tok == "CRY1") c.push(Gate::cry(q.at(0), 1, q.at(1), angle));
        else if (tok.rfind("CCRY", 0) == 0 && tok.size() == 6)
            c.push(Gate::ccry(q.at(0), tok[4] - '0', q.at(1), tok[5] - '0', q.at(2), angle));
        else if (tok == "MEASURE") c.push(Gate::measure(q.at(0), q.at(1)));
        else if (tok == "RESET") c.push(Gate::reset(q.at(0)));
        else throw std::invalid_argument("parse_circuit: unknown gate '" + tok + "'");
    }
    if (!have_circuit) throw std::invalid_argument("parse_circuit: empty input");
    return c;
}

} // namespace oqs
