#pragma once

#include "machines.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpv {

// A machine together with endpoints and an exact step count. `cover` marks
// coverability instances (the final configuration only has to be covered).
struct RunLengthInstance {
    Machine machine;
    Config init;
    Config fin;
    Integer steps;
    bool cover = false;
};

inline long small_steps(const Integer& m)
{
    if (sgn(m) < 0 || !m.fits_slong_p())
        throw std::invalid_argument("step count " + int_str(m) + " out of range");
    return m.get_si();
}

inline int bit_length(const Integer& x)
{
    return sgn(x) == 0 ? 0 : static_cast<int>(mpz_sizeinbase(x.get_mpz_t(), 2));
}

// exponent e with x == 2^e, or -1
inline int log2_exact(const Integer& x)
{
    if (sgn(x) <= 0)
        return -1;
    int e = bit_length(x) - 1;
    return pow2(e) == x ? e : -1;
}

inline IntVector unit(int dim, std::initializer_list<std::pair<int, long>> entries)
{
    IntVector v(dim);
    for (auto& [i, c] : entries)
        v[i] += c;
    return v;
}

// Adds q --w1;z1--> mid --w2;z2--> q' and returns the two rule indices.
inline std::array<int, 2> add_two_rule(Machine& m, int from, int to, const std::string& id, IntVector w1,
                                       std::vector<int> z1, IntVector w2, std::vector<int> z2)
{
    int mid = m.add_state("mid." + id);
    int b = m.add_rule(from, mid, std::move(w1), StackOp::None, -1, std::move(z1));
    int e = m.add_rule(mid, to, std::move(w2), StackOp::None, -1, std::move(z2));
    m.rules[b].id = id + ".b";
    m.rules[e].id = id + ".e";
    return {b, e};
}

// x += st (st restored through te)
inline std::array<int, 2> add_add_gadget(Machine& m, int from, int to, int x, int st, int te, const std::string& id)
{
    int d = m.dim;
    return add_two_rule(m, from, to, id, unit(d, {{x, 1}, {te, 1}, {st, -1}}), {st}, unit(d, {{st, 1}, {te, -1}}), {te});
}

// x *= 2 through te
inline std::array<int, 2> add_double_gadget(Machine& m, int from, int to, int x, int te, const std::string& id)
{
    int d = m.dim;
    return add_two_rule(m, from, to, id, unit(d, {{te, 2}, {x, -1}}), {x}, unit(d, {{x, 1}, {te, -1}}), {te});
}

// x /= 2 through te
inline std::array<int, 2> add_halve_gadget(Machine& m, int from, int to, int x, int te, const std::string& id)
{
    int d = m.dim;
    return add_two_rule(m, from, to, id, unit(d, {{x, -2}, {te, 1}}), {x}, unit(d, {{x, 1}, {te, -1}}), {te});
}

// Fraction pinned down by the zero tests of rule r at configuration c, or 1
// when no tested counter is moved by the rule.
inline Rational forced_fraction(const Rule& r, const Config& c)
{
    for (int z : r.zeroTests)
        if (sgn(r.update[z]) != 0)
            return -c.values[z] / Rational(r.update[z]);
    return Rational(1);
}

// Follows a path-shaped machine from c0 for `steps` steps using forced
// fractions. Throws if some state has no or several outgoing rules.
inline FiringSequence simulate_path(const Machine& m, const Config& c0, long steps)
{
    std::vector<std::vector<int>> out(m.states.size());
    for (std::size_t i = 0; i < m.rules.size(); ++i)
        out[m.rules[i].from].push_back(static_cast<int>(i));
    FiringSequence seq;
    Config c = c0;
    for (long i = 0; i < steps; ++i) {
        auto& rs = out[c.state];
        if (rs.size() != 1)
            throw std::logic_error("state " + m.states[c.state] + " does not have exactly one outgoing rule");
        Rational a = forced_fraction(m.rules[rs[0]], c);
        seq.push_back({a, rs[0]});
        c = step(m, c, rs[0], a);
    }
    return seq;
}

// A standalone two-rule gadget over counters 0..dim-1 from state "q" to "q'".
struct Fragment {
    Machine machine;
    int from = 0;
    int to = 1;
};

inline Fragment fragment_base(int dim)
{
    Fragment f;
    f.machine.model = Model::IvassRl;
    f.machine.dim = dim;
    f.from = f.machine.add_state("q");
    f.to = f.machine.add_state("q'");
    return f;
}

inline void check_distinct(std::initializer_list<int> ids)
{
    std::set<int> s(ids);
    if (s.size() != ids.size() || *s.begin() < 0)
        throw std::invalid_argument("gadget counters must be distinct and nonnegative");
}

inline Fragment gadget_add(int x, int st, int te)
{
    check_distinct({x, st, te});
    Fragment f = fragment_base(std::max({x, st, te}) + 1);
    add_add_gadget(f.machine, f.from, f.to, x, st, te, "add");
    return f;
}

inline Fragment gadget_double(int x, int te)
{
    check_distinct({x, te});
    Fragment f = fragment_base(std::max(x, te) + 1);
    add_double_gadget(f.machine, f.from, f.to, x, te, "doub");
    return f;
}

inline Fragment gadget_halve(int x, int te)
{
    check_distinct({x, te});
    Fragment f = fragment_base(std::max(x, te) + 1);
    add_halve_gadget(f.machine, f.from, f.to, x, te, "halve");
    return f;
}

// ---------------------------------------------------------------- PCP -> TCM

struct BoundedPcp {
    std::vector<std::pair<std::string, std::string>> pairs;
    Integer bound;
};

struct PcpEncoding {
    Machine tcm;
    Integer steps;
    std::string alphabet; // letter i has digit i+1
    int base = 2;         // padded alphabet size, a power of two
    int budget = 0;       // TCM steps per appended letter
};

inline std::string pcp_alphabet(const BoundedPcp& p)
{
    std::set<char> s;
    for (auto& [u, v] : p.pairs) {
        if (u.empty() || v.empty())
            throw std::invalid_argument("bounded PCP words must be nonempty");
        s.insert(u.begin(), u.end());
        s.insert(v.begin(), v.end());
    }
    return std::string(s.begin(), s.end());
}

// bijective base-`base` value of w with digits alphabet.find(c)+1
inline Integer bijective_value(const std::string& w, const std::string& alphabet, int base)
{
    Integer n = 0;
    for (char c : w) {
        auto d = alphabet.find(c);
        if (d == std::string::npos)
            throw std::invalid_argument(std::string("letter ") + c + " not in alphabet");
        n = n * base + static_cast<long>(d + 1);
    }
    return n;
}

// Every pair i is a cycle at q_in that appends u_i to counter 0 and v_i to
// counter 1, spending `budget` steps per letter: log2(base) doublings, the
// digit's increments, then nops. A solution of length l takes 2*budget*l steps.
inline PcpEncoding pcp_to_tcm(const BoundedPcp& p)
{
    PcpEncoding enc;
    enc.alphabet = pcp_alphabet(p);
    int k = 1;
    while ((1 << k) < static_cast<int>(enc.alphabet.size()))
        ++k;
    enc.base = 1 << k;
    enc.budget = k + enc.base + 1;
    Machine& t = enc.tcm;
    t.model = Model::Tcm;
    t.dim = 2;
    int qin = t.add_state("q_in");
    t.initial = t.final = qin;
    for (std::size_t i = 0; i < p.pairs.size(); ++i) {
        std::vector<TcmOp> ops;
        auto letters = [&](const std::string& w, int ctr) {
            for (char c : w) {
                int d = static_cast<int>(enc.alphabet.find(c)) + 1;
                int used = 0;
                for (int j = 0; j < k; ++j, ++used)
                    ops.push_back(ctr == 0 ? TcmOp::Double0 : TcmOp::Double1);
                for (int j = 0; j < d; ++j, ++used)
                    ops.push_back(ctr == 0 ? TcmOp::Inc0 : TcmOp::Inc1);
                for (; used < enc.budget; ++used)
                    ops.push_back(TcmOp::Nop);
            }
        };
        letters(p.pairs[i].first, 0);
        letters(p.pairs[i].second, 1);
        int cur = qin;
        for (std::size_t j = 0; j < ops.size(); ++j) {
            int next = j + 1 == ops.size() ? qin
                                           : t.add_state("p" + std::to_string(i) + "." + std::to_string(j + 1));
            int r = t.add_tcm_rule(cur, next, ops[j]);
            t.rules[r].id = "pair" + std::to_string(i) + "." + std::to_string(j);
            cur = next;
        }
    }
    enc.steps = 2 * Integer(enc.budget) * p.bound;
    return enc;
}

// Brute force over index sequences whose u-concatenation has length exactly
// the bound; returns one solution.
inline std::optional<std::vector<int>> solve_bounded_pcp(const BoundedPcp& p)
{
    long l = small_steps(p.bound);
    std::vector<int> seq;
    std::optional<std::vector<int>> found;
    auto rec = [&](auto& self, const std::string& a, const std::string& b) -> void {
        if (found)
            return;
        if (static_cast<long>(a.size()) == l && a == b) {
            found = seq;
            return;
        }
        if (static_cast<long>(a.size()) >= l && !(a.size() == 0 && l == 0))
            return;
        for (std::size_t i = 0; i < p.pairs.size(); ++i) {
            std::string na = a + p.pairs[i].first, nb = b + p.pairs[i].second;
            std::size_t common = std::min(na.size(), nb.size());
            if (na.compare(0, common, nb, 0, common) != 0 || static_cast<long>(na.size()) > l)
                continue;
            seq.push_back(static_cast<int>(i));
            self(self, na, nb);
            seq.pop_back();
        }
    };
    if (l == 0)
        return std::vector<int>{};
    rec(rec, "", "");
    return found;
}

// TCM run (rule indices) of the pair cycles for an index sequence.
inline std::vector<int> pcp_tcm_run(const PcpEncoding& enc, const std::vector<int>& indices)
{
    std::vector<int> run;
    for (int i : indices) {
        std::string prefix = "pair" + std::to_string(i) + ".";
        for (int j = 0;; ++j) {
            int r = enc.tcm.rule_index(prefix + std::to_string(j));
            if (r < 0)
                break;
            run.push_back(r);
        }
    }
    return run;
}

// Exhaustive search for a run of exactly m steps from (q_in,0,0) to some
// (q_f,n,n). Returns the rule sequence of one such run.
inline std::optional<std::vector<int>> tcm_search(const Machine& t, long m)
{
    if (t.model != Model::Tcm)
        throw std::invalid_argument("tcm_search needs a TCM");
    using Key = std::pair<int, std::pair<Integer, Integer>>;
    std::map<Key, std::vector<int>> level{{{t.initial, {0, 0}}, {}}};
    for (long s = 0; s < m && !level.empty(); ++s) {
        std::map<Key, std::vector<int>> next;
        for (auto& [key, run] : level)
            for (std::size_t r = 0; r < t.rules.size(); ++r) {
                const Rule& rule = t.rules[r];
                if (rule.from != key.first)
                    continue;
                Integer a = key.second.first, b = key.second.second;
                switch (rule.tcmOp) {
                case TcmOp::Inc0: a += 1; break;
                case TcmOp::Inc1: b += 1; break;
                case TcmOp::Double0: a *= 2; break;
                case TcmOp::Double1: b *= 2; break;
                case TcmOp::Nop: break;
                }
                Key nk{rule.to, {a, b}};
                if (!next.count(nk)) {
                    auto nr = run;
                    nr.push_back(static_cast<int>(r));
                    next.emplace(nk, std::move(nr));
                }
            }
        level = std::move(next);
    }
    for (auto& [key, run] : level)
        if (key.first == t.final && key.second.first == key.second.second)
            return run;
    return std::nullopt;
}

// ------------------------------------------------------------ TCM -> IVASS_RL

namespace tcm_counter {
constexpr int c0 = 0, c1 = 1, st = 2, te = 3, x = 4, count = 5;
}

struct TcmEncoding {
    RunLengthInstance inst;
    // per TCM rule: {b, e, b0, e0}; the last two are the zero-counter variant
    // of a doubling and -1 otherwise
    std::vector<std::array<int, 4>> gadget;
    std::array<int, 4> init{};
    int link = -1;
    std::array<int, 3> finish{}; // f^b, f^e, zero variant of f^e
    long m = 0;

    // IVASS_RL firing sequence for an accepting TCM run of length m
    FiringSequence translate(const Machine& tcm, const std::vector<int>& run) const
    {
        using namespace tcm_counter;
        if (static_cast<long>(run.size()) != m)
            throw std::invalid_argument("TCM run must have length " + std::to_string(m));
        FiringSequence seq;
        Rational stv(1), xv(1, m);
        for (long j = 0; j < m; ++j) {
            seq.push_back({stv / 2, init[0]});
            seq.push_back({stv / 2, init[1]});
            seq.push_back({xv, init[2]});
            seq.push_back({xv, init[3]});
            stv /= 2;
        }
        seq.push_back({Rational(1), link});
        Integer v[2] = {0, 0};
        Rational unitv = pow2_inverse(m);
        for (int r : run) {
            const Rule& rule = tcm.rules.at(r);
            auto& g = gadget.at(r);
            switch (rule.tcmOp) {
            case TcmOp::Inc0:
            case TcmOp::Inc1:
                seq.push_back({unitv, g[0]});
                seq.push_back({unitv, g[1]});
                v[rule.tcmOp == TcmOp::Inc1] += 1;
                break;
            case TcmOp::Double0:
            case TcmOp::Double1: {
                Integer& c = v[rule.tcmOp == TcmOp::Double1];
                if (sgn(c) == 0) {
                    seq.push_back({Rational(1), g[2]});
                    seq.push_back({Rational(1), g[3]});
                } else {
                    Rational cv = Rational(c) * unitv;
                    seq.push_back({cv, g[0]});
                    seq.push_back({2 * cv, g[1]});
                    c *= 2;
                }
                break;
            }
            case TcmOp::Nop:
                seq.push_back({Rational(1), g[0]});
                seq.push_back({Rational(1), g[1]});
                break;
            }
        }
        seq.push_back({unitv, finish[0]});
        if (sgn(v[0]) == 0)
            seq.push_back({Rational(1), finish[2]});
        else
            seq.push_back({Rational(v[0]) * unitv, finish[1]});
        return seq;
    }
};

// Counters c0, c1, st, te, x, count. Run length 4m+1+2(m+1).
inline TcmEncoding tcm_to_ivass(const Machine& tcm, long m)
{
    using namespace tcm_counter;
    tcm.validate();
    if (tcm.model != Model::Tcm)
        throw std::invalid_argument("tcm_to_ivass needs a TCM");
    if (m < 1)
        throw std::invalid_argument("run length must be at least 1");
    TcmEncoding enc;
    enc.m = m;
    Machine& c = enc.inst.machine;
    c.model = Model::IvassRl;
    c.dim = 6;
    for (auto& s : tcm.states)
        c.add_state(s);
    for (std::size_t i = 0; i < tcm.rules.size(); ++i) {
        const Rule& r = tcm.rules[i];
        std::array<int, 4> g{-1, -1, -1, -1};
        int ci = (r.tcmOp == TcmOp::Inc1 || r.tcmOp == TcmOp::Double1) ? c1 : c0;
        switch (r.tcmOp) {
        case TcmOp::Inc0:
        case TcmOp::Inc1: {
            auto be = add_add_gadget(c, r.from, r.to, ci, st, te, r.id);
            g[0] = be[0], g[1] = be[1];
            break;
        }
        case TcmOp::Double0:
        case TcmOp::Double1: {
            auto be = add_double_gadget(c, r.from, r.to, ci, te, r.id);
            auto z = add_two_rule(c, r.from, r.to, r.id + "~0", IntVector(6), {ci}, IntVector(6), {te});
            g = {be[0], be[1], z[0], z[1]};
            break;
        }
        case TcmOp::Nop: {
            auto be = add_two_rule(c, r.from, r.to, r.id, IntVector(6), {}, IntVector(6), {});
            g[0] = be[0], g[1] = be[1];
            break;
        }
        }
        enc.gadget.push_back(g);
    }
    int qf = tcm.final;
    int fmid = c.add_state("fin.mid"), fbar = c.add_state("fin");
    enc.finish[0] = c.add_rule(qf, fmid, unit(6, {{st, -1}}), StackOp::None, -1, {st, te});
    enc.finish[1] = c.add_rule(fmid, fbar, unit(6, {{c0, -1}, {c1, -1}}), StackOp::None, -1, {c0, c1});
    enc.finish[2] = c.add_rule(fmid, fbar, IntVector(6), StackOp::None, -1, {c0, c1});
    c.rules[enc.finish[0]].id = "fin.b";
    c.rules[enc.finish[1]].id = "fin.e";
    c.rules[enc.finish[2]].id = "fin.e~0";
    int in[4];
    for (int i = 0; i < 4; ++i)
        in[i] = c.add_state("in" + std::to_string(i));
    enc.init[0] = c.add_rule(in[0], in[1], unit(6, {{te, 1}, {st, -2}}), StackOp::None, -1, {st});
    enc.init[1] = c.add_rule(in[1], in[2], unit(6, {{st, 1}, {te, -1}}), StackOp::None, -1, {te});
    enc.init[2] = c.add_rule(in[2], in[3], unit(6, {{te, 1}, {count, 1}, {x, -1}}), StackOp::None, -1, {x});
    enc.init[3] = c.add_rule(in[3], in[0], unit(6, {{x, 1}, {te, -1}}), StackOp::None, -1, {te});
    for (int i = 0; i < 4; ++i)
        c.rules[enc.init[i]].id = "init." + std::to_string(i);
    enc.link = c.add_rule(in[0], tcm.initial, IntVector(6));
    c.rules[enc.link].id = "init.link";
    c.validate();

    enc.inst.init = Config{in[0], {}, RatVector(6)};
    enc.inst.init.values[st] = 1;
    enc.inst.init.values[x] = Rational(1, m);
    enc.inst.fin = Config{fbar, {}, RatVector(6)};
    enc.inst.fin.values[count] = 1;
    enc.inst.fin.values[x] = Rational(1, m);
    enc.inst.steps = Integer(4 * m + 1 + 2 * (m + 1));
    return enc;
}

// ----------------------------------------------------- IVASS_RL -> Q+-VASS_RL

struct ComplementEncoding {
    RunLengthInstance inst;
    std::vector<std::array<int, 3>> triple; // r^b, r^m, r^e per source rule
    bool padded = false;
    int srcDim = 0; // source counters including the pad counter

    int ctrl() const { return 2 * srcDim; }

    FiringSequence translate(const FiringSequence& seq) const
    {
        FiringSequence out;
        for (auto& s : seq) {
            auto& t = triple.at(s.rule);
            out.push_back({s.fraction, t[0]});
            out.push_back({Rational(1), t[1]});
            out.push_back({Rational(1), t[2]});
        }
        return out;
    }

    // counter values of the image of an IVASS_RL configuration with a given ctrl
    Config lift(const Config& c, const Rational& ctrlValue) const
    {
        Config d{c.state, {}, RatVector(2 * srcDim + 1)};
        for (int i = 0; i < srcDim; ++i) {
            Rational v = i < static_cast<int>(c.values.size()) ? c.values[i] : Rational(0);
            d.values[2 * i] = v;
            d.values[2 * i + 1] = 1 - v;
        }
        d.values[ctrl()] = ctrlValue;
        return d;
    }
};

// Counter x becomes 2x, its complement 2x+1, ctrl is last. A pad counter that
// stays zero is added and tested by every rule when some rule has no test.
inline ComplementEncoding ivass_to_cvassrl(const RunLengthInstance& src)
{
    const Machine& c = src.machine;
    c.validate();
    if (c.model != Model::IvassRl)
        throw std::invalid_argument("ivass_to_cvassrl needs an IVASS_RL instance");
    ComplementEncoding enc;
    enc.padded = std::any_of(c.rules.begin(), c.rules.end(), [](const Rule& r) { return r.zeroTests.empty(); });
    int n = c.dim + (enc.padded ? 1 : 0);
    enc.srcDim = n;
    int D = 2 * n + 1, ctrl = 2 * n;
    Machine& m = enc.inst.machine;
    m.model = Model::Qvass;
    m.dim = D;
    for (auto& s : c.states)
        m.add_state(s);
    for (auto& r : c.rules) {
        std::vector<int> tests = r.zeroTests;
        if (enc.padded)
            tests.push_back(c.dim);
        IntVector wb(D), wm(D), we(D);
        for (int i = 0; i < c.dim; ++i) {
            wb[2 * i] = r.update[i];
            wb[2 * i + 1] = -r.update[i];
        }
        std::sort(tests.begin(), tests.end());
        tests.erase(std::unique(tests.begin(), tests.end()), tests.end());
        for (int x : tests) {
            wm[2 * x + 1] = -1, wm[2 * x] = 1;
            we[2 * x + 1] = 1, we[2 * x] = -1;
        }
        wm[ctrl] = 1;
        we[ctrl] = 1;
        int mid1 = m.add_state("mid." + r.id), mid2 = m.add_state("mid'." + r.id);
        std::array<int, 3> t{m.add_rule(r.from, mid1, wb), m.add_rule(mid1, mid2, wm), m.add_rule(mid2, r.to, we)};
        m.rules[t[0]].id = r.id + ".b";
        m.rules[t[1]].id = r.id + ".m";
        m.rules[t[2]].id = r.id + ".e";
        enc.triple.push_back(t);
    }
    m.validate();
    enc.inst.init = enc.lift(src.init, 0);
    enc.inst.fin = enc.lift(src.fin, Rational(2 * src.steps));
    enc.inst.steps = 3 * src.steps;
    enc.inst.cover = src.cover;
    return enc;
}

// ------------------------------------------------------------- PDA counter

struct PdaCounter {
    Machine pda; // a Q+-PVASS of dimension 0
    Config start;
    Config end;
    Integer length;
};

// Deterministic PDA with a unique run of exactly m steps from start to end.
// m is split into powers of two; 2^0 is one nop transition and 2^e (e >= 1)
// is a block that pushes Z_i, runs the recursive procedure c_{e-1}, and pops
// Z_i. Procedure c_j pushes A_j, calls c_{j-1}, pops A_j and tail-calls
// c_{j-1}; c_0 is the return state itself. Every transition does a single
// push, pop or nothing.
inline PdaCounter pda_counter(const Integer& m)
{
    if (sgn(m) < 1)
        throw std::invalid_argument("pda_counter needs m >= 1");
    PdaCounter pc;
    pc.length = m;
    Machine& p = pc.pda;
    p.model = Model::Qpvass;
    p.dim = 0;
    std::vector<int> exps;
    for (int e = 0; e < bit_length(m); ++e)
        if (mpz_tstbit(m.get_mpz_t(), e))
            exps.push_back(e);
    std::vector<int> b;
    for (std::size_t i = 0; i <= exps.size(); ++i)
        b.push_back(p.add_state("b" + std::to_string(i + 1)));
    int maxE = exps.back();
    int ret = -1;
    std::vector<int> call(std::max(maxE, 1), -1);
    if (maxE >= 1) {
        ret = p.add_state("ret");
        call[0] = ret;
        for (int j = 1; j < maxE; ++j)
            call[j] = p.add_state("c" + std::to_string(j));
        for (int j = 1; j < maxE; ++j) {
            int a = p.add_symbol("A" + std::to_string(j));
            int r1 = p.add_rule(call[j], call[j - 1], {}, StackOp::Push, a);
            int r2 = p.add_rule(ret, call[j - 1], {}, StackOp::Pop, a);
            p.rules[r1].id = "call" + std::to_string(j);
            p.rules[r2].id = "resume" + std::to_string(j);
        }
    }
    for (std::size_t i = 0; i < exps.size(); ++i) {
        std::string tag = std::to_string(i + 1);
        if (exps[i] == 0) {
            int r = p.add_rule(b[i], b[i + 1], {});
            p.rules[r].id = "tick" + tag;
            continue;
        }
        int z = p.add_symbol("Z" + tag);
        int r1 = p.add_rule(b[i], call[exps[i] - 1], {}, StackOp::Push, z);
        int r2 = p.add_rule(ret, b[i + 1], {}, StackOp::Pop, z);
        p.rules[r1].id = "enter" + tag;
        p.rules[r2].id = "leave" + tag;
    }
    p.validate();
    pc.start = Config{b.front(), {}, {}};
    pc.end = Config{b.back(), {}, {}};
    return pc;
}

// The unique run of the counter, by deterministic stepping.
inline std::vector<int> pda_run(const PdaCounter& pc)
{
    const Machine& p = pc.pda;
    std::vector<int> run;
    Config c = pc.start;
    long m = small_steps(pc.length);
    for (long i = 0; i < m; ++i) {
        int chosen = -1;
        for (std::size_t r = 0; r < p.rules.size(); ++r) {
            const Rule& rule = p.rules[r];
            if (rule.from != c.state)
                continue;
            if (rule.op == StackOp::Pop && (c.stack.empty() || c.stack.front() != rule.symbol))
                continue;
            if (chosen >= 0)
                throw std::logic_error("pda counter is not deterministic");
            chosen = static_cast<int>(r);
        }
        if (chosen < 0)
            throw std::logic_error("pda counter run ends early");
        run.push_back(chosen);
        c = step(p, c, chosen, Rational(1));
    }
    if (!(c == pc.end))
        throw std::logic_error("pda counter run misses its end configuration");
    return run;
}

// ------------------------------------------------- Q+-VASS_RL -> Q+-PVASS

struct ProductEncoding {
    Machine machine;
    Config init;
    Config fin;
    PdaCounter counter;
    int vassStates = 0;
    int vassRules = 0;

    int state_of(int pdaState, int vassState) const { return pdaState * vassStates + vassState; }
    int rule_of(int pdaRule, int vassRule) const { return pdaRule * vassRules + vassRule; }

    FiringSequence translate(const FiringSequence& seq) const
    {
        auto run = pda_run(counter);
        if (run.size() != seq.size())
            throw std::invalid_argument("witness length differs from the counter length");
        FiringSequence out;
        for (std::size_t i = 0; i < seq.size(); ++i)
            out.push_back({seq[i].fraction, rule_of(run[i], seq[i].rule)});
        return out;
    }
};

inline ProductEncoding cvassrl_to_cpvass(const RunLengthInstance& src)
{
    const Machine& v = src.machine;
    v.validate();
    if (v.model != Model::Qvass)
        throw std::invalid_argument("cvassrl_to_cpvass needs a Q+-VASS instance");
    ProductEncoding enc;
    enc.counter = pda_counter(src.steps);
    const Machine& p = enc.counter.pda;
    enc.vassStates = static_cast<int>(v.states.size());
    enc.vassRules = static_cast<int>(v.rules.size());
    Machine& m = enc.machine;
    m.model = Model::Qpvass;
    m.dim = v.dim;
    m.stackAlphabet = p.stackAlphabet;
    for (auto& ps : p.states)
        for (auto& vs : v.states)
            m.add_state(ps + "|" + vs);
    for (std::size_t t = 0; t < p.rules.size(); ++t)
        for (std::size_t r = 0; r < v.rules.size(); ++r) {
            const Rule& pr = p.rules[t];
            const Rule& vr = v.rules[r];
            int i = m.add_rule(enc.state_of(pr.from, vr.from), enc.state_of(pr.to, vr.to), vr.update, pr.op, pr.symbol);
            m.rules[i].id = pr.id + "|" + vr.id;
        }
    m.validate();
    enc.init = Config{enc.state_of(enc.counter.start.state, src.init.state), enc.counter.start.stack, src.init.values};
    enc.fin = Config{enc.state_of(enc.counter.end.state, src.fin.state), enc.counter.end.stack, src.fin.values};
    return enc;
}

// ------------------------------------------------------------- amplifiers

struct Amplifier {
    RunLengthInstance inst;
    FiringSequence run; // the unique run, from deterministic simulation
    int k = 0;
    int n = 0;
};

// Counters x_1..x_m, st, te. Halves st k times, then builds each x_i by
// Horner's rule over the n-bit binary form of p_i (most significant bit
// first): leading zero bits are two dummy steps, the first one bit adds st,
// later bits double and then add st or take a dummy step. Dummy rules have
// zero update and test te, which is 0 between gadgets.
inline Amplifier ivass_amplifier(const std::vector<Integer>& p, int k, int width = 1)
{
    if (p.empty())
        throw std::invalid_argument("amplifier needs at least one value");
    if (k < 0)
        throw std::invalid_argument("amplifier needs k >= 0");
    Integer cap = pow2(k);
    int n = std::max(width, 1);
    for (auto& v : p) {
        if (sgn(v) < 0 || v > cap)
            throw std::invalid_argument("amplifier value " + int_str(v) + " exceeds 2^" + std::to_string(k));
        n = std::max(n, bit_length(v));
    }
    int mcount = static_cast<int>(p.size());
    int st = mcount, te = mcount + 1, D = mcount + 2;
    Amplifier amp;
    amp.k = k;
    amp.n = n;
    Machine& c = amp.inst.machine;
    c.model = Model::IvassRl;
    c.dim = D;
    int cur = c.add_state("p0");
    for (int i = 1; i <= k; ++i) {
        int next = c.add_state("p" + std::to_string(i));
        add_halve_gadget(c, cur, next, st, te, "halve" + std::to_string(i));
        cur = next;
    }
    int dummies = 0;
    auto dummy = [&](int from, int to) {
        auto id = "skip" + std::to_string(dummies++);
        add_two_rule(c, from, to, id, IntVector(D), {te}, IntVector(D), {te});
    };
    for (int i = 0; i < mcount; ++i) {
        bool started = false;
        for (int j = n - 1; j >= 0; --j) {
            std::string tag = std::to_string(i + 1) + "." + std::to_string(n - j);
            int half = c.add_state("h" + tag);
            int next = c.add_state("q" + tag);
            bool bit = mpz_tstbit(p[i].get_mpz_t(), j);
            if (started)
                add_double_gadget(c, cur, half, i, te, "doub" + tag);
            else
                dummy(cur, half);
            if (bit)
                add_add_gadget(c, half, next, i, st, te, "add" + tag);
            else
                dummy(half, next);
            started = started || bit;
            cur = next;
        }
    }
    c.validate();
    amp.inst.init = Config{0, {}, RatVector(D)};
    amp.inst.init.values[st] = 1;
    amp.inst.fin = Config{cur, {}, RatVector(D)};
    for (int i = 0; i < mcount; ++i)
        amp.inst.fin.values[i] = Rational(p[i]) / Rational(cap);
    amp.inst.fin.values[st] = pow2_inverse(k);
    amp.inst.steps = Integer(2 * k + 4 * n * mcount);
    amp.run = simulate_path(c, amp.inst.init, small_steps(amp.inst.steps));
    Config end = check_run(c, amp.inst.init, amp.run);
    if (!(end == amp.inst.fin))
        throw std::logic_error("amplifier simulation misses its final configuration");
    return amp;
}

// The Q+-VASS amplifier: the complement translation of the IVASS_RL one,
// with its run translated and replayed.
inline Amplifier qvass_amplifier(const std::vector<Integer>& p, int k, int width = 1)
{
    Amplifier a = ivass_amplifier(p, k, width);
    ComplementEncoding enc = ivass_to_cvassrl(a.inst);
    Amplifier q;
    q.k = a.k;
    q.n = a.n;
    q.inst = enc.inst;
    q.run = enc.translate(a.run);
    Config end = check_run(q.inst.machine, q.inst.init, q.run);
    if (!(end == q.inst.fin))
        throw std::logic_error("translated amplifier run misses its final configuration");
    return q;
}

// ------------------------------------------------------ unary hardening

struct SuperEncoding {
    RunLengthInstance inst;
    std::vector<std::array<int, 2>> pair; // r^b, r^e per source rule
    int k = 0;

    FiringSequence translate(const FiringSequence& seq) const
    {
        FiringSequence out;
        Rational s = pow2_inverse(k);
        for (auto& st : seq) {
            out.push_back({st.fraction * s, pair.at(st.rule)[0]});
            out.push_back({st.fraction * s, pair.at(st.rule)[1]});
        }
        return out;
    }
};

inline void require_dyadic(const Config& c)
{
    for (auto& v : c.values)
        if (log2_exact(v.get_den()) < 0)
            throw std::invalid_argument("value " + rat_str(v) + " does not have a power-of-two denominator");
}

// Divides every value by 2^k (the least power of two above all values and
// the step count) and routes each rule through a b/b̄ pair that caps its
// fraction at 1/2^k. Output is a coverability instance of twice the length.
inline SuperEncoding structured_to_superstructured(const RunLengthInstance& src)
{
    const Machine& m = src.machine;
    m.validate();
    if (m.model != Model::Qvass)
        throw std::invalid_argument("structured_to_superstructured needs a Q+-VASS instance");
    require_dyadic(src.init);
    require_dyadic(src.fin);
    Rational top(src.steps);
    for (auto* c : {&src.init, &src.fin})
        for (auto& v : c->values)
            top = std::max(top, v);
    SuperEncoding enc;
    while (Rational(pow2(enc.k)) <= top)
        ++enc.k;
    Rational s = pow2_inverse(enc.k);
    int d = m.dim, bb = d, bbar = d + 1, D = d + 2;
    Machine& out = enc.inst.machine;
    out.model = Model::Qvass;
    out.dim = D;
    for (auto& q : m.states)
        out.add_state(q);
    for (auto& r : m.rules) {
        IntVector w1(D), w2(D);
        for (int i = 0; i < d; ++i)
            w1[i] = r.update[i];
        w1[bb] = -1, w1[bbar] = 1;
        w2[bb] = 1, w2[bbar] = -1;
        int mid = out.add_state("mid." + r.id);
        int b = out.add_rule(r.from, mid, w1), e = out.add_rule(mid, r.to, w2);
        out.rules[b].id = r.id + ".b";
        out.rules[e].id = r.id + ".e";
        enc.pair.push_back({b, e});
    }
    out.validate();
    auto scale = [&](const Config& c) {
        Config x{c.state, {}, RatVector(D)};
        for (int i = 0; i < d; ++i)
            x.values[i] = c.values[i] * s;
        x.values[bb] = s;
        return x;
    };
    enc.inst.init = scale(src.init);
    enc.inst.fin = scale(src.fin);
    enc.inst.steps = 2 * src.steps;
    enc.inst.cover = true;
    return enc;
}

struct UnaryEncoding {
    RunLengthInstance inst;
    Amplifier before; // builds c_init
    Amplifier after;  // builds c_fin
    int dim = 0;      // counters of the core instance
    int yOffset = 0;
    int zOffset = 0;
    std::vector<int> incRules;
    std::vector<int> decRules;
    int coreRuleOffset = 0;
    int afterRuleOffset = 0;
    int link = -1;

    // witness for the assembled instance from a covering run of the core
    FiringSequence translate(const FiringSequence& core) const
    {
        FiringSequence out = before.run;
        auto drain = [&](const Config& ampFin, const std::vector<int>& rules) {
            for (int i = 0; i < dim + 2; ++i) {
                const Rational& v = ampFin.values[2 * i];
                out.push_back({sgn(v) == 0 ? Rational(1) : v, rules[i]});
            }
        };
        drain(before.inst.fin, incRules);
        for (auto& s : core)
            out.push_back({s.fraction, s.rule + coreRuleOffset});
        out.push_back({Rational(1), link});
        for (auto& s : after.run)
            out.push_back({s.fraction, s.rule + afterRuleOffset});
        drain(after.inst.fin, decRules);
        return out;
    }
};

// Places the Q+-VASS amplifier for c_init before the core instance and the
// one for c_fin after it. T^inc moves the built values into the core
// counters, T^dec subtracts the target; both drain the amplifier counters.
// All values of the assembled endpoints are 0, 1 or an amplifier's ctrl.
inline UnaryEncoding assemble_unary_instance(const RunLengthInstance& src)
{
    const Machine& M = src.machine;
    M.validate();
    if (M.model != Model::Qvass)
        throw std::invalid_argument("assemble_unary_instance needs a Q+-VASS instance");
    require_dyadic(src.init);
    require_dyadic(src.fin);
    for (auto* c : {&src.init, &src.fin})
        for (auto& v : c->values)
            if (v > 1 || sgn(v) < 0)
                throw std::invalid_argument("assemble_unary_instance needs values in [0,1]");
    for (auto& r : M.rules)
        if (r.from == src.fin.state)
            throw std::invalid_argument("final state of the core instance must have no outgoing rules");
    int m = M.dim;
    int k = 0;
    for (auto* c : {&src.init, &src.fin})
        for (auto& v : c->values)
            k = std::max(k, log2_exact(v.get_den()));
    Rational K(pow2(k));
    std::vector<Integer> alpha, beta;
    int n = 1;
    for (int i = 0; i < m; ++i) {
        alpha.push_back(Integer(src.init.values[i] * K));
        beta.push_back(Integer(src.fin.values[i] * K));
        n = std::max({n, bit_length(alpha.back()), bit_length(beta.back())});
    }
    UnaryEncoding u;
    u.dim = m;
    u.before = qvass_amplifier(alpha, k, n);
    u.after = qvass_amplifier(beta, k, n);
    int A = 2 * m + 5, ctrl = 2 * m + 4;
    u.yOffset = m;
    u.zOffset = m + A;
    int D = m + 2 * A;
    Machine& C = u.inst.machine;
    C.model = Model::Qvass;
    C.dim = D;
    auto embed = [&](const Machine& part, int offset, const std::string& prefix) {
        int s0 = static_cast<int>(C.states.size());
        for (auto& q : part.states)
            C.add_state(prefix + q);
        for (auto& r : part.rules) {
            IntVector w(D);
            for (int i = 0; i < part.dim; ++i)
                w[offset + i] = r.update[i];
            int j = C.add_rule(s0 + r.from, s0 + r.to, w);
            C.rules[j].id = prefix + r.id;
        }
        return s0;
    };
    // T^inc (sign +1) or T^dec (sign -1); counters that end at zero in the
    // amplifier get a zero-update step since they cannot be drained
    auto chain = [&](int from, int to, const Config& ampFin, int offset, int sign, const std::string& prefix,
                     std::vector<int>& rules) {
        int cur = from;
        for (int i = 0; i < m + 2; ++i) {
            int next = i + 1 < m + 2 ? C.add_state(prefix + std::to_string(i + 1)) : to;
            IntVector w(D);
            if (sgn(ampFin.values[2 * i]) != 0) {
                if (i < m)
                    w[i] = sign;
                w[offset + 2 * i] = -1;
                w[offset + 2 * i + 1] = 1;
            }
            int j = C.add_rule(cur, next, w);
            C.rules[j].id = prefix + std::to_string(i + 1);
            rules.push_back(j);
            cur = next;
        }
    };
    int sd = embed(u.before.inst.machine, u.yOffset, "d.");
    int sM = static_cast<int>(C.states.size());
    for (auto& q : M.states)
        C.add_state("M." + q);
    chain(sd + u.before.inst.fin.state, sM + src.init.state, u.before.inst.fin, u.yOffset, 1, "Tinc", u.incRules);
    u.coreRuleOffset = static_cast<int>(C.rules.size());
    for (auto& r : M.rules) {
        IntVector w(D);
        for (int i = 0; i < m; ++i)
            w[i] = r.update[i];
        int j = C.add_rule(sM + r.from, sM + r.to, w);
        C.rules[j].id = "M." + r.id;
    }
    u.afterRuleOffset = static_cast<int>(C.rules.size());
    int se = embed(u.after.inst.machine, u.zOffset, "e.");
    u.link = C.add_rule(sM + src.fin.state, se + u.after.inst.init.state, IntVector(D));
    C.rules[u.link].id = "link";
    int end = C.add_state("end");
    chain(se + u.after.inst.fin.state, end, u.after.inst.fin, u.zOffset, -1, "Tdec", u.decRules);
    C.validate();

    u.inst.init = Config{sd + u.before.inst.init.state, {}, RatVector(D)};
    for (int i = 0; i < A; ++i) {
        u.inst.init.values[u.yOffset + i] = u.before.inst.init.values[i];
        u.inst.init.values[u.zOffset + i] = u.after.inst.init.values[i];
    }
    u.inst.fin = Config{end, {}, RatVector(D)};
    for (int i = 0; i < m + 2; ++i) {
        u.inst.fin.values[u.yOffset + 2 * i + 1] = 1;
        u.inst.fin.values[u.zOffset + 2 * i + 1] = 1;
    }
    u.inst.fin.values[u.yOffset + ctrl] = u.before.inst.fin.values[ctrl];
    u.inst.fin.values[u.zOffset + ctrl] = u.after.inst.fin.values[ctrl];
    u.inst.steps = u.before.inst.steps + (m + 2) + src.steps + 1 + u.after.inst.steps + (m + 2);
    u.inst.cover = true;
    return u;
}

} // namespace cpv
