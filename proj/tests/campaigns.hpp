#pragma once

// Randomized cross-checks shared by the unit tests and the acceptance binary.

#include "oracles/brute.hpp"
#include "oracles/fm.hpp"
#include "random_formulas.hpp"
#include "random_grammars.hpp"

#include <cpvass/creach.hpp>
#include <cpvass/pumps.hpp>
#include <cpvass/reductions.hpp>
#include <cpvass/solver.hpp>

#include <algorithm>
#include <deque>
#include <random>

namespace campaign {

using namespace cpv;

struct PumpStats {
    int grammars = 0;
    int points = 0;
    int feasible = 0;
    int violations = 0; // word-feasible but UNSAT
    int unconfirmed = 0; // SAT without a bounded witness
};

inline bool pump_feasible(const std::set<std::pair<std::vector<IntVector>, std::vector<IntVector>>>& ps,
                          const RatVector& u, const RatVector& v, const RatVector& up, const RatVector& vp)
{
    for (auto& [w, wp] : ps)
        if (oracle::word_feasible(w, u, v, false, "pw") && oracle::word_feasible(wp, up, vp, false, "pw"))
            return true;
    return false;
}

// random multiple of 1/4 in [lo/4, hi/4]
inline Rational quarter(std::mt19937_64& rng, int lo, int hi)
{
    std::uniform_int_distribution<int> k(lo, hi);
    return make_rational(k(rng), 4);
}

inline RatVector quarter_point(std::mt19937_64& rng, int d, int hi = 8)
{
    RatVector v;
    for (int i = 0; i < d; ++i)
        v.push_back(quarter(rng, 0, hi));
    return v;
}

// end point of a run along w from u with fractions in {1/4,...,1}, if the
// run stays nonnegative
inline std::optional<RatVector> quarter_run(std::mt19937_64& rng, const std::vector<IntVector>& w, RatVector u)
{
    for (auto& a : w) {
        u = vec_affine(u, quarter(rng, 1, 4), a);
        if (!vec_nonneg(u))
            return std::nullopt;
    }
    return u;
}

inline void check_pump_point(const PumpRelation& rel, const std::set<std::pair<std::vector<IntVector>, std::vector<IntVector>>>& ps,
                             const RatVector& u, const RatVector& v, const RatVector& up, const RatVector& vp,
                             PumpStats& st)
{
    bool s = lra::is_sat(rel.formula(const_vars(u), const_vars(v), const_vars(up), const_vars(vp), "pc")).status ==
             lra::Status::Sat;
    bool wf = pump_feasible(ps, u, v, up, vp);
    ++st.points;
    st.feasible += wf;
    if (wf && !s)
        ++st.violations;
    if (s && !wf)
        ++st.unconfirmed;
}

inline PumpStats pump_campaign(std::uint64_t seed, int grammars, int maxLen = 8)
{
    std::mt19937_64 rng(seed);
    PumpStats st;
    while (st.grammars < grammars) {
        std::uniform_int_distribution<int> dd(1, 2), nl(1, 2), nn(2, 4);
        int d = dd(rng);
        std::vector<IntVector> letters;
        for (int k = nl(rng); k > 0; --k) {
            IntVector a = testgen::random_vec(rng, d);
            if (!is_zero(a) && std::find(letters.begin(), letters.end(), a) == letters.end())
                letters.push_back(a);
        }
        if (letters.empty())
            continue;
        VectorGrammar g = to_cnf(testgen::random_grammar(rng, nn(rng), letters, 3, false));
        if (g.num_nts() == 0 || g.num_nts() > 8)
            continue;
        std::uniform_int_distribution<int> pick(0, g.num_nts() - 1);
        int A = pick(rng);
        auto ps = oracle::pumps(g, A, maxLen);
        if (ps.size() < 2)
            continue;
        PumpRelation rel(g, A);
        ++st.grammars;
        std::vector<std::pair<std::vector<IntVector>, std::vector<IntVector>>> list(ps.begin(), ps.end());
        std::uniform_int_distribution<std::size_t> pp(0, list.size() - 1);
        for (int t = 0; t < 6; ++t) {
            auto& [w, wp] = list[pp(rng)];
            RatVector u = quarter_point(rng, d), up = quarter_point(rng, d);
            auto v = quarter_run(rng, w, u);
            auto vp = quarter_run(rng, wp, up);
            if (v && vp)
                check_pump_point(rel, ps, u, *v, up, *vp, st);
        }
        for (int t = 0; t < 6; ++t)
            check_pump_point(rel, ps, quarter_point(rng, d), quarter_point(rng, d), quarter_point(rng, d),
                             quarter_point(rng, d), st);
    }
    return st;
}

// truth table of the (1)^n A (-1)^n pump against the closed form and the
// per-word runs, over all grid points with values in {0,1/2,1,3/2}
struct TableStats {
    int points = 0;
    int mismatchClosedForm = 0;
    int violations = 0;
};

inline VectorGrammar balanced_pump_grammar()
{
    VectorGrammar g;
    g.dim = 1;
    int one = g.letter(int_vec({1})), minus = g.letter(int_vec({-1}));
    int A = g.add_nt("A"), B = g.add_nt("B"), X = g.add_nt("X"), Y = g.add_nt("Y");
    g.start = A;
    g.add(A, {N(X), N(B)});
    g.add(B, {N(A), N(Y)});
    g.add(X, {T(one)});
    g.add(Y, {T(minus)});
    return g;
}

inline TableStats balanced_pump_table()
{
    VectorGrammar g = balanced_pump_grammar();
    PumpRelation rel(g, 0);
    std::set<std::pair<std::vector<IntVector>, std::vector<IntVector>>> ps;
    for (int n = 0; n <= 4; ++n)
        ps.emplace(std::vector<IntVector>(n, int_vec({1})), std::vector<IntVector>(n, int_vec({-1})));
    TableStats st;
    std::vector<Rational> vals;
    for (int k = 0; k < 4; ++k)
        vals.push_back(make_rational(k, 2));
    for (auto& u : vals)
        for (auto& v : vals)
            for (auto& up : vals)
                for (auto& vp : vals) {
                    RatVector U{u}, V{v}, UP{up}, VP{vp};
                    bool s = lra::is_sat(rel.formula(const_vars(U), const_vars(V), const_vars(UP), const_vars(VP), "bt"))
                                 .status == lra::Status::Sat;
                    bool closed = (v > u && up > vp) || (v == u && up == vp);
                    bool wf = pump_feasible(ps, U, V, UP, VP);
                    ++st.points;
                    st.mismatchClosedForm += s != closed;
                    st.violations += wf && !s;
                }
    return st;
}

struct OracleStats {
    int instances = 0;
    int disagreements = 0;
    int positives = 0;
    int witnessFailures = 0;
};

inline bool oracle_decides(const Machine& m, const Config& c0, const Config& c1, bool cover, int maxLen)
{
    bool found = false;
    oracle::for_each_control_path(m, c0.state, c0.stack, maxLen, [&](const oracle::ControlPath& p) {
        if (found || p.finalState != c1.state || (m.model == Model::Qpvass && p.finalStack != c1.stack))
            return;
        std::vector<IntVector> w;
        for (int r : p.rules)
            w.push_back(m.rules[r].update);
        found = oracle::word_feasible(w, c0.values, c1.values, cover, "ow");
    });
    return found;
}

// Random machines with a finite control language and quarter-grid
// endpoints. Even instances have an acyclic state graph; odd ones may have
// cycles and are kept only when no control path reaches length 7, so the
// stack bounds every run and the oracle's bound of 6 is exhaustive. Half of
// the targets are end points of sampled runs so both verdicts occur.
inline OracleStats oracle_campaign(std::uint64_t seed, int instances, int jobs = 1)
{
    std::mt19937_64 rng(seed);
    OracleStats st;
    SolverOptions opt;
    opt.jobs = jobs;
    while (st.instances < instances) {
        bool cyclic = st.instances % 2 == 1;
        std::uniform_int_distribution<int> ns(2, 4), nsym(cyclic ? 1 : 0, 2), dd(1, 2), nr(2, cyclic ? 9 : 7),
            coin(0, 1);
        int states = ns(rng), symbols = nsym(rng), d = dd(rng);
        Machine m = testgen::random_machine(rng, states, symbols, d, nr(rng), !cyclic);
        std::uniform_int_distribution<int> sym(0, std::max(symbols - 1, 0)), st0(0, states - 1);
        Config c0{0, {}, quarter_point(rng, d)};
        for (int k = cyclic ? coin(rng) + coin(rng) : coin(rng); symbols > 0 && k > 0; --k)
            c0.stack.push_back(sym(rng));
        if (cyclic) {
            bool bounded = true;
            oracle::for_each_control_path(m, c0.state, c0.stack, 7, [&](const oracle::ControlPath& p) {
                bounded = bounded && p.rules.size() < 7;
            });
            if (!bounded)
                continue;
        }
        Config c1{st0(rng), {}, quarter_point(rng, d)};
        if (coin(rng)) {
            // end point of a random control path with quarter fractions
            std::vector<oracle::ControlPath> paths;
            oracle::for_each_control_path(m, c0.state, c0.stack, 6, [&](const oracle::ControlPath& p) { paths.push_back(p); });
            auto& p = paths[std::uniform_int_distribution<std::size_t>(0, paths.size() - 1)(rng)];
            std::vector<IntVector> w;
            for (int r : p.rules)
                w.push_back(m.rules[r].update);
            auto v = quarter_run(rng, w, c0.values);
            if (!v)
                continue;
            c1 = Config{p.finalState, p.finalStack, *v};
        } else if (symbols > 0 && coin(rng)) {
            c1.stack.push_back(sym(rng));
        }
        if (m.model == Model::Qvass)
            c1.stack.clear();
        ++st.instances;
        for (bool cover : {false, true}) {
            bool expect = oracle_decides(m, c0, c1, cover, 6);
            Verdict v = cover ? decide_cover(m, c0, c1, opt) : decide_reach(m, c0, c1, opt);
            bool got = is_positive(v.outcome);
            if (v.outcome == Outcome::Timeout || got != expect)
                ++st.disagreements;
            st.positives += got;
            if (got && !v.witness)
                ++st.witnessFailures;
        }
    }
    return st;
}

// S -> X S | X: the nonempty concatenations of words of X
inline VectorGrammar plus_closure(const VectorGrammar& x)
{
    VectorGrammar g = x;
    int S = g.add_nt("S");
    g.add(S, {N(x.start), N(S)});
    g.add(S, {N(x.start)});
    g.start = S;
    return trim(g);
}

// every ordering of every nonempty subset of the letters
inline std::vector<std::vector<IntVector>> orders_of(const std::vector<IntVector>& letters)
{
    std::vector<std::vector<IntVector>> out;
    int n = static_cast<int>(letters.size());
    for (int mask = 1; mask < (1 << n); ++mask) {
        std::vector<IntVector> sub;
        for (int i = 0; i < n; ++i)
            if (mask >> i & 1)
                sub.push_back(letters[i]);
        std::sort(sub.begin(), sub.end());
        do
            out.push_back(sub);
        while (std::next_permutation(sub.begin(), sub.end()));
    }
    return out;
}

struct SynthStats {
    int points = 0;
    int sat = 0;
    int wordFeasible = 0;
    int violations = 0;     // word-feasible but UNSAT
    int replayFailures = 0; // synthesized run not in the language or off target
};

// Letter-uniform semigroups K+ of random grammars against runs along their
// words of length <= 5; every SAT point is synthesized and replayed.
inline SynthStats synthesis_campaign(std::uint64_t seed, int grammars)
{
    std::mt19937_64 rng(seed);
    SynthStats st;
    for (int i = 0; i < grammars; ++i) {
        std::uniform_int_distribution<int> d(1, 3), nl(1, 3), nn(1, 3);
        int dim = d(rng);
        std::vector<IntVector> letters;
        for (int k = nl(rng); k > 0; --k) {
            IntVector a = testgen::random_vec(rng, dim);
            if (std::find(letters.begin(), letters.end(), a) == letters.end() && !is_zero(a))
                letters.push_back(a);
        }
        if (letters.empty())
            continue;
        VectorGrammar base = testgen::random_grammar(rng, nn(rng), letters, 3, false);
        if (is_empty(base))
            continue;
        VectorGrammar g = plus_closure(base);
        auto words = oracle::grammar_words(g, 5);
        for (auto& of : orders_of(letters))
            for (auto& ob : orders_of(of)) {
                if (ob.size() != of.size())
                    continue;
                auto spec = SemigroupSpec::make(g, of, ob);
                if (is_empty(spec.grammar))
                    continue;
                VectorNfa fa = first_order_nfa(of), la = last_order_nfa(ob);
                for (int t = 0; t < 3; ++t) {
                    RatVector u = testgen::random_point(rng, dim, 3, 4);
                    RatVector v = testgen::random_point(rng, dim, 3, 4);
                    if (t == 0) {
                        v = u;
                        for (auto& a : of)
                            v = vec_affine(v, testgen::random_rat(rng, 3, 4) + make_rational(1, 4), a);
                        if (!vec_nonneg(v))
                            continue;
                    }
                    ++st.points;
                    bool s = lra::is_sat(semigroup_reach_formula(spec, const_vars(u), const_vars(v), "t.r")).status ==
                             lra::Status::Sat;
                    st.sat += s;
                    bool wf = false;
                    for (auto& w : words)
                        if (fa.accepts(w) && la.accepts(w) && oracle::word_feasible(w, u, v, false)) {
                            wf = true;
                            break;
                        }
                    st.wordFeasible += wf;
                    st.violations += wf && !s;
                    if (s) {
                        try {
                            auto r = synthesize_run(spec, u, v);
                            if (!member(spec.grammar, r.word) || replay_word(u, r) != v)
                                ++st.replayFailures;
                        } catch (const std::exception&) {
                            ++st.replayFailures;
                        }
                    }
                }
            }
    }
    return st;
}

// Exhaustive BFS over PDA configurations counting runs with multiplicity.
// The counter is deterministic and its end state has no successors, so the
// frontier dies out and the count is exact.
struct PdaBfs {
    long runsToEnd = 0;
    long runLength = -1;
    std::size_t maxDepth = 0;
    bool exhausted = false;
};

inline PdaBfs pda_bfs(const PdaCounter& pc, long maxLevels)
{
    PdaBfs out;
    std::map<Config, long> level{{pc.start, 1}};
    for (long len = 0; len <= maxLevels; ++len) {
        if (level.empty()) {
            out.exhausted = true;
            break;
        }
        std::map<Config, long> next;
        for (auto& [c, mult] : level) {
            out.maxDepth = std::max(out.maxDepth, c.stack.size());
            if (c == pc.end) {
                out.runsToEnd += mult;
                out.runLength = len;
            }
            for (std::size_t r = 0; r < pc.pda.rules.size(); ++r) {
                try {
                    next[step(pc.pda, c, static_cast<int>(r), Rational(1))] += mult;
                } catch (const StepError&) {
                }
            }
        }
        level = std::move(next);
    }
    return out;
}

struct GadgetStats {
    int configs = 0;
    int wrongPost = 0;        // forced run did not land on the stated post-state
    int acceptedPerturbed = 0; // an off-fraction step was accepted
};

inline Rational dyadic(std::mt19937_64& rng, int bits, const Rational& hi)
{
    Integer den = pow2(bits);
    Integer top = Integer(hi * Rational(den));
    std::uniform_int_distribution<long> k(0, top.get_si());
    return make_rational(Integer(k(rng)), den);
}

// Fires the two rules of a gadget with forced fractions, checks the post
// state, then checks that perturbing either fraction is rejected.
inline void gadget_trial(const Fragment& f, const Config& c, const RatVector& expect, std::mt19937_64& rng,
                         GadgetStats& st)
{
    ++st.configs;
    const Machine& m = f.machine;
    FiringSequence seq = simulate_path(m, c, 2);
    try {
        Config end = check_run(m, c, seq);
        if (end.state != f.to || end.values != expect)
            ++st.wrongPost;
    } catch (const StepError&) {
        ++st.wrongPost;
    }
    std::uniform_int_distribution<int> which(0, 1), sign(0, 1), bits(3, 10);
    for (int t = 0; t < 4; ++t) {
        FiringSequence bad = seq;
        Rational eps = pow2_inverse(bits(rng));
        auto& s = bad[which(rng)];
        s.fraction += sign(rng) ? eps : -eps;
        if (sgn(s.fraction) <= 0 || s.fraction > 1)
            continue;
        try {
            check_run(m, c, bad);
            ++st.acceptedPerturbed;
        } catch (const StepError&) {
        }
    }
}

// Add, Doub and Halve, plus the increment and doubling gadgets of the TCM
// translation, each on `n` random good configurations.
inline GadgetStats gadget_campaign(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    GadgetStats st;
    Fragment add = gadget_add(0, 1, 2), doub = gadget_double(0, 2), halve = gadget_halve(0, 2);
    for (int i = 0; i < n; ++i) {
        Rational x = dyadic(rng, 8, Rational(1, 2));
        Rational s = dyadic(rng, 8, Rational(1, 2));
        if (sgn(s) == 0)
            s = pow2_inverse(8);
        gadget_trial(add, Config{add.from, {}, {x, s, 0}}, {x + s, s, 0}, rng, st);

        Rational y = dyadic(rng, 8, Rational(1, 2));
        if (sgn(y) == 0)
            y = Rational(1, 8);
        gadget_trial(doub, Config{doub.from, {}, {y, 0, 0}}, {2 * y, 0, 0}, rng, st);

        Rational z = dyadic(rng, 8, Rational(1));
        if (sgn(z) == 0)
            z = Rational(1, 2);
        gadget_trial(halve, Config{halve.from, {}, {z, 0, 0}}, {z / 2, 0, 0}, rng, st);
    }
    return st;
}

// The TCM increment and doubling gadgets inside tcm_to_ivass: each is fired
// from g(C) and must land on g(C').
inline GadgetStats tcm_gadget_campaign(std::uint64_t seed, int n)
{
    using namespace tcm_counter;
    std::mt19937_64 rng(seed);
    GadgetStats st;
    Machine t;
    t.model = Model::Tcm;
    t.dim = 2;
    t.add_state("a");
    t.add_state("b");
    t.initial = 0;
    t.final = 1;
    for (auto op : {TcmOp::Inc0, TcmOp::Inc1, TcmOp::Double0, TcmOp::Double1})
        t.add_tcm_rule(0, 1, op);
    TcmEncoding enc = tcm_to_ivass(t, 8);
    const Machine& c = enc.inst.machine;
    Rational u = pow2_inverse(8);
    std::uniform_int_distribution<int> val(0, 127), pick(0, 3);
    for (int i = 0; i < n; ++i) {
        int r = pick(rng);
        Integer v0 = val(rng), v1 = val(rng);
        Config g{0, {}, {Rational(v0) * u, Rational(v1) * u, u, 0, Rational(1, 8), 1}};
        Integer w0 = v0, w1 = v1;
        switch (t.rules[r].tcmOp) {
        case TcmOp::Inc0: w0 += 1; break;
        case TcmOp::Inc1: w1 += 1; break;
        case TcmOp::Double0: w0 *= 2; break;
        case TcmOp::Double1: w1 *= 2; break;
        case TcmOp::Nop: break;
        }
        RatVector expect{Rational(w0) * u, Rational(w1) * u, u, 0, Rational(1, 8), 1};
        auto& gd = enc.gadget[r];
        bool zero = (t.rules[r].tcmOp == TcmOp::Double0 && v0 == 0) || (t.rules[r].tcmOp == TcmOp::Double1 && v1 == 0);
        int b = zero ? gd[2] : gd[0], e = zero ? gd[3] : gd[1];
        ++st.configs;
        Config mid = step(c, g, b, forced_fraction(c.rules[b], g));
        Config end = step(c, mid, e, forced_fraction(c.rules[e], mid));
        if (end.state != 1 || end.values != expect)
            ++st.wrongPost;
        if (zero)
            continue;
        // off-fraction first step
        Rational a = forced_fraction(c.rules[b], g) + u / 4;
        try {
            Config m2 = step(c, g, b, a);
            step(c, m2, e, forced_fraction(c.rules[e], m2));
            ++st.acceptedPerturbed;
        } catch (const StepError&) {
        }
    }
    return st;
}

struct TripleStats {
    int trials = 0;
    int wrongExact = 0;   // full fractions did not give the lifted post-state with ctrl+2
    int ctrlTooHigh = 0;  // a deviating run still reached ctrl+2
};

// The complement/ctrl triple for random rules: with fractions (a,1,1) it
// lands on G(C')_{ctrl+2}; with a middle or last fraction below 1 the ctrl
// gain stays below 2.
inline TripleStats triple_campaign(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    TripleStats st;
    for (int i = 0; i < n; ++i) {
        RunLengthInstance src;
        Machine& c = src.machine;
        c.model = Model::IvassRl;
        c.dim = 3;
        c.add_state("q");
        c.add_state("q'");
        // x += a, y -= a with y tested: the fraction is forced to y
        c.add_rule(0, 1, int_vec({1, -1, 0}), StackOp::None, -1, {1});
        Rational y = dyadic(rng, 6, Rational(1, 2));
        Rational x = dyadic(rng, 6, Rational(1, 2));
        if (sgn(y) == 0)
            y = Rational(1, 4);
        src.init = Config{0, {}, {x, y, 0}};
        src.fin = Config{1, {}, {x + y, 0, 0}};
        src.steps = 1;
        ComplementEncoding enc = ivass_to_cvassrl(src);
        const Machine& m = enc.inst.machine;
        ++st.trials;
        FiringSequence seq = enc.translate({{y, 0}});
        try {
            Config end = check_run(m, enc.inst.init, seq);
            if (!(end == enc.inst.fin))
                ++st.wrongExact;
        } catch (const StepError&) {
            ++st.wrongExact;
        }
        // a wrong first fraction cannot be completed with full middle and last steps
        FiringSequence off = seq;
        off[0].fraction = y + pow2_inverse(8) <= 1 && sgn(y) > 0 ? Rational(y + pow2_inverse(8)) : Rational(y / 2);
        try {
            check_run(m, enc.inst.init, off);
            ++st.ctrlTooHigh;
        } catch (const StepError&) {
        }
        std::uniform_int_distribution<int> which(1, 2), num(1, 63);
        FiringSequence low = seq;
        low[which(rng)].fraction = make_rational(num(rng), 64);
        try {
            Config end = check_run(m, enc.inst.init, low);
            if (end.values[enc.ctrl()] >= 2)
                ++st.ctrlTooHigh;
        } catch (const StepError&) {
        }
    }
    return st;
}

struct LraStats {
    int formulas = 0;
    int sat = 0;
    int disagreements = 0;
    int badModels = 0; // SAT model on which the formula evaluates to false
};

// Random and/or formulas with up to 8 variables and 12 atoms: the simplex
// against Fourier-Motzkin over the full DNF.
inline LraStats lra_campaign(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    LraStats st;
    std::uniform_int_distribution<int> nv(1, 8), na(1, 12);
    for (int i = 0; i < n; ++i) {
        lra::Formula f = testgen::random_formula(rng, nv(rng), na(rng), 3);
        auto r = lra::is_sat(f);
        bool got = r.status == lra::Status::Sat;
        ++st.formulas;
        st.sat += got;
        st.disagreements += got != oracle::formula_sat(f);
        if (got && !lra::eval(f, r.model))
            ++st.badModels;
    }
    return st;
}

} // namespace campaign
