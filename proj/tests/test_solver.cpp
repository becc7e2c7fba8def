#include <doctest.h>

#include "campaigns.hpp"

#include <cpvass/solver.hpp>

#include <functional>

using namespace cpv;

namespace {

Config cfg(int state, std::vector<int> stack, RatVector values) { return Config{state, std::move(stack), std::move(values)}; }

// memoized count of pumpfree trees below nt given the labels above it
std::size_t count_trees(const VectorGrammar& g, int nt, std::uint64_t above,
                        std::map<std::pair<int, std::uint64_t>, std::size_t>& memo)
{
    auto key = std::make_pair(nt, above);
    if (auto it = memo.find(key); it != memo.end())
        return it->second;
    std::uint64_t with = above | (std::uint64_t(1) << nt);
    std::size_t total = 0;
    for (auto& p : g.prods) {
        if (p.lhs != nt)
            continue;
        std::size_t prod = 1;
        for (auto& s : p.rhs)
            if (!s.term)
                prod *= (with >> s.id & 1) ? 0 : count_trees(g, s.id, with, memo);
        total += prod;
    }
    return memo[key] = total;
}

std::size_t count_enumerated(const VectorGrammar& g)
{
    std::size_t n = 0;
    enumerate_pumpfree_trees(g, [&](const PumpfreeTree&) {
        ++n;
        return true;
    });
    return n;
}

void check_witness(const Machine& m, const Config& c0, const Config& c1, const Verdict& v, bool cover)
{
    REQUIRE(v.witness);
    Config end = check_run(m, c0, *v.witness);
    CHECK(end.state == c1.state);
    CHECK(end.stack == c1.stack);
    if (cover)
        CHECK(vec_geq(end.values, c1.values));
    else
        CHECK(end.values == c1.values);
}

} // namespace

TEST_CASE("enumerate_pumpfree_trees on small grammars")
{
    VectorGrammar one;
    one.dim = 1;
    one.start = one.add_nt("S");
    one.add(0, {T(one.letter(int_vec({1})))});
    CHECK(count_enumerated(one) == 1);

    VectorGrammar ab;
    ab.dim = 1;
    int a = ab.letter(int_vec({1})), b = ab.letter(int_vec({2}));
    int S = ab.add_nt("S"), A = ab.add_nt("A"), B = ab.add_nt("B");
    ab.start = S;
    ab.add(S, {N(A), N(B)});
    ab.add(A, {T(a)});
    ab.add(B, {T(b)});
    std::vector<PumpfreeTree> trees;
    enumerate_pumpfree_trees(ab, [&](const PumpfreeTree& t) {
        trees.push_back(t);
        return true;
    });
    REQUIRE(trees.size() == 1);
    CHECK(trees[0].nodes.size() == 3);

    std::mt19937_64 rng(83);
    for (int i = 0; i < 40; ++i) {
        VectorGrammar g = to_cnf(testgen::random_grammar(rng, 3, {int_vec({1}), int_vec({-1})}, 2, false));
        if (g.num_nts() == 0 || g.num_nts() > 12)
            continue;
        std::map<std::pair<int, std::uint64_t>, std::size_t> memo;
        CHECK(count_enumerated(g) == count_trees(g, g.start, 0, memo));
    }
}

TEST_CASE("tree_formula on a single letter")
{
    VectorGrammar g;
    g.dim = 2;
    g.start = g.add_nt("S");
    g.add(0, {T(g.letter(int_vec({1, -1})))});
    PumpfreeTree t;
    enumerate_pumpfree_trees(g, [&](const PumpfreeTree& x) {
        t = x;
        return false;
    });
    auto r = lra::is_sat(tree_formula(t, g, const_vars(rat_vec({"0", "1"})), const_vars(rat_vec({"1", "0"})), Mode::Reach));
    REQUIRE(r.status == lra::Status::Sat);
    CHECK(r.model.at(lra::var("a0")) == 1);
    CHECK(lra::is_sat(tree_formula(t, g, const_vars(rat_vec({"0", "1"})), const_vars(rat_vec({"2", "-1"})), Mode::Reach))
              .status == lra::Status::Unsat);
}

TEST_CASE("running example")
{
    Machine m = example_pvass();
    int q0 = 0, q1 = 1, a = 0;
    CHECK(decide_state_reach(m, cfg(q0, {}, rat_vec({"0", "0"})), q1).outcome == Outcome::StateUnreachable);
    CHECK(decide_state_reach(m, cfg(q0, {}, rat_vec({"1", "1"})), q1).outcome == Outcome::StateReachable);
    CHECK(decide_state_reach(m, cfg(q0, {}, rat_vec({"0", "0"})), q0).outcome == Outcome::StateReachable);

    Config c11 = cfg(q0, {}, rat_vec({"1", "1"}));
    Config half = cfg(q1, {a}, rat_vec({"1/2", "1/2"}));
    Verdict cov = decide_cover(m, c11, half);
    CHECK(cov.outcome == Outcome::Coverable);
    check_witness(m, c11, half, cov, true);
    CHECK(decide_cover(m, c11, cfg(q1, {a}, rat_vec({"1", "1"}))).outcome == Outcome::NotCoverable);

    Config src = cfg(q0, {}, rat_vec({"11/10", "6/10"}));
    Config dst = cfg(q1, {a}, rat_vec({"1", "1"}));
    Verdict r = decide_reach(m, src, dst);
    CHECK(r.outcome == Outcome::Reachable);
    check_witness(m, src, dst, r, false);
    REQUIRE(r.certificate);
    CHECK(r.certificate->verify());

    // from the zero vector no configuration at q1 is reachable
    for (auto& target : {cfg(q1, {a}, rat_vec({"0", "0"})), cfg(q1, {1}, rat_vec({"0", "0"})), dst})
        CHECK(decide_reach(m, cfg(q0, {}, rat_vec({"0", "0"})), target).outcome == Outcome::Unreachable);
    CHECK(decide_reach(m, src, src).outcome == Outcome::Reachable);
    CHECK(decide_cover(m, src, src).outcome == Outcome::Coverable);
}

TEST_CASE("verdicts agree with the per-word oracle on acyclic machines")
{
    auto st = campaign::oracle_campaign(89, 60);
    CHECK(st.instances == 60);
    CHECK(st.disagreements == 0);
    CHECK(st.witnessFailures == 0);
    CHECK(st.positives > 10);
}

TEST_CASE("parallel search gives the same answers")
{
    auto a = campaign::oracle_campaign(97, 15, 1);
    auto b = campaign::oracle_campaign(97, 15, 4);
    CHECK(b.disagreements == 0);
    CHECK(a.positives == b.positives);

    Machine m = example_pvass();
    Config src = cfg(0, {}, rat_vec({"11/10", "6/10"}));
    Config dst = cfg(1, {0}, rat_vec({"1", "1"}));
    SolverOptions opt;
    opt.jobs = 4;
    Verdict p = decide_reach(m, src, dst, opt), s = decide_reach(m, src, dst);
    CHECK(p.outcome == s.outcome);
    REQUIRE(p.witness);
    REQUIRE(s.witness);
    CHECK(p.witness->size() == s.witness->size());
    CHECK(p.certificate->tree == s.certificate->tree);
}

TEST_CASE("cover is monotone and state reachability matches cover of zero")
{
    std::mt19937_64 rng(101);
    int checked = 0;
    for (int i = 0; i < 40; ++i) {
        Machine m = testgen::random_machine(rng, 3, 2, 2, 6, true);
        Config c0{0, {}, campaign::quarter_point(rng, 2)};
        Config c1{2, {}, campaign::quarter_point(rng, 2)};
        if (is_positive(decide_cover(m, c0, c1).outcome)) {
            ++checked;
            Config lower = c1;
            for (auto& x : lower.values)
                x /= 2;
            CHECK(is_positive(decide_cover(m, c0, lower).outcome));
        }
        bool state = is_positive(decide_state_reach(m, c0, 2).outcome);
        bool any = false;
        std::vector<std::vector<int>> stacks{{}};
        for (int len = 1; len <= 3; ++len)
            for (std::size_t k = 0, n = stacks.size(); k < n; ++k)
                if (static_cast<int>(stacks[k].size()) == len - 1)
                    for (int s = 0; s < 2; ++s) {
                        auto x = stacks[k];
                        x.push_back(s);
                        stacks.push_back(x);
                    }
        for (auto& s : stacks)
            any = any || is_positive(decide_cover(m, c0, Config{2, s, {Rational(0), Rational(0)}}).outcome);
        CHECK(state == any);
    }
    CHECK(checked > 0);
}

TEST_CASE("unreachable verdicts are not contradicted by exploration")
{
    std::mt19937_64 rng(103);
    for (int i = 0; i < 30; ++i) {
        Machine m = testgen::random_machine(rng, 3, 1, 1, 5, false);
        Config c0{0, {}, campaign::quarter_point(rng, 1)};
        auto reached = bounded_explore(m, c0, 4, 6, 7 + i);
        std::uniform_int_distribution<std::size_t> pick(0, reached.size() - 1);
        for (int t = 0; t < 3; ++t) {
            Config target = reached[pick(rng)];
            SolverOptions opt;
            opt.timeout = std::chrono::milliseconds(5000);
            Verdict v = decide_reach(m, c0, target, opt);
            CHECK(v.outcome != Outcome::Unreachable);
        }
    }
}

TEST_CASE("stackless machines use the right-linear grammar")
{
    Machine m;
    m.model = Model::Qvass;
    m.dim = 1;
    m.add_state("p");
    m.add_state("q");
    m.add_rule(0, 0, int_vec({1}));
    m.add_rule(0, 1, int_vec({-2}));
    Config c0{0, {}, rat_vec({"0"})};
    Verdict v = decide_reach(m, c0, Config{1, {}, rat_vec({"1"})});
    CHECK(v.outcome == Outcome::Reachable);
    CHECK(decide_reach(m, c0, Config{1, {}, rat_vec({"0"})}).outcome == Outcome::Reachable);
    CHECK(decide_state_reach(m, c0, 1).outcome == Outcome::StateReachable);
    m.add_state("r");
    m.add_rule(1, 2, int_vec({-1}));
    CHECK(decide_state_reach(m, Config{1, {}, rat_vec({"0"})}, 2).outcome == Outcome::StateUnreachable);
    CHECK(decide_state_reach(m, Config{1, {}, rat_vec({"1/3"})}, 2).outcome == Outcome::StateReachable);
    CHECK_THROWS_AS(decide_reach(example_tcm(), Config{0, {}, rat_vec({"0", "0"})}, Config{0, {}, rat_vec({"0", "0"})}),
                    std::invalid_argument);
}
