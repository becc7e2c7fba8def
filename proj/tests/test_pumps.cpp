#include <doctest.h>

#include "campaigns.hpp"

#include <cpvass/pumps.hpp>

using namespace cpv;

namespace {

std::set<std::vector<IntVector>> words_of(const VectorGrammar& g, int maxLen)
{
    std::set<std::vector<IntVector>> out;
    for (auto& w : enumerate_words(g, maxLen))
        out.insert(word_vectors(g, w));
    return out;
}

bool sat(const lra::Formula& f) { return lra::is_sat(f).status == lra::Status::Sat; }

} // namespace

TEST_CASE("semigroup_of_pumps without recursion is trivial")
{
    VectorGrammar g;
    g.dim = 1;
    int one = g.letter(int_vec({1})), minus = g.letter(int_vec({-1}));
    int A = g.add_nt("A"), X = g.add_nt("X"), Y = g.add_nt("Y");
    g.start = A;
    g.add(A, {N(X), N(Y)});
    g.add(X, {T(one)});
    g.add(Y, {T(minus)});
    VectorGrammar k = semigroup_of_pumps(g, A);
    CHECK(words_of(k, 6) == std::set<std::vector<IntVector>>{{}});
    PumpRelation rel(g, A);
    CHECK(rel.trivial());
    auto x = const_vars(rat_vec({"1"})), y = const_vars(rat_vec({"2"}));
    CHECK(sat(rel.formula(x, x, y, y, "t")));
    CHECK_FALSE(sat(rel.formula(x, y, y, y, "t")));
}

TEST_CASE("semigroup_of_pumps on the balanced pump")
{
    VectorGrammar g = campaign::balanced_pump_grammar();
    VectorGrammar k = semigroup_of_pumps(g, 0);
    CHECK(k.dim == 2);
    IntVector f = int_vec({1, 0}), b = int_vec({0, 1});
    std::set<std::vector<IntVector>> expect{{}, {f, b}, {f, b, f, b}};
    CHECK(words_of(k, 4) == expect);
    // closure under concatenation on bounded samples
    auto ws = words_of(k, 6);
    for (auto& x : ws)
        for (auto& y : ws) {
            auto xy = x;
            xy.insert(xy.end(), y.begin(), y.end());
            CHECK(member(k, xy));
        }
    VectorGrammar bad = g;
    bad.add(0, {N(0), N(1), N(2)});
    CHECK_THROWS_AS(semigroup_of_pumps(bad, 0), std::invalid_argument);
}

TEST_CASE("doubled grammar is closed under concatenation on random grammars")
{
    std::mt19937_64 rng(61);
    int tested = 0;
    for (int i = 0; i < 200 && tested < 30; ++i) {
        VectorGrammar g = to_cnf(testgen::random_grammar(rng, 3, {int_vec({1}), int_vec({-1})}, 3, false));
        if (g.num_nts() < 2)
            continue;
        VectorGrammar k = semigroup_of_pumps(g, 1 + static_cast<int>(rng() % (g.num_nts() - 1)));
        auto ws = words_of(k, 4);
        if (ws.size() < 2)
            continue;
        ++tested;
        std::vector<std::vector<IntVector>> list(ws.begin(), ws.end());
        std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
        for (int t = 0; t < 100; ++t) {
            auto xy = list[pick(rng)];
            auto& y = list[pick(rng)];
            xy.insert(xy.end(), y.begin(), y.end());
            CHECK(member(k, xy));
        }
    }
    CHECK(tested > 5);
}

TEST_CASE("pump formula on the balanced pump matches its closed form")
{
    auto st = campaign::balanced_pump_table();
    CHECK(st.points == 256);
    CHECK(st.mismatchClosedForm == 0);
    CHECK(st.violations == 0);
}

TEST_CASE("pump formula against explicit pumps on random grammars")
{
    auto st = campaign::pump_campaign(71, 15);
    CHECK(st.grammars == 15);
    CHECK(st.violations == 0);
    CHECK(st.feasible > 0);
    MESSAGE("points " << st.points << ", feasible " << st.feasible << ", unconfirmed " << st.unconfirmed);
}
