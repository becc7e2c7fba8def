#include <doctest.h>

#include <cpvass/machines.hpp>

using namespace cpv;

namespace {
Config cfg(int state, std::vector<int> stack, RatVector v) { return Config{state, std::move(stack), std::move(v)}; }
}

TEST_CASE("step on the running example")
{
    Machine m = example_pvass();
    Config c = step(m, cfg(0, {}, rat_vec({"1", "1"})), 0, make_rational(1, 2));
    CHECK(c == cfg(1, {0}, rat_vec({"1/2", "1"})));

    Config same = step(m, cfg(1, {0}, rat_vec({"1/3", "2"})), 2, Rational(1));
    CHECK(same.values == rat_vec({"1/3", "2"}));
    CHECK(same.stack.empty());

    CHECK_THROWS_AS(step(m, c, 0, Rational(1)), StepError);
    try {
        step(m, cfg(0, {}, rat_vec({"1", "1"})), 0, Rational(0));
    } catch (const StepError& e) {
        CHECK(e.kind == StepErrorKind::FractionOutOfRange);
    }
    try {
        step(m, cfg(1, {1}, rat_vec({"1", "1"})), 2, Rational(1));
        FAIL("pop of wrong symbol accepted");
    } catch (const StepError& e) {
        CHECK(e.kind == StepErrorKind::StackMismatch);
    }
}

TEST_CASE("check_run on the running example")
{
    Machine m = example_pvass();
    Config c0 = cfg(0, {}, rat_vec({"11/10", "6/10"}));
    FiringSequence seq{{make_rational(1, 10), 0}, {Rational(1), 2}, {make_rational(4, 10), 3}};
    CHECK(check_run(m, c0, seq) == cfg(1, {0}, rat_vec({"1", "1"})));
    CHECK(check_run(m, c0, {}) == c0);
    try {
        check_run(m, cfg(0, {}, rat_vec({"1/2", "1"})), {{Rational(1), 0}});
        FAIL("negative counter accepted");
    } catch (const StepError& e) {
        CHECK(e.kind == StepErrorKind::NegativeCounter);
        CHECK(e.stepIndex == 0);
        CHECK(e.coord == 0);
    }
}

TEST_CASE("TCM semantics")
{
    Machine t = example_tcm();
    Config c = step(t, cfg(2, {}, rat_vec({"3", "5"})), 2, Rational(1));
    CHECK(c == cfg(3, {}, rat_vec({"6", "5"})));
}

TEST_CASE("IVASS_RL zero tests and unit interval")
{
    Machine m;
    m.model = Model::IvassRl;
    m.dim = 2;
    int p = m.add_state("p");
    m.add_rule(p, p, int_vec({1, -1}), StackOp::None, -1, {1});
    Config c = step(m, cfg(0, {}, rat_vec({"1/4", "1/2"})), 0, make_rational(1, 2));
    CHECK(c.values == rat_vec({"3/4", "0"}));
    try {
        step(m, cfg(0, {}, rat_vec({"1/4", "1/2"})), 0, make_rational(1, 4));
        FAIL("zero test ignored");
    } catch (const StepError& e) {
        CHECK(e.kind == StepErrorKind::ZeroTestFailed);
    }
    try {
        step(m, cfg(0, {}, rat_vec({"3/4", "1"})), 0, Rational(1));
        FAIL("unit interval ignored");
    } catch (const StepError& e) {
        CHECK(e.kind == StepErrorKind::OutOfUnitInterval);
    }
}

TEST_CASE("bounded_explore")
{
    Machine m = example_pvass();
    Config c0 = cfg(0, {}, rat_vec({"1", "1"}));
    CHECK(bounded_explore(m, c0, 0, 100, 1) == std::vector<Config>{c0});
    auto reached = bounded_explore(m, c0, 3, 500, 42);
    CHECK(reached.size() > 5);
    bool sawQ1 = false;
    // after r1 nothing increments the first counter again, after r2 nothing
    // increments the second
    for (auto& c : reached)
        if (c.state == 1) {
            sawQ1 = true;
            REQUIRE_FALSE(c.stack.empty());
            CHECK(c.values[c.stack.back() == 0 ? 0 : 1] < 1);
        }
    CHECK(sawQ1);
    CHECK(bounded_explore(m, c0, 3, 500, 42) == reached);

    for (auto& c : bounded_explore(m, c0, 1, 200, 5))
        if (c.state == 1)
            CHECK(c.values[0] + c.values[1] < 2);
}

TEST_CASE("bounded_explore on the example TCM follows the unique run")
{
    Machine t = example_tcm();
    auto runs = bounded_explore_runs(t, cfg(0, {}, rat_vec({"0", "0"})), 10, 0, 1);
    CHECK(runs.size() == 11);
    for (std::size_t i = 0; i < runs.size(); ++i)
        CHECK(runs[i].seq.size() == i);
    CHECK(runs[2].config == cfg(2, {}, rat_vec({"1", "1"})));
    CHECK(runs[6].config == cfg(2, {}, rat_vec({"3", "2"})));
}

TEST_CASE("validate rejects malformed machines")
{
    Machine m = example_pvass();
    m.rules[0].update = int_vec({1});
    CHECK_THROWS(m.validate());
    Machine v;
    v.model = Model::Qvass;
    v.dim = 1;
    v.add_state("p");
    v.add_rule(0, 0, int_vec({1}), StackOp::None, -1, {0});
    CHECK_THROWS(v.validate());
}
