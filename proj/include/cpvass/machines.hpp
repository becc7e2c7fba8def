#pragma once

#include "numerics.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cpv {

enum class Model { Qvass, Qpvass, IvassRl, Tcm };
enum class StackOp { None, Push, Pop };
enum class TcmOp { Inc0, Inc1, Double0, Double1, Nop };

inline const char* model_name(Model m)
{
    switch (m) {
    case Model::Qvass: return "qvass";
    case Model::Qpvass: return "qpvass";
    case Model::IvassRl: return "ivass_rl";
    case Model::Tcm: return "tcm";
    }
    return "?";
}

inline const char* tcm_op_name(TcmOp op)
{
    switch (op) {
    case TcmOp::Inc0: return "inc0";
    case TcmOp::Inc1: return "inc1";
    case TcmOp::Double0: return "double0";
    case TcmOp::Double1: return "double1";
    case TcmOp::Nop: return "nop";
    }
    return "?";
}

struct Rule {
    std::string id;
    int from = 0;
    int to = 0;
    IntVector update;
    StackOp op = StackOp::None;
    int symbol = -1;
    std::vector<int> zeroTests; // 0-based counter indices, IVASS_RL only
    TcmOp tcmOp = TcmOp::Nop;
};

// One struct covers all four models; `model` selects the step semantics.
// For TCM the dimension is always 2 and `initial`/`final` name q_in and q_f.
struct Machine {
    Model model = Model::Qvass;
    int dim = 0;
    std::vector<std::string> states;
    std::vector<std::string> stackAlphabet;
    std::vector<Rule> rules;
    int initial = -1;
    int final = -1;

    int add_state(const std::string& name)
    {
        states.push_back(name);
        return static_cast<int>(states.size()) - 1;
    }

    int add_symbol(const std::string& name)
    {
        stackAlphabet.push_back(name);
        return static_cast<int>(stackAlphabet.size()) - 1;
    }

    int state_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == name)
                return static_cast<int>(i);
        return -1;
    }

    int symbol_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < stackAlphabet.size(); ++i)
            if (stackAlphabet[i] == name)
                return static_cast<int>(i);
        return -1;
    }

    int rule_index(const std::string& id) const
    {
        for (std::size_t i = 0; i < rules.size(); ++i)
            if (rules[i].id == id)
                return static_cast<int>(i);
        return -1;
    }

    int add_rule(int from, int to, IntVector update, StackOp op = StackOp::None, int symbol = -1,
                 std::vector<int> zeroTests = {})
    {
        Rule r;
        r.id = "r" + std::to_string(rules.size());
        r.from = from;
        r.to = to;
        r.update = std::move(update);
        r.op = op;
        r.symbol = symbol;
        r.zeroTests = std::move(zeroTests);
        rules.push_back(std::move(r));
        return static_cast<int>(rules.size()) - 1;
    }

    int add_tcm_rule(int from, int to, TcmOp op)
    {
        Rule r;
        r.id = "r" + std::to_string(rules.size());
        r.from = from;
        r.to = to;
        r.update = IntVector(2);
        r.tcmOp = op;
        rules.push_back(std::move(r));
        return static_cast<int>(rules.size()) - 1;
    }

    void validate() const
    {
        int n = static_cast<int>(states.size());
        if (model == Model::Tcm) {
            if (dim != 2)
                throw std::invalid_argument("TCM must have dimension 2");
            if (initial < 0 || initial >= n || final < 0 || final >= n)
                throw std::invalid_argument("TCM initial/final state undeclared");
        }
        std::set<std::string> ids;
        for (auto& r : rules) {
            if (!ids.insert(r.id).second)
                throw std::invalid_argument("duplicate rule id " + r.id);
            if (r.from < 0 || r.from >= n || r.to < 0 || r.to >= n)
                throw std::invalid_argument("rule " + r.id + " uses an undeclared state");
            if (static_cast<int>(r.update.size()) != dim)
                throw std::invalid_argument("rule " + r.id + " update has wrong length");
            if (r.op != StackOp::None) {
                if (model != Model::Qpvass)
                    throw std::invalid_argument("rule " + r.id + ": stack effect on a stackless model");
                if (r.symbol < 0 || r.symbol >= static_cast<int>(stackAlphabet.size()))
                    throw std::invalid_argument("rule " + r.id + ": undeclared stack symbol");
            }
            for (int z : r.zeroTests) {
                if (model != Model::IvassRl)
                    throw std::invalid_argument("rule " + r.id + ": zero test outside IVASS_RL");
                if (z < 0 || z >= dim)
                    throw std::invalid_argument("rule " + r.id + ": zero test out of range");
            }
        }
    }
};

struct Config {
    int state = 0;
    std::vector<int> stack; // top-first
    RatVector values;

    bool operator==(const Config& o) const
    {
        return state == o.state && stack == o.stack && values == o.values;
    }
    bool operator<(const Config& o) const
    {
        if (state != o.state)
            return state < o.state;
        if (stack != o.stack)
            return stack < o.stack;
        return values < o.values;
    }
};

struct Step {
    Rational fraction;
    int rule = 0;
};
using FiringSequence = std::vector<Step>;

enum class StepErrorKind {
    FractionOutOfRange,
    WrongState,
    NegativeCounter,
    OutOfUnitInterval,
    ZeroTestFailed,
    StackMismatch,
    BadRule,
};

inline const char* step_error_name(StepErrorKind k)
{
    switch (k) {
    case StepErrorKind::FractionOutOfRange: return "FractionOutOfRange";
    case StepErrorKind::WrongState: return "WrongState";
    case StepErrorKind::NegativeCounter: return "NegativeCounter";
    case StepErrorKind::OutOfUnitInterval: return "OutOfUnitInterval";
    case StepErrorKind::ZeroTestFailed: return "ZeroTestFailed";
    case StepErrorKind::StackMismatch: return "StackMismatch";
    case StepErrorKind::BadRule: return "BadRule";
    }
    return "?";
}

struct StepError : std::runtime_error {
    StepErrorKind kind;
    int stepIndex = -1;
    int coord = -1; // violating counter, or stack symbol for StackMismatch

    StepError(StepErrorKind k, const std::string& msg, int c = -1)
        : std::runtime_error(std::string(step_error_name(k)) + ": " + msg), kind(k), coord(c) {}
};

inline std::string config_str(const Machine& m, const Config& c)
{
    std::string s = "(" + m.states.at(c.state) + ",";
    if (c.stack.empty())
        s += "ε";
    for (int x : c.stack)
        s += m.stackAlphabet.at(x);
    return s + "," + vec_str(c.values) + ")";
}

inline Config step(const Machine& m, const Config& c, int ruleIndex, const Rational& alpha)
{
    if (ruleIndex < 0 || ruleIndex >= static_cast<int>(m.rules.size()))
        throw StepError(StepErrorKind::BadRule, "no rule " + std::to_string(ruleIndex));
    const Rule& r = m.rules[ruleIndex];
    if (c.state != r.from)
        throw StepError(StepErrorKind::WrongState,
                        "rule " + r.id + " leaves " + m.states[r.from] + " but config is at " + m.states[c.state]);
    Config n;
    n.state = r.to;
    if (m.model == Model::Tcm) {
        n.values = c.values;
        switch (r.tcmOp) {
        case TcmOp::Inc0: n.values[0] += 1; break;
        case TcmOp::Inc1: n.values[1] += 1; break;
        case TcmOp::Double0: n.values[0] *= 2; break;
        case TcmOp::Double1: n.values[1] *= 2; break;
        case TcmOp::Nop: break;
        }
        return n;
    }
    if (sgn(alpha) <= 0 || alpha > 1)
        throw StepError(StepErrorKind::FractionOutOfRange, "fraction " + rat_str(alpha) + " not in (0,1]");
    n.values = vec_affine(c.values, alpha, r.update);
    for (std::size_t i = 0; i < n.values.size(); ++i) {
        if (sgn(n.values[i]) < 0)
            throw StepError(m.model == Model::IvassRl ? StepErrorKind::OutOfUnitInterval : StepErrorKind::NegativeCounter,
                            "counter " + std::to_string(i) + " becomes " + rat_str(n.values[i]) + " under " + r.id,
                            static_cast<int>(i));
        if (m.model == Model::IvassRl && n.values[i] > 1)
            throw StepError(StepErrorKind::OutOfUnitInterval,
                            "counter " + std::to_string(i) + " becomes " + rat_str(n.values[i]) + " under " + r.id,
                            static_cast<int>(i));
    }
    for (int z : r.zeroTests)
        if (sgn(n.values[z]) != 0)
            throw StepError(StepErrorKind::ZeroTestFailed,
                            "counter " + std::to_string(z) + " is " + rat_str(n.values[z]) + " after " + r.id, z);
    switch (r.op) {
    case StackOp::None: n.stack = c.stack; break;
    case StackOp::Push:
        n.stack.reserve(c.stack.size() + 1);
        n.stack.push_back(r.symbol);
        n.stack.insert(n.stack.end(), c.stack.begin(), c.stack.end());
        break;
    case StackOp::Pop:
        if (c.stack.empty() || c.stack.front() != r.symbol)
            throw StepError(StepErrorKind::StackMismatch,
                            "rule " + r.id + " pops " + m.stackAlphabet[r.symbol], r.symbol);
        n.stack.assign(c.stack.begin() + 1, c.stack.end());
        break;
    }
    return n;
}

inline Config check_run(const Machine& m, const Config& c0, const FiringSequence& seq)
{
    Config c = c0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        try {
            c = step(m, c, seq[i].rule, seq[i].fraction);
        } catch (StepError& e) {
            e.stepIndex = static_cast<int>(i);
            throw;
        }
    }
    return c;
}

inline bool rule_enabled_control(const Config& c, const Rule& r)
{
    if (r.from != c.state)
        return false;
    if (r.op == StackOp::Pop)
        return !c.stack.empty() && c.stack.front() == r.symbol;
    return true;
}

// Fractions worth trying for a rule: a few fixed ones, the largest admissible
// one, and any fraction forced by a zero test.
inline std::vector<Rational> candidate_fractions(const Machine& m, const Config& c, const Rule& r, std::mt19937_64& rng)
{
    std::vector<Rational> out{Rational(1), Rational(1, 2), Rational(1, 3), Rational(1, 4)};
    std::uniform_int_distribution<int> den(1, 8);
    int q = den(rng);
    std::uniform_int_distribution<int> num(1, q);
    out.push_back(make_rational(num(rng), q));
    Rational amax(1);
    for (std::size_t i = 0; i < r.update.size(); ++i) {
        if (r.update[i] < 0) {
            Rational lim = c.values[i] / Rational(-r.update[i]);
            if (lim < amax)
                amax = lim;
        } else if (m.model == Model::IvassRl && r.update[i] > 0) {
            Rational lim = (Rational(1) - c.values[i]) / Rational(r.update[i]);
            if (lim < amax)
                amax = lim;
        }
    }
    if (sgn(amax) > 0)
        out.push_back(amax);
    for (int z : r.zeroTests)
        if (r.update[z] != 0) {
            Rational a = -c.values[z] / Rational(r.update[z]);
            if (sgn(a) > 0 && a <= 1)
                out.push_back(a);
        }
    return out;
}

struct ExploredRun {
    Config config;
    FiringSequence seq;
};

// Randomised forward exploration. Level i+1 draws samplesPerStep successors
// from level i. TCM levels are expanded exhaustively since fractions do not
// matter there. Every returned configuration is replayed through check_run.
inline std::vector<ExploredRun> bounded_explore_runs(const Machine& m, const Config& c0, int maxSteps,
                                                     int samplesPerStep, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<ExploredRun> all{{c0, {}}};
    std::set<Config> seen{c0};
    std::vector<ExploredRun> level{{c0, {}}};
    for (int depth = 1; depth <= maxSteps && !level.empty(); ++depth) {
        std::vector<ExploredRun> next;
        auto add = [&](ExploredRun&& run) {
            if (m.model == Model::Tcm) {
                Integer bound = pow2(static_cast<unsigned long>(depth));
                for (auto& v : run.config.values)
                    if (v > Rational(bound) && c0.values == RatVector(2))
                        throw std::logic_error("TCM counter exceeds 2^m");
            }
            if (seen.insert(run.config).second) {
                all.push_back(run);
                next.push_back(std::move(run));
            }
        };
        if (m.model == Model::Tcm) {
            for (auto& cur : level)
                for (std::size_t r = 0; r < m.rules.size(); ++r)
                    if (m.rules[r].from == cur.config.state) {
                        ExploredRun n{step(m, cur.config, static_cast<int>(r), Rational(1)), cur.seq};
                        n.seq.push_back({Rational(1), static_cast<int>(r)});
                        add(std::move(n));
                    }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, level.size() - 1);
            for (int s = 0; s < samplesPerStep; ++s) {
                const ExploredRun& cur = level[pick(rng)];
                std::vector<int> enabled;
                for (std::size_t r = 0; r < m.rules.size(); ++r)
                    if (rule_enabled_control(cur.config, m.rules[r]))
                        enabled.push_back(static_cast<int>(r));
                if (enabled.empty())
                    continue;
                int r = enabled[std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng)];
                auto fr = candidate_fractions(m, cur.config, m.rules[r], rng);
                Rational a = fr[std::uniform_int_distribution<std::size_t>(0, fr.size() - 1)(rng)];
                try {
                    ExploredRun n{step(m, cur.config, r, a), cur.seq};
                    n.seq.push_back({a, r});
                    add(std::move(n));
                } catch (const StepError&) {
                }
            }
        }
        level = std::move(next);
    }
    for (auto& run : all)
        if (!(check_run(m, c0, run.seq) == run.config))
            throw std::logic_error("exploration produced an uncertified configuration");
    return all;
}

inline std::vector<Config> bounded_explore(const Machine& m, const Config& c0, int maxSteps, int samplesPerStep,
                                           std::uint64_t seed)
{
    std::vector<Config> out;
    for (auto& r : bounded_explore_runs(m, c0, maxSteps, samplesPerStep, seed))
        out.push_back(r.config);
    std::sort(out.begin(), out.end());
    return out;
}

// The 2-counter Q+-PVASS used throughout as the running example.
inline Machine example_pvass()
{
    Machine m;
    m.model = Model::Qpvass;
    m.dim = 2;
    int q0 = m.add_state("q0"), q1 = m.add_state("q1"), q2 = m.add_state("q2"), q3 = m.add_state("q3");
    int a = m.add_symbol("a"), b = m.add_symbol("b");
    m.add_rule(q0, q1, int_vec({-1, 0}), StackOp::Push, a);
    m.add_rule(q0, q1, int_vec({0, -1}), StackOp::Push, b);
    m.add_rule(q1, q2, int_vec({0, 0}), StackOp::Pop, a);
    m.add_rule(q2, q1, int_vec({0, 1}), StackOp::Push, a);
    m.add_rule(q1, q3, int_vec({0, 0}), StackOp::Pop, b);
    m.add_rule(q3, q1, int_vec({1, 0}), StackOp::Push, b);
    const char* ids[] = {"r1", "r2", "pop_a", "push_a", "pop_b", "push_b"};
    for (int i = 0; i < 6; ++i)
        m.rules[i].id = ids[i];
    return m;
}

// The TCM that reaches (q2,1,1) in exactly two steps and nowhere else.
inline Machine example_tcm()
{
    Machine m;
    m.model = Model::Tcm;
    m.dim = 2;
    for (int i = 0; i < 6; ++i)
        m.add_state("q" + std::to_string(i));
    m.add_tcm_rule(0, 1, TcmOp::Inc0);
    m.add_tcm_rule(1, 2, TcmOp::Inc1);
    m.add_tcm_rule(2, 3, TcmOp::Double0);
    m.add_tcm_rule(3, 4, TcmOp::Inc0);
    m.add_tcm_rule(4, 5, TcmOp::Double1);
    m.add_tcm_rule(5, 2, TcmOp::Nop);
    m.initial = 0;
    m.final = 2;
    return m;
}

} // namespace cpv
