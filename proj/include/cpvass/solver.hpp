#pragma once

#include "creach.hpp"
#include "grammar.hpp"
#include "lra.hpp"
#include "machines.hpp"
#include "pumps.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace cpv {

enum class Outcome { Reachable, Unreachable, Coverable, NotCoverable, StateReachable, StateUnreachable, Timeout };

inline const char* outcome_name(Outcome o)
{
    switch (o) {
    case Outcome::Reachable: return "REACHABLE";
    case Outcome::Unreachable: return "UNREACHABLE";
    case Outcome::Coverable: return "COVERABLE";
    case Outcome::NotCoverable: return "NOTCOVERABLE";
    case Outcome::StateReachable: return "STATE_REACHABLE";
    case Outcome::StateUnreachable: return "STATE_UNREACHABLE";
    case Outcome::Timeout: return "TIMEOUT";
    }
    return "?";
}

inline bool is_positive(Outcome o)
{
    return o == Outcome::Reachable || o == Outcome::Coverable || o == Outcome::StateReachable;
}

enum class Mode { Reach, Cover };

struct TreeNode {
    int nt = 0;
    int prod = -1; // index into the grammar's productions
    int parent = -1;
    std::vector<int> kids;
    bool pumpAttached = false;
    int pumpChoice = 0; // 0: identity, s+1: signature s
};

// Nodes in preorder; node 0 is the root.
struct PumpfreeTree {
    std::vector<TreeNode> nodes;

    bool has_active_pump() const
    {
        for (auto& n : nodes)
            if (n.pumpChoice != 0)
                return true;
        return false;
    }

    std::string dump(const VectorGrammar& g) const
    {
        std::ostringstream os;
        std::function<void(int, int)> go = [&](int i, int depth) {
            auto& n = nodes[i];
            auto& p = g.prods[n.prod];
            os << std::string(2 * depth, ' ') << g.ntNames[n.nt] << " ->";
            if (p.rhs.empty())
                os << " ε";
            for (std::size_t k = 0; k < p.rhs.size(); ++k)
                os << " " << (p.rhs[k].term ? vec_str(g.alphabet[p.rhs[k].id]) : g.ntNames[p.rhs[k].id]);
            if (n.pumpAttached)
                os << "  [pump " << n.pumpChoice << "]";
            os << "\n";
            for (int k : n.kids)
                go(k, depth + 1);
        };
        if (!nodes.empty())
            go(0, 0);
        return os.str();
    }
};

// Nonterminals A with A =>+ ...A... in a trimmed CNF grammar.
inline std::vector<bool> self_reachable(const VectorGrammar& g)
{
    int n = g.num_nts();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (auto& p : g.prods)
        for (auto& s : p.rhs)
            if (!s.term)
                reach[p.lhs][s.id] = true;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            if (reach[i][k])
                for (int j = 0; j < n; ++j)
                    if (reach[k][j])
                        reach[i][j] = true;
    std::vector<bool> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = reach[i][i];
    return out;
}

inline std::vector<std::vector<int>> productions_by_lhs(const VectorGrammar& g)
{
    std::vector<std::vector<int>> out(g.num_nts());
    for (std::size_t i = 0; i < g.prods.size(); ++i)
        out[g.prods[i].lhs].push_back(static_cast<int>(i));
    return out;
}

inline bool is_ancestor_label(const PumpfreeTree& t, int node, int nt)
{
    for (int i = node; i >= 0; i = t.nodes[i].parent)
        if (t.nodes[i].nt == nt)
            return true;
    return false;
}

// Every pumpfree derivation tree, in canonical order (leftmost expansion,
// productions in grammar order). The callback returns false to stop.
inline bool enumerate_pumpfree_trees(const VectorGrammar& g, const std::function<bool(const PumpfreeTree&)>& cb)
{
    if (g.num_nts() == 0)
        return true;
    auto byLhs = productions_by_lhs(g);
    auto selfRec = self_reachable(g);
    struct Pending {
        int nt, parent;
    };
    std::function<bool(PumpfreeTree&, std::vector<Pending>&)> go = [&](PumpfreeTree& t,
                                                                       std::vector<Pending>& todo) -> bool {
        if (todo.empty())
            return cb(t);
        Pending it = todo.back();
        todo.pop_back();
        for (int pi : byLhs[it.nt]) {
            auto& p = g.prods[pi];
            bool ok = true;
            for (auto& s : p.rhs)
                if (!s.term && (s.id == it.nt || (it.parent >= 0 && is_ancestor_label(t, it.parent, s.id))))
                    ok = false;
            if (!ok)
                continue;
            PumpfreeTree t2 = t;
            int id = static_cast<int>(t2.nodes.size());
            t2.nodes.push_back(TreeNode{it.nt, pi, it.parent, {}, static_cast<bool>(selfRec[it.nt]), 0});
            if (it.parent >= 0)
                t2.nodes[it.parent].kids.push_back(id);
            auto todo2 = todo;
            for (auto s = p.rhs.rbegin(); s != p.rhs.rend(); ++s)
                if (!s->term)
                    todo2.push_back({s->id, id});
            if (!go(t2, todo2))
                return false;
        }
        todo.push_back(it);
        return true;
    };
    PumpfreeTree t;
    std::vector<Pending> todo{{g.start, -1}};
    return go(t, todo);
}

// Builds the chain constraints of a tree in leaf order.
class ChainBuilder {
public:
    ChainBuilder(int d, VarVec start) : d_(d), point_(std::move(start)) {}

    void leaf(const IntVector& a, int tag)
    {
        int alpha = lra::var("a" + std::to_string(leaves_.size()));
        leaves_.push_back({tag, alpha});
        lra::Lin al = lra::Lin::of(alpha);
        add(lra::gt(al, lra::Lin(0)));
        add(lra::le(al, lra::Lin(1)));
        for (int i = 0; i < d_; ++i)
            if (sgn(a[i]) != 0) {
                point_[i] += al * Rational(a[i]);
                if (sgn(a[i]) < 0)
                    add(lra::ge(point_[i], lra::Lin(0)));
            }
    }

    void open_pump(int node)
    {
        VarVec p1 = make_vars("n" + std::to_string(node) + ".in", d_);
        open_.push_back({node, point_, p1});
        add(nonneg(p1));
        point_ = p1;
    }

    void close_pump(const PumpRelation& rel, int choice)
    {
        auto o = open_.back();
        open_.pop_back();
        VarVec p3 = make_vars("n" + std::to_string(o.node) + ".out", d_);
        add(rel.disjunct(static_cast<std::size_t>(choice), o.p0, o.p1, point_, p3, "n" + std::to_string(o.node)));
        point_ = p3;
    }

    void finish(const VarVec& target, Mode mode)
    {
        for (int i = 0; i < d_; ++i)
            add(mode == Mode::Reach ? lra::eq(point_[i], target[i]) : lra::ge(point_[i], target[i]));
    }

    void add(const lra::Formula& f)
    {
        if (f->kind == lra::Kind::False) {
            dead_ = true;
            return;
        }
        bool first = true;
        lra::for_each_conjunct(f, [&](const std::vector<lra::LinAtom>& atoms) {
            if (!first)
                throw std::logic_error("chain constraint is not a conjunction");
            first = false;
            atoms_.insert(atoms_.end(), atoms.begin(), atoms.end());
            return true;
        });
    }

    bool dead() const { return dead_; }
    const std::vector<lra::LinAtom>& atoms() const { return atoms_; }
    const std::vector<std::pair<int, int>>& leaves() const { return leaves_; }

private:
    struct Open {
        int node;
        VarVec p0, p1;
    };
    int d_;
    VarVec point_;
    std::vector<lra::LinAtom> atoms_;
    std::vector<std::pair<int, int>> leaves_; // (rule tag, fraction variable)
    std::vector<Open> open_;
    bool dead_ = false;
};

struct SolverOptions {
    std::size_t maxTrees = 2000000;
    std::optional<std::chrono::milliseconds> timeout;
    int jobs = 1;
    std::size_t signatureCap = 20000;
    int witnessSearchLength = 10;
};

struct Certificate {
    std::string tree;
    std::vector<lra::LinAtom> atoms;
    lra::Model model;

    bool verify() const
    {
        for (auto& a : atoms)
            if (!lra::eval_atom(a, model))
                return false;
        return true;
    }

    std::string dump() const
    {
        std::ostringstream os;
        os << "tree\n" << tree << "constraints\n";
        for (auto& a : atoms)
            os << "  " << lra::atom_str(a) << "\n";
        std::map<std::string, Rational> named;
        for (auto& [v, r] : model)
            named[lra::var_name(v)] = r;
        os << "model\n";
        for (auto& [n, r] : named)
            os << "  " << n << " = " << rat_str(r) << "\n";
        return os.str();
    }
};

struct Verdict {
    Outcome outcome = Outcome::Timeout;
    std::optional<FiringSequence> witness;
    std::optional<Certificate> certificate;
    std::size_t trees = 0;
    std::string note;
};

struct PumpWitnessUnsupported : std::runtime_error {
    PumpWitnessUnsupported() : std::runtime_error("witness extraction through active pumps is not supported") {}
};

inline FiringSequence extract_witness(const ChainBuilder& chain, const lra::Model& model, bool activePumps)
{
    if (activePumps)
        throw PumpWitnessUnsupported();
    FiringSequence seq;
    for (auto& [tag, alpha] : chain.leaves()) {
        if (tag < 0)
            throw std::logic_error("leaf without a machine rule");
        seq.push_back({model.at(alpha), tag});
    }
    return seq;
}

namespace detail {

struct SearchState {
    PumpfreeTree tree;
    struct Item {
        bool close;
        int nt;     // Expand: nonterminal; Close: pumped nonterminal
        int parent; // Expand: parent node; Close: node
    };
    std::vector<Item> todo;
    ChainBuilder chain;
    int activePumps = 0;
};

struct Found {
    SearchState state;
    lra::Model model;
};

class TreeSearch {
public:
    TreeSearch(const VectorGrammar& g, const RatVector& u, const RatVector& v, Mode mode, const SolverOptions& opt)
        : g_(g), u_(u), v_(v), mode_(mode), opt_(opt), byLhs_(productions_by_lhs(g)), selfRec_(self_reachable(g))
    {
        if (opt.timeout)
            deadline_ = lra::Clock::now() + *opt.timeout;
        for (int a = 0; a < g.num_nts(); ++a)
            if (selfRec_[a])
                rels_.emplace(a, std::make_shared<PumpRelation>(g, a, opt.signatureCap));
    }

    SearchState root() const
    {
        SearchState s{{}, {{false, g_.start, -1}}, ChainBuilder(g_.dim, const_vars(u_))};
        return s;
    }

    // Children of a state in canonical order; a completed state yields none
    // and is checked instead.
    std::vector<SearchState> expand(SearchState& s)
    {
        std::vector<SearchState> out;
        auto it = s.todo.back();
        s.todo.pop_back();
        if (it.close) {
            // the signature of an active pump is chosen once its subtree is known
            auto& rel = *rels_.at(it.nt);
            for (std::size_t c = 1; c <= rel.signatures().size(); ++c) {
                SearchState t = s;
                t.tree.nodes[it.parent].pumpChoice = static_cast<int>(c);
                t.chain.close_pump(rel, static_cast<int>(c));
                if (feasible(t.chain))
                    out.push_back(std::move(t));
            }
            return out;
        }
        for (int pi : byLhs_[it.nt]) {
            auto& p = g_.prods[pi];
            bool ok = true;
            for (auto& sym : p.rhs)
                if (!sym.term && (sym.id == it.nt || (it.parent >= 0 && is_ancestor_label(s.tree, it.parent, sym.id))))
                    ok = false;
            if (!ok)
                continue;
            bool pumpable = selfRec_[it.nt] && !rels_.at(it.nt)->trivial() && s.activePumps < maxActive_;
            for (int c = 0; c < (pumpable ? 2 : 1); ++c) {
                SearchState t = s;
                int id = static_cast<int>(t.tree.nodes.size());
                t.tree.nodes.push_back(TreeNode{it.nt, pi, it.parent, {}, static_cast<bool>(selfRec_[it.nt]), 0});
                if (it.parent >= 0)
                    t.tree.nodes[it.parent].kids.push_back(id);
                if (c > 0) {
                    t.chain.open_pump(id);
                    t.todo.push_back({true, it.nt, id});
                    ++t.activePumps;
                }
                bool leaf = false;
                for (auto sym = p.rhs.rbegin(); sym != p.rhs.rend(); ++sym)
                    if (!sym->term)
                        t.todo.push_back({false, sym->id, id});
                for (std::size_t k = 0; k < p.rhs.size(); ++k)
                    if (p.rhs[k].term) {
                        t.chain.leaf(g_.alphabet[p.rhs[k].id], p.tags[k]);
                        leaf = true;
                    }
                if (leaf && !feasible(t.chain))
                    continue;
                out.push_back(std::move(t));
            }
        }
        return out;
    }

    // nullopt: keep searching
    std::optional<lra::Model> complete(SearchState& s)
    {
        s.chain.finish(const_vars(v_), mode_);
        if (++trees_ > opt_.maxTrees)
            timedOut_ = true;
        if (s.chain.dead())
            return std::nullopt;
        auto r = lra::check_conjunction(s.chain.atoms(), deadline_);
        if (r.status == lra::Status::Timeout)
            timedOut_ = true;
        if (r.status == lra::Status::Sat)
            return r.model;
        return std::nullopt;
    }

    // Depth-first search below s; stop() is polled to abandon the search.
    std::optional<Found> dfs(SearchState s, const std::function<bool()>& stop)
    {
        if (stop() || out_of_budget())
            return std::nullopt;
        if (s.todo.empty()) {
            if (auto m = complete(s))
                return Found{std::move(s), std::move(*m)};
            return std::nullopt;
        }
        for (auto& c : expand(s))
            if (auto f = dfs(std::move(c), stop))
                return f;
        return std::nullopt;
    }

    bool out_of_budget()
    {
        if (timedOut_)
            return true;
        if (deadline_ && lra::Clock::now() > *deadline_)
            timedOut_ = true;
        return timedOut_;
    }

    bool timed_out() const { return timedOut_; }
    std::size_t trees() const { return trees_; }
    bool has_pumps() const
    {
        for (auto& [a, r] : rels_)
            if (!r->trivial())
                return true;
        return false;
    }
    // bound on the number of non-identity pumps per tree
    void set_max_active(int k) { maxActive_ = k; }

private:
    bool feasible(const ChainBuilder& c)
    {
        if (c.dead())
            return false;
        auto r = lra::check_conjunction(c.atoms(), deadline_);
        if (r.status == lra::Status::Timeout)
            timedOut_ = true;
        return r.status == lra::Status::Sat;
    }

    const VectorGrammar& g_;
    RatVector u_, v_;
    Mode mode_;
    SolverOptions opt_;
    std::vector<std::vector<int>> byLhs_;
    std::vector<bool> selfRec_;
    std::map<int, std::shared_ptr<PumpRelation>> rels_;
    std::optional<lra::Clock::time_point> deadline_;
    std::atomic<std::size_t> trees_{0};
    std::atomic<bool> timedOut_{false};
    int maxActive_ = std::numeric_limits<int>::max();
};

inline std::optional<Found> parallel_search(TreeSearch& ts, int jobs)
{
    std::vector<SearchState> frontier{ts.root()};
    std::size_t target = static_cast<std::size_t>(jobs) * 8;
    // breadth-first split preserving canonical order
    while (frontier.size() < target) {
        std::vector<SearchState> next;
        bool grew = false;
        for (auto& s : frontier) {
            if (s.todo.empty()) {
                next.push_back(std::move(s));
                continue;
            }
            grew = true;
            for (auto& c : ts.expand(s))
                next.push_back(std::move(c));
        }
        frontier = std::move(next);
        if (!grew || ts.out_of_budget())
            break;
    }
    std::atomic<std::size_t> nextTask{0}, best{frontier.size()};
    std::vector<std::optional<Found>> results(frontier.size());
    auto worker = [&]() {
        for (;;) {
            std::size_t i = nextTask++;
            if (i >= frontier.size() || i > best.load())
                return;
            auto stop = [&]() { return best.load() < i; };
            auto f = ts.dfs(std::move(frontier[i]), stop);
            if (f) {
                results[i] = std::move(f);
                std::size_t cur = best.load();
                while (i < cur && !best.compare_exchange_weak(cur, i)) {
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    if (best.load() < frontier.size())
        return std::move(results[best.load()]);
    return std::nullopt;
}

// Bounded search over control paths with one linear program per prefix;
// used to produce a witness when the satisfying tree uses pumps.
inline std::optional<FiringSequence> bounded_witness_search(const Machine& m, const Config& c0, const Config& c1,
                                                            Mode mode, int maxLen,
                                                            std::optional<lra::Clock::time_point> deadline)
{
    std::size_t d = static_cast<std::size_t>(m.dim);
    std::vector<int> rules;
    std::vector<lra::LinAtom> atoms;
    VarVec point = const_vars(c0.values);
    std::optional<FiringSequence> found;
    std::function<void(int, const std::vector<int>&)> go = [&](int state, const std::vector<int>& stack) {
        if (found || (deadline && lra::Clock::now() > *deadline))
            return;
        if (state == c1.state && stack == c1.stack) {
            auto all = atoms;
            for (std::size_t i = 0; i < d; ++i) {
                lra::Formula f = mode == Mode::Reach ? lra::eq(point[i], lra::Lin(c1.values[i]))
                                                     : lra::ge(point[i], lra::Lin(c1.values[i]));
                if (f->kind == lra::Kind::False)
                    goto next;
                if (f->kind == lra::Kind::Atom)
                    all.push_back(f->atom);
            }
            {
                auto r = lra::check_conjunction(all, deadline);
                if (r.status == lra::Status::Sat) {
                    FiringSequence seq;
                    for (std::size_t i = 0; i < rules.size(); ++i) {
                        int a = lra::var("w" + std::to_string(i));
                        seq.push_back({r.model.count(a) ? r.model.at(a) : Rational(1), rules[i]});
                    }
                    found = seq;
                    return;
                }
            }
        }
    next:
        if (static_cast<int>(rules.size()) >= maxLen)
            return;
        for (std::size_t ri = 0; ri < m.rules.size(); ++ri) {
            auto& r = m.rules[ri];
            if (r.from != state)
                continue;
            std::vector<int> st = stack;
            if (r.op == StackOp::Pop) {
                if (st.empty() || st.front() != r.symbol)
                    continue;
                st.erase(st.begin());
            } else if (r.op == StackOp::Push) {
                st.insert(st.begin(), r.symbol);
            }
            auto savedAtoms = atoms.size();
            auto savedPoint = point;
            lra::Lin al = lra::Lin::of(lra::var("w" + std::to_string(rules.size())));
            atoms.push_back(lra::LinAtom{{{al.coef.begin()->first, Rational(-1)}}, lra::Rel::Lt, Rational(0)});
            atoms.push_back(lra::LinAtom{{{al.coef.begin()->first, Rational(1)}}, lra::Rel::Le, Rational(1)});
            bool ok = true;
            for (std::size_t i = 0; i < d && ok; ++i) {
                if (sgn(r.update[i]) == 0)
                    continue;
                point[i] += al * Rational(r.update[i]);
                if (sgn(r.update[i]) < 0) {
                    lra::Formula f = lra::ge(point[i], lra::Lin(0));
                    if (f->kind == lra::Kind::False)
                        ok = false;
                    else if (f->kind == lra::Kind::Atom)
                        atoms.push_back(f->atom);
                }
            }
            rules.push_back(static_cast<int>(ri));
            if (ok && lra::check_conjunction(atoms, deadline).status == lra::Status::Sat)
                go(r.to, st);
            rules.pop_back();
            atoms.resize(savedAtoms);
            point = savedPoint;
            if (found)
                return;
        }
    };
    go(c0.state, c0.stack);
    return found;
}

inline void check_machine(const Machine& m, const Config& c)
{
    if (m.model != Model::Qpvass && m.model != Model::Qvass)
        throw std::invalid_argument(std::string("the solver handles qvass and qpvass machines, not ") +
                                    model_name(m.model));
    if (c.state < 0 || c.state >= static_cast<int>(m.states.size()))
        throw std::invalid_argument("configuration names an undeclared state");
    if (static_cast<int>(c.values.size()) != m.dim)
        throw DimensionMismatch(c.values.size(), m.dim);
    for (int s : c.stack)
        if (s < 0 || s >= static_cast<int>(m.stackAlphabet.size()))
            throw std::invalid_argument("configuration names an undeclared stack symbol");
    if (!vec_nonneg(c.values))
        throw std::invalid_argument("configuration has a negative counter");
}

inline VectorGrammar control_grammar(const Machine& m, const Config& c0, const Config& c1)
{
    if (m.model == Model::Qvass)
        return to_cnf(vass_to_grammar(m, c0.state, c1.state));
    return to_cnf(pvass_to_grammar(m, c0.state, c0.stack, c1.state, c1.stack, false));
}

inline Verdict decide(const Machine& m, const Config& c0, const Config& c1, Mode mode, const SolverOptions& opt)
{
    check_machine(m, c0);
    check_machine(m, c1);
    Outcome yes = mode == Mode::Reach ? Outcome::Reachable : Outcome::Coverable;
    Outcome no = mode == Mode::Reach ? Outcome::Unreachable : Outcome::NotCoverable;
    Verdict out;
    bool sameControl = c0.state == c1.state && (m.model == Model::Qvass || c0.stack == c1.stack);
    if (sameControl && (mode == Mode::Reach ? c0.values == c1.values : vec_geq(c0.values, c1.values))) {
        out.outcome = yes;
        out.witness = FiringSequence{};
        return out;
    }
    VectorGrammar g = control_grammar(m, c0, c1);
    if (is_empty(g)) {
        out.outcome = no;
        out.note = "control language is empty";
        return out;
    }
    std::optional<TreeSearch> ts;
    try {
        ts.emplace(g, c0.values, c1.values, mode, opt);
    } catch (SignatureCapExceeded&) {
        out.outcome = Outcome::Timeout;
        out.note = "pump signature cap exceeded";
        return out;
    }
    // passes with few active pumps find most positive answers early; the
    // last pass is unrestricted and decides
    std::vector<int> passes{0};
    if (ts->has_pumps())
        passes = {0, 1, 2, std::numeric_limits<int>::max()};
    std::optional<Found> found;
    for (int k : passes) {
        ts->set_max_active(k);
        if (opt.jobs > 1)
            found = parallel_search(*ts, opt.jobs);
        else
            found = ts->dfs(ts->root(), [] { return false; });
        if (found || ts->timed_out())
            break;
    }
    out.trees = ts->trees();
    if (!found) {
        out.outcome = ts->timed_out() ? Outcome::Timeout : no;
        return out;
    }
    out.outcome = yes;
    Certificate cert{found->state.tree.dump(g), found->state.chain.atoms(), found->model};
    if (!cert.verify())
        throw std::logic_error("certificate does not re-evaluate to true");
    out.certificate = cert;
    FiringSequence seq;
    Config end;
    if (!found->state.tree.has_active_pump()) {
        seq = extract_witness(found->state.chain, found->model, false);
    } else {
        std::optional<lra::Clock::time_point> deadline;
        if (opt.timeout)
            deadline = lra::Clock::now() + *opt.timeout;
        auto w = bounded_witness_search(m, c0, c1, mode, opt.witnessSearchLength, deadline);
        if (!w) {
            out.note = "satisfying tree uses pumps; certificate only";
            return out;
        }
        seq = *w;
    }
    end = check_run(m, c0, seq);
    bool hit = end.state == c1.state && (m.model == Model::Qvass || end.stack == c1.stack) &&
               (mode == Mode::Reach ? end.values == c1.values : vec_geq(end.values, c1.values));
    if (!hit)
        throw std::logic_error("extracted witness misses the target");
    out.witness = seq;
    return out;
}

} // namespace detail

inline lra::Formula tree_formula(const PumpfreeTree& tree, const VectorGrammar& g, const VarVec& u, const VarVec& v,
                                 Mode mode, std::size_t signatureCap = 20000)
{
    std::map<int, std::shared_ptr<PumpRelation>> rels;
    std::vector<int> pumped;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].pumpAttached) {
            int nt = tree.nodes[i].nt;
            if (!rels.count(nt))
                rels.emplace(nt, std::make_shared<PumpRelation>(g, nt, signatureCap));
            pumped.push_back(static_cast<int>(i));
        }
    std::vector<lra::Formula> out;
    std::vector<int> choice(tree.nodes.size(), 0);
    std::function<void(std::size_t)> each = [&](std::size_t k) {
        if (k < pumped.size()) {
            int n = static_cast<int>(rels.at(tree.nodes[pumped[k]].nt)->signatures().size());
            for (int c = 0; c <= n; ++c) {
                choice[pumped[k]] = c;
                each(k + 1);
            }
            return;
        }
        ChainBuilder chain(g.dim, u);
        std::function<void(int)> walk = [&](int i) {
            auto& node = tree.nodes[i];
            if (choice[i] > 0)
                chain.open_pump(i);
            auto& p = g.prods[node.prod];
            std::size_t kid = 0;
            for (std::size_t s = 0; s < p.rhs.size(); ++s) {
                if (p.rhs[s].term)
                    chain.leaf(g.alphabet[p.rhs[s].id], p.tags[s]);
                else
                    walk(node.kids.at(kid++));
            }
            if (choice[i] > 0)
                chain.close_pump(*rels.at(node.nt), choice[i]);
        };
        walk(0);
        chain.finish(v, mode);
        if (chain.dead())
            return;
        std::vector<lra::Formula> parts;
        for (auto& a : chain.atoms())
            parts.push_back(lra::f_atom(a));
        out.push_back(lra::conj(parts));
    };
    each(0);
    return lra::disj(out);
}

inline Verdict decide_reach(const Machine& m, const Config& c0, const Config& c1, const SolverOptions& opt = {})
{
    return detail::decide(m, c0, c1, Mode::Reach, opt);
}

inline Verdict decide_cover(const Machine& m, const Config& c0, const Config& c1, const SolverOptions& opt = {})
{
    return detail::decide(m, c0, c1, Mode::Cover, opt);
}

inline Verdict decide_state_reach(const Machine& m, const Config& c0, int q, const SolverOptions& opt = {})
{
    detail::check_machine(m, c0);
    if (q < 0 || q >= static_cast<int>(m.states.size()))
        throw std::invalid_argument("undeclared target state");
    Verdict out;
    if (c0.state == q) {
        out.outcome = Outcome::StateReachable;
        out.witness = FiringSequence{};
        return out;
    }
    VectorGrammar g = m.model == Model::Qvass ? vass_to_grammar(m, c0.state, q)
                                              : pvass_to_grammar(m, c0.state, c0.stack, q, {}, true);
    if (is_empty(g)) {
        out.outcome = Outcome::StateUnreachable;
        out.note = "control language is empty";
        return out;
    }
    std::vector<Signature> sigs;
    try {
        sigs = language_signatures(g, false, opt.signatureCap);
    } catch (SignatureCapExceeded&) {
        out.outcome = Outcome::Timeout;
        out.note = "signature cap exceeded";
        return out;
    }
    lra::Model none;
    VarVec u = const_vars(c0.values);
    for (auto& s : sigs)
        if (lra::eval(admissibility_from_signature(g.alphabet, s, u), none)) {
            out.outcome = Outcome::StateReachable;
            return out;
        }
    out.outcome = Outcome::StateUnreachable;
    return out;
}

// Exhaustive search over runs of at most maxLen steps. A result proves
// reachability (or coverability); an empty result only means no witness of
// that length exists.
inline std::optional<FiringSequence> bounded_search(const Machine& m, const Config& c0, const Config& c1, Mode mode,
                                                    int maxLen)
{
    detail::check_machine(m, c0);
    detail::check_machine(m, c1);
    Config target = c1;
    if (m.model == Model::Qvass)
        target.stack = c0.stack;
    return detail::bounded_witness_search(m, c0, target, mode, maxLen, std::nullopt);
}

} // namespace cpv
