#pragma once

#include "machines.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace cpv {

struct Sym {
    bool term = false;
    int id = 0; // letter index when term, nonterminal index otherwise

    bool operator==(const Sym& o) const { return term == o.term && id == o.id; }
    bool operator<(const Sym& o) const { return std::tie(term, id) < std::tie(o.term, o.id); }
};

inline Sym T(int letter) { return Sym{true, letter}; }
inline Sym N(int nt) { return Sym{false, nt}; }

struct Production {
    int lhs = 0;
    std::vector<Sym> rhs;
    std::vector<int> tags; // parallel to rhs; machine rule index for terminals, -1 otherwise

    bool operator<(const Production& o) const { return std::tie(lhs, rhs, tags) < std::tie(o.lhs, o.rhs, o.tags); }
    bool operator==(const Production& o) const { return lhs == o.lhs && rhs == o.rhs && tags == o.tags; }
};

using Word = std::vector<int>; // letter indices

struct AlphabetMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct VectorGrammar {
    int dim = 0;
    std::vector<IntVector> alphabet;
    std::vector<std::string> ntNames;
    int start = 0;
    std::vector<Production> prods;
    bool cnf = false;

    int letter(const IntVector& v)
    {
        int i = find_letter(v);
        if (i >= 0)
            return i;
        if (static_cast<int>(v.size()) != dim)
            throw DimensionMismatch(v.size(), dim);
        alphabet.push_back(v);
        return static_cast<int>(alphabet.size()) - 1;
    }

    int find_letter(const IntVector& v) const
    {
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == v)
                return static_cast<int>(i);
        return -1;
    }

    int add_nt(const std::string& name)
    {
        ntNames.push_back(name);
        return static_cast<int>(ntNames.size()) - 1;
    }

    void add(int lhs, std::vector<Sym> rhs, std::vector<int> tags = {})
    {
        if (tags.empty())
            tags.assign(rhs.size(), -1);
        prods.push_back(Production{lhs, std::move(rhs), std::move(tags)});
    }

    int num_nts() const { return static_cast<int>(ntNames.size()); }

    std::string dump() const
    {
        std::ostringstream os;
        os << "start " << ntNames.at(start) << "\n";
        for (auto& p : prods) {
            os << ntNames[p.lhs] << " ->";
            if (p.rhs.empty())
                os << " ε";
            for (std::size_t i = 0; i < p.rhs.size(); ++i) {
                if (p.rhs[i].term) {
                    os << " " << vec_str(alphabet[p.rhs[i].id]);
                    if (p.tags[i] >= 0)
                        os << "#" << p.tags[i];
                } else {
                    os << " " << ntNames[p.rhs[i].id];
                }
            }
            os << "\n";
        }
        return os.str();
    }
};

inline std::vector<IntVector> word_vectors(const VectorGrammar& g, const Word& w)
{
    std::vector<IntVector> out;
    for (int a : w)
        out.push_back(g.alphabet.at(a));
    return out;
}

inline std::vector<bool> productive_nts(const VectorGrammar& g)
{
    std::vector<bool> prod(g.num_nts(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : g.prods) {
            if (prod[p.lhs])
                continue;
            bool ok = true;
            for (auto& s : p.rhs)
                if (!s.term && !prod[s.id]) {
                    ok = false;
                    break;
                }
            if (ok) {
                prod[p.lhs] = true;
                changed = true;
            }
        }
    }
    return prod;
}

inline bool is_empty(const VectorGrammar& g)
{
    if (g.num_nts() == 0)
        return true;
    return !productive_nts(g)[g.start];
}

// Drops unproductive and unreachable nonterminals, renumbering the rest in
// order of first discovery from the start symbol.
inline VectorGrammar trim(const VectorGrammar& g)
{
    VectorGrammar out;
    out.dim = g.dim;
    out.alphabet = g.alphabet;
    out.cnf = g.cnf;
    if (g.num_nts() == 0) {
        out.start = out.add_nt("S");
        return out;
    }
    auto prod = productive_nts(g);
    std::vector<std::vector<const Production*>> byLhs(g.num_nts());
    for (auto& p : g.prods) {
        bool ok = prod[p.lhs];
        for (auto& s : p.rhs)
            if (!s.term && !prod[s.id])
                ok = false;
        if (ok)
            byLhs[p.lhs].push_back(&p);
    }
    std::vector<int> remap(g.num_nts(), -1);
    std::vector<int> order;
    remap[g.start] = out.add_nt(g.ntNames[g.start]);
    order.push_back(g.start);
    if (!prod[g.start]) {
        out.start = 0;
        return out;
    }
    for (std::size_t i = 0; i < order.size(); ++i)
        for (auto* p : byLhs[order[i]])
            for (auto& s : p->rhs)
                if (!s.term && remap[s.id] < 0) {
                    remap[s.id] = out.add_nt(g.ntNames[s.id]);
                    order.push_back(s.id);
                }
    out.start = 0;
    for (int a : order)
        for (auto* p : byLhs[a]) {
            Production q = *p;
            q.lhs = remap[q.lhs];
            for (auto& s : q.rhs)
                if (!s.term)
                    s.id = remap[s.id];
            out.prods.push_back(std::move(q));
        }
    return out;
}

inline bool has_cnf_shape(const VectorGrammar& g)
{
    for (auto& p : g.prods) {
        if (p.rhs.empty()) {
            if (p.lhs != g.start)
                return false;
        } else if (p.rhs.size() == 1) {
            if (!p.rhs[0].term)
                return false;
        } else if (p.rhs.size() == 2) {
            if (p.rhs[0].term || p.rhs[1].term)
                return false;
        } else {
            return false;
        }
        for (auto& s : p.rhs)
            if (!s.term && s.id == g.start)
                return false;
    }
    return true;
}

inline VectorGrammar to_cnf(const VectorGrammar& in)
{
    if (has_cnf_shape(in)) {
        VectorGrammar t = trim(in);
        t.cnf = true;
        return t;
    }
    VectorGrammar g;
    g.dim = in.dim;
    g.alphabet = in.alphabet;
    g.ntNames = in.ntNames;
    // START: fresh non-recursive start symbol
    g.start = g.add_nt(in.num_nts() ? in.ntNames[in.start] + "'" : "S'");
    std::vector<Production> work;
    if (in.num_nts())
        work.push_back(Production{g.start, {N(in.start)}, {-1}});
    for (auto& p : in.prods)
        work.push_back(p);

    // TERM: terminals in long right-hand sides get their own nonterminal
    std::map<std::pair<int, int>, int> termNt;
    std::vector<Production> termProds;
    for (auto& p : work) {
        if (p.rhs.size() < 2)
            continue;
        for (std::size_t i = 0; i < p.rhs.size(); ++i) {
            if (!p.rhs[i].term)
                continue;
            auto key = std::make_pair(p.rhs[i].id, p.tags[i]);
            auto it = termNt.find(key);
            if (it == termNt.end()) {
                int t = g.add_nt("T" + vec_str(g.alphabet[key.first]) + (key.second >= 0 ? "#" + std::to_string(key.second) : ""));
                it = termNt.emplace(key, t).first;
                termProds.push_back(Production{t, {p.rhs[i]}, {p.tags[i]}});
            }
            p.rhs[i] = N(it->second);
            p.tags[i] = -1;
        }
    }
    work.insert(work.end(), termProds.begin(), termProds.end());

    // BIN: split long right-hand sides
    std::vector<Production> bin;
    for (auto& p : work) {
        if (p.rhs.size() <= 2) {
            bin.push_back(p);
            continue;
        }
        int lhs = p.lhs;
        for (std::size_t i = 0; i + 2 < p.rhs.size(); ++i) {
            int next = g.add_nt(g.ntNames[p.lhs] + "." + std::to_string(i + 1));
            bin.push_back(Production{lhs, {p.rhs[i], N(next)}, {-1, -1}});
            lhs = next;
        }
        bin.push_back(Production{lhs, {p.rhs[p.rhs.size() - 2], p.rhs.back()}, {-1, -1}});
    }

    // DEL: remove ε-productions except at the start
    std::vector<bool> nullable(g.num_nts(), false);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : bin) {
            if (nullable[p.lhs])
                continue;
            bool ok = true;
            for (auto& s : p.rhs)
                if (s.term || !nullable[s.id])
                    ok = false;
            if (ok) {
                nullable[p.lhs] = true;
                changed = true;
            }
        }
    }
    std::set<Production> del;
    for (auto& p : bin) {
        if (p.rhs.empty())
            continue;
        del.insert(p);
        if (p.rhs.size() == 2) {
            if (!p.rhs[1].term && nullable[p.rhs[1].id])
                del.insert(Production{p.lhs, {p.rhs[0]}, {p.tags[0]}});
            if (!p.rhs[0].term && nullable[p.rhs[0].id])
                del.insert(Production{p.lhs, {p.rhs[1]}, {p.tags[1]}});
        }
    }
    if (nullable[g.start])
        del.insert(Production{g.start, {}, {}});

    // UNIT: replace A -> B by B's non-unit productions
    int n = g.num_nts();
    std::vector<std::set<int>> unitReach(n);
    for (int a = 0; a < n; ++a)
        unitReach[a].insert(a);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : del)
            if (p.rhs.size() == 1 && !p.rhs[0].term)
                for (int a = 0; a < n; ++a)
                    if (unitReach[a].count(p.lhs) && unitReach[a].insert(p.rhs[0].id).second)
                        changed = true;
    }
    std::vector<std::vector<const Production*>> nonUnit(n);
    for (auto& p : del)
        if (!(p.rhs.size() == 1 && !p.rhs[0].term))
            nonUnit[p.lhs].push_back(&p);
    std::set<Production> final;
    for (int a = 0; a < n; ++a)
        for (int b : unitReach[a])
            for (auto* p : nonUnit[b]) {
                if (p->rhs.empty() && a != g.start)
                    continue;
                Production q = *p;
                q.lhs = a;
                final.insert(q);
            }
    g.prods.assign(final.begin(), final.end());
    VectorGrammar t = trim(g);
    t.cnf = true;
    return t;
}

struct LengthLex {
    bool operator()(const Word& a, const Word& b) const
    {
        if (a.size() != b.size())
            return a.size() < b.size();
        return a < b;
    }
};

// All words of length <= maxLen, deduplicated, in length-lexicographic order
// of letter indices.
inline std::vector<Word> enumerate_words(const VectorGrammar& in, int maxLen)
{
    VectorGrammar g = in.cnf ? in : to_cnf(in);
    std::set<Word, LengthLex> out;
    if (is_empty(g))
        return {};
    int n = g.num_nts();
    // W[a][len] = words of exactly that length derivable from a
    std::vector<std::vector<std::set<Word>>> W(n, std::vector<std::set<Word>>(maxLen + 1));
    for (auto& p : g.prods)
        if (p.rhs.size() == 1 && maxLen >= 1)
            W[p.lhs][1].insert(Word{p.rhs[0].id});
    for (int len = 2; len <= maxLen; ++len)
        for (auto& p : g.prods) {
            if (p.rhs.size() != 2)
                continue;
            for (int k = 1; k < len; ++k)
                for (auto& x : W[p.rhs[0].id][k])
                    for (auto& y : W[p.rhs[1].id][len - k]) {
                        Word w = x;
                        w.insert(w.end(), y.begin(), y.end());
                        W[p.lhs][len].insert(std::move(w));
                    }
        }
    for (auto& p : g.prods)
        if (p.rhs.empty() && p.lhs == g.start)
            out.insert(Word{});
    for (int len = 1; len <= maxLen; ++len)
        out.insert(W[g.start][len].begin(), W[g.start][len].end());
    return {out.begin(), out.end()};
}

struct VectorNfa {
    int numStates = 0;
    int initial = 0;
    std::set<int> finals;
    std::vector<std::tuple<int, IntVector, int>> trans;

    bool accepts(const std::vector<IntVector>& w) const
    {
        std::set<int> cur{initial};
        for (auto& a : w) {
            std::set<int> next;
            for (auto& [p, l, q] : trans)
                if (cur.count(p) && l == a)
                    next.insert(q);
            cur = std::move(next);
        }
        for (int s : cur)
            if (finals.count(s))
                return true;
        return false;
    }
};

// Words over gamma using every letter, whose first occurrences appear in the
// given order. State i: the first i letters of the order have been seen.
inline VectorNfa first_order_nfa(const std::vector<IntVector>& order)
{
    VectorNfa a;
    int k = static_cast<int>(order.size());
    a.numStates = k + 1;
    a.initial = 0;
    a.finals = {k};
    for (int i = 0; i <= k; ++i) {
        for (int j = 0; j < i; ++j)
            a.trans.emplace_back(i, order[j], i);
        if (i < k)
            a.trans.emplace_back(i, order[i], i + 1);
    }
    return a;
}

// Mirror property for last occurrences: the reversal of the first-order
// automaton over the reversed order.
inline VectorNfa last_order_nfa(const std::vector<IntVector>& order)
{
    std::vector<IntVector> rev(order.rbegin(), order.rend());
    VectorNfa f = first_order_nfa(rev);
    VectorNfa a;
    a.numStates = f.numStates;
    a.initial = *f.finals.begin();
    a.finals = {f.initial};
    for (auto& [p, l, q] : f.trans)
        a.trans.emplace_back(q, l, p);
    return a;
}

inline VectorGrammar intersect_regular(const VectorGrammar& in, const VectorNfa& a)
{
    VectorGrammar g = in.cnf ? in : to_cnf(in);
    std::vector<std::tuple<int, int, int>> trans; // (p, letter, q)
    for (auto& [p, l, q] : a.trans) {
        int id = g.find_letter(l);
        if (id < 0) {
            if (static_cast<int>(l.size()) != g.dim)
                throw AlphabetMismatch("automaton label " + vec_str(l) + " has the wrong dimension");
            continue; // a letter the grammar never produces
        }
        trans.emplace_back(p, id, q);
    }
    int Q = a.numStates, n = g.num_nts();
    VectorGrammar out;
    out.dim = g.dim;
    out.alphabet = g.alphabet;
    out.start = out.add_nt("S^");
    auto idx = [&](int p, int A, int q) { return 1 + (p * n + A) * Q + q; };
    for (int p = 0; p < Q; ++p)
        for (int A = 0; A < n; ++A)
            for (int q = 0; q < Q; ++q)
                out.add_nt("[" + std::to_string(p) + "," + g.ntNames[A] + "," + std::to_string(q) + "]");
    std::vector<Production> prods;
    for (auto& pr : g.prods) {
        if (pr.rhs.empty()) {
            if (a.finals.count(a.initial))
                prods.push_back(Production{out.start, {}, {}});
            continue;
        }
        if (pr.rhs.size() == 1) {
            for (auto& [p, l, q] : trans)
                if (l == pr.rhs[0].id)
                    prods.push_back(Production{idx(p, pr.lhs, q), {pr.rhs[0]}, {pr.tags[0]}});
            continue;
        }
        for (int p = 0; p < Q; ++p)
            for (int r = 0; r < Q; ++r)
                for (int q = 0; q < Q; ++q)
                    prods.push_back(Production{idx(p, pr.lhs, q), {N(idx(p, pr.rhs[0].id, r)), N(idx(r, pr.rhs[1].id, q))}, {-1, -1}});
    }
    // the start symbol of a CNF grammar never occurs on a right-hand side, so
    // copying its binary/terminal productions keeps the result in CNF
    std::vector<Production> startProds;
    for (int f : a.finals)
        for (auto& pr : prods)
            if (pr.lhs == idx(a.initial, g.start, f)) {
                Production s = pr;
                s.lhs = out.start;
                startProds.push_back(s);
            }
    out.prods = std::move(prods);
    out.prods.insert(out.prods.end(), startProds.begin(), startProds.end());
    std::sort(out.prods.begin(), out.prods.end());
    out.prods.erase(std::unique(out.prods.begin(), out.prods.end()), out.prods.end());
    out.cnf = true;
    return trim(out);
}

inline VectorGrammar restrict_support(const VectorGrammar& g, const std::vector<IntVector>& orderF,
                                      const std::vector<IntVector>& orderB)
{
    return intersect_regular(intersect_regular(g, first_order_nfa(orderF)), last_order_nfa(orderB));
}

struct UndeclaredIdentifier : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Control-path language of a Q+-PVASS between two control points, as words of
// update vectors. Each machine rule emits its update tagged with its index;
// the synthetic rules added for the endpoints emit nothing.
inline VectorGrammar pvass_to_grammar(const Machine& m, int fromState, const std::vector<int>& fromStack, int toState,
                                      const std::vector<int>& toStack, bool anyFinalStack)
{
    int nStates = static_cast<int>(m.states.size());
    int nSyms = static_cast<int>(m.stackAlphabet.size());
    auto checkState = [&](int s) {
        if (s < 0 || s >= nStates)
            throw UndeclaredIdentifier("undeclared state " + std::to_string(s));
    };
    auto checkSym = [&](int s) {
        if (s < 0 || s >= nSyms)
            throw UndeclaredIdentifier("undeclared stack symbol " + std::to_string(s));
    };
    checkState(fromState);
    checkState(toState);
    for (int s : fromStack)
        checkSym(s);
    if (!anyFinalStack)
        for (int s : toStack)
            checkSym(s);

    struct ARule {
        int from, to;
        StackOp op;
        int sym;
        int letter; // -1: emits nothing
        int tag;
    };
    VectorGrammar g;
    g.dim = m.dim;
    std::vector<ARule> rules;
    std::vector<std::string> stateNames = m.states;
    auto fresh = [&](const std::string& name) {
        stateNames.push_back(name);
        return static_cast<int>(stateNames.size()) - 1;
    };
    int bottom = nSyms;
    for (std::size_t i = 0; i < m.rules.size(); ++i) {
        auto& r = m.rules[i];
        rules.push_back({r.from, r.to, r.op, r.symbol, g.letter(r.update), static_cast<int>(i)});
    }
    int s0 = fresh("⟨init⟩");
    int cur = s0;
    for (auto it = fromStack.rbegin(); it != fromStack.rend(); ++it) {
        int next = fresh("⟨push" + std::to_string(it - fromStack.rbegin()) + "⟩");
        rules.push_back({cur, next, StackOp::Push, *it, -1, -1});
        cur = next;
    }
    rules.push_back({cur, fromState, StackOp::None, -1, -1, -1});
    int fin = fresh("⟨fin⟩");
    if (anyFinalStack) {
        int drain = fresh("⟨drain⟩");
        rules.push_back({toState, drain, StackOp::None, -1, -1, -1});
        for (int x = 0; x < nSyms; ++x)
            rules.push_back({drain, drain, StackOp::Pop, x, -1, -1});
        rules.push_back({drain, fin, StackOp::Pop, bottom, -1, -1});
    } else {
        cur = toState;
        for (std::size_t i = 0; i < toStack.size(); ++i) {
            int next = fresh("⟨pop" + std::to_string(i) + "⟩");
            rules.push_back({cur, next, StackOp::Pop, toStack[i], -1, -1});
            cur = next;
        }
        rules.push_back({cur, fin, StackOp::Pop, bottom, -1, -1});
    }

    int Q = static_cast<int>(stateNames.size());
    int G = nSyms + 1;
    auto idx = [&](int p, int X, int q) { return (p * G + X) * Q + q; };
    for (int p = 0; p < Q; ++p)
        for (int X = 0; X < G; ++X)
            for (int q = 0; q < Q; ++q)
                g.add_nt("[" + stateNames[p] + "," + (X == bottom ? std::string("⊥") : m.stackAlphabet[X]) + "," +
                         stateNames[q] + "]");
    g.start = idx(s0, bottom, fin);
    auto emit = [](const ARule& r, std::vector<Sym>& rhs, std::vector<int>& tags) {
        if (r.letter >= 0) {
            rhs.push_back(T(r.letter));
            tags.push_back(r.tag);
        }
    };
    for (auto& r : rules) {
        if (r.op == StackOp::Pop) {
            std::vector<Sym> rhs;
            std::vector<int> tags;
            emit(r, rhs, tags);
            g.add(idx(r.from, r.sym, r.to), rhs, tags);
        } else if (r.op == StackOp::None) {
            for (int X = 0; X < G; ++X)
                for (int q = 0; q < Q; ++q) {
                    std::vector<Sym> rhs;
                    std::vector<int> tags;
                    emit(r, rhs, tags);
                    rhs.push_back(N(idx(r.to, X, q)));
                    tags.push_back(-1);
                    g.add(idx(r.from, X, q), rhs, tags);
                }
        } else {
            for (int X = 0; X < G; ++X)
                for (int q = 0; q < Q; ++q)
                    for (int s = 0; s < Q; ++s) {
                        std::vector<Sym> rhs;
                        std::vector<int> tags;
                        emit(r, rhs, tags);
                        rhs.push_back(N(idx(r.to, r.sym, s)));
                        rhs.push_back(N(idx(s, X, q)));
                        tags.push_back(-1);
                        tags.push_back(-1);
                        g.add(idx(r.from, X, q), rhs, tags);
                    }
        }
    }
    return trim(g);
}

// Right-linear control grammar of a stackless machine: one nonterminal per
// state, [p] -> t [p'] per rule and [to] -> ε.
inline VectorGrammar vass_to_grammar(const Machine& m, int fromState, int toState)
{
    VectorGrammar g;
    g.dim = m.dim;
    for (auto& s : m.states)
        g.add_nt("[" + s + "]");
    g.start = fromState;
    for (std::size_t i = 0; i < m.rules.size(); ++i) {
        auto& r = m.rules[i];
        g.add(r.from, {T(g.letter(r.update)), N(r.to)}, {static_cast<int>(i), -1});
    }
    g.add(toState, {}, {});
    return trim(g);
}

} // namespace cpv
