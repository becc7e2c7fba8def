#pragma once

#include "numerics.hpp"
#include "simplex.hpp"

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cpv::lra {

namespace detail {
struct VarTable {
    std::mutex mu;
    std::deque<std::string> names;
    std::unordered_map<std::string, int> ids;
};
inline VarTable& var_table()
{
    static VarTable t;
    return t;
}
} // namespace detail

// Variables are interned process-wide so formulas can be combined freely.
inline int var(const std::string& name)
{
    auto& t = detail::var_table();
    std::lock_guard<std::mutex> lock(t.mu);
    auto it = t.ids.find(name);
    if (it != t.ids.end())
        return it->second;
    int id = static_cast<int>(t.names.size());
    t.names.push_back(name);
    t.ids.emplace(name, id);
    return id;
}

inline const std::string& var_name(int id)
{
    auto& t = detail::var_table();
    std::lock_guard<std::mutex> lock(t.mu);
    return t.names.at(id);
}

// An affine expression sum coef·x + constant.
struct Lin {
    std::map<int, Rational> coef;
    Rational constant;

    Lin() = default;
    Lin(const Rational& c) : constant(c) {}
    static Lin of(int v, const Rational& c = Rational(1))
    {
        Lin l;
        if (sgn(c) != 0)
            l.coef[v] = c;
        return l;
    }

    Lin& operator+=(const Lin& o)
    {
        for (auto& [v, c] : o.coef) {
            Rational& slot = coef[v];
            slot += c;
            if (sgn(slot) == 0)
                coef.erase(v);
        }
        constant += o.constant;
        return *this;
    }
    Lin& operator-=(const Lin& o) { return *this += o * Rational(-1); }
    friend Lin operator+(Lin a, const Lin& b) { return a += b; }
    friend Lin operator-(Lin a, const Lin& b) { return a -= b; }
    friend Lin operator*(Lin a, const Rational& k)
    {
        if (sgn(k) == 0)
            return Lin();
        for (auto& [v, c] : a.coef)
            c *= k;
        a.constant *= k;
        return a;
    }
};

enum class Rel { Lt, Le, Eq };

// sum coef·x rel rhs
struct LinAtom {
    std::map<int, Rational> coef;
    Rel rel = Rel::Le;
    Rational rhs;
};

enum class Kind { True, False, Atom, And, Or };

struct Node;
using Formula = std::shared_ptr<const Node>;

struct Node {
    Kind kind = Kind::True;
    LinAtom atom;
    std::vector<Formula> kids;
};

inline Formula f_true()
{
    static Formula t = std::make_shared<Node>(Node{Kind::True, {}, {}});
    return t;
}

inline Formula f_false()
{
    static Formula f = std::make_shared<Node>(Node{Kind::False, {}, {}});
    return f;
}

inline bool atom_constant_truth(const LinAtom& a)
{
    int s = sgn(Rational(-a.rhs));
    return a.rel == Rel::Lt ? s < 0 : a.rel == Rel::Le ? s <= 0 : s == 0;
}

inline Formula f_atom(LinAtom a)
{
    if (a.coef.empty())
        return atom_constant_truth(a) ? f_true() : f_false();
    return std::make_shared<Node>(Node{Kind::Atom, std::move(a), {}});
}

// lhs rel rhs for affine expressions
inline Formula cmp_lin(const Lin& lhs, Rel rel, const Lin& rhs)
{
    Lin diff = lhs - rhs;
    LinAtom a;
    a.coef = std::move(diff.coef);
    a.rel = rel;
    a.rhs = -diff.constant;
    return f_atom(std::move(a));
}

inline Formula lt(const Lin& a, const Lin& b) { return cmp_lin(a, Rel::Lt, b); }
inline Formula le(const Lin& a, const Lin& b) { return cmp_lin(a, Rel::Le, b); }
inline Formula eq(const Lin& a, const Lin& b) { return cmp_lin(a, Rel::Eq, b); }
inline Formula gt(const Lin& a, const Lin& b) { return cmp_lin(b, Rel::Lt, a); }
inline Formula ge(const Lin& a, const Lin& b) { return cmp_lin(b, Rel::Le, a); }

inline Formula conj(const std::vector<Formula>& fs)
{
    std::vector<Formula> kids;
    for (auto& f : fs) {
        if (f->kind == Kind::False)
            return f_false();
        if (f->kind == Kind::True)
            continue;
        if (f->kind == Kind::And)
            kids.insert(kids.end(), f->kids.begin(), f->kids.end());
        else
            kids.push_back(f);
    }
    if (kids.empty())
        return f_true();
    if (kids.size() == 1)
        return kids[0];
    return std::make_shared<Node>(Node{Kind::And, {}, std::move(kids)});
}

inline Formula disj(const std::vector<Formula>& fs)
{
    std::vector<Formula> kids;
    for (auto& f : fs) {
        if (f->kind == Kind::True)
            return f_true();
        if (f->kind == Kind::False)
            continue;
        if (f->kind == Kind::Or)
            kids.insert(kids.end(), f->kids.begin(), f->kids.end());
        else
            kids.push_back(f);
    }
    if (kids.empty())
        return f_false();
    if (kids.size() == 1)
        return kids[0];
    return std::make_shared<Node>(Node{Kind::Or, {}, std::move(kids)});
}

inline Formula operator&&(const Formula& a, const Formula& b) { return conj({a, b}); }
inline Formula operator||(const Formula& a, const Formula& b) { return disj({a, b}); }

using Model = std::map<int, Rational>;

struct MissingVariable : std::runtime_error {
    explicit MissingVariable(int v) : std::runtime_error("model lacks variable " + var_name(v)) {}
};

inline bool eval_atom(const LinAtom& a, const Model& m)
{
    Rational s(0);
    for (auto& [v, c] : a.coef) {
        auto it = m.find(v);
        if (it == m.end())
            throw MissingVariable(v);
        s += c * it->second;
    }
    int k = cmp(s, a.rhs);
    return a.rel == Rel::Lt ? k < 0 : a.rel == Rel::Le ? k <= 0 : k == 0;
}

inline bool eval(const Formula& f, const Model& m)
{
    switch (f->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Atom: return eval_atom(f->atom, m);
    case Kind::And:
        for (auto& k : f->kids)
            if (!eval(k, m))
                return false;
        return true;
    case Kind::Or:
        for (auto& k : f->kids)
            if (eval(k, m))
                return true;
        return false;
    }
    return false;
}

inline void collect_vars(const Formula& f, std::set<int>& out)
{
    if (f->kind == Kind::Atom)
        for (auto& [v, c] : f->atom.coef)
            out.insert(v);
    for (auto& k : f->kids)
        collect_vars(k, out);
}

// Replace variables by affine expressions.
inline Formula substitute(const Formula& f, const std::map<int, Lin>& sub)
{
    switch (f->kind) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: {
        Lin lhs;
        for (auto& [v, c] : f->atom.coef) {
            auto it = sub.find(v);
            lhs += (it == sub.end() ? Lin::of(v) : it->second) * c;
        }
        return cmp_lin(lhs, f->atom.rel, Lin(f->atom.rhs));
    }
    case Kind::And:
    case Kind::Or: {
        std::vector<Formula> kids;
        for (auto& k : f->kids)
            kids.push_back(substitute(k, sub));
        return f->kind == Kind::And ? conj(kids) : disj(kids);
    }
    }
    return f;
}

enum class Status { Sat, Unsat, Timeout };

struct Result {
    Status status = Status::Unsat;
    Model model;
};

using Clock = std::chrono::steady_clock;

// Exact feasibility of a conjunction of atoms.
inline Result check_conjunction(const std::vector<LinAtom>& atoms,
                                std::optional<Clock::time_point> deadline = std::nullopt)
{
    std::map<int, int> local;
    std::vector<int> global;
    for (auto& a : atoms)
        for (auto& [v, c] : a.coef)
            if (local.emplace(v, static_cast<int>(global.size())).second)
                global.push_back(v);
    Simplex s(static_cast<int>(global.size()));
    for (auto& a : atoms) {
        std::vector<std::pair<int, Rational>> coefs;
        for (auto& [v, c] : a.coef)
            coefs.emplace_back(local[v], c);
        s.add(coefs, a.rel == Rel::Lt ? SimplexRel::Lt : a.rel == Rel::Le ? SimplexRel::Le : SimplexRel::Eq, a.rhs);
    }
    Result r;
    switch (s.check(deadline)) {
    case Simplex::Result::Timeout: r.status = Status::Timeout; return r;
    case Simplex::Result::Unsat: r.status = Status::Unsat; return r;
    case Simplex::Result::Sat: break;
    }
    r.status = Status::Sat;
    auto vals = s.model();
    for (std::size_t i = 0; i < global.size(); ++i)
        r.model[global[i]] = vals[i];
    for (auto& a : atoms)
        if (!eval_atom(a, r.model))
            throw std::logic_error("simplex model violates an atom");
    return r;
}

// Streams the disjunctive normal form depth-first. The callback returns false
// to stop; the function returns false iff stopped early.
inline bool for_each_conjunct(const Formula& f, const std::function<bool(const std::vector<LinAtom>&)>& cb)
{
    std::vector<LinAtom> atoms;
    std::function<bool(std::vector<Formula>&)> go = [&](std::vector<Formula>& pending) -> bool {
        while (!pending.empty()) {
            Formula g = pending.back();
            pending.pop_back();
            switch (g->kind) {
            case Kind::True: break;
            case Kind::False: return true;
            case Kind::Atom: atoms.push_back(g->atom); break;
            case Kind::And:
                for (auto it = g->kids.rbegin(); it != g->kids.rend(); ++it)
                    pending.push_back(*it);
                break;
            case Kind::Or: {
                std::size_t mark = atoms.size();
                for (auto& k : g->kids) {
                    std::vector<Formula> sub = pending;
                    sub.push_back(k);
                    if (!go(sub))
                        return false;
                    atoms.resize(mark);
                }
                return true;
            }
            }
        }
        return cb(atoms);
    };
    std::vector<Formula> start{f};
    return go(start);
}

inline std::vector<std::vector<LinAtom>> to_dnf(const Formula& f)
{
    std::vector<std::vector<LinAtom>> out;
    for_each_conjunct(f, [&](const std::vector<LinAtom>& c) {
        out.push_back(c);
        return true;
    });
    return out;
}

struct Options {
    std::optional<std::chrono::milliseconds> timeout;
};

inline Result is_sat(const Formula& f, const Options& opt = {})
{
    std::optional<Clock::time_point> deadline;
    if (opt.timeout)
        deadline = Clock::now() + *opt.timeout;
    Result found;
    bool timedOut = false;
    for_each_conjunct(f, [&](const std::vector<LinAtom>& atoms) {
        if (deadline && Clock::now() > *deadline) {
            timedOut = true;
            return false;
        }
        Result r = check_conjunction(atoms, deadline);
        if (r.status == Status::Timeout) {
            timedOut = true;
            return false;
        }
        if (r.status == Status::Sat) {
            found = std::move(r);
            return false;
        }
        return true;
    });
    if (found.status == Status::Sat) {
        std::set<int> vars;
        collect_vars(f, vars);
        for (int v : vars)
            found.model.emplace(v, Rational(0));
        if (!eval(f, found.model))
            throw std::logic_error("model does not satisfy formula");
        return found;
    }
    Result r;
    r.status = timedOut ? Status::Timeout : Status::Unsat;
    return r;
}

inline std::string rat_smt(const Rational& r)
{
    std::string body = r.get_den() == 1 ? Integer(abs(r.get_num())).get_str()
                                        : "(/ " + Integer(abs(r.get_num())).get_str() + " " + r.get_den().get_str() + ")";
    return sgn(r) < 0 ? "(- " + body + ")" : body;
}

inline std::string to_smtlib(const std::vector<LinAtom>& atoms)
{
    std::set<int> vars;
    for (auto& a : atoms)
        for (auto& [v, c] : a.coef)
            vars.insert(v);
    std::ostringstream os;
    os << "(set-logic QF_LRA)\n";
    for (int v : vars)
        os << "(declare-fun |" << var_name(v) << "| () Real)\n";
    for (auto& a : atoms) {
        os << "(assert (" << (a.rel == Rel::Lt ? "<" : a.rel == Rel::Le ? "<=" : "=") << " (+ 0";
        for (auto& [v, c] : a.coef)
            os << " (* " << rat_smt(c) << " |" << var_name(v) << "|)";
        os << ") " << rat_smt(a.rhs) << "))\n";
    }
    os << "(check-sat)\n";
    return os.str();
}

inline std::string atom_str(const LinAtom& a)
{
    std::string s;
    for (auto& [v, c] : a.coef) {
        if (!s.empty())
            s += " + ";
        s += rat_str(c) + "*" + var_name(v);
    }
    return s + (a.rel == Rel::Lt ? " < " : a.rel == Rel::Le ? " <= " : " = ") + rat_str(a.rhs);
}

} // namespace cpv::lra
