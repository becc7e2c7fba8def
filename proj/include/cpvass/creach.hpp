#pragma once

#include "grammar.hpp"
#include "lra.hpp"
#include "machines.hpp"
#include "numerics.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpv {

using VarVec = std::vector<lra::Lin>;

inline VarVec make_vars(const std::string& prefix, int d)
{
    VarVec v;
    for (int i = 0; i < d; ++i)
        v.push_back(lra::Lin::of(lra::var(prefix + "[" + std::to_string(i) + "]")));
    return v;
}

inline VarVec const_vars(const RatVector& x)
{
    VarVec v;
    for (auto& r : x)
        v.emplace_back(r);
    return v;
}

inline lra::Formula nonneg(const VarVec& x)
{
    std::vector<lra::Formula> parts;
    for (auto& e : x)
        parts.push_back(lra::ge(e, lra::Lin(0)));
    return lra::conj(parts);
}

inline std::uint64_t pos_mask(const IntVector& a)
{
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (sgn(a[i]) > 0)
            m |= std::uint64_t(1) << i;
    return m;
}

inline std::uint64_t neg_mask(const IntVector& a)
{
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (sgn(a[i]) < 0)
            m |= std::uint64_t(1) << i;
    return m;
}

// ∃ c_a > 0: u + Σ c_a·a = v, over the nonzero letters of gamma.
inline lra::Formula q_reach_formula(const std::vector<IntVector>& gamma, const VarVec& u, const VarVec& v,
                                    const std::string& prefix)
{
    if (u.size() != v.size())
        throw DimensionMismatch(u.size(), v.size());
    std::vector<lra::Formula> parts;
    std::vector<lra::Lin> sum(u.begin(), u.end());
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        if (is_zero(gamma[k]))
            continue;
        if (gamma[k].size() != u.size())
            throw DimensionMismatch(gamma[k].size(), u.size());
        lra::Lin c = lra::Lin::of(lra::var(prefix + ".c" + std::to_string(k)));
        parts.push_back(lra::gt(c, lra::Lin(0)));
        for (std::size_t i = 0; i < u.size(); ++i)
            if (sgn(gamma[k][i]) != 0)
                sum[i] += c * Rational(gamma[k][i]);
    }
    for (std::size_t i = 0; i < u.size(); ++i)
        parts.push_back(lra::eq(sum[i], v[i]));
    return lra::conj(parts);
}

// For every letter and every coordinate it decrements: the coordinate is
// positive in u or some earlier letter increments it.
inline lra::Formula admissibility_formula(const std::vector<IntVector>& orderF, const VarVec& u)
{
    std::vector<lra::Formula> parts;
    std::uint64_t seenPos = 0;
    for (auto& g : orderF) {
        std::uint64_t need = neg_mask(g) & ~seenPos;
        for (std::size_t i = 0; i < u.size(); ++i)
            if (need >> i & 1)
                parts.push_back(lra::gt(u[i], lra::Lin(0)));
        seenPos |= pos_mask(g);
    }
    return lra::conj(parts);
}

// Mirror image: for every letter and every coordinate it increments, the
// coordinate is positive in v or a letter whose last occurrence comes later
// decrements it.
inline lra::Formula co_admissibility_formula(const std::vector<IntVector>& orderB, const VarVec& v)
{
    std::vector<lra::Formula> parts;
    std::uint64_t laterNeg = 0;
    for (auto it = orderB.rbegin(); it != orderB.rend(); ++it) {
        std::uint64_t need = pos_mask(*it) & ~laterNeg;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (need >> i & 1)
                parts.push_back(lra::gt(v[i], lra::Lin(0)));
        laterNeg |= neg_mask(*it);
    }
    return lra::conj(parts);
}

// Abstract view of one word: which nonzero letters occur and, per letter,
// which of its decremented (incremented) coordinates are covered by an
// increment before its first occurrence (a decrement after its last).
struct Signature {
    std::uint64_t gamma = 0;
    std::vector<std::uint64_t> covF, covB;

    bool operator<(const Signature& o) const
    {
        if (gamma != o.gamma)
            return gamma < o.gamma;
        if (covF != o.covF)
            return covF < o.covF;
        return covB < o.covB;
    }
    bool operator==(const Signature& o) const { return gamma == o.gamma && covF == o.covF && covB == o.covB; }
};

struct SignatureCapExceeded : std::runtime_error {
    SignatureCapExceeded() : std::runtime_error("signature cap exceeded") {}
};

class SignatureAlgebra {
public:
    explicit SignatureAlgebra(const std::vector<IntVector>& alphabet, bool withBackward = true)
        : withB_(withBackward)
    {
        if (alphabet.size() > 64)
            throw std::invalid_argument("signature algebra supports at most 64 letters");
        for (auto& a : alphabet) {
            if (a.size() > 64)
                throw std::invalid_argument("signature algebra supports at most 64 counters");
            pos_.push_back(pos_mask(a));
            neg_.push_back(neg_mask(a));
            zero_.push_back(is_zero(a));
        }
    }

    Signature empty() const
    {
        Signature s;
        s.covF.assign(pos_.size(), 0);
        s.covB.assign(withB_ ? pos_.size() : 0, 0);
        return s;
    }

    Signature letter(int a) const
    {
        Signature s = empty();
        if (!zero_[a])
            s.gamma = std::uint64_t(1) << a;
        return s;
    }

    Signature concat(const Signature& x, const Signature& y) const
    {
        Signature s = empty();
        s.gamma = x.gamma | y.gamma;
        std::uint64_t posX = 0, negY = 0;
        for (std::size_t a = 0; a < pos_.size(); ++a) {
            if (x.gamma >> a & 1)
                posX |= pos_[a];
            if (y.gamma >> a & 1)
                negY |= neg_[a];
        }
        for (std::size_t a = 0; a < pos_.size(); ++a) {
            bool inX = x.gamma >> a & 1, inY = y.gamma >> a & 1;
            if (inX)
                s.covF[a] = x.covF[a];
            else if (inY)
                s.covF[a] = (posX & neg_[a]) | y.covF[a];
            if (withB_) {
                if (inY)
                    s.covB[a] = y.covB[a];
                else if (inX)
                    s.covB[a] = (negY & pos_[a]) | x.covB[a];
            }
        }
        return s;
    }

    // a is at least as permissive as b
    bool dominates(const Signature& a, const Signature& b) const
    {
        if (a.gamma != b.gamma)
            return false;
        for (std::size_t k = 0; k < pos_.size(); ++k) {
            if ((b.covF[k] & ~a.covF[k]) != 0)
                return false;
            if (withB_ && (b.covB[k] & ~a.covB[k]) != 0)
                return false;
        }
        return true;
    }

    // inserts s unless dominated; drops entries s dominates
    bool insert(std::vector<Signature>& set, const Signature& s) const
    {
        for (auto& t : set)
            if (dominates(t, s))
                return false;
        std::erase_if(set, [&](const Signature& t) { return dominates(s, t); });
        set.push_back(s);
        return true;
    }

    bool with_backward() const { return withB_; }

private:
    bool withB_;
    std::vector<std::uint64_t> pos_, neg_;
    std::vector<bool> zero_;
};

// Maximal signatures of the words of g, per nonterminal, by fixpoint.
inline std::vector<Signature> language_signatures(const VectorGrammar& g, bool withBackward = true,
                                                  std::size_t cap = 20000)
{
    SignatureAlgebra alg(g.alphabet, withBackward);
    int n = g.num_nts();
    if (n == 0)
        return {};
    std::vector<std::vector<Signature>> sig(n);
    std::size_t total = 0;
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : g.prods) {
            std::vector<Signature> acc{alg.empty()};
            for (auto& s : p.rhs) {
                std::vector<Signature> next;
                if (s.term) {
                    Signature l = alg.letter(s.id);
                    for (auto& x : acc)
                        alg.insert(next, alg.concat(x, l));
                } else {
                    for (auto& x : acc)
                        for (auto& y : sig[s.id])
                            alg.insert(next, alg.concat(x, y));
                }
                acc = std::move(next);
                if (acc.empty())
                    break;
            }
            for (auto& s : acc)
                if (alg.insert(sig[p.lhs], s)) {
                    changed = true;
                    if (++total > cap)
                        throw SignatureCapExceeded();
                }
        }
    }
    auto out = sig[g.start];
    std::sort(out.begin(), out.end());
    return out;
}

inline lra::Formula admissibility_from_signature(const std::vector<IntVector>& alphabet, const Signature& s,
                                                 const VarVec& u)
{
    std::vector<lra::Formula> parts;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
        if (!(s.gamma >> a & 1))
            continue;
        std::uint64_t need = neg_mask(alphabet[a]) & ~s.covF[a];
        for (std::size_t i = 0; i < u.size(); ++i)
            if (need >> i & 1)
                parts.push_back(lra::gt(u[i], lra::Lin(0)));
    }
    return lra::conj(parts);
}

inline lra::Formula co_admissibility_from_signature(const std::vector<IntVector>& alphabet, const Signature& s,
                                                    const VarVec& v)
{
    std::vector<lra::Formula> parts;
    for (std::size_t a = 0; a < alphabet.size(); ++a) {
        if (!(s.gamma >> a & 1))
            continue;
        std::uint64_t need = pos_mask(alphabet[a]) & ~s.covB[a];
        for (std::size_t i = 0; i < v.size(); ++i)
            if (need >> i & 1)
                parts.push_back(lra::gt(v[i], lra::Lin(0)));
    }
    return lra::conj(parts);
}

inline std::vector<IntVector> signature_letters(const std::vector<IntVector>& alphabet, const Signature& s)
{
    std::vector<IntVector> out;
    for (std::size_t a = 0; a < alphabet.size(); ++a)
        if (s.gamma >> a & 1)
            out.push_back(alphabet[a]);
    return out;
}

// Reachability along the words with signature s, assuming they form a
// semigroup: Q-reachability plus admissibility in both directions.
inline lra::Formula signature_reach_formula(const std::vector<IntVector>& alphabet, const Signature& s,
                                            const VarVec& u, const VarVec& v, const std::string& prefix)
{
    return lra::conj({q_reach_formula(signature_letters(alphabet, s), u, v, prefix),
                      admissibility_from_signature(alphabet, s, u), co_admissibility_from_signature(alphabet, s, v),
                      nonneg(u), nonneg(v)});
}

struct EmptyLanguage : std::runtime_error {
    EmptyLanguage() : std::runtime_error("semigroup language is empty") {}
};
struct NotReachable : std::runtime_error {
    NotReachable() : std::runtime_error("target not reachable along the semigroup") {}
};

// Shortest word of a nonempty grammar; ties broken by production order.
inline std::optional<Word> shortest_word(const VectorGrammar& in)
{
    VectorGrammar g = in.cnf ? in : to_cnf(in);
    if (is_empty(g))
        return std::nullopt;
    int n = g.num_nts();
    std::vector<std::optional<Word>> best(n);
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& p : g.prods) {
            Word w;
            bool ok = true;
            for (auto& s : p.rhs) {
                if (s.term) {
                    w.push_back(s.id);
                } else if (best[s.id]) {
                    w.insert(w.end(), best[s.id]->begin(), best[s.id]->end());
                } else {
                    ok = false;
                    break;
                }
            }
            if (ok && (!best[p.lhs] || w.size() < best[p.lhs]->size())) {
                best[p.lhs] = w;
                changed = true;
            }
        }
    }
    return best[g.start];
}

// CYK membership on the CNF form.
inline bool member(const VectorGrammar& in, const std::vector<IntVector>& word)
{
    VectorGrammar g = in.cnf ? in : to_cnf(in);
    int n = static_cast<int>(word.size());
    if (n == 0) {
        for (auto& p : g.prods)
            if (p.lhs == g.start && p.rhs.empty())
                return true;
        return false;
    }
    std::vector<int> ids;
    for (auto& a : word) {
        int id = g.find_letter(a);
        if (id < 0)
            return false;
        ids.push_back(id);
    }
    // CYK with one bitset of nonterminals per span
    int N = g.num_nts();
    std::size_t W = (static_cast<std::size_t>(N) + 63) / 64;
    std::vector<std::uint64_t> tab(static_cast<std::size_t>(n) * (n + 1) * W);
    auto cell = [&](int i, int len) { return tab.data() + (static_cast<std::size_t>(i) * (n + 1) + len) * W; };
    auto has = [](const std::uint64_t* c, int x) { return (c[x / 64] >> (x % 64)) & 1; };
    std::vector<std::vector<std::pair<int, int>>> byFirst(N); // B -> (C, A) for A -> B C
    for (auto& p : g.prods)
        if (p.rhs.size() == 2)
            byFirst[p.rhs[0].id].emplace_back(p.rhs[1].id, p.lhs);
    for (int i = 0; i < n; ++i)
        for (auto& p : g.prods)
            if (p.rhs.size() == 1 && p.rhs[0].id == ids[i])
                cell(i, 1)[p.lhs / 64] |= std::uint64_t(1) << (p.lhs % 64);
    for (int len = 2; len <= n; ++len)
        for (int i = 0; i + len <= n; ++i) {
            std::uint64_t* out = cell(i, len);
            for (int k = 1; k < len; ++k) {
                const std::uint64_t* L = cell(i, k);
                const std::uint64_t* R = cell(i + k, len - k);
                for (std::size_t w = 0; w < W; ++w)
                    for (std::uint64_t bits = L[w]; bits; bits &= bits - 1) {
                        int B = static_cast<int>(w * 64) + std::countr_zero(bits);
                        for (auto [C, A] : byFirst[B])
                            if (has(R, C))
                                out[A / 64] |= std::uint64_t(1) << (A % 64);
                    }
            }
        }
    return has(cell(0, n), g.start);
}

inline std::vector<IntVector> first_order_of(const std::vector<IntVector>& w)
{
    std::vector<IntVector> out;
    for (auto& a : w)
        if (!is_zero(a) && std::find(out.begin(), out.end(), a) == out.end())
            out.push_back(a);
    return out;
}

inline std::vector<IntVector> last_order_of(const std::vector<IntVector>& w)
{
    std::vector<IntVector> out;
    for (auto it = w.rbegin(); it != w.rend(); ++it)
        if (!is_zero(*it) && std::find(out.begin(), out.end(), *it) == out.end())
            out.insert(out.begin(), *it);
    return out;
}

// A semigroup grammar restricted to one support sequence (letter set with a
// first-occurrence order and a last-occurrence order).
struct SemigroupSpec {
    VectorGrammar grammar; // already restricted, CNF
    std::vector<IntVector> orderF, orderB;
    std::optional<std::vector<IntVector>> certificate;

    static SemigroupSpec make(const VectorGrammar& g, std::vector<IntVector> orderF, std::vector<IntVector> orderB,
                              std::optional<std::vector<IntVector>> certificate = std::nullopt)
    {
        SemigroupSpec s;
        if (std::set<IntVector>(orderF.begin(), orderF.end()) != std::set<IntVector>(orderB.begin(), orderB.end()) ||
            std::set<IntVector>(orderF.begin(), orderF.end()).size() != orderF.size())
            throw std::invalid_argument("orders must be total on the same letter set");
        s.grammar = restrict_support(g, orderF, orderB);
        s.orderF = std::move(orderF);
        s.orderB = std::move(orderB);
        if (certificate) {
            if (!member(s.grammar, *certificate))
                throw std::invalid_argument("certificate is not in the restricted language");
            s.certificate = certificate;
        }
        return s;
    }
};

inline lra::Formula semigroup_reach_formula(const SemigroupSpec& spec, const VarVec& u, const VarVec& v,
                                            const std::string& prefix)
{
    if (is_empty(spec.grammar))
        throw EmptyLanguage();
    return lra::conj({q_reach_formula(spec.orderF, u, v, prefix), admissibility_formula(spec.orderF, u),
                      co_admissibility_formula(spec.orderB, v), nonneg(u), nonneg(v)});
}

struct SynthesizedRun {
    std::vector<IntVector> word;
    std::vector<Rational> fractions;
};

// One-state machine whose rules are the distinct letters of the word.
inline Machine letter_machine(int d, const std::vector<IntVector>& letters)
{
    Machine m;
    m.model = Model::Qvass;
    m.dim = d;
    m.add_state("q");
    for (auto& a : letters)
        m.add_rule(0, 0, a);
    return m;
}

inline RatVector replay_word(const RatVector& u, const SynthesizedRun& run)
{
    std::vector<IntVector> letters;
    FiringSequence seq;
    for (std::size_t i = 0; i < run.word.size(); ++i) {
        auto it = std::find(letters.begin(), letters.end(), run.word[i]);
        int r = static_cast<int>(it - letters.begin());
        if (it == letters.end())
            letters.push_back(run.word[i]);
        seq.push_back({run.fractions[i], r});
    }
    Machine m = letter_machine(static_cast<int>(u.size()), letters);
    return check_run(m, Config{0, {}, u}, seq).values;
}

namespace detail {
// Fractions for an admissible run along w from x that keep every coordinate
// which is positive, or gets incremented, strictly positive.
inline std::vector<Rational> halving_fractions(const std::vector<IntVector>& w, RatVector x)
{
    std::vector<Rational> out;
    for (auto& a : w) {
        Rational alpha(1);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (sgn(a[j]) < 0) {
                if (sgn(x[j]) <= 0)
                    throw std::logic_error("admissibility violated during synthesis");
                Rational lim = x[j] / Rational(-2 * a[j]);
                if (lim < alpha)
                    alpha = lim;
            }
        x = vec_affine(x, alpha, a);
        out.push_back(alpha);
    }
    return out;
}
} // namespace detail

inline SynthesizedRun synthesize_run(const SemigroupSpec& spec, const RatVector& u, const RatVector& v)
{
    if (is_empty(spec.grammar))
        throw EmptyLanguage();
    std::string prefix = "syn";
    lra::Formula f = semigroup_reach_formula(spec, const_vars(u), const_vars(v), prefix);
    auto res = lra::is_sat(f);
    if (res.status != lra::Status::Sat)
        throw NotReachable();

    std::vector<IntVector> w;
    if (spec.certificate) {
        w = *spec.certificate;
    } else {
        auto sw = shortest_word(spec.grammar);
        w = word_vectors(spec.grammar, *sw);
    }
    SynthesizedRun out;
    if (spec.orderF.empty()) {
        // only zero letters: any fractions keep u fixed
        out.word = w;
        out.fractions.assign(w.size(), Rational(1));
        return out;
    }
    std::size_t k = spec.orderF.size();
    auto letterIndex = [&](const IntVector& a) {
        return static_cast<std::size_t>(std::find(spec.orderF.begin(), spec.orderF.end(), a) - spec.orderF.begin());
    };
    std::vector<Rational> c(k), F(k), B(k);
    std::vector<Integer> occ(k);
    for (std::size_t a = 0; a < k; ++a)
        if (!is_zero(spec.orderF[a]))
            c[a] = res.model.at(lra::var(prefix + ".c" + std::to_string(a)));

    std::vector<Rational> alphaF = detail::halving_fractions(w, u);
    std::vector<IntVector> rw;
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
        IntVector neg = *it;
        for (auto& x : neg)
            x = -x;
        rw.push_back(neg);
    }
    std::vector<Rational> betaRev = detail::halving_fractions(rw, v);
    std::vector<Rational> beta(betaRev.rbegin(), betaRev.rend());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (is_zero(w[i]))
            continue;
        std::size_t a = letterIndex(w[i]);
        F[a] += alphaF[i];
        B[a] += beta[i];
        occ[a] += 1;
    }
    Rational lambda = make_rational(1, 2);
    for (std::size_t a = 0; a < k; ++a) {
        if (is_zero(spec.orderF[a]))
            continue;
        Rational lim = c[a] / (2 * (F[a] + B[a]));
        if (lim < lambda)
            lambda = lim;
    }
    std::vector<Rational> e(k);
    Integer Nrep(1);
    for (std::size_t a = 0; a < k; ++a) {
        if (is_zero(spec.orderF[a]))
            continue;
        e[a] = c[a] - lambda * (F[a] + B[a]);
        Integer need = ceil_rat(e[a] / Rational(occ[a]));
        if (need > Nrep)
            Nrep = need;
    }
    RatVector x = u, y = v;
    for (std::size_t i = 0; i < w.size(); ++i) {
        x = vec_affine(x, lambda * alphaF[i], w[i]);
        y = vec_affine(y, -lambda * beta[i], w[i]);
    }
    // repetition count of the middle block
    std::size_t d = u.size();
    Rational aNeg(1), aPos(1);
    for (std::size_t j = 0; j < d; ++j) {
        Rational negj(0), posj(0);
        for (std::size_t a = 0; a < k; ++a) {
            const Integer& t = spec.orderF[a][j];
            if (sgn(t) < 0)
                negj += e[a] * Rational(-t);
            else if (sgn(t) > 0)
                posj += e[a] * Rational(t);
        }
        if (sgn(negj) > 0) {
            if (sgn(x[j]) <= 0)
                throw std::logic_error("support condition violated at the forward end");
            Rational r = x[j] / negj;
            if (r < aNeg)
                aNeg = r;
        }
        if (sgn(posj) > 0) {
            if (sgn(y[j]) <= 0)
                throw std::logic_error("support condition violated at the backward end");
            Rational r = y[j] / posj;
            if (r < aPos)
                aPos = r;
        }
    }
    Integer nrep = ceil_rat(1 / aNeg);
    if (ceil_rat(1 / aPos) > nrep)
        nrep = ceil_rat(1 / aPos);
    if (nrep < 2)
        nrep = 2;

    if (!nrep.fits_ulong_p() || !Nrep.fits_ulong_p() || Nrep * nrep * Integer(w.size()) > Integer(50000000))
        throw std::runtime_error("synthesized run would be too long");
    unsigned long reps = Nrep.get_ui() * nrep.get_ui();
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.word.push_back(w[i]);
        out.fractions.push_back(is_zero(w[i]) ? Rational(1) : lambda * alphaF[i]);
    }
    std::vector<Rational> mid(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (is_zero(w[i])) {
            mid[i] = 1;
            continue;
        }
        std::size_t a = letterIndex(w[i]);
        mid[i] = e[a] / (Rational(occ[a]) * Rational(Nrep) * Rational(nrep));
    }
    for (unsigned long r = 0; r < reps; ++r)
        for (std::size_t i = 0; i < w.size(); ++i) {
            out.word.push_back(w[i]);
            out.fractions.push_back(mid[i]);
        }
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.word.push_back(w[i]);
        out.fractions.push_back(is_zero(w[i]) ? Rational(1) : lambda * beta[i]);
    }
    if (replay_word(u, out) != v)
        throw std::logic_error("synthesized run misses the target");
    return out;
}

} // namespace cpv
