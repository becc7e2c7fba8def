#pragma once

#include "creach.hpp"
#include "grammar.hpp"
#include "lra.hpp"

#include <string>
#include <vector>

namespace cpv {

inline IntVector forward_letter(const IntVector& b)
{
    IntVector out = b;
    out.resize(2 * b.size(), Integer(0));
    return out;
}

inline IntVector backward_letter(const IntVector& b)
{
    IntVector out(b.size(), Integer(0));
    for (auto& x : b)
        out.push_back(-x);
    return out;
}

// Grammar K over Z^{2d} whose words interleave the left part of a pump
// A =>* w A w' (as forward letters) with the reversed right part (as
// negated backward letters). A run (u,v') -> (v,u') along a word of K is a
// run u -> v along w together with a run u' -> v' along w'.
inline VectorGrammar semigroup_of_pumps(const VectorGrammar& in, int A)
{
    const VectorGrammar& g = in;
    for (auto& p : g.prods) {
        bool ok = p.rhs.empty() || (p.rhs.size() == 1 && p.rhs[0].term) ||
                  (p.rhs.size() == 2 && !p.rhs[0].term && !p.rhs[1].term);
        if (!ok)
            throw std::invalid_argument("semigroup_of_pumps expects a CNF grammar");
    }
    if (A < 0 || A >= g.num_nts())
        throw std::out_of_range("unknown nonterminal");
    VectorGrammar k;
    k.dim = 2 * g.dim;
    std::vector<int> fw, bw, hat, lf, lb;
    for (auto& b : g.alphabet) {
        lf.push_back(k.letter(forward_letter(b)));
        lb.push_back(k.letter(backward_letter(b)));
    }
    for (int b = 0; b < g.num_nts(); ++b) {
        fw.push_back(k.add_nt("F." + g.ntNames[b]));
        bw.push_back(k.add_nt("B." + g.ntNames[b]));
        hat.push_back(k.add_nt("P." + g.ntNames[b]));
    }
    k.start = hat[A];
    k.add(hat[A], {});
    for (auto& p : g.prods) {
        int b = p.lhs;
        if (p.rhs.empty()) {
            k.add(fw[b], {});
            k.add(bw[b], {});
        } else if (p.rhs.size() == 1) {
            k.add(fw[b], {T(lf[p.rhs[0].id])});
            k.add(bw[b], {T(lb[p.rhs[0].id])});
        } else {
            int c = p.rhs[0].id, d = p.rhs[1].id;
            k.add(fw[b], {N(fw[c]), N(fw[d])});
            k.add(bw[b], {N(bw[d]), N(bw[c])});
            k.add(hat[b], {N(fw[c]), N(hat[d])});
            k.add(hat[b], {N(bw[d]), N(hat[c])});
        }
    }
    return trim(k);
}

// The pump relation of one nonterminal, with its realizable signatures
// computed once and instantiated on demand.
class PumpRelation {
public:
    PumpRelation(const VectorGrammar& g, int A, std::size_t cap = 20000)
        : dim_(g.dim), k_(semigroup_of_pumps(g, A))
    {
        for (auto& s : language_signatures(k_, true, cap))
            if (s.gamma != 0)
                sigs_.push_back(s);
    }

    const VectorGrammar& grammar() const { return k_; }
    const std::vector<Signature>& signatures() const { return sigs_; }
    bool trivial() const { return sigs_.empty(); }

    // choice 0 is the identity, choice s+1 the realizable signature s
    lra::Formula disjunct(std::size_t choice, const VarVec& u, const VarVec& v, const VarVec& up, const VarVec& vp,
                          const std::string& prefix) const
    {
        if (choice == 0) {
            std::vector<lra::Formula> id{nonneg(u), nonneg(up)};
            for (int i = 0; i < dim_; ++i) {
                id.push_back(lra::eq(u[i], v[i]));
                id.push_back(lra::eq(up[i], vp[i]));
            }
            return lra::conj(id);
        }
        VarVec U(u), V(v);
        U.insert(U.end(), vp.begin(), vp.end());
        V.insert(V.end(), up.begin(), up.end());
        return signature_reach_formula(k_.alphabet, sigs_.at(choice - 1), U, V, prefix + ".p" + std::to_string(choice - 1));
    }

    std::vector<lra::Formula> disjuncts(const VarVec& u, const VarVec& v, const VarVec& up, const VarVec& vp,
                                        const std::string& prefix) const
    {
        std::vector<lra::Formula> out;
        for (std::size_t c = 0; c <= sigs_.size(); ++c)
            out.push_back(disjunct(c, u, v, up, vp, prefix));
        return out;
    }

    lra::Formula formula(const VarVec& u, const VarVec& v, const VarVec& up, const VarVec& vp,
                         const std::string& prefix) const
    {
        return lra::disj(disjuncts(u, v, up, vp, prefix));
    }

private:
    int dim_;
    VectorGrammar k_;
    std::vector<Signature> sigs_;
};

inline lra::Formula pump_formula(const VectorGrammar& g, int A, const VarVec& u, const VarVec& v, const VarVec& up,
                                 const VarVec& vp, const std::string& prefix = "pump")
{
    return PumpRelation(g, A).formula(u, v, up, vp, prefix);
}

} // namespace cpv
