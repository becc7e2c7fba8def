#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cpv {

// gmpxx keeps every arithmetic result in canonical form; only values built
// from a raw numerator/denominator pair need an explicit canonicalize().
using Integer = mpz_class;
using Rational = mpq_class;
using IntVector = std::vector<Integer>;
using RatVector = std::vector<Rational>;

struct DimensionMismatch : std::invalid_argument {
    DimensionMismatch(std::size_t a, std::size_t b)
        : std::invalid_argument("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

inline Rational make_rational(const Integer& num, const Integer& den)
{
    if (den == 0)
        throw std::domain_error("zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational rat_add(const Rational& a, const Rational& b) { return a + b; }
inline Rational rat_mul(const Rational& a, const Rational& b) { return a * b; }
inline int rat_cmp(const Rational& a, const Rational& b)
{
    int c = cmp(a, b);
    return (c > 0) - (c < 0);
}

inline Rational pow2_inverse(unsigned long m)
{
    Integer den;
    mpz_ui_pow_ui(den.get_mpz_t(), 2, m);
    return Rational(Integer(1), den);
}

inline Integer pow2(unsigned long m)
{
    Integer r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, m);
    return r;
}

inline std::string int_str(const Integer& z) { return z.get_str(); }

inline Integer int_parse(std::string_view s)
{
    std::string t(s);
    if (t.empty())
        throw std::invalid_argument("empty integer");
    std::size_t start = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (start == t.size())
        throw std::invalid_argument("bad integer: " + t);
    for (std::size_t i = start; i < t.size(); ++i)
        if (t[i] < '0' || t[i] > '9')
            throw std::invalid_argument("bad integer: " + t);
    if (t[0] == '+')
        t.erase(0, 1);
    return Integer(t, 10);
}

// "p/q", with "/q" omitted when q = 1
inline std::string rat_str(const Rational& r)
{
    if (r.get_den() == 1)
        return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline Rational rat_parse(std::string_view s)
{
    auto slash = s.find('/');
    if (slash == std::string_view::npos)
        return Rational(int_parse(s));
    Integer num = int_parse(s.substr(0, slash));
    auto dens = s.substr(slash + 1);
    if (!dens.empty() && (dens[0] == '-' || dens[0] == '+'))
        throw std::invalid_argument("signed denominator: " + std::string(s));
    return make_rational(num, int_parse(dens));
}

inline RatVector to_rat(const IntVector& v)
{
    RatVector r;
    r.reserve(v.size());
    for (auto& x : v)
        r.emplace_back(x);
    return r;
}

inline RatVector vec_affine(const RatVector& u, const Rational& alpha, const IntVector& t)
{
    if (u.size() != t.size())
        throw DimensionMismatch(u.size(), t.size());
    RatVector r(u);
    for (std::size_t i = 0; i < r.size(); ++i)
        if (t[i] != 0)
            r[i] += alpha * Rational(t[i]);
    return r;
}

inline RatVector vec_add(const RatVector& a, const RatVector& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch(a.size(), b.size());
    RatVector r(a);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] += b[i];
    return r;
}

inline RatVector vec_sub(const RatVector& a, const RatVector& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch(a.size(), b.size());
    RatVector r(a);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= b[i];
    return r;
}

inline RatVector vec_scale(const Rational& a, const RatVector& v)
{
    RatVector r(v);
    for (auto& x : r)
        x *= a;
    return r;
}

inline bool vec_nonneg(const RatVector& v)
{
    for (auto& x : v)
        if (sgn(x) < 0)
            return false;
    return true;
}

inline bool vec_geq(const RatVector& a, const RatVector& b)
{
    if (a.size() != b.size())
        throw DimensionMismatch(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] < b[i])
            return false;
    return true;
}

inline bool is_zero(const IntVector& v)
{
    for (auto& x : v)
        if (x != 0)
            return false;
    return true;
}

inline IntVector int_vec(std::initializer_list<long> xs)
{
    IntVector v;
    for (long x : xs)
        v.emplace_back(x);
    return v;
}

inline RatVector rat_vec(std::initializer_list<const char*> xs)
{
    RatVector v;
    for (auto x : xs)
        v.push_back(rat_parse(x));
    return v;
}

inline std::string vec_str(const RatVector& v)
{
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ",";
        s += rat_str(v[i]);
    }
    return s + ")";
}

inline std::string vec_str(const IntVector& v)
{
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ",";
        s += v[i].get_str();
    }
    return s + ")";
}

// smallest integer >= r
inline Integer ceil_rat(const Rational& r)
{
    Integer q;
    mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    return q;
}

} // namespace cpv
