#pragma once

#include "numerics.hpp"

#include <chrono>
#include <optional>
#include <utility>
#include <vector>

namespace cpv {

// a + b·δ for an infinitesimal δ > 0
struct DeltaRational {
    Rational r;
    Rational d;

    DeltaRational() = default;
    DeltaRational(Rational r_, Rational d_ = Rational(0)) : r(std::move(r_)), d(std::move(d_)) {}

    friend bool operator<(const DeltaRational& a, const DeltaRational& b)
    {
        int c = cmp(a.r, b.r);
        return c < 0 || (c == 0 && a.d < b.d);
    }
    friend bool operator>(const DeltaRational& a, const DeltaRational& b) { return b < a; }
    friend bool operator<=(const DeltaRational& a, const DeltaRational& b) { return !(b < a); }
    friend bool operator>=(const DeltaRational& a, const DeltaRational& b) { return !(a < b); }
    friend bool operator==(const DeltaRational& a, const DeltaRational& b) { return a.r == b.r && a.d == b.d; }
    DeltaRational& operator+=(const DeltaRational& o)
    {
        r += o.r;
        d += o.d;
        return *this;
    }
    friend DeltaRational operator-(const DeltaRational& a, const DeltaRational& b) { return {a.r - b.r, a.d - b.d}; }
    friend DeltaRational operator*(const Rational& k, const DeltaRational& a) { return {k * a.r, k * a.d}; }
};

enum class SimplexRel { Lt, Le, Eq, Ge, Gt };

// General simplex in the style of Dutertre and de Moura: every constraint
// becomes a bound on an original or slack variable, strict bounds are moved
// by an infinitesimal, pivoting follows Bland's rule.
class Simplex {
public:
    enum class Result { Sat, Unsat, Timeout };
    using Clock = std::chrono::steady_clock;

    explicit Simplex(int nvars) : n_(nvars), lower_(nvars), upper_(nvars), val_(nvars, DeltaRational()), basicRow_(nvars, -1) {}

    // sum coef·x rel rhs over original variable indices
    void add(const std::vector<std::pair<int, Rational>>& coefs, SimplexRel rel, const Rational& rhs)
    {
        std::vector<std::pair<int, Rational>> nz;
        for (auto& [v, c] : coefs)
            if (sgn(c) != 0)
                nz.emplace_back(v, c);
        if (nz.empty()) {
            int s = sgn(Rational(-rhs));
            bool ok = rel == SimplexRel::Lt   ? s < 0
                      : rel == SimplexRel::Le ? s <= 0
                      : rel == SimplexRel::Eq ? s == 0
                      : rel == SimplexRel::Ge ? s >= 0
                                              : s > 0;
            if (!ok)
                trivialConflict_ = true;
            return;
        }
        int target;
        Rational bound = rhs;
        if (nz.size() == 1) {
            target = nz[0].first;
            bound /= nz[0].second;
            if (sgn(nz[0].second) < 0)
                rel = flip(rel);
        } else {
            target = add_slack(nz);
        }
        switch (rel) {
        case SimplexRel::Lt: tighten_upper(target, {bound, Rational(-1)}); break;
        case SimplexRel::Le: tighten_upper(target, {bound}); break;
        case SimplexRel::Eq:
            tighten_upper(target, {bound});
            tighten_lower(target, {bound});
            break;
        case SimplexRel::Ge: tighten_lower(target, {bound}); break;
        case SimplexRel::Gt: tighten_lower(target, {bound, Rational(1)}); break;
        }
    }

    Result check(std::optional<Clock::time_point> deadline = std::nullopt)
    {
        if (trivialConflict_)
            return Result::Unsat;
        int total = static_cast<int>(val_.size());
        for (int j = 0; j < total; ++j) {
            if (basicRow_[j] >= 0)
                continue;
            if (lower_[j] && val_[j] < *lower_[j])
                update(j, *lower_[j]);
            else if (upper_[j] && val_[j] > *upper_[j])
                update(j, *upper_[j]);
        }
        std::size_t iter = 0;
        for (;;) {
            if (deadline && (++iter & 15) == 0 && Clock::now() > *deadline)
                return Result::Timeout;
            int bi = -1;
            for (int x = 0; x < total; ++x) {
                int r = basicRow_[x];
                if (r < 0)
                    continue;
                if ((lower_[x] && val_[x] < *lower_[x]) || (upper_[x] && val_[x] > *upper_[x])) {
                    bi = x;
                    break;
                }
            }
            if (bi < 0)
                return Result::Sat;
            int r = basicRow_[bi];
            bool raise = lower_[bi] && val_[bi] < *lower_[bi];
            int pick = -1;
            for (int j = 0; j < total; ++j) {
                if (basicRow_[j] >= 0)
                    continue;
                int s = sgn(rows_[r][j]);
                if (s == 0)
                    continue;
                bool up = raise ? s > 0 : s < 0;
                if (up ? (!upper_[j] || val_[j] < *upper_[j]) : (!lower_[j] || val_[j] > *lower_[j])) {
                    pick = j;
                    break;
                }
            }
            if (pick < 0)
                return Result::Unsat;
            pivot_and_update(r, pick, raise ? *lower_[bi] : *upper_[bi]);
        }
    }

    // Concrete rational values for the original variables; call after Sat.
    std::vector<Rational> model() const
    {
        Rational delta(1);
        int total = static_cast<int>(val_.size());
        auto limit = [&](const DeltaRational& lo, const DeltaRational& hi) {
            // need lo.r + lo.d·δ <= hi.r + hi.d·δ
            if (lo.r < hi.r && lo.d > hi.d) {
                Rational cand = (hi.r - lo.r) / (lo.d - hi.d);
                if (cand < delta)
                    delta = cand;
            }
        };
        for (int x = 0; x < total; ++x) {
            if (lower_[x])
                limit(*lower_[x], val_[x]);
            if (upper_[x])
                limit(val_[x], *upper_[x]);
        }
        std::vector<Rational> out(n_);
        for (int i = 0; i < n_; ++i)
            out[i] = val_[i].r + val_[i].d * delta;
        return out;
    }

private:
    static SimplexRel flip(SimplexRel r)
    {
        switch (r) {
        case SimplexRel::Lt: return SimplexRel::Gt;
        case SimplexRel::Le: return SimplexRel::Ge;
        case SimplexRel::Ge: return SimplexRel::Le;
        case SimplexRel::Gt: return SimplexRel::Lt;
        default: return r;
        }
    }

    void tighten_upper(int x, DeltaRational b)
    {
        if (!upper_[x] || b < *upper_[x])
            upper_[x] = std::move(b);
        if (lower_[x] && *lower_[x] > *upper_[x])
            trivialConflict_ = true;
    }

    void tighten_lower(int x, DeltaRational b)
    {
        if (!lower_[x] || b > *lower_[x])
            lower_[x] = std::move(b);
        if (upper_[x] && *lower_[x] > *upper_[x])
            trivialConflict_ = true;
    }

    int add_slack(const std::vector<std::pair<int, Rational>>& nz)
    {
        int s = static_cast<int>(val_.size());
        lower_.emplace_back();
        upper_.emplace_back();
        val_.emplace_back();
        basicRow_.push_back(static_cast<int>(rows_.size()));
        for (auto& row : rows_)
            row.emplace_back(0);
        std::vector<Rational> row(s + 1);
        DeltaRational v;
        for (auto& [x, c] : nz) {
            int r = basicRow_[x];
            if (r < 0) {
                row[x] += c;
            } else {
                for (int k = 0; k < s; ++k)
                    if (sgn(rows_[r][k]) != 0)
                        row[k] += c * rows_[r][k];
            }
            v += c * val_[x];
        }
        val_[s] = v;
        rows_.push_back(std::move(row));
        rowBasic_.push_back(s);
        return s;
    }

    void update(int j, const DeltaRational& v)
    {
        DeltaRational diff = v - val_[j];
        for (std::size_t r = 0; r < rows_.size(); ++r)
            if (sgn(rows_[r][j]) != 0)
                val_[rowBasic_[r]] += rows_[r][j] * diff;
        val_[j] = v;
    }

    void pivot_and_update(int r, int j, const DeltaRational& v)
    {
        int b = rowBasic_[r];
        Rational a = rows_[r][j];
        DeltaRational theta = Rational(1 / a) * (v - val_[b]);
        val_[b] = v;
        val_[j] += theta;
        for (std::size_t k = 0; k < rows_.size(); ++k)
            if (static_cast<int>(k) != r && sgn(rows_[k][j]) != 0)
                val_[rowBasic_[k]] += rows_[k][j] * theta;

        std::vector<Rational>& row = rows_[r];
        Rational inv = 1 / a;
        std::size_t total = row.size();
        for (std::size_t k = 0; k < total; ++k)
            if (sgn(row[k]) != 0)
                row[k] = -row[k] * inv;
        row[j] = 0;
        row[b] = inv;
        for (std::size_t k = 0; k < rows_.size(); ++k) {
            if (static_cast<int>(k) == r)
                continue;
            Rational c = rows_[k][j];
            if (sgn(c) == 0)
                continue;
            rows_[k][j] = 0;
            for (std::size_t t = 0; t < total; ++t)
                if (sgn(row[t]) != 0)
                    rows_[k][t] += c * row[t];
        }
        basicRow_[j] = r;
        basicRow_[b] = -1;
        rowBasic_[r] = j;
    }

    int n_;
    std::vector<std::optional<DeltaRational>> lower_, upper_;
    std::vector<DeltaRational> val_;
    std::vector<int> basicRow_; // variable -> row, or -1 when nonbasic
    std::vector<int> rowBasic_;
    std::vector<std::vector<Rational>> rows_;
    bool trivialConflict_ = false;
};

} // namespace cpv
