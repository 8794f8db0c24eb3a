#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ring.hpp"

namespace looprec {

namespace detail {
// A scalar may be dropped from stored coefficients only when it is exactly zero.
// For plain rings that is is_zero(); nested truncated series specialize this below,
// because a zero-to-known-order series still carries precision information.
template <class R>
struct ExactZero {
    static bool check(const R& r) { return r.is_zero(); }
};

// Zero within the tracked precision at every nesting level (is_zero for plain
// rings; specialized for series below).
template <class R>
struct WithinPrecisionZero {
    static bool check(const R& r) { return r.is_zero(); }
};
}  // namespace detail

// Truncated Laurent series  sum_{k >= low} c_k t^k + O(t^order)  over a scalar ring R.
// order == EXACT marks a finite Laurent polynomial with no truncation. Arithmetic tracks the
// minimum compatible order; reading a coefficient at or beyond the truncation throws.
template <class R>
class Series {
public:
    static constexpr int EXACT = 1 << 28;
    static inline int default_order = 40;  // default truncation for infinite expansions

    Series() : low_(0), order_(EXACT) {}
    Series(long n) : low_(0), order_(EXACT) {
        if (n != 0) c_.push_back(R(n));
    }
    Series(const R& r) : low_(0), order_(EXACT) {
        if (!r.is_zero()) c_.push_back(r);
    }
    Series(int low, std::vector<R> coeffs, int order, std::string var = "t")
        : var_(std::move(var)), low_(low), c_(std::move(coeffs)), order_(order) {
        normalize();
    }

    // t^k with exact order
    static Series monomial(int k, const R& coeff = R(1), std::string var = "t") {
        return Series(k, {coeff}, EXACT, std::move(var));
    }
    // the variable itself, truncated at default order unless stated
    static Series var(std::string name = "t", int order = EXACT) {
        return Series(1, {R(1)}, order, std::move(name));
    }

    int low() const { return low_; }
    int order() const { return order_; }
    const std::vector<R>& coeff_data() const { return c_; }
    bool exact() const { return order_ >= EXACT; }
    const std::string& var_name() const { return var_.empty() ? default_var_name() : var_; }

    // Coefficient of t^k; throws PrecisionLoss when k is beyond the truncation order.
    R at(int k) const {
        if (k >= order_) throw calc_error("PrecisionLoss", "coefficient t^" + std::to_string(k) +
                                                               " beyond truncation order " +
                                                               std::to_string(order_));
        if (k < low_ || k >= low_ + (int)c_.size()) return R(0);
        return c_[k - low_];
    }
    // Coefficient access that returns 0 beyond the order (for callers that only need the
    // known part).
    R at_or_zero(int k) const {
        if (k < low_ || k >= low_ + (int)c_.size()) return R(0);
        return c_[k - low_];
    }

    bool is_zero() const { return c_.empty(); }
    // Valuation; only meaningful for nonzero series.
    int valuation() const {
        if (c_.empty()) throw calc_error("PrecisionLoss", "valuation of (truncated) zero series");
        return low_;
    }

    Series operator+(const Series& o) const {
        int ord = std::min(order_, o.order_);
        int lo = std::min(c_.empty() ? o.low_ : low_, o.c_.empty() ? low_ : o.low_);
        if (c_.empty() && o.c_.empty()) lo = 0;
        int hi = ord;
        int hia = c_.empty() ? lo : low_ + (int)c_.size();
        int hib = o.c_.empty() ? lo : o.low_ + (int)o.c_.size();
        hi = std::min(ord, std::max(hia, hib));
        std::vector<R> c;
        for (int k = lo; k < hi; ++k) c.push_back(at_or_zero(k) + o.at_or_zero(k));
        return Series(lo, std::move(c), ord, pick_var(o));
    }
    Series operator-(const Series& o) const { return *this + (-o); }
    Series operator-() const {
        std::vector<R> c = c_;
        for (auto& x : c) x = -x;
        return Series(low_, std::move(c), order_, var_);
    }
    Series operator*(const Series& o) const {
        int ord;
        if (exact() && o.exact()) ord = EXACT;
        else if (c_.empty() || o.c_.empty()) {
            // zero (to known order) times anything: order of the result
            ord = std::min(order_ + (o.c_.empty() ? 0 : o.low_),
                           o.order_ + (c_.empty() ? 0 : low_));
            ord = std::min(ord, EXACT);
            return Series(0, {}, ord, pick_var(o));
        } else
            ord = std::min(sat_add(order_, o.low_), sat_add(o.order_, low_));
        if (c_.empty() || o.c_.empty()) return Series(0, {}, ord, pick_var(o));
        int lo = low_ + o.low_;
        int len = std::min((int)c_.size() + (int)o.c_.size() - 1,
                           ord >= EXACT ? (int)c_.size() + (int)o.c_.size() - 1 : ord - lo);
        if (len <= 0) return Series(0, {}, ord, pick_var(o));
        std::vector<R> c(len, R(0));
        for (size_t i = 0; i < c_.size(); ++i) {
            if (detail::ExactZero<R>::check(c_[i])) continue;
            for (size_t j = 0; j < o.c_.size() && (int)(i + j) < len; ++j)
                c[i + j] = c[i + j] + c_[i] * o.c_[j];
        }
        return Series(lo, std::move(c), ord, pick_var(o));
    }
    Series operator/(const Series& o) const { return *this * o.inverse(); }

    bool operator==(const Series& o) const { return (*this - o).is_zero(); }
    bool operator!=(const Series& o) const { return !(*this == o); }

    // Multiplicative inverse. For exact inputs with more than one term the result is an
    // infinite series truncated at `target_order` (default default_order above valuation).
    Series inverse(int target_order = -1) const {
        if (c_.empty()) throw calc_error("DivisionByZero", "inverse of zero series");
        // Leading coefficients that vanish within their precision are taken as exact
        // zeros here: inversion needs a definite valuation, so it starts at the first
        // coefficient with nonzero stored content.
        size_t lead = 0;
        while (lead < c_.size() && detail::WithinPrecisionZero<R>::check(c_[lead])) ++lead;
        if (lead == c_.size())
            throw calc_error("DivisionByZero", "inverse of zero-within-precision series");
        if (lead > 0) {
            std::vector<R> c(c_.begin() + (long)lead, c_.end());
            return Series(low_ + (int)lead, std::move(c), order_, var_).inverse(target_order);
        }
        if (c_.size() == 1) {
            std::vector<R> c{R(1) / c_[0]};
            return Series(-low_, std::move(c), exact() ? EXACT : order_ - 2 * low_, var_);
        }
        int ord;
        if (target_order >= 0) ord = target_order;
        else if (!exact()) ord = order_ - 2 * low_;
        else ord = default_order - low_;
        // Newton iteration for the inverse of the unit part u = c / t^low.
        int n = ord + low_;  // number of needed coefficients of 1/u
        if (n <= 0) return Series(0, {}, ord, var_);
        std::vector<R> u(c_);
        std::vector<R> inv{R(1) / u[0]};
        while ((int)inv.size() < n) {
            int m = std::min<int>(2 * (int)inv.size(), n);
            // inv <- 2*inv - inv*(u*inv) mod t^m
            std::vector<R> prod(m, R(0));
            for (size_t i = 0; i < u.size() && (int)i < m; ++i)
                for (size_t j = 0; j < inv.size() && (int)(i + j) < (size_t)m; ++j)
                    prod[i + j] = prod[i + j] + u[i] * inv[j];
            std::vector<R> next(m, R(0));
            std::vector<R> ip(m, R(0));
            for (size_t i = 0; i < inv.size(); ++i)
                for (size_t j = 0; j < prod.size() && (int)(i + j) < (size_t)m; ++j)
                    ip[i + j] = ip[i + j] + inv[i] * prod[j];
            for (int i = 0; i < m; ++i) {
                R v = (i < (int)inv.size() ? inv[i] : R(0));
                next[i] = v + v - ip[i];
            }
            inv = std::move(next);
        }
        inv.resize(n);
        return Series(-low_, std::move(inv), ord, var_);
    }

    // Declares the series known to `ord` (caller's responsibility: used by iterative
    // refinement where convergence guarantees the extra coefficients).
    Series with_order(int ord) const { return Series(low_, c_, ord, var_); }

    Series truncate(int ord) const {
        std::vector<R> c;
        for (int k = low_; k < std::min(ord, low_ + (int)c_.size()); ++k)
            c.push_back(c_[k - low_]);
        return Series(low_, std::move(c), std::min(ord, order_), var_);
    }

    // multiply by t^k
    Series shift(int k) const {
        return Series(low_ + k, c_, exact() ? EXACT : order_ + k, var_);
    }

    Series derivative() const {
        std::vector<std::pair<int, R>> terms;
        for (int k = low_; k < low_ + (int)c_.size(); ++k) {
            if (k == 0) continue;
            terms.push_back({k - 1, R(k) * c_[k - low_]});
        }
        int newlow = terms.empty() ? 0 : terms.front().first;
        int newhi = terms.empty() ? 0 : terms.back().first + 1;
        std::vector<R> out(newhi - newlow, R(0));
        for (auto& [k, v] : terms) out[k - newlow] = v;
        return Series(newlow, std::move(out), exact() ? EXACT : order_ - 1, var_);
    }

    // Substitute t -> g(t) where g has valuation >= 1 (or >= 0 with exact finite *this).
    Series compose(const Series& g) const {
        Series acc(0);
        // Horner over nonnegative part; negative powers via inverse powers of g.
        int hi = low_ + (int)c_.size();
        for (int k = hi - 1; k >= std::max(low_, 0); --k)
            acc = acc * g + Series(at_or_zero(k));
        if (low_ < 0) {
            Series ginv = g.inverse();
            Series p(1);
            for (int k = -1; k >= low_; --k) {
                p = p * ginv;
                Series term = p * Series(at_or_zero(k));
                acc = acc + term;
            }
        }
        if (!exact()) {
            int gval = g.is_zero() ? 1 : g.valuation();
            acc = acc.truncate(std::min(acc.order(), order_ * std::max(gval, 1)));
        }
        return acc;
    }

    // exp of a series with positive valuation (exact exponentials of constants are not needed).
    Series exp_series(int target_order = -1) const {
        if (!c_.empty() && valuation() < 1)
            throw calc_error("InvalidSpec", "exp needs positive valuation");
        int ord = target_order >= 0 ? target_order : (!exact() ? order_ : default_order);
        Series acc(1), term(1);
        R fact(1);
        for (int k = 1; k * (c_.empty() ? ord : valuation()) < ord; ++k) {
            term = (term * *this).truncate(ord);
            fact = fact * R(k);
            acc = acc + term * Series(R(1) / fact);
            if (term.is_zero()) break;
        }
        return acc.truncate(ord);
    }

    std::optional<Series> try_sqrt() const {
        if (c_.empty()) {
            if (exact()) return Series(0);
            return Series(0, {}, (order_ + 1) / 2 + (order_ >= 0 ? 0 : 0), var_);
        }
        // leading within-precision zeros are taken as exact zeros: the valuation
        // (and hence the branch structure) starts at the first nonzero content
        size_t skip = 0;
        while (skip < c_.size() && detail::WithinPrecisionZero<R>::check(c_[skip])) ++skip;
        if (skip == c_.size()) return Series(0, {}, (order_ + 1) / 2, var_);
        if (skip > 0) {
            std::vector<R> c(c_.begin() + (long)skip, c_.end());
            return Series(low_ + (int)skip, std::move(c), order_, var_).try_sqrt();
        }
        if (low_ % 2 != 0) return std::nullopt;
        auto lead = c_[0].try_sqrt();
        if (!lead) return std::nullopt;
        int ord = exact() ? (c_.size() == 1 ? EXACT : default_order + low_ / 2)
                          : order_ - low_ / 2;
        // Newton: s <- (s + f/s)/2 on the unit part, then shift by low/2.
        Series unit(0, c_, exact() ? EXACT : order_ - low_, var_);
        int target = exact() ? (c_.size() == 1 ? 1 : default_order) : order_ - low_;
        Series s(*lead);
        R half = R(1) / R(2);
        int prec = 1;
        while (prec < target) {
            prec = std::min(2 * prec, target);
            s = s.with_order(prec);
            Series fs = unit.truncate(prec).with_order(prec) * s.inverse(prec);
            s = ((s + fs) * Series(half)).truncate(prec).with_order(prec);
        }
        Series out = s.shift(low_ / 2);
        out = Series(out.low_, out.c_, ord, var_);
        if ((out * out - *this).negligible()) return out;
        return std::nullopt;
    }

    // True when every stored coefficient vanishes within its own precision, i.e.
    // the series is indistinguishable from zero at the tracked orders.  Equal to
    // is_zero() for plain scalar rings.
    bool negligible() const {
        for (const auto& x : c_)
            if (!detail::WithinPrecisionZero<R>::check(x)) return false;
        return true;
    }

    std::string str() const {
        std::string v = var_name();
        std::string s;
        for (int k = low_; k < low_ + (int)c_.size(); ++k) {
            const R& ck = c_[k - low_];
            if (ck.is_zero()) continue;
            if (!s.empty()) s += " + ";
            s += "(" + ck.str() + ")";
            if (k != 0) s += "*" + v + "^" + std::to_string(k);
        }
        if (s.empty()) s = "0";
        if (!exact()) s += " + O(" + v + "^" + std::to_string(order_) + ")";
        return s;
    }

private:
    std::string var_;
    int low_;
    std::vector<R> c_;
    int order_;

    static const std::string& default_var_name() {
        static const std::string t = "t";
        return t;
    }
    static int sat_add(int a, int b) {
        long s = (long)a + (long)b;
        if (s >= EXACT) return EXACT;
        return (int)s;
    }
    std::string pick_var(const Series& o) const { return var_.empty() ? o.var_ : var_; }

    void normalize() {
        if (order_ > EXACT) order_ = EXACT;
        // drop coefficients at or beyond order
        if (!exact() && low_ + (int)c_.size() > order_) {
            int keep = std::max(0, order_ - low_);
            c_.resize(keep);
        }
        // strip exactly-zero edge coefficients; truncated zeros (empty stored part
        // with a finite order tag, possible for nested series scalars) must stay,
        // otherwise their precision limit would silently become "exactly zero"
        size_t i = 0;
        while (i < c_.size() && detail::ExactZero<R>::check(c_[i])) ++i;
        if (i > 0) {
            c_.erase(c_.begin(), c_.begin() + i);
            low_ += (int)i;
        }
        while (!c_.empty() && detail::ExactZero<R>::check(c_.back())) c_.pop_back();
        if (c_.empty()) low_ = 0;
    }
};

namespace detail {
template <class R>
struct ExactZero<Series<R>> {
    static bool check(const Series<R>& s) { return s.is_zero() && s.exact(); }
};
template <class R>
struct WithinPrecisionZero<Series<R>> {
    static bool check(const Series<R>& s) { return s.negligible(); }
};
}  // namespace detail

template <class R>
Series<R> operator*(long a, const Series<R>& b) {
    return Series<R>(a) * b;
}

} // namespace looprec
