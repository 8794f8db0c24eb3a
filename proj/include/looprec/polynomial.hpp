#pragma once

#include <string>
#include <vector>

#include "ring.hpp"

namespace looprec {

// Dense univariate polynomial over a field R, coefficients indexed by degree.
// The zero polynomial has an empty coefficient list and degree() == NEG_INF.
template <class R>
class Polynomial {
public:
    static constexpr int NEG_INF = -(1 << 28);

    Polynomial() {}
    Polynomial(long n) {
        if (n != 0) c_.push_back(R(n));
    }
    Polynomial(const R& r) {
        if (!r.is_zero()) c_.push_back(r);
    }
    explicit Polynomial(std::vector<R> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial monomial(int k, const R& coeff = R(1)) {
        std::vector<R> c(k + 1, R(0));
        c[k] = coeff;
        return Polynomial(std::move(c));
    }
    static Polynomial x() { return monomial(1); }

    int degree() const { return c_.empty() ? NEG_INF : (int)c_.size() - 1; }
    bool is_zero() const { return c_.empty(); }
    const std::vector<R>& coeffs() const { return c_; }
    R at(int k) const { return (k >= 0 && k < (int)c_.size()) ? c_[k] : R(0); }
    R lead() const { return c_.empty() ? R(0) : c_.back(); }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<R> c = c_;
        if (c.size() < o.c_.size()) c.resize(o.c_.size(), R(0));
        for (size_t i = 0; i < o.c_.size(); ++i) c[i] = c[i] + o.c_[i];
        return Polynomial(std::move(c));
    }
    Polynomial operator-(const Polynomial& o) const { return *this + (-o); }
    Polynomial operator-() const {
        std::vector<R> c = c_;
        for (auto& x : c) x = -x;
        return Polynomial(std::move(c));
    }
    Polynomial operator*(const Polynomial& o) const {
        if (c_.empty() || o.c_.empty()) return Polynomial();
        std::vector<R> c(c_.size() + o.c_.size() - 1, R(0));
        for (size_t i = 0; i < c_.size(); ++i) {
            if (c_[i].is_zero()) continue;
            for (size_t j = 0; j < o.c_.size(); ++j) c[i + j] = c[i + j] + c_[i] * o.c_[j];
        }
        return Polynomial(std::move(c));
    }
    Polynomial operator*(const R& s) const {
        std::vector<R> c = c_;
        for (auto& x : c) x = x * s;
        return Polynomial(std::move(c));
    }
    bool operator==(const Polynomial& o) const { return (*this - o).is_zero(); }
    bool operator!=(const Polynomial& o) const { return !(*this == o); }

    // Quotient and remainder; R must be a field.
    std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
        if (d.is_zero()) throw calc_error("DivisionByZero", "polynomial division by zero");
        std::vector<R> rem = c_;
        int dd = d.degree();
        if (degree() < dd) return {Polynomial(), *this};
        std::vector<R> quot(degree() - dd + 1, R(0));
        R lead = d.c_.back();
        for (int k = degree(); k >= dd; --k) {
            R f = rem[k] / lead;
            if (!f.is_zero()) {
                quot[k - dd] = f;
                for (int i = 0; i <= dd; ++i) rem[k - dd + i] = rem[k - dd + i] - f * d.c_[i];
            }
            rem[k] = R(0);
        }
        return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial();
        std::vector<R> c(c_.size() - 1, R(0));
        for (size_t k = 1; k < c_.size(); ++k) c[k - 1] = R((long)k) * c_[k];
        return Polynomial(std::move(c));
    }

    template <class T>
    T eval(const T& x) const {
        T acc(0);
        for (int k = (int)c_.size() - 1; k >= 0; --k) acc = acc * x + T(c_[k]);
        return acc;
    }
    R eval_r(const R& x) const { return eval<R>(x); }

    // Polynomial composition this(g(x)).
    Polynomial compose(const Polynomial& g) const {
        Polynomial acc;
        for (int k = (int)c_.size() - 1; k >= 0; --k) acc = acc * g + Polynomial(c_[k]);
        return acc;
    }

    // Map coefficients into another ring.
    template <class S, class F>
    Polynomial<S> map(F&& f) const {
        std::vector<S> c;
        c.reserve(c_.size());
        for (const auto& x : c_) c.push_back(f(x));
        return Polynomial<S>(std::move(c));
    }

    Polynomial monic() const {
        if (is_zero()) return *this;
        return *this * (R(1) / lead());
    }

    static Polynomial gcd(Polynomial a, Polynomial b) {
        while (!b.is_zero()) {
            auto [q, r] = a.divmod(b);
            a = std::move(b);
            b = std::move(r);
        }
        return a.monic();
    }

    // Resultant of this and o via the Euclidean remainder sequence (R a field).
    R resultant(const Polynomial& o) const {
        Polynomial a = *this, b = o;
        R res(1);
        if (a.is_zero() || b.is_zero()) return R(0);
        while (true) {
            if (b.degree() == 0) {
                return res * ring_pow(b.lead(), a.degree());
            }
            auto [q, r] = a.divmod(b);
            if (r.is_zero()) return R(0);
            res = res * ring_pow(b.lead(), a.degree() - r.degree());
            if (((a.degree() % 2) == 1) && ((b.degree() % 2) == 1)) res = -res;
            a = std::move(b);
            b = std::move(r);
        }
    }

    std::string str(const std::string& var = "x") const {
        std::string s;
        for (int k = (int)c_.size() - 1; k >= 0; --k) {
            if (c_[k].is_zero()) continue;
            if (!s.empty()) s += " + ";
            s += "(" + c_[k].str() + ")";
            if (k >= 1) {
                s += "*" + var;
                if (k > 1) s += "^" + std::to_string(k);
            }
        }
        return s.empty() ? "0" : s;
    }

private:
    std::vector<R> c_;

    void trim() {
        while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
    }
};

template <class R>
Polynomial<R> operator*(const R& s, const Polynomial<R>& p) {
    return p * s;
}

} // namespace looprec
