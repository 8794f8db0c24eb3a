#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ring.hpp"

namespace looprec {

// Monogenic algebraic extension R[g]/(m(g)) with m monic. Elements are polynomials in the
// generator g of degree < deg(m). An element with no attached modulus acts as a plain scalar
// of R and promotes on contact, so that AlgExt(long) works in generic code.
template <class R>
struct AlgExtMod {
    std::vector<R> m;      // monic modulus coefficients m[0..deg], m[deg] == 1
    std::string gen_name;  // printing only
    double root_hint = 0;  // approximate real root, used to pick the embedding into floats

    int deg() const { return (int)m.size() - 1; }
};

template <class R>
class AlgExt {
public:
    using Mod = AlgExtMod<R>;
    using ModPtr = std::shared_ptr<const Mod>;

    AlgExt() : c_(1, R(0)) {}
    AlgExt(long n) : c_(1, R(n)) {}
    AlgExt(const R& r) : c_(1, r) {}
    AlgExt(ModPtr mod, std::vector<R> coeffs) : mod_(std::move(mod)), c_(std::move(coeffs)) {
        reduce();
    }

    static ModPtr make_mod(std::vector<R> monic, std::string gen, double hint) {
        if (monic.size() < 2 || !(monic.back() == R(1)))
            throw calc_error("InvalidSpec", "modulus must be monic of degree >= 1");
        auto p = std::make_shared<Mod>();
        p->m = std::move(monic);
        p->gen_name = std::move(gen);
        p->root_hint = hint;
        return p;
    }

    // The generator g of the extension.
    static AlgExt gen(ModPtr mod) {
        std::vector<R> c(2, R(0));
        c[1] = R(1);
        return AlgExt(std::move(mod), std::move(c));
    }

    const ModPtr& mod() const { return mod_; }
    const std::vector<R>& coeffs() const { return c_; }

    bool is_scalar() const {
        for (size_t i = 1; i < c_.size(); ++i)
            if (!c_[i].is_zero()) return false;
        return true;
    }
    const R& scalar_part() const { return c_[0]; }

    AlgExt operator+(const AlgExt& o) const {
        auto [a, b, m] = align(*this, o);
        for (size_t i = 0; i < b.size(); ++i) a[i] = a[i] + b[i];
        return AlgExt(m, std::move(a));
    }
    AlgExt operator-(const AlgExt& o) const {
        auto [a, b, m] = align(*this, o);
        for (size_t i = 0; i < b.size(); ++i) a[i] = a[i] - b[i];
        return AlgExt(m, std::move(a));
    }
    AlgExt operator-() const {
        std::vector<R> a = c_;
        for (auto& x : a) x = -x;
        return AlgExt(mod_, std::move(a));
    }
    AlgExt operator*(const AlgExt& o) const {
        auto [a, b, m] = align(*this, o);
        std::vector<R> prod(a.size() + b.size() - 1, R(0));
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i].is_zero()) continue;
            for (size_t j = 0; j < b.size(); ++j) prod[i + j] = prod[i + j] + a[i] * b[j];
        }
        return AlgExt(m, std::move(prod));
    }
    AlgExt operator/(const AlgExt& o) const { return *this * o.inverse(); }

    AlgExt inverse() const {
        if (is_zero()) throw calc_error("DivisionByZero", "algebraic-extension inverse of zero");
        if (is_scalar()) {
            AlgExt r(R(1) / c_[0]);
            r.mod_ = mod_;
            if (mod_) r.c_.resize(mod_->deg(), R(0));
            return r;
        }
        // Extended Euclid for u*this + v*m = 1 in R[g].
        std::vector<R> r0 = mod_->m, r1 = c_;
        std::vector<R> s0{}, s1{R(1)};  // coefficients multiplying this-element
        while (true) {
            trim(r1);
            if (r1.empty()) throw calc_error("DivisionByZero", "element not invertible (modulus not irreducible over its factors?)");
            if (r1.size() == 1) {
                R inv = R(1) / r1[0];
                std::vector<R> res = s1;
                for (auto& x : res) x = x * inv;
                return AlgExt(mod_, std::move(res));
            }
            // r0 = q*r1 + r2
            std::vector<R> q = poly_div(r0, r1);
            std::vector<R> r2 = poly_mod(r0, r1, q);
            std::vector<R> s2 = poly_sub(s0, poly_mul(q, s1));
            r0 = std::move(r1); r1 = std::move(r2);
            s0 = std::move(s1); s1 = std::move(s2);
        }
    }

    bool operator==(const AlgExt& o) const { return (*this - o).is_zero(); }
    bool operator!=(const AlgExt& o) const { return !(*this == o); }

    bool is_zero() const {
        for (const auto& x : c_)
            if (!x.is_zero()) return false;
        return true;
    }

    std::string str() const {
        if (is_scalar()) return c_[0].str();
        std::string s;
        for (size_t i = 0; i < c_.size(); ++i) {
            if (c_[i].is_zero()) continue;
            if (!s.empty()) s += " + ";
            s += c_[i].str();
            if (i >= 1) {
                s += "*" + mod_->gen_name;
                if (i > 1) s += "^" + std::to_string(i);
            }
        }
        return s.empty() ? "0" : s;
    }

    std::optional<AlgExt> try_sqrt() const {
        if (is_scalar()) {
            auto inner = c_[0].try_sqrt();
            if (inner) {
                AlgExt r(*inner);
                r.mod_ = mod_;
                if (mod_) r.c_.resize(mod_->deg(), R(0));
                return r;
            }
            if (!mod_ || mod_->deg() != 2) return std::nullopt;
        }
        if (!mod_ || mod_->deg() != 2) return std::nullopt;
        // Quadratic extension g^2 = d - m1 g; only the pure-root case m1 = 0 is handled.
        if (!mod_->m[1].is_zero()) return std::nullopt;
        R d = -mod_->m[0];
        R a = c_[0], b = c_.size() > 1 ? c_[1] : R(0);
        if (b.is_zero()) {
            auto ad = (a / d).try_sqrt();  // sqrt(a) = sqrt(a/d)*g
            if (ad) {
                std::vector<R> c{R(0), *ad};
                return AlgExt(mod_, std::move(c));
            }
            return std::nullopt;
        }
        auto s = (a * a - b * b * d).try_sqrt();
        if (!s) return std::nullopt;
        for (int sign = 0; sign < 2; ++sign) {
            R n = sign ? a - *s : a + *s;
            auto p2 = (n / R(2)).try_sqrt();
            if (p2 && !p2->is_zero()) {
                R p = *p2, q = b / (R(2) * p);
                std::vector<R> c{p, q};
                AlgExt cand(mod_, std::move(c));
                if (cand * cand == *this) return cand;
            }
        }
        return std::nullopt;
    }

private:
    ModPtr mod_;
    std::vector<R> c_;

    static void trim(std::vector<R>& v) {
        while (!v.empty() && v.back().is_zero()) v.pop_back();
    }
    static std::vector<R> poly_mul(const std::vector<R>& a, const std::vector<R>& b) {
        if (a.empty() || b.empty()) return {};
        std::vector<R> p(a.size() + b.size() - 1, R(0));
        for (size_t i = 0; i < a.size(); ++i)
            for (size_t j = 0; j < b.size(); ++j) p[i + j] = p[i + j] + a[i] * b[j];
        return p;
    }
    static std::vector<R> poly_sub(const std::vector<R>& a, const std::vector<R>& b) {
        std::vector<R> r = a;
        if (r.size() < b.size()) r.resize(b.size(), R(0));
        for (size_t i = 0; i < b.size(); ++i) r[i] = r[i] - b[i];
        trim(r);
        return r;
    }
    static std::vector<R> poly_div(std::vector<R> a, const std::vector<R>& b) {
        std::vector<R> q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, R(0));
        R lead = b.back();
        while (a.size() >= b.size()) {
            R f = a.back() / lead;
            size_t shift = a.size() - b.size();
            q[shift] = f;
            for (size_t i = 0; i < b.size(); ++i) a[shift + i] = a[shift + i] - f * b[i];
            a.pop_back();
            trim(a);
            if (a.empty()) break;
        }
        return q;
    }
    static std::vector<R> poly_mod(std::vector<R> a, const std::vector<R>& b,
                                   const std::vector<R>& q) {
        return poly_sub(a, poly_mul(q, b));
    }

    void reduce() {
        if (!mod_) {
            if (c_.size() > 1)
                for (size_t i = 1; i < c_.size(); ++i)
                    if (!c_[i].is_zero())
                        throw calc_error("InvalidSpec", "generator used without a modulus");
            c_.resize(1, R(0));
            return;
        }
        int d = mod_->deg();
        // reduce degree >= d terms using g^d = -(m[0] + ... + m[d-1] g^{d-1})
        for (int i = (int)c_.size() - 1; i >= d; --i) {
            R top = c_[i];
            if (top.is_zero()) continue;
            c_[i] = R(0);
            for (int j = 0; j < d; ++j) c_[i - d + j] = c_[i - d + j] - top * mod_->m[j];
        }
        c_.resize(d, R(0));
    }

    static std::tuple<std::vector<R>, std::vector<R>, ModPtr> align(const AlgExt& x,
                                                                    const AlgExt& y) {
        ModPtr m = x.mod_ ? x.mod_ : y.mod_;
        if (x.mod_ && y.mod_ && x.mod_ != y.mod_)
            throw calc_error("InvalidSpec", "mixing elements of different extensions");
        size_t n = m ? (size_t)m->deg() : 1;
        std::vector<R> a = x.c_, b = y.c_;
        a.resize(std::max(n, std::max(a.size(), b.size())), R(0));
        b.resize(a.size(), R(0));
        return {std::move(a), std::move(b), m};
    }
};

template <class R>
AlgExt<R> operator*(long a, const AlgExt<R>& b) {
    return AlgExt<R>(a) * b;
}

} // namespace looprec
