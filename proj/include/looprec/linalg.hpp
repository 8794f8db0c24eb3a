#pragma once

#include <vector>

#include "ring.hpp"

namespace looprec {

// Solve A x = b by Gaussian elimination over a field (first-nonzero pivoting; exact rings
// have no conditioning concerns, and float callers pre-scale).
template <class R>
std::vector<R> solve_linear(std::vector<std::vector<R>> A, std::vector<R> b) {
    size_t n = A.size();
    if (n == 0) return {};
    if (A[0].size() != n || b.size() != n)
        throw calc_error("InvalidSpec", "solve_linear needs a square system");
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && A[piv][col].is_zero()) ++piv;
        if (piv == n) throw calc_error("SingularMatrix", "no pivot in column " + std::to_string(col));
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        R inv = R(1) / A[col][col];
        for (size_t j = col; j < n; ++j) A[col][j] = A[col][j] * inv;
        b[col] = b[col] * inv;
        for (size_t row = 0; row < n; ++row) {
            if (row == col || A[row][col].is_zero()) continue;
            R f = A[row][col];
            for (size_t j = col; j < n; ++j) A[row][j] = A[row][j] - f * A[col][j];
            b[row] = b[row] - f * b[col];
        }
    }
    return b;
}

// Forward-mode derivative bundle: value plus gradient with respect to `nvars` unknowns.
// Satisfies enough of the scalar-ring interface to flow through polynomial evaluation.
template <class R>
struct Jet {
    R val;
    std::vector<R> d;

    Jet() : val(0) {}
    Jet(long n) : val(n) {}
    Jet(R v) : val(std::move(v)) {}
    Jet(R v, size_t nvars, size_t index) : val(std::move(v)), d(nvars, R(0)) {
        d[index] = R(1);
    }
    static Jet constant(R v, size_t nvars) {
        Jet j(std::move(v));
        j.d.assign(nvars, R(0));
        return j;
    }

    size_t nvars() const { return d.size(); }

    Jet operator+(const Jet& o) const {
        Jet r(val + o.val);
        r.d = add(d, o.d);
        return r;
    }
    Jet operator-(const Jet& o) const {
        Jet r(val - o.val);
        r.d = add(d, neg(o.d));
        return r;
    }
    Jet operator-() const {
        Jet r(-val);
        r.d = neg(d);
        return r;
    }
    Jet operator*(const Jet& o) const {
        Jet r(val * o.val);
        r.d = add(scale(d, o.val), scale(o.d, val));
        return r;
    }
    Jet operator/(const Jet& o) const {
        R inv = R(1) / o.val;
        R q = val * inv;
        Jet r(q);
        r.d = scale(add(d, scale(o.d, -q)), inv);
        return r;
    }
    bool operator==(const Jet& o) const { return val == o.val && add(d, neg(o.d)).empty(); }
    bool is_zero() const {
        if (!val.is_zero()) return false;
        for (const auto& x : d)
            if (!x.is_zero()) return false;
        return true;
    }
    std::string str() const { return val.str(); }

private:
    static std::vector<R> add(const std::vector<R>& a, const std::vector<R>& b) {
        if (a.empty()) return b;
        if (b.empty()) return a;
        std::vector<R> r = a;
        for (size_t i = 0; i < b.size(); ++i) r[i] = r[i] + b[i];
        return r;
    }
    static std::vector<R> neg(const std::vector<R>& a) {
        std::vector<R> r = a;
        for (auto& x : r) x = -x;
        return r;
    }
    static std::vector<R> scale(const std::vector<R>& a, const R& s) {
        std::vector<R> r = a;
        for (auto& x : r) x = x * s;
        return r;
    }
};

} // namespace looprec
