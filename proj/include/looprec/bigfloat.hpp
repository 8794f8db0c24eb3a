#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <optional>
#include <sstream>
#include <string>

#include "algext.hpp"
#include "rational.hpp"
#include "ring.hpp"

namespace looprec {

// 256-bit binary float with the scalar-ring interface the generic code expects.
class BigFloat {
public:
    using Raw = boost::multiprecision::number<
        boost::multiprecision::backends::cpp_bin_float<256, boost::multiprecision::backends::digit_base_2>>;

    BigFloat() : v_(0) {}
    BigFloat(long n) : v_(n) {}
    BigFloat(const Raw& r) : v_(r) {}
    explicit BigFloat(const Rational& q)
        : v_(Raw(q.raw().get_num().get_str()) / Raw(q.raw().get_den().get_str())) {}
    explicit BigFloat(const std::string& s) : v_(s) {}

    BigFloat operator+(const BigFloat& o) const { return BigFloat(Raw(v_ + o.v_)); }
    BigFloat operator-(const BigFloat& o) const { return BigFloat(Raw(v_ - o.v_)); }
    BigFloat operator*(const BigFloat& o) const { return BigFloat(Raw(v_ * o.v_)); }
    BigFloat operator/(const BigFloat& o) const {
        if (o.v_ == 0) throw calc_error("DivisionByZero", "float division by zero");
        return BigFloat(Raw(v_ / o.v_));
    }
    BigFloat operator-() const { return BigFloat(Raw(-v_)); }
    bool operator==(const BigFloat& o) const { return v_ == o.v_; }
    bool operator!=(const BigFloat& o) const { return v_ != o.v_; }
    bool operator<(const BigFloat& o) const { return v_ < o.v_; }
    bool operator>(const BigFloat& o) const { return v_ > o.v_; }

    bool is_zero() const { return v_ == 0; }
    BigFloat abs() const { return BigFloat(Raw(boost::multiprecision::abs(v_))); }

    std::optional<BigFloat> try_sqrt() const {
        if (v_ < 0) return std::nullopt;
        return BigFloat(Raw(boost::multiprecision::sqrt(v_)));
    }

    std::string str() const {
        std::ostringstream os;
        os.precision(50);
        os << v_;
        return os.str();
    }

    double to_double() const { return v_.convert_to<double>(); }
    const Raw& raw() const { return v_; }

private:
    Raw v_;
};

inline BigFloat operator*(long a, const BigFloat& b) { return BigFloat(a) * b; }

// Minimal complex type over any float-like scalar (used by contour quadrature and the
// numeric sheet-tracking continuation).
template <class T>
struct Complex {
    T re, im;

    Complex() : re(0), im(0) {}
    Complex(long n) : re(n), im(0) {}
    Complex(T r) : re(std::move(r)), im(0) {}
    Complex(T r, T i) : re(std::move(r)), im(std::move(i)) {}

    Complex operator+(const Complex& o) const { return {re + o.re, im + o.im}; }
    Complex operator-(const Complex& o) const { return {re - o.re, im - o.im}; }
    Complex operator-() const { return {-re, -im}; }
    Complex operator*(const Complex& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
    Complex operator/(const Complex& o) const {
        T d = o.re * o.re + o.im * o.im;
        if (d.is_zero()) throw calc_error("DivisionByZero", "complex division by zero");
        return {(re * o.re + im * o.im) / d, (im * o.re - re * o.im) / d};
    }
    bool operator==(const Complex& o) const { return re == o.re && im == o.im; }
    bool is_zero() const { return re.is_zero() && im.is_zero(); }

    T abs2() const { return re * re + im * im; }
    T abs() const { return *abs2().try_sqrt(); }

    // Principal square root.
    Complex sqrt_principal() const {
        T r = abs();
        T half = T(1) / T(2);
        T a = *((r + re) * half).try_sqrt();
        T babs = *((r - re) * half).try_sqrt();
        bool neg = false;
        if (im < T(0)) neg = true;
        if (a.is_zero() && babs.is_zero()) return Complex(T(0), T(0));
        return Complex(a, neg ? -babs : babs);
    }

    std::optional<Complex> try_sqrt() const { return sqrt_principal(); }

    std::string str() const { return "(" + re.str() + " + " + im.str() + "*i)"; }
};

using CBigFloat = Complex<BigFloat>;

// --- numeric embeddings of the exact rings -------------------------------------------------

inline BigFloat to_bigfloat(const Rational& q) { return BigFloat(q); }
inline BigFloat to_bigfloat(const BigFloat& x) { return x; }

// Embeds an algebraic-extension element by refining the modulus root nearest the stored
// hint with Newton at full precision.
template <class R>
BigFloat to_bigfloat(const AlgExt<R>& x) {
    if (!x.mod() || x.is_scalar()) return to_bigfloat(x.scalar_part());
    const auto& m = x.mod()->m;
    std::vector<BigFloat> mc;
    mc.reserve(m.size());
    for (const auto& c : m) mc.push_back(to_bigfloat(c));
    BigFloat r(0);
    {
        std::ostringstream os;
        os.precision(17);
        os << x.mod()->root_hint;
        r = BigFloat(os.str());
    }
    for (int it = 0; it < 200; ++it) {
        BigFloat f(0), df(0);
        for (int k = (int)mc.size() - 1; k >= 0; --k) {
            if (k < (int)mc.size() - 1) df = df * r + f;
            f = f * r + mc[k];
        }
        if (df.is_zero()) break;
        BigFloat step = f / df;
        r = r - step;
        if (step.abs() < BigFloat("1e-74")) break;
    }
    BigFloat acc(0);
    const auto& c = x.coeffs();
    for (int k = (int)c.size() - 1; k >= 0; --k) acc = acc * r + to_bigfloat(c[k]);
    return acc;
}

} // namespace looprec
