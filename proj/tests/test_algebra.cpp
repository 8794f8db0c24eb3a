#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "looprec/algext.hpp"
#include "looprec/bigfloat.hpp"
#include "looprec/linalg.hpp"
#include "looprec/polynomial.hpp"
#include "looprec/puiseux.hpp"
#include "looprec/ratfunc.hpp"
#include "looprec/rational.hpp"
#include "looprec/series.hpp"

using namespace looprec;

using Q = Rational;
using QP = Polynomial<Q>;
using QF = RationalFunction<Q>;
using QS = Series<Q>;

static std::mt19937 rng(20240817);

static Q rand_q() {
    std::uniform_int_distribution<long> num(-30, 30), den(1, 12);
    return Q(num(rng), den(rng));
}

TEST_CASE("rational basics and canonical form") {
    CHECK(Q(2, 4) == Q(1, 2));
    CHECK(Q(-3, -6) == Q(1, 2));
    CHECK((Q(1, 3) + Q(1, 6)) == Q(1, 2));
    CHECK(Q(7, 3).str() == "7/3");
    CHECK(Q::parse("-0.125") == Q(-1, 8));
    CHECK(Q::parse("22/7") == Q(22, 7));
    CHECK(*Q(9, 4).try_sqrt() == Q(3, 2));
    CHECK(!Q(2).try_sqrt().has_value());
    CHECK_THROWS_AS(Q(1) / Q(0), calc_error);
}

TEST_CASE("ring axioms on randomized rational triples") {
    for (int i = 0; i < 200; ++i) {
        Q a = rand_q(), b = rand_q(), c = rand_q();
        CHECK((a + b) + c == a + (b + c));
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
    }
}

TEST_CASE("quadratic extension arithmetic in Q(sqrt2)") {
    using E = AlgExt<Q>;
    auto mod = E::make_mod({Q(-2), Q(0), Q(1)}, "r2", 1.41421356);
    E r2 = E::gen(mod);
    CHECK(r2 * r2 == E(2));
    E x = E(1) + r2;                      // 1 + sqrt2
    E inv = x.inverse();                  // sqrt2 - 1
    CHECK(x * inv == E(1));
    CHECK(inv == r2 - E(1));
    auto two = r2 * r2;                   // 2 as an element of Q(sqrt2)
    REQUIRE(two.try_sqrt().has_value());
    CHECK(*two.try_sqrt() == r2);         // sqrt(2) found via the d*square route
    auto s = (E(3) + E(2) * r2).try_sqrt();  // (1+sqrt2)^2 = 3+2sqrt2
    REQUIRE(s.has_value());
    CHECK(*s * *s == E(3) + E(2) * r2);
}

TEST_CASE("nested tower Q(3^(1/4)) built as quadratic-over-quadratic") {
    using E1 = AlgExt<Q>;   // Q(sqrt3)
    using E2 = AlgExt<E1>;  // Q(sqrt3)(3^(1/4))
    auto m1 = E1::make_mod({Q(-3), Q(0), Q(1)}, "r3", 1.7320508);
    E1 r3 = E1::gen(m1);
    auto m2 = E2::make_mod({E1(-r3), E1(Q(0)), E1(Q(1))}, "q3", 1.3160740);
    E2 q3 = E2::gen(m2);  // q3^2 = sqrt3, so q3 = 3^(1/4)
    CHECK(q3 * q3 * q3 * q3 == E2(3));
    E2 kappa_c = E2(1) / (E2(2) * q3 * q3 * q3);  // 1/(2*3^(3/4))
    CHECK(kappa_c * E2(2) * q3 * q3 * q3 == E2(1));
    CHECK(to_bigfloat(kappa_c).to_double() == doctest::Approx(1.0 / (2 * std::pow(3.0, 0.75))));
}

TEST_CASE("series arithmetic and order tracking") {
    QS t = QS::var("k", 10);
    QS f = QS(1) + t + t * t;
    QS g = f.inverse();
    CHECK((f * g - QS(1)).is_zero());
    CHECK(g.order() == 10);
    // order of a product: min compatible order of the factors
    QS a(2, {Q(1)}, 7, "k");   // t^2 + O(t^7)
    QS b(-1, {Q(3)}, 5, "k");  // 3/t + O(t^5)
    QS p = a * b;
    CHECK(p.order() == std::min(7 - 1, 5 + 2));
    CHECK(p.at(1) == Q(3));
    CHECK_THROWS_AS(p.at(99), calc_error);
    // Laurent inverse
    QS l(-1, {Q(2), Q(1)}, 8, "k");  // 2/t + 1
    CHECK((l * l.inverse() - QS(1)).is_zero());
}

TEST_CASE("series sqrt, exp, compose") {
    QS t = QS::var("t", 12);
    auto s = (QS(1) + t).try_sqrt();
    REQUIRE(s.has_value());
    CHECK((*s * *s - (QS(1) + t)).is_zero());
    CHECK(s->at(1) == Q(1, 2));
    CHECK(s->at(2) == Q(-1, 8));
    QS e = t.exp_series();
    CHECK(e.at(0) == Q(1));
    CHECK(e.at(3) == Q(1, 6));
    QS comp = e.compose(t * QS(2));  // exp(2t)
    CHECK(comp.at(2) == Q(2));
    QS lau(-2, {Q(1)}, 12, "t");  // t^-2
    CHECK(lau.compose(t * QS(2)).at_or_zero(-2) == Q(1, 4));
}

TEST_CASE("polynomial division, gcd, resultant") {
    QP x = QP::x();
    QP f = (x - QP(1)) * (x - QP(2)) * (x - QP(2));
    QP g = (x - QP(2)) * (x + QP(5));
    CHECK(QP::gcd(f, g) == (x - QP(2)));
    auto [q, r] = f.divmod(g);
    CHECK(q * g + r == f);
    // resultant(f, f') = 0 iff double root
    CHECK(f.resultant(f.derivative()) == Q(0));
    QP h = (x - QP(1)) * (x - QP(3));
    CHECK(h.resultant(h.derivative()) != Q(0));
    // cross-check a known value: res(x^2-2, x^2-3) = 1
    QP a = x * x - QP(2), b = x * x - QP(3);
    CHECK(a.resultant(b) == Q(1));
}

TEST_CASE("rational function reduction, equality, residues") {
    QP x = QP::x();
    QF f(x * x - QP(1), x - QP(1));  // reduces to x+1
    CHECK(f.is_polynomial());
    CHECK(f == QF(x + QP(1)));
    CHECK(laurent_residue(QF(QP(1), x), Q(0)) == Q(1));
    QP d = (x - QP(2)) * (x - QP(2));
    CHECK(laurent_residue(QF(QP(1), d), Q(2)) == Q(0));
    CHECK(laurent_residue(QF(x * x + QP(1), x * x * x), Q(0)) == Q(1));
    // linearity on random inputs
    for (int i = 0; i < 20; ++i) {
        Q a = rand_q(), b = rand_q();
        QF u(QP(rand_q()) + QP::monomial(1, rand_q()), x * (x - QP(3)));
        QF v(QP(rand_q()), x * x);
        CHECK(laurent_residue(QF(QP(a)) * u + QF(QP(b)) * v, Q(0)) ==
              a * laurent_residue(u, Q(0)) + b * laurent_residue(v, Q(0)));
    }
}

TEST_CASE("expansion at infinity") {
    QP x = QP::x();
    QF f(QP(1), x - QP(1));  // 1/(x-1) = 1/x + 1/x^2 + ...
    auto s = f.at_infinity(5);
    CHECK(s.at(1) == Q(1));
    CHECK(s.at(3) == Q(1));
    CHECK(f.residue_at_infinity() == Q(1));
}

TEST_CASE("sqrt_series matches hand expansions") {
    QP x = QP::x();
    // sigma = x^2 - 2 at infinity: x - 1/x - 1/(2x^3) - 1/(2x^5) + ...
    auto s = sqrt_series(x * x - QP(2), std::nullopt, 7);
    CHECK(s.ramification() == 1);
    CHECK(s.coeff(-1) == Q(1));
    CHECK(s.coeff(1) == Q(-1));
    CHECK(s.coeff(3) == Q(-1, 2));
    CHECK(s.coeff(5) == Q(-1, 2));
    // sigma = x at infinity: exactly x^(1/2)
    auto r = sqrt_series(x, std::nullopt, 4);
    CHECK(r.ramification() == 2);
    CHECK(r.coeff(-1, 2) == Q(1));
    CHECK((r * r).coeff(-1) == Q(1));
    // sigma = x(x-a) with symbolic a: x - a/2 - a^2/(8x) + ...
    using AS = Series<Q>;
    using AP = Polynomial<AS>;
    AS a = AS::var("a", 20);
    AP xs = AP::x();
    auto sa = sqrt_series(xs * xs - AP(a) * xs, std::nullopt, 3);
    CHECK(sa.coeff(-1) == AS(1));
    CHECK(sa.coeff(0) == -a * AS(Q(1, 2)));
    CHECK(sa.coeff(1) == -a * a * AS(Q(1, 8)));
    // multiple root rejected
    CHECK_THROWS_AS(sqrt_series(x * x, std::make_optional(Q(0)), 3), calc_error);
}

TEST_CASE("sqrt_series squares back to sigma on randomized polynomials") {
    for (int i = 0; i < 100; ++i) {
        QP x = QP::x();
        Q a = rand_q(), b = rand_q();
        if (a == b) continue;
        QP sigma = (x - QP(a)) * (x - QP(b));
        auto s = sqrt_series(sigma, std::nullopt, 10);
        auto sq = s * s;
        // compare against the exact expansion of sigma at infinity
        CHECK(sq.coeff(-2) == Q(1));
        CHECK(sq.coeff(-1) == -(a + b));
        CHECK(sq.coeff(0) == a * b);
        for (int k = 1; k <= 8; ++k) CHECK(sq.coeff(k) == Q(0));
        // and at a finite simple root when the derivative there is a perfect square
        auto fin = sqrt_series(x * x - QP(Q(1, 4)), std::make_optional(Q(1, 2)), 6);
        CHECK(fin.ramification() == 2);
        CHECK(fin.coeff(1, 2) == Q(1));
        auto fsq = fin * fin;
        CHECK(fsq.coeff(1) == Q(1));
        CHECK(fsq.coeff(2) == Q(1));
    }
}

TEST_CASE("linear solve and jets") {
    std::vector<std::vector<Q>> A{{Q(2), Q(1)}, {Q(1), Q(3)}};
    std::vector<Q> b{Q(5), Q(10)};
    auto sol = solve_linear(A, b);
    CHECK(sol[0] == Q(1));
    CHECK(sol[1] == Q(3));
    // jets differentiate products correctly: d/dx (x*y) = y
    Jet<Q> x(Q(2), 2, 0), y(Q(5), 2, 1);
    auto p = x * y;
    CHECK(p.val == Q(10));
    CHECK(p.d[0] == Q(5));
    CHECK(p.d[1] == Q(2));
    auto q = x / y;
    CHECK(q.d[0] == Q(1, 5));
    CHECK(q.d[1] == Q(-2, 25));
}

TEST_CASE("bigfloat and complex") {
    BigFloat two(2);
    BigFloat s = *two.try_sqrt();
    CHECK((s * s - two).abs() < BigFloat("1e-70"));
    CBigFloat z(BigFloat(0), BigFloat(2));
    CBigFloat r = z.sqrt_principal();
    CHECK((r * r - z).abs2() < BigFloat("1e-60"));
    CHECK(r.re > BigFloat(0));
}
