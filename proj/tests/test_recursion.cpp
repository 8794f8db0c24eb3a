#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <looprec/models.hpp>
#include <looprec/recursion.hpp>

using namespace looprec;
using Q = Rational;

namespace {

// y = sqrt(x): one branch point at 0
SpectralCurve<Q> airy_curve() {
    auto spec = spec_airy<Q>();
    return solve_disk_curve(spec, 0, SolveMode::exact);
}

// y = sqrt(x)/x
SpectralCurve<Q> bessel_curve() {
    auto spec = spec_bessel<Q>();
    return solve_disk_curve(spec, 0, SolveMode::exact);
}

using E = AlgExt<Q>;

// y = sqrt(x^2 - 2): branch points +-sqrt(2), adjoined explicitly
SpectralCurve<E> gaussian_curve() {
    auto spec = spec_gaussian<Q>();
    auto c0 = solve_disk_curve(spec, 0, SolveMode::exact);
    auto lift = [](const Polynomial<Q>& p) {
        std::vector<E> c;
        for (int k = 0; k <= p.degree(); ++k) c.push_back(E(p.at(k)));
        return Polynomial<E>(std::move(c));
    };
    SpectralCurve<E> curve;
    curve.parity = c0.parity;
    curve.p = lift(c0.p);
    curve.q = lift(c0.q);
    curve.sigma = lift(c0.sigma);
    curve.genus = c0.genus;
    curve.ring_tag = "quad:2";
    E r2 = E::gen(E::make_mod({Q(-2), Q(0), Q(1)}, "r2", 1.41421356237309515));
    curve.branch_points = {r2, -r2};
    curve.validate();
    return curve;
}

template <class R>
R md_value(const MultiDifferential<R>& md, std::vector<R> z) {
    return md.eval_r(z);
}

}  // namespace

TEST_CASE("airy kernel closed form and antisymmetry") {
    auto ctx = make_context(airy_curve());
    CHECK(ctx.par.branch_count == 1);
    // Y = y(z) x'(z) = z * 2z = 2z^2
    CHECK(ctx.Y.eval_r(Q(3)) == Q(18));
    auto K = kernel(ctx);
    // K = (1/2)[1/(z1-z0) - 1/(z1+z0)] / (4 z0^2) = 1/(4 z0 (z1^2 - z0^2))
    using F1 = RationalFunction<Q>;
    auto at = [&](Q z0, Q z1) {
        F1 outer_num(0), outer_den(0);
        auto evp = [&](const Polynomial<F1>& p) {
            F1 acc(0);
            for (int i = p.degree(); i >= 0; --i) acc = acc * F1(z1) + p.at(i);
            return acc.eval_r(z0) / F1(1).eval_r(z0);
        };
        Q n = evp(K.num());
        Q d = evp(K.den());
        return n / d;
    };
    for (auto [z0, z1] : {std::pair<Q, Q>{Q(2), Q(3)}, {Q(1) / Q(2), Q(5)}, {Q(-3), Q(7)}}) {
        Q expect = Q(1) / (Q(4) * z0 * (z1 * z1 - z0 * z0));
        CHECK(at(z0, z1) == expect);
        CHECK(at(-z0, z1) == -at(z0, z1));
    }
}

TEST_CASE("airy omega_1^1 and omega_3^0 match the hand values") {
    auto ctx = make_context(airy_curve());
    const auto& w11 = omega(ctx, 1, 1);
    REQUIRE(w11.terms.size() == 1);
    // -1/(16 z^4)
    auto it = w11.terms.begin();
    CHECK(it->first == std::vector<std::pair<int, int>>{{0, 4}});
    CHECK(it->second == -Q(1) / Q(16));

    const auto& w03 = omega(ctx, 0, 3);
    REQUIRE(w03.terms.size() == 1);
    auto jt = w03.terms.begin();
    CHECK(jt->first == std::vector<std::pair<int, int>>{{0, 2}, {0, 2}, {0, 2}});
    CHECK(jt->second == -Q(1) / Q(2));
}

TEST_CASE("airy omega_2^1 known closed form") {
    // omega_1^(2) for the Airy curve is 105/(1024 z^10) dz (a classical value:
    // the coefficient encodes <tau_7> at genus 2 under this normalization).
    auto ctx = make_context(airy_curve());
    const auto& w21 = omega(ctx, 2, 1);
    REQUIRE(w21.terms.size() == 1);
    auto it = w21.terms.begin();
    CHECK(it->first == std::vector<std::pair<int, int>>{{0, 10}});
    CHECK(it->second == -Q(105) / Q(1024));
}

TEST_CASE("stable forms: symmetry, involution antisymmetry, pole locus") {
    auto check_md = [](auto& ctx, const auto& md) {
        using R = std::decay_t<decltype(md.terms.begin()->second)>;
        // pole order bound per variable
        for (const auto& [key, c] : md.terms)
            for (const auto& [j, m] : key) CHECK(m <= 2 * (3 * md.g - 2 + md.n));
        // permutation symmetry (adjacent transpositions generate S_n)
        for (int v = 0; v + 1 < md.n; ++v) {
            for (const auto& [key, c] : md.terms) {
                auto k2 = key;
                std::swap(k2[v], k2[v + 1]);
                auto it = md.terms.find(k2);
                REQUIRE(it != md.terms.end());
                CHECK(it->second == c);
            }
        }
        // involution antisymmetry in each variable
        for (int v = 0; v < md.n; ++v) {
            auto pb = involution_pullback(ctx, md, v);
            CHECK(pb.terms.size() == md.terms.size());
            for (const auto& [key, c] : md.terms) {
                auto it = pb.terms.find(key);
                REQUIRE(it != pb.terms.end());
                CHECK(it->second == -c);
            }
        }
        // pole locus: tensor representation only has poles at preimages by
        // construction; check regularity at non-branch points by evaluation
        std::vector<R> pts;
        for (int v = 0; v < md.n; ++v) pts.push_back(R(3 + 2 * v));
        (void)md.eval_r(pts);  // must not divide by zero
    };
    {
        auto ctx = make_context(airy_curve());
        for (auto [g, n] : {std::pair<int, int>{0, 3}, {1, 1}, {0, 4}, {1, 2}, {2, 1}})
            check_md(ctx, omega(ctx, g, n));
    }
    {
        auto ctx = make_context(bessel_curve());
        for (auto [g, n] : {std::pair<int, int>{0, 3}, {1, 1}, {0, 4}, {1, 2}, {2, 1}})
            check_md(ctx, omega(ctx, g, n));
    }
    {
        auto ctx = make_context(gaussian_curve());
        for (auto [g, n] : {std::pair<int, int>{0, 3}, {1, 1}, {0, 4}, {1, 2}, {2, 1}})
            check_md(ctx, omega(ctx, g, n));
    }
}

TEST_CASE("wick matchings of a polygon by genus") {
    // perfect matchings of 2l boundary half-edges, classified by the genus of
    // the glued surface; reference counts are classical (Harer-Zagier)
    CHECK(wick_matchings_by_genus(2) == std::map<int, long>{{0, 1}});
    CHECK(wick_matchings_by_genus(4) == std::map<int, long>{{0, 2}, {1, 1}});
    CHECK(wick_matchings_by_genus(6) == std::map<int, long>{{0, 5}, {1, 10}});
    CHECK(wick_matchings_by_genus(8) == std::map<int, long>{{0, 14}, {1, 70}, {2, 21}});
    CHECK(wick_matchings_by_genus(10) ==
          std::map<int, long>{{0, 42}, {1, 420}, {2, 483}});
    CHECK(wick_oracle(8, 3) == 0);
    CHECK_THROWS_WITH_AS(wick_matchings_by_genus(14), doctest::Contains("capped"),
                         calc_error);
    CHECK_THROWS_AS(wick_matchings_by_genus(3), calc_error);
}

TEST_CASE("gaussian one-point tables match the matching counts") {
    // a weight-1/2 propagator per glued edge: the coefficient of x^{-L-1} in the
    // genus-g one-point amplitude is (#genus-g matchings of a 2L-gon... here an
    // L-gon with L even) / 2^{L/2}
    auto ctx = make_context(gaussian_curve());
    auto w = [](int legs, int genus) {
        return Q(wick_oracle(legs, genus)) / Q(1 << (legs / 2));
    };
    // genus 0 from the physical-sheet expansion of y (decaying part)
    auto disk = x_expansion(ctx, ctx.par.y_of_z, 9);
    for (int legs : {0, 2, 4, 6, 8})
        CHECK(disk[legs + 1] == E(w(legs, 0)));
    // no odd-moment entries
    for (int e : {2, 4, 6, 8}) CHECK(disk.count(e) == 0);
    // higher genus from the stable forms
    auto tab1 = extract_coefficients(ctx, omega(ctx, 1, 1), 8);
    auto tab2 = extract_coefficients(ctx, omega(ctx, 2, 1), 8);
    for (int legs : {4, 6, 8})
        CHECK(tab1[{legs}] == E(w(legs, 1)));
    CHECK(tab2.count({4}) == 0);
    CHECK(tab2.count({6}) == 0);
    CHECK(tab2[{8}] == E(w(8, 2)));  // 21/16
    for (auto& tab : {tab1, tab2})
        for (auto& [ls, c] : tab) CHECK(ls[0] % 2 == 0);
}

TEST_CASE("square-root models have only odd table indices") {
    auto all_odd = [](auto& ctx) {
        for (auto [g, n] : {std::pair<int, int>{0, 3}, {1, 1}, {0, 4}, {1, 2}, {2, 1}}) {
            auto tab = extract_coefficients(ctx, omega(ctx, g, n), 7);
            CHECK(!tab.empty());
            for (auto& [ls, c] : tab)
                for (int l : ls) CHECK(l % 2 == 1);
        }
    };
    {
        auto ctx = make_context(airy_curve());
        all_odd(ctx);
    }
    {
        auto ctx = make_context(bessel_curve());
        all_odd(ctx);
    }
}

TEST_CASE("airy annulus is purely universal") {
    auto ctx = make_context(airy_curve());
    // ordered expansion x1 >> x2 of B/(dx1 dx2) - 1/(x1-x2)^2 in half powers:
    // sum_k (-1)^k (k+1)/4 * x1^{-(k+3)/2} x2^{(k-1)/2}
    const int emax = 8;
    auto pair = annulus_pair_expansion(ctx, emax);
    std::map<std::pair<int, int>, Q> expect;
    for (int k = 0;; ++k) {
        int ea = k + 3, eb = 1 - k;
        if (ea > emax) break;
        expect[{ea, eb}] = Q(k % 2 == 0 ? k + 1 : -(k + 1)) / Q(4);
    }
    CHECK(pair == expect);
    // diagonal limit: 1/(16 x^2) = 1/(16 z^4)
    auto diag = annulus_diagonal(ctx);
    using RF = RationalFunction<Q>;
    CHECK(diag == RF(Polynomial<Q>(Q(1)), Polynomial<Q>::monomial(4, Q(16))));
}

TEST_CASE("gaussian annulus coefficients count two-polygon gluings") {
    auto ctx = make_context(gaussian_curve());
    auto pair = annulus_pair_expansion(ctx, 5);
    // (ea, eb) = (a+1, b+1) holds the connected planar gluings of an a-gon and
    // a b-gon, weight 1/2 per edge; counts below are by direct enumeration
    std::map<std::pair<int, int>, E> expect{
        {{2, 2}, E(Q(1) / Q(2))},  // 1-gon/1-gon: 1 gluing
        {{2, 4}, E(Q(3) / Q(4))},  // 1-gon/3-gon: 3 gluings
        {{3, 3}, E(Q(1) / Q(2))},  // 2-gon/2-gon: 2 gluings
        {{3, 5}, E(Q(1))},         // 2-gon/4-gon: 8 planar gluings
        {{4, 2}, E(Q(3) / Q(4))},
        {{4, 4}, E(Q(3) / Q(2))},  // 3-gon/3-gon: 12 planar gluings
        {{5, 3}, E(Q(1))},
        {{5, 5}, E(Q(9) / Q(4))},  // 4-gon/4-gon: 36 planar gluings
    };
    CHECK(pair == expect);
    // diagonal: a^4 / (8 sigma(x)^2) with a^2 = 2
    auto diag = annulus_diagonal(ctx);
    auto sigma_z = ctx.par.x_of_z * ctx.par.x_of_z - RationalFunction<E>(E(Q(2)));
    CHECK(diag * sigma_z * sigma_z == RationalFunction<E>(E(Q(1) / Q(2))));
}

TEST_CASE("airy kernel differentials have the closed form x^-p") {
    auto ctx = make_context(airy_curve());
    using RF = RationalFunction<Q>;
    for (int p = 1; p <= 3; ++p) {
        auto A = kernel_differential(ctx, 0, p);
        CHECK(A == RF(Polynomial<Q>(Q(1)), Polynomial<Q>::monomial(p, Q(1))));
    }
    CHECK_THROWS_AS(kernel_differential(ctx, 1, 1), calc_error);
    CHECK_THROWS_AS(kernel_differential(ctx, 0, 0), calc_error);
}

TEST_CASE("stable forms expand over kernel differentials and reassemble") {
    {
        auto ctx = make_context(airy_curve());
        // omega_1^(1) = -(1/32) chi^(2) since chi^(p)/dz = 2 z^{-2p}
        auto c11 = kernel_expand(ctx, omega(ctx, 1, 1));
        REQUIRE(c11.size() == 1);
        CHECK(c11[0].first == std::pair<int, std::vector<int>>{0, {2}});
        CHECK(c11[0].second == -Q(1) / Q(32));
        // omega_3^(0) = -(1/16) chi^(1) x chi^(1) x chi^(1)
        auto c03 = kernel_expand(ctx, omega(ctx, 0, 3));
        REQUIRE(c03.size() == 1);
        CHECK(c03[0].first == std::pair<int, std::vector<int>>{0, {1, 1, 1}});
        CHECK(c03[0].second == -Q(1) / Q(16));
        for (auto [g, n] : {std::pair<int, int>{1, 1}, {0, 3}, {1, 2}, {2, 1}}) {
            const auto& md = omega(ctx, g, n);
            auto back = kernel_reassemble(ctx, g, n, kernel_expand(ctx, md));
            CHECK(back.terms == md.terms);
        }
    }
    {
        auto ctx = make_context(gaussian_curve());
        for (auto [g, n] : {std::pair<int, int>{1, 1}, {0, 3}, {1, 2}}) {
            const auto& md = omega(ctx, g, n);
            auto back = kernel_reassemble(ctx, g, n, kernel_expand(ctx, md));
            CHECK(back.terms == md.terms);
        }
    }
}

TEST_CASE("contour quadrature of the recursion residues matches the engine") {
    auto tol = BigFloat(Q(1) / Rational::pow10(10));
    auto agree = [&](auto& ctx, int g, int n, std::vector<Q> at) {
        using R = std::decay_t<decltype(ctx.xi[0])>;
        std::vector<BigFloat> sample;
        std::vector<R> pts;
        for (const auto& q : at) {
            sample.push_back(to_bigfloat(R(q)));
            pts.push_back(R(q));
        }
        BigFloat numeric = numeric_residue_oracle(ctx, g, n, sample);
        BigFloat exact = to_bigfloat(omega(ctx, g, n).eval_r(pts));
        CHECK((numeric - exact).abs() < tol);
    };
    {
        auto ctx = make_context(airy_curve());
        agree(ctx, 0, 3, {Q(2), Q(3), Q(5)});
        agree(ctx, 1, 1, {Q(2)});
        agree(ctx, 1, 2, {Q(5) / Q(2), Q(4)});
        // spot value: omega_1^(1)(2) = -1/(16 * 2^4)
        BigFloat v = numeric_residue_oracle(ctx, 1, 1, {to_bigfloat(Q(2))});
        CHECK((v + to_bigfloat(Q(1) / Q(256))).abs() < tol);
        CHECK_THROWS_AS(
            numeric_residue_oracle(ctx, 1, 1, {to_bigfloat(Q(1) / Q(1000))}),
            calc_error);
    }
    {
        auto ctx = make_context(gaussian_curve());
        agree(ctx, 1, 1, {Q(3)});
        agree(ctx, 0, 3, {Q(23) / Q(5), Q(6), Q(17) / Q(2)});
    }
}

TEST_CASE("gaussian kernel pole bookkeeping") {
    auto ctx = make_context(gaussian_curve());
    auto K = kernel(ctx);
    // as a function of z0 the kernel has poles exactly at z0 in {+-1, z1, 1/z1}:
    // evaluate at fixed rational z1 and inspect the z0-denominator roots
    using F1 = RationalFunction<E>;
    E z1(Q(3));
    F1 num(0), den(0);
    // collapse the nested form at z1
    auto evp = [&](const Polynomial<F1>& p) {
        F1 acc(0);
        for (int i = p.degree(); i >= 0; --i) acc = acc * F1(z1) + p.at(i);
        return acc;
    };
    F1 Kz0 = evp(K.num()) / evp(K.den());
    for (const E& pole : {E(Q(1)), E(Q(-1)), E(Q(3)), E(Q(1) / Q(3))})
        CHECK(Kz0.den().eval_r(pole).is_zero());
    for (const E& reg : {E(Q(2)), E(Q(-5)), E(Q(1) / Q(2))})
        CHECK(!Kz0.den().eval_r(reg).is_zero());
}
