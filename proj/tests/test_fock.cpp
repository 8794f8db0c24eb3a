#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "looprec/fock.hpp"
#include "looprec/models.hpp"
#include "looprec/rational.hpp"

using namespace looprec;

using Q = Rational;
using OP = OperatorPolynomial<Q>;
using Spec = HamiltonianSpec<Q>;

static std::mt19937 rng(20240818);

static Q rand_q() {
    std::uniform_int_distribution<long> num(-9, 9), den(1, 5);
    return Q(num(rng), den(rng));
}

static OP rand_monomial() {
    std::uniform_int_distribution<int> size(0, 2), mode(1, 4), gs(-1, 1);
    std::vector<int> cr, an;
    for (int i = size(rng); i > 0; --i) cr.push_back(mode(rng));
    for (int i = size(rng); i > 0; --i) an.push_back(mode(rng));
    Q c = rand_q();
    if (c.is_zero()) c = Q(1);
    return OP::monomial(cr, an, gs(rng), c);
}

TEST_CASE("canonical commutation relations from the product engine") {
    OP a2 = OP::monomial({}, {2}, 0, Q(1));
    OP c2 = OP::monomial({2}, {}, 0, Q(1));
    OP c3 = OP::monomial({3}, {}, 0, Q(1));
    CHECK(a2.commutator_with(c2) == OP::scalar(Q(1)));
    CHECK(a2.commutator_with(c3).is_zero());
    CHECK(c2.commutator_with(c3).is_zero());
    OP a3 = OP::monomial({}, {3}, 0, Q(1));
    CHECK(a2.commutator_with(a3).is_zero());
    // modes at l <= 0 are the zero operator
    CHECK(OP::monomial({0}, {}, 0, Q(1)).is_zero());
    CHECK(OP::monomial({}, {-1}, 0, Q(1)).is_zero());
    // double contraction: A(1)A(1) C(1)C(1) has constant term 2
    OP a11 = OP::monomial({}, {1, 1}, 0, Q(1));
    OP c11 = OP::monomial({1, 1}, {}, 0, Q(1));
    auto prod = a11 * c11;
    auto it = prod.terms().find(OpKey{{}, {}, 0});
    REQUIRE(it != prod.terms().end());
    CHECK(it->second == Q(2));
}

TEST_CASE("product is associative and the commutator satisfies Leibniz") {
    for (int i = 0; i < 60; ++i) {
        OP a = rand_monomial(), b = rand_monomial(), c = rand_monomial();
        CHECK((a * b) * c == a * (b * c));
        CHECK(a.commutator_with(b * c) == a.commutator_with(b) * c + b * a.commutator_with(c));
    }
}

TEST_CASE("normal ordering is stable under re-multiplication by 1") {
    OP one = OP::scalar(Q(1));
    for (int i = 0; i < 30; ++i) {
        OP a = rand_monomial() + rand_monomial();
        CHECK(one * a == a);
        CHECK(a * one == a);
    }
}

TEST_CASE("basic DT Hamiltonian matches its closed expression term by term") {
    Q kappa(3, 7);
    const int L = 9;
    OP expected;
    expected.add_term({}, {1}, -1, kappa);
    expected.add_term({}, {3}, -1, Q(3) * kappa);
    for (int l = 1; l <= L; ++l) {
        expected.add_term({l}, {l}, 0, Q(-l));
        if (l + 1 <= L) expected.add_term({l + 1}, {l}, 0, Q(l) * kappa);
        if (l - 1 >= 1) expected.add_term({l - 1}, {l}, 0, Q(2 * l) * kappa);
    }
    for (int l = 1; l <= L; ++l)
        for (int lp = 1; lp <= L; ++lp) {
            int la = l + lp - 1;
            if (la <= L) expected.add_term({l, lp}, {la}, 1, Q(la) * kappa);
            int lc = l + lp + 1;
            if (lc <= L) expected.add_term({lc}, {l, lp}, 1, Q(l) * Q(lp) * kappa);
        }
    CHECK(build_hamiltonian(spec_basic_dt(kappa), L) == expected);
}

TEST_CASE("minimal discrete DT Hamiltonian (m=2) matches its closed expression") {
    Q t3(2, 5);
    const int L = 8;
    std::vector<Q> tau = {Q(1), Q(0), Q(-1), t3};
    OP expected;
    expected.add_term({}, {2}, -1, Q(2));
    expected.add_term({}, {1, 1}, 0, Q(1));
    for (int k = 0; k <= 3; ++k)
        for (int l = 1; l <= L; ++l) {
            int lc = l + k - 2;
            if (lc >= 1 && lc <= L) expected.add_term({lc}, {l}, 0, Q(2 * l) * tau[k]);
        }
    for (int l = 1; l <= L; ++l)
        for (int lp = 1; lp <= L; ++lp) {
            int la = l + lp + 2;
            if (la <= L) expected.add_term({l, lp}, {la}, 1, Q(la));
            int lc = l + lp - 2;
            if (lc >= 1 && lc <= L) expected.add_term({lc}, {l, lp}, 1, Q(l) * Q(lp));
        }
    CHECK(build_hamiltonian(spec_mddt<Q>(2, {t3}), L) == expected);
}

TEST_CASE("continuum pure DT Hamiltonian matches its completed-square expression") {
    Q mu(5, 3);
    const int L = 9;
    OP expected;
    expected.add_term({}, {4}, 1, Q(1, 4));
    OP psi1 = OP::monomial({}, {1}, 0, Q(1));
    OP shifted = psi1 - OP::scalar(Q(3, 2) * mu, -1);
    expected += (shifted * shifted * OP::monomial({}, {2}, 0, Q(1))).scaled(Q(1, 8), 1);
    for (int l = 1; l <= L; ++l) {
        if (l + 1 <= L) expected.add_term({l + 1}, {l}, 0, Q(2 * l));
        if (l - 3 >= 1) expected.add_term({l - 3}, {l}, 0, Q(-3 * l, 4) * mu);
    }
    for (int l = 1; l <= L; ++l)
        for (int lp = 1; lp <= L; ++lp) {
            int la = l + lp + 4;
            if (la <= L) expected.add_term({l, lp}, {la}, 1, Q(la));
            int lc = l + lp - 4;
            if (lc >= 1 && lc <= L) expected.add_term({lc}, {l, lp}, 1, Q(l * lp, 4));
        }
    CHECK(build_hamiltonian(spec_cont_pure_dt(mu), L) == expected);
}

TEST_CASE("odd spec with only p_0 keeps just the tadpoles and the triple annihilator") {
    Spec s;
    s.parity = Parity::odd;
    s.deg_min = 0;
    s.deg_max = 0;
    s.s = 0;
    s.tau = {Q(0), Q(0)};
    s.p = {{0, Q(1)}, {1, Q(0)}};
    auto H = build_hamiltonian(s, 10);
    OP annihilation_part;
    for (const auto& [k, c] : H.terms())
        if (k.creators.empty()) annihilation_part.add_term(k.creators, k.annihilators, k.gs_power, c);
    OP expected;
    expected.add_term({}, {4}, 1, Q(1, 4));
    expected.add_term({}, {1, 1, 2}, 1, Q(1, 8));
    CHECK(annihilation_part == expected);
}

TEST_CASE("spec invariants are enforced") {
    Spec s = spec_penner(Q(1, 2));
    s.tau.pop_back();
    CHECK_THROWS_AS(build_hamiltonian(s, 8), calc_error);
    Spec g = spec_gaussian<Q>();
    g.p[0] = Q(0);
    CHECK_THROWS_AS(build_hamiltonian(g, 8), calc_error);
    Spec b = spec_basic_dt(Q(1, 10));
    b.s = 0;  // violates s+2 >= deg_max
    b.tau.pop_back();
    CHECK_THROWS_AS(build_hamiltonian(b, 8), calc_error);
}

TEST_CASE("closed-form commutator details") {
    // tau_0-proportional annihilation term appears exactly at l=1 (even parity)
    auto pen = spec_penner(Q(3, 4));
    auto com = commutator_adjoint(pen, 1, 8);
    auto it = com.terms().find(OpKey{{}, {1}, 0});
    REQUIRE(it != com.terms().end());
    CHECK(it->second == Q(2) * pen.tau[0]);
    // l = 0 is the zero operator
    CHECK(commutator_adjoint(pen, 0, 8).is_zero());
    CHECK(brute_commutator(pen, 0, 8).is_zero());
    // constant term: even spec at l <= deg_min+2 carries kappa_l * l at gs^-1
    auto bas = spec_basic_dt(Q(1, 10));
    auto com3 = commutator_adjoint(bas, 3, 12);
    auto ct = com3.terms().find(OpKey{{}, {}, -1});
    REQUIRE(ct != com3.terms().end());
    CHECK(ct->second == Q(3) * Q(1, 10));
}

static void check_adjoint_equals_brute(const Spec& s, int lmax, int L) {
    for (int l = 1; l <= lmax; ++l) {
        auto closed = commutator_adjoint(s, l, L);
        auto brute = brute_commutator(s, l, L);
        CHECK(closed == brute);
    }
}

TEST_CASE("commutator closed form agrees with brute-force normal ordering on presets") {
    check_adjoint_equals_brute(spec_basic_dt(Q(1, 10)), 6, 10);
    check_adjoint_equals_brute(spec_mddt<Q>(2, {Q(1, 3)}), 6, 10);
    check_adjoint_equals_brute(spec_penner(Q(5, 7)), 6, 10);
    check_adjoint_equals_brute(spec_cont_pure_dt(Q(3, 2)), 6, 10);
    check_adjoint_equals_brute(spec_pure_su2(Q(2, 3)), 6, 10);
}

TEST_CASE("commutator agreement on the remaining catalog entries") {
    check_adjoint_equals_brute(spec_gaussian<Q>(), 4, 10);
    check_adjoint_equals_brute(spec_su2_nf4(Q(1, 2), Q(1, 3), Q(1, 5), Q(2, 7), Q(3)), 4, 12);
    check_adjoint_equals_brute(spec_cont_dt<Q>(3, {Q(1, 2), Q(-1), Q(0), Q(2)}), 4, 12);
    check_adjoint_equals_brute(spec_super_dt<Q>(2, Q(1, 6), {Q(1, 4), Q(0), Q(1)}), 4, 12);
    check_adjoint_equals_brute(spec_airy<Q>(), 4, 10);
    check_adjoint_equals_brute(spec_bessel<Q>(), 4, 10);
    // pinned example points
    check_adjoint_equals_brute(spec_gaussian<Q>(), 1, 10);
    auto su2 = spec_pure_su2(Q(4, 5));
    CHECK(commutator_adjoint(su2, 3, 14) == brute_commutator(su2, 3, 14));
    auto bas = spec_basic_dt(Q(1, 10));
    CHECK(commutator_adjoint(bas, 2, 10) == brute_commutator(bas, 2, 10));
    CHECK_THROWS_AS(brute_commutator(bas, 8, 10), calc_error);
}

TEST_CASE("truncated states: annihilators pair against state creators with multiplicity") {
    auto st = TruncatedState<Q>::vacuum(6);
    OP c1 = OP::monomial({1}, {}, 0, Q(1));
    auto one = apply(c1, st);          // C(1)|vac>
    auto two = apply(c1, one);         // C(1)^2|vac>
    OP a11 = OP::monomial({}, {1, 1}, 0, Q(1));
    auto back = apply(a11, two);       // A(1)A(1) C(1)^2 |vac> = 2 |vac>
    REQUIRE(back.amp.size() == 1);
    CHECK(back.amp.begin()->first.first.empty());
    CHECK(back.amp.begin()->second == Q(2));
    OP hop = OP::monomial({2}, {1}, 0, Q(1));
    auto hopped = apply(hop, one);     // C(2)A(1) C(1)|vac> = C(2)|vac>
    REQUIRE(hopped.amp.size() == 1);
    CHECK(hopped.amp.begin()->first.first == std::vector<int>{2});
}

TEST_CASE("every preset Hamiltonian annihilates the vacuum") {
    CHECK(check_no_bigbang(spec_basic_dt(Q(1, 10)), 12).ok);
    CHECK(check_no_bigbang(spec_mddt<Q>(2, {Q(1, 3)}), 12).ok);
    CHECK(check_no_bigbang(spec_penner(Q(5, 7)), 12).ok);
    CHECK(check_no_bigbang(spec_su2_nf4(Q(1, 2), Q(1, 3), Q(1, 5), Q(2, 7), Q(3)), 12).ok);
    CHECK(check_no_bigbang(spec_cont_pure_dt(Q(3, 2)), 12).ok);
    CHECK(check_no_bigbang(spec_cont_dt<Q>(3, {Q(1, 2), Q(-1), Q(0), Q(2)}), 12).ok);
    CHECK(check_no_bigbang(spec_super_dt<Q>(2, Q(1, 6), {Q(1, 4), Q(0), Q(1)}), 12).ok);
    CHECK(check_no_bigbang(spec_pure_su2(Q(2, 3)), 12).ok);
    CHECK(check_no_bigbang(spec_airy<Q>(), 12).ok);
    CHECK(check_no_bigbang(spec_bessel<Q>(), 12).ok);
    CHECK(check_no_bigbang(spec_gaussian<Q>(), 12).ok);
}

TEST_CASE("a creation term added to the Hamiltonian is caught with a witness") {
    auto H = build_hamiltonian(spec_basic_dt(Q(1, 10)), 12);
    H.add_term({1}, {}, 0, Q(5));
    auto res = check_no_bigbang_of(H, 12);
    CHECK(!res.ok);
    CHECK(res.witness_modes == std::vector<int>{1});
    CHECK(res.witness_coeff == Q(5));
}
