#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bigfloat.hpp"
#include "fock.hpp"
#include "linalg.hpp"
#include "polynomial.hpp"
#include "puiseux.hpp"
#include "ratfunc.hpp"
#include "series.hpp"

namespace looprec {

// ============================================================================
// Spectral curves  y = q(x) sqrt(sigma(x)) / p(x)
//
// sigma is monic with simple roots (the branch points); the branch count is
// 2*genus+2 (even parity) or 2*genus+1 (odd parity).  q has degree s-genus and
// its leading coefficient is pinned to the top tau coupling of the generating
// Hamiltonian.
// ============================================================================

template <class R>
struct SpectralCurve {
    Parity parity = Parity::even;
    Polynomial<R> p, q, sigma;
    // Roots of sigma when expressible in R (degree <= 2 plus factored-out zero
    // roots); empty otherwise.  Operations that need explicit branch points
    // throw when this is empty.
    std::vector<R> branch_points;
    int genus = 0;
    std::string ring_tag;

    int branch_count() const { return sigma.degree(); }

    void validate() const {
        if (sigma.is_zero() || !(sigma.lead() == R(1)))
            throw calc_error("InvalidCurve", "sigma must be monic");
        int b_expected = parity == Parity::even ? 2 * genus + 2 : 2 * genus + 1;
        if (sigma.degree() != b_expected)
            throw calc_error("InvalidCurve", "sigma degree does not match parity and genus");
        if (p.is_zero() || q.is_zero())
            throw calc_error("InvalidCurve", "p and q must be nonzero");
        if (sigma.resultant(sigma.derivative()).is_zero())
            throw calc_error("WrongCutCount", "sigma has a multiple root");
        // zeros of dx (branch points) must avoid zeros and poles of y's finite part
        if (q.degree() >= 1 && sigma.resultant(q).is_zero())
            throw calc_error("InvalidCurve", "q vanishes at a branch point");
        if (p.degree() >= 1 && sigma.resultant(p).is_zero())
            throw calc_error("InvalidCurve", "p vanishes at a branch point");
        for (const R& a : branch_points)
            if (!sigma.eval_r(a).is_zero())
                throw calc_error("InvalidCurve", "listed branch point is not a root of sigma");
    }
};

// p(x) assembled from the Hamiltonian data.
template <class R>
Polynomial<R> interaction_polynomial(const HamiltonianSpec<R>& spec) {
    std::vector<R> c(spec.deg_max + 1, R(0));
    for (const auto& [k, v] : spec.p)
        if (k >= 0 && k <= spec.deg_max) c[k] = v;
    return Polynomial<R>(std::move(c));
}

// Roots of sigma when they live in R: factors out roots at zero, then applies
// the linear/quadratic formulas.  Returns an empty list when the roots are not
// expressible (callers that need them must check).  When R is ordered the
// roots come back sorted ascending.
template <class R>
std::vector<R> try_branch_points(const Polynomial<R>& sigma) {
    std::vector<R> roots;
    Polynomial<R> f = sigma;
    while (!f.is_zero() && f.at(0).is_zero()) {
        roots.push_back(R(0));
        auto [q, r] = f.divmod(Polynomial<R>::x());
        f = q;
    }
    if (f.degree() == 0) {
        // done
    } else if (f.degree() == 1) {
        roots.push_back(-f.at(0) / f.at(1));
    } else if (f.degree() == 2) {
        R a = f.at(2), b = f.at(1), c = f.at(0);
        auto d = (b * b - R(4) * a * c).try_sqrt();
        if (!d) return {};
        R two_a = R(2) * a;
        roots.push_back((-b - *d) / two_a);
        roots.push_back((-b + *d) / two_a);
    } else {
        return {};
    }
    if constexpr (requires(R a, R b) { a < b; }) {
        std::sort(roots.begin(), roots.end());
    }
    return roots;
}

// ============================================================================
// Constrained couplings: the top one (odd) or two (even) kappa couplings are
// fixed by the leading behaviour of the loop equations.  Returns a spec with
// the kappa list extended to include them explicitly.
// ============================================================================

template <class R>
HamiltonianSpec<R> constrained_couplings(HamiltonianSpec<R> spec) {
    spec.validate();
    int nfull = spec.deg_min + (spec.parity == Parity::even ? 2 : 1);
    std::vector<R> full;
    full.reserve(nfull);
    for (int k = 1; k <= nfull; ++k) full.push_back(spec.kappa_at(k));
    spec.kappa = std::move(full);
    return spec;
}

// ============================================================================
// The planar loop equation at infinity.
//
// With the disk amplitude expanded as
//   f(x) = sum_{l>=1} f_l x^{-l-1}        (even parity)
//   f(x) = sum_{l>=1} f_l x^{-(l+2)/2}    (odd parity)
// the equation 0 = (p f^2 + 2 Delta f)_{irregular part} + K_- gives one scalar
// relation per negative power of x (even) or x^{1/2} (odd).
// ============================================================================

// Value of the loop-equation relation indexed by n >= 1: the coefficient of
// x^{-n} (even) or x^{-n/2} (odd).  `exclude_tau_k` omits the single linear
// term coming from tau_{exclude_tau_k} (used to solve the relation for the
// amplitude coefficient that term multiplies).
template <class R>
R sd_planar_equation(const HamiltonianSpec<R>& spec, int n, const std::vector<R>& f,
                     int exclude_tau_k = -1000) {
    const bool even = spec.parity == Parity::even;
    auto F = [&](int idx) { return (idx >= 1 && idx <= (int)f.size()) ? f[idx - 1] : R(0); };
    R acc(0);
    if (even) {
        if (n >= 1 && n <= spec.deg_min + 2) acc = acc + spec.kappa_at(n);
        for (int k = -1; k <= spec.s + 1; ++k) {
            if (k + 1 == exclude_tau_k) continue;
            int idx = n + k - 1;
            if (idx >= 1) acc = acc + R(2) * spec.tau_at(k + 1) * F(idx);
        }
        for (const auto& [k, pk] : spec.p) {
            if (pk.is_zero()) continue;
            int m = n + k - 2;
            for (int l = 1; l <= m - 1; ++l) acc = acc + pk * F(l) * F(m - l);
        }
    } else {
        if (n % 2 == 0 && n / 2 >= 1 && n / 2 <= spec.deg_min + 1)
            acc = acc + spec.kappa_at(n / 2);
        for (int k = -1; k <= spec.s; ++k) {
            if (k + 1 == exclude_tau_k) continue;
            int idx = 2 * k - 1 + n;
            if (idx >= 1) acc = acc + R(2) * spec.tau_at(k + 1) * F(idx);
        }
        for (const auto& [k, pk] : spec.p) {
            if (pk.is_zero()) continue;
            int m = 2 * k - 4 + n;
            for (int l = 1; l <= m - 1; ++l) acc = acc + pk * F(l) * F(m - l);
        }
    }
    return acc;
}

// Number of disk coefficients the loop equation leaves undetermined (the
// moduli of the solution family; zero for one-cut models with s = 0).
template <class R>
int planar_moduli_count(const HamiltonianSpec<R>& spec) {
    return spec.parity == Parity::even ? spec.s : std::max(2 * spec.s - 1, 0);
}

// Disk coefficients f_1..f_{l_max} computed by direct recursion on the loop
// equation: each relation is solved for the coefficient multiplied by the top
// tau coupling.  The undetermined leading coefficients must be supplied in
// `moduli` (e.g. the Coulomb-branch modulus for the gauge-theory models).
template <class R>
std::vector<R> planar_coeff_oracle(const HamiltonianSpec<R>& spec, int l_max,
                                   const std::vector<R>& moduli = {}) {
    spec.validate();
    const bool even = spec.parity == Parity::even;
    const int nfree = planar_moduli_count(spec);
    if ((int)moduli.size() != nfree)
        throw calc_error("UnderdeterminedOrder",
                         "this model's loop equation leaves " + std::to_string(nfree) +
                             " leading disk coefficients free; got " +
                             std::to_string(moduli.size()));
    const int top_tau = even ? spec.s + 2 : spec.s + 1;
    const R lead = spec.tau_at(top_tau);
    if (lead.is_zero())
        throw calc_error("InvalidSpec", "top tau coupling must be nonzero");
    std::vector<R> f(std::max(l_max, nfree), R(0));
    for (int i = 0; i < nfree; ++i) f[i] = moduli[i];
    for (int n = 1;; ++n) {
        int target = even ? spec.s + n : 2 * spec.s - 1 + n;
        if (target > l_max) break;
        if (target < 1) {
            // no new coefficient at this order: the relation must close by itself
            if (!sd_planar_equation(spec, n, f).is_zero())
                throw calc_error("UnderdeterminedOrder",
                                 "loop-equation relation fails to close at order " +
                                     std::to_string(n));
            continue;
        }
        R rest = sd_planar_equation(spec, n, f, top_tau);
        f[target - 1] = -rest / (R(2) * lead);
    }
    f.resize(l_max, R(0));
    return f;
}

// Disk coefficients for models whose quadratic coupling tau_2 is the
// unperturbed unit (even parity: the basic discrete model and the minimal
// models): the relations are solved for f_n through tau_2 and iterated as a
// fixed point graded by the coupling-series order.  The result is verified to
// satisfy the loop equation up to `coupling_order`.
template <class B>
std::vector<Series<B>> planar_coeff_oracle_graded(const HamiltonianSpec<Series<B>>& spec,
                                                  int l_max, int coupling_order,
                                                  int sweeps = -1) {
    using S = Series<B>;
    spec.validate();
    if (spec.parity != Parity::even)
        throw calc_error("InvalidSpec", "graded oracle expects an even-parity spec");
    const S tau2 = spec.tau_at(2);
    if (tau2.is_zero())
        throw calc_error("InvalidSpec", "graded oracle needs a nonzero tau_2 pivot");
    if (sweeps < 0) sweeps = coupling_order + 2;
    const int W = l_max + (coupling_order + 2) * std::max(spec.s, 1) + 4;
    std::vector<S> f(W, S(0));
    const S inv = S(1) / (S(2) * tau2);
    for (int sweep = 0; sweep < sweeps; ++sweep)
        for (int n = 1; n <= W; ++n)
            f[n - 1] = -sd_planar_equation(spec, n, f, 2) * inv;
    for (int n = 1; n <= l_max; ++n) {
        S res = sd_planar_equation(spec, n, f);
        if (!res.truncate(coupling_order).is_zero())
            throw calc_error("UnderdeterminedOrder",
                             "fixed point did not converge to the requested coupling order "
                             "at relation " + std::to_string(n));
    }
    std::vector<S> out;
    out.reserve(l_max);
    for (int i = 0; i < l_max; ++i) out.push_back(f[i].truncate(coupling_order));
    return out;
}

// ============================================================================
// The polynomial identity that determines the curve.
//
// Both parities obey  q^2 sigma = Delta^2 + p*C - p*K_-  with C the regular
// part of (2 Delta f + p f^2) at x = 0 (a polynomial of degree <= s-1).
// Clearing the fractional and negative powers turns this into the polynomial
// identity  E(x) == 0  with
//   E = x^a q^2 sigma - D^2 - x^{deg_min+a} ptil C + ptil K
// where a = 2 (even) / 1 (odd), D collects the tau couplings, ptil = p/x^mu,
// and K collects kappa_1..kappa_{mu+a}.
// ============================================================================

namespace detail {

template <class R, class T, class F>
Polynomial<T> sd_identity(const HamiltonianSpec<R>& spec, const Polynomial<T>& sigma,
                          const Polynomial<T>& q, const Polynomial<T>& C, F&& lift) {
    const bool even = spec.parity == Parity::even;
    const int mu = spec.deg_min, r = spec.deg_max, s = spec.s;
    const int a = even ? 2 : 1;
    const int kmax = mu + a;
    std::vector<T> dcoef;
    for (int j = 0; j <= (even ? s + 2 : s + 1); ++j) dcoef.push_back(lift(spec.tau_at(j)));
    Polynomial<T> D(std::move(dcoef));
    std::vector<T> pt;
    for (int k = 0; k <= r - mu; ++k) pt.push_back(lift(spec.p_at(k + mu)));
    Polynomial<T> ptil(std::move(pt));
    std::vector<T> kc(kmax, T(0));
    for (int k = 1; k <= kmax; ++k) kc[kmax - k] = lift(spec.kappa_at(k));
    Polynomial<T> K(std::move(kc));
    return Polynomial<T>::monomial(a) * q * q * sigma - D * D -
           Polynomial<T>::monomial(mu + a) * ptil * C + ptil * K;
}

template <class R>
bool scalar_negligible(const R& x, bool float_mode) {
    if constexpr (std::is_same_v<R, BigFloat>) {
        if (float_mode) return x.abs() < BigFloat("1e-65");
    }
    (void)float_mode;
    return x.is_zero();
}

} // namespace detail

// Given a curve, the polynomial C that makes the defining identity hold, or
// nullopt when no such polynomial of degree <= s-1 exists (the curve does not
// solve this Hamiltonian's planar loop equation).
template <class R>
std::optional<Polynomial<R>> implied_reg_part(const HamiltonianSpec<R>& spec,
                                              const SpectralCurve<R>& curve) {
    const bool even = spec.parity == Parity::even;
    const int a = even ? 2 : 1;
    auto id = [](const R& v) { return v; };
    Polynomial<R> G =
        detail::sd_identity(spec, curve.sigma, curve.q, Polynomial<R>(), id);
    std::vector<R> pt;
    for (int k = 0; k <= spec.deg_max - spec.deg_min; ++k)
        pt.push_back(spec.p_at(k + spec.deg_min));
    Polynomial<R> divisor = Polynomial<R>::monomial(spec.deg_min + a) * Polynomial<R>(pt);
    auto [q_, r_] = G.divmod(divisor);
    if (!r_.is_zero()) return std::nullopt;
    if (q_.degree() > spec.s - 1) return std::nullopt;
    return q_;
}

template <class R>
bool verify_curve_identity(const HamiltonianSpec<R>& spec, const SpectralCurve<R>& curve) {
    return implied_reg_part(spec, curve).has_value();
}

// ============================================================================
// One-cut solver: Newton iteration with exact forward-mode Jacobians on the
// coefficient-matching identity.  Unknowns are the non-leading coefficients of
// sigma and q together with the auxiliary polynomial C; the leading
// coefficient of q is pinned to the top tau coupling.  The seed selects the
// solution branch (defaults to the decoupled limit sigma = x^b, q = lead).
// ============================================================================

enum class SolveMode { exact, newton };

template <class R>
struct DiskSolveSeed {
    std::vector<R> sigma;  // sigma_0..sigma_{b-1}
    std::vector<R> q;      // q_0..q_{s-1}
    std::vector<R> c;      // c_0..c_{s-1}
};

template <class R>
SpectralCurve<R> solve_disk_curve(const HamiltonianSpec<R>& spec, int h, SolveMode mode,
                                  std::optional<DiskSolveSeed<R>> seed = {},
                                  int max_iter = 60) {
    spec.validate();
    if (h != 0)
        throw calc_error("UnsupportedGenus",
                         "only one-cut solving is implemented; multi-cut curves are "
                         "supplied as preset data");
    const bool even = spec.parity == Parity::even;
    const bool float_mode = mode == SolveMode::newton;
    const int s = spec.s;
    const int b = even ? 2 : 1;
    const int a = even ? 2 : 1;
    const int nunk = b + 2 * s;
    const R qlead = spec.tau_at(even ? s + 2 : s + 1);
    if (qlead.is_zero())
        throw calc_error("InvalidSpec", "top tau coupling must be nonzero");

    std::vector<R> u(nunk, R(0));
    if (seed) {
        if ((int)seed->sigma.size() > b || (int)seed->q.size() > s ||
            (int)seed->c.size() > s)
            throw calc_error("InvalidSpec", "seed has too many coefficients");
        for (size_t i = 0; i < seed->sigma.size(); ++i) u[i] = seed->sigma[i];
        for (size_t i = 0; i < seed->q.size(); ++i) u[b + i] = seed->q[i];
        for (size_t i = 0; i < seed->c.size(); ++i) u[b + s + i] = seed->c[i];
    }

    using J = Jet<R>;
    bool converged = false;
    for (int iter = 0; iter < max_iter && !converged; ++iter) {
        std::vector<J> v;
        v.reserve(nunk);
        for (int i = 0; i < nunk; ++i) v.emplace_back(u[i], nunk, i);
        std::vector<J> sc(v.begin(), v.begin() + b);
        sc.push_back(J::constant(R(1), nunk));
        std::vector<J> qc(v.begin() + b, v.begin() + b + s);
        qc.push_back(J::constant(qlead, nunk));
        std::vector<J> cc(v.begin() + b + s, v.end());
        auto lift = [&](const R& x) { return J::constant(x, nunk); };
        Polynomial<J> E = detail::sd_identity(spec, Polynomial<J>(sc), Polynomial<J>(qc),
                                              Polynomial<J>(cc), lift);
        std::vector<R> F(nunk);
        std::vector<std::vector<R>> Jac(nunk, std::vector<R>(nunk, R(0)));
        bool small = true;
        for (int k = 0; k < nunk; ++k) {
            J e = E.at(a + k);
            F[k] = e.val;
            if (!detail::scalar_negligible(e.val, float_mode)) small = false;
            for (int i = 0; i < (int)e.d.size(); ++i) Jac[k][i] = e.d[i];
        }
        if (small) {
            converged = true;
            break;
        }
        std::vector<R> rhs(nunk);
        for (int k = 0; k < nunk; ++k) rhs[k] = -F[k];
        std::vector<R> delta;
        try {
            delta = solve_linear(Jac, rhs);
        } catch (const calc_error& e) {
            throw calc_error("BranchAmbiguity",
                             std::string("Jacobian is singular along the solution path (") +
                                 e.what() + ")");
        }
        for (int i = 0; i < nunk; ++i) u[i] = u[i] + delta[i];
    }
    if (!converged) {
        // one final residual evaluation for the error message
        std::vector<R> sc(u.begin(), u.begin() + b);
        sc.push_back(R(1));
        std::vector<R> qc(u.begin() + b, u.begin() + b + s);
        qc.push_back(qlead);
        std::vector<R> cc(u.begin() + b + s, u.end());
        auto id = [](const R& x) { return x; };
        Polynomial<R> E = detail::sd_identity(spec, Polynomial<R>(sc), Polynomial<R>(qc),
                                              Polynomial<R>(cc), id);
        throw calc_error("NoConvergence",
                         "Newton did not reach the residual target; residual = " + E.str());
    }

    SpectralCurve<R> curve;
    curve.parity = spec.parity;
    curve.genus = 0;
    {
        std::vector<R> sc(u.begin(), u.begin() + b);
        sc.push_back(R(1));
        curve.sigma = Polynomial<R>(std::move(sc));
        std::vector<R> qc(u.begin() + b, u.begin() + b + s);
        qc.push_back(qlead);
        curve.q = Polynomial<R>(std::move(qc));
    }
    curve.p = interaction_polynomial(spec);
    if (detail::scalar_negligible(curve.sigma.resultant(curve.sigma.derivative()),
                                  float_mode) &&
        !curve.sigma.resultant(curve.sigma.derivative()).is_zero())
        throw calc_error("WrongCutCount", "sigma has a (numerically) multiple root");
    if (curve.sigma.resultant(curve.sigma.derivative()).is_zero())
        throw calc_error("WrongCutCount", "sigma has a multiple root");
    curve.branch_points = try_branch_points(curve.sigma);
    return curve;
}

// ============================================================================
// Disk amplitude read off a curve:  f = q sqrt(sigma)/p - Delta/p  expanded at
// infinity.  Verifies the decay f = O(x^{-2}) (even) / O(x^{-3/2}) (odd) and
// returns the coefficients f_1..f_{l_max} in the conventions of the planar
// loop equation above.
// ============================================================================

template <class R>
std::vector<R> disk_coefficients_from_curve(const HamiltonianSpec<R>& spec,
                                            const SpectralCurve<R>& curve, int l_max) {
    const bool even = spec.parity == Parity::even;
    const int N = l_max + curve.p.degree() + curve.q.degree() + curve.sigma.degree() + 6;
    auto inf = [](const Polynomial<R>& P) {
        auto c = P.coeffs();
        std::vector<R> rev(c.rbegin(), c.rend());
        return Series<R>(-P.degree(), std::move(rev), Series<R>::EXACT);
    };
    Puiseux<R> S = sqrt_series(curve.sigma, std::nullopt, N);
    Puiseux<R> Q(1, inf(curve.q), true);
    Puiseux<R> Pinv(1, inf(curve.p).inverse(N + curve.p.degree() + 4), true);
    // D(x)/x^a' with a' = 1 (even) or 1/2 (odd); D collects the tau couplings
    std::vector<R> dcoef;
    for (int j = 0; j <= (even ? spec.s + 2 : spec.s + 1); ++j)
        dcoef.push_back(spec.tau_at(j));
    Polynomial<R> D(std::move(dcoef));
    Puiseux<R> f(1, Series<R>(0, {}, 0), true);
    if (even) {
        Puiseux<R> Delta(1, inf(D) * Series<R>::monomial(1), true);
        f = Q * S * Pinv - Delta * Pinv;
    } else {
        // Delta = D(x) * x^{-1/2}: lift D's expansion to half-integer exponents
        Puiseux<R> Dlift = Puiseux<R>(1, inf(D), true).lift();
        Puiseux<R> half(2, Series<R>::monomial(1), true);  // x^{-1/2}
        f = Q * S * Pinv - Dlift * half * Pinv;
    }
    const int e = f.ramification();
    std::vector<R> out;
    if (even && e == 1) {
        for (int k = 0; k <= 1; ++k)
            if (!f.coeff(k).is_zero())
                throw calc_error("AsymptoticsViolation",
                                 "disk amplitude does not decay as x^-2");
        for (int l = 1; l <= l_max; ++l) out.push_back(f.coeff(l + 1));
    } else if (!even && e == 2) {
        for (int k = 0; k <= 2; ++k)
            if (!f.coeff(k, 2).is_zero())
                throw calc_error("AsymptoticsViolation",
                                 "disk amplitude does not decay as x^-3/2");
        for (int l = 1; l <= l_max; ++l) out.push_back(f.coeff(l + 2, 2));
    } else {
        throw calc_error("InvalidCurve", "curve parity does not match its sigma degree");
    }
    return out;
}

// ============================================================================
// Critical point of the basic discrete model: the coupling where the cubic
// kappa^2 gamma^3 - gamma + 8 kappa = 0 develops a double root.  Exact values
// in the tower Q(sqrt(3))(3^{1/4}).
// ============================================================================

struct BasicDtCriticalPoint {
    using E1 = AlgExt<Rational>;
    using E2 = AlgExt<E1>;
    E1::ModPtr mod_sqrt3;   // g^2 = 3
    E2::ModPtr mod_fourth;  // g^2 = sqrt(3)
    E2 kappa_c, gamma_c, alpha_c, x_c;
};

inline BasicDtCriticalPoint critical_point_basic_dt() {
    using E1 = BasicDtCriticalPoint::E1;
    using E2 = BasicDtCriticalPoint::E2;
    BasicDtCriticalPoint out;
    out.mod_sqrt3 = E1::make_mod({Rational(-3), Rational(0), Rational(1)}, "r3", 1.7320508);
    E1 r3 = E1::gen(out.mod_sqrt3);
    out.mod_fourth = E2::make_mod({E1(0) - r3, E1(0), E1(1)}, "q3", 1.3160740);
    E2 q3 = E2::gen(out.mod_fourth);  // q3^2 = sqrt(3), so q3 = 3^{1/4}
    out.kappa_c = E2(1) / (E2(2) * q3 * q3 * q3);
    out.gamma_c = E2(2) * q3;
    out.alpha_c = out.gamma_c;
    out.x_c = out.gamma_c;
    return out;
}

// ============================================================================
// Genus-zero rational parametrization.
//   odd  (one branch point):  x = z^2 + alpha_1, sqrt(sigma) = z, zbar = -z
//   even (two branch points): Zhukovsky map, zbar = 1/z
// ============================================================================

template <class R>
struct RationalParametrization {
    int branch_count = 1;
    RationalFunction<R> x_of_z, sqrt_sigma_of_z, y_of_z, zbar_of_z;
};

template <class R>
RationalParametrization<R> parametrize(const SpectralCurve<R>& curve) {
    if (curve.genus != 0)
        throw calc_error("UnsupportedGenus", "rational parametrization needs genus 0");
    if ((int)curve.branch_points.size() != curve.branch_count())
        throw calc_error("InvalidCurve",
                         "branch points are not available in this scalar ring");
    RationalParametrization<R> out;
    out.branch_count = curve.branch_count();
    using P = Polynomial<R>;
    using F = RationalFunction<R>;
    if (out.branch_count == 1) {
        R a1 = curve.branch_points[0];
        out.x_of_z = F(P::x() * P::x() + P(a1));
        out.sqrt_sigma_of_z = F(P::x());
        out.zbar_of_z = F(-P::x());
    } else if (out.branch_count == 2) {
        R a1 = curve.branch_points[0], a2 = curve.branch_points[1];
        R mid = (a1 + a2) / R(2);
        R c = (a1 - a2) / R(4);
        // x = mid - c (z + 1/z), sqrt(sigma) = -c (z - 1/z)
        P z = P::x();
        out.x_of_z = F(P(mid) * z - P(c) * (z * z + P(1)), z);
        out.sqrt_sigma_of_z = F(P(-c) * (z * z - P(1)), z);
        out.zbar_of_z = F(P(1), z);
    } else {
        throw calc_error("UnsupportedGenus", "parametrization needs 1 or 2 branch points");
    }
    F qx = F(curve.q).compose(out.x_of_z);
    F px = F(curve.p).compose(out.x_of_z);
    out.y_of_z = qx * out.sqrt_sigma_of_z / px;
    return out;
}

// ============================================================================
// Fundamental bidifferential in the x-coordinate (value of B/(dx1 dx2)).
// Closed forms for one and two branch points; the square roots of sigma are
// taken on the physical sheet (pass them explicitly to fix the sheet, or let
// the ring's canonical square root decide).
// ============================================================================

template <class R>
R bidifferential_x(const SpectralCurve<R>& curve, const R& x1, const R& x2,
                   std::optional<R> sqrt1 = {}, std::optional<R> sqrt2 = {}) {
    if (x1 == x2) throw calc_error("Coincident", "bidifferential needs x1 != x2");
    R s1v = curve.sigma.eval_r(x1), s2v = curve.sigma.eval_r(x2);
    if (s1v.is_zero() || s2v.is_zero())
        throw calc_error("BranchPoint", "bidifferential evaluated at a branch point");
    R r1, r2;
    if (sqrt1) {
        r1 = *sqrt1;
        if (!(r1 * r1 == s1v))
            throw calc_error("InvalidSpec", "supplied sqrt does not square to sigma(x1)");
    } else {
        auto t = s1v.try_sqrt();
        if (!t) throw calc_error("PrecisionLoss", "sigma(x1) has no square root in this ring");
        r1 = *t;
    }
    if (sqrt2) {
        r2 = *sqrt2;
        if (!(r2 * r2 == s2v))
            throw calc_error("InvalidSpec", "supplied sqrt does not square to sigma(x2)");
    } else {
        auto t = s2v.try_sqrt();
        if (!t) throw calc_error("PrecisionLoss", "sigma(x2) has no square root in this ring");
        r2 = *t;
    }
    R cross;
    if (curve.branch_count() == 1) {
        R a1 = -curve.sigma.at(0);  // sigma = x - alpha_1
        cross = (x1 + x2) / R(2) - a1;
    } else if (curve.branch_count() == 2) {
        // alpha_1 + alpha_2 = -sigma_1, alpha_1 alpha_2 = sigma_0
        cross = x1 * x2 + curve.sigma.at(1) * (x1 + x2) / R(2) + curve.sigma.at(0);
    } else {
        throw calc_error("UnsupportedGenus", "closed form covers 1 or 2 branch points");
    }
    R d = x1 - x2;
    return (cross / (r1 * r2) + R(1)) / (R(2) * d * d);
}

// ============================================================================
// A-periods  P_i = (1/2 pi i) \oint_{[a,b]} q sqrt(sigma)/p dx  by quadrature
// after x = midpoint + halfwidth*cos(theta), which removes the endpoint
// square-root singularities.  Gauss-Legendre for the production path, tanh-
// sinh as an independent cross-check.
// ============================================================================

struct PeriodResult {
    int index = 0;
    CBigFloat value;
    BigFloat error;
    int depth = 0;
    bool converged = false;
};

namespace quad {

inline const BigFloat::Raw& pi_raw() {
    static const BigFloat::Raw pi = boost::multiprecision::atan(BigFloat::Raw(1)) * 4;
    return pi;
}

// Gauss-Legendre nodes and weights on [-1, 1] at 256-bit precision.
inline const std::vector<std::pair<BigFloat, BigFloat>>& gauss_legendre(int n) {
    static std::map<int, std::vector<std::pair<BigFloat, BigFloat>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    using Raw = BigFloat::Raw;
    std::vector<std::pair<BigFloat, BigFloat>> out;
    out.reserve(n);
    const Raw& pi = pi_raw();
    for (int i = 1; i <= n; ++i) {
        Raw x = boost::multiprecision::cos(pi * (Raw(i) - Raw(1) / 4) / (Raw(n) + Raw(1) / 2));
        Raw dp = 0;
        for (int it2 = 0; it2 < 100; ++it2) {
            // Legendre recurrence for P_n(x) and P_{n-1}(x)
            Raw p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                Raw p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            Raw step = p1 / dp;
            x -= step;
            if (boost::multiprecision::abs(step) < Raw("1e-70")) break;
        }
        Raw w = 2 / ((1 - x * x) * dp * dp);
        out.emplace_back(BigFloat(x), BigFloat(w));
    }
    return cache.emplace(n, std::move(out)).first->second;
}

} // namespace quad

namespace detail {

// sqrt(sigma(x)) for real x between branch points: sigma keeps one sign on the
// open segment, so the branch is +sqrt for positive values and +i sqrt(|.|)
// for negative ones (a fixed continuous choice along the segment).
inline CBigFloat sqrt_on_segment(const BigFloat& v) {
    if (v < BigFloat(0)) return CBigFloat(BigFloat(0), *(-v).try_sqrt());
    return CBigFloat(*v.try_sqrt(), BigFloat(0));
}

template <class Eval>
CBigFloat cycle_integral_gl(Eval&& f, int npoints) {
    using Raw = BigFloat::Raw;
    const Raw& pi = quad::pi_raw();
    const auto& nodes = quad::gauss_legendre(npoints);
    CBigFloat acc;
    for (const auto& [xi, wi] : nodes) {
        Raw theta = pi * (1 + xi.raw()) / 2;
        CBigFloat val = f(BigFloat(theta));
        acc = acc + val * CBigFloat(wi * BigFloat(pi / 2));
    }
    return acc;
}

template <class Eval>
CBigFloat cycle_integral_tanh_sinh(Eval&& f, int level) {
    using Raw = BigFloat::Raw;
    const Raw& pi = quad::pi_raw();
    Raw h = Raw(1) / boost::multiprecision::pow(Raw(2), level);
    CBigFloat acc;
    for (int k = -2000; k <= 2000; ++k) {
        Raw t = h * k;
        Raw sh = boost::multiprecision::sinh(t);
        Raw ch = boost::multiprecision::cosh(t);
        Raw inner = pi / 2 * sh;
        if (boost::multiprecision::abs(inner) > 300) continue;
        Raw u = boost::multiprecision::tanh(inner);           // in (-1, 1)
        Raw cosh_inner = boost::multiprecision::cosh(inner);
        Raw w = h * (pi / 2) * ch / (cosh_inner * cosh_inner);  // du
        if (w < Raw("1e-85")) continue;
        Raw theta = pi * (1 + u) / 2;
        CBigFloat val = f(BigFloat(theta));
        acc = acc + val * CBigFloat(BigFloat(w * (pi / 2)));
    }
    return acc;
}

} // namespace detail

// All complex roots of a float polynomial (Durand-Kerner iteration; simple
// roots assumed, matching the simple-root invariant of sigma).
inline std::vector<CBigFloat> numeric_roots(const Polynomial<BigFloat>& f,
                                            int max_iter = 500) {
    int n = f.degree();
    if (n <= 0) return {};
    Polynomial<CBigFloat> fc = f.map<CBigFloat>([](const BigFloat& c) { return CBigFloat(c); });
    CBigFloat lead = fc.lead();
    std::vector<CBigFloat> z(n);
    // distinct nonreal seed points on a spiral
    CBigFloat w(BigFloat("0.4"), BigFloat("0.9"));
    CBigFloat acc(BigFloat(1), BigFloat(0));
    for (int i = 0; i < n; ++i) {
        acc = acc * w;
        z[i] = acc;
    }
    BigFloat tol("1e-70");
    for (int it = 0; it < max_iter; ++it) {
        BigFloat worst(0);
        for (int i = 0; i < n; ++i) {
            CBigFloat num = fc.eval(z[i]) / lead;
            CBigFloat den(BigFloat(1), BigFloat(0));
            for (int j = 0; j < n; ++j)
                if (j != i) den = den * (z[i] - z[j]);
            CBigFloat step = num / den;
            z[i] = z[i] - step;
            BigFloat s = step.abs();
            if (worst < s) worst = s;
        }
        if (worst < tol) break;
    }
    return z;
}

// Real roots of a float polynomial, sorted ascending (imaginary parts below
// the cutoff are treated as numerical noise).
inline std::vector<BigFloat> numeric_real_roots(const Polynomial<BigFloat>& f,
                                                const BigFloat& imag_cutoff = BigFloat("1e-50")) {
    std::vector<BigFloat> out;
    for (const CBigFloat& z : numeric_roots(f))
        if (z.im.abs() < imag_cutoff) out.push_back(z.re);
    std::sort(out.begin(), out.end());
    return out;
}

// Cycle integral (1/2 pi i) \oint around the segment [a, b] of y dx, computed
// as (1/pi i) \int_a^b y dx with the fixed square-root branch above.
template <class Eval>
CBigFloat segment_period(const SpectralCurve<BigFloat>& curve, const BigFloat& a,
                         const BigFloat& b, Eval&& integrate) {
    BigFloat mid = (a + b) / BigFloat(2);
    BigFloat w = (b - a) / BigFloat(2);
    if (w.is_zero()) return CBigFloat();
    auto integrand = [&](const BigFloat& theta) -> CBigFloat {
        using Raw = BigFloat::Raw;
        Raw ct = boost::multiprecision::cos(theta.raw());
        Raw st = boost::multiprecision::sin(theta.raw());
        BigFloat x = mid + w * BigFloat(ct);
        BigFloat sv = curve.sigma.eval_r(x);
        CBigFloat sq = detail::sqrt_on_segment(sv);
        BigFloat pref = curve.q.eval_r(x) / curve.p.eval_r(x) * w * BigFloat(st);
        return sq * CBigFloat(pref);
    };
    CBigFloat integral = integrate(integrand);
    // multiply by 1/(pi i) = -i/pi
    BigFloat pi(quad::pi_raw());
    return integral * CBigFloat(BigFloat(0), BigFloat(-1)) / CBigFloat(pi);
}

inline std::vector<PeriodResult> a_periods(const SpectralCurve<BigFloat>& curve,
                                           const BigFloat& tol, int max_depth = 8) {
    if (curve.genus < 1) throw calc_error("UnsupportedGenus", "A-periods need genus >= 1");
    const auto& bp = curve.branch_points;
    if ((int)bp.size() != curve.branch_count())
        throw calc_error("InvalidCurve", "A-periods need explicit branch points");
    for (size_t i = 0; i + 1 < bp.size(); ++i)
        if (bp[i + 1] < bp[i])
            throw calc_error("OverlappingCuts", "branch points must be sorted");
    std::vector<PeriodResult> out;
    for (int i = 0; i < curve.genus; ++i) {
        const BigFloat& a = bp[2 * i];
        const BigFloat& b = bp[2 * i + 1];
        PeriodResult res;
        res.index = i + 1;
        if (a == b) {
            res.converged = true;
            out.push_back(res);
            continue;
        }
        CBigFloat prev;
        for (int d = 0; d <= max_depth; ++d) {
            int n = 16 << d;
            CBigFloat val = segment_period(curve, a, b, [&](auto&& f) {
                return detail::cycle_integral_gl(f, n);
            });
            if (d > 0) {
                BigFloat err = (val - prev).abs();
                res.error = err;
                if (err < tol) {
                    res.value = val;
                    res.depth = d;
                    res.converged = true;
                    break;
                }
            }
            prev = val;
            res.value = val;
            res.depth = d;
        }
        out.push_back(res);
    }
    return out;
}

// Independent tanh-sinh evaluation of the same cycle integral (oracle).
inline CBigFloat segment_period_tanh_sinh(const SpectralCurve<BigFloat>& curve,
                                          const BigFloat& a, const BigFloat& b,
                                          int level = 7) {
    return segment_period(curve, a, b, [&](auto&& f) {
        return detail::cycle_integral_tanh_sinh(f, level);
    });
}

// ============================================================================
// Mass residues:  (1/2 pi i) \oint y dx  around x = infinity or a finite
// point, by exact series expansion of q sqrt(sigma)/p.
// ============================================================================

// `sheet` (+1/-1) picks the preimage on the double cover: the residue changes
// sign between the two points over a finite pole, and between the two
// infinities.  +1 is the branch where sqrt(sigma) takes its canonical value
// (positive leading behaviour at infinity; principal root at finite points).
template <class R>
R mass_residue_infinity(const SpectralCurve<R>& curve, int sheet = +1) {
    const int N = curve.sigma.degree() + curve.q.degree() + curve.p.degree() + 6;
    auto inf = [](const Polynomial<R>& P) {
        auto c = P.coeffs();
        std::vector<R> rev(c.rbegin(), c.rend());
        return Series<R>(-P.degree(), std::move(rev), Series<R>::EXACT);
    };
    Puiseux<R> S = sqrt_series(curve.sigma, std::nullopt, N);
    Puiseux<R> Q(1, inf(curve.q), true);
    Puiseux<R> Pinv(1, inf(curve.p).inverse(N + curve.p.degree() + 4), true);
    Puiseux<R> y = Q * S * Pinv;
    R res = y.coeff(1);  // coefficient of x^{-1}
    return sheet >= 0 ? res : -res;
}

template <class R>
R mass_residue(const SpectralCurve<R>& curve, const R& point, int sheet = +1) {
    if (curve.sigma.eval_r(point).is_zero())
        throw calc_error("BranchPointUnsupported",
                         "residue at a branch point needs the double cover");
    Polynomial<R> shift = Polynomial<R>::x() + Polynomial<R>(point);
    Polynomial<R> ps = curve.p.compose(shift);
    Polynomial<R> qs = curve.q.compose(shift);
    Polynomial<R> ss = curve.sigma.compose(shift);
    Series<R> pser(0, ps.coeffs(), Series<R>::EXACT);
    if (pser.is_zero()) throw calc_error("DivisionByZero", "p is the zero polynomial");
    int v = pser.valuation();
    if (v == 0) return R(0);  // no pole of y dx at this point
    auto root = Series<R>(0, ss.coeffs(), v + 4).try_sqrt();
    if (!root)
        throw calc_error("PrecisionLoss",
                         "sigma(point) has no square root in this scalar ring");
    Series<R> qser(0, qs.coeffs(), Series<R>::EXACT);
    Series<R> y = qser * *root * pser.inverse(v + 4);
    R res = y.at_or_zero(-1);
    return sheet >= 0 ? res : -res;
}

// ============================================================================
// Continuum limit of the basic discrete model at its critical point.
//
// Substituting x = x_c e^{eps xi}, kappa = kappa_c e^{-(3/16) eps^2 mu} and
// zooming in on the branch point gives
//   2 x_c eps^{-3/2} y = (xi - sqrt(mu)/2) sqrt(xi + sqrt(mu)) + O(eps).
// Computed exactly in nested truncated series over Q(sqrt(3))(3^{1/4}), with
// m = mu^{1/4} so that all square roots stay in the ring.
// ============================================================================

struct ContinuumLimitBasicDt {
    using E = BasicDtCriticalPoint::E2;
    using Sm = Series<E>;    // m = mu^{1/4}
    using Sxi = Series<Sm>;  // xi
    using Se = Series<Sxi>;  // eps
    Sxi limit_leading;  // eps^0 coefficient of 2 x_c eps^{-3/2} y
    Sxi target;         // (xi - sqrt(mu)/2) sqrt(xi + sqrt(mu))
    Se scaled_curve;    // the full eps-series
    bool matches = false;
};

inline ContinuumLimitBasicDt continuum_limit_check_basic_dt(int eps_order = 4,
                                                            int xi_order = 6,
                                                            int m_order = 12) {
    using E = ContinuumLimitBasicDt::E;
    using Sm = ContinuumLimitBasicDt::Sm;
    using Sxi = ContinuumLimitBasicDt::Sxi;
    using Se = ContinuumLimitBasicDt::Se;
    auto crit = critical_point_basic_dt();
    const E kappa_c = crit.kappa_c, gamma_c = crit.gamma_c, x_c = crit.x_c;
    auto embE = [&](const E& e) { return Se(Sxi(Sm(e))); };
    auto ratE = [](long n, long d) { return E(BasicDtCriticalPoint::E1(Rational(n, d))); };
    Sm m = Sm(1, {E(1)}, m_order, "m");
    Sm mu = m * m * m * m;
    Sxi xi = Sxi(1, {Sm(1)}, xi_order, "xi");
    Se eps = Se(1, {Sxi(1)}, eps_order, "eps");

    // kappa(eps) = kappa_c exp(-(3/16) mu eps^2)
    Se kap_arg = Se(2, {Sxi(mu * Sm(ratE(-3, 16)))}, eps_order, "eps");
    Se kappa = embE(kappa_c) * kap_arg.exp_series(eps_order);

    auto cubic = [&](const Se& g) { return kappa * kappa * g * g * g - g + Se(Sxi(Sm(E(8)))) * kappa; };
    auto cubic_d = [&](const Se& g) {
        return Se(Sxi(Sm(E(3)))) * kappa * kappa * g * g - Se(Sxi(Sm(E(1))));
    };

    // gamma = gamma_c + eps d; the eps^0 relation for d is quadratic:
    //   3 kappa_c^2 gamma_c d0^2 + [cubic(gamma_c)/eps^2]|_{eps^0} = 0
    Se c0_full = cubic(embE(gamma_c));
    Sxi c0 = c0_full.at_or_zero(2);
    Sm c0m = c0.at_or_zero(0);
    Sm d0sq = -c0m / Sm(E(3) * kappa_c * kappa_c * gamma_c);
    auto d0opt = d0sq.try_sqrt();
    if (!d0opt)
        throw calc_error("PrecisionLoss", "no square root for the branch-point deviation");
    Sm d0 = *d0opt;
    // pick the branch where gamma grows as the coupling backs off criticality
    if (!(d0.at_or_zero(2) == x_c / E(2))) d0 = -d0;
    if (!(d0.at_or_zero(2) == x_c / E(2)))
        throw calc_error("BranchAmbiguity", "neither square root matches the physical branch");

    Se d = Se(Sxi(d0));
    for (int it = 0; it < eps_order + 3; ++it) {
        Se g = embE(gamma_c) + eps * d;
        Se num = cubic(g);
        if (num.negligible()) break;
        Se den = eps * cubic_d(g);
        d = d - num * den.inverse(eps_order);
    }
    Se gamma = embE(gamma_c) + eps * d;
    if (!cubic(gamma).negligible())
        throw calc_error("NoConvergence", "cubic not solved to the requested order");
    Se alpha = embE(E(4)) / (kappa * gamma * gamma);

    Se x = embE(x_c) * Se(1, {xi}, eps_order, "eps").exp_series(eps_order);
    Se A = (x - gamma).shift(-1) * embE(E(1) / x_c);
    Se w = (x - alpha).shift(-1) * embE(E(1) / x_c);
    auto sw = w.try_sqrt();
    if (!sw) throw calc_error("PrecisionLoss", "no square root of the zoomed branch factor");
    Se expfac = Se(1, {xi * Sxi(Sm(ratE(-5, 2)))}, eps_order, "eps").exp_series(eps_order);
    Se scaled = A * *sw * expfac;  // = 2 x_c eps^{-3/2} y

    ContinuumLimitBasicDt out;
    out.scaled_curve = scaled;
    for (int k = scaled.low(); k < 0; ++k)
        if (!scaled.at_or_zero(k).negligible())
            throw calc_error("ScalingMismatch", "scaled curve diverges as eps -> 0");
    out.limit_leading = scaled.at_or_zero(0);
    Sxi arg = xi + Sxi(m * m);
    auto st = arg.try_sqrt();
    if (!st) throw calc_error("PrecisionLoss", "no square root of xi + sqrt(mu)");
    out.target = (xi - Sxi(m * m * Sm(E(1) / E(2)))) * *st;
    out.matches = (out.limit_leading - out.target).negligible();
    return out;
}

// Numeric residual |2 x_c eps^{-3/2} y - (xi - sqrt(mu)/2) sqrt(xi + sqrt(mu))|
// at given eps, mu, xi (for the first-order-in-eps slope test).
inline BigFloat continuum_limit_residual_numeric(const BigFloat& eps, const BigFloat& mu,
                                                 const BigFloat& xi) {
    using Raw = BigFloat::Raw;
    Raw three(3);
    Raw kappa_c = 1 / (2 * boost::multiprecision::pow(three, Raw(3) / 4));
    Raw x_c = 2 * boost::multiprecision::pow(three, Raw(1) / 4);
    Raw kappa = kappa_c * boost::multiprecision::exp(-Raw(3) / 16 * eps.raw() * eps.raw() * mu.raw());
    // solve kappa^2 g^3 - g + 8 kappa = 0 near g = x_c on the physical branch
    Raw g = x_c + eps.raw() * x_c * boost::multiprecision::sqrt(mu.raw()) / 2;
    for (int it = 0; it < 200; ++it) {
        Raw fval = kappa * kappa * g * g * g - g + 8 * kappa;
        Raw dval = 3 * kappa * kappa * g * g - 1;
        Raw step = fval / dval;
        g -= step;
        if (boost::multiprecision::abs(step) < Raw("1e-70")) break;
    }
    Raw alpha = 4 / (kappa * g * g);
    Raw x = x_c * boost::multiprecision::exp(eps.raw() * xi.raw());
    Raw y = (x - g) * boost::multiprecision::sqrt(x * (x - alpha)) / (2 * x * x * x);
    Raw val = 2 * x_c * y / (eps.raw() * boost::multiprecision::sqrt(eps.raw()));
    Raw sq = boost::multiprecision::sqrt(mu.raw());
    Raw target = (xi.raw() - sq / 2) * boost::multiprecision::sqrt(xi.raw() + sq);
    return BigFloat(Raw(boost::multiprecision::abs(val - target)));
}

// ============================================================================
// Decoupling limits of the SU(2) gauge-theory curves.  Each rule substitutes
// the heavy-mass limit as a Laurent series in the decoupling parameter t,
// applies the accompanying (x, y) scalings, and keeps the finite part.
// ============================================================================

enum class DecoupleRule {
    identity,
    nf4_to_nf3,
    nf3_to_nf2_first,
    nf3_to_nf2_second,
    nf2_first_to_nf1,
    nf1_to_nf0,
};

// y^2 of the flavored curves, as (numerator, denominator) polynomial pairs.
// Kept unreduced: the decoupling limits substitute Laurent polynomials in the
// decoupling parameter, and avoiding gcd reduction keeps that arithmetic exact.
template <class R>
using CurveParts = std::pair<Polynomial<R>, Polynomial<R>>;

template <class R>
CurveParts<R> sw_y2_nf4_parts(const R& m0, const R& m1, const R& m2, const R& m3,
                              const R& zeta, const R& U) {
    using P = Polynomial<R>;
    R m0sq = m0 * m0;
    R S1 = -((zeta - R(1)) * m2 * m2 + R(2) * zeta * m2 * m3 + (R(1) + zeta) * (m0sq + U)) / m0sq;
    R S2 = (zeta * (m0sq + m1 * m1 - m3 * m3 + R(2) * m2 * m3) +
            (zeta - R(1)) * zeta * m2 * m2 + zeta * zeta * (R(2) * m2 + m3) * m3 +
            (R(1) + zeta) * (R(1) + zeta) * U) /
           m0sq;
    R S3 = -(zeta * (m1 * m1 - m3 * m3) +
             zeta * zeta * (m1 * m1 + R(2) * m2 * m3 + m3 * m3) + zeta * (R(1) + zeta) * U) /
           m0sq;
    R S4 = zeta * zeta * m1 * m1 / m0sq;
    P sigma({S4, S3, S2, S1, R(1)});
    P p = P::x() * (P::x() - P(1)) * (P::x() - P(zeta));
    return {P(m0sq) * sigma, p * p};
}

template <class R>
CurveParts<R> sw_y2_nf3_parts(const R& m0, const R& m2, const R& mtp, const R& L3,
                              const R& U) {
    using P = Polynomial<R>;
    P x = P::x();
    P xm1 = x - P(1);
    P den = x * x * x * x * xm1 * xm1;
    P num = P(L3 * L3 / R(4)) * xm1 * xm1 - P(mtp * L3) * x * xm1 -
            P(U + m2 * L3) * x * x * xm1 + P(m0 * m0) * x * x * x * xm1 +
            P(m2 * m2) * x * x * x;
    return {num, den};
}

template <class R>
CurveParts<R> sw_y2_nf2_first_parts(const R& mp, const R& mtp, const R& L2, const R& u) {
    using P = Polynomial<R>;
    P num({L2 * L2 / R(4), mtp * L2, u, mp * L2, L2 * L2 / R(4)});
    return {num, P::monomial(4)};
}

template <class R>
CurveParts<R> sw_y2_nf2_second_parts(const R& m0, const R& m2, const R& L2, const R& U) {
    using P = Polynomial<R>;
    P x = P::x();
    P xm1 = x - P(1);
    P den = x * x * x * xm1 * xm1;
    P num = P(-(L2 * L2)) * xm1 - P(U) * x * xm1 + P(m0 * m0) * x * x * xm1 +
            P(m2 * m2) * x * x;
    return {num, den};
}

template <class R>
CurveParts<R> sw_y2_nf1_parts(const R& mp, const R& L1, const R& u) {
    using P = Polynomial<R>;
    P num({L1 * L1, u, mp * L1, L1 * L1 / R(4)});
    return {num, P::monomial(3)};
}

template <class R>
CurveParts<R> sw_y2_nf0_parts(const R& L, const R& u) {
    using P = Polynomial<R>;
    P num({L * L, u, L * L});
    return {num, P::monomial(3)};
}

template <class R>
RationalFunction<R> sw_y2_nf4(const R& m0, const R& m1, const R& m2, const R& m3,
                              const R& zeta, const R& U) {
    auto [n, d] = sw_y2_nf4_parts(m0, m1, m2, m3, zeta, U);
    return RationalFunction<R>(n, d);
}

template <class R>
RationalFunction<R> sw_y2_nf3(const R& m0, const R& m2, const R& mtp, const R& L3,
                              const R& U) {
    auto [n, d] = sw_y2_nf3_parts(m0, m2, mtp, L3, U);
    return RationalFunction<R>(n, d);
}

template <class R>
RationalFunction<R> sw_y2_nf2_first(const R& mp, const R& mtp, const R& L2, const R& u) {
    auto [n, d] = sw_y2_nf2_first_parts(mp, mtp, L2, u);
    return RationalFunction<R>(n, d);
}

template <class R>
RationalFunction<R> sw_y2_nf2_second(const R& m0, const R& m2, const R& L2, const R& U) {
    auto [n, d] = sw_y2_nf2_second_parts(m0, m2, L2, U);
    return RationalFunction<R>(n, d);
}

template <class R>
RationalFunction<R> sw_y2_nf1(const R& mp, const R& L1, const R& u) {
    auto [n, d] = sw_y2_nf1_parts(mp, L1, u);
    return RationalFunction<R>(n, d);
}

template <class R>
RationalFunction<R> sw_y2_nf0(const R& L, const R& u) {
    auto [n, d] = sw_y2_nf0_parts(L, u);
    return RationalFunction<R>(n, d);
}

// Apply x -> x_scale * x and y^2 -> y2_scale * y^2 to a curve over a series
// ring, then extract the t -> 0 finite part.  DivergentLimit when a
// coefficient keeps a negative power of t.
template <class B>
RationalFunction<B> decouple_finite_part(const CurveParts<Series<B>>& y2,
                                         const Series<B>& x_scale,
                                         const Series<B>& y2_scale) {
    using S = Series<B>;
    using PS = Polynomial<S>;
    PS sub(std::vector<S>{S(0), x_scale});
    PS num = y2.first.compose(sub) * PS(y2_scale);
    PS den = y2.second.compose(sub);
    int vden = Series<B>::EXACT;
    for (const S& c : den.coeffs())
        if (!c.is_zero()) vden = std::min(vden, c.valuation());
    if (vden == Series<B>::EXACT)
        throw calc_error("DivergentLimit", "denominator vanishes identically");
    auto shift_poly = [&](const PS& P) {
        std::vector<S> c;
        for (const S& x : P.coeffs()) c.push_back(x.shift(-vden));
        return PS(std::move(c));
    };
    num = shift_poly(num);
    den = shift_poly(den);
    std::vector<B> nc, dc;
    for (const S& c : num.coeffs()) {
        if (!c.is_zero() && c.valuation() < 0)
            throw calc_error("DivergentLimit",
                             "coefficient diverges as t^" + std::to_string(c.valuation()));
        nc.push_back(c.at_or_zero(0));
    }
    for (const S& c : den.coeffs()) {
        if (!c.is_zero() && c.valuation() < 0)
            throw calc_error("DivergentLimit",
                             "coefficient diverges as t^" + std::to_string(c.valuation()));
        dc.push_back(c.at_or_zero(0));
    }
    Polynomial<B> n0(std::move(nc)), d0(std::move(dc));
    if (d0.is_zero())
        throw calc_error("DivergentLimit", "denominator vanishes in the limit");
    return RationalFunction<B>(n0, d0);
}

// Trivial rule applied directly to a curve: returns it unchanged.  The five
// mass-decoupling rules need parameter values and go through decouple_su2.
template <class B>
RationalFunction<B> decouple(const RationalFunction<B>& y2, DecoupleRule rule) {
    if (rule != DecoupleRule::identity)
        throw calc_error("RuleMismatch",
                         "parameterized decoupling rules go through decouple_su2");
    return y2;
}

template <class B>
struct DecoupleResult {
    RationalFunction<B> limit;   // finite part of the substituted source curve
    RationalFunction<B> target;  // the named target curve
    bool matches = false;
};

// Perform one decoupling step on y^2.  `params` carries the retained
// parameters of the rule:
//   nf4_to_nf3:       m0, m2, mtp, L3, U
//   nf3_to_nf2_first: mp, mtp, L2, U   (target modulus u = U + L2^2/2)
//   nf3_to_nf2_second: m0, m2, L2, U
//   nf2_first_to_nf1: mp, L1, u
//   nf1_to_nf0:       L, u
template <class B>
DecoupleResult<B> decouple_su2(DecoupleRule rule, const std::map<std::string, B>& params) {
    using S = Series<B>;
    auto get = [&](const char* name) -> B {
        auto it = params.find(name);
        if (it == params.end())
            throw calc_error("RuleMismatch", std::string("missing parameter ") + name);
        return it->second;
    };
    auto cst = [&](const B& v) { return S(0, {v}, S::EXACT, "t"); };
    S t = S::monomial(1);
    S tinv = S::monomial(-1);
    S one = S(1);
    DecoupleResult<B> out;
    switch (rule) {
        case DecoupleRule::identity:
            throw calc_error("RuleMismatch", "identity rule acts on a curve, not parameters");
        case DecoupleRule::nf4_to_nf3: {
            B m0 = get("m0"), m2 = get("m2"), mtp = get("mtp"), L3 = get("L3"), U = get("U");
            S half_mtp = cst(mtp / B(2));
            S m3 = half_mtp + cst(L3 / B(2)) * tinv;
            S m1 = half_mtp - cst(L3 / B(2)) * tinv;
            auto y2 = sw_y2_nf4_parts<S>(cst(m0), m1, cst(m2), m3, t, cst(U));
            out.limit = decouple_finite_part(y2, one, one);
            out.target = sw_y2_nf3(m0, m2, mtp, L3, U);
            break;
        }
        case DecoupleRule::nf3_to_nf2_first: {
            B mp = get("mp"), mtp = get("mtp"), L2 = get("L2"), U = get("U");
            S m2 = cst(mp / B(2)) + cst(L2 / B(2)) * tinv;
            S m0 = cst(mp / B(2)) - cst(L2 / B(2)) * tinv;
            S L3 = cst(L2) * t;
            auto y2 = sw_y2_nf3_parts<S>(m0, m2, cst(mtp), L3, cst(U));
            out.limit = decouple_finite_part(y2, t, t * t);
            out.target = sw_y2_nf2_first(mp, mtp, L2, U + L2 * L2 / B(2));
            break;
        }
        case DecoupleRule::nf3_to_nf2_second: {
            B m0 = get("m0"), m2 = get("m2"), L2 = get("L2"), U = get("U");
            S mtp = cst(L2) * tinv;
            S L3 = cst(L2) * t;
            auto y2 = sw_y2_nf3_parts<S>(cst(m0), cst(m2), mtp, L3, cst(U));
            out.limit = decouple_finite_part(y2, one, one);
            out.target = sw_y2_nf2_second(m0, m2, L2, U);
            break;
        }
        case DecoupleRule::nf2_first_to_nf1: {
            B mp = get("mp"), L1 = get("L1"), u = get("u");
            S mtp = cst(L1) * tinv * tinv;
            S L2 = cst(L1) * t;
            auto y2 = sw_y2_nf2_first_parts<S>(cst(mp), mtp, L2, cst(u));
            out.limit = decouple_finite_part(y2, tinv, tinv * tinv);
            out.target = sw_y2_nf1(mp, L1, u);
            break;
        }
        case DecoupleRule::nf1_to_nf0: {
            B L = get("L"), u = get("u");
            S mp = cst(L) * tinv * tinv * tinv;
            S L1 = cst(L) * t;
            auto y2 = sw_y2_nf1_parts<S>(mp, L1, cst(u));
            out.limit = decouple_finite_part(y2, t * t, t * t * t * t);
            out.target = sw_y2_nf0(L, u);
            break;
        }
    }
    out.matches = (out.limit == out.target);
    return out;
}

} // namespace looprec
