#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "curve.hpp"

namespace looprec {

// ============================================================================
// Topological recursion on genus-0 spectral curves.
//
// Everything lives in the z-coordinate of the rational parametrization: stable
// n-differentials are finite sums of pure pole-basis tensors
//     c * prod_i (z_i - xi_{j_i})^{-m_i}  (times dz_1...dz_n),
// with poles only at the branch-point preimages xi_j (odd parity: z=0; even
// parity: z=+1,-1).  The recursion residues are taken by exact Laurent
// expansion at each preimage; the product closes on this representation
// because the only factors coupling the residue variable to spectators are
// the kernel numerator and double poles of the fundamental bidifferential,
// whose expansion coefficients are again pole-basis elements.
// ============================================================================

namespace trdetail {
inline constexpr int kOrd = 48;  // local Laurent order at branch preimages
}

template <class R>
R ring_pow(R base, int e) {
    if (e < 0) {
        base = R(1) / base;
        e = -e;
    }
    R out(1);
    while (e > 0) {
        if (e & 1) out = out * base;
        base = base * base;
        e >>= 1;
    }
    return out;
}

template <class R>
Polynomial<R> poly_pow(const Polynomial<R>& p, int e) {
    Polynomial<R> out(1);
    for (int i = 0; i < e; ++i) out = out * p;
    return out;
}

inline long binomial_long(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// ----------------------------------------------------------------------------
// Multi-differentials
// ----------------------------------------------------------------------------

template <class R>
struct MultiDifferential {
    enum class Kind { disk, bidifferential, tensor };

    int g = 0, n = 1;
    Kind kind = Kind::tensor;
    std::vector<R> xi;  // branch preimages in z
    // (0,1): omega = disk_w(z) dz
    RationalFunction<R> disk_w;
    // stable: key[v] = (pole index, order m) for variable v
    std::map<std::vector<std::pair<int, int>>, R> terms;

    // Value of W = omega/(dz_1...dz_n) at a point, `lift` embeds R into T.
    template <class T, class F>
    T eval(const std::vector<T>& z, F&& lift) const {
        if ((int)z.size() != n)
            throw calc_error("InvalidSpec", "evaluation point arity mismatch");
        if (kind == Kind::disk) return eval_rf(disk_w, z[0], lift);
        if (kind == Kind::bidifferential) {
            T d = z[0] - z[1];
            return T(1) / (d * d);
        }
        T acc(0);
        for (const auto& [key, c] : terms) {
            T term = lift(c);
            for (int v = 0; v < n; ++v) {
                T d = z[v] - lift(xi[key[v].first]);
                T dp(1);
                for (int i = 0; i < key[v].second; ++i) dp = dp * d;
                term = term / dp;
            }
            acc = acc + term;
        }
        return acc;
    }
    R eval_r(const std::vector<R>& z) const {
        return eval(z, [](const R& c) { return c; });
    }

    template <class T, class F>
    static T eval_rf(const RationalFunction<R>& f, const T& x, F&& lift) {
        auto ep = [&](const Polynomial<R>& p) {
            T acc(0);
            for (int k = p.degree(); k >= 0; --k) acc = acc * x + lift(p.at(k));
            return acc;
        };
        return ep(f.num()) / ep(f.den());
    }
};

// ----------------------------------------------------------------------------
// Recursion context: parametrization data plus per-preimage Laurent caches
// ----------------------------------------------------------------------------

template <class R>
struct TRContext {
    SpectralCurve<R> curve;
    RationalParametrization<R> par;
    std::vector<R> xi;
    RationalFunction<R> xprime;      // x'(z)
    RationalFunction<R> Y;           // omega_1^(0) = Y(z) dz
    RationalFunction<R> invol;       // zbar(z)
    RationalFunction<R> invol_prime; // zbar'(z)
    RationalFunction<R> D;           // Y(z) - Y(zbar(z)) zbar'(z)

    // pole-basis rows (pole index, order, coefficient) per expansion order k
    using Rows = std::vector<std::tuple<int, int, R>>;
    struct Local {
        Series<R> u0;   // zbar'(z)/D(z) at the preimage
        Series<R> p02;  // 1/(z - zbar(z))^2 at the preimage
        std::map<std::tuple<int, int, bool>, Series<R>> basis;  // (j,m,bar)
        // local series of zbar(xi + w) - xi (the involution fixes each branch
        // preimage) and its powers, for the coupled-factor expansions
        std::vector<Series<R>> beta_pow;
        std::vector<Rows> ker, bdir, bbar;  // built on demand, index k
    };
    std::vector<std::optional<Local>> locals;

    std::map<std::pair<int, int>, MultiDifferential<R>> cache;
};

template <class R>
TRContext<R> make_context(const SpectralCurve<R>& curve) {
    TRContext<R> ctx;
    ctx.curve = curve;
    ctx.par = parametrize(curve);
    if (ctx.par.branch_count == 1)
        ctx.xi = {R(0)};
    else
        ctx.xi = {R(1), R(-1)};
    ctx.xprime = ctx.par.x_of_z.derivative();
    ctx.Y = ctx.par.y_of_z * ctx.xprime;
    ctx.invol = ctx.par.zbar_of_z;
    ctx.invol_prime = ctx.invol.derivative();
    ctx.D = ctx.Y - ctx.Y.compose(ctx.invol) * ctx.invol_prime;
    ctx.locals.resize(ctx.xi.size());
    return ctx;
}

namespace trdetail {

// partial fraction a proper rational function into sum_j,m c/(x-xi_j)^m
template <class R>
std::vector<std::tuple<int, int, R>> to_pole_rows(const RationalFunction<R>& f,
                                                  const std::vector<R>& xi) {
    std::vector<std::tuple<int, int, R>> rows;
    if (f.is_zero()) return rows;
    RationalFunction<R> rebuilt;
    for (int j = 0; j < (int)xi.size(); ++j) {
        Series<R> s = f.laurent_at(xi[j], 0);
        if (s.is_zero()) continue;
        for (int k = s.low(); k < 0; ++k) {
            R c = s.at_or_zero(k);
            if (c.is_zero()) continue;
            rows.emplace_back(j, -k, c);
            Polynomial<R> den = poly_pow(Polynomial<R>::x() - Polynomial<R>(xi[j]), -k);
            rebuilt = rebuilt + RationalFunction<R>(Polynomial<R>(c), den);
        }
    }
    if (!(f - rebuilt).is_zero())
        throw calc_error("InternalError",
                         "coupled factor is not a pure principal part at the preimages");
    return rows;
}

template <class R>
typename TRContext<R>::Local& ensure_local(TRContext<R>& ctx, int kx) {
    if (ctx.locals[kx]) return *ctx.locals[kx];
    if (ctx.D.is_zero())
        throw calc_error("DegenerateKernel",
                         "omega_1^(0)(z) - omega_1^(0)(zbar) vanishes identically");
    typename TRContext<R>::Local L;
    const R& x0 = ctx.xi[kx];
    L.u0 = (ctx.invol_prime / ctx.D).laurent_at(x0, kOrd);
    RationalFunction<R> dz = RationalFunction<R>(Polynomial<R>::x()) - ctx.invol;
    L.p02 = (RationalFunction<R>(1) / (dz * dz)).laurent_at(x0, kOrd);
    // beta(w) = zbar(xi + w) - xi, valuation 1
    Series<R> beta = ctx.invol.laurent_at(x0, kOrd) - Series<R>(x0);
    if (beta.is_zero() || beta.valuation() < 1)
        throw calc_error("InternalError", "involution does not fix the branch preimage");
    L.beta_pow.push_back(Series<R>(1));
    for (int j = 1; j < kOrd; ++j)
        L.beta_pow.push_back((L.beta_pow.back() * beta).truncate(kOrd));
    ctx.locals[kx] = std::move(L);
    return *ctx.locals[kx];
}

template <class R>
const Series<R>& basis_series(TRContext<R>& ctx, int kx, std::pair<int, int> jm, bool bar) {
    auto& L = ensure_local(ctx, kx);
    auto key = std::make_tuple(jm.first, jm.second, bar);
    auto it = L.basis.find(key);
    if (it != L.basis.end()) return it->second;
    Polynomial<R> den = poly_pow(Polynomial<R>::x() - Polynomial<R>(ctx.xi[jm.first]),
                                 jm.second);
    RationalFunction<R> f(Polynomial<R>(R(1)), den);
    if (bar) f = f.compose(ctx.invol);
    return L.basis.emplace(key, f.laurent_at(ctx.xi[kx], kOrd)).first->second;
}

// w^k-coefficients of the factors coupling the residue variable z0 = xi + w to
// a spectator zv, as pole-basis rows in zv.  All poles sit at zv = xi itself:
//   type 0 (kernel numerator): (1/2)[1/(zv - z0) - 1/(zv - zbar0)]
//   type 1 (direct B):         1/(z0 - zv)^2
//   type 2 (reflected B):      1/(zbar0 - zv)^2
// expanded geometrically with beta(w) = zbar(xi + w) - xi.
template <class R>
const typename TRContext<R>::Rows& coupled_rows(TRContext<R>& ctx, int kx, int type, int k) {
    auto& L = ensure_local(ctx, kx);
    auto& tab = type == 0 ? L.ker : (type == 1 ? L.bdir : L.bbar);
    while ((int)tab.size() <= k) {
        int kk = (int)tab.size();
        if (kk >= kOrd - 4)
            throw calc_error("InternalError", "residue pole order exceeds the Laurent cache");
        typename TRContext<R>::Rows rows;
        const R half = R(1) / R(2);
        if (type == 0) {
            if (kk > 0) rows.emplace_back(kx, kk + 1, half);
            for (int j = 1; j <= kk; ++j) {
                R c = -half * L.beta_pow[j].at_or_zero(kk);
                if (!c.is_zero()) rows.emplace_back(kx, j + 1, c);
            }
        } else if (type == 1) {
            rows.emplace_back(kx, kk + 2, R(kk + 1));
        } else {
            for (int j = 0; j <= kk; ++j) {
                R c = R(j + 1) * L.beta_pow[j].at_or_zero(kk);
                if (!c.is_zero()) rows.emplace_back(kx, j + 2, c);
            }
        }
        // merge duplicate orders
        std::map<int, R> merged;
        for (const auto& [j, m, c] : rows) {
            auto [it, fresh] = merged.emplace(m, c);
            if (!fresh) it->second = it->second + c;
        }
        rows.clear();
        for (const auto& [m, c] : merged)
            if (!c.is_zero()) rows.emplace_back(kx, m, c);
        tab.push_back(std::move(rows));
    }
    return tab[k];
}

}  // namespace trdetail

// ----------------------------------------------------------------------------
// omega(g, n): the recursion engine with memoized cache
// ----------------------------------------------------------------------------

template <class R>
const MultiDifferential<R>& omega(TRContext<R>& ctx, int g, int n);

namespace trdetail {

template <class R>
MultiDifferential<R> compute_stable(TRContext<R>& ctx, int g, int n) {
    if (2 * g - 2 + n <= 0)
        throw calc_error("UnstableTarget",
                         "(0,1) and (0,2) are not computed through the stable path");
    using Key = std::vector<std::pair<int, int>>;
    std::map<Key, R> acc;
    const int nsp = n - 1;  // spectators occupy result slots 1..n-1

    struct Coupled {
        int type;    // 0 kernel, 1 direct bidifferential, 2 reflected bidifferential
        int target;  // result slot receiving the pole-basis element
    };
    // one structural term of the recursion integrand
    auto add = [&](const std::vector<std::pair<std::pair<int, int>, bool>>& plain, bool p02,
                   const std::vector<std::pair<int, std::pair<int, int>>>& fixed,
                   const std::vector<Coupled>& coupled, const R& weight) {
        for (int kx = 0; kx < (int)ctx.xi.size(); ++kx) {
            auto& L = ensure_local(ctx, kx);
            Series<R> u = L.u0;
            if (p02) u = u * L.p02;
            for (const auto& [jm, bar] : plain) u = u * basis_series(ctx, kx, jm, bar);
            u = u.truncate(0);
            if (u.is_zero()) continue;
            int val = u.valuation();
            if (val >= 0) continue;
            const int kmax = -1 - val;
            Key key(n, {0, 0});
            for (const auto& [slot, jm] : fixed) key[slot] = jm;
            std::function<void(size_t, int, const R&)> dfs = [&](size_t idx, int used,
                                                                 const R& coef) {
                if (idx == coupled.size()) {
                    R uc = u.at_or_zero(-1 - used);
                    if (uc.is_zero()) return;
                    R v = coef * uc;
                    auto [it, fresh] = acc.emplace(key, v);
                    if (!fresh) it->second = it->second + v;
                    return;
                }
                for (int k = 0; used + k <= kmax; ++k) {
                    for (const auto& [j, m, c] : coupled_rows(ctx, kx, coupled[idx].type, k)) {
                        key[coupled[idx].target] = {j, m};
                        dfs(idx + 1, used + k, coef * c);
                    }
                }
            };
            dfs(0, 0, weight);
        }
    };

    // (a) omega_{n+1}^{(g-1)}(z0, zbar0, spectators)
    if (g >= 1) {
        if (g == 1 && n == 1) {
            add({}, true, {}, {{0, 0}}, R(1));
        } else {
            const auto& up = omega(ctx, g - 1, n + 1);
            for (const auto& [key, c] : up.terms) {
                std::vector<std::pair<std::pair<int, int>, bool>> plain = {{key[0], false},
                                                                           {key[1], true}};
                std::vector<std::pair<int, std::pair<int, int>>> fixed;
                for (int i = 2; i <= n; ++i) fixed.push_back({i - 1, key[i]});
                add(plain, false, fixed, {{0, 0}}, c);
            }
        }
    }

    // (b) ordered products omega(z0, I1) omega(zbar0, I2), no (0,1) factors
    for (int mask = 0; mask < (1 << nsp); ++mask) {
        std::vector<int> S, C;
        for (int i = 0; i < nsp; ++i) (mask >> i & 1 ? S : C).push_back(i + 1);
        for (int g1 = 0; g1 <= g; ++g1) {
            int g2 = g - g1;
            int n1 = (int)S.size() + 1, n2 = (int)C.size() + 1;
            if ((g1 == 0 && n1 == 1) || (g2 == 0 && n2 == 1)) continue;
            bool b1 = (g1 == 0 && n1 == 2), b2 = (g2 == 0 && n2 == 2);
            // term lists for each factor: (plain z0-slot element, fixed spectators, weight)
            struct Part {
                std::optional<std::pair<int, int>> plain;
                std::vector<std::pair<int, std::pair<int, int>>> fixed;
                R w;
            };
            auto expand = [&](int gf, const std::vector<int>& slots, bool bfac) {
                std::vector<Part> parts;
                if (bfac) {
                    parts.push_back({std::nullopt, {}, R(1)});
                    return parts;
                }
                const auto& md = omega(ctx, gf, (int)slots.size() + 1);
                for (const auto& [key, c] : md.terms) {
                    Part p{key[0], {}, c};
                    for (size_t i = 0; i < slots.size(); ++i)
                        p.fixed.push_back({slots[i], key[i + 1]});
                    parts.push_back(std::move(p));
                }
                return parts;
            };
            auto parts1 = expand(g1, S, b1);
            auto parts2 = expand(g2, C, b2);
            for (const auto& p1 : parts1)
                for (const auto& p2 : parts2) {
                    std::vector<std::pair<std::pair<int, int>, bool>> plain;
                    if (p1.plain) plain.push_back({*p1.plain, false});
                    if (p2.plain) plain.push_back({*p2.plain, true});
                    std::vector<std::pair<int, std::pair<int, int>>> fixed = p1.fixed;
                    fixed.insert(fixed.end(), p2.fixed.begin(), p2.fixed.end());
                    std::vector<Coupled> coupled = {{0, 0}};
                    if (b1) coupled.push_back({1, S[0]});
                    if (b2) coupled.push_back({2, C[0]});
                    add(plain, false, fixed, coupled, p1.w * p2.w);
                }
        }
    }

    MultiDifferential<R> out;
    out.g = g;
    out.n = n;
    out.kind = MultiDifferential<R>::Kind::tensor;
    out.xi = ctx.xi;
    for (auto& [key, c] : acc)
        if (!c.is_zero()) out.terms.emplace(key, c);
    return out;
}

}  // namespace trdetail

template <class R>
const MultiDifferential<R>& omega(TRContext<R>& ctx, int g, int n) {
    if (g < 0 || n < 1 || 2 * g - 2 + n < 0)
        throw calc_error("InvalidSpec", "omega needs g >= 0, n >= 1, 2g-2+n >= 0");
    auto it = ctx.cache.find({g, n});
    if (it != ctx.cache.end()) return it->second;
    MultiDifferential<R> md;
    md.g = g;
    md.n = n;
    md.xi = ctx.xi;
    if (g == 0 && n == 1) {
        md.kind = MultiDifferential<R>::Kind::disk;
        md.disk_w = ctx.Y;
    } else if (g == 0 && n == 2) {
        md.kind = MultiDifferential<R>::Kind::bidifferential;
    } else {
        md = trdetail::compute_stable(ctx, g, n);
    }
    return ctx.cache.emplace(std::make_pair(g, n), std::move(md)).first->second;
}

// Pullback of a stable form under the involution in variable `var` (0-based),
// including the dzbar/dz Jacobian; equals -omega for recursion output.
template <class R>
MultiDifferential<R> involution_pullback(const TRContext<R>& ctx,
                                         const MultiDifferential<R>& md, int var) {
    if (md.kind != MultiDifferential<R>::Kind::tensor)
        throw calc_error("UnstableTarget", "involution pullback is defined on stable forms");
    MultiDifferential<R> out = md;
    out.terms.clear();
    for (const auto& [key, c] : md.terms) {
        int m = key[var].second;
        if (m < 2)
            throw calc_error("InternalError", "stable form with a simple pole");
        if (ctx.par.branch_count == 1) {
            // z -> -z, dzbar/dz = -1: (z)^-m -> (-1)^m z^-m
            R v = (m % 2 == 0) ? -c : c;
            auto [it, fresh] = out.terms.emplace(key, v);
            if (!fresh) it->second = it->second + v;
        } else {
            // z -> 1/z, dzbar/dz = -1/z^2:
            // (1/z - xi)^-m * (-1/z^2) = -(-xi)^m z^{m-2} (z - xi)^-m   (xi^2 = 1)
            const R& x0 = ctx.xi[key[var].first];
            R sign = (m % 2 == 0) ? R(-1) : x0;  // -(-xi)^m
            for (int i = 0; i <= m - 2; ++i) {
                // z^{m-2} = sum_i C(m-2,i) xi^{m-2-i} (z - xi)^i
                R coef = c * sign * R(binomial_long(m - 2, i)) * ring_pow(x0, m - 2 - i);
                if (coef.is_zero()) continue;
                auto k2 = key;
                k2[var].second = m - i;
                auto [it, fresh] = out.terms.emplace(k2, coef);
                if (!fresh) it->second = it->second + coef;
            }
        }
    }
    for (auto it = out.terms.begin(); it != out.terms.end();)
        it = it->second.is_zero() ? out.terms.erase(it) : std::next(it);
    return out;
}

// ----------------------------------------------------------------------------
// The recursion kernel as a bivariate rational function:
//   K(z0,z1) dz0/dz1 = (1/2)[1/(z1-z0) - 1/(z1-zbar0)] / (Y(z0) - Y(zbar0) zbar'(z0))
// Outer variable z1 over coefficients rational in z0.
// ----------------------------------------------------------------------------

template <class R>
RationalFunction<RationalFunction<R>> kernel(TRContext<R>& ctx) {
    if (ctx.D.is_zero())
        throw calc_error("DegenerateKernel",
                         "omega_1^(0)(z) - omega_1^(0)(zbar) vanishes identically");
    using F1 = RationalFunction<R>;
    using F2 = RationalFunction<F1>;
    F2 z1 = F2::x();
    F2 z0(Polynomial<F1>(F1::x()));
    F2 zb(Polynomial<F1>(ctx.invol));
    F2 pref(Polynomial<F1>(F1(1) / (F1(Polynomial<R>(R(2))) * ctx.D)));
    return pref * (F2(1) / (z1 - z0) - F2(1) / (z1 - zb));
}

// ----------------------------------------------------------------------------
// Expansion around the physical-sheet preimage of x = infinity (z -> infinity):
// rewrite a function of z as a sum of powers of x^{-1/2} (odd parity) or
// x^{-1} (even parity).
// ----------------------------------------------------------------------------

namespace trdetail {

// series for the expansion variable: odd x^{-1/2}, even x^{-1}, in v = 1/z
template <class R>
Series<R> infinity_variable(const TRContext<R>& ctx, int ord) {
    using S = Series<R>;
    if (ctx.par.branch_count == 1) {
        // x = z^2 + a: x^{-1/2} = v (1 + a v^2)^{-1/2}
        const R& a = ctx.curve.branch_points[0];
        S base = S(1) + S::monomial(2, a);
        auto rt = base.try_sqrt();
        if (!rt) throw calc_error("InternalError", "sqrt of unit series failed");
        return (S::monomial(1) * rt->inverse(ord + 2)).truncate(ord);
    }
    // x = mid - c (z + 1/z): 1/x = v / (mid v - c - c v^2)
    R a1 = ctx.curve.branch_points[0], a2 = ctx.curve.branch_points[1];
    R mid = (a1 + a2) / R(2), c = (a1 - a2) / R(4);
    S den = S(-c) + S::monomial(1, mid) + S::monomial(2, -c);
    return (S::monomial(1) * den.inverse(ord + 2)).truncate(ord);
}

}  // namespace trdetail

// Coefficients a_e with f(z) = sum_e a_e t^e around z = infinity, where t is
// x^{-1/2} (odd) or x^{-1} (even); negative e (growing parts) are included.
// `sheet` selects the preimage of x = infinity; only the physical one (z ->
// infinity, where y matches the disk solution) is supported.
template <class R>
std::map<int, R> x_expansion(const TRContext<R>& ctx, const RationalFunction<R>& f,
                             int emax, int sheet = +1) {
    if (sheet != +1)
        throw calc_error("SheetError",
                         "expansion is implemented on the physical sheet only");
    using S = Series<R>;
    std::map<int, R> out;
    if (f.is_zero()) return out;
    int ord = emax + 4;
    S T = trdetail::infinity_variable(ctx, ord);
    R t1 = T.at_or_zero(1);
    S G = f.at_infinity(ord);
    S Tinv = T.inverse(ord);
    // triangular extraction: T has valuation exactly 1
    auto tpow = [&](int p) {
        S out = S(1);
        const S& b = p >= 0 ? T : Tinv;
        for (int i = 0; i < std::abs(p); ++i) out = (out * b).truncate(ord);
        return out;
    };
    while (!G.truncate(emax + 1).is_zero()) {
        int p = G.truncate(emax + 1).valuation();
        R a = G.at_or_zero(p) / ring_pow(t1, p);
        out[p] = a;
        G = G - tpow(p) * S(a);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Amplitude tables: coefficients of prod_i x_i^{-l_i-1} (even parity) or
// prod_i x_i^{-l_i/2-1} (odd parity) of the connected amplitudes.
// ----------------------------------------------------------------------------

template <class R>
struct AmplitudeTable {
    Parity parity = Parity::even;
    bool disk_shifted = true;     // (0,1) entries exclude the Delta/p counterterm
    bool annulus_shifted = false; // odd parity: (0,2) entries include the universal shift
    std::map<std::pair<int, std::vector<int>>, R> entries;
};

// exponent bookkeeping: table index l <-> power e of the expansion variable
// (odd: e = l + 2 in half powers of x; even: e = l + 1 in powers of x)
template <class R>
int table_index_from_power(const TRContext<R>& ctx, int e) {
    return ctx.par.branch_count == 1 ? e - 2 : e - 1;
}

// per-variable expansion of a pole-basis element divided by x'(z)
template <class R>
std::map<int, R> basis_x_expansion(const TRContext<R>& ctx, std::pair<int, int> jm,
                                   int emax, int sheet = +1) {
    Polynomial<R> den = poly_pow(Polynomial<R>::x() - Polynomial<R>(ctx.xi[jm.first]),
                                 jm.second);
    RationalFunction<R> f = RationalFunction<R>(Polynomial<R>(R(1)), den) / ctx.xprime;
    return x_expansion(ctx, f, emax, sheet);
}

template <class R>
std::map<std::vector<int>, R> extract_coefficients(const TRContext<R>& ctx,
                                                   const MultiDifferential<R>& md,
                                                   int l_max, int sheet = +1) {
    if (md.kind != MultiDifferential<R>::Kind::tensor)
        throw calc_error("UnstableTarget",
                         "coefficient extraction from the z-tensor needs a stable form");
    const int emax = ctx.par.branch_count == 1 ? l_max + 2 : l_max + 1;
    std::map<std::pair<int, int>, std::map<int, R>> expn;
    for (const auto& [key, c] : md.terms)
        for (const auto& jm : key)
            if (!expn.count(jm)) expn[jm] = basis_x_expansion(ctx, jm, emax, sheet);
    std::map<std::vector<int>, R> out;
    for (const auto& [key, c] : md.terms) {
        std::vector<int> ls(md.n);
        std::function<void(int, const R&)> rec = [&](int v, const R& coef) {
            if (v == md.n) {
                auto [it, fresh] = out.emplace(ls, coef);
                if (!fresh) it->second = it->second + coef;
                return;
            }
            for (const auto& [e, a] : expn[key[v]]) {
                int l = table_index_from_power(ctx, e);
                if (l < 1 || l > l_max) continue;
                ls[v] = l;
                rec(v + 1, coef * a);
            }
        };
        rec(0, c);
    }
    for (auto it = out.begin(); it != out.end();)
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

// ----------------------------------------------------------------------------
// Annulus amplitude: iterated expansion of
//   F_2^(0)(xa, xb) = B/(dxa dxb) - 1/(xa-xb)^2
// in the regime xa >> xb (for odd parity this is the shifted amplitude, whose
// universal part is Omega_2).  Returns (ea, eb) -> coefficient in powers of
// the parity's expansion variable.
// ----------------------------------------------------------------------------

template <class R>
std::map<std::pair<int, int>, R> annulus_pair_expansion(const TRContext<R>& ctx, int emax) {
    using S1 = Series<R>;
    using SS = Series<S1>;  // outer: va = 1/za, coefficients Laurent in vb = 1/zb
    const int ord = emax + 6;
    int saved = S1::default_order;
    S1::default_order = 2 * ord + 8;
    SS za = SS::monomial(-1);
    SS zb = SS(S1::monomial(-1));
    auto xof = [&](const SS& z, const SS& zinv) -> SS {
        if (ctx.par.branch_count == 1)
            return z * z + SS(S1(ctx.curve.branch_points[0]));
        R a1 = ctx.curve.branch_points[0], a2 = ctx.curve.branch_points[1];
        R mid = (a1 + a2) / R(2), c = (a1 - a2) / R(4);
        return SS(S1(mid)) - SS(S1(c)) * (z + zinv);
    };
    auto xprime_of = [&](const SS& zinv2) -> SS {
        if (ctx.par.branch_count == 1) {
            // x' = 2z handled by caller via z
            throw calc_error("InternalError", "unused");
        }
        R a1 = ctx.curve.branch_points[0], a2 = ctx.curve.branch_points[1];
        R c = (a1 - a2) / R(4);
        return SS(S1(-c)) * (SS(1) - zinv2);
    };
    SS za_inv = SS::monomial(1);
    SS zb_inv = SS(S1::monomial(1));
    SS xa = xof(za, za_inv), xb = xof(zb, zb_inv);
    SS xpa, xpb;
    if (ctx.par.branch_count == 1) {
        xpa = SS(S1(2)) * za;
        xpb = SS(S1(2)) * zb;
    } else {
        xpa = xprime_of(za_inv * za_inv);
        xpb = xprime_of(zb_inv * zb_inv);
    }
    SS dz = za - zb;
    SS B = dz.inverse(ord);
    B = B * B;
    SS dx = xa - xb;
    SS Bx = dx.inverse(ord);
    Bx = Bx * Bx;
    SS G = B * xpa.inverse(ord) * xpb.inverse(ord) - Bx;

    // rebase the outer variable in powers of T(va), then each coefficient in T(vb)
    S1 T = trdetail::infinity_variable(ctx, ord);
    R t1 = T.at_or_zero(1);
    std::map<int, S1> outer;
    {
        SS Gt = G.truncate(emax + 1);
        SS Tl(0);  // T lifted to the nested ring
        for (int k = T.low(); k < std::min(T.order(), ord); ++k)
            Tl = Tl + SS::monomial(k, S1(T.at_or_zero(k)));
        auto tpow = [&](int p) {
            SS out = SS(1);
            for (int i = 0; i < p; ++i) out = (out * Tl).truncate(emax + 2);
            return out;
        };
        // iterate the exponent directly: after a subtraction the leading
        // coefficient can be zero only within its precision (an empty inner
        // series with a finite order tag), which would stall a valuation loop
        for (int p = Gt.low(); p < 1; ++p)
            if (!Gt.at_or_zero(p).negligible())
                throw calc_error("InternalError",
                                 "annulus expansion has a non-decaying leading term");
        for (int p = std::max(1, Gt.low()); p <= emax; ++p) {
            S1 cp = Gt.at_or_zero(p);
            if (cp.negligible()) continue;
            S1 a = cp * S1(R(1) / ring_pow(t1, p));
            outer[p] = a;
            Gt = (Gt - tpow(p) * SS(a)).truncate(emax + 1);
        }
    }
    std::map<std::pair<int, int>, R> out;
    S1 Tinv = T.inverse(2 * ord + 6);
    auto tpow1 = [&](int p) {
        S1 o = S1(1);
        const S1& b = p >= 0 ? T : Tinv;
        for (int i = 0; i < std::abs(p); ++i) o = (o * b).truncate(2 * ord + 6);
        return o;
    };
    for (auto& [ea, coef] : outer) {
        S1 Gb = coef.truncate(emax + 1);
        if (Gb.is_zero()) continue;
        for (int p = Gb.low(); p <= emax; ++p) {
            R a = Gb.at_or_zero(p);
            if (a.is_zero()) continue;
            a = a / ring_pow(t1, p);
            out[{ea, p}] = a;
            Gb = (Gb - tpow1(p) * S1(a)).truncate(emax + 1);
        }
    }
    S1::default_order = saved;
    return out;
}

// F_2^(0)(x, x) on the diagonal, as a function of z (exact rational limit).
template <class R>
RationalFunction<R> annulus_diagonal(const TRContext<R>& ctx) {
    using RZ = RationalFunction<R>;
    using SE = Series<RZ>;  // expansion in eps with z2 = z + eps
    const int N = 6;
    // Taylor pieces of x(z+eps) and x'(z+eps)
    std::vector<RZ> xd;  // x^{(k)}(z)/k!
    {
        RZ d = ctx.par.x_of_z;
        R fact(1);
        for (int k = 0; k <= N; ++k) {
            if (k > 0) fact = fact * R(k);
            xd.push_back(d * RZ(Polynomial<R>(R(1) / fact)));
            d = d.derivative();
        }
    }
    SE eps = SE::monomial(1);
    SE dxs(0);  // x(z+eps) - x(z) = sum_{k>=1} xd[k] eps^k
    for (int k = 1; k <= N; ++k) dxs = dxs + SE::monomial(k, xd[k]);
    SE xp2(0);  // x'(z+eps) = sum_{k>=1} k xd[k] eps^{k-1}
    for (int k = 1; k <= N; ++k) xp2 = xp2 + SE::monomial(k - 1, xd[k] * RZ(Polynomial<R>(R(k))));
    SE inv_e2 = (eps * eps).inverse(4);
    SE term1 = inv_e2 * (SE(xd[1]) * xp2).inverse(4);
    SE term2 = (dxs * dxs).inverse(4);
    SE diff = term1 - term2;
    RZ c0 = diff.at_or_zero(0);
    if (!diff.at_or_zero(-1).is_zero() || !diff.at_or_zero(-2).is_zero())
        throw calc_error("InternalError", "annulus diagonal limit did not cancel");
    return c0;
}

// ----------------------------------------------------------------------------
// Kernel differentials chi_k^(p)(x) = A(x) dx / sqrt(sigma(x)) and the
// expansion of stable forms over them with constant coefficients.
// ----------------------------------------------------------------------------

template <class R>
RationalFunction<R> kernel_differential(const TRContext<R>& ctx, int k, int p) {
    // returns A(x) with chi = A(x) dx / sqrt(sigma(x))
    if (p < 1) throw calc_error("InvalidSpec", "kernel differential needs p >= 1");
    if (k < 0 || k >= (int)ctx.curve.branch_points.size())
        throw calc_error("InvalidSpec", "branch index out of range");
    const R& alpha = ctx.curve.branch_points[k];
    RationalFunction<R> M(ctx.curve.q, ctx.curve.p);
    if (M.num().eval_r(alpha).is_zero())
        throw calc_error("ZeroMoment", "M vanishes at the branch point");
    using F1 = RationalFunction<R>;  // rational in x
    using F2 = RationalFunction<F1>; // rational in x0 over that
    // G(x0) = (1/M(x0)) * 1/(x - x0)
    Polynomial<F1> pl, ql;
    for (int i = 0; i <= ctx.curve.p.degree(); ++i)
        pl = pl + Polynomial<F1>::monomial(i, F1(ctx.curve.p.at(i)));
    for (int i = 0; i <= ctx.curve.q.degree(); ++i)
        ql = ql + Polynomial<F1>::monomial(i, F1(ctx.curve.q.at(i)));
    F2 invM(pl, ql);
    F2 x_minus_x0(Polynomial<F1>(F1::x()) - Polynomial<F1>::x());
    F2 G = invM / x_minus_x0;
    R fact(1);
    for (int j = 1; j < p; ++j) {
        G = G.derivative();
        fact = fact * R(j);
    }
    // evaluate at x0 = alpha
    auto ep = [&](const Polynomial<F1>& poly) {
        F1 acc(0);
        F1 a(alpha);
        for (int i = poly.degree(); i >= 0; --i) acc = acc * a + poly.at(i);
        return acc;
    };
    F1 A = ep(G.num()) / ep(G.den());
    return A * F1(R(1) / fact);
}

// z-space tensor rows of chi_k^(p): chi/dz = A(x(z)) x'(z) / sqrt(sigma)(z)
template <class R>
typename TRContext<R>::Rows kernel_differential_rows(TRContext<R>& ctx, int k, int p) {
    RationalFunction<R> A = kernel_differential(ctx, k, p);
    RationalFunction<R> f =
        A.compose(ctx.par.x_of_z) * ctx.xprime / ctx.par.sqrt_sigma_of_z;
    return trdetail::to_pole_rows(f, ctx.xi);
}

// Solve omega = sum_k sum_{p_1..p_n} C_{k;p} prod_i chi_k^{(p_i)}(x_i) exactly.
// Returns the coefficient list ((k, p-tuple), C); throws if inconsistent.
template <class R>
std::vector<std::pair<std::pair<int, std::vector<int>>, R>> kernel_expand(
    TRContext<R>& ctx, const MultiDifferential<R>& md) {
    if (md.kind != MultiDifferential<R>::Kind::tensor)
        throw calc_error("UnstableTarget", "kernel expansion applies to stable forms");
    // per-variable maximum pole order determines the needed p range: the
    // z-rows of chi^(p) reach order 2p (+1) at the preimages
    int mmax = 2;
    for (const auto& [key, c] : md.terms)
        for (const auto& jm : key) mmax = std::max(mmax, jm.second);
    int pmax = (mmax + 1) / 2 + 1;
    const int K = (int)ctx.curve.branch_points.size();
    // basis tensors: for (k, p-tuple), rows per variable
    std::vector<std::pair<int, std::vector<int>>> labels;
    std::vector<std::vector<typename TRContext<R>::Rows>> basis;
    std::map<std::pair<int, int>, typename TRContext<R>::Rows> chi_rows;
    for (int k = 0; k < K; ++k)
        for (int p = 1; p <= pmax; ++p) chi_rows[{k, p}] = kernel_differential_rows(ctx, k, p);
    std::vector<int> ptuple(md.n, 1);
    std::function<void(int, int)> enumerate = [&](int k, int v) {
        if (v == md.n) {
            labels.push_back({k, ptuple});
            std::vector<typename TRContext<R>::Rows> rows;
            for (int i = 0; i < md.n; ++i) rows.push_back(chi_rows[{k, ptuple[i]}]);
            basis.push_back(std::move(rows));
            return;
        }
        for (int p = 1; p <= pmax; ++p) {
            ptuple[v] = p;
            enumerate(k, v + 1);
        }
    };
    for (int k = 0; k < K; ++k) enumerate(k, 0);
    // expand each basis tensor into pole-key coordinates
    std::map<std::vector<std::pair<int, int>>, std::vector<R>> cols;
    auto note = [&](const std::vector<std::pair<int, int>>& key, size_t col, const R& v) {
        auto it = cols.find(key);
        if (it == cols.end()) it = cols.emplace(key, std::vector<R>(labels.size(), R(0))).first;
        it->second[col] = it->second[col] + v;
    };
    for (size_t b = 0; b < basis.size(); ++b) {
        std::vector<std::pair<int, int>> key(md.n);
        std::function<void(int, const R&)> rec = [&](int v, const R& coef) {
            if (v == md.n) {
                note(key, b, coef);
                return;
            }
            for (const auto& [j, m, c] : basis[b][v]) {
                key[v] = {j, m};
                rec(v + 1, coef * c);
            }
        };
        rec(0, R(1));
    }
    for (const auto& [key, c] : md.terms)
        if (!cols.count(key)) cols.emplace(key, std::vector<R>(labels.size(), R(0)));
    // rectangular exact solve: rows = pole keys, columns = basis labels
    std::vector<std::vector<R>> Amat;
    std::vector<R> rhs;
    for (const auto& [key, col] : cols) {
        Amat.push_back(col);
        auto it = md.terms.find(key);
        rhs.push_back(it == md.terms.end() ? R(0) : it->second);
    }
    const size_t nc = labels.size();
    std::vector<int> pivot_of_col(nc, -1);
    size_t row = 0;
    for (size_t c = 0; c < nc && row < Amat.size(); ++c) {
        size_t pr = row;
        while (pr < Amat.size() && Amat[pr][c].is_zero()) ++pr;
        if (pr == Amat.size()) continue;
        std::swap(Amat[pr], Amat[row]);
        std::swap(rhs[pr], rhs[row]);
        R inv = R(1) / Amat[row][c];
        for (size_t cc = 0; cc < nc; ++cc) Amat[row][cc] = Amat[row][cc] * inv;
        rhs[row] = rhs[row] * inv;
        for (size_t rr = 0; rr < Amat.size(); ++rr) {
            if (rr == row || Amat[rr][c].is_zero()) continue;
            R f = Amat[rr][c];
            for (size_t cc = 0; cc < nc; ++cc)
                Amat[rr][cc] = Amat[rr][cc] - f * Amat[row][cc];
            rhs[rr] = rhs[rr] - f * rhs[row];
        }
        pivot_of_col[c] = (int)row;
        ++row;
    }
    for (size_t rr = row; rr < Amat.size(); ++rr)
        if (!rhs[rr].is_zero())
            throw calc_error("InternalError",
                             "form is not in the span of the kernel differentials");
    std::vector<std::pair<std::pair<int, std::vector<int>>, R>> out;
    for (size_t c = 0; c < nc; ++c) {
        R v = pivot_of_col[c] >= 0 ? rhs[pivot_of_col[c]] : R(0);
        if (!v.is_zero()) out.push_back({labels[c], v});
    }
    return out;
}

// Rebuild the tensor from kernel-differential coefficients (round-trip check).
template <class R>
MultiDifferential<R> kernel_reassemble(
    TRContext<R>& ctx, int g, int n,
    const std::vector<std::pair<std::pair<int, std::vector<int>>, R>>& coeffs) {
    MultiDifferential<R> out;
    out.g = g;
    out.n = n;
    out.kind = MultiDifferential<R>::Kind::tensor;
    out.xi = ctx.xi;
    for (const auto& [label, C] : coeffs) {
        std::vector<typename TRContext<R>::Rows> rows;
        for (int v = 0; v < n; ++v)
            rows.push_back(kernel_differential_rows(ctx, label.first, label.second[v]));
        std::vector<std::pair<int, int>> key(n);
        std::function<void(int, const R&)> rec = [&](int v, const R& coef) {
            if (v == n) {
                auto [it, fresh] = out.terms.emplace(key, coef);
                if (!fresh) it->second = it->second + coef;
                return;
            }
            for (const auto& [j, m, c] : rows[v]) {
                key[v] = {j, m};
                rec(v + 1, coef * c);
            }
        };
        rec(0, C);
    }
    for (auto it = out.terms.begin(); it != out.terms.end();)
        it = it->second.is_zero() ? out.terms.erase(it) : std::next(it);
    return out;
}

// ----------------------------------------------------------------------------
// Wick oracle: perfect matchings of a 2l-gon boundary by glued-surface genus.
// ----------------------------------------------------------------------------

inline std::map<int, long> wick_matchings_by_genus(int two_l) {
    if (two_l <= 0 || two_l % 2 != 0)
        throw calc_error("InvalidSpec", "need a positive even number of half edges");
    if (two_l > 12)
        throw calc_error("TooLarge", "matching enumeration is capped at 12 half edges");
    std::map<int, long> out;
    std::vector<int> match(two_l, -1);
    std::function<void()> rec = [&]() {
        int a = -1;
        for (int i = 0; i < two_l; ++i)
            if (match[i] < 0) {
                a = i;
                break;
            }
        if (a < 0) {
            // genus from V - E + F = 2 - 2g with E = l, F = 1; V counts the
            // cycles of (matching composed with boundary rotation)
            std::vector<bool> seen(two_l, false);
            int V = 0;
            for (int i = 0; i < two_l; ++i) {
                if (seen[i]) continue;
                ++V;
                int j = i;
                do {
                    seen[j] = true;
                    j = (match[j] + 1) % two_l;
                } while (j != i);
            }
            int chi = V - two_l / 2 + 1;
            int g2 = 2 - chi;
            if (g2 % 2 != 0) throw calc_error("InternalError", "odd Euler defect");
            ++out[g2 / 2];
            return;
        }
        for (int b = a + 1; b < two_l; ++b) {
            if (match[b] >= 0) continue;
            match[a] = b;
            match[b] = a;
            rec();
            match[a] = -1;
            match[b] = -1;
        }
    };
    rec();
    return out;
}

inline long wick_oracle(int two_l, int genus) {
    auto m = wick_matchings_by_genus(two_l);
    auto it = m.find(genus);
    return it == m.end() ? 0 : it->second;
}

// ----------------------------------------------------------------------------
// Numeric residue oracle: contour quadrature of the recursion integrand
// around each branch preimage, compared against the exact engine.
// ----------------------------------------------------------------------------

template <class R>
MultiDifferential<BigFloat> to_bigfloat_md(const MultiDifferential<R>& md) {
    MultiDifferential<BigFloat> out;
    out.g = md.g;
    out.n = md.n;
    out.kind = static_cast<typename MultiDifferential<BigFloat>::Kind>(md.kind);
    for (const auto& x : md.xi) out.xi.push_back(to_bigfloat(x));
    auto conv_poly = [](const Polynomial<R>& p) {
        std::vector<BigFloat> c;
        for (int k = 0; k <= p.degree(); ++k) c.push_back(to_bigfloat(p.at(k)));
        return Polynomial<BigFloat>(std::move(c));
    };
    if (md.kind == MultiDifferential<R>::Kind::disk)
        out.disk_w = RationalFunction<BigFloat>(conv_poly(md.disk_w.num()),
                                                conv_poly(md.disk_w.den()));
    for (const auto& [key, c] : md.terms) out.terms.emplace(key, to_bigfloat(c));
    return out;
}

template <class R>
RationalFunction<BigFloat> to_bigfloat_rf(const RationalFunction<R>& f) {
    auto conv_poly = [](const Polynomial<R>& p) {
        std::vector<BigFloat> c;
        for (int k = 0; k <= p.degree(); ++k) c.push_back(to_bigfloat(p.at(k)));
        return Polynomial<BigFloat>(std::move(c));
    };
    return RationalFunction<BigFloat>(conv_poly(f.num()), conv_poly(f.den()));
}

// One evaluation of the recursion residue sum for (g,n) at real sample points,
// by trapezoidal contours |z0 - xi| = radius with `nodes` nodes, Richardson
// extrapolated over node doubling.  Lower omegas are taken from the exact
// cache and evaluated in floating point.
template <class R>
BigFloat numeric_residue_oracle(TRContext<R>& ctx, int g, int n,
                                const std::vector<BigFloat>& sample,
                                const BigFloat& radius = BigFloat(1) / BigFloat(100),
                                int nodes = 1 << 10) {
    using C = Complex<BigFloat>;
    if ((int)sample.size() != n)
        throw calc_error("InvalidSpec", "sample point arity mismatch");
    // exact lower data, converted once
    std::map<std::pair<int, int>, MultiDifferential<BigFloat>> lower;
    auto get_lower = [&](int gg, int nn) -> const MultiDifferential<BigFloat>& {
        auto key = std::make_pair(gg, nn);
        auto it = lower.find(key);
        if (it == lower.end()) it = lower.emplace(key, to_bigfloat_md(omega(ctx, gg, nn))).first;
        return it->second;
    };
    // make sure all inputs exist on the exact side
    if (g >= 1) omega(ctx, g - 1, n + 1);
    RationalFunction<BigFloat> Y = to_bigfloat_rf(ctx.Y);
    RationalFunction<BigFloat> invol = to_bigfloat_rf(ctx.invol);
    RationalFunction<BigFloat> invol_prime = to_bigfloat_rf(ctx.invol_prime);
    auto lift = [](const BigFloat& c) { return C(c); };
    auto rf_at = [&](const RationalFunction<BigFloat>& f, const C& z) {
        return MultiDifferential<BigFloat>::eval_rf(f, z, lift);
    };
    std::vector<BigFloat> xib;
    for (const auto& x : ctx.xi) xib.push_back(to_bigfloat(x));
    for (const auto& s : sample)
        for (const auto& x : xib)
            if (!(radius < (s - x).abs()))
                throw calc_error("ContourTooClose", "sample point inside a contour");

    const int nsp = n - 1;
    auto integrand = [&](const C& z0) -> C {
        C zb = rf_at(invol, z0);
        C ip = rf_at(invol_prime, z0);
        C A(0);
        // upper term
        if (g >= 1) {
            const auto& up = get_lower(g - 1, n + 1);
            std::vector<C> pts;
            pts.push_back(z0);
            pts.push_back(zb);
            for (int i = 1; i < n; ++i) pts.push_back(C(sample[i]));
            A = A + up.eval(pts, lift);
        }
        // products
        for (int mask = 0; mask < (1 << nsp); ++mask) {
            std::vector<int> S, Cc;
            for (int i = 0; i < nsp; ++i) (mask >> i & 1 ? S : Cc).push_back(i + 1);
            for (int g1 = 0; g1 <= g; ++g1) {
                int g2 = g - g1;
                int n1 = (int)S.size() + 1, n2 = (int)Cc.size() + 1;
                if ((g1 == 0 && n1 == 1) || (g2 == 0 && n2 == 1)) continue;
                std::vector<C> p1, p2;
                p1.push_back(z0);
                for (int i : S) p1.push_back(C(sample[i]));
                p2.push_back(zb);
                for (int i : Cc) p2.push_back(C(sample[i]));
                A = A + get_lower(g1, n1).eval(p1, lift) * get_lower(g2, n2).eval(p2, lift);
            }
        }
        A = A * ip;
        // kernel factor (without dz1/dz0): (1/2)[1/(s1-z0) - 1/(s1-zb)] / D(z0)
        C s1(sample[0]);
        C D = rf_at(Y, z0) - rf_at(Y, zb) * ip;
        C K = (C(1) / (s1 - z0) - C(1) / (s1 - zb)) / (D * (C(2)));
        return K * A;
    };

    auto contour_sum = [&](int N) {
        using Raw = BigFloat::Raw;
        Raw two_pi = 8 * atan(Raw(1));
        C total(0);
        for (const auto& x : xib) {
            C acc(0);
            for (int k = 0; k < N; ++k) {
                Raw th = two_pi * k / N;
                C e(BigFloat(Raw(cos(th))), BigFloat(Raw(sin(th))));
                C z0 = C(x) + C(radius) * e;
                // (1/2pi i) * integrand * dz0, dz0 = i r e^{i th} dth
                acc = acc + integrand(z0) * e;
            }
            total = total + acc * C(radius / BigFloat(N));
        }
        return total;
    };
    C i1 = contour_sum(nodes / 2);
    C i2 = contour_sum(nodes);
    C rich = i2 + (i2 - i1);  // spectral accuracy: correction is a safety net
    return rich.re;  // stable forms evaluated at real points are real
}

}  // namespace looprec
