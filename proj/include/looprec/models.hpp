#pragma once

#include <vector>

#include "fock.hpp"

namespace looprec {

// Parameter choices tying named models to Hamiltonian specs. Scalars are
// templated so the same preset can be instantiated over rationals, algebraic
// extensions, or series rings (for symbolic parameters).

// Basic-type discrete DT model: deg_min = deg_max = 3, s = 1;
// kappa_1 = kappa_3 = kappa, kappa_2 = 0, tau = (0, kappa, -1/2, kappa/2), p_3 = kappa.
template <class R>
HamiltonianSpec<R> spec_basic_dt(const R& kappa) {
    HamiltonianSpec<R> s;
    s.parity = Parity::even;
    s.deg_min = 3;
    s.deg_max = 3;
    s.s = 1;
    s.kappa = {kappa, R(0), kappa};
    s.tau = {R(0), kappa, R(-1) / R(2), kappa / R(2)};
    s.p = {{3, kappa}};
    return s;
}

// (2,2m-1) minimal discrete DT model: deg_min = deg_max = 0, s = m-1;
// tau_0 = 1, tau_1 = 0, tau_2 = -1, p_0 = 1, with free couplings tau_3..tau_{m+1}.
// m = 1 is the Gaussian model.
template <class R>
HamiltonianSpec<R> spec_mddt(int m, const std::vector<R>& tau_high = {}) {
    if (m < 1) throw calc_error("InvalidSpec", "minimal model index m must be >= 1");
    if ((int)tau_high.size() != std::max(0, m - 1))
        throw calc_error("InvalidSpec", "expected free couplings tau_3..tau_{m+1}");
    HamiltonianSpec<R> s;
    s.parity = Parity::even;
    s.deg_min = 0;
    s.deg_max = 0;
    s.s = m - 1;
    s.tau = {R(1), R(0), R(-1)};
    for (const R& t : tau_high) s.tau.push_back(t);
    s.p = {{0, R(1)}};
    return s;
}

// Penner model: deg_min = 0, deg_max = 1, s = 0;
// tau = (-2 mu, 2 mu, 1), p_0 = 1, p_1 = -1, with mu the 't Hooft parameter.
template <class R>
HamiltonianSpec<R> spec_penner(const R& mu) {
    HamiltonianSpec<R> s;
    s.parity = Parity::even;
    s.deg_min = 0;
    s.deg_max = 1;
    s.s = 0;
    s.tau = {R(-2) * mu, R(2) * mu, R(1)};
    s.p = {{0, R(1)}, {1, R(-1)}};
    return s;
}

// SU(2) gauge theory with four flavors: deg_min = 1, deg_max = 3, s = 1;
// masses m0..m3 and UV coupling zeta enter through
// kappa_1 = (m0+m1+m2+m3)(m0-m1+m2+m3) zeta, tau_0 = 0, tau_1 = (m0+m2+m3) zeta,
// tau_2 = -(m0+m2)-(m0+m3) zeta, tau_3 = m0; p_1 = zeta, p_2 = -1-zeta, p_3 = 1.
template <class R>
HamiltonianSpec<R> spec_su2_nf4(const R& m0, const R& m1, const R& m2, const R& m3, const R& zeta) {
    HamiltonianSpec<R> s;
    s.parity = Parity::even;
    s.deg_min = 1;
    s.deg_max = 3;
    s.s = 1;
    s.kappa = {(m0 + m1 + m2 + m3) * (m0 - m1 + m2 + m3) * zeta};
    s.tau = {R(0), (m0 + m2 + m3) * zeta, -(m0 + m2) - (m0 + m3) * zeta, m0};
    s.p = {{1, zeta}, {2, R(-1) - zeta}, {3, R(1)}};
    return s;
}

// (2,2m-1) minimal continuum DT model (odd parity): deg_min = deg_max = 0,
// s = m-1, p_0 = 1, p_1 = 0, free couplings tau_0..tau_m.
// m = 1 with tau = (0, 1) is the Airy model (topological gravity).
template <class R>
HamiltonianSpec<R> spec_cont_dt(int m, const std::vector<R>& tau) {
    if (m < 1) throw calc_error("InvalidSpec", "minimal model index m must be >= 1");
    if ((int)tau.size() != m + 1)
        throw calc_error("InvalidSpec", "expected couplings tau_0..tau_m");
    HamiltonianSpec<R> s;
    s.parity = Parity::odd;
    s.deg_min = 0;
    s.deg_max = 0;
    s.s = m - 1;
    s.tau = tau;
    s.p = {{0, R(1)}, {1, R(0)}};
    return s;
}

// Continuum pure DT model: the m = 2 continuum DT model with
// tau = (-3 mu / 8, 0, 1), mu the cosmological constant.
template <class R>
HamiltonianSpec<R> spec_cont_pure_dt(const R& mu) {
    return spec_cont_dt<R>(2, {R(-3) * mu / R(8), R(0), R(1)});
}

// Supersymmetric analogue of the minimal continuum DT model (odd parity):
// deg_min = deg_max = 1, s = m-1, p_0 = 0, p_1 = 1, free kappa_1 and tau_0..tau_m.
// m = 1 with kappa_1 = 0, tau = (0, 1) is the Bessel model.
template <class R>
HamiltonianSpec<R> spec_super_dt(int m, const R& kappa1, const std::vector<R>& tau) {
    if (m < 1) throw calc_error("InvalidSpec", "minimal model index m must be >= 1");
    if ((int)tau.size() != m + 1)
        throw calc_error("InvalidSpec", "expected couplings tau_0..tau_m");
    HamiltonianSpec<R> s;
    s.parity = Parity::odd;
    s.deg_min = 1;
    s.deg_max = 1;
    s.s = m - 1;
    s.kappa = {kappa1};
    s.tau = tau;
    s.p = {{0, R(0)}, {1, R(1)}};
    return s;
}

// Pure SU(2) gauge theory (odd parity): deg_min = deg_max = 2, s = 1;
// kappa_1 = kappa_2 = 0, tau = (0, Lambda, Lambda), p_0 = p_1 = 0, p_2 = 1,
// with Lambda the dynamical scale.
template <class R>
HamiltonianSpec<R> spec_pure_su2(const R& Lambda) {
    HamiltonianSpec<R> s;
    s.parity = Parity::odd;
    s.deg_min = 2;
    s.deg_max = 2;
    s.s = 1;
    s.kappa = {R(0), R(0)};
    s.tau = {R(0), Lambda, Lambda};
    s.p = {{0, R(0)}, {1, R(0)}, {2, R(1)}};
    return s;
}

// Gaussian model: the m = 1 minimal discrete DT model.
template <class R>
HamiltonianSpec<R> spec_gaussian() {
    return spec_mddt<R>(1);
}

// Airy model (topological gravity): the m = 1 minimal continuum DT model.
template <class R>
HamiltonianSpec<R> spec_airy() {
    return spec_cont_dt<R>(1, {R(0), R(1)});
}

// Bessel model: the m = 1 supersymmetric minimal continuum DT model.
template <class R>
HamiltonianSpec<R> spec_bessel() {
    return spec_super_dt<R>(1, R(0), {R(0), R(1)});
}

} // namespace looprec
