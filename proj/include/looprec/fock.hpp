#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ring.hpp"

namespace looprec {

// String-operator algebra: bosonic modes C(l) (creation) and A(l) (annihilation),
// l >= 1, with [A(l), C(l')] = delta_{l,l'}; modes at l <= 0 are identically zero.
// Coefficients are ring scalars times an integer power of the formal symbol g_s.

struct OpKey {
    std::vector<int> creators;      // sorted ascending
    std::vector<int> annihilators;  // sorted ascending
    int gs_power = 0;
    auto operator<=>(const OpKey&) const = default;
};

template <class R>
class OperatorPolynomial {
public:
    OperatorPolynomial() = default;

    // A single normal-ordered monomial; vanishes if any mode is <= 0 (zero operator)
    // or the coefficient is zero.
    static OperatorPolynomial monomial(std::vector<int> creators, std::vector<int> annihilators,
                                       int gs_power, R coeff) {
        OperatorPolynomial p;
        if (coeff.is_zero()) return p;
        for (int m : creators)
            if (m <= 0) return p;
        for (int m : annihilators)
            if (m <= 0) return p;
        std::sort(creators.begin(), creators.end());
        std::sort(annihilators.begin(), annihilators.end());
        p.t_[OpKey{std::move(creators), std::move(annihilators), gs_power}] = std::move(coeff);
        return p;
    }

    static OperatorPolynomial scalar(R c, int gs_power = 0) {
        return monomial({}, {}, gs_power, std::move(c));
    }

    bool is_zero() const { return t_.empty(); }
    const std::map<OpKey, R>& terms() const { return t_; }

    void add_term(std::vector<int> creators, std::vector<int> annihilators, int gs_power, R coeff) {
        *this += monomial(std::move(creators), std::move(annihilators), gs_power, std::move(coeff));
    }

    OperatorPolynomial& operator+=(const OperatorPolynomial& o) {
        for (const auto& [k, c] : o.t_) {
            auto it = t_.find(k);
            if (it == t_.end()) {
                t_.emplace(k, c);
            } else {
                it->second += c;
                if (it->second.is_zero()) t_.erase(it);
            }
        }
        return *this;
    }
    OperatorPolynomial operator+(const OperatorPolynomial& o) const {
        OperatorPolynomial r = *this;
        r += o;
        return r;
    }
    OperatorPolynomial operator-() const {
        OperatorPolynomial r = *this;
        for (auto& [k, c] : r.t_) c = -c;
        return r;
    }
    OperatorPolynomial operator-(const OperatorPolynomial& o) const { return *this + (-o); }
    OperatorPolynomial scaled(const R& c, int gs_shift = 0) const {
        OperatorPolynomial r;
        if (c.is_zero()) return r;
        for (const auto& [k, v] : t_) {
            R nv = v * c;
            if (!nv.is_zero()) r.t_[OpKey{k.creators, k.annihilators, k.gs_power + gs_shift}] = nv;
        }
        return r;
    }

    // Normal-ordered product: contract the left factor's annihilators against the
    // right factor's creators over all partial matchings (each contraction is 1).
    OperatorPolynomial operator*(const OperatorPolynomial& o) const {
        OperatorPolynomial r;
        for (const auto& [ka, ca] : t_)
            for (const auto& [kb, cb] : o.t_) {
                R coeff = ca * cb;
                wick(ka, kb, coeff, r);
            }
        return r;
    }

    OperatorPolynomial commutator_with(const OperatorPolynomial& o) const {
        return *this * o - o * *this;
    }

    bool operator==(const OperatorPolynomial& o) const {
        if (t_.size() != o.t_.size()) return false;
        auto it = t_.begin(), jt = o.t_.begin();
        for (; it != t_.end(); ++it, ++jt) {
            if (it->first != jt->first) return false;
            if (!(it->second == jt->second)) return false;
        }
        return true;
    }
    bool operator!=(const OperatorPolynomial& o) const { return !(*this == o); }

    // Drop every monomial containing a mode above the cutoff.
    OperatorPolynomial restrict_modes(int cutoff) const {
        OperatorPolynomial r;
        for (const auto& [k, c] : t_) {
            bool keep = true;
            for (int m : k.creators)
                if (m > cutoff) keep = false;
            for (int m : k.annihilators)
                if (m > cutoff) keep = false;
            if (keep) r.t_[k] = c;
        }
        return r;
    }

    std::string str() const {
        if (t_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [k, c] : t_) {
            if (!first) os << " + ";
            first = false;
            os << "(" << c.str() << ")";
            if (k.gs_power != 0) os << "*gs^" << k.gs_power;
            for (int m : k.creators) os << "*C(" << m << ")";
            for (int m : k.annihilators) os << "*A(" << m << ")";
        }
        return os.str();
    }

private:
    std::map<OpKey, R> t_;

    // Expand A(a_1)...A(a_m) C(e_1)...C(e_n) over partial matchings; unmatched
    // operators stay, re-sorted into normal order (all modes commute pairwise).
    void wick(const OpKey& left, const OpKey& right, const R& coeff, OperatorPolynomial& out) const {
        const auto& a = left.annihilators;
        const auto& e = right.creators;
        std::vector<char> used(e.size(), 0);
        std::vector<int> kept_a;
        kept_a.reserve(a.size());
        int gs = left.gs_power + right.gs_power;
        auto rec = [&](auto&& self, size_t i) -> void {
            if (i == a.size()) {
                std::vector<int> creators = left.creators;
                std::vector<int> annihilators = kept_a;
                for (size_t j = 0; j < e.size(); ++j)
                    if (!used[j]) creators.push_back(e[j]);
                for (int m : right.annihilators) annihilators.push_back(m);
                out += monomial(std::move(creators), std::move(annihilators), gs, coeff);
                return;
            }
            // a[i] stays un-contracted
            kept_a.push_back(a[i]);
            self(self, i + 1);
            kept_a.pop_back();
            // or contracts with one of the available equal-mode creators
            for (size_t j = 0; j < e.size(); ++j) {
                if (used[j] || e[j] != a[i]) continue;
                used[j] = 1;
                self(self, i + 1);
                used[j] = 0;
            }
        };
        rec(rec, 0);
    }
};

enum class Parity { even, odd };

// Parameters of the string-field Hamiltonian families of both parities.
//   deg_min, deg_max: lowest/highest degree of the three-string coupling polynomial p(x);
//   s: propagator degree parameter; kappa: free one-string couplings kappa_1..kappa_{deg_min};
//   tau: propagator couplings tau_0..tau_{s+2} (even) / tau_0..tau_{s+1} (odd);
//   p: three-string couplings p_k for deg_min <= k <= deg_max, plus p_0, p_1 in the odd case.
template <class R>
struct HamiltonianSpec {
    Parity parity = Parity::even;
    int deg_min = 0;
    int deg_max = 0;
    int s = 0;
    std::vector<R> kappa;
    std::vector<R> tau;
    std::map<int, R> p;

    R p_at(int k) const {
        auto it = p.find(k);
        return it == p.end() ? R(0) : it->second;
    }
    R tau_at(int k) const {
        if (k < 0 || k >= (int)tau.size()) return R(0);
        return tau[k];
    }
    // kappa_k including the constrained top couplings fixed by the leading-order
    // consistency of the loop equations: even parity constrains kappa_{deg_min+1}
    // and kappa_{deg_min+2}, odd parity constrains kappa_{deg_min+1}.
    R kappa_at(int k) const {
        if (k >= 1 && k <= (int)kappa.size()) return kappa[k - 1];
        const R pm = p_at(deg_min);
        if (parity == Parity::even) {
            if (k == deg_min + 1)
                return R(2) * tau_at(0) * tau_at(1) / pm - tau_at(0) * tau_at(0) * p_at(deg_min + 1) / (pm * pm);
            if (k == deg_min + 2) return tau_at(0) * tau_at(0) / pm;
        } else {
            if (k == deg_min + 1) return tau_at(0) * tau_at(0) / pm;
        }
        return R(0);
    }

    void validate() const {
        if (deg_min < 0 || deg_max < deg_min)
            throw calc_error("InvalidSpec", "need 0 <= deg_min <= deg_max");
        int kappa_full = deg_min + (parity == Parity::even ? 2 : 1);
        if ((int)kappa.size() != deg_min && (int)kappa.size() != kappa_full)
            throw calc_error("InvalidSpec",
                             "kappa list must have deg_min entries (free couplings) or "
                             "additionally the constrained top couplings");
        if (p_at(deg_min).is_zero() || p_at(deg_max).is_zero())
            throw calc_error("InvalidSpec", "p_{deg_min} and p_{deg_max} must be nonzero");
        if (parity == Parity::even) {
            if (s + 2 < deg_max) throw calc_error("InvalidSpec", "even parity requires s+2 >= deg_max");
            if ((int)tau.size() != s + 3)
                throw calc_error("InvalidSpec", "even parity requires tau_0..tau_{s+2}");
        } else {
            if (s + 1 < deg_max) throw calc_error("InvalidSpec", "odd parity requires s+1 >= deg_max");
            if ((int)tau.size() != s + 2)
                throw calc_error("InvalidSpec", "odd parity requires tau_0..tau_{s+1}");
        }
    }
};

// The normal-ordered operator -H with every mode sum truncated so that all
// appearing modes are <= cutoff.
template <class R>
OperatorPolynomial<R> build_hamiltonian(const HamiltonianSpec<R>& spec, int cutoff) {
    spec.validate();
    OperatorPolynomial<R> H;
    const int L = cutoff;
    if (spec.parity == Parity::even) {
        for (int k = 1; k <= spec.deg_min + 2 && k <= L; ++k)
            H.add_term({}, {k}, -1, R(k) * spec.kappa_at(k));
        H.add_term({}, {1, 1}, 0, spec.tau_at(0));
        for (int k = 0; k <= spec.s + 2; ++k) {
            R tk = spec.tau_at(k);
            if (tk.is_zero()) continue;
            for (int l = 1; l <= L; ++l) {
                int lc = l + k - 2;
                if (lc > L) break;
                H.add_term({lc}, {l}, 0, R(2 * l) * tk);
            }
        }
        for (int k = spec.deg_min; k <= spec.deg_max; ++k) {
            R pk = spec.p_at(k);
            if (pk.is_zero()) continue;
            for (int l = 1; l <= L; ++l)
                for (int lp = 1; lp <= L; ++lp) {
                    int la = l + lp - k + 2;
                    if (la >= 1 && la <= L)
                        H.add_term({l, lp}, {la}, 1, R(la) * pk);
                    int lc = l + lp + k - 2;
                    if (lc >= 1 && lc <= L)
                        H.add_term({lc}, {l, lp}, 1, R(l) * R(lp) * pk);
                }
        }
    } else {
        for (int k = 1; k <= spec.deg_min + 1 && 2 * k <= L; ++k)
            H.add_term({}, {2 * k}, -1, R(2 * k) * spec.kappa_at(k));
        const R inv8 = R(1) / R(8);
        H.add_term({}, {4}, 1, R(2) * spec.p_at(0) * inv8);
        H.add_term({}, {2}, 1, spec.p_at(1) * inv8);
        H.add_term({}, {1, 2}, 0, spec.tau_at(0));
        H.add_term({}, {1, 1, 2}, 1, spec.p_at(0) * inv8);
        for (int k = 0; k <= spec.s + 1; ++k) {
            R tk = spec.tau_at(k);
            if (tk.is_zero()) continue;
            for (int l = 1; l <= L; ++l) {
                int lc = l + 2 * k - 3;
                if (lc > L) break;
                H.add_term({lc}, {l}, 0, R(2 * l) * tk);
            }
        }
        const R inv4 = R(1) / R(4);
        for (int k = spec.deg_min; k <= spec.deg_max; ++k) {
            R pk = spec.p_at(k);
            if (pk.is_zero()) continue;
            for (int l = 1; l <= L; ++l)
                for (int lp = 1; lp <= L; ++lp) {
                    int la = l + lp - 2 * k + 4;
                    if (la >= 1 && la <= L)
                        H.add_term({l, lp}, {la}, 1, R(la) * pk);
                    int lc = l + lp + 2 * k - 4;
                    if (lc >= 1 && lc <= L)
                        H.add_term({lc}, {l, lp}, 1, R(l) * R(lp) * inv4 * pk);
                }
        }
    }
    return H;
}

// Closed form of the commutator [-H, C(l)], with modes capped at the cutoff.
template <class R>
OperatorPolynomial<R> commutator_adjoint(const HamiltonianSpec<R>& spec, int l, int cutoff) {
    spec.validate();
    OperatorPolynomial<R> r;
    if (l <= 0) return r;
    const int L = cutoff;
    if (spec.parity == Parity::even) {
        for (int k = spec.deg_min; k <= spec.deg_max; ++k) {
            R pk = spec.p_at(k);
            if (pk.is_zero()) continue;
            int tot = l + k - 2;
            for (int lp = 1; lp <= tot - 1; ++lp) {
                int lpp = tot - lp;
                if (lp <= L && lpp <= L)
                    r.add_term({lp, lpp}, {}, 1, R(l) * pk);
            }
            for (int lp = 1; lp <= L && l + lp + k - 2 <= L; ++lp)
                r.add_term({l + lp + k - 2}, {lp}, 1, R(2) * R(l) * R(lp) * pk);
        }
        for (int k = -1; k <= spec.s + 1; ++k) {
            int lc = l + k - 1;
            if (lc >= 1 && lc <= L)
                r.add_term({lc}, {}, 0, R(2 * l) * spec.tau_at(k + 1));
        }
        if (l >= 1 && l <= spec.deg_min + 2)
            r += OperatorPolynomial<R>::scalar(R(l) * spec.kappa_at(l), -1);
        if (l == 1) r.add_term({}, {1}, 0, R(2) * spec.tau_at(0));
    } else {
        for (int k = spec.deg_min; k <= spec.deg_max; ++k) {
            R pk = spec.p_at(k);
            if (pk.is_zero()) continue;
            int tot = l + 2 * k - 4;
            for (int lp = 1; lp <= tot - 1; ++lp) {
                int lpp = tot - lp;
                if (lp <= L && lpp <= L)
                    r.add_term({lp, lpp}, {}, 1, R(l) * pk);
            }
            const R half = R(1) / R(2);
            for (int lp = 1; lp <= L && l + lp + 2 * k - 4 <= L; ++lp)
                r.add_term({l + lp + 2 * k - 4}, {lp}, 1, half * R(l) * R(lp) * pk);
        }
        for (int k = -1; k <= spec.s; ++k) {
            int lc = l + 2 * k - 1;
            if (lc >= 1 && lc <= L)
                r.add_term({lc}, {}, 0, R(2 * l) * spec.tau_at(k + 1));
        }
        if (l % 2 == 0 && l / 2 >= 1 && l / 2 <= spec.deg_min + 1)
            r += OperatorPolynomial<R>::scalar(R(l) * spec.kappa_at(l / 2), -1);
        const R inv8 = R(1) / R(8);
        if (l == 4) r += OperatorPolynomial<R>::scalar(R(2) * spec.p_at(0) * inv8, 1);
        if (l == 2) r += OperatorPolynomial<R>::scalar(spec.p_at(1) * inv8, 1);
        r.add_term({}, {3 - l}, 0, (R(1) / R(2)) * spec.tau_at(0) * R(l) * R(3 - l));
        if (l == 1) r.add_term({}, {1, 2}, 1, R(2) * spec.p_at(0) * inv8);
        if (l == 2) r.add_term({}, {1, 1}, 1, spec.p_at(0) * inv8);
    }
    return r;
}

// Oracle: [-H, C(l)] by generic commutation of the cutoff-truncated Hamiltonian,
// restricted to modes <= cutoff. The precondition guarantees the truncation cannot
// remove a contributing term.
template <class R>
OperatorPolynomial<R> brute_commutator(const HamiltonianSpec<R>& spec, int l, int cutoff) {
    // Every Hamiltonian term that can contribute a mode-restricted output monomial
    // has all of its own modes within the cutoff, so equality with the closed form
    // is exact as soon as the fixed tadpole/interaction modes fit below the cutoff.
    if (cutoff < l + 4)
        throw calc_error("CutoffTooSmall", "need cutoff >= l + 4");
    auto H = build_hamiltonian(spec, cutoff);
    auto Cl = OperatorPolynomial<R>::monomial({l}, {}, 0, R(1));
    return H.commutator_with(Cl).restrict_modes(cutoff);
}

// Finite-support state: creator multisets (all modes <= cutoff) with scalar
// coefficients carrying a g_s power; the vacuum is the empty multiset.
template <class R>
struct TruncatedState {
    int cutoff = 0;
    std::map<std::pair<std::vector<int>, int>, R> amp;

    static TruncatedState vacuum(int cutoff) {
        TruncatedState s;
        s.cutoff = cutoff;
        s.amp[{{}, 0}] = R(1);
        return s;
    }
    bool is_zero() const { return amp.empty(); }
};

// Apply a normal-ordered operator to a state: annihilators must all pair with
// state creators (counting orderings among identical modes); leftover modes above
// the cutoff discard the term.
template <class R>
TruncatedState<R> apply(const OperatorPolynomial<R>& op, const TruncatedState<R>& st) {
    TruncatedState<R> out;
    out.cutoff = st.cutoff;
    for (const auto& [key, coeff] : st.amp) {
        std::map<int, int> mult;
        for (int m : key.first) ++mult[m];
        for (const auto& [k, c] : op.terms()) {
            std::map<int, int> need;
            for (int m : k.annihilators) ++need[m];
            long ways = 1;
            bool ok = true;
            for (const auto& [m, cnt] : need) {
                int have = mult.count(m) ? mult.at(m) : 0;
                if (have < cnt) { ok = false; break; }
                for (int i = 0; i < cnt; ++i) ways *= (have - i);
            }
            if (!ok) continue;
            std::vector<int> creators;
            bool in_range = true;
            for (const auto& [m, cnt] : mult) {
                int keep = cnt - (need.count(m) ? need.at(m) : 0);
                for (int i = 0; i < keep; ++i) creators.push_back(m);
            }
            for (int m : k.creators) {
                if (m > st.cutoff) in_range = false;
                creators.push_back(m);
            }
            if (!in_range) continue;
            std::sort(creators.begin(), creators.end());
            R contrib = c * coeff * R(ways);
            auto sk = std::make_pair(std::move(creators), k.gs_power + key.second);
            auto it = out.amp.find(sk);
            if (it == out.amp.end()) {
                if (!contrib.is_zero()) out.amp.emplace(std::move(sk), std::move(contrib));
            } else {
                it->second += contrib;
                if (it->second.is_zero()) out.amp.erase(it);
            }
        }
    }
    return out;
}

template <class R>
struct NoBigbangResult {
    bool ok = true;
    std::vector<int> witness_modes;  // first creator multiset with nonzero coefficient
    R witness_coeff = R(0);
};

// H annihilates the vacuum iff -H applied to the truncated vacuum is zero.
template <class R>
NoBigbangResult<R> check_no_bigbang(const HamiltonianSpec<R>& spec, int cutoff) {
    if (cutoff < 2 * spec.deg_max + 6)
        throw calc_error("CutoffTooSmall", "need cutoff >= 2*deg_max + 6");
    return check_no_bigbang_of(build_hamiltonian(spec, cutoff), cutoff);
}

template <class R>
NoBigbangResult<R> check_no_bigbang_of(const OperatorPolynomial<R>& H, int cutoff) {
    auto res = apply(H, TruncatedState<R>::vacuum(cutoff));
    NoBigbangResult<R> out;
    if (!res.is_zero()) {
        out.ok = false;
        out.witness_modes = res.amp.begin()->first.first;
        out.witness_coeff = res.amp.begin()->second;
    }
    return out;
}

} // namespace looprec
