#pragma once

// q-Pochhammer symbols and basic hypergeometric series at a real base in
// (0,1): finite and infinite products, symbol ratios with symbolic
// cancellation of shared factors, series evaluation with exact handling of
// terminating parameters, and analytic continuation of 2phi1 past the unit
// disk (connection formula in 1/z, plus a Heine-transformed product form
// that stays regular where the connection formula degenerates).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qsphere/errors.hpp"

namespace qsphere {

using cplx = std::complex<double>;

// Deformation parameter plus the numeric policy shared by every evaluation.
struct QBase {
    double q;
    double eps = 1e-12;
    int max_terms = 4000;

    explicit QBase(double q_, double eps_ = 1e-12, int max_terms_ = 4000)
        : q(q_), eps(eps_), max_terms(max_terms_) {
        if (!(q > 0.0 && q < 1.0)) throw DomainError("QBase: q must lie in (0,1)");
        if (!(eps > 0.0)) throw DomainError("QBase: eps must be positive");
        if (max_terms < 1) throw DomainError("QBase: max_terms must be >= 1");
    }

    double q2() const { return q * q; }
};

namespace detail {

inline bool nearly_equal(cplx a, cplx b, double eps) {
    return std::abs(a - b) <= eps * std::max({1.0, std::abs(a), std::abs(b)});
}

// Index m >= 0 with a = base^{-m}, if one exists: these are exactly the
// arguments where (a; base)_inf vanishes.
inline std::optional<int> pole_index(cplx a, double base, double eps) {
    if (std::abs(a.imag()) > eps * std::max(1.0, std::abs(a))) return std::nullopt;
    double re = a.real();
    if (re < 1.0 - eps) return std::nullopt;
    double m = std::round(std::log(re) / std::log(1.0 / base));
    if (m < -0.5) return std::nullopt;
    int mi = static_cast<int>(m);
    if (nearly_equal(a, cplx(std::pow(base, -static_cast<double>(mi))), eps)) return mi;
    return std::nullopt;
}

} // namespace detail

// (a; base)_n = prod_{m=0}^{n-1} (1 - a base^m); empty product is 1.
inline cplx qpoch_finite(cplx a, cplx base, long n) {
    if (n < 0) throw DomainError("qpoch_finite: n must be nonnegative");
    cplx prod = 1.0;
    cplx pw = 1.0;
    for (long m = 0; m < n; ++m) {
        prod *= (1.0 - a * pw);
        pw *= base;
    }
    return prod;
}

// (a; base)_inf truncated once the remaining factors are provably within
// eps of 1. Deterministic for a fixed QBase.
inline cplx qpoch_infinite(cplx a, double base, const QBase &qb) {
    if (!(base > 0.0 && base < 1.0)) throw DomainError("qpoch_infinite: base must lie in (0,1)");
    // truncation aims well below the policy eps so downstream identities see
    // full double accuracy
    const double cut = std::min(qb.eps * 1e-4, 1e-15);
    cplx prod = 1.0;
    double mag = std::abs(a);
    for (int m = 0; m < qb.max_terms; ++m) {
        if (mag < cut) {
            // tail bound: |log prod_{k>=m}(1 - a base^k)| <= mag/(1-base) up to
            // second order
            double tail = mag / (1.0 - base);
            if (tail < cut) return prod;
        }
        prod *= (1.0 - a);
        a *= base;
        mag *= base;
    }
    throw TruncationFailure("qpoch_infinite: max_terms exceeded before tail bound met");
}

// One infinite-product building block (arg * q^{base_exp*shift}; q^{base_exp})_inf.
struct PochFactor {
    cplx a;
    int base_exp = 1; // 1 or 2: base is q or q^2
    int shift = 0;

    PochFactor(cplx a_, int base_exp_ = 1, int shift_ = 0)
        : a(a_), base_exp(base_exp_), shift(shift_) {
        if (base_exp != 1 && base_exp != 2) throw DomainError("PochFactor: base exponent must be 1 or 2");
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw DomainError("PochFactor: argument must be finite");
    }

    cplx effective_arg(double q) const { return a * std::pow(q, base_exp * shift); }
};

// Outcome of a Pochhammer ratio: either a finite value, an exact zero from
// an uncancelled numerator factor, or a signed-infinity marker from an
// uncancelled denominator zero. The marker replaces a silent NaN; callers
// decide what a pole means (for the spherical kernels it signals a
// vanishing coefficient).
struct RatioValue {
    enum class State { finite, zero, divergent };
    State state = State::finite;
    cplx value = 1.0;

    bool is_finite() const { return state == State::finite; }
    bool is_zero() const { return state == State::zero; }
    bool is_divergent() const { return state == State::divergent; }
};

// Evaluates prod(numer)/prod(denom) after cancelling argument-equal factors.
// Cancellation happens before any evaluation, so removable singularities
// (the same vanishing factor upstairs and downstairs) come out finite.
inline RatioValue qpoch_ratio(std::vector<PochFactor> numer, std::vector<PochFactor> denom,
                              const QBase &qb) {
    int be = numer.empty() ? (denom.empty() ? 2 : denom.front().base_exp) : numer.front().base_exp;
    for (const auto &f : numer)
        if (f.base_exp != be) throw DomainError("qpoch_ratio: factors must share one base");
    for (const auto &f : denom)
        if (f.base_exp != be) throw DomainError("qpoch_ratio: factors must share one base");
    double base = std::pow(qb.q, be);

    std::vector<cplx> na, da;
    na.reserve(numer.size());
    da.reserve(denom.size());
    for (const auto &f : numer) na.push_back(f.effective_arg(qb.q));
    for (const auto &f : denom) da.push_back(f.effective_arg(qb.q));

    for (auto itn = na.begin(); itn != na.end();) {
        auto itd = std::find_if(da.begin(), da.end(),
                                [&](cplx d) { return detail::nearly_equal(*itn, d, qb.eps); });
        if (itd != da.end()) {
            itn = na.erase(itn);
            da.erase(itd);
        } else {
            ++itn;
        }
    }

    for (cplx d : da) {
        if (detail::pole_index(d, base, qb.eps)) {
            RatioValue out;
            out.state = RatioValue::State::divergent;
            return out;
        }
    }
    for (cplx n : na) {
        if (detail::pole_index(n, base, qb.eps)) {
            RatioValue out;
            out.state = RatioValue::State::zero;
            out.value = 0.0;
            return out;
        }
    }

    RatioValue out;
    cplx v = 1.0;
    for (cplx n : na) v *= qpoch_infinite(n, base, qb);
    for (cplx d : da) v /= qpoch_infinite(d, base, qb);
    out.value = v;
    return out;
}

// Parameters of an rphi_s series in a fixed base (q or q^2) and argument.
struct HyperSeriesSpec {
    std::vector<cplx> upper;
    std::vector<cplx> lower;
    double base;
    cplx arg;

    // Smallest m with upper[i] = base^{-m}: series terminates at k = m.
    std::optional<int> terminating_index(double eps) const {
        std::optional<int> best;
        for (cplx u : upper) {
            auto m = detail::pole_index(u, base, eps);
            if (m && (!best || *m < *best)) best = m;
        }
        return best;
    }

    void validate(double eps) const {
        if (!(base > 0.0 && base < 1.0)) throw DomainError("HyperSeriesSpec: base must lie in (0,1)");
        auto term = terminating_index(eps);
        for (cplx l : lower) {
            auto m = detail::pole_index(l, base, eps);
            // a lower parameter base^{-m} is a pole unless the series stops first
            if (m && (!term || *term > *m))
                throw DomainError("HyperSeriesSpec: lower parameter base^{-m} makes the series singular");
        }
    }
};

// rphi_s sum by the term recurrence, with the ((-1)^k base^C(k,2))^{1+s-r}
// factor when r <= s. Terminating series are summed exactly.
inline cplx phi_series(const HyperSeriesSpec &spec, const QBase &qb) {
    spec.validate(qb.eps);
    auto term_idx = spec.terminating_index(qb.eps);
    if (!term_idx && std::abs(spec.arg) >= 1.0)
        throw Nonconvergent("phi_series: |z| >= 1 and series does not terminate");

    const long r = static_cast<long>(spec.upper.size());
    const long s = static_cast<long>(spec.lower.size());
    const long extra = 1 + s - r; // exponent on the (-1)^k base^C(k,2) factor

    cplx sum = 1.0;
    cplx term = 1.0;
    cplx bpow = 1.0; // base^k
    int quiet = 0;
    for (int k = 0; k < qb.max_terms; ++k) {
        if (term_idx && k == *term_idx) return sum;
        cplx ratio = spec.arg;
        for (cplx u : spec.upper) ratio *= (1.0 - u * bpow);
        cplx den = (1.0 - std::pow(spec.base, k + 1));
        for (cplx l : spec.lower) den *= (1.0 - l * bpow);
        ratio /= den;
        if (extra > 0) {
            // ((-1) base^k)^{extra} accumulates base^{C(k+1,2)-C(k,2)} = base^k
            cplx f = -bpow;
            cplx fpow = 1.0;
            for (long e = 0; e < extra; ++e) fpow *= f;
            ratio *= fpow;
        }
        term *= ratio;
        sum += term;
        bpow *= spec.base;
        if (!term_idx) {
            const double cut = std::min(qb.eps * 1e-3, 1e-15);
            if (std::abs(term) <= cut * std::max(1.0, std::abs(sum))) {
                if (++quiet >= 2) return sum;
            } else {
                quiet = 0;
            }
        }
    }
    if (term_idx) return sum;
    throw TruncationFailure("phi_series: max_terms exceeded");
}

// 2phi1(a,b;c;base,z) on |z|<1 by direct summation.
inline cplx phi21_series(cplx a, cplx b, cplx c, double base, cplx z, const QBase &qb) {
    return phi_series(HyperSeriesSpec{{a, b}, {c}, base, z}, qb);
}

namespace detail {

inline void require_nonzero(cplx v, double eps, const char *relation) {
    if (std::abs(v) <= eps)
        throw ContinuationSingular(std::string("phi21_continued: zero prefactor denominator (") +
                                       relation + ")",
                                   relation);
}

} // namespace detail

// Analytic continuation of 2phi1 by the standard two-series expansion in
// 1/z. Used whenever the inner argument c*base/(a b z) falls inside the
// disk and no prefactor degenerates; falls back to direct summation inside
// the unit disk otherwise. The logarithmic case a/b in base^Z is reported,
// not evaluated.
inline cplx phi21_continued(cplx a, cplx b, cplx c, double base, cplx z, const QBase &qb) {
    if (std::abs(z) <= qb.eps) return 1.0;
    if (auto m = detail::pole_index(a, base, qb.eps); m && std::abs(z) < 1.0)
        return phi21_series(a, b, c, base, z, qb);
    if (auto m = detail::pole_index(b, base, qb.eps); m && std::abs(z) < 1.0)
        return phi21_series(a, b, c, base, z, qb);

    cplx w = c * base / (a * b * z);
    bool connection_ok = std::abs(w) < 0.95;
    if (connection_ok) {
        // degenerate configurations: a/b in base^Z (logarithmic case), a pole
        // of (z, base/z; base)_inf, or c itself at a pole
        auto ab = a / b;
        bool log_case = detail::pole_index(ab, base, qb.eps).has_value() ||
                        detail::pole_index(1.0 / ab, base, qb.eps).has_value() ||
                        detail::nearly_equal(ab, 1.0, qb.eps);
        if (log_case) {
            if (std::abs(z) < 1.0) return phi21_series(a, b, c, base, z, qb);
            throw ContinuationSingular("phi21_continued: a/b in base^Z (logarithmic case)", "a/b in base^Z");
        }
        if (detail::pole_index(c, base, qb.eps))
            throw ContinuationSingular("phi21_continued: c in base^{-N}", "c in base^{-N}");
        if (detail::pole_index(z, base, qb.eps) || detail::pole_index(base / z, base, qb.eps) ||
            detail::nearly_equal(z, 1.0, qb.eps)) {
            if (std::abs(z) < 1.0) return phi21_series(a, b, c, base, z, qb);
            throw ContinuationSingular("phi21_continued: z in base^Z pole of the expansion", "z in base^Z");
        }

        cplx zi = qpoch_infinite(z, base, qb) * qpoch_infinite(base / z, base, qb);
        detail::require_nonzero(zi, qb.eps, "z-plane factor");
        cplx cz = qpoch_infinite(c, base, qb);
        detail::require_nonzero(cz, qb.eps, "c factor");

        auto half = [&](cplx a1, cplx b1) {
            cplx pref = qpoch_infinite(b1, base, qb) * qpoch_infinite(c / a1, base, qb) /
                        (cz * qpoch_infinite(b1 / a1, base, qb));
            pref *= qpoch_infinite(a1 * z, base, qb) * qpoch_infinite(base / (a1 * z), base, qb) / zi;
            cplx inner = phi21_series(a1, a1 * base / c, a1 * base / b1, base, w, qb);
            return pref * inner;
        };
        return half(a, b) + half(b, a);
    }

    if (std::abs(z) < 1.0) return phi21_series(a, b, c, base, z, qb);
    throw Nonconvergent("phi21_continued: no applicable expansion for these parameters");
}

// (z; base)_inf * 2phi1(a,b;c;base,z) as a single regular object. Inside
// the unit disk this is the plain product; past it the two factors are
// combined through the Heine transformation
//   2phi1(a,b;c;z) = (b, az; base)_inf / (c, z; base)_inf
//                    * 2phi1(c/b, z; az; base, b),
// so the (z;base)_inf zeros at z = base^{-m}, m >= 0 meet the matching
// poles of the continued 2phi1 analytically instead of as 0 * inf.
// The Heine branch requires |b| < 1 (or |a| < 1 after swapping).
inline cplx phi21_poch_product(cplx a, cplx b, cplx c, double base, cplx z, const QBase &qb) {
    if (std::abs(z) < 1.0)
        return qpoch_infinite(z, base, qb) * phi21_series(a, b, c, base, z, qb);
    if (std::abs(b) >= 1.0) {
        if (std::abs(a) >= 1.0)
            throw Nonconvergent("phi21_poch_product: neither series parameter lies inside the disk");
        std::swap(a, b);
    }
    cplx az = a * z;
    if (detail::pole_index(az, base, qb.eps)) {
        // exact zero of (az;base)_inf; the inner series stays finite here
        // because z = base^{-m} terminates it before the lower-parameter pole
        return 0.0;
    }
    cplx pref = qpoch_infinite(b, base, qb) * qpoch_infinite(az, base, qb) /
                qpoch_infinite(c, base, qb);
    HyperSeriesSpec inner{{c / b, z}, {az}, base, b};
    return pref * phi_series(inner, qb);
}

} // namespace qsphere
