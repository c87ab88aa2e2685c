#pragma once

// The four product formulae: a product of two spherical kernel values at a
// spectral point expands over the lattice in kernels of a fixed sign
// pattern, with x-independent real coefficients supported on one sign
// branch. Coefficients come either from an a-function provider (the four
// displayed quadratic identities) or from a least-squares fit over a
// principal grid, verified on held-out nodes.

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsphere/kernels.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/numerics.hpp"

namespace qsphere {

enum class ProductVariant { I, II, III, IV };

inline const char *variant_name(ProductVariant v) {
    switch (v) {
    case ProductVariant::I: return "I";
    case ProductVariant::II: return "II";
    case ProductVariant::III: return "III";
    case ProductVariant::IV: return "IV";
    }
    return "?";
}

inline std::optional<ProductVariant> variant_from_name(const std::string &s) {
    if (s == "I") return ProductVariant::I;
    if (s == "II") return ProductVariant::II;
    if (s == "III") return ProductVariant::III;
    if (s == "IV") return ProductVariant::IV;
    return std::nullopt;
}

// Sign-pattern metadata of one product formula.
struct VariantMeta {
    SignPair left;
    SignPair right;
    SignPair target;
    bool left_odd;          // leg is an odd functional (lives in (-1,1))
    bool right_odd;
    bool sum_inside_unit;   // p0 runs over I_q n (-1,1) instead of I_q
    int support_sign;       // sgn(p0) = support_sign * sgn(p1 p2)
};

inline VariantMeta variant_meta(ProductVariant v) {
    switch (v) {
    case ProductVariant::I:
        return {SignPair::pp(), SignPair::pp(), SignPair::pp(), false, false, false, +1};
    case ProductVariant::II:
        return {SignPair::pm(), SignPair::mp(), SignPair::mm(), true, true, false, +1};
    case ProductVariant::III:
        return {SignPair::pp(), SignPair::mp(), SignPair::mp(), false, true, true, -1};
    case ProductVariant::IV:
        return {SignPair::mp(), SignPair::mm(), SignPair::mp(), true, false, true, -1};
    }
    throw DomainError("variant_meta: unknown variant");
}

// a_p(x,y) with the support rule sgn(xyz) = -1 => 0 applied on top of the
// user function.
struct AProvider {
    std::function<double(const LatticePoint &, const LatticePoint &, const LatticePoint &, double)>
        a;

    double value(const LatticePoint &p, const LatticePoint &x, const LatticePoint &y,
                 double q) const {
        if (!a) throw MissingProvider("AProvider: no a-function configured");
        if (p.sign * x.sign * y.sign < 0) return 0.0;
        return a(p, x, y, q);
    }
};

struct CoefficientSet {
    ProductVariant variant = ProductVariant::I;
    LatticePoint p1{1, 0};
    LatticePoint p2{1, 0};
    std::vector<std::pair<LatticePoint, double>> values; // enumerate order
    std::string provenance; // "analytic" or "fitted"

    double at(const LatticePoint &p) const {
        for (const auto &[pt, c] : values)
            if (pt == p) return c;
        return 0.0;
    }
};

namespace detail {

inline std::optional<LatticePoint> negated(const LatticePoint &p) {
    if (p.sign == 1 && p.k < 1) return std::nullopt; // -q^k with k < 1 is not in I_q
    return LatticePoint(-p.sign, p.k);
}

inline std::vector<LatticePoint> support_points(ProductVariant v, const LatticePoint &p1,
                                                const LatticePoint &p2,
                                                const LatticeWindow &window) {
    VariantMeta m = variant_meta(v);
    int want = m.support_sign * p1.sign * p2.sign;
    std::vector<LatticePoint> out;
    for (const auto &p : enumerate(window)) {
        if (p.sign != want) continue;
        if (m.sum_inside_unit && !p.inside_unit_interval()) continue;
        out.push_back(p);
    }
    return out;
}

inline bool legs_vanish(ProductVariant v, const LatticePoint &p1, const LatticePoint &p2) {
    VariantMeta m = variant_meta(v);
    if (m.left_odd && !p1.inside_unit_interval()) return true;
    if (m.right_odd && !p2.inside_unit_interval()) return true;
    return false;
}

} // namespace detail

// Coefficients from the four quadratic identities in the a-function:
//   A p0^2 = a_{p0}(p1,p2)^2
//   B p0^2 = a_{p0}(p1,p2) a_{p0}(-p1,-p2)
//   C p0^2 = a_{p0}(p1,-p2) a_{-p0}(p1,p2)
//   D p0^2 = a_{p0}(-p1,p2) a_{-p0}(p1,p2)
inline CoefficientSet coefficients_analytic(ProductVariant v, const LatticePoint &p1,
                                            const LatticePoint &p2, const AProvider &provider,
                                            const LatticeWindow &window, double q) {
    CoefficientSet out{v, p1, p2, {}, "analytic"};
    auto support = detail::support_points(v, p1, p2, window);
    if (detail::legs_vanish(v, p1, p2)) {
        for (const auto &p : support) out.values.emplace_back(p, 0.0);
        return out;
    }
    for (const auto &p : support) {
        double w = p.weight(q);
        double c = 0.0;
        auto np1 = detail::negated(p1), np2 = detail::negated(p2), np = detail::negated(p);
        switch (v) {
        case ProductVariant::I: {
            double a = provider.value(p, p1, p2, q);
            c = a * a / w;
            break;
        }
        case ProductVariant::II: {
            if (np1 && np2)
                c = provider.value(p, p1, p2, q) * provider.value(p, *np1, *np2, q) / w;
            break;
        }
        case ProductVariant::III: {
            if (np2 && np)
                c = provider.value(p, p1, *np2, q) * provider.value(*np, p1, p2, q) / w;
            break;
        }
        case ProductVariant::IV: {
            if (np1 && np)
                c = provider.value(p, *np1, p2, q) * provider.value(*np, p1, p2, q) / w;
            break;
        }
        }
        out.values.emplace_back(p, c);
    }
    return out;
}

namespace detail {

// Phase aligning one (x, j) equation: conj of the target-branch row phase,
// so aligned rows are real-valued and identical across j.
inline cplx equation_phase(int j, const VariantMeta &m, int support_sign_value,
                           const SpectrumPoint &pt, const KernelContext &ctx) {
    return kernel_row_phase(j, m.target, support_sign_value, pt, ctx);
}

struct ProductSystem {
    Eigen::MatrixXd A;  // stacked Re/Im aligned equations
    Eigen::VectorXd b;
    std::vector<LatticePoint> support;
};

// Assembles aligned least-squares equations LHS_j(x) = sum_c K_j^T(p0;x) p0^2
// over the given principal nodes, both j stacked. The j = 2 block carries an
// unknown relative sign (the display's j-sign is absorbed by the
// indeterminate phase ratios), resolved by trying both.
inline ProductSystem build_product_system(ProductVariant v, const LatticePoint &p1,
                                          const LatticePoint &p2,
                                          const std::vector<double> &xs,
                                          const LatticeWindow &window, const KernelContext &ctx,
                                          int sign_j2) {
    VariantMeta m = variant_meta(v);
    ProductSystem sys;
    sys.support = support_points(v, p1, p2, window);
    const int ns = static_cast<int>(sys.support.size());
    const int want = m.support_sign * p1.sign * p2.sign;
    const double q = ctx.qb.q;
    const int rows_per_eq = 2;
    sys.A.resize(2 * rows_per_eq * xs.size(), ns);
    sys.b.resize(2 * rows_per_eq * xs.size());
    size_t r = 0;
    for (double x : xs) {
        SpectrumPoint pt = SpectrumPoint::principal(x, 1);
        for (int j = 1; j <= 2; ++j) {
            double js = (j == 2) ? sign_j2 : 1;
            cplx u = std::conj(equation_phase(j, m, want, pt, ctx));
            cplx lhs = kernel(j, m.left, p1, pt, ctx) * kernel(j, m.right, p2, pt, ctx) * u * js;
            for (int c = 0; c < ns; ++c) {
                cplx kv = kernel(j, m.target, sys.support[c], pt, ctx) * u;
                sys.A(r, c) = kv.real() * sys.support[c].weight(q);
                sys.A(r + 1, c) = kv.imag() * sys.support[c].weight(q);
            }
            sys.b(r) = lhs.real();
            sys.b(r + 1) = lhs.imag();
            r += 2;
        }
    }
    return sys;
}

inline Eigen::VectorXd solve_equilibrated(Eigen::MatrixXd A, const Eigen::VectorXd &b,
                                          bool nonneg, double &condition) {
    const int n = static_cast<int>(A.cols());
    Eigen::VectorXd cs(n);
    for (int c = 0; c < n; ++c) {
        double nn = A.col(c).norm();
        cs(c) = nn > 0.0 ? 1.0 / nn : 1.0;
        A.col(c) *= cs(c);
    }
    LsqResult r = nonneg ? nnls(A, b) : least_squares(A, b);
    condition = r.condition;
    return r.x.cwiseProduct(cs);
}

} // namespace detail

struct CoefficientFitResult {
    CoefficientSet coefficients;
    FitReport report;
};

struct ProductFitOptions {
    std::optional<bool> magnitude_mode; // default: unit provider => true
    double residual_ceiling = 1e-3;
    double cond_limit = 1e10;
};

// Least-squares coefficient determination over a principal x-grid, both j
// stacked. Variant I solves under the nonnegativity constraint (its
// coefficients are squares); the others are unconstrained.
inline CoefficientFitResult coefficients_fitted(ProductVariant v, const LatticePoint &p1,
                                                const LatticePoint &p2,
                                                const std::vector<double> &x_grid,
                                                const LatticeWindow &window,
                                                const KernelContext &ctx,
                                                const ProductFitOptions &opts = {}) {
    CoefficientFitResult out;
    out.coefficients.variant = v;
    out.coefficients.p1 = p1;
    out.coefficients.p2 = p2;

    auto support = detail::support_points(v, p1, p2, window);
    if (x_grid.size() < 2 * support.size())
        throw DomainError("coefficients_fitted: grid must have at least 2x the support size");

    if (detail::legs_vanish(v, p1, p2)) {
        out.coefficients.provenance = "fitted";
        for (const auto &p : support) out.coefficients.values.emplace_back(p, 0.0);
        out.report.detail("zero_functional_leg", 1.0);
        return out;
    }

    double best_res = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_c;
    double best_cond = 0.0;
    for (int sj2 : {+1, -1}) {
        detail::ProductSystem sys = detail::build_product_system(v, p1, p2, x_grid, window, ctx, sj2);
        double cond = 0.0;
        Eigen::VectorXd c = detail::solve_equilibrated(sys.A, sys.b, false, cond);
        double res = (sys.A * c - sys.b).norm() / std::max(sys.b.norm(), 1e-300);
        if (res < best_res) {
            best_res = res;
            best_c = c;
            best_cond = cond;
        }
    }

    if (best_cond > opts.cond_limit)
        throw IllConditioned("coefficients_fitted: conditioning limit exceeded", best_cond);
    if (best_res > opts.residual_ceiling)
        throw ResidualTooLarge("coefficients_fitted: training residual above ceiling", best_res);

    // deterministic sign normalization for the unconstrained variants
    if (v != ProductVariant::I) {
        double s = 0.0;
        for (size_t i = 0; i < support.size(); ++i)
            s += best_c(i) * support[i].weight(ctx.qb.q);
        if (s < 0.0) best_c = -best_c;
    }

    out.coefficients.provenance = "fitted";
    for (size_t i = 0; i < support.size(); ++i)
        out.coefficients.values.emplace_back(support[i], best_c(i));
    out.report.max_residual = best_res;
    out.report.rms_residual = best_res;
    out.report.condition = best_cond;
    out.report.detail("support_size", static_cast<double>(support.size()));
    return out;
}

// Held-out residuals of LHS - RHS per j over the given spectrum points.
// Discrete points additionally record the triviality pattern: variants
// II-IV equate 0 to 0 there.
inline FitReport verify(ProductVariant v, const LatticePoint &p1, const LatticePoint &p2,
                        const CoefficientSet &coeffs, const std::vector<SpectrumPoint> &heldout,
                        const KernelContext &ctx) {
    VariantMeta m = variant_meta(v);
    const double q = ctx.qb.q;
    FitReport rep;
    double num = 0.0, den = 0.0, worst = 0.0;
    size_t count = 0;
    double triviality_scale = 0.0;

    for (const auto &pt : heldout) {
        bool discrete = pt.kind == SpectrumPoint::Kind::discrete_pt;
        for (int j = 1; j <= 2; ++j) {
            cplx lhs = kernel(j, m.left, p1, pt, ctx) * kernel(j, m.right, p2, pt, ctx);
            cplx rhs = 0.0;
            for (const auto &[p0, c] : coeffs.values)
                rhs += c * kernel(j, m.target, p0, pt, ctx) * p0.weight(q);
            if (discrete && v != ProductVariant::I) {
                triviality_scale = std::max({triviality_scale, std::abs(lhs), std::abs(rhs)});
                continue;
            }
            // the j-relative and row phases drop out of magnitudes
            double d = std::abs(std::abs(lhs) - std::abs(rhs));
            num += d * d;
            den += std::norm(lhs);
            worst = std::max(worst, d);
            ++count;
        }
    }
    rep.max_residual = worst;
    rep.rms_residual = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    rep.condition = 0.0;
    rep.detail("points", static_cast<double>(count));
    if (triviality_scale > 0.0 || v != ProductVariant::I)
        rep.detail("discrete_triviality_scale", triviality_scale);
    return rep;
}

struct NormalizationResult {
    double deviation;  // sum c p0^2 - p1^2 p2^2
    double target;     // p1^2 p2^2
    double leak_bound; // estimated truncation leakage outside the window
};

// Applying the variant-I formula to the constant function 1 forces
// sum A_{p0} p0^2 = p1^2 p2^2, up to mass outside the window.
inline NormalizationResult normalization_check(const CoefficientSet &coeffs, double q,
                                               double fit_rms = 0.0) {
    if (coeffs.variant != ProductVariant::I)
        throw DomainError("normalization_check: variant I coefficients required");
    double s = 0.0;
    double total_abs = 0.0;
    std::vector<double> masses;
    for (const auto &[p, c] : coeffs.values) {
        double t = c * p.weight(q);
        s += t;
        total_abs += std::abs(t);
        masses.push_back(std::abs(t));
    }
    // geometric tail extrapolation at both window edges
    double leak = 0.0;
    if (masses.size() >= 3) {
        auto edge = [&](size_t last, size_t prev) {
            double a = masses[last], b = masses[prev];
            if (a <= 0.0 || b <= 0.0) return 0.0;
            double r = std::min(a / b, 0.9);
            return a * r / (1.0 - r);
        };
        leak += edge(0, 1);
        leak += edge(masses.size() - 1, masses.size() - 2);
    }
    leak += 2.0 * fit_rms * total_abs;
    NormalizationResult out;
    out.target = coeffs.p1.weight(q) * coeffs.p2.weight(q);
    out.deviation = s - out.target;
    out.leak_bound = leak;
    return out;
}

} // namespace qsphere
