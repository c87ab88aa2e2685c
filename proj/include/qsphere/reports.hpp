#pragma once

// Run configuration and the machine-readable verification suites shared by
// the CLI and the acceptance tests. Suites are deterministic functions of
// the configuration (including the seed) and emit ordered JSON.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qsphere/kernels.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/product.hpp"
#include "qsphere/qseries.hpp"
#include "qsphere/serialization.hpp"
#include "qsphere/transform.hpp"

namespace qsphere {

struct RunConfig {
    double q = 0.5;
    int k_min = -6;
    int k_max = 6;
    int nodes = 64;
    int n_max = 4;
    double tol = 1e-8;
    std::uint64_t seed = 12345;
    std::string phase_provider = "unit"; // unit | fitted | <path to JSON>
    std::string a_provider;              // empty | <path to JSON>

    LatticeWindow window() const { return LatticeWindow(k_min, k_max); }
    SpectralGrid grid() const { return SpectralGrid::gauss(nodes, n_max); }

    KernelContext context() const {
        KernelContext ctx{QBase(q)};
        if (phase_provider == "unit" || phase_provider.empty()) {
            ctx.phases = PhaseProvider::unit();
        } else if (phase_provider == "fitted") {
            std::vector<SpectrumPoint> pts;
            for (const auto &n : grid().principal) pts.push_back(SpectrumPoint::principal(n.x, 1));
            ctx.phases = fit_phases(pts, window(), ctx).provider;
        } else {
            ctx.phases = phase_provider_from_json(load_json_file(phase_provider));
        }
        return ctx;
    }

    json to_json() const {
        return json{{"q", q},           {"k_min", k_min},
                    {"k_max", k_max},   {"nodes", nodes},
                    {"n_max", n_max},   {"tol", tol},
                    {"seed", seed},     {"phase_provider", phase_provider},
                    {"a_provider", a_provider}};
    }

    static RunConfig from_json(const json &j) {
        RunConfig c;
        if (j.contains("q")) c.q = j.at("q").get<double>();
        if (j.contains("k_min")) c.k_min = j.at("k_min").get<int>();
        if (j.contains("k_max")) c.k_max = j.at("k_max").get<int>();
        if (j.contains("nodes")) c.nodes = j.at("nodes").get<int>();
        if (j.contains("n_max")) c.n_max = j.at("n_max").get<int>();
        if (j.contains("tol")) c.tol = j.at("tol").get<double>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("phase_provider")) c.phase_provider = j.at("phase_provider").get<std::string>();
        if (j.contains("a_provider")) c.a_provider = j.at("a_provider").get<std::string>();
        return c;
    }
};

namespace suite {

struct Item {
    std::string name;
    double value;
    double threshold;
    bool pass;
    std::string note;
};

inline json items_to_json(const std::string &suite_name, const std::vector<Item> &items) {
    bool all = true;
    json arr = json::array();
    for (const auto &it : items) {
        all = all && it.pass;
        json e{{"name", it.name}, {"value", it.value}, {"threshold", it.threshold}, {"pass", it.pass}};
        if (!it.note.empty()) e["note"] = it.note;
        arr.push_back(e);
    }
    return json{{"suite", suite_name}, {"items", arr}, {"pass", all}};
}

// uniform draw in [lo,hi) from a seeded engine; deterministic across runs
inline double udraw(std::mt19937_64 &rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

// q-series identity battery: q-binomial theorem, Pochhammer splitting,
// index-shift identity, and the continuation consistency check.
inline json qseries(const RunConfig &cfg) {
    QBase qb(cfg.q);
    std::mt19937_64 rng(cfg.seed);
    std::vector<Item> items;

    double worst_binom = 0.0, worst_split = 0.0, worst_shift = 0.0;
    for (int it = 0; it < 200; ++it) {
        cplx a(udraw(rng, -0.9, 0.9), udraw(rng, -0.9, 0.9));
        cplx z(udraw(rng, -0.7, 0.7), udraw(rng, -0.5, 0.5));
        double base = udraw(rng, 0.2, 0.8);
        QBase qbr(base);
        cplx lhs = phi_series(HyperSeriesSpec{{a}, {}, base, z}, qbr) * qpoch_infinite(z, base, qbr);
        cplx rhs = qpoch_infinite(a * z, base, qbr);
        worst_binom = std::max(worst_binom, std::abs(lhs - rhs) / std::max(1e-30, std::abs(rhs)));

        cplx l2 = qpoch_infinite(a, base, qbr);
        cplx r2 = qpoch_infinite(a, base * base, qbr) * qpoch_infinite(a * base, base * base, qbr);
        worst_split = std::max(worst_split, std::abs(l2 - r2) / std::max(1e-30, std::abs(r2)));

        long n = static_cast<long>(udraw(rng, 0.0, 8.0));
        long m = static_cast<long>(udraw(rng, 0.0, 8.0));
        cplx l3 = qpoch_finite(a, base, n + m);
        cplx r3 = qpoch_finite(a, base, n) * qpoch_finite(a * std::pow(base, double(n)), base, m);
        worst_shift = std::max(worst_shift, std::abs(l3 - r3) / std::max(1e-30, std::abs(r3)));
    }
    items.push_back({"q_binomial_theorem_max_rel", worst_binom, 1e-10, worst_binom <= 1e-10, ""});
    items.push_back({"pochhammer_splitting_max_rel", worst_split, 1e-10, worst_split <= 1e-10, ""});
    items.push_back({"index_shift_max_rel", worst_shift, 1e-12, worst_shift <= 1e-12, ""});

    // continuation consistency inside the disk, avoiding the logarithmic case
    double worst_cont = 0.0;
    int done = 0;
    while (done < 100) {
        cplx a(udraw(rng, 0.3, 1.8), udraw(rng, -0.6, 0.6));
        cplx b(udraw(rng, 0.3, 1.2), udraw(rng, -0.6, 0.6));
        cplx c(udraw(rng, -0.8, 0.8), udraw(rng, -0.4, 0.4));
        double r = udraw(rng, 0.3, 0.95);
        double th = udraw(rng, 0.0, 2.0 * M_PI);
        cplx z = std::polar(r, th);
        cplx w = c * qb.q / (a * b * z);
        if (std::abs(w) > 0.9) continue;
        cplx ab = a / b;
        if (detail::pole_index(ab, qb.q, 1e-3) || detail::pole_index(1.0 / ab, qb.q, 1e-3)) continue;
        if (std::abs(ab - 1.0) < 1e-2) continue;
        if (detail::pole_index(c, qb.q, 1e-3)) continue;
        try {
            cplx direct = phi21_series(a, b, c, qb.q, z, qb);
            cplx cont = phi21_continued(a, b, c, qb.q, z, qb);
            worst_cont = std::max(worst_cont, std::abs(direct - cont) / std::max(1e-30, std::abs(direct)));
            ++done;
        } catch (const ContinuationSingular &) {
            continue;
        }
    }
    items.push_back({"continuation_vs_series_max_rel", worst_cont, 1e-8, worst_cont <= 1e-8, ""});
    return items_to_json("qseries", items);
}

// Magnitude symmetry |K_j^{s,t}(p;x)| = |K_j^{-s,-t}(p;-x)| plus the
// removable-singularity sweep (finite everywhere, exact zeros at lambda=1
// on the negative branch).
inline json symmetry(const RunConfig &cfg, int x_count = 32) {
    KernelContext ctx = cfg.context();
    auto pts = enumerate(cfg.window());
    std::vector<Item> items;

    double scale = 0.0, worst = 0.0;
    auto xs = gauss_legendre(x_count, 0.0, 1.0);
    const std::array<SignPair, 4> pairs = {SignPair::pp(), SignPair::pm(), SignPair::mp(),
                                           SignPair::mm()};
    for (const auto &node : xs) {
        SpectrumPoint pt = SpectrumPoint::principal(node.x, 1);
        cplx lam = lambda_of(pt, ctx.qb);
        for (int j = 1; j <= 2; ++j)
            for (const auto &sp : pairs)
                for (const auto &p : pts) {
                    cplx a = detail::kernel_base(j, sp, p, lam, ctx.consts, ctx.qb);
                    cplx b = detail::kernel_base(j, SignPair(-sp.sigma, -sp.tau), p, -lam,
                                                 ctx.consts, ctx.qb);
                    scale = std::max(scale, std::abs(a));
                    worst = std::max(worst, std::abs(std::abs(a) - std::abs(b)));
                }
    }
    double rel = scale > 0.0 ? worst / scale : 0.0;
    items.push_back({"magnitude_symmetry_max_rel", rel, 1e-8, rel <= 1e-8, ""});

    // removable singularities at lambda = 1
    bool all_finite = true;
    double neg_zero = 0.0;
    for (const auto &p : pts) {
        cplx v = s_function(SVariant::lower, cplx(1.0), p, ctx.consts, ctx.qb);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) all_finite = false;
        if (p.sign < 0) neg_zero = std::max(neg_zero, std::abs(v));
    }
    items.push_back({"lambda1_negative_branch_abs", neg_zero, 0.0, neg_zero == 0.0, "exact zero required"});

    bool no_nan = true;
    auto sweep = gauss_legendre(64, 0.0, 1.0);
    for (const auto &node : sweep) {
        SpectrumPoint pt = SpectrumPoint::principal(node.x, 1);
        for (int j = 1; j <= 2; ++j)
            for (const auto &sp : pairs)
                for (const auto &p : pts) {
                    cplx v = kernel(j, sp, p, pt, ctx);
                    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) no_nan = false;
                }
    }
    items.push_back({"sweep_all_finite", (all_finite && no_nan) ? 1.0 : 0.0, 1.0, all_finite && no_nan, ""});
    return items_to_json("symmetry", items);
}

// Discrete-series vanishing for every sign pair except (+,+), and the
// triviality of variants II-IV at discrete points.
inline json triviality(const RunConfig &cfg) {
    KernelContext ctx = cfg.context();
    auto pts = enumerate(cfg.window());
    std::vector<Item> items;

    double scale = 0.0, worst = 0.0;
    for (int n = 1; n <= cfg.n_max; ++n) {
        SpectrumPoint pt = SpectrumPoint::discrete(n, cfg.q);
        for (int j = 1; j <= 2; ++j)
            for (const auto &p : pts) {
                scale = std::max(scale, std::abs(kernel(j, SignPair::pp(), p, pt, ctx)));
                for (const auto &sp : {SignPair::pm(), SignPair::mp(), SignPair::mm()})
                    worst = std::max(worst, std::abs(kernel(j, sp, p, pt, ctx)));
            }
    }
    double rel = scale > 0.0 ? worst / scale : worst;
    items.push_back({"discrete_vanishing_max_rel", rel, 1e-10, rel <= 1e-10, ""});

    // variants II-IV at a discrete point: both sides are zero
    double lhs_scale = 0.0;
    SpectrumPoint pt = SpectrumPoint::discrete(1, cfg.q);
    for (ProductVariant v : {ProductVariant::II, ProductVariant::III, ProductVariant::IV}) {
        VariantMeta m = variant_meta(v);
        LatticePoint a(1, 1), b(-1, 1);
        for (int j = 1; j <= 2; ++j) {
            lhs_scale = std::max(lhs_scale,
                                 std::abs(kernel(j, m.left, a, pt, ctx) * kernel(j, m.right, b, pt, ctx)));
            for (const auto &p : pts)
                if (!m.sum_inside_unit || p.inside_unit_interval())
                    lhs_scale = std::max(lhs_scale, std::abs(kernel(j, m.target, p, pt, ctx)));
        }
    }
    items.push_back({"mixed_variants_discrete_zero", lhs_scale, 1e-10, lhs_scale <= 1e-10,
                     "variants II-IV equate 0 to 0 at discrete points"});
    return items_to_json("triviality", items);
}

// Density fit and Gram health: the Plancherel surrogate.
inline json plancherel(const RunConfig &cfg) {
    KernelContext ctx = cfg.context();
    std::vector<Item> items;
    SpectralGrid grid = cfg.grid();
    LatticeWindow win = cfg.window();

    DensityFitResult fit = fit_density(grid, win, ctx);
    double dmin = 0.0;
    for (double v : fit.density.principal) dmin = std::min(dmin, v);
    for (double v : fit.density.discrete) dmin = std::min(dmin, v);
    items.push_back({"density_min", dmin, 0.0, dmin >= 0.0, "d >= 0"});

    GramReport gram = roundtrip_report(win, grid, fit.density, ctx);
    items.push_back({"gram_even_fixed_sign_opnorm", gram.even_fixed_sign_opnorm, 1e-3,
                     gram.even_fixed_sign_opnorm <= 1e-3, ""});

    // full-lattice deviation with fitted phases
    RunConfig fitted_cfg = cfg;
    fitted_cfg.phase_provider = "fitted";
    KernelContext fctx = fitted_cfg.context();
    DensityFitResult ffit = fit_density(grid, win, fctx);
    GramReport fgram = roundtrip_report(win, grid, ffit.density, fctx);
    items.push_back({"gram_full_opnorm_fitted_phases", fgram.full_opnorm, 5e-3,
                     fgram.full_opnorm <= 5e-3, ""});
    items.push_back({"fit_condition", fit.report.condition, 1e10, fit.report.condition <= 1e10, ""});
    json out = items_to_json("plancherel", items);
    out["density"] = to_json(fit.density);
    out["fit_report"] = to_json(fit.report);
    out["gram"] = json{{"even_opnorm", gram.even_opnorm},
                       {"odd_opnorm", gram.odd_opnorm},
                       {"full_opnorm", gram.full_opnorm},
                       {"max_entry_dev", gram.max_entry_dev}};
    return out;
}

// Seeded (p1,p2) pairs for one product variant, all legs inside the window
// margin and odd legs inside (-1,1).
inline std::vector<std::pair<LatticePoint, LatticePoint>> seeded_pairs(ProductVariant v,
                                                                       const RunConfig &cfg,
                                                                       int count) {
    VariantMeta m = variant_meta(v);
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * (static_cast<int>(v) + 1)));
    std::vector<std::pair<LatticePoint, LatticePoint>> out;
    auto draw_leg = [&](bool odd) {
        int kl = odd ? 1 : std::max(cfg.k_min + 2, -2);
        int kh = std::min(cfg.k_max - 2, 4);
        int k = kl + static_cast<int>(rng() % static_cast<std::uint64_t>(kh - kl + 1));
        int sign = (k >= 1 && (rng() & 1)) ? -1 : 1;
        return LatticePoint(sign, k);
    };
    while (static_cast<int>(out.size()) < count) {
        LatticePoint a = draw_leg(m.left_odd), b = draw_leg(m.right_odd);
        out.emplace_back(a, b);
    }
    return out;
}

// Product-formula suite: fit on even-indexed nodes, verify on odd-indexed
// ones; support invariance and variant-I positivity checks.
inline json product(const RunConfig &cfg, int pairs_per_variant = 10) {
    KernelContext ctx = cfg.context();
    LatticeWindow win = cfg.window();
    auto nodes = gauss_legendre(cfg.nodes, 0.0, 1.0);
    std::vector<double> train_x, hold_x;
    for (size_t i = 0; i < nodes.size(); ++i)
        ((i % 2 == 0) ? train_x : hold_x).push_back(nodes[i].x);

    std::vector<Item> items;
    double worst_holdout = 0.0, worst_offsupport = 0.0, worst_negI = 0.0;
    for (ProductVariant v :
         {ProductVariant::I, ProductVariant::II, ProductVariant::III, ProductVariant::IV}) {
        double vworst = 0.0;
        for (const auto &[p1, p2] : seeded_pairs(v, cfg, pairs_per_variant)) {
            CoefficientFitResult fit = coefficients_fitted(v, p1, p2, train_x, win, ctx);
            std::vector<SpectrumPoint> held;
            for (double x : hold_x) held.push_back(SpectrumPoint::principal(x, 1));
            FitReport rep = verify(v, p1, p2, fit.coefficients, held, ctx);
            vworst = std::max(vworst, rep.rms_residual);

            if (v == ProductVariant::I) {
                double cmax = 0.0, cmin = 0.0;
                for (const auto &[p, c] : fit.coefficients.values) {
                    cmax = std::max(cmax, std::abs(c));
                    cmin = std::min(cmin, c);
                }
                if (cmax > 0.0) worst_negI = std::max(worst_negI, -cmin / cmax);
            }
        }
        items.push_back({std::string("heldout_rms_variant_") + variant_name(v), vworst, 1e-4,
                         vworst <= 1e-4, ""});
        worst_holdout = std::max(worst_holdout, vworst);
    }

    // support invariance: fit variant I without the sign rule; off-support
    // coefficients must stay negligible
    {
        LatticePoint p1(-1, 1), p2(-1, 2);
        auto all_pts = enumerate(win);
        VariantMeta m = variant_meta(ProductVariant::I);
        int want = m.support_sign * p1.sign * p2.sign;
        // build the unconstrained system over the full window
        const double q = ctx.qb.q;
        Eigen::MatrixXd A(4 * train_x.size(), all_pts.size());
        Eigen::VectorXd b(4 * train_x.size());
        size_t r = 0;
        for (double x : train_x) {
            SpectrumPoint pt = SpectrumPoint::principal(x, 1);
            for (int j = 1; j <= 2; ++j) {
                cplx u = std::conj(detail::equation_phase(j, m, want, pt, ctx));
                int js = (j == 2) ? -1 : 1; // resolved j-sign for the even target
                cplx lhs = kernel(j, m.left, p1, pt, ctx) * kernel(j, m.right, p2, pt, ctx) * u *
                           static_cast<double>(js);
                for (size_t c = 0; c < all_pts.size(); ++c) {
                    cplx kv = kernel(j, m.target, all_pts[c], pt, ctx) * u;
                    A(r, c) = kv.real() * all_pts[c].weight(q);
                    A(r + 1, c) = kv.imag() * all_pts[c].weight(q);
                }
                b(r) = lhs.real();
                b(r + 1) = lhs.imag();
                r += 2;
            }
        }
        double cond = 0.0;
        Eigen::VectorXd c = detail::solve_equilibrated(A, b, false, cond);
        double inmax = 0.0, outmax = 0.0;
        for (size_t i = 0; i < all_pts.size(); ++i) {
            if (all_pts[i].sign == want)
                inmax = std::max(inmax, std::abs(c(i)));
            else
                outmax = std::max(outmax, std::abs(c(i)));
        }
        double ratio = inmax > 0.0 ? outmax / inmax : 0.0;
        worst_offsupport = ratio;
        items.push_back({"off_support_ratio_unconstrained", ratio, 1e-6, ratio <= 1e-6, ""});
    }
    items.push_back({"variant_I_negativity", worst_negI, 1e-8, worst_negI <= 1e-8, ""});

    // normalization for one interior variant-I pair
    {
        LatticePoint p1(1, 1), p2(-1, 2);
        CoefficientFitResult fit =
            coefficients_fitted(ProductVariant::I, p1, p2, train_x, win, ctx);
        NormalizationResult norm =
            normalization_check(fit.coefficients, cfg.q, fit.report.rms_residual);
        bool pass = std::abs(norm.deviation) <= norm.leak_bound;
        items.push_back({"normalization_abs_deviation", std::abs(norm.deviation), norm.leak_bound,
                         pass, "threshold is the reported truncation-leak bound"});
    }
    return items_to_json("product", items);
}

inline json run_all(const RunConfig &cfg) {
    json suites = json::array();
    suites.push_back(qseries(cfg));
    suites.push_back(symmetry(cfg));
    suites.push_back(triviality(cfg));
    suites.push_back(product(cfg));
    suites.push_back(plancherel(cfg));
    bool pass = true;
    for (const auto &s : suites) pass = pass && s.at("pass").get<bool>();
    return json{{"config", cfg.to_json()}, {"suites", suites}, {"pass", pass}};
}

} // namespace suite

} // namespace qsphere
