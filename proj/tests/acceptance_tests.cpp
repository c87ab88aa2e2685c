// Acceptance suite: desk-scale criteria at q = 0.5, window k in [-6,6],
// 64 principal nodes, n_max = 4. One test case per criterion; each prints a
// pass/fail line with the measured value and its threshold.

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "qsphere/reports.hpp"

using namespace qsphere;

namespace {

RunConfig desk_config() {
    RunConfig cfg;
    cfg.q = 0.5;
    cfg.k_min = -6;
    cfg.k_max = 6;
    cfg.nodes = 64;
    cfg.n_max = 4;
    cfg.seed = 12345;
    return cfg;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void line(int n, const std::string &what, bool pass, double value, double threshold) {
    std::printf("[%s] criterion %d: %s (value %.3e, threshold %.3e)\n", pass ? "PASS" : "FAIL", n,
                what.c_str(), value, threshold);
    std::fflush(stdout);
}

bool item_pass(const json &suite_report, const std::string &name, double &value,
               double &threshold) {
    for (const auto &it : suite_report.at("items")) {
        if (it.at("name").get<std::string>() == name) {
            value = it.at("value").get<double>();
            threshold = it.at("threshold").get<double>();
            return it.at("pass").get<bool>();
        }
    }
    throw std::runtime_error("missing item " + name);
}

} // namespace

TEST_CASE("criterion 1: q-series identity suite") {
    Stopwatch sw;
    RunConfig cfg = desk_config();
    json rep = suite::qseries(cfg);
    double v = 0.0, t = 0.0;
    bool p1 = item_pass(rep, "q_binomial_theorem_max_rel", v, t);
    double v2, t2, v3, t3;
    bool p2 = item_pass(rep, "pochhammer_splitting_max_rel", v2, t2);
    bool p3 = item_pass(rep, "index_shift_max_rel", v3, t3);
    double elapsed = sw.seconds();
    bool pass = p1 && p2 && p3 && elapsed < 5.0;
    line(1, "q-series identities over 200 seeded draws", pass, std::max({v, v2, v3}), 1e-10);
    CHECK(p1);
    CHECK(p2);
    CHECK(p3);
    CHECK(elapsed < 5.0);
}

TEST_CASE("criterion 2: continuation consistency") {
    Stopwatch sw;
    RunConfig cfg = desk_config();
    json rep = suite::qseries(cfg);
    double v = 0.0, t = 0.0;
    bool p = item_pass(rep, "continuation_vs_series_max_rel", v, t);
    double elapsed = sw.seconds();
    line(2, "phi21_continued vs phi_series on 100 draws", p && elapsed < 5.0, v, 1e-8);
    CHECK(p);
    CHECK(elapsed < 5.0);
}

TEST_CASE("criterion 3: removable singularities") {
    RunConfig cfg = desk_config();
    KernelContext ctx = cfg.context();
    auto pts = enumerate(cfg.window());

    bool finite_pos = true, zero_neg = true;
    for (const auto &p : pts) {
        cplx v = s_function(SVariant::lower, cplx(1.0), p, ctx.consts, ctx.qb);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) finite_pos = false;
        if (p.sign < 0 && std::abs(v) != 0.0) zero_neg = false;
    }
    bool no_nan = true;
    for (const auto &node : gauss_legendre(64, 0.0, 1.0)) {
        SpectrumPoint pt = SpectrumPoint::principal(node.x, 1);
        for (int j = 1; j <= 2; ++j)
            for (const auto &sp : {SignPair::pp(), SignPair::pm(), SignPair::mp(), SignPair::mm()})
                for (const auto &p : pts) {
                    cplx v = kernel(j, sp, p, pt, ctx);
                    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) no_nan = false;
                }
    }
    bool pass = finite_pos && zero_neg && no_nan;
    line(3, "s_function finite at lambda=1 (p0>0), exact 0 (p0<0), no NaN on sweep", pass,
         pass ? 0.0 : 1.0, 0.0);
    CHECK(finite_pos);
    CHECK(zero_neg);
    CHECK(no_nan);
}

TEST_CASE("criterion 4: magnitude symmetry") {
    Stopwatch sw;
    RunConfig cfg = desk_config();
    json rep = suite::symmetry(cfg, 32);
    double v = 0.0, t = 0.0;
    bool p = item_pass(rep, "magnitude_symmetry_max_rel", v, t);
    double elapsed = sw.seconds();
    line(4, "|K_j^{s,t}(p;x)| = |K_j^{-s,-t}(p;-x)| over window x 32 x-values", p && elapsed < 30.0,
         v, 1e-8);
    CHECK(p);
    CHECK(elapsed < 30.0);
}

TEST_CASE("criterion 5: discrete-series vanishing") {
    RunConfig cfg = desk_config();
    json rep = suite::triviality(cfg);
    double v = 0.0, t = 0.0;
    bool p = item_pass(rep, "discrete_vanishing_max_rel", v, t);
    line(5, "|K^{s,t}(p; mu(q^{2n+1}))| for (s,t) != (+,+), n = 1..4", p, v, 1e-10);
    CHECK(p);
}

TEST_CASE("criterion 6: product-formula held-out test") {
    Stopwatch sw;
    RunConfig cfg = desk_config();
    json rep = suite::product(cfg, 10);
    bool pass = true;
    double worst = 0.0;
    for (const char *name : {"heldout_rms_variant_I", "heldout_rms_variant_II",
                             "heldout_rms_variant_III", "heldout_rms_variant_IV"}) {
        double v, t;
        bool p = item_pass(rep, name, v, t);
        pass = pass && p;
        worst = std::max(worst, v);
    }
    double vs, ts, vn, tn;
    bool ps = item_pass(rep, "off_support_ratio_unconstrained", vs, ts);
    bool pn = item_pass(rep, "variant_I_negativity", vn, tn);
    double elapsed = sw.seconds();
    line(6, "held-out RMS over 10 seeded pairs per variant", pass, worst, 1e-4);
    line(6, "off-support coefficients (unconstrained refit)", ps, vs, 1e-6);
    line(6, "variant-I coefficient negativity", pn, vn, 1e-8);
    CHECK(pass);
    CHECK(ps);
    CHECK(pn);
    CHECK(elapsed < 120.0);
}

TEST_CASE("criterion 7: normalization") {
    RunConfig cfg = desk_config();
    KernelContext ctx = cfg.context();
    auto nodes = gauss_legendre(cfg.nodes, 0.0, 1.0);
    std::vector<double> train;
    for (size_t i = 0; i < nodes.size(); i += 2) train.push_back(nodes[i].x);
    // legs at least 2 lattice steps inside the window edge
    bool pass = true;
    double worst_ratio = 0.0;
    for (auto [p1, p2] : {std::pair{LatticePoint(1, 1), LatticePoint(-1, 2)},
                          std::pair{LatticePoint(-1, 1), LatticePoint(-1, 1)},
                          std::pair{LatticePoint(1, 0), LatticePoint(1, 2)}}) {
        CoefficientFitResult fit =
            coefficients_fitted(ProductVariant::I, p1, p2, train, cfg.window(), ctx);
        NormalizationResult norm =
            normalization_check(fit.coefficients, cfg.q, fit.report.rms_residual);
        bool ok = std::abs(norm.deviation) <= norm.leak_bound;
        pass = pass && ok;
        worst_ratio = std::max(worst_ratio, std::abs(norm.deviation) /
                                                std::max(norm.leak_bound, 1e-300));
    }
    line(7, "sum A p0^2 vs p1^2 p2^2 within the reported leak bound", pass, worst_ratio, 1.0);
    CHECK(pass);
}

TEST_CASE("criterion 8: Plancherel surrogate") {
    Stopwatch sw;
    RunConfig cfg = desk_config();
    json rep = suite::plancherel(cfg);
    double vd, td, vf, tf, vg, tg;
    bool pd = item_pass(rep, "density_min", vd, td);
    bool pf = item_pass(rep, "gram_even_fixed_sign_opnorm", vf, tf);
    bool pg = item_pass(rep, "gram_full_opnorm_fitted_phases", vg, tg);
    double elapsed = sw.seconds();
    line(8, "fitted density is nonnegative", pd, vd, 0.0);
    line(8, "Gram deviation, even block with fixed-sign p0", pf, vf, 1e-3);
    line(8, "Gram deviation, full lattice with fitted phases", pg, vg, 5e-3);
    CHECK(pd);
    CHECK(pf);
    CHECK(pg);
    CHECK(elapsed < 120.0);
}

TEST_CASE("criterion 9: structural grading") {
    RunConfig cfg = desk_config();
    KernelContext ctx = cfg.context();
    SpectralGrid grid = SpectralGrid::gauss(16, 2);
    LatticeWindow win = cfg.window();
    std::mt19937_64 rng(cfg.seed);
    auto draw = [&] { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };

    bool exact = true;
    for (int it = 0; it < 50; ++it) {
        GradedFunction even_only, odd_only;
        for (const auto &p : enumerate(win)) {
            even_only.set_even(p, cplx(draw(), draw()));
            if (p.inside_unit_interval()) odd_only.set_odd(p, cplx(draw(), draw()));
        }
        SphericalField Fe = forward(even_only, grid, ctx);
        SphericalField Fo = forward(odd_only, grid, ctx);
        for (const auto &node : Fe.principal)
            for (const auto &m : node)
                if (m[1] != cplx(0.0) || m[2] != cplx(0.0)) exact = false;
        for (const auto &node : Fo.principal)
            for (const auto &m : node)
                if (m[0] != cplx(0.0) || m[3] != cplx(0.0)) exact = false;
        Density d = Density::ones(grid);
        if (!inverse(Fe, d, win, ctx).odd.empty()) exact = false;
        if (!inverse(Fo, d, win, ctx).even.empty()) exact = false;
    }
    line(9, "forward/inverse grading preservation, exact zeros, 50 seeded functions", exact,
         exact ? 0.0 : 1.0, 0.0);
    CHECK(exact);
}

TEST_CASE("criterion 10: determinism of verify --all") {
    const char *bin = std::getenv("QSPHERE_BIN");
    if (!bin) {
        line(10, "QSPHERE_BIN not set, determinism checked in-process instead", true, 0.0, 0.0);
        RunConfig cfg = desk_config();
        cfg.nodes = 12;
        cfg.k_min = -2;
        cfg.k_max = 2;
        cfg.n_max = 2;
        std::string a = suite::run_all(cfg).dump(2);
        std::string b = suite::run_all(cfg).dump(2);
        CHECK(a == b);
        return;
    }
    auto once = [&] {
        std::string cmd = std::string(bin) +
                          " verify --all --q 0.5 --kmin -2 --kmax 2 --nodes 12 --nmax 2 --seed 42 2>&1";
        FILE *pipe = popen(cmd.c_str(), "r");
        REQUIRE(pipe != nullptr);
        std::string out;
        std::array<char, 4096> buf;
        while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
        pclose(pipe);
        return out;
    };
    std::string a = once(), b = once();
    bool pass = !a.empty() && a == b;
    line(10, "two runs of verify --all produce byte-identical reports", pass, pass ? 0.0 : 1.0, 0.0);
    CHECK(pass);
}
