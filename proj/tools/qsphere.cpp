// qsphere command-line interface: kernel evaluation, graded transforms and
// density fits, and the machine-readable verification suites.

#include <complex>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsphere/kernels.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/product.hpp"
#include "qsphere/qseries.hpp"
#include "qsphere/reports.hpp"
#include "qsphere/serialization.hpp"
#include "qsphere/transform.hpp"

namespace {

using namespace qsphere;

constexpr int kExitPass = 0;
constexpr int kExitSuiteFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitConditioning = 3;

LatticePoint parse_p0(const std::string &text) {
    std::string s = text;
    int sign = 1;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        sign = s[0] == '-' ? -1 : 1;
        s = s.substr(1);
    }
    if (s.empty() || s[0] != 'q')
        throw SchemaError("lattice point syntax is [+-]q^k, got '" + text + "'");
    int k = 1;
    if (s.size() > 1) {
        if (s[1] != '^') throw SchemaError("lattice point syntax is [+-]q^k, got '" + text + "'");
        try {
            k = std::stoi(s.substr(2));
        } catch (const std::exception &) {
            throw SchemaError("lattice point syntax is [+-]q^k, got '" + text + "'");
        }
    }
    try {
        return LatticePoint(sign, k);
    } catch (const DomainError &e) {
        throw SchemaError(std::string(e.what()));
    }
}

SignPair parse_signs(const std::string &s) {
    if (s == "++") return SignPair::pp();
    if (s == "+-") return SignPair::pm();
    if (s == "-+") return SignPair::mp();
    if (s == "--") return SignPair::mm();
    throw SchemaError("signs must be one of ++, +-, -+, --");
}

void emit(const std::string &text, const std::string &out_path) {
    if (out_path.empty())
        std::cout << text << "\n";
    else
        write_text_file(out_path, text);
}

RunConfig base_config() {
    if (const char *env = std::getenv("QSPHERE_CONFIG"); env && *env)
        return RunConfig::from_json(load_json_file(env));
    return RunConfig{};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"spherical q-harmonic analysis toolkit"};
    app.require_subcommand(1);

    RunConfig cfg = [] {
        try {
            return base_config();
        } catch (const SchemaError &e) {
            std::cerr << "SchemaError: " << e.what() << "\n";
            std::exit(kExitInputError);
        }
    }();

    app.add_option("--q", cfg.q, "deformation parameter in (0,1)");
    app.add_option("--kmin", cfg.k_min, "window lower exponent");
    app.add_option("--kmax", cfg.k_max, "window upper exponent");
    app.add_option("--nodes", cfg.nodes, "principal quadrature nodes");
    app.add_option("--nmax", cfg.n_max, "discrete series truncation");
    app.add_option("--tol", cfg.tol, "tolerance knob");
    app.add_option("--seed", cfg.seed, "seed for randomized draws");
    app.add_option("--phase-provider", cfg.phase_provider, "unit | fitted | <json file>");
    app.add_option("--a-provider", cfg.a_provider, "a-function provider json file");
    std::string out_path, format = "json";
    app.add_option("--out", out_path, "output file (stdout if omitted)");
    app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    // kernel ----------------------------------------------------------------
    auto *cmd_kernel = app.add_subcommand("kernel", "evaluate a spherical kernel");
    double opt_x = 0.5;
    int opt_n = 0, opt_j = 1, opt_sweep = 0;
    std::string opt_signs = "++", opt_p0 = "q^1";
    cmd_kernel->add_option("--x", opt_x, "principal spectral value in [0,1]");
    cmd_kernel->add_option("--discrete-n", opt_n, "discrete series index (n >= 1)");
    cmd_kernel->add_option("--j", opt_j, "series label 1 or 2");
    cmd_kernel->add_option("--signs", opt_signs, "sign pair: ++ +- -+ --");
    cmd_kernel->add_option("--p0", opt_p0, "lattice point, [+-]q^k");
    cmd_kernel->add_option("--sweep", opt_sweep, "emit CSV over this many principal nodes");

    // transform ---------------------------------------------------------------
    auto *cmd_transform = app.add_subcommand("transform", "forward/inverse transform, roundtrip");
    std::string t_mode, t_in, t_density;
    bool t_fit_density = false;
    cmd_transform->add_option("mode", t_mode, "forward | inverse | roundtrip")->required();
    cmd_transform->add_option("--in", t_in, "input file")->required();
    cmd_transform->add_option("--density", t_density, "density json file");
    cmd_transform->add_flag("--fit-density", t_fit_density, "fit the spectral density");

    // verify ------------------------------------------------------------------
    auto *cmd_verify = app.add_subcommand("verify", "run verification suites");
    std::string v_suite;
    bool v_all = false;
    std::string v_variant = "I", v_p1 = "-q^1", v_p2 = "-q^1";
    cmd_verify->add_option("suite", v_suite, "qseries | symmetry | triviality | product | plancherel");
    cmd_verify->add_flag("--all", v_all, "run every suite");
    cmd_verify->add_option("--variant", v_variant, "product variant I..IV");
    cmd_verify->add_option("--p1", v_p1, "first leg, [+-]q^k");
    cmd_verify->add_option("--p2", v_p2, "second leg, [+-]q^k");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_kernel) {
            KernelContext ctx = cfg.context();
            SignPair signs = parse_signs(opt_signs);
            LatticePoint p0 = parse_p0(opt_p0);
            if (opt_j != 1 && opt_j != 2) throw SchemaError("j must be 1 or 2");
            if (opt_sweep > 0) {
                std::ostringstream os;
                os.precision(17);
                os << "x,re,im,abs\n";
                for (const auto &node : gauss_legendre(opt_sweep, 0.0, 1.0)) {
                    cplx v = kernel(opt_j, signs, p0, SpectrumPoint::principal(node.x, opt_j), ctx);
                    os << node.x << "," << v.real() << "," << v.imag() << "," << std::abs(v) << "\n";
                }
                emit(os.str(), out_path);
                return kExitPass;
            }
            SpectrumPoint pt = opt_n >= 1 ? SpectrumPoint::discrete(opt_n, cfg.q)
                                          : SpectrumPoint::principal(opt_x, opt_j);
            cplx lam = lambda_of(pt, ctx.qb);
            cplx v = kernel(opt_j, signs, p0, pt, ctx);
            bool lower_variant = signs == SignPair::pp() || signs == SignPair::mm();
            cplx lam_eval = (signs.sigma < 0) ? -lam : lam;
            cplx s = s_function(lower_variant ? SVariant::lower : SVariant::upper, lam_eval, p0,
                                ctx.consts, ctx.qb);
            cplx phase = ctx.phases.phase(opt_j, signs, p0.sign, pt.x);
            json j{{"x", pt.x},
                   {"j", opt_j},
                   {"signs", opt_signs},
                   {"p0", to_json(p0)},
                   {"lambda", {lam.real(), lam.imag()}},
                   {"value", {v.real(), v.imag()}},
                   {"abs", std::abs(v)},
                   {"s_function", {s.real(), s.imag()}},
                   {"phase", {phase.real(), phase.imag()}}};
            if (format == "csv") {
                std::ostringstream os;
                os.precision(17);
                os << "x,j,signs,p0,re,im,abs\n"
                   << pt.x << "," << opt_j << "," << opt_signs << "," << opt_p0 << "," << v.real()
                   << "," << v.imag() << "," << std::abs(v) << "\n";
                emit(os.str(), out_path);
            } else {
                emit(j.dump(2), out_path);
            }
            return kExitPass;
        }

        if (*cmd_transform) {
            KernelContext ctx = cfg.context();
            SpectralGrid grid = cfg.grid();
            LatticeWindow win = cfg.window();
            if (t_mode == "forward") {
                GradedFunctionFile in = graded_function_from_json(load_json_file(t_in));
                SphericalField field = forward(in.f, grid, ctx);
                std::optional<Density> dens;
                if (t_fit_density) dens = fit_density(grid, win, ctx).density;
                json j = to_json(field, dens ? &*dens : nullptr);
                emit(format == "csv" ? to_csv(field) : j.dump(2), out_path);
                // structural grading note for delta inputs
                return kExitPass;
            }
            if (t_mode == "inverse") {
                SphericalField field = spherical_field_from_json(load_json_file(t_in));
                if (!field.grid.same_shape(grid))
                    throw GridMismatch("inverse: field grid does not match the requested grid");
                Density dens;
                if (t_fit_density)
                    dens = fit_density(grid, win, ctx).density;
                else if (!t_density.empty())
                    dens = density_from_json(load_json_file(t_density));
                else
                    throw SchemaError("inverse needs --density <file> or --fit-density");
                if (!dens.matches(field.grid)) throw GridMismatch("density shape mismatch");
                GradedFunction f = inverse(field, dens, win, ctx);
                emit(to_json(f, cfg.q, win).dump(2), out_path);
                return kExitPass;
            }
            if (t_mode == "roundtrip") {
                GradedFunctionFile in = graded_function_from_json(load_json_file(t_in));
                Density dens;
                if (!t_density.empty())
                    dens = density_from_json(load_json_file(t_density));
                else
                    dens = fit_density(grid, win, ctx).density;
                SphericalField field = forward(in.f, grid, ctx);
                GradedFunction back = inverse(field, dens, win, ctx);
                GramReport gram = roundtrip_report(win, grid, dens, ctx);
                json residuals = json::array();
                double worst = 0.0;
                for (const auto &p : enumerate(win)) {
                    cplx d = back.even_at(p) - in.f.even_at(p);
                    residuals.push_back(json{{"sign", p.sign}, {"k", p.k}, {"abs_err", std::abs(d)}});
                    worst = std::max(worst, std::abs(d));
                }
                json j{{"config", cfg.to_json()},
                       {"gram_full_opnorm", gram.full_opnorm},
                       {"gram_even_fixed_sign_opnorm", gram.even_fixed_sign_opnorm},
                       {"max_pointwise_residual", worst},
                       {"per_point", residuals}};
                emit(j.dump(2), out_path);
                return worst <= cfg.tol ? kExitPass : kExitSuiteFailure;
            }
            throw SchemaError("transform mode must be forward, inverse or roundtrip");
        }

        if (*cmd_verify) {
            json report;
            if (v_all || v_suite.empty()) {
                report = suite::run_all(cfg);
            } else if (v_suite == "qseries") {
                report = suite::qseries(cfg);
            } else if (v_suite == "symmetry") {
                report = suite::symmetry(cfg);
            } else if (v_suite == "triviality") {
                report = suite::triviality(cfg);
            } else if (v_suite == "plancherel") {
                report = suite::plancherel(cfg);
            } else if (v_suite == "product") {
                auto var = variant_from_name(v_variant);
                if (!var) throw SchemaError("variant must be I, II, III or IV");
                KernelContext ctx = cfg.context();
                auto nodes = gauss_legendre(cfg.nodes, 0.0, 1.0);
                std::vector<double> train_x, hold_x;
                for (size_t i = 0; i < nodes.size(); ++i)
                    ((i % 2 == 0) ? train_x : hold_x).push_back(nodes[i].x);
                LatticePoint p1 = parse_p0(v_p1), p2 = parse_p0(v_p2);
                CoefficientFitResult fit =
                    coefficients_fitted(*var, p1, p2, train_x, cfg.window(), ctx);
                std::vector<SpectrumPoint> held;
                for (double x : hold_x) held.push_back(SpectrumPoint::principal(x, 1));
                FitReport rep = verify(*var, p1, p2, fit.coefficients, held, ctx);
                bool pass = rep.rms_residual <= 1e-4;
                report = json{{"config", cfg.to_json()},
                              {"coefficients", to_json(fit.coefficients, &fit.report)},
                              {"heldout", to_json(rep)},
                              {"pass", pass}};
            } else {
                throw SchemaError("unknown suite '" + v_suite + "'");
            }
            if (!report.contains("config")) {
                json wrapped{{"config", cfg.to_json()}, {"report", report},
                             {"pass", report.at("pass")}};
                report = std::move(wrapped);
            }
            emit(report.dump(2), out_path);
            return report.at("pass").get<bool>() ? kExitPass : kExitSuiteFailure;
        }
    } catch (const IllConditioned &e) {
        std::cerr << "IllConditioned: " << e.what() << " (cond " << e.condition << ")\n";
        return kExitConditioning;
    } catch (const ResidualTooLarge &e) {
        std::cerr << "ResidualTooLarge: " << e.what() << "\n";
        return kExitSuiteFailure;
    } catch (const SchemaError &e) {
        std::cerr << "SchemaError: " << e.what() << "\n";
        return kExitInputError;
    } catch (const GridMismatch &e) {
        std::cerr << "GridMismatch: " << e.what() << "\n";
        return kExitInputError;
    } catch (const DomainError &e) {
        std::cerr << "DomainError: " << e.what() << "\n";
        return kExitInputError;
    } catch (const Error &e) {
        std::cerr << "Error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitPass;
}
