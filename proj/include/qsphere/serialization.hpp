#pragma once

// JSON schemas for the value types that cross the CLI boundary, plus CSV
// export of spectral fields. Keys are emitted in insertion order so that
// identical inputs produce byte-identical files.

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qsphere/kernels.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/numerics.hpp"
#include "qsphere/product.hpp"
#include "qsphere/transform.hpp"

namespace qsphere {

using json = nlohmann::ordered_json;

inline json to_json(const LatticePoint &p) { return json{{"sign", p.sign}, {"k", p.k}}; }

inline LatticePoint lattice_point_from_json(const json &j) {
    try {
        return LatticePoint(j.at("sign").get<int>(), j.at("k").get<int>());
    } catch (const DomainError &e) {
        throw SchemaError(std::string("lattice point: ") + e.what());
    } catch (const json::exception &e) {
        throw SchemaError(std::string("lattice point: ") + e.what());
    }
}

inline json to_json(const GradedFunction &f, double q, const LatticeWindow &window) {
    json even = json::array(), odd = json::array();
    for (const auto &[p, v] : f.even)
        even.push_back(json{{"sign", p.sign}, {"k", p.k}, {"re", v.real()}, {"im", v.imag()}});
    for (const auto &[p, v] : f.odd)
        odd.push_back(json{{"sign", p.sign}, {"k", p.k}, {"re", v.real()}, {"im", v.imag()}});
    return json{{"q", q},
                {"window", {{"k_min", window.k_min}, {"k_max", window.k_max}}},
                {"even", even},
                {"odd", odd}};
}

struct GradedFunctionFile {
    double q;
    LatticeWindow window{0, 0};
    GradedFunction f;
};

inline GradedFunctionFile graded_function_from_json(const json &j) {
    GradedFunctionFile out;
    try {
        out.q = j.at("q").get<double>();
        out.window = LatticeWindow(j.at("window").at("k_min").get<int>(),
                                   j.at("window").at("k_max").get<int>());
        for (const auto &e : j.at("even")) {
            LatticePoint p(e.at("sign").get<int>(), e.at("k").get<int>());
            out.f.set_even(p, cplx(e.at("re").get<double>(), e.at("im").get<double>()));
        }
        for (const auto &e : j.at("odd")) {
            LatticePoint p(e.at("sign").get<int>(), e.at("k").get<int>());
            if (!p.inside_unit_interval())
                throw SchemaError("graded function: odd entry with |p| >= 1 rejected");
            out.f.set_odd(p, cplx(e.at("re").get<double>(), e.at("im").get<double>()));
        }
    } catch (const SchemaError &) {
        throw;
    } catch (const std::exception &e) {
        throw SchemaError(std::string("graded function: ") + e.what());
    }
    return out;
}

inline json to_json(const PhaseProvider &pp) {
    json branches = json::array();
    for (const auto &[key, samples] : pp.branches) {
        json angles = json::array();
        for (const auto &s : samples) angles.push_back(json{{"x", s.x}, {"theta", s.theta}});
        branches.push_back(json{{"j", key.j},
                                {"sigma", key.sigma > 0 ? "+" : "-"},
                                {"tau", key.tau > 0 ? "+" : "-"},
                                {"p0_sign", key.p0_sign},
                                {"angles", angles}});
    }
    return json{{"branches", branches}};
}

inline PhaseProvider phase_provider_from_json(const json &j) {
    PhaseProvider out;
    try {
        for (const auto &b : j.at("branches")) {
            int jj = b.at("j").get<int>();
            int sigma = b.at("sigma").get<std::string>() == "+" ? +1 : -1;
            int tau = b.at("tau").get<std::string>() == "+" ? +1 : -1;
            int ps = b.at("p0_sign").get<int>();
            std::vector<PhaseProvider::Sample> samples;
            for (const auto &a : b.at("angles"))
                samples.push_back({a.at("x").get<double>(), a.at("theta").get<double>()});
            out.set_branch(jj, SignPair(sigma, tau), ps, std::move(samples));
        }
    } catch (const std::exception &e) {
        throw SchemaError(std::string("phase provider: ") + e.what());
    }
    return out;
}

inline json to_json(const SpectralGrid &g) {
    json nodes = json::array();
    for (const auto &n : g.principal) nodes.push_back(json{{"x", n.x}, {"w", n.w}});
    return json{{"principal", nodes}, {"discrete_ns", g.discrete_ns}};
}

inline SpectralGrid spectral_grid_from_json(const json &j) {
    SpectralGrid g;
    try {
        for (const auto &n : j.at("principal")) g.principal.push_back({n.at("x"), n.at("w")});
        g.discrete_ns = j.at("discrete_ns").get<std::vector<int>>();
    } catch (const std::exception &e) {
        throw SchemaError(std::string("spectral grid: ") + e.what());
    }
    return g;
}

inline json to_json(const Density &d) {
    return json{{"principal", d.principal}, {"discrete", d.discrete}};
}

inline Density density_from_json(const json &j) {
    Density d;
    try {
        d.principal = j.at("principal").get<std::vector<double>>();
        d.discrete = j.at("discrete").get<std::vector<double>>();
    } catch (const std::exception &e) {
        throw SchemaError(std::string("density: ") + e.what());
    }
    return d;
}

inline json to_json(const SphericalField &f, const Density *density = nullptr) {
    json principal = json::array();
    for (size_t i = 0; i < f.principal.size(); ++i) {
        for (int jj = 0; jj < 2; ++jj) {
            const Mat2 &m = f.principal[i][jj];
            json mm = json::array();
            for (int e = 0; e < 4; ++e) mm.push_back(json::array({m[e].real(), m[e].imag()}));
            principal.push_back(json{{"x", f.grid.principal[i].x},
                                     {"w", f.grid.principal[i].w},
                                     {"j", jj + 1},
                                     {"m", mm}});
        }
    }
    json discrete = json::array();
    for (size_t d = 0; d < f.discrete.size(); ++d)
        discrete.push_back(json{{"n", f.grid.discrete_ns[d]},
                                {"re", f.discrete[d].real()},
                                {"im", f.discrete[d].imag()}});
    json out{{"grid", to_json(f.grid)}, {"principal", principal}, {"discrete", discrete}};
    if (density) out["density"] = to_json(*density);
    return out;
}

inline SphericalField spherical_field_from_json(const json &j) {
    SphericalField f;
    try {
        f.grid = spectral_grid_from_json(j.at("grid"));
        f.principal.resize(f.grid.principal.size());
        f.discrete.assign(f.grid.discrete_ns.size(), 0.0);
        size_t idx = 0;
        for (const auto &e : j.at("principal")) {
            size_t node = idx / 2;
            int jj = e.at("j").get<int>();
            if (node >= f.principal.size()) throw SchemaError("spherical field: extra principal rows");
            Mat2 &m = f.principal[node][jj - 1];
            const auto &mm = e.at("m");
            for (int k = 0; k < 4; ++k)
                m[k] = cplx(mm.at(k).at(0).get<double>(), mm.at(k).at(1).get<double>());
            ++idx;
        }
        size_t d = 0;
        for (const auto &e : j.at("discrete")) {
            if (d >= f.discrete.size()) throw SchemaError("spherical field: extra discrete rows");
            f.discrete[d++] = cplx(e.at("re").get<double>(), e.at("im").get<double>());
        }
    } catch (const SchemaError &) {
        throw;
    } catch (const std::exception &e) {
        throw SchemaError(std::string("spherical field: ") + e.what());
    }
    return f;
}

// CSV export: one row per (x, j, entry).
inline std::string to_csv(const SphericalField &f) {
    static const char *entry_names[4] = {"++", "-+", "+-", "--"};
    std::ostringstream os;
    os << "x,j,entry,re,im\n";
    os.precision(17);
    for (size_t i = 0; i < f.principal.size(); ++i)
        for (int jj = 0; jj < 2; ++jj)
            for (int e = 0; e < 4; ++e) {
                const cplx v = f.principal[i][jj][e];
                os << f.grid.principal[i].x << "," << (jj + 1) << "," << entry_names[e] << ","
                   << v.real() << "," << v.imag() << "\n";
            }
    for (size_t d = 0; d < f.discrete.size(); ++d)
        os << "discrete_n" << f.grid.discrete_ns[d] << ",1,++," << f.discrete[d].real() << ","
           << f.discrete[d].imag() << "\n";
    return os.str();
}

inline json to_json(const FitReport &r) {
    json details = json::array();
    for (const auto &[k, v] : r.details) details.push_back(json{{"name", k}, {"value", v}});
    return json{{"max_residual", r.max_residual},
                {"rms_residual", r.rms_residual},
                {"condition", r.condition},
                {"warnings", r.warnings},
                {"details", details}};
}

inline json to_json(const CoefficientSet &c, const FitReport *report = nullptr) {
    json values = json::array();
    for (const auto &[p, v] : c.values) values.push_back(json{{"p0", to_json(p)}, {"c", v}});
    json out{{"variant", variant_name(c.variant)},
             {"p1", to_json(c.p1)},
             {"p2", to_json(c.p2)},
             {"values", values},
             {"provenance", c.provenance}};
    if (report) out["report"] = to_json(*report);
    return out;
}

inline CoefficientSet coefficient_set_from_json(const json &j) {
    try {
        auto v = variant_from_name(j.at("variant").get<std::string>());
        if (!v) throw SchemaError("coefficient set: unknown variant");
        CoefficientSet c{*v, lattice_point_from_json(j.at("p1")), lattice_point_from_json(j.at("p2")),
                         {}, j.at("provenance").get<std::string>()};
        for (const auto &e : j.at("values"))
            c.values.emplace_back(lattice_point_from_json(e.at("p0")), e.at("c").get<double>());
        return c;
    } catch (const SchemaError &) {
        throw;
    } catch (const std::exception &e) {
        throw SchemaError(std::string("coefficient set: ") + e.what());
    }
}

// a-provider file: {"entries": [{"p": {...}, "x": {...}, "y": {...}, "a": num}]}
inline AProvider a_provider_from_json(const json &j) {
    struct Entry {
        LatticePoint p, x, y;
        double a;
    };
    auto entries = std::make_shared<std::vector<Entry>>();
    try {
        for (const auto &e : j.at("entries"))
            entries->push_back({lattice_point_from_json(e.at("p")), lattice_point_from_json(e.at("x")),
                                lattice_point_from_json(e.at("y")), e.at("a").get<double>()});
    } catch (const SchemaError &) {
        throw;
    } catch (const std::exception &e) {
        throw SchemaError(std::string("a provider: ") + e.what());
    }
    AProvider out;
    out.a = [entries](const LatticePoint &p, const LatticePoint &x, const LatticePoint &y,
                      double) -> double {
        for (const auto &e : *entries)
            if (e.p == p && e.x == x && e.y == y) return e.a;
        return 0.0;
    };
    return out;
}

inline json load_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception &e) {
        throw SchemaError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write file: " + path);
    out << text;
}

} // namespace qsphere
