#pragma once

// The graded spherical Fourier transform, its inverse, and the numerical
// determination of the undetermined spectral density d: forward maps a
// graded function to a field of 2x2 matrices over the principal nodes plus
// scalars over the discrete points; the density is fitted so that
// inverse(forward(.)) reproduces the lattice basis.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "qsphere/errors.hpp"
#include "qsphere/kernels.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/numerics.hpp"

namespace qsphere {

struct SpectralGrid {
    std::vector<QuadNode> principal; // nodes in (0,1), weights > 0
    std::vector<int> discrete_ns;    // n >= 1

    static SpectralGrid gauss(int nodes, int n_max) {
        SpectralGrid g;
        g.principal = gauss_legendre(nodes, 0.0, 1.0);
        for (int n = 1; n <= n_max; ++n) g.discrete_ns.push_back(n);
        return g;
    }

    bool same_shape(const SpectralGrid &o, double tol = 1e-12) const {
        if (principal.size() != o.principal.size() || discrete_ns != o.discrete_ns) return false;
        for (size_t i = 0; i < principal.size(); ++i)
            if (std::abs(principal[i].x - o.principal[i].x) > tol) return false;
        return true;
    }
};

// Entry layout of the 2x2 blocks, row-major:
//   [ (+,+)  (-,+) ]
//   [ (+,-)  (-,-) ]
inline constexpr std::array<std::pair<int, int>, 4> kEntrySigns = {
    std::pair<int, int>{+1, +1}, {-1, +1}, {+1, -1}, {-1, -1}};

struct Mat2 {
    std::array<cplx, 4> m{};
    cplx &operator[](int i) { return m[i]; }
    const cplx &operator[](int i) const { return m[i]; }
};

struct SphericalField {
    SpectralGrid grid;
    std::vector<std::array<Mat2, 2>> principal; // [node][j-1]
    std::vector<cplx> discrete;                 // aligned with grid.discrete_ns

    static SphericalField zeros(const SpectralGrid &g) {
        SphericalField f;
        f.grid = g;
        f.principal.resize(g.principal.size());
        f.discrete.assign(g.discrete_ns.size(), 0.0);
        return f;
    }
};

struct Density {
    std::vector<double> principal;
    std::vector<double> discrete;

    static Density ones(const SpectralGrid &g) {
        Density d;
        d.principal.assign(g.principal.size(), 1.0);
        d.discrete.assign(g.discrete_ns.size(), 1.0);
        return d;
    }
    bool matches(const SpectralGrid &g) const {
        return principal.size() == g.principal.size() && discrete.size() == g.discrete_ns.size();
    }
};

// Cached kernel values over a grid x window. Pattern order follows the
// matrix layout: 0=(+,+), 1=(-,+), 2=(+,-), 3=(-,-).
struct KernelTable {
    SpectralGrid grid;
    std::vector<LatticePoint> points;
    std::vector<cplx> values;        // [j-1][pattern][point][node]
    std::vector<cplx> discrete_vals; // [point][n-index], K_1^{+,+}

    static KernelTable build(const SpectralGrid &grid, const LatticeWindow &window,
                             const KernelContext &ctx) {
        KernelTable t;
        t.grid = grid;
        t.points = enumerate(window);
        const size_t np = t.points.size(), nx = grid.principal.size();
        t.values.assign(2 * 4 * np * nx, cplx(0.0));
        for (size_t i = 0; i < nx; ++i) {
            SpectrumPoint pt = SpectrumPoint::principal(grid.principal[i].x, 1);
            for (int j = 1; j <= 2; ++j)
                for (int pat = 0; pat < 4; ++pat) {
                    SignPair sp(kEntrySigns[pat].first, kEntrySigns[pat].second);
                    for (size_t ip = 0; ip < np; ++ip)
                        t.values[t.idx(j, pat, ip, i, np, nx)] = kernel(j, sp, t.points[ip], pt, ctx);
                }
        }
        t.discrete_vals.assign(np * grid.discrete_ns.size(), cplx(0.0));
        for (size_t d = 0; d < grid.discrete_ns.size(); ++d) {
            SpectrumPoint pt = SpectrumPoint::discrete(grid.discrete_ns[d], ctx.qb.q);
            for (size_t ip = 0; ip < np; ++ip)
                t.discrete_vals[ip * grid.discrete_ns.size() + d] =
                    kernel(1, SignPair::pp(), t.points[ip], pt, ctx);
        }
        return t;
    }

    size_t idx(int j, int pat, size_t ip, size_t ix, size_t np, size_t nx) const {
        return (((j - 1) * 4 + pat) * np + ip) * nx + ix;
    }
    cplx at(int j, int pat, size_t ip, size_t ix) const {
        return values[idx(j, pat, ip, ix, points.size(), grid.principal.size())];
    }
    cplx at_discrete(size_t ip, size_t d) const {
        return discrete_vals[ip * grid.discrete_ns.size() + d];
    }
};

// Forward transform: diagonal entries from the even part, off-diagonal from
// the odd part. The grading is structural: an even-only input produces
// exactly zero off-diagonal entries.
inline SphericalField forward(const GradedFunction &f, const SpectralGrid &grid,
                              const KernelContext &ctx) {
    SphericalField out = SphericalField::zeros(grid);
    const double q = ctx.qb.q;
    for (size_t i = 0; i < grid.principal.size(); ++i) {
        SpectrumPoint pt = SpectrumPoint::principal(grid.principal[i].x, 1);
        for (int j = 1; j <= 2; ++j) {
            Mat2 &mat = out.principal[i][j - 1];
            for (const auto &[p, v] : f.even) {
                double w = p.weight(q);
                mat[0] += kernel(j, SignPair::pp(), p, pt, ctx) * v * w;
                mat[3] += kernel(j, SignPair::mm(), p, pt, ctx) * v * w;
            }
            for (const auto &[p, v] : f.odd) {
                double w = p.weight(q);
                mat[1] += kernel(j, SignPair::mp(), p, pt, ctx) * v * w;
                mat[2] += kernel(j, SignPair::pm(), p, pt, ctx) * v * w;
            }
        }
    }
    for (size_t d = 0; d < grid.discrete_ns.size(); ++d) {
        SpectrumPoint pt = SpectrumPoint::discrete(grid.discrete_ns[d], q);
        for (const auto &[p, v] : f.even)
            out.discrete[d] += kernel(1, SignPair::pp(), p, pt, ctx) * v * p.weight(q);
    }
    return out;
}

// Inverse transform by quadrature against the conjugated kernels, with the
// density absorbed into the spectral measure.
inline GradedFunction inverse(const SphericalField &F, const Density &density,
                              const LatticeWindow &window, const KernelContext &ctx) {
    if (!density.matches(F.grid))
        throw GridMismatch("inverse: density shape does not match the field grid");
    GradedFunction out;
    const double q = ctx.qb.q;
    bool has_diag = false, has_off = false;
    for (const auto &node : F.principal)
        for (const auto &mat : node) {
            if (mat[0] != cplx(0.0) || mat[3] != cplx(0.0)) has_diag = true;
            if (mat[1] != cplx(0.0) || mat[2] != cplx(0.0)) has_off = true;
        }
    for (cplx v : F.discrete)
        if (v != cplx(0.0)) has_diag = true;

    for (const auto &p : enumerate(LatticeWindow(window.k_min, window.k_max))) {
        if (has_diag) {
            cplx even = 0.0;
            for (size_t i = 0; i < F.grid.principal.size(); ++i) {
                SpectrumPoint pt = SpectrumPoint::principal(F.grid.principal[i].x, 1);
                double wd = F.grid.principal[i].w * density.principal[i];
                for (int j = 1; j <= 2; ++j) {
                    const Mat2 &mat = F.principal[i][j - 1];
                    even += wd * (mat[0] * std::conj(kernel(j, SignPair::pp(), p, pt, ctx)) +
                                  mat[3] * std::conj(kernel(j, SignPair::mm(), p, pt, ctx)));
                }
            }
            for (size_t d = 0; d < F.grid.discrete_ns.size(); ++d) {
                SpectrumPoint pt = SpectrumPoint::discrete(F.grid.discrete_ns[d], q);
                even += density.discrete[d] * F.discrete[d] *
                        std::conj(kernel(1, SignPair::pp(), p, pt, ctx));
            }
            out.set_even(p, even);
        }
        if (has_off && p.inside_unit_interval()) {
            cplx odd = 0.0;
            for (size_t i = 0; i < F.grid.principal.size(); ++i) {
                SpectrumPoint pt = SpectrumPoint::principal(F.grid.principal[i].x, 1);
                double wd = F.grid.principal[i].w * density.principal[i];
                for (int j = 1; j <= 2; ++j) {
                    const Mat2 &mat = F.principal[i][j - 1];
                    odd += wd * (mat[1] * std::conj(kernel(j, SignPair::pm(), p, pt, ctx)) +
                                 mat[2] * std::conj(kernel(j, SignPair::mp(), p, pt, ctx)));
                }
            }
            out.set_odd(p, odd);
        }
    }
    return out;
}

// Plancherel pairing <F,G> with the density in the spectral measure.
inline cplx field_inner_product(const SphericalField &F, const SphericalField &G,
                                const Density &d) {
    if (!F.grid.same_shape(G.grid) || !d.matches(F.grid))
        throw GridMismatch("field_inner_product: grids disagree");
    cplx s = 0.0;
    for (size_t i = 0; i < F.grid.principal.size(); ++i) {
        double wd = F.grid.principal[i].w * d.principal[i];
        for (int jj = 0; jj < 2; ++jj)
            for (int e = 0; e < 4; ++e)
                s += wd * F.principal[i][jj][e] * std::conj(G.principal[i][jj][e]);
    }
    for (size_t k = 0; k < F.discrete.size(); ++k)
        s += d.discrete[k] * F.discrete[k] * std::conj(G.discrete[k]);
    return s;
}

namespace detail {

// Gram coefficient tensors: for every basis pair and every spectral slot,
// the coefficient multiplying that slot's density value. Basis vectors are
// the normalized lattice deltas, so the target Gram is the identity.
struct GramSystem {
    std::vector<LatticePoint> even_pts, odd_pts;
    // coefficient of column c in entry (a,b): complex
    std::vector<std::vector<cplx>> even_rows, odd_rows; // [pair][column]
    std::vector<std::pair<size_t, size_t>> even_pairs, odd_pairs;
    size_t cols = 0;

    static GramSystem build(const KernelTable &t, const KernelContext &ctx) {
        GramSystem g;
        const double q = ctx.qb.q;
        const size_t nx = t.grid.principal.size(), nd = t.grid.discrete_ns.size();
        g.cols = nx + nd;
        g.even_pts = t.points;
        for (const auto &p : t.points)
            if (p.inside_unit_interval()) g.odd_pts.push_back(p);

        auto scale = [&](const LatticePoint &p) { return std::sqrt(p.weight(q)); }; // |p|

        for (size_t a = 0; a < g.even_pts.size(); ++a)
            for (size_t b = a; b < g.even_pts.size(); ++b) {
                std::vector<cplx> row(g.cols, cplx(0.0));
                double sab = scale(g.even_pts[a]) * scale(g.even_pts[b]);
                for (size_t i = 0; i < nx; ++i) {
                    cplx acc = 0.0;
                    for (int j = 1; j <= 2; ++j)
                        acc += t.at(j, 0, a, i) * std::conj(t.at(j, 0, b, i)) +
                               t.at(j, 3, a, i) * std::conj(t.at(j, 3, b, i));
                    row[i] = acc * t.grid.principal[i].w * sab;
                }
                for (size_t d = 0; d < nd; ++d)
                    row[nx + d] = t.at_discrete(a, d) * std::conj(t.at_discrete(b, d)) * sab;
                g.even_rows.push_back(std::move(row));
                g.even_pairs.emplace_back(a, b);
            }

        // map odd points back into the table's point list
        std::vector<size_t> omap;
        for (size_t ip = 0; ip < t.points.size(); ++ip)
            if (t.points[ip].inside_unit_interval()) omap.push_back(ip);
        for (size_t a = 0; a < omap.size(); ++a)
            for (size_t b = a; b < omap.size(); ++b) {
                std::vector<cplx> row(g.cols, cplx(0.0));
                double sab = scale(g.odd_pts[a]) * scale(g.odd_pts[b]);
                for (size_t i = 0; i < nx; ++i) {
                    cplx acc = 0.0;
                    for (int j = 1; j <= 2; ++j)
                        acc += t.at(j, 2, omap[a], i) * std::conj(t.at(j, 2, omap[b], i)) +
                               t.at(j, 1, omap[a], i) * std::conj(t.at(j, 1, omap[b], i));
                    row[i] = acc * t.grid.principal[i].w * sab;
                }
                g.odd_rows.push_back(std::move(row));
                g.odd_pairs.emplace_back(a, b);
            }
        return g;
    }
};

} // namespace detail

struct DensityFitResult {
    Density density;
    FitReport report;
};

// Nonnegative least-squares determination of the spectral density: the
// round trip through forward/inverse must reproduce every normalized
// lattice delta, which is linear in the density values.
inline DensityFitResult fit_density(const SpectralGrid &grid, const LatticeWindow &window,
                                    const KernelContext &ctx, double cond_limit = 1e10) {
    KernelTable table = KernelTable::build(grid, window, ctx);
    auto basis_count = table.points.size();
    if (grid.principal.size() + grid.discrete_ns.size() > 0 && basis_count == 0)
        throw DomainError("fit_density: empty window");

    detail::GramSystem sys = detail::GramSystem::build(table, ctx);

    size_t rcount = 0;
    for (size_t r = 0; r < sys.even_rows.size(); ++r)
        rcount += (sys.even_pairs[r].first == sys.even_pairs[r].second) ? 1 : 2;
    for (size_t r = 0; r < sys.odd_rows.size(); ++r)
        rcount += (sys.odd_pairs[r].first == sys.odd_pairs[r].second) ? 1 : 2;

    Eigen::MatrixXd A(rcount, sys.cols);
    Eigen::VectorXd b(rcount);
    size_t row = 0;
    // every Gram-entry equation is scaled to unit row norm so that deep and
    // shallow window points weigh in equally
    auto emit = [&](const std::vector<cplx> &coeffs, bool diagonal) {
        double nrm = 0.0;
        for (const cplx &c : coeffs) nrm += std::norm(c);
        nrm = std::sqrt(nrm);
        double s = nrm > 0.0 ? 1.0 / nrm : 1.0;
        for (size_t c = 0; c < sys.cols; ++c) A(row, c) = coeffs[c].real() * s;
        b(row) = diagonal ? s : 0.0;
        ++row;
        if (!diagonal) {
            for (size_t c = 0; c < sys.cols; ++c) A(row, c) = coeffs[c].imag() * s;
            b(row) = 0.0;
            ++row;
        }
    };
    for (size_t r = 0; r < sys.even_rows.size(); ++r)
        emit(sys.even_rows[r], sys.even_pairs[r].first == sys.even_pairs[r].second);
    for (size_t r = 0; r < sys.odd_rows.size(); ++r)
        emit(sys.odd_rows[r], sys.odd_pairs[r].first == sys.odd_pairs[r].second);

    // column equilibration
    Eigen::VectorXd colscale(sys.cols);
    for (size_t c = 0; c < sys.cols; ++c) {
        double n = A.col(c).norm();
        colscale(c) = (n > 0.0) ? 1.0 / n : 1.0;
        A.col(c) *= colscale(c);
    }

    LsqResult free_fit = least_squares(A, b);
    LsqResult nn = nnls(A, b);
    if (nn.condition > cond_limit)
        throw IllConditioned("fit_density: normal equations condition number exceeds limit",
                             nn.condition);

    DensityFitResult out;
    out.density.principal.resize(grid.principal.size());
    out.density.discrete.resize(grid.discrete_ns.size());
    for (size_t c = 0; c < sys.cols; ++c) {
        double v = nn.x(c) * colscale(c);
        if (c < grid.principal.size())
            out.density.principal[c] = v;
        else
            out.density.discrete[c - grid.principal.size()] = v;
    }

    FitReport &rep = out.report;
    Eigen::VectorXd resid = A * nn.x - b;
    rep.max_residual = resid.cwiseAbs().maxCoeff();
    rep.rms_residual = resid.norm() / std::sqrt(static_cast<double>(resid.size()));
    rep.condition = nn.condition;
    int clipped = 0;
    for (int c = 0; c < free_fit.x.size(); ++c)
        if (free_fit.x(c) * colscale(c) < -1e-10) ++clipped;
    if (clipped > 0) {
        rep.warnings.push_back("NegativePressure: unconstrained solution had " +
                               std::to_string(clipped) + " negative components, clipped to 0");
    }
    rep.detail("unknowns", static_cast<double>(sys.cols));
    rep.detail("equations", static_cast<double>(rcount));
    rep.detail("unconstrained_residual", free_fit.residual);
    return out;
}

struct GramReport {
    double even_fixed_sign_opnorm = 0.0; // worst of the two fixed-sign blocks
    double even_opnorm = 0.0;
    double odd_opnorm = 0.0;
    double full_opnorm = 0.0;
    double max_entry_dev = 0.0;
    FitReport summary;
};

// Gram-matrix health of the transform for a given density: deviation of
// <F2 e_a, F2 e_b> from the identity over the normalized delta basis.
inline GramReport roundtrip_report(const LatticeWindow &window, const SpectralGrid &grid,
                                   const Density &density, const KernelContext &ctx) {
    if (!density.matches(grid)) throw GridMismatch("roundtrip_report: density shape mismatch");
    KernelTable table = KernelTable::build(grid, window, ctx);
    detail::GramSystem sys = detail::GramSystem::build(table, ctx);

    auto apply_density = [&](const std::vector<cplx> &row) {
        cplx s = 0.0;
        for (size_t i = 0; i < grid.principal.size(); ++i) s += row[i] * density.principal[i];
        for (size_t d = 0; d < grid.discrete_ns.size(); ++d)
            s += row[grid.principal.size() + d] * density.discrete[d];
        return s;
    };

    const size_t ne = sys.even_pts.size(), no = sys.odd_pts.size();
    Eigen::MatrixXcd Ge = Eigen::MatrixXcd::Zero(ne, ne), Go = Eigen::MatrixXcd::Zero(no, no);
    for (size_t r = 0; r < sys.even_rows.size(); ++r) {
        auto [a, b] = sys.even_pairs[r];
        cplx v = apply_density(sys.even_rows[r]);
        Ge(a, b) = v;
        Ge(b, a) = std::conj(v);
    }
    for (size_t r = 0; r < sys.odd_rows.size(); ++r) {
        auto [a, b] = sys.odd_pairs[r];
        cplx v = apply_density(sys.odd_rows[r]);
        Go(a, b) = v;
        Go(b, a) = std::conj(v);
    }

    auto opnorm_dev = [](const Eigen::MatrixXcd &G) {
        if (G.rows() == 0) return 0.0;
        Eigen::MatrixXcd D = G - Eigen::MatrixXcd::Identity(G.rows(), G.cols());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    };

    GramReport out;
    out.even_opnorm = opnorm_dev(Ge);
    out.odd_opnorm = opnorm_dev(Go);
    out.full_opnorm = std::max(out.even_opnorm, out.odd_opnorm);

    // fixed-sign even blocks
    std::vector<int> pos, neg;
    for (size_t i = 0; i < ne; ++i)
        (sys.even_pts[i].sign > 0 ? pos : neg).push_back(static_cast<int>(i));
    auto subdev = [&](const std::vector<int> &ix) {
        Eigen::MatrixXcd S(ix.size(), ix.size());
        for (size_t a = 0; a < ix.size(); ++a)
            for (size_t b = 0; b < ix.size(); ++b) S(a, b) = Ge(ix[a], ix[b]);
        return opnorm_dev(S);
    };
    out.even_fixed_sign_opnorm = std::max(subdev(pos), subdev(neg));

    double maxdev = 0.0;
    for (size_t a = 0; a < ne; ++a)
        for (size_t b = 0; b < ne; ++b)
            maxdev = std::max(maxdev, std::abs(Ge(a, b) - (a == b ? 1.0 : 0.0)));
    for (size_t a = 0; a < no; ++a)
        for (size_t b = 0; b < no; ++b)
            maxdev = std::max(maxdev, std::abs(Go(a, b) - (a == b ? 1.0 : 0.0)));
    out.max_entry_dev = maxdev;

    out.summary.max_residual = maxdev;
    out.summary.rms_residual = out.full_opnorm;
    out.summary.condition = 0.0;
    out.summary.detail("even_opnorm", out.even_opnorm);
    out.summary.detail("odd_opnorm", out.odd_opnorm);
    out.summary.detail("even_fixed_sign_opnorm", out.even_fixed_sign_opnorm);
    return out;
}

} // namespace qsphere
