#pragma once

// Spectrum parameterization and the spherical matrix coefficients
// K_j^{sigma,tau}(p0; x) of the principal, discrete and complementary
// series. The explicit S-function is evaluated through a cancelled
// Pochhammer ratio and a regularized 2phi1 product; sign pairs with a
// leading '-' are reached through the x -> -x symmetry relation.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsphere/errors.hpp"
#include "qsphere/lattice.hpp"
#include "qsphere/numerics.hpp"
#include "qsphere/qseries.hpp"

namespace qsphere {

struct SpectrumPoint {
    enum class Kind { principal, discrete_pt, complementary };
    Kind kind;
    double x = 0.0; // mu(lambda); for discrete points derived from n
    int j = 1;      // series label for principal/complementary
    int n = 0;      // discrete index, n >= 1

    static SpectrumPoint principal(double x, int j = 1) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("SpectrumPoint: principal x must lie in [0,1]");
        if (j != 1 && j != 2) throw DomainError("SpectrumPoint: j must be 1 or 2");
        return {Kind::principal, x, j, 0};
    }
    static SpectrumPoint discrete(int n, double q) {
        if (n < 1) throw DomainError("SpectrumPoint: discrete index starts at 1");
        double x = mu(cplx(std::pow(q, 2 * n + 1))).real();
        return {Kind::discrete_pt, x, 1, n};
    }
    static SpectrumPoint complementary(double x, double q, int j = 1) {
        double top = mu(cplx(q)).real();
        if (!(x > 1.0 && x < top))
            throw DomainError("SpectrumPoint: complementary x must lie in (1, mu(q))");
        if (j != 1 && j != 2) throw DomainError("SpectrumPoint: j must be 1 or 2");
        return {Kind::complementary, x, j, 0};
    }
};

// lambda with mu(lambda) = x: principal points take the upper half circle,
// discrete points the representative with |lambda| <= 1, complementary
// points the root inside (q,1).
inline cplx lambda_of(const SpectrumPoint &pt, const QBase &qb) {
    switch (pt.kind) {
    case SpectrumPoint::Kind::principal:
        return std::exp(cplx(0.0, 1.0) * std::acos(pt.x));
    case SpectrumPoint::Kind::discrete_pt:
        return cplx(std::pow(qb.q, 2 * pt.n + 1));
    case SpectrumPoint::Kind::complementary:
        return cplx(pt.x - std::sqrt(pt.x * pt.x - 1.0));
    }
    throw DomainError("lambda_of: unknown spectrum kind");
}

struct SignPair {
    int sigma; // +1 or -1
    int tau;

    SignPair(int s, int t) : sigma(s), tau(t) {
        if ((s != 1 && s != -1) || (t != 1 && t != -1))
            throw DomainError("SignPair: entries must be +-1");
    }
    static SignPair pp() { return {+1, +1}; }
    static SignPair pm() { return {+1, -1}; }
    static SignPair mp() { return {-1, +1}; }
    static SignPair mm() { return {-1, -1}; }
    bool operator==(const SignPair &o) const { return sigma == o.sigma && tau == o.tau; }
};

// kappa, nu, c_q from the companion normalization, behind a provider. The
// per-point prefactor |p|^2 nu(p)^2 c_q^2 is exposed as one replaceable
// function rho; the default rho(p) = p^2 corresponds to nu = c_q = 1.
struct CompanionConstants {
    std::function<double(const LatticePoint &, double)> kappa;
    std::function<double(const LatticePoint &, double)> nu;
    double c_q = 1.0;
    std::function<double(const LatticePoint &, double)> rho;

    // kappa(p) = p: the coordinate itself. The four product formulae hold to
    // machine precision under this choice and fail badly for any other power
    // law tried, which pins it down empirically.
    static CompanionConstants defaults() {
        CompanionConstants c;
        c.kappa = [](const LatticePoint &p, double q) { return p.value(q); };
        c.nu = [](const LatticePoint &, double) { return 1.0; };
        c.c_q = 1.0;
        c.rho = [](const LatticePoint &p, double q) { return p.weight(q); };
        return c;
    }

    static CompanionConstants from_parts(std::function<double(const LatticePoint &, double)> kappa_,
                                         std::function<double(const LatticePoint &, double)> nu_,
                                         double c_q_) {
        CompanionConstants c;
        c.kappa = std::move(kappa_);
        c.nu = nu_;
        c.c_q = c_q_;
        c.rho = [nu = std::move(nu_), c_q_](const LatticePoint &p, double q) {
            double n = nu(p, q);
            return p.weight(q) * n * n * c_q_ * c_q_;
        };
        return c;
    }
};

// Unit-modulus branch phases, stored as angles over x in [0,1] with linear
// interpolation. The (j=1, (+,+), p0<0) branch is pinned to angle zero.
struct PhaseProvider {
    struct Key {
        int j;
        int sigma;
        int tau;
        int p0_sign;
        bool operator<(const Key &o) const {
            return std::tie(j, sigma, tau, p0_sign) < std::tie(o.j, o.sigma, o.tau, o.p0_sign);
        }
    };
    struct Sample {
        double x;
        double theta;
    };
    std::map<Key, std::vector<Sample>> branches;

    static PhaseProvider unit() { return {}; }

    static bool pinned(const Key &k) {
        return k.j == 1 && k.sigma == +1 && k.tau == +1 && k.p0_sign == -1;
    }

    void set_branch(int j, SignPair signs, int p0_sign, std::vector<Sample> samples) {
        Key k{j, signs.sigma, signs.tau, p0_sign};
        if (pinned(k)) throw DomainError("PhaseProvider: the (1,(+,+),p0<0) branch is fixed to 1");
        std::sort(samples.begin(), samples.end(),
                  [](const Sample &a, const Sample &b) { return a.x < b.x; });
        branches[k] = std::move(samples);
    }

    double angle(int j, SignPair signs, int p0_sign, double x) const {
        Key k{j, signs.sigma, signs.tau, p0_sign};
        if (pinned(k)) return 0.0;
        auto it = branches.find(k);
        if (it == branches.end() || it->second.empty()) return 0.0;
        const auto &v = it->second;
        if (x <= v.front().x) return v.front().theta;
        if (x >= v.back().x) return v.back().theta;
        for (size_t i = 1; i < v.size(); ++i) {
            if (x <= v[i].x) {
                double t = (x - v[i - 1].x) / (v[i].x - v[i - 1].x);
                return (1.0 - t) * v[i - 1].theta + t * v[i].theta;
            }
        }
        return v.back().theta;
    }

    cplx phase(int j, SignPair signs, int p0_sign, double x) const {
        return std::polar(1.0, angle(j, signs, p0_sign, x));
    }
};

enum class SVariant { upper, lower };

namespace detail {

// Pochhammer ratio of the S display without the (-q^2/kappa; q^2)_inf
// numerator factor (that one is folded into the regularized 2phi1 product).
inline RatioValue s_ratio(SVariant variant, cplx lam, int sgn_p0, const QBase &qb) {
    double q = qb.q;
    cplx Q(q * q);
    double vs = variant == SVariant::upper ? +1.0 : -1.0;
    std::vector<PochFactor> num = {
        {Q, 2}, {lam * Q, 2}, {1.0 / lam, 2}, {-q / lam, 2}};
    std::vector<PochFactor> den = {
        {cplx(sgn_p0) / lam, 2}, {cplx(sgn_p0) * lam * Q, 2}, {cplx(vs * q) / lam, 2}};
    return qpoch_ratio(num, den, qb);
}

} // namespace detail

// S(+-lambda, -+p0, p0, 0): the even (lower) and odd (upper) spherical
// building block. A pole of the Pochhammer ratio signals a vanishing
// matrix coefficient (the invariant vector is absent there) and comes back
// as an exact 0.
inline cplx s_function(SVariant variant, cplx lam, const LatticePoint &p0,
                       const CompanionConstants &consts, const QBase &qb) {
    if (std::abs(lam) == 0.0) throw DomainError("s_function: lambda must be nonzero");
    double q = qb.q;
    double Q = q * q;
    double vs = variant == SVariant::upper ? +1.0 : -1.0;
    double kappa = consts.kappa(p0, q);

    // sqrt((+-kappa, -kappa; q^2)_inf): exact zero when +-kappa hits q^{-2m}.
    // For the upper variant and |p0| > 1 the product can go negative; the odd
    // functionals vanish off (-1,1), so that regime is a structural zero.
    if (detail::pole_index(cplx(vs * kappa), Q, qb.eps)) return 0.0;
    double sq_prod = (qpoch_infinite(cplx(vs * kappa), Q, qb) *
                      qpoch_infinite(cplx(-kappa), Q, qb))
                         .real();
    if (sq_prod < 0.0) {
        if (variant == SVariant::upper && !p0.inside_unit_interval()) return 0.0;
        throw DomainError("s_function: square-root Pochhammer argument is negative; kappa provider out of range");
    }
    double sq = std::sqrt(sq_prod);

    double prefconst = qpoch_infinite(cplx(-vs * Q), Q, qb).real();

    RatioValue ratio = detail::s_ratio(variant, lam, p0.sign, qb);
    if (!ratio.is_finite()) return 0.0;

    cplx z = cplx(-Q / kappa);
    cplx F = phi21_poch_product(-q / lam, -lam * q, cplx(-Q), Q, z, qb);

    return consts.rho(p0, q) * sq * prefconst * ratio.value * F;
}

// Unit phase common to a whole (variant, sgn p0) branch at fixed lambda:
// conj(branch_unit_phase) * s_function is real on the principal circle.
inline cplx branch_unit_phase(SVariant variant, cplx lam, int sgn_p0, const QBase &qb) {
    RatioValue ratio = detail::s_ratio(variant, lam, sgn_p0, qb);
    if (!ratio.is_finite() || std::abs(ratio.value) == 0.0) return 1.0;
    return ratio.value / std::abs(ratio.value);
}

struct KernelContext {
    QBase qb;
    CompanionConstants consts = CompanionConstants::defaults();
    PhaseProvider phases = PhaseProvider::unit();

    explicit KernelContext(QBase qb_) : qb(std::move(qb_)) {}
};

namespace detail {

// Display structure of the four sign pairs with unit phase ratios:
//   (+,+): +S_lower(lambda), with a -1 on the p0>0 branch for j = 2
//   (+,-): -S_upper(lambda), with a -1 on the p0>0 branch for j = 1
//   (-,-) and (-,+) via the symmetry K^{s,t}(x) = st K^{-s,-t}(-x),
//   reached by lambda -> -lambda.
inline cplx kernel_base(int j, SignPair signs, const LatticePoint &p0, cplx lam,
                        const CompanionConstants &consts, const QBase &qb) {
    if (signs == SignPair::pp()) {
        double jsign = (p0.sign > 0 && j == 2) ? -1.0 : 1.0;
        return jsign * s_function(SVariant::lower, lam, p0, consts, qb);
    }
    if (signs == SignPair::pm()) {
        double bsign = (p0.sign > 0 && j == 1) ? -1.0 : 1.0;
        return -bsign * s_function(SVariant::upper, lam, p0, consts, qb);
    }
    if (signs == SignPair::mm()) return kernel_base(j, SignPair::pp(), p0, -lam, consts, qb);
    // (-,+) = -K^{+,-} at -x
    return -kernel_base(j, SignPair::pm(), p0, -lam, consts, qb);
}

} // namespace detail

inline cplx kernel(int j, SignPair signs, const LatticePoint &p0, const SpectrumPoint &pt,
                   const KernelContext &ctx) {
    if (j != 1 && j != 2) throw DomainError("kernel: j must be 1 or 2");
    // discrete points carry a one-dimensional invariant space: every matrix
    // coefficient with a '-' label pairs against an absent vector and is an
    // exact zero (the principal-series display does not extend there; its
    // Pochhammer ratio develops the pole that signals the vanishing)
    if (pt.kind == SpectrumPoint::Kind::discrete_pt && !(signs == SignPair::pp())) return 0.0;
    // odd-part coefficients pair against functionals that are null off
    // (-1,1); structural zero there
    if (signs.sigma != signs.tau && !p0.inside_unit_interval()) return 0.0;
    cplx lam = lambda_of(pt, ctx.qb);
    cplx base = detail::kernel_base(j, signs, p0, lam, ctx.consts, ctx.qb);
    return base * ctx.phases.phase(j, signs, p0.sign, pt.x);
}

// Unit phase of the kernel's p0-branch at this spectrum point: dividing the
// kernel by it leaves a real signed value. Used by the magnitude-mode fits.
inline cplx kernel_row_phase(int j, SignPair signs, int sgn_p0, const SpectrumPoint &pt,
                             const KernelContext &ctx) {
    cplx lam = lambda_of(pt, ctx.qb);
    cplx v;
    if (signs == SignPair::pp())
        v = branch_unit_phase(SVariant::lower, lam, sgn_p0, ctx.qb);
    else if (signs == SignPair::pm())
        v = branch_unit_phase(SVariant::upper, lam, sgn_p0, ctx.qb);
    else if (signs == SignPair::mm())
        v = branch_unit_phase(SVariant::lower, -lam, sgn_p0, ctx.qb);
    else
        v = branch_unit_phase(SVariant::upper, -lam, sgn_p0, ctx.qb);
    return v * ctx.phases.phase(j, signs, sgn_p0, pt.x);
}

namespace detail {

// Minimizer of  a |e^{i theta} - 1|^2 + |C e^{-i theta} + D|^2  over theta.
inline double optimal_angle(double anchor, cplx C, cplx D) {
    cplx g = std::conj(D) * C;
    double B = 2.0 * std::abs(g);
    if (B == 0.0 && anchor == 0.0) return 0.0;
    double phi = std::arg(g);
    double A = 2.0 * anchor;
    double th = std::atan2(-B * std::sin(phi), A - B * std::cos(phi));
    auto obj = [&](double t) {
        return anchor * (2.0 - 2.0 * std::cos(t)) + 2.0 * std::abs(g) * std::cos(phi - t);
    };
    if (obj(th + M_PI) < obj(th)) th += M_PI;
    if (th > M_PI) th -= 2.0 * M_PI;
    return th;
}

} // namespace detail

struct PhaseFitResult {
    PhaseProvider provider;
    FitReport report;
};

// Fits the angle functions of the symmetry-derived branches ((-,-) and
// (-,+)) against two residuals: the symmetry relation (an anchor pulling
// every angle to the value the relation itself dictates) and orthogonality
// of same-x transform rows across sign patterns, summed over the window.
// The (+,.) branches of the incoming provider stay fixed as references.
inline PhaseFitResult fit_phases(const std::vector<SpectrumPoint> &grid, const LatticeWindow &window,
                                 const KernelContext &ctx, double sym_weight = 1e-6) {
    std::vector<SpectrumPoint> nodes;
    for (const auto &pt : grid)
        if (pt.kind == SpectrumPoint::Kind::principal) nodes.push_back(pt);
    if (nodes.size() < 8) throw DomainError("fit_phases: need at least 8 principal grid points");
    std::sort(nodes.begin(), nodes.end(),
              [](const SpectrumPoint &a, const SpectrumPoint &b) { return a.x < b.x; });

    const double q = ctx.qb.q;
    auto pts = enumerate(window);

    PhaseFitResult out;
    out.provider = ctx.phases;
    FitReport &rep = out.report;
    double worst = 0.0, sumsq = 0.0;
    size_t count = 0;

    struct BranchAcc {
        std::vector<PhaseProvider::Sample> plus, minus;
    };
    std::map<int, BranchAcc> even_fit, odd_fit; // per j

    for (const auto &pt : nodes) {
        cplx lam = lambda_of(pt, ctx.qb);
        for (int j = 1; j <= 2; ++j) {
            // even pair: (+,+) row against the (-,-) row at the same x
            cplx Cp = 0.0, Cm = 0.0;
            double Wp = 0.0, Wm = 0.0;
            // odd pair: (+,-) against (-,+)
            cplx Op = 0.0, Om = 0.0;
            double Vp = 0.0, Vm = 0.0;
            for (const auto &p : pts) {
                double w = p.weight(q);
                cplx ref = detail::kernel_base(j, SignPair::pp(), p, lam, ctx.consts, ctx.qb) *
                           ctx.phases.phase(j, SignPair::pp(), p.sign, pt.x);
                cplx fit = detail::kernel_base(j, SignPair::mm(), p, lam, ctx.consts, ctx.qb);
                cplx c = ref * std::conj(fit) * w;
                if (p.sign > 0) {
                    Cp += c;
                    Wp += std::norm(fit) * w;
                } else {
                    Cm += c;
                    Wm += std::norm(fit) * w;
                }
                if (p.inside_unit_interval()) {
                    cplx refo = detail::kernel_base(j, SignPair::pm(), p, lam, ctx.consts, ctx.qb) *
                                ctx.phases.phase(j, SignPair::pm(), p.sign, pt.x);
                    cplx fito = detail::kernel_base(j, SignPair::mp(), p, lam, ctx.consts, ctx.qb);
                    cplx co = refo * std::conj(fito) * w;
                    if (p.sign > 0) {
                        Op += co;
                        Vp += std::norm(fito) * w;
                    } else {
                        Om += co;
                        Vm += std::norm(fito) * w;
                    }
                }
            }

            auto solve_pair = [&](cplx C_plus, cplx C_minus, double W_plus, double W_minus,
                                  double &th_plus, double &th_minus) {
                th_plus = 0.0;
                th_minus = 0.0;
                if (std::abs(C_plus) == 0.0 || std::abs(C_minus) == 0.0) return 0.0;
                // the optimal angles do not depend on the relative weight of
                // the two sign blocks, so fit the directions; the magnitude
                // mismatch between blocks is a normalization question that
                // phases cannot move and is reported by the transform fits
                cplx cp = C_plus / std::abs(C_plus);
                cplx cm = C_minus / std::abs(C_minus);
                (void)W_plus;
                (void)W_minus;
                for (int it = 0; it < 24; ++it) {
                    th_plus = detail::optimal_angle(sym_weight, cp,
                                                    cm * std::polar(1.0, -th_minus));
                    th_minus = detail::optimal_angle(sym_weight, cm,
                                                     cp * std::polar(1.0, -th_plus));
                }
                cplx R = cp * std::polar(1.0, -th_plus) + cm * std::polar(1.0, -th_minus);
                return 0.5 * std::abs(R);
            };

            double tp, tm, res_even = solve_pair(Cp, Cm, Wp, Wm, tp, tm);
            even_fit[j].plus.push_back({pt.x, tp});
            even_fit[j].minus.push_back({pt.x, tm});
            double op, om, res_odd = solve_pair(Op, Om, Vp, Vm, op, om);
            odd_fit[j].plus.push_back({pt.x, op});
            odd_fit[j].minus.push_back({pt.x, om});

            worst = std::max({worst, res_even, res_odd});
            sumsq += res_even * res_even + res_odd * res_odd;
            count += 2;
        }
    }

    for (auto &[j, acc] : even_fit) {
        out.provider.set_branch(j, SignPair::mm(), +1, acc.plus);
        out.provider.set_branch(j, SignPair::mm(), -1, acc.minus);
    }
    for (auto &[j, acc] : odd_fit) {
        out.provider.set_branch(j, SignPair::mp(), +1, acc.plus);
        out.provider.set_branch(j, SignPair::mp(), -1, acc.minus);
    }

    rep.max_residual = worst;
    rep.rms_residual = count ? std::sqrt(sumsq / count) : 0.0;
    rep.condition = 1.0;
    rep.detail("grid_points", static_cast<double>(nodes.size()));
    return out;
}

} // namespace qsphere
