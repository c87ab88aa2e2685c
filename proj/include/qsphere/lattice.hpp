#pragma once

// The discrete homogeneous space: the lattice I_q = -q^N u q^Z (N excluding
// 0), its weighted counting measure f -> sum f(p) p^2, and the Z2-graded
// function space with an even part on all of I_q and an odd part supported
// on I_q n (-1,1).

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "qsphere/errors.hpp"
#include "qsphere/qseries.hpp"

namespace qsphere {

// p = sign * q^k; the negative branch starts at k = 1.
struct LatticePoint {
    int sign; // +1 or -1
    int k;

    LatticePoint(int sign_, int k_) : sign(sign_), k(k_) {
        if (sign != 1 && sign != -1) throw DomainError("LatticePoint: sign must be +-1");
        if (sign == -1 && k < 1) throw DomainError("LatticePoint: negative branch requires k >= 1");
    }

    double value(double q) const { return sign * std::pow(q, k); }
    double weight(double q) const { return std::pow(q, 2 * k); } // p^2
    bool inside_unit_interval() const { return k >= 1; }        // |p| < 1

    friend bool operator==(const LatticePoint &a, const LatticePoint &b) {
        return a.sign == b.sign && a.k == b.k;
    }
    friend bool operator<(const LatticePoint &a, const LatticePoint &b) {
        if (a.k != b.k) return a.k < b.k;
        return a.sign > b.sign; // positive first
    }
};

struct LatticeWindow {
    int k_min;
    int k_max;

    LatticeWindow(int k_min_, int k_max_) : k_min(k_min_), k_max(k_max_) {
        if (k_min > k_max) throw DomainError("LatticeWindow: empty window");
    }
    bool contains(const LatticePoint &p) const { return p.k >= k_min && p.k <= k_max; }
};

// Deterministic ordering: descending |p| (ascending k), positive branch
// before negative at equal |p|. This order fixes matrix rows/columns in
// every fit.
inline std::vector<LatticePoint> enumerate(const LatticeWindow &w,
                                           std::optional<int> sign_filter = std::nullopt) {
    std::vector<LatticePoint> pts;
    for (int k = w.k_min; k <= w.k_max; ++k) {
        if (!sign_filter || *sign_filter == 1) pts.emplace_back(1, k);
        if (k >= 1 && (!sign_filter || *sign_filter == -1)) pts.emplace_back(-1, k);
    }
    return pts;
}

// mu(z) = (z + 1/z)/2.
inline cplx mu(cplx z) {
    if (std::abs(z) == 0.0) throw DomainError("mu: z must be nonzero");
    return 0.5 * (z + 1.0 / z);
}

// Even/odd pair modeling the graded algebra: the odd map structurally omits
// points with |p| >= 1 rather than storing zeros there.
struct GradedFunction {
    std::map<LatticePoint, cplx> even;
    std::map<LatticePoint, cplx> odd;

    void set_even(const LatticePoint &p, cplx v) { even[p] = v; }
    void set_odd(const LatticePoint &p, cplx v) {
        if (!p.inside_unit_interval())
            throw DomainError("GradedFunction: odd part vanishes outside (-1,1)");
        odd[p] = v;
    }
    cplx even_at(const LatticePoint &p) const {
        auto it = even.find(p);
        return it == even.end() ? cplx(0.0) : it->second;
    }
    cplx odd_at(const LatticePoint &p) const {
        auto it = odd.find(p);
        return it == odd.end() ? cplx(0.0) : it->second;
    }

    static GradedFunction delta_even(const LatticePoint &p, cplx v = 1.0) {
        GradedFunction f;
        f.set_even(p, v);
        return f;
    }
    static GradedFunction delta_odd(const LatticePoint &p, cplx v = 1.0) {
        GradedFunction f;
        f.set_odd(p, v);
        return f;
    }
};

// Point functional delta_{p,+-}; the odd one is the zero functional off
// (-1,1) but stays representable.
struct PointFunctional {
    LatticePoint p;
    bool odd = false;

    bool is_zero() const { return odd && !p.inside_unit_interval(); }
};

// haar weight: sum of the even part against p^2; the odd part contributes 0.
inline cplx haar_weight(const GradedFunction &f, double q) {
    cplx s = 0.0;
    for (const auto &[p, v] : f.even) s += v * p.weight(q);
    return s;
}

// <f,h> with the even and odd parts orthogonal by construction.
inline cplx inner_product(const GradedFunction &f, const GradedFunction &h, double q) {
    cplx s = 0.0;
    for (const auto &[p, v] : f.even) s += v * std::conj(h.even_at(p)) * p.weight(q);
    for (const auto &[p, v] : f.odd) s += v * std::conj(h.odd_at(p)) * p.weight(q);
    return s;
}

inline double norm(const GradedFunction &f, double q) {
    return std::sqrt(std::abs(inner_product(f, f, q)));
}

} // namespace qsphere
