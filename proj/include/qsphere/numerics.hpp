#pragma once

// Shared numerical machinery: Gauss-Legendre nodes, dense least squares and
// nonnegative least squares (Lawson-Hanson) on top of Eigen.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qsphere/errors.hpp"

namespace qsphere {

struct QuadNode {
    double x;
    double w;
};

// Common result sheet for the density/phase/coefficient fits.
struct FitReport {
    double max_residual = 0.0;
    double rms_residual = 0.0;
    double condition = 0.0;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> details;

    void detail(const std::string &k, double v) { details.emplace_back(k, v); }
};

// Gauss-Legendre rule mapped to (a,b); nodes computed by Newton iteration
// on the Legendre recurrence. Endpoints are never nodes.
inline std::vector<QuadNode> gauss_legendre(int n, double a = 0.0, double b = 1.0) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    std::vector<QuadNode> out(n);
    const double eps = 1e-15;
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < eps) break;
        }
        double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
        out[i] = {xm - xl * x, 2.0 * xl / ((1.0 - x * x) * pp * pp)};
        out[n - 1 - i] = {xm + xl * x, out[i].w};
    }
    return out;
}

struct LsqResult {
    Eigen::VectorXd x;
    double residual = 0.0;  // ||Ax-b||
    double condition = 0.0; // of A
    bool clipped = false;   // nonnegative solve clipped negative components
};

inline double condition_number(const Eigen::MatrixXd &A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto &s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / (s(s.size() - 1));
}

// Minimum-norm least squares; directions below threshold (relative to the
// top singular value) are dropped so near-degenerate columns do not pick up
// noise coefficients.
inline LsqResult least_squares(const Eigen::MatrixXd &A, const Eigen::VectorXd &b,
                               double sv_threshold = 0.0) {
    LsqResult r;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (sv_threshold > 0.0) svd.setThreshold(sv_threshold);
    r.x = svd.solve(b);
    r.residual = (A * r.x - b).norm();
    const auto &s = svd.singularValues();
    r.condition = (s.size() && s(s.size() - 1) > 0.0)
                      ? s(0) / s(s.size() - 1)
                      : std::numeric_limits<double>::infinity();
    return r;
}

// Lawson-Hanson active-set nonnegative least squares.
inline LsqResult nnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &b, int max_iter = 0) {
    const int n = static_cast<int>(A.cols());
    if (max_iter <= 0) max_iter = 6 * n + 60;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    Eigen::VectorXd w = A.transpose() * (b - A * x);
    double tol = 1e-12 * A.cwiseAbs().maxCoeff() * b.norm();

    auto solve_passive = [&](Eigen::VectorXd &z) {
        std::vector<int> idx;
        for (int j = 0; j < n; ++j)
            if (passive[j]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) return;
        Eigen::MatrixXd Ap(A.rows(), idx.size());
        for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
        Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
        for (size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(c);
    };

    for (int iter = 0; iter < max_iter; ++iter) {
        int best = -1;
        double bw = tol;
        for (int j = 0; j < n; ++j)
            if (!passive[j] && w(j) > bw) {
                bw = w(j);
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;

        Eigen::VectorXd z;
        solve_passive(z);
        int guard = 0;
        while (guard++ < max_iter) {
            double alpha = 1.0;
            bool feasible = true;
            for (int j = 0; j < n; ++j) {
                if (passive[j] && z(j) <= 0.0) {
                    feasible = false;
                    double denom = x(j) - z(j);
                    if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
                }
            }
            if (feasible) break;
            x += alpha * (z - x);
            for (int j = 0; j < n; ++j)
                if (passive[j] && x(j) <= 1e-14 * std::abs(x.maxCoeff())) {
                    passive[j] = false;
                    x(j) = 0.0;
                }
            solve_passive(z);
        }
        x = z;
        w = A.transpose() * (b - A * x);
    }

    LsqResult r;
    r.x = x;
    r.residual = (A * x - b).norm();
    // conditioning of the system actually solved: the passive-set columns
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
        if (x(j) > 0.0) idx.push_back(j);
    if (idx.empty()) {
        r.condition = 1.0;
    } else {
        Eigen::MatrixXd Ap(A.rows(), idx.size());
        for (size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
        r.condition = condition_number(Ap);
    }
    return r;
}

} // namespace qsphere
