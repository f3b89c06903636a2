#pragma once

// Profile penalized-likelihood confidence intervals: hold one coefficient
// fixed, maximize the active penalized objective over the others, and invert
// the likelihood-ratio statistic against a chi-square quantile. Infinite
// limits are first-class values.

#include "glm_core.hpp"
#include "special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace penlogit {

struct ProfileCI {
    int index = 0;
    double level = 0.95;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> profile_trace;  // (value, profile objective)
};

// The objective maximized by fit() for this penalty: l for ML, the ridge
// penalized log-likelihood, or l + 1/2 log|Z'WZ|. -inf when the Firth
// information is not positive definite.
inline double penalized_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                  const PenaltySpec& pen, const Eigen::VectorXd& beta,
                                  const Eigen::VectorXd* weights = nullptr) {
    const double ll = loglik(Z, y, beta, weights);
    if (pen.kind == Penalty::None) return ll;
    if (pen.kind == Penalty::Ridge) {
        const Eigen::VectorXd P = pen.penalty_diag(static_cast<int>(Z.cols()));
        return ll - 0.5 * pen.lambda * (P.array() * beta.array().square()).sum();
    }
    Eigen::VectorXd g;
    Eigen::MatrixXd I;
    score_and_info(Z, y, beta, g, I, weights);
    Eigen::LLT<Eigen::MatrixXd> llt(I);
    bool ok = llt.info() == Eigen::Success;
    const double hl = ok ? detail::half_logdet(llt, ok) : 0.0;
    if (!ok) return -std::numeric_limits<double>::infinity();
    return ll + hl;
}

// Maximizes the penalized objective over all coefficients with beta_j fixed
// at `value` (Newton on the reduced system, step-halving on the objective).
inline double profile_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                const PenaltySpec& pen, int j, double value,
                                const SolverOptions& opts = {},
                                Eigen::VectorXd* beta_out = nullptr) {
    const int p = static_cast<int>(Z.cols());
    const Eigen::VectorXd P = pen.penalty_diag(p);
    std::vector<int> idx;
    idx.reserve(p - 1);
    for (int k = 0; k < p; ++k)
        if (k != j) idx.push_back(k);

    Eigen::VectorXd b = opts.start.size() == p ? opts.start : Eigen::VectorXd::Zero(p);
    b[j] = value;
    if (idx.empty()) {
        if (beta_out) *beta_out = b;
        return penalized_objective(Z, y, pen, b);
    }

    const int m = static_cast<int>(idx.size());
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd info(p, p);
    for (int it = 0; it < opts.max_iter; ++it) {
        score_and_info(Z, y, b, grad, info);
        Eigen::MatrixXd H = info;
        if (pen.kind == Penalty::Ridge) {
            grad -= pen.lambda * P.cwiseProduct(b);
            H += pen.lambda * P.asDiagonal();
        } else if (pen.kind == Penalty::Firth) {
            Eigen::LLT<Eigen::MatrixXd> llt(info);
            if (llt.info() != Eigen::Success) break;  // inadmissible point
            const Eigen::VectorXd eta = Z * b;
            Eigen::VectorXd wv(eta.size()), adj(eta.size());
            for (int i = 0; i < eta.size(); ++i) {
                const double pi = logistic(eta[i]);
                wv[i] = pi * (1.0 - pi);
            }
            const Eigen::VectorXd h = detail::hat_diagonal(Z, wv, llt);
            for (int i = 0; i < eta.size(); ++i) {
                const double pi = logistic(eta[i]);
                adj[i] = (y[i] - pi) + h[i] * (0.5 - pi);
            }
            grad = Z.transpose() * adj;
        }

        Eigen::VectorXd gr(m);
        Eigen::MatrixXd Hr(m, m);
        for (int a = 0; a < m; ++a) {
            gr[a] = grad[idx[a]];
            for (int c = 0; c < m; ++c) Hr(a, c) = H(idx[a], idx[c]);
        }
        if (gr.cwiseAbs().maxCoeff() <= opts.tol) break;
        Eigen::LLT<Eigen::MatrixXd> lltr(Hr);
        if (lltr.info() != Eigen::Success) break;
        const Eigen::VectorXd step = lltr.solve(gr);

        const double f0 = penalized_objective(Z, y, pen, b);
        double scale = 1.0;
        Eigen::VectorXd cand = b;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            cand = b;
            for (int a = 0; a < m; ++a) cand[idx[a]] += scale * step[a];
            if (penalized_objective(Z, y, pen, cand) >= f0 - 1e-12 * (1.0 + std::fabs(f0)))
                break;
            scale *= 0.5;
        }
        b = cand;
    }
    if (beta_out) *beta_out = b;
    return penalized_objective(Z, y, pen, b);
}

inline double profile_objective(const Dataset& d, const PenaltySpec& pen, int j, double value,
                                const SolverOptions& opts = {}) {
    return profile_objective(design_matrix(d), d.y, pen, j, value, opts);
}

// Bracket expansion followed by bisection on
//   g(v) = 2 (l*(beta_hat) - profile(v)) - chi2_{1,level}.
// Expansion runs geometrically from beta_hat_j out to |v| <= bound; a side
// with no sign change inside the bound is reported infinite.
inline ProfileCI profile_ci(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                            const PenaltySpec& pen, int j, double level = 0.95,
                            const SolverOptions& opts = {},
                            const FitResult* full_fit = nullptr, double bound = 50.0) {
    ProfileCI ci;
    ci.index = j;
    ci.level = level;

    FitResult local;
    if (!full_fit) {
        local = fit(Z, y, pen, opts);
        full_fit = &local;
    }
    const double lstar = full_fit->penalized_loglik;
    const double bj = full_fit->beta[j];
    const double q = chi2_quantile(level, 1);

    Eigen::VectorXd warm = full_fit->beta;
    auto g = [&](double v) {
        SolverOptions po = opts;
        po.start = warm;
        Eigen::VectorXd bout;
        const double obj = profile_objective(Z, y, pen, j, v, po, &bout);
        if (std::isfinite(obj)) warm = bout;
        ci.profile_trace.emplace_back(v, obj);
        return 2.0 * (lstar - obj) - q;
    };

    double se = 0.5;
    {
        Eigen::MatrixXd H = full_fit->fisher_info;
        if (pen.kind == Penalty::Ridge)
            H += pen.lambda * pen.penalty_diag(static_cast<int>(Z.cols())).asDiagonal();
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() == Eigen::Success) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(Z.cols());
            e[j] = 1.0;
            const double v = e.dot(ldlt.solve(e));
            if (v > 0 && std::isfinite(v)) se = std::sqrt(v);
        }
    }

    for (int side = 0; side < 2; ++side) {
        const double sgn = side == 0 ? -1.0 : 1.0;
        double lo_v = bj;      // g < 0 here
        double hi_v = 0.0;     // g > 0 here once found
        bool bracketed = false;
        double step = std::max(0.25 * se, 1e-3);
        for (int e = 0; e < 64; ++e) {
            double v = bj + sgn * step;
            bool at_bound = false;
            if (std::fabs(v) > bound) {
                v = sgn > 0 ? bound : -bound;
                at_bound = true;
            }
            const double gv = g(v);
            if (gv > 0.0) {
                hi_v = v;
                bracketed = true;
                break;
            }
            lo_v = v;
            if (at_bound) break;
            step *= 2.0;
        }
        if (!bracketed) continue;  // limit stays infinite

        double a = lo_v, c = hi_v;  // g(a) < 0 <= g(c)
        double root = c;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + c);
            const double gm = g(mid);
            root = mid;
            if (std::fabs(gm) < 1e-6 || std::fabs(c - a) < 1e-10) break;
            if (gm > 0.0)
                c = mid;
            else
                a = mid;
        }
        if (side == 0)
            ci.lower = root;
        else
            ci.upper = root;
    }

    std::sort(ci.profile_trace.begin(), ci.profile_trace.end());
    return ci;
}

inline ProfileCI profile_ci(const Dataset& d, const PenaltySpec& pen, int j, double level = 0.95,
                            const SolverOptions& opts = {}) {
    return profile_ci(design_matrix(d), d.y, pen, j, level, opts);
}

// Wald interval from the penalized information; provided only as a labeled
// comparator, never as a default.
struct WaldCI {
    int index = 0;
    double level = 0.95;
    double lower = 0.0;
    double upper = 0.0;
    double se = 0.0;
};

inline WaldCI wald_ci(const Eigen::MatrixXd& Z, const PenaltySpec& pen, const FitResult& fr,
                      int j, double level = 0.95) {
    WaldCI w;
    w.index = j;
    w.level = level;
    Eigen::MatrixXd H = fr.fisher_info;
    if (pen.kind == Penalty::Ridge)
        H += pen.lambda * pen.penalty_diag(static_cast<int>(Z.cols())).asDiagonal();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(Z.cols());
    e[j] = 1.0;
    const double v = e.dot(H.ldlt().solve(e));
    w.se = v > 0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
    const double z = std::sqrt(chi2_quantile(level, 1));
    w.lower = fr.beta[j] - z * w.se;
    w.upper = fr.beta[j] + z * w.se;
    return w;
}

}  // namespace penlogit
