#pragma once

// Log-likelihood, score, Fisher information, and damped-Newton solvers for
// ML, Firth, and ridge logistic regression, plus the data-augmentation
// approximation to ridge. All fits operate on an explicit design matrix
// whose column 0 is the intercept.

#include "dataset.hpp"
#include "special.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace penlogit {

enum class Penalty { None, Firth, Ridge };

struct PenaltySpec {
    Penalty kind = Penalty::None;
    double lambda = 0.0;              // Ridge only
    Eigen::VectorXd penalized_mask;   // 0/1 per coefficient; empty = default

    static PenaltySpec ml() { return {}; }
    static PenaltySpec firth() { return {Penalty::Firth, 0.0, {}}; }
    static PenaltySpec ridge(double lambda) { return {Penalty::Ridge, lambda, {}}; }
    static PenaltySpec ridge(double lambda, Eigen::VectorXd mask) {
        return {Penalty::Ridge, lambda, std::move(mask)};
    }

    // Penalty diagonal for p coefficients; the default mask leaves the
    // intercept (position 0) unpenalized.
    Eigen::VectorXd penalty_diag(int p) const {
        if (kind != Penalty::Ridge) return Eigen::VectorXd::Zero(p);
        if (penalized_mask.size() == 0) {
            Eigen::VectorXd m = Eigen::VectorXd::Ones(p);
            m[0] = 0.0;
            return m;
        }
        if (penalized_mask.size() != p)
            throw std::invalid_argument("penalty mask: dimension mismatch");
        return penalized_mask;
    }
};

struct FitResult {
    Eigen::VectorXd beta;
    double loglik = 0.0;            // unpenalized l(beta)
    double penalized_loglik = 0.0;  // objective at the optimum
    Eigen::MatrixXd fisher_info;    // X'WX at beta (unpenalized information)
    bool converged = false;
    int iterations = 0;
    double max_abs_score = std::numeric_limits<double>::infinity();
};

struct SolverOptions {
    int max_iter = 100;
    double tol = 1e-8;              // on max|score|
    int max_halvings = 25;
    double divergence_guard = 50.0; // ML-only: stop when ||beta||_inf exceeds it
    Eigen::VectorXd start;          // empty = zeros
};

inline double loglik(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& beta,
                     const Eigen::VectorXd* weights = nullptr) {
    const Eigen::VectorXd eta = Z * beta;
    double ll = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double w = weights ? (*weights)[i] : 1.0;
        ll += w * (y[i] * eta[i] - log1pexp(eta[i]));
    }
    return ll;
}

inline void score_and_info(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& beta, Eigen::VectorXd& grad,
                           Eigen::MatrixXd& info,
                           const Eigen::VectorXd* weights = nullptr) {
    const Eigen::VectorXd eta = Z * beta;
    Eigen::VectorXd pi(eta.size()), wv(eta.size());
    for (int i = 0; i < eta.size(); ++i) {
        pi[i] = logistic(eta[i]);
        const double w = weights ? (*weights)[i] : 1.0;
        wv[i] = w * pi[i] * (1.0 - pi[i]);
    }
    Eigen::VectorXd resid = y - pi;
    if (weights) resid = weights->cwiseProduct(resid);
    grad = Z.transpose() * resid;
    info = Z.transpose() * wv.asDiagonal() * Z;
}

namespace detail {

// Diagonal of the hat matrix W^{1/2} Z (Z'WZ)^{-1} Z' W^{1/2}; `info` must
// already hold Z'WZ for the same weights.
inline Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& Z, const Eigen::VectorXd& wv,
                                    const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::MatrixXd S = llt.solve(Z.transpose()); // p x n
    Eigen::VectorXd h(Z.rows());
    for (int i = 0; i < Z.rows(); ++i) h[i] = wv[i] * Z.row(i).dot(S.col(i));
    return h;
}

inline double half_logdet(const Eigen::LLT<Eigen::MatrixXd>& llt, bool& ok) {
    double s = 0.0;
    const auto& L = llt.matrixLLT();
    for (int i = 0; i < L.rows(); ++i) {
        const double d = L(i, i);
        if (!(d > 0.0) || !std::isfinite(d)) { ok = false; return 0.0; }
        s += std::log(d);
    }
    ok = true;
    return s; // = 1/2 log|A| since |A| = prod L_ii^2
}

} // namespace detail

// Damped Newton for any PenaltySpec. Requires a full-column-rank design;
// rank is checked once at the start via a pivoted QR.
inline FitResult fit(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                     const PenaltySpec& pen, const SolverOptions& opts = {},
                     const Eigen::VectorXd* weights = nullptr) {
    const int p = static_cast<int>(Z.cols());
    if (Z.rows() != y.size()) throw std::invalid_argument("fit: X/y row mismatch");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
        if (qr.rank() < p) throw std::invalid_argument("fit: design matrix is rank deficient");
    }
    const Eigen::VectorXd P = pen.penalty_diag(p);

    FitResult r;
    r.beta = opts.start.size() == p ? opts.start : Eigen::VectorXd::Zero(p);

    // Objective value; -inf when the Firth information is not positive
    // definite (rejects steps that leave the admissible region).
    auto objective = [&](const Eigen::VectorXd& b) -> double {
        const double ll = loglik(Z, y, b, weights);
        if (pen.kind == Penalty::None) return ll;
        if (pen.kind == Penalty::Ridge)
            return ll - 0.5 * pen.lambda * (P.array() * b.array().square()).sum();
        Eigen::VectorXd g;
        Eigen::MatrixXd I;
        score_and_info(Z, y, b, g, I, weights);
        Eigen::LLT<Eigen::MatrixXd> llt(I);
        bool ok = llt.info() == Eigen::Success;
        double hl = ok ? detail::half_logdet(llt, ok) : 0.0;
        if (!ok) return -std::numeric_limits<double>::infinity();
        return ll + hl;
    };

    double obj = objective(r.beta);
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd info(p, p);

    for (r.iterations = 0; r.iterations < opts.max_iter; ++r.iterations) {
        score_and_info(Z, y, r.beta, grad, info, weights);
        Eigen::MatrixXd H = info;
        if (pen.kind == Penalty::Ridge) {
            grad -= pen.lambda * P.cwiseProduct(r.beta);
            H += pen.lambda * P.asDiagonal();
        }
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (pen.kind == Penalty::Firth) {
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("fit: Firth information not positive definite");
            const Eigen::VectorXd eta = Z * r.beta;
            Eigen::VectorXd wv(eta.size()), adj(eta.size());
            for (int i = 0; i < eta.size(); ++i) {
                const double pi = logistic(eta[i]);
                const double w = weights ? (*weights)[i] : 1.0;
                wv[i] = w * pi * (1.0 - pi);
            }
            const Eigen::VectorXd h = detail::hat_diagonal(Z, wv, llt);
            for (int i = 0; i < eta.size(); ++i) {
                const double pi = logistic(eta[i]);
                const double w = weights ? (*weights)[i] : 1.0;
                adj[i] = w * (y[i] - pi) + h[i] * (0.5 - pi);
            }
            grad = Z.transpose() * adj;
        }
        r.max_abs_score = grad.cwiseAbs().maxCoeff();
        if (r.max_abs_score <= opts.tol) {
            r.converged = true;
            break;
        }
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("fit: Newton system not positive definite");
        Eigen::VectorXd step = llt.solve(grad);

        double scale = 1.0;
        Eigen::VectorXd cand;
        double cand_obj = -std::numeric_limits<double>::infinity();
        for (int h = 0; h <= opts.max_halvings; ++h) {
            cand = r.beta + scale * step;
            cand_obj = objective(cand);
            if (cand_obj >= obj - 1e-12 * (1.0 + std::fabs(obj))) break;
            scale *= 0.5;
        }
        r.beta = cand;
        obj = cand_obj;

        if (pen.kind == Penalty::None &&
            r.beta.cwiseAbs().maxCoeff() > opts.divergence_guard) {
            r.converged = false;
            ++r.iterations;
            break;
        }
    }

    score_and_info(Z, y, r.beta, grad, r.fisher_info, weights);
    r.loglik = loglik(Z, y, r.beta, weights);
    r.penalized_loglik = objective(r.beta);
    if (pen.kind == Penalty::None && r.converged) {
        // A maximum-likelihood estimate cannot exist when the fitted
        // coefficients classify every observation strictly correctly: such a
        // vector separates the classes, so the likelihood keeps increasing
        // along it. A score below tolerance there is a separation limit, not
        // a stationary point. The linear-predictor bound is a backstop for
        // boundary configurations whose limit keeps some margins at zero.
        const Eigen::VectorXd eta = Z * r.beta;
        const double min_margin =
            ((2.0 * y.array() - 1.0) * eta.array()).minCoeff();
        if (min_margin > 0.0 || eta.cwiseAbs().maxCoeff() > 30.0)
            r.converged = false;
    }
    return r;
}

inline FitResult fit(const Dataset& d, const PenaltySpec& pen, const SolverOptions& opts = {}) {
    d.validate();
    return fit(design_matrix(d), d.y, pen, opts);
}

// Ridge via data augmentation: per penalized covariate, add one event and
// one non-event pseudo-row taking value 1/s on that covariate and 0
// elsewhere (including the intercept column), each weighted w = 2*lambda*s^2.
// A quadratic expansion of the pseudo-row likelihood around 0 reproduces the
// ridge penalty, so this is an approximation that improves with s.
inline FitResult fit_augmented(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                               double lambda, const Eigen::VectorXd& mask_in = {},
                               double s = 10.0, const SolverOptions& opts = {}) {
    if (lambda <= 0.0) throw std::invalid_argument("fit_augmented: lambda must be > 0");
    const int p = static_cast<int>(Z.cols());
    const Eigen::VectorXd mask = PenaltySpec::ridge(lambda, mask_in).penalty_diag(p);
    const int npen = static_cast<int>((mask.array() > 0.0).count());
    const int n = static_cast<int>(Z.rows());

    Eigen::MatrixXd Za(n + 2 * npen, p);
    Eigen::VectorXd ya(n + 2 * npen), wa(n + 2 * npen);
    Za.topRows(n) = Z;
    ya.head(n) = y;
    wa.head(n).setOnes();
    int row = n;
    const double w = 2.0 * lambda * s * s;
    for (int j = 0; j < p; ++j) {
        if (mask[j] <= 0.0) continue;
        for (int e = 0; e < 2; ++e) {
            Za.row(row).setZero();
            Za(row, j) = 1.0 / s;
            ya[row] = e == 0 ? 1.0 : 0.0;
            wa[row] = w;
            ++row;
        }
    }
    return fit(Za, ya, PenaltySpec::ml(), opts, &wa);
}

// Effective degrees of freedom tr[I (I + lambda P)^{-1}] for the ridge fit
// whose unpenalized information at the optimum is I.
inline double effective_df(const Eigen::MatrixXd& info, double lambda,
                           const Eigen::VectorXd& penalty_diag) {
    Eigen::MatrixXd A = info;
    A.diagonal() += lambda * penalty_diag;
    return (A.ldlt().solve(info)).trace();
}

} // namespace penlogit
