#pragma once

// Tuning criteria over a lambda grid: leave-one-out deviance (D), mean
// squared prediction error (E), classification error (C), and AIC with
// effective degrees of freedom (A), plus validation-set variants of D/E/C.
//
// Leave-one-out fits are exact ridge refits (observation weighted out), warm
// started from the full-data fit at the same lambda. The grid walk warms each
// full fit from the previous grid point; leave-one-out fits depend only on
// their own grid point, so parallelizing them cannot change results.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlogit/glm_core.hpp"
#include "penlogit/parallel.hpp"

namespace penlogit {

struct LambdaGrid {
    std::vector<double> values;

    static LambdaGrid log_linear(double min = 1e-6, double max = 20.0, int count = 200) {
        if (!(min > 0) || !(max > min) || count < 2)
            throw std::invalid_argument("grid: need 0 < min < max and count >= 2");
        LambdaGrid g;
        g.values.resize(count);
        const double llo = std::log(min), lhi = std::log(max);
        for (int i = 0; i < count; ++i)
            g.values[i] = std::exp(llo + (lhi - llo) * i / (count - 1.0));
        return g;
    }
};

enum class TuneCriterion { D, E, C, A };
enum class Boundary { No, LowerEdge, UpperEdge };
enum class AicLoglik { Penalized, Unpenalized };

inline const char* to_string(TuneCriterion c) {
    switch (c) {
        case TuneCriterion::D: return "D";
        case TuneCriterion::E: return "E";
        case TuneCriterion::C: return "C";
        case TuneCriterion::A: return "A";
    }
    return "?";
}

struct TuningCurve {
    TuneCriterion criterion = TuneCriterion::D;
    LambdaGrid grid;
    std::vector<double> values;
    double lambda_star = 0.0;
    int star_index = -1;
    Boundary at_boundary = Boundary::No;
    bool unique_min = true;
    std::vector<std::string> warnings;
};

struct TuneOptions {
    Eigen::VectorXd penalized_mask;  // empty = intercept unpenalized, rest penalized
    AicLoglik aic_loglik = AicLoglik::Penalized;
    SolverOptions solver;
    int threads = 1;
};

// Exact leave-one-out ridge probabilities: observation i is weighted out and
// the model refit, warm started at `start` (typically the full-data fit).
inline Eigen::VectorXd loocv_probs(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   double lambda, const Eigen::VectorXd& mask = {},
                                   const SolverOptions& opts = {}, int threads = 1,
                                   const Eigen::VectorXd& start = {}) {
    const int n = static_cast<int>(Z.rows());
    const PenaltySpec pen = PenaltySpec::ridge(lambda, mask);

    Eigen::VectorXd full_start = start;
    if (full_start.size() != Z.cols()) {
        const FitResult full = fit(Z, y, pen, opts);
        if (!full.converged) throw std::runtime_error("loocv_probs: full-data fit did not converge");
        full_start = full.beta;
    }

    Eigen::VectorXd probs(n);
    std::vector<char> failed(n, 0);
    detail::parallel_for(n, threads, [&](int i) {
        Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
        w[i] = 0.0;
        SolverOptions so = opts;
        so.start = full_start;
        const FitResult r = fit(Z, y, pen, so, &w);
        if (!r.converged) {
            failed[i] = 1;
            return;
        }
        probs[i] = logistic(Z.row(i).dot(r.beta));
    });
    for (int i = 0; i < n; ++i)
        if (failed[i])
            throw std::runtime_error("loocv_probs: leave-one-out fit " + std::to_string(i) +
                                     " did not converge at lambda=" + std::to_string(lambda));
    return probs;
}

// Deviance -2 sum[y log p + (1-y) log(1-p)]; +inf when a probability hits
// the boundary for an observed outcome.
inline double criterion_D(const Eigen::VectorXd& probs, const Eigen::VectorXd& y) {
    double d = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double p = probs[i];
        if (y[i] > 0.5) {
            if (p <= 0.0) return std::numeric_limits<double>::infinity();
            d += -2.0 * std::log(p);
        } else {
            if (p >= 1.0) return std::numeric_limits<double>::infinity();
            d += -2.0 * std::log1p(-p);
        }
    }
    return d;
}

inline double criterion_E(const Eigen::VectorXd& probs, const Eigen::VectorXd& y) {
    return (y - probs).squaredNorm() / static_cast<double>(y.size());
}

// Mean classification error with half credit on exact 1/2 probabilities.
inline double criterion_C(const Eigen::VectorXd& probs, const Eigen::VectorXd& y) {
    double c = 0.0;
    for (int i = 0; i < y.size(); ++i) {
        const double p = probs[i];
        if (std::fabs(p - 0.5) < 1e-12) {
            c += 0.5;
        } else {
            const double pred = p > 0.5 ? 1.0 : 0.0;
            if (pred != y[i]) c += 1.0;
        }
    }
    return c / static_cast<double>(y.size());
}

// AIC with effective degrees of freedom tr[I (I + lambda P)^{-1}]. The
// log-likelihood entering the formula is the penalized objective as printed;
// the unpenalized variant is selectable.
inline double criterion_A(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double lambda,
                          const Eigen::VectorXd& mask = {},
                          AicLoglik which = AicLoglik::Penalized, const SolverOptions& opts = {},
                          Eigen::VectorXd* beta_out = nullptr) {
    const PenaltySpec pen = PenaltySpec::ridge(lambda, mask);
    const FitResult r = fit(Z, y, pen, opts);
    if (!r.converged) throw std::runtime_error("criterion_A: ridge fit did not converge");
    if (beta_out) *beta_out = r.beta;
    const double dfe =
        effective_df(r.fisher_info, lambda, pen.penalty_diag(static_cast<int>(Z.cols())));
    const double ll = which == AicLoglik::Penalized ? r.penalized_loglik : r.loglik;
    return -2.0 * (ll - dfe);
}

namespace detail {

inline void finalize_curve(TuningCurve& c) {
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(c.values.size()); ++i) {
        if (std::isfinite(c.values[i]) && c.values[i] < best_v) {
            best_v = c.values[i];
            best = i;
        }
    }
    if (best < 0) throw std::runtime_error("tune: criterion undefined on the whole grid");
    c.star_index = best;
    c.lambda_star = c.grid.values[best];
    c.at_boundary = best == 0 ? Boundary::LowerEdge
                              : (best + 1 == static_cast<int>(c.values.size()) ? Boundary::UpperEdge
                                                                               : Boundary::No);
    c.unique_min = true;
    for (int i = 0; i < static_cast<int>(c.values.size()); ++i) {
        if (i == best || !std::isfinite(c.values[i])) continue;
        if (std::fabs(c.values[i] - best_v) <= 1e-12 * (1.0 + std::fabs(best_v))) {
            c.unique_min = false;
            break;
        }
    }
}

}  // namespace detail

// Evaluates one criterion over the grid. With a validation design the
// leave-one-out probabilities are replaced by full-data-fit probabilities on
// the validation rows (criteria D/E/C; A always scores the training fit).
inline TuningCurve tune(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, TuneCriterion crit,
                        const LambdaGrid& grid = LambdaGrid::log_linear(),
                        const TuneOptions& opts = {}, const Eigen::MatrixXd* Zv = nullptr,
                        const Eigen::VectorXd* yv = nullptr) {
    if ((Zv == nullptr) != (yv == nullptr))
        throw std::invalid_argument("tune: validation design and response must come together");
    if (Zv && Zv->cols() != Z.cols())
        throw std::invalid_argument("tune: validation design width mismatch");

    TuningCurve curve;
    curve.criterion = crit;
    curve.grid = grid;
    const int g = static_cast<int>(grid.values.size());
    curve.values.assign(g, std::numeric_limits<double>::infinity());
    if (Zv && crit == TuneCriterion::A)
        curve.warnings.push_back("criterion A ignores the validation set");

    Eigen::VectorXd warm;  // walk the grid upward, warm starting the full fit
    for (int j = 0; j < g; ++j) {
        const double lam = grid.values[j];
        try {
            SolverOptions so = opts.solver;
            if (warm.size() == Z.cols()) so.start = warm;
            if (crit == TuneCriterion::A) {
                Eigen::VectorXd beta;
                curve.values[j] =
                    criterion_A(Z, y, lam, opts.penalized_mask, opts.aic_loglik, so, &beta);
                warm = beta;
                continue;
            }
            const FitResult full = fit(Z, y, PenaltySpec::ridge(lam, opts.penalized_mask), so);
            if (!full.converged)
                throw std::runtime_error("full-data ridge fit did not converge");
            warm = full.beta;

            Eigen::VectorXd probs, target;
            if (Zv) {
                probs.resize(Zv->rows());
                for (int i = 0; i < Zv->rows(); ++i)
                    probs[i] = logistic(Zv->row(i).dot(full.beta));
                target = *yv;
            } else {
                probs = loocv_probs(Z, y, lam, opts.penalized_mask, opts.solver, opts.threads,
                                    full.beta);
                target = y;
            }
            switch (crit) {
                case TuneCriterion::D: curve.values[j] = criterion_D(probs, target); break;
                case TuneCriterion::E: curve.values[j] = criterion_E(probs, target); break;
                case TuneCriterion::C: curve.values[j] = criterion_C(probs, target); break;
                case TuneCriterion::A: break;  // handled above
            }
        } catch (const std::exception& e) {
            curve.warnings.push_back("lambda=" + std::to_string(lam) + ": " + e.what());
        }
    }
    detail::finalize_curve(curve);
    return curve;
}

inline TuningCurve tune(const Dataset& d, TuneCriterion crit,
                        const LambdaGrid& grid = LambdaGrid::log_linear(),
                        const TuneOptions& opts = {}, const Dataset* validation = nullptr) {
    d.validate();
    const Eigen::MatrixXd Z = design_matrix(d);
    if (!validation) return tune(Z, d.y, crit, grid, opts);
    validation->validate();
    if (validation->k() != d.k())
        throw std::invalid_argument("tune: validation covariate count mismatch");
    const Eigen::MatrixXd Zv = design_matrix(*validation);
    return tune(Z, d.y, crit, grid, opts, &Zv, &validation->y);
}

}  // namespace penlogit
