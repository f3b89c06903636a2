#pragma once

// Bootstrap tuning of the ridge penalty against the estimated second-order
// moment matrix m(lambda) = v(lambda) + b(lambda) b(lambda)', with pooled
// penalized-likelihood-profile confidence intervals.
//
// Pipeline: draw row resamples with replacement, fit the finite plug-in
// estimator (Firth) on each resample, evaluate the information on the full
// original design at that estimate, minimize trace(B m(lambda)) per
// resample, aggregate the per-resample optima (mean by default), and refit
// exact ridge on the original data at the aggregate. Intervals pool the
// per-resample profiles through signed roots mapped by the normal CDF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlogit/glm_core.hpp"
#include "penlogit/parallel.hpp"
#include "penlogit/profile.hpp"
#include "penlogit/rng.hpp"
#include "penlogit/special.hpp"

namespace penlogit {

struct MomentMatrix {
    Eigen::VectorXd beta_plugin;   // finite plug-in estimate
    Eigen::MatrixXd info;          // unpenalized information at beta_plugin
    Eigen::MatrixXd weight;        // symmetric PSD weight B, nonzero
    Eigen::VectorXd penalty_diag;  // diagonal of the moment penalty; empty = identity
};

namespace detail {

inline Eigen::VectorXd moment_penalty(const Eigen::VectorXd& pd, int p) {
    if (pd.size() == 0) return Eigen::VectorXd::Ones(p);
    if (pd.size() != p) throw std::invalid_argument("moment penalty: dimension mismatch");
    return pd;
}

}  // namespace detail

// b(lambda) = -lambda (I + lambda P)^{-1} P beta. The printed formulas use
// P = identity; a diagonal P excluding the intercept is configurable.
inline Eigen::VectorXd bias_vec(const Eigen::VectorXd& beta, const Eigen::MatrixXd& info,
                                double lambda, const Eigen::VectorXd& penalty_diag = {}) {
    const int p = static_cast<int>(info.rows());
    const Eigen::VectorXd P = detail::moment_penalty(penalty_diag, p);
    Eigen::MatrixXd A = info;
    A.diagonal() += lambda * P;
    return -lambda * A.ldlt().solve(P.cwiseProduct(beta));
}

// v(lambda) = (I + lambda P)^{-1} I (I + lambda P)^{-1}.
inline Eigen::MatrixXd variance_mat(const Eigen::MatrixXd& info, double lambda,
                                    const Eigen::VectorXd& penalty_diag = {}) {
    const int p = static_cast<int>(info.rows());
    const Eigen::VectorXd P = detail::moment_penalty(penalty_diag, p);
    Eigen::MatrixXd A = info;
    A.diagonal() += lambda * P;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("variance_mat: information not invertible");
    const Eigen::MatrixXd M = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    return M * info * M;
}

inline double scalar_target(const MomentMatrix& m, double lambda) {
    const Eigen::MatrixXd v = variance_mat(m.info, lambda, m.penalty_diag);
    const Eigen::VectorXd b = bias_vec(m.beta_plugin, m.info, lambda, m.penalty_diag);
    return (m.weight * v).trace() + b.dot(m.weight * b);
}

struct TargetMin {
    double lambda = 0.0;
    double value = 0.0;
    bool at_upper = false;
};

// Coarse log grid, golden-section refinement, then bisection on the central
// numerical derivative. A monotone-decreasing target runs into the upper
// bound and is flagged.
inline TargetMin minimize_target(const MomentMatrix& m, double lo = 1e-8, double hi = 1e6) {
    const auto f = [&](double t) { return scalar_target(m, std::exp(t)); };
    const double tlo = std::log(lo), thi = std::log(hi);
    const int pts = 128;
    int best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pts; ++i) {
        const double t = tlo + (thi - tlo) * i / (pts - 1.0);
        const double v = f(t);
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    TargetMin r;
    if (best == pts - 1) {
        r.lambda = hi;
        r.value = best_v;
        r.at_upper = true;
        return r;
    }
    const double step = (thi - tlo) / (pts - 1.0);
    double a = std::max(tlo, tlo + step * (best - 1));
    double b = std::min(thi, tlo + step * (best + 1));
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 80; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    double x = f1 <= f2 ? x1 : x2;
    // Polish against the derivative sign change when one brackets the optimum.
    const double h = 1e-6;
    auto deriv = [&](double t) { return (f(t + h) - f(t - h)) / (2.0 * h); };
    double da = deriv(a), db = deriv(b);
    if (da < 0.0 && db > 0.0) {
        double la = a, lb = b;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (la + lb);
            (deriv(mid) < 0.0 ? la : lb) = mid;
        }
        x = 0.5 * (la + lb);
    }
    r.lambda = std::exp(x);
    r.value = f(x);
    if (r.value > best_v) {  // keep the grid point if refinement drifted
        r.lambda = std::exp(tlo + step * best);
        r.value = best_v;
    }
    return r;
}

struct BTuneOptions {
    Eigen::MatrixXd weight;          // empty = identity on the slope block
    Eigen::VectorXd moment_penalty;  // diag of P inside m(lambda); empty = full identity
    Eigen::VectorXd fit_mask;        // ridge mask for refits; empty = intercept unpenalized
    bool use_median = false;
    bool resample = true;            // false: every "resample" is the original data
    int max_redraws = 10;
    int threads = 1;
    double lambda_lo = 1e-8;
    double lambda_hi = 1e6;
    SolverOptions solver;
};

struct BTuneResult {
    double lambda_star = 0.0;
    std::vector<double> lambdas;  // per-resample optima
    Eigen::VectorXd point;        // exact ridge on the original data at lambda_star
    FitResult point_fit;
    int redraws = 0;
    bool any_upper_edge = false;
};

namespace detail {

// Slope-block identity: intercept excluded from the weight. This choice
// reproduces the published interval widths; the full identity is available
// by passing an explicit weight.
inline Eigen::MatrixXd default_weight(int p) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(p, p);
    B(0, 0) = 0.0;
    return B;
}

inline bool degenerate_resample(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                const std::vector<int>& idx) {
    bool y_const = true;
    for (size_t i = 1; i < idx.size(); ++i)
        if (y[idx[i]] != y[idx[0]]) {
            y_const = false;
            break;
        }
    if (y_const) return true;
    for (int j = 1; j < Z.cols(); ++j) {
        bool cconst = true;
        for (size_t i = 1; i < idx.size(); ++i)
            if (Z(idx[i], j) != Z(idx[0], j)) {
                cconst = false;
                break;
            }
        if (cconst) return true;
    }
    return false;
}

}  // namespace detail

// Steps i-iv of the bootstrap tuning loop. Per-resample RNG substreams are
// derived from the master seed by counter, so every thread count produces
// the identical lambda sequence.
inline BTuneResult b_tune(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, int n_boot,
                          std::uint64_t seed, const BTuneOptions& opts = {}) {
    if (n_boot < 1) throw std::invalid_argument("b_tune: n_boot must be >= 1");
    const int n = static_cast<int>(Z.rows());
    const int p = static_cast<int>(Z.cols());
    const Eigen::MatrixXd weight = opts.weight.size() ? opts.weight : detail::default_weight(p);

    BTuneResult res;
    res.lambdas.assign(n_boot, 0.0);
    std::vector<char> upper(n_boot, 0);
    std::vector<int> redraws(n_boot, 0);
    std::vector<char> failed(n_boot, 0);

    detail::parallel_for(n_boot, opts.threads, [&](int b) {
        CounterRng rng(seed, 0x42u + static_cast<std::uint64_t>(b));
        std::vector<int> idx(n);
        for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
            if (opts.resample) {
                for (int i = 0; i < n; ++i)
                    idx[i] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            } else {
                std::iota(idx.begin(), idx.end(), 0);
            }
            if (opts.resample && detail::degenerate_resample(Z, y, idx)) {
                redraws[b] = attempt + 1;
                continue;
            }
            Eigen::MatrixXd Zb(n, p);
            Eigen::VectorXd yb(n);
            for (int i = 0; i < n; ++i) {
                Zb.row(i) = Z.row(idx[i]);
                yb[i] = y[idx[i]];
            }
            try {
                const FitResult fb = fit(Zb, yb, PenaltySpec::firth(), opts.solver);
                Eigen::VectorXd g;
                Eigen::MatrixXd I;
                score_and_info(Z, y, fb.beta, g, I);
                MomentMatrix m{fb.beta, I, weight, opts.moment_penalty};
                const TargetMin t = minimize_target(m, opts.lambda_lo, opts.lambda_hi);
                res.lambdas[b] = t.lambda;
                upper[b] = t.at_upper;
                redraws[b] = attempt;
                return;
            } catch (const std::exception&) {
                redraws[b] = attempt + 1;  // rank-deficient resample: redraw
            }
        }
        failed[b] = 1;
    });

    for (int b = 0; b < n_boot; ++b) {
        if (failed[b])
            throw std::runtime_error("b_tune: resample " + std::to_string(b) +
                                     " stayed degenerate after retries");
        res.redraws += redraws[b];
        res.any_upper_edge = res.any_upper_edge || upper[b];
    }

    if (opts.use_median) {
        std::vector<double> s = res.lambdas;
        std::sort(s.begin(), s.end());
        const size_t h = s.size() / 2;
        res.lambda_star = s.size() % 2 ? s[h] : 0.5 * (s[h - 1] + s[h]);
    } else {
        res.lambda_star =
            std::accumulate(res.lambdas.begin(), res.lambdas.end(), 0.0) / n_boot;
    }

    res.point_fit = fit(Z, y, PenaltySpec::ridge(res.lambda_star, opts.fit_mask), opts.solver);
    res.point = res.point_fit.beta;
    return res;
}

// ---------------------------------------------------------------------------
// CLIP pooling of per-resample penalized likelihood profiles.

struct ClipProfilePool {
    int index = 0;
    double level = 0.95;
    std::vector<double> lambdas;
    std::vector<double> grid;                    // shared beta grid
    std::vector<std::vector<double>> profiles;   // per-resample F_b on the grid
    std::vector<double> pooled;                  // isotonic-repaired mean CDF
    std::vector<double> mean_logprof;            // mean normalized log profile
    double repair_delta = 0.0;
    bool repaired = false;
    std::vector<std::string> warnings;
    std::function<double(double)> fbar;          // exact pooled CDF
    std::function<double(double)> logprof;       // exact mean log profile
};

struct ClipOptions {
    Eigen::VectorXd fit_mask;  // ridge mask; empty = intercept unpenalized
    int grid_points = 161;
    int threads = 1;
    SolverOptions solver;
};

struct ClipResult {
    ProfileCI ci;
    ClipProfilePool pool;
};

inline ClipResult clip_ci(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                          const std::vector<double>& lambdas, int j, double level = 0.95,
                          const ClipOptions& opts = {}) {
    if (lambdas.empty()) throw std::invalid_argument("clip_ci: no lambdas");
    for (double l : lambdas)
        if (!(l > 0)) throw std::invalid_argument("clip_ci: lambdas must be positive");
    const int B = static_cast<int>(lambdas.size());

    // Anchor fits on the original data, one per resample lambda.
    std::vector<Eigen::VectorXd> bhat(B);
    std::vector<double> l0(B);
    detail::parallel_for(B, opts.threads, [&](int b) {
        const FitResult r =
            fit(Z, y, PenaltySpec::ridge(lambdas[b], opts.fit_mask), opts.solver);
        if (!r.converged)
            throw std::runtime_error("clip_ci: anchor ridge fit did not converge");
        bhat[b] = r.beta;
        l0[b] = r.penalized_loglik;
    });

    // Pooled CDF via signed roots; evaluation order fixed for determinism.
    auto fbar_parts = [&, j](double v, std::vector<double>& parts) {
        detail::parallel_for(B, opts.threads, [&](int b) {
            SolverOptions so = opts.solver;
            so.start = bhat[b];
            const double lp = profile_objective(
                Z, y, PenaltySpec::ridge(lambdas[b], opts.fit_mask), j, v, so);
            const double r =
                (v >= bhat[b][j] ? 1.0 : -1.0) * std::sqrt(std::max(0.0, 2.0 * (l0[b] - lp)));
            parts[b] = normal_cdf(r);
        });
        double s = 0.0;
        for (int b = 0; b < B; ++b) s += parts[b];
        return s / B;
    };
    std::vector<double> scratch(B);
    auto fbar = [&](double v) { return fbar_parts(v, scratch); };

    std::vector<double> pts(B);
    for (int b = 0; b < B; ++b) pts[b] = bhat[b][j];
    std::sort(pts.begin(), pts.end());
    const double center = pts[B / 2];
    double spread = std::max(1e-3, pts.back() - pts.front());

    ClipResult out;
    out.ci.index = j;
    out.ci.level = level;
    const double a_lo = (1.0 - level) / 2.0;
    const double a_hi = 1.0 - a_lo;

    // Expanding brackets outward from the anchor median.
    double lo_out = center - spread, hi_in = center;
    bool lo_ok = false;
    for (int e = 0; e < 64; ++e) {
        if (fbar(lo_out) < a_lo) {
            lo_ok = true;
            break;
        }
        hi_in = lo_out;
        lo_out = center - 2.0 * (center - lo_out);
    }
    double hi_out = center + spread, lo_in = center;
    bool hi_ok = false;
    for (int e = 0; e < 64; ++e) {
        if (fbar(hi_out) > a_hi) {
            hi_ok = true;
            break;
        }
        lo_in = hi_out;
        hi_out = center + 2.0 * (hi_out - center);
    }

    auto bisect = [&](double lo, double hi, double target) {
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (fbar(mid) < target)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-9 * (1.0 + std::fabs(mid))) break;
        }
        return 0.5 * (lo + hi);
    };
    if (lo_ok) out.ci.lower = bisect(lo_out, hi_in, a_lo);
    if (hi_ok) out.ci.upper = bisect(lo_in, hi_out, a_hi);
    if (!lo_ok) out.pool.warnings.push_back("lower bracket not found; limit infinite");
    if (!hi_ok) out.pool.warnings.push_back("upper bracket not found; limit infinite");

    // Shared-grid pool for diagnostics and the mode.
    ClipProfilePool& pool = out.pool;
    pool.index = j;
    pool.level = level;
    pool.lambdas = lambdas;
    const double glo = (lo_ok ? out.ci.lower : center - 4.0 * spread) - 0.15 * spread;
    const double ghi = (hi_ok ? out.ci.upper : center + 4.0 * spread) + 0.15 * spread;
    const int G = std::max(3, opts.grid_points);
    pool.grid.resize(G);
    pool.profiles.assign(B, std::vector<double>(G, 0.0));
    pool.mean_logprof.assign(G, 0.0);
    for (int g = 0; g < G; ++g) pool.grid[g] = glo + (ghi - glo) * g / (G - 1.0);
    detail::parallel_for(B, opts.threads, [&](int b) {
        SolverOptions so = opts.solver;
        so.start = bhat[b];
        for (int g = 0; g < G; ++g) {
            Eigen::VectorXd bout;
            const double lp = profile_objective(
                Z, y, PenaltySpec::ridge(lambdas[b], opts.fit_mask), j, pool.grid[g], so, &bout);
            so.start = bout;
            const double r = (pool.grid[g] >= bhat[b][j] ? 1.0 : -1.0) *
                             std::sqrt(std::max(0.0, 2.0 * (l0[b] - lp)));
            pool.profiles[b][g] = normal_cdf(r);
        }
    });
    pool.pooled.assign(G, 0.0);
    for (int g = 0; g < G; ++g) {
        double s = 0.0;
        for (int b = 0; b < B; ++b) s += pool.profiles[b][g];
        pool.pooled[g] = s / B;
    }
    // Mean normalized log profile for the mode (second pass, cheap).
    detail::parallel_for(G, opts.threads, [&](int g) {
        double s = 0.0;
        for (int b = 0; b < B; ++b) {
            SolverOptions so = opts.solver;
            so.start = bhat[b];
            const double lp = profile_objective(
                Z, y, PenaltySpec::ridge(lambdas[b], opts.fit_mask), j, pool.grid[g], so);
            s += lp - l0[b];
        }
        pool.mean_logprof[g] = s / B;
    });

    // Isotonic repair (pool-adjacent-violators) of the pooled CDF.
    {
        std::vector<double> v = pool.pooled;
        int m = 0;
        std::vector<double> stack_v(G);
        std::vector<int> stack_n(G);
        for (int g = 0; g < G; ++g) {
            double cv = v[g];
            int cn = 1;
            while (m > 0 && stack_v[m - 1] > cv) {
                cv = (stack_v[m - 1] * stack_n[m - 1] + cv * cn) / (stack_n[m - 1] + cn);
                cn += stack_n[m - 1];
                --m;
            }
            stack_v[m] = cv;
            stack_n[m] = cn;
            ++m;
        }
        std::vector<double> rep(G);
        int pos = 0;
        for (int s = 0; s < m; ++s)
            for (int k = 0; k < stack_n[s]; ++k) rep[pos++] = stack_v[s];
        for (int g = 0; g < G; ++g)
            pool.repair_delta = std::max(pool.repair_delta, std::fabs(rep[g] - pool.pooled[g]));
        if (pool.repair_delta > 0.0) {
            pool.repaired = true;
            pool.warnings.push_back("pooled CDF repaired; max perturbation " +
                                    std::to_string(pool.repair_delta));
            pool.pooled = rep;
        }
    }

    // Exact evaluators for refinement after the pool is frozen.
    const Eigen::MatrixXd Zc = Z;
    const Eigen::VectorXd yc = y;
    const std::vector<double> lamc = lambdas;
    const Eigen::VectorXd maskc = opts.fit_mask;
    const SolverOptions soc = opts.solver;
    const std::vector<Eigen::VectorXd> bh = bhat;
    const std::vector<double> l0c = l0;
    pool.fbar = [=](double v) {
        double s = 0.0;
        for (size_t b = 0; b < lamc.size(); ++b) {
            SolverOptions so = soc;
            so.start = bh[b];
            const double lp =
                profile_objective(Zc, yc, PenaltySpec::ridge(lamc[b], maskc), j, v, so);
            const double r = (v >= bh[b][j] ? 1.0 : -1.0) *
                             std::sqrt(std::max(0.0, 2.0 * (l0c[b] - lp)));
            s += normal_cdf(r);
        }
        return s / static_cast<double>(lamc.size());
    };
    pool.logprof = [=](double v) {
        double s = 0.0;
        for (size_t b = 0; b < lamc.size(); ++b) {
            SolverOptions so = soc;
            so.start = bh[b];
            s += profile_objective(Zc, yc, PenaltySpec::ridge(lamc[b], maskc), j, v, so) - l0c[b];
        }
        return s / static_cast<double>(lamc.size());
    };

    out.ci.profile_trace.reserve(G);
    for (int g = 0; g < G; ++g) out.ci.profile_trace.emplace_back(pool.grid[g], pool.pooled[g]);
    return out;
}

// Mode of the pooled profile likelihood: grid argmax refined by golden
// section between the neighboring grid points.
inline double clip_mode(const ClipProfilePool& pool) {
    if (pool.grid.empty()) throw std::invalid_argument("clip_mode: empty pool");
    int best = 0;
    for (int g = 1; g < static_cast<int>(pool.grid.size()); ++g)
        if (pool.mean_logprof[g] > pool.mean_logprof[best]) best = g;
    if (!pool.logprof) return pool.grid[best];
    double a = pool.grid[std::max(0, best - 1)];
    double b = pool.grid[std::min<int>(pool.grid.size() - 1, best + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = pool.logprof(x1), f2 = pool.logprof(x2);
    for (int i = 0; i < 60; ++i) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = pool.logprof(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = pool.logprof(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace penlogit
