#pragma once

// Data-generating mechanism and scenario runner for the simulation study:
// correlated latent normals mapped through the published transformation
// table, intercept calibrated to a 10% event rate, and a per-replicate
// method comparison (ML, Firth, ridge under each tuning rule) accumulated
// into long-format metric rows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlogit/btune.hpp"
#include "penlogit/glm_core.hpp"
#include "penlogit/parallel.hpp"
#include "penlogit/profile.hpp"
#include "penlogit/rng.hpp"
#include "penlogit/separation.hpp"
#include "penlogit/tuning.hpp"

namespace penlogit {
namespace sim {

constexpr int kMaxCov = 15;

// Continuous covariates: truncated at Q3 + 5 IQR and given sextile-scaled
// effects. All other covariates are binary or ordinal.
inline bool is_continuous(int k) {
    switch (k) {
        case 2: case 3: case 4: case 5: case 6:
        case 11: case 12: case 13: case 14:
            return true;
        default:
            return false;
    }
}

// Latent correlation structure: unit diagonal plus the 19 printed pairs
// (1-based labels in the source table).
inline Eigen::MatrixXd correlation_matrix() {
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(kMaxCov, kMaxCov);
    const struct { int i, j; double r; } pairs[] = {
        {1, 2, 0.5},   {1, 6, 0.5},   {1, 12, 0.5},  {2, 6, 0.3},   {2, 11, -0.3},
        {3, 4, 0.3},   {3, 11, -0.5}, {4, 7, 0.5},   {4, 13, -0.3}, {6, 9, 0.5},
        {6, 13, 0.5},  {6, 14, 0.3},  {9, 13, 0.3},  {9, 14, 0.3},  {10, 13, -0.5},
        {10, 14, -0.3}, {11, 12, 0.3}, {11, 13, 0.3}, {13, 14, 0.5},
    };
    for (const auto& p : pairs) S(p.i - 1, p.j - 1) = S(p.j - 1, p.i - 1) = p.r;
    return S;
}

inline double transform_covariate(int k, double v) {
    switch (k) {
        case 0: return v < 0.84 ? 1.0 : 0.0;
        case 1: return v < -0.35 ? 1.0 : 0.0;
        case 2: return std::exp(0.4 * v + 3.0);
        case 3: return std::exp(0.5 * v + 1.5);
        case 4: return 0.01 * std::floor(100.0 * (v + 4.0) * (v + 4.0));
        case 5: return std::floor(10.0 * v + 55.0);
        case 6: return std::floor(10.0 * v + 55.0);
        case 7: return v < 0.0 ? 1.0 : 0.0;
        case 8: return v < 0.0 ? 1.0 : 0.0;
        case 9: return (v >= -1.2 ? 1.0 : 0.0) + (v >= 0.75 ? 1.0 : 0.0);
        case 10: return (v >= 0.5 ? 1.0 : 0.0) + (v >= 1.5 ? 1.0 : 0.0);
        case 11: return std::floor(10.0 * v + 55.0);
        case 12: return std::floor(std::max(0.0, 100.0 * std::exp(v) - 20.0));
        case 13: return std::floor(std::max(0.0, 80.0 * std::exp(v) - 20.0));
        case 14: return std::floor(10.0 * v + 55.0);
        default: throw std::invalid_argument("transform_covariate: bad index");
    }
}

struct GeneratorSpec {
    Eigen::MatrixXd sigma = correlation_matrix();
    double target_rate = 0.1;

    void validate() const {
        if (sigma.rows() != sigma.cols()) throw std::invalid_argument("sigma not square");
        if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("sigma not symmetric");
        for (int i = 0; i < sigma.rows(); ++i)
            if (std::fabs(sigma(i, i) - 1.0) > 1e-12)
                throw std::invalid_argument("sigma diagonal not one");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
        if (es.eigenvalues().minCoeff() <= 1e-10)
            throw std::invalid_argument("sigma not positive definite");
    }

    // Symmetric square root of the leading K x K block.
    Eigen::MatrixXd sqrt_factor(int K) const {
        const Eigen::MatrixXd S = sigma.topLeftCorner(K, K);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        if (es.eigenvalues().minCoeff() <= 1e-10)
            throw std::invalid_argument("sigma block not positive definite");
        return es.eigenvectors() *
               es.eigenvalues().cwiseSqrt().asDiagonal() *
               es.eigenvectors().transpose();
    }
};

namespace detail {

// Quantile with linear interpolation on an already sorted vector.
inline double sorted_quantile(const std::vector<double>& v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty sample");
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

}  // namespace detail

// Truncation cutoffs, sextile quantiles, and truncated means of the
// transformed marginals, estimated once by Monte Carlo and shipped as a
// versioned CSV so every build sees identical numbers.
struct QuantileTable {
    std::array<double, kMaxCov> trunc{};
    std::array<double, kMaxCov> q16{};
    std::array<double, kMaxCov> q56{};
    std::array<double, kMaxCov> mean{};

    static QuantileTable compute(const GeneratorSpec& spec, std::int64_t draws = 1000000,
                                 std::uint64_t seed = 20260101) {
        spec.validate();
        const Eigen::MatrixXd A = spec.sqrt_factor(kMaxCov);
        CounterRng rng(seed, 0);
        std::vector<std::vector<double>> cont(kMaxCov);
        for (int k = 0; k < kMaxCov; ++k)
            if (is_continuous(k)) cont[k].reserve(draws);
        std::array<double, kMaxCov> sum{};
        Eigen::VectorXd g(kMaxCov);
        for (std::int64_t d = 0; d < draws; ++d) {
            for (int k = 0; k < kMaxCov; ++k) g[k] = rng.normal();
            const Eigen::VectorXd z = A * g;
            for (int k = 0; k < kMaxCov; ++k) {
                const double x = transform_covariate(k, z[k]);
                sum[k] += x;
                if (is_continuous(k)) cont[k].push_back(x);
            }
        }
        QuantileTable t;
        for (int k = 0; k < kMaxCov; ++k) {
            t.trunc[k] = std::numeric_limits<double>::infinity();
            t.mean[k] = sum[k] / static_cast<double>(draws);
            t.q16[k] = t.q56[k] = 0.0;
        }
        for (int k = 0; k < kMaxCov; ++k) {
            if (!is_continuous(k)) continue;
            std::vector<double>& v = cont[k];
            std::sort(v.begin(), v.end());
            const double q1 = detail::sorted_quantile(v, 0.25);
            const double q3 = detail::sorted_quantile(v, 0.75);
            t.trunc[k] = q3 + 5.0 * (q3 - q1);
            double s = 0.0;
            for (double& x : v) {  // clipping a sorted vector keeps it sorted
                x = std::min(x, t.trunc[k]);
                s += x;
            }
            t.mean[k] = s / static_cast<double>(v.size());
            t.q16[k] = detail::sorted_quantile(v, 1.0 / 6.0);
            t.q56[k] = detail::sorted_quantile(v, 5.0 / 6.0);
        }
        return t;
    }

    void save_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << "k,trunc,q16,q56,mean\n";
        char buf[256];
        for (int k = 0; k < kMaxCov; ++k) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", k + 1, trunc[k],
                          q16[k], q56[k], mean[k]);
            out << buf;
        }
    }

    static QuantileTable load_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path);
        std::string line;
        std::getline(in, line);  // header
        QuantileTable t;
        int seen = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string cell;
            std::array<double, 5> f{};
            for (int c = 0; c < 5; ++c) {
                if (!std::getline(ss, cell, ',')) throw std::runtime_error("bad row in " + path);
                f[c] = std::strtod(cell.c_str(), nullptr);
            }
            const int k = static_cast<int>(f[0]) - 1;
            if (k < 0 || k >= kMaxCov) throw std::runtime_error("bad covariate index in " + path);
            t.trunc[k] = f[1];
            t.q16[k] = f[2];
            t.q56[k] = f[3];
            t.mean[k] = f[4];
            ++seen;
        }
        if (seen != kMaxCov) throw std::runtime_error("quantile table incomplete: " + path);
        return t;
    }
};

// Per-unit log odds ratio giving 0.69 between the first and fifth sextile.
inline double continuous_beta_from_sextiles(double q16, double q56) {
    if (!(q56 > q16)) throw std::invalid_argument("degenerate sextile quantiles");
    return 0.69 / (q56 - q16);
}

// True coefficients of the generating model. Binary and ordinal effects are
// log odds ratios of 2 and sqrt(2) per unit; continuous effects follow the
// sextile rule.
inline Eigen::VectorXd true_betas(int K, double beta1, const QuantileTable& qt) {
    if (K != 7 && K != 10 && K != 15) throw std::invalid_argument("K must be 7, 10 or 15");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
    b[0] = beta1;
    b[1] = 0.693;
    if (K >= 10) {
        b[7] = 0.347;
        b[8] = 0.0;
        b[9] = 0.693;
    }
    if (K >= 15) {
        b[10] = 0.347;
        for (int k = 11; k <= 14; ++k)
            b[k] = continuous_beta_from_sextiles(qt.q16[k], qt.q56[k]);
    }
    return b;
}

namespace detail {

inline Eigen::MatrixXd draw_x(const Eigen::MatrixXd& A, const QuantileTable& qt, int K, int n,
                              CounterRng& rng) {
    Eigen::MatrixXd x(n, K);
    Eigen::VectorXd g(K);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) g[k] = rng.normal();
        const Eigen::VectorXd z = A * g;
        for (int k = 0; k < K; ++k)
            x(i, k) = std::min(transform_covariate(k, z[k]), qt.trunc[k]);
    }
    return x;
}

}  // namespace detail

// Bisection on the intercept so the Monte Carlo event rate hits the target.
inline double calibrate_intercept_for(const GeneratorSpec& spec, int K,
                                      const Eigen::VectorXd& b, const QuantileTable& qt,
                                      std::int64_t draws = 500000,
                                      std::uint64_t seed = 20260202) {
    if (b.size() != K) throw std::invalid_argument("calibrate_intercept: beta size mismatch");
    const Eigen::MatrixXd A = spec.sqrt_factor(K);
    CounterRng rng(seed, 0);
    std::vector<double> eta(draws);
    Eigen::VectorXd g(K), z(K);
    for (std::int64_t d = 0; d < draws; ++d) {
        for (int k = 0; k < K; ++k) g[k] = rng.normal();
        z = A * g;
        double e = 0.0;
        for (int k = 0; k < K; ++k)
            e += b[k] * std::min(transform_covariate(k, z[k]), qt.trunc[k]);
        eta[d] = e;
    }
    const auto rate = [&](double b0) {
        double s = 0.0;
        for (double e : eta) s += 1.0 / (1.0 + std::exp(-(b0 + e)));
        return s / static_cast<double>(draws);
    };
    double lo = -30.0, hi = 10.0;
    if (rate(lo) > spec.target_rate || rate(hi) < spec.target_rate)
        throw std::runtime_error("calibrate_intercept: bracket failure");
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rate(mid) > spec.target_rate ? hi : lo) = mid;
    }
    const double b0 = 0.5 * (lo + hi);
    if (std::fabs(rate(b0) - spec.target_rate) > 5e-4)
        throw std::runtime_error("calibrate_intercept: tolerance not met");
    return b0;
}

inline double calibrate_intercept(const GeneratorSpec& spec, int K, double beta1,
                                  const QuantileTable& qt, std::int64_t draws = 500000,
                                  std::uint64_t seed = 20260202) {
    return calibrate_intercept_for(spec, K, true_betas(K, beta1, qt), qt, draws, seed);
}

struct Scenario {
    int K = 7;
    int N = 80;
    double beta1 = 0.69;
    bool include_noise = false;  // include X3..X7 in the fitted model
    int n_rep = 200;
    std::uint64_t seed = 1;
};

struct Replicate {
    Eigen::MatrixXd x;  // N x K covariates
    Eigen::VectorXd y;
};

// The dataset is a pure function of (seed, scenario shape, rep): z draws
// row by row, then the response, all on the replicate's own stream.
inline Replicate generate(const GeneratorSpec& spec, const QuantileTable& qt,
                          const Scenario& sc, double beta0, const Eigen::VectorXd& betas,
                          int rep) {
    const Eigen::MatrixXd A = spec.sqrt_factor(sc.K);
    CounterRng rng(sc.seed, static_cast<std::uint64_t>(rep));
    Replicate r;
    r.x = detail::draw_x(A, qt, sc.K, sc.N, rng);
    r.y.resize(sc.N);
    for (int i = 0; i < sc.N; ++i) {
        const double eta = beta0 + r.x.row(i).dot(betas);
        r.y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
    }
    return r;
}

enum class Method { ML, FC, RR_D, RR_E, RR_C, RR_A, RR_B, RR_T };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::ML: return "ML";
        case Method::FC: return "FC";
        case Method::RR_D: return "RR-D";
        case Method::RR_E: return "RR-E";
        case Method::RR_C: return "RR-C";
        case Method::RR_A: return "RR-A";
        case Method::RR_B: return "RR-B";
        case Method::RR_T: return "RR-T";
    }
    throw std::invalid_argument("method_name: bad method");
}

inline Method parse_method(const std::string& s) {
    if (s == "ML") return Method::ML;
    if (s == "FC") return Method::FC;
    if (s == "RR-D") return Method::RR_D;
    if (s == "RR-E") return Method::RR_E;
    if (s == "RR-C") return Method::RR_C;
    if (s == "RR-A") return Method::RR_A;
    if (s == "RR-B") return Method::RR_B;
    if (s == "RR-T") return Method::RR_T;
    throw std::invalid_argument("unknown method: " + s);
}

struct RunOptions {
    std::vector<Method> methods{Method::FC};
    std::vector<int> ci_cols;  // fitted-design indices to interval; empty = none
    double level = 0.95;
    LambdaGrid grid = LambdaGrid::log_linear();
    int n_boot_B = 100;
    int threads = 1;
    SolverOptions solver;
};

struct MetricRow {
    std::string method;
    int coef = -1;  // fitted-design index; -1 for sample-level metrics
    std::string metric;
    double value = 0.0;
};

struct ScenarioMetrics {
    Scenario scenario;
    double beta0 = 0.0;
    double separation_prevalence = 0.0;  // percent of replicates
    std::map<std::string, int> failures;
    std::vector<MetricRow> rows;
    std::vector<std::string> warnings;
};

namespace detail {

struct StandardizedDesign {
    Eigen::MatrixXd Z;
    Eigen::VectorXd center, scale;
};

inline StandardizedDesign standardize_design(const Eigen::MatrixXd& Z) {
    StandardizedDesign s;
    s.Z = Z;
    const int p = static_cast<int>(Z.cols());
    const int n = static_cast<int>(Z.rows());
    s.center = Eigen::VectorXd::Zero(p);
    s.scale = Eigen::VectorXd::Ones(p);
    for (int j = 1; j < p; ++j) {
        const double c = Z.col(j).mean();
        const double sd = std::sqrt((Z.col(j).array() - c).square().sum() / (n - 1.0));
        if (!(sd > 0)) throw std::runtime_error("constant covariate in replicate");
        s.center[j] = c;
        s.scale[j] = sd;
        s.Z.col(j) = (Z.col(j).array() - c) / sd;
    }
    return s;
}

inline Eigen::VectorXd destandardize(const Eigen::VectorXd& bs, const StandardizedDesign& s) {
    Eigen::VectorXd b = bs;
    for (int j = 1; j < bs.size(); ++j) {
        b[j] = bs[j] / s.scale[j];
        b[0] -= bs[j] * s.center[j] / s.scale[j];
    }
    return b;
}

struct RepOutcome {
    bool separated = false;
    // Parallel to RunOptions::methods.
    std::vector<char> ok;
    std::vector<Eigen::VectorXd> est;
    std::vector<std::vector<std::array<double, 3>>> cis;  // (coef, lower, upper)
    std::vector<std::string> errors;
};

}  // namespace detail

// Fits every requested method on one replicate. Ridge methods run on the
// unit-variance standardized design and report destandardized coefficients.
inline detail::RepOutcome run_replicate(const GeneratorSpec& spec, const QuantileTable& qt,
                                        const Scenario& sc, double beta0,
                                        const Eigen::VectorXd& betas, int rep,
                                        const RunOptions& opts) {
    const Replicate d = generate(spec, qt, sc, beta0, betas, rep);
    std::vector<int> cols;
    for (int k = 0; k < sc.K; ++k)
        if (sc.include_noise || !(k >= 2 && k <= 6)) cols.push_back(k);
    const int p = static_cast<int>(cols.size()) + 1;
    Eigen::MatrixXd Z(sc.N, p);
    Z.col(0).setOnes();
    for (size_t c = 0; c < cols.size(); ++c) Z.col(static_cast<int>(c) + 1) = d.x.col(cols[c]);

    detail::RepOutcome out;
    const int M = static_cast<int>(opts.methods.size());
    out.ok.assign(M, 0);
    out.est.assign(M, Eigen::VectorXd());
    out.cis.assign(M, {});
    out.errors.assign(M, "");

    const SeparationReport sep = detect(Z, d.y);
    out.separated = sep.separated;

    for (int m = 0; m < M; ++m) {
        const Method method = opts.methods[m];
        try {
            SolverOptions so = opts.solver;
            if (method == Method::ML || method == Method::FC) {
                const PenaltySpec pen =
                    method == Method::ML ? PenaltySpec::ml() : PenaltySpec::firth();
                const FitResult r = fit(Z, d.y, pen, so);
                out.est[m] = r.beta;
                for (int j : opts.ci_cols) {
                    const ProfileCI ci = profile_ci(Z, d.y, pen, j, opts.level, so, &r);
                    out.cis[m].push_back({static_cast<double>(j), ci.lower, ci.upper});
                }
                out.ok[m] = 1;
                continue;
            }
            const detail::StandardizedDesign sd = detail::standardize_design(Z);
            double lambda = 0.0;
            if (method == Method::RR_T) {
                Eigen::VectorXd bs(p);
                bs[0] = beta0;
                for (size_t c = 0; c < cols.size(); ++c) {
                    const int j = static_cast<int>(c) + 1;
                    bs[j] = betas[cols[c]] * sd.scale[j];
                    bs[0] += betas[cols[c]] * sd.center[j];
                }
                Eigen::VectorXd g;
                Eigen::MatrixXd I;
                score_and_info(sd.Z, d.y, bs, g, I);
                MomentMatrix mm{bs, I, penlogit::detail::default_weight(p), Eigen::VectorXd()};
                lambda = minimize_target(mm).lambda;
            } else if (method == Method::RR_B) {
                BTuneOptions bo;
                bo.threads = 1;  // replicates already run in parallel
                bo.solver = so;
                const std::uint64_t bseed =
                    penlogit::detail::mix64(sc.seed ^ penlogit::detail::mix64(
                        0x5e0bu + static_cast<std::uint64_t>(rep)));
                lambda = b_tune(sd.Z, d.y, opts.n_boot_B, bseed, bo).lambda_star;
            } else {
                TuneCriterion crit = TuneCriterion::D;
                if (method == Method::RR_E) crit = TuneCriterion::E;
                if (method == Method::RR_C) crit = TuneCriterion::C;
                if (method == Method::RR_A) crit = TuneCriterion::A;
                TuneOptions to;
                to.solver = so;
                to.threads = 1;
                lambda = tune(sd.Z, d.y, crit, opts.grid, to).lambda_star;
            }
            const PenaltySpec pen = PenaltySpec::ridge(lambda);
            const FitResult r = fit(sd.Z, d.y, pen, so);
            out.est[m] = detail::destandardize(r.beta, sd);
            for (int j : opts.ci_cols) {
                if (j == 0) continue;  // slope intervals only on the standardized scale
                const ProfileCI ci = profile_ci(sd.Z, d.y, pen, j, opts.level, so, &r);
                out.cis[m].push_back(
                    {static_cast<double>(j), ci.lower / sd.scale[j], ci.upper / sd.scale[j]});
            }
            out.ok[m] = 1;
        } catch (const std::exception& e) {
            out.errors[m] = e.what();
        }
    }
    return out;
}

// Aggregates replicates into long-format rows. Metric estimators: bias is
// the mean error, variance the population variance over replicates, so
// rmse^2 = bias^2 + variance holds as a sample identity.
inline ScenarioMetrics run_scenario(const GeneratorSpec& spec, const QuantileTable& qt,
                                    const Scenario& sc, const RunOptions& opts) {
    spec.validate();
    const Eigen::VectorXd betas = true_betas(sc.K, sc.beta1, qt);
    const double beta0 = calibrate_intercept(spec, sc.K, sc.beta1, qt);

    std::vector<int> cols;
    for (int k = 0; k < sc.K; ++k)
        if (sc.include_noise || !(k >= 2 && k <= 6)) cols.push_back(k);
    const int p = static_cast<int>(cols.size()) + 1;
    Eigen::VectorXd truth(p);
    truth[0] = beta0;
    for (size_t c = 0; c < cols.size(); ++c) truth[static_cast<int>(c) + 1] = betas[cols[c]];

    std::vector<detail::RepOutcome> reps(sc.n_rep);
    penlogit::detail::parallel_for(sc.n_rep, opts.threads, [&](int r) {
        reps[r] = run_replicate(spec, qt, sc, beta0, betas, r, opts);
    });

    ScenarioMetrics out;
    out.scenario = sc;
    out.beta0 = beta0;
    int nsep = 0;
    for (const auto& r : reps) nsep += r.separated ? 1 : 0;
    out.separation_prevalence = 100.0 * nsep / static_cast<double>(sc.n_rep);
    out.rows.push_back({"sample", -1, "separation_prevalence", out.separation_prevalence});

    const int M = static_cast<int>(opts.methods.size());
    for (int m = 0; m < M; ++m) {
        const std::string name = method_name(opts.methods[m]);
        int nfail = 0;
        for (const auto& r : reps)
            if (!r.ok[m]) ++nfail;
        out.failures[name] = nfail;
        out.rows.push_back({name, -1, "n_failed", static_cast<double>(nfail)});
        if (nfail > 0)
            for (const auto& r : reps)
                if (!r.ok[m] && !r.errors[m].empty() && out.warnings.size() < 50)
                    out.warnings.push_back(name + ": " + r.errors[m]);

        for (int j = 0; j < p; ++j) {
            std::vector<double> est;
            est.reserve(sc.n_rep);
            for (const auto& r : reps)
                if (r.ok[m]) est.push_back(r.est[m][j]);
            if (est.empty()) continue;
            const double n = static_cast<double>(est.size());
            double mean = 0.0;
            for (double e : est) mean += e;
            mean /= n;
            double var = 0.0, mse = 0.0;
            for (double e : est) {
                var += (e - mean) * (e - mean);
                mse += (e - truth[j]) * (e - truth[j]);
            }
            var /= n;
            mse /= n;
            const double bias = mean - truth[j];
            if (std::fabs(mse - bias * bias - var) > 1e-10 * (1.0 + mse))
                throw std::logic_error("rmse identity violated");
            out.rows.push_back({name, j, "bias", bias});
            out.rows.push_back({name, j, "variance", var});
            out.rows.push_back({name, j, "rmse", std::sqrt(mse)});
        }

        for (int j : opts.ci_cols) {
            std::vector<std::array<double, 3>> cis;
            for (const auto& r : reps) {
                if (!r.ok[m]) continue;
                for (const auto& c : r.cis[m])
                    if (static_cast<int>(c[0]) == j) cis.push_back(c);
            }
            if (cis.empty()) continue;
            const double n = static_cast<double>(cis.size());
            double cov = 0.0, cov_lo = 0.0, cov_hi = 0.0, pow = 0.0;
            std::vector<double> widths;
            widths.reserve(cis.size());
            for (const auto& c : cis) {
                const double lo = c[1], hi = c[2];
                if (lo <= truth[j] && truth[j] <= hi) cov += 1.0;
                if (lo <= truth[j]) cov_lo += 1.0;
                if (truth[j] <= hi) cov_hi += 1.0;
                if (lo > 0.0 || hi < 0.0) pow += 1.0;
                widths.push_back(hi - lo);
            }
            std::sort(widths.begin(), widths.end());
            const size_t h = widths.size() / 2;
            const double medw =
                widths.size() % 2 ? widths[h] : 0.5 * (widths[h - 1] + widths[h]);
            out.rows.push_back({name, j, "coverage", 100.0 * cov / n});
            out.rows.push_back({name, j, "coverage_lower", 100.0 * cov_lo / n});
            out.rows.push_back({name, j, "coverage_upper", 100.0 * cov_hi / n});
            out.rows.push_back({name, j, "power", 100.0 * pow / n});
            out.rows.push_back({name, j, "median_width", medw});
        }
    }
    return out;
}

// Long format keyed by the scenario factors, one metric per row.
inline void write_csv(const ScenarioMetrics& m, std::ostream& out) {
    out << "K,N,beta1,noise,method,coef,metric,value\n";
    char buf[256];
    for (const auto& r : m.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%g,%d,%s,%d,%s,%.17g\n", m.scenario.K,
                      m.scenario.N, m.scenario.beta1, m.scenario.include_noise ? 1 : 0,
                      r.method.c_str(), r.coef, r.metric.c_str(), r.value);
        out << buf;
    }
}

inline void write_csv(const ScenarioMetrics& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(m, out);
}

}  // namespace sim
}  // namespace penlogit
