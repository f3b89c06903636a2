#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "penlogit/dataset.hpp"
#include "penlogit/glm_core.hpp"
#include "penlogit/rng.hpp"
#include "penlogit/special.hpp"

using namespace penlogit;

TEST_CASE("log1pexp and logistic are stable across the real line") {
    CHECK(log1pexp(0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(log1pexp(-40.0) == Catch::Approx(std::exp(-40.0)).epsilon(1e-10));
    CHECK(log1pexp(800.0) == Catch::Approx(800.0).epsilon(1e-14));
    CHECK(std::isfinite(log1pexp(-800.0)));
    for (double x : {-30.0, -3.0, -0.1, 0.0, 0.2, 5.0, 40.0}) {
        CHECK(logistic(x) + logistic(-x) == Catch::Approx(1.0).margin(1e-15));
        CHECK(std::log(logistic(x)) == Catch::Approx(-log1pexp(-x)).margin(1e-12));
    }
    CHECK(logistic(900.0) == 1.0);
    CHECK(logistic(-900.0) == 0.0);
}

TEST_CASE("normal CDF reference values") {
    CHECK(normal_cdf(0.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(normal_cdf(1.959963984540054) == Catch::Approx(0.975).margin(1e-12));
    CHECK(normal_cdf(-1.959963984540054) == Catch::Approx(0.025).margin(1e-12));
    CHECK(normal_cdf(1.0) == Catch::Approx(0.8413447460685429).margin(1e-12));
}

TEST_CASE("incomplete gamma against the erf identity and round trips") {
    // P(1/2, x) = erf(sqrt(x))
    for (double x : {0.01, 0.3, 1.0, 2.5, 7.0, 20.0})
        CHECK(gamma_p(0.5, x) == Catch::Approx(std::erf(std::sqrt(x))).margin(1e-12));
    for (double a : {0.5, 1.0, 2.5, 7.0})
        for (double p : {0.001, 0.05, 0.3, 0.7, 0.95, 0.999}) {
            const double x = gamma_p_inv(a, p);
            CHECK(gamma_p(a, x) == Catch::Approx(p).margin(1e-10));
        }
    CHECK_THROWS(gamma_p(-1.0, 1.0));
    CHECK_THROWS(gamma_p_inv(1.0, 1.0));
}

TEST_CASE("chi-square quantiles match tabulated values") {
    CHECK(chi2_quantile(0.95, 1) == Catch::Approx(3.841458820694124).margin(1e-10));
    CHECK(chi2_quantile(0.99, 1) == Catch::Approx(6.634896601021213).margin(1e-10));
    // df = 2 quantile is exactly -2 log(1 - p)
    CHECK(chi2_quantile(0.95, 2) == Catch::Approx(-2.0 * std::log(0.05)).margin(1e-10));
    CHECK_THROWS(chi2_quantile(1.0, 1));
}

TEST_CASE("counter RNG: determinism, stream independence, moments") {
    CounterRng a(42, 0), b(42, 0), c(42, 1);
    bool same = true, diff = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t va = a.next_u64();
        same = same && va == b.next_u64();
        diff = diff || va != c.next_u64();
    }
    CHECK(same);
    CHECK(diff);

    CounterRng r(7, 0);
    double s = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(s / n == Catch::Approx(0.5).margin(0.005));
    CHECK(s2 / n - (s / n) * (s / n) == Catch::Approx(1.0 / 12.0).margin(0.002));

    double ns = 0.0, ns2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        ns += z;
        ns2 += z * z;
    }
    CHECK(ns / n == Catch::Approx(0.0).margin(0.02));
    CHECK(ns2 / n == Catch::Approx(1.0).margin(0.02));

    for (int i = 0; i < 1000; ++i) REQUIRE(r.uniform_int(13) < 13);

    // substream derivation is itself deterministic
    CounterRng p1(99, 0), p2(99, 0);
    CHECK(p1.substream(5).next_u64() == p2.substream(5).next_u64());
    CHECK(p1.substream(5).next_u64() != p2.substream(6).next_u64());
}

namespace {

std::string write_temp_csv(const std::string& body) {
    static int counter = 0;
    std::string path = "test_core_tmp_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << body;
    return path;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

} // namespace

TEST_CASE("csv loading validates shape and response") {
    const auto path = write_temp_csv("y,a,b\n1,2.0,3\n0,1.5,-1\n1,0,0\n");
    Dataset d = load_csv(path, "y");
    std::remove(path.c_str());
    CHECK(d.n() == 3);
    CHECK(d.k() == 2);
    CHECK(d.names[0] == "a");
    CHECK(d.X(0, 1) == 3.0);
    CHECK(d.y[1] == 0.0);
    CHECK(d.warnings.empty());

    const auto bad1 = write_temp_csv("y,a\n2,1\n0,2\n");
    CHECK_THROWS(load_csv(bad1, "y"));
    std::remove(bad1.c_str());
    const auto bad2 = write_temp_csv("y,a\n1,x\n");
    CHECK_THROWS(load_csv(bad2, "y"));
    std::remove(bad2.c_str());
    const auto bad3 = write_temp_csv("y,a\n1,1\n");
    CHECK_THROWS(load_csv(bad3, "resp"));
    std::remove(bad3.c_str());

    const auto flat = write_temp_csv("y,a,b\n1,2,3\n0,2,4\n");
    Dataset df = load_csv(flat, "y");
    std::remove(flat.c_str());
    REQUIRE(df.warnings.size() == 1);
    CHECK(df.warnings[0].find("constant") != std::string::npos);
}

TEST_CASE("standardization round trip preserves the linear predictor") {
    Dataset d;
    d.X.resize(5, 2);
    d.X << 1, 10, 2, 20, 3, 35, 4, 41, 5, 58;
    d.y = vec({0, 1, 0, 1, 1});
    d.names = {"u", "v"};

    auto [ds, st] = standardize(d, Standardize::UnitVariance);
    for (int j = 0; j < 2; ++j) {
        CHECK(ds.X.col(j).mean() == Catch::Approx(0.0).margin(1e-12));
        CHECK(column_sd(ds.X.col(j)) == Catch::Approx(1.0).margin(1e-12));
    }
    const Eigen::VectorXd bs = vec({0.3, -1.2, 0.7});
    const Eigen::VectorXd b = destandardize_coefficients(bs, st);
    const Eigen::VectorXd eta_std = design_matrix(ds) * bs;
    const Eigen::VectorXd eta_raw = design_matrix(d) * b;
    CHECK((eta_std - eta_raw).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("binary-range standardization scales binary columns by their range") {
    Dataset d;
    d.X.resize(4, 2);
    d.X << 0, 1.0, 0, 2.0, 2, 3.0, 2, 8.0;
    d.y = vec({0, 1, 0, 1});
    d.names = {"bin", "cont"};
    auto [ds, st] = standardize(d, Standardize::GelmanBinaryRange);
    CHECK(st.scales[0] == Catch::Approx(2.0));                       // range of {0,2}
    CHECK(st.scales[1] == Catch::Approx(2.0 * column_sd(d.X.col(1))));
    (void)ds;
}

TEST_CASE("score and information match finite differences of the loglik") {
    Eigen::MatrixXd Z(6, 3);
    Z << 1, 0.2, -1.1, 1, -0.7, 0.3, 1, 1.4, 0.8, 1, -0.2, -0.5, 1, 0.9, 1.2, 1, -1.3, 0.4;
    const Eigen::VectorXd y = vec({1, 0, 1, 0, 1, 0});
    const Eigen::VectorXd beta = vec({0.3, -0.8, 0.5});

    Eigen::VectorXd g;
    Eigen::MatrixXd I;
    score_and_info(Z, y, beta, g, I);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd bp = beta, bm = beta;
        bp[j] += h;
        bm[j] -= h;
        const double fd = (loglik(Z, y, bp) - loglik(Z, y, bm)) / (2.0 * h);
        CHECK(g[j] == Catch::Approx(fd).margin(1e-4));
        Eigen::VectorXd gp, gm;
        Eigen::MatrixXd Ip, Im;
        score_and_info(Z, y, bp, gp, Ip, nullptr);
        score_and_info(Z, y, bm, gm, Im, nullptr);
        for (int k = 0; k < 3; ++k) {
            const double fdI = -(gp[k] - gm[k]) / (2.0 * h);
            CHECK(I(j, k) == Catch::Approx(fdI).margin(1e-3));
        }
    }
}

TEST_CASE("ML fit drives the score to zero on well-posed data") {
    Eigen::MatrixXd Z(8, 2);
    Z << 1, -2, 1, -1.5, 1, -1, 1, -0.5, 1, 0.5, 1, 1, 1, 1.5, 1, 2;
    const Eigen::VectorXd y = vec({0, 1, 0, 0, 1, 0, 1, 1});
    const FitResult r = fit(Z, y, PenaltySpec::ml());
    CHECK(r.converged);
    CHECK(r.max_abs_score < 1e-8);
    // any perturbation lowers the loglik
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd b = r.beta;
        b[j] += 0.05;
        CHECK(loglik(Z, y, b) < r.loglik);
    }
    CHECK(r.penalized_loglik == Catch::Approx(r.loglik).margin(1e-12));
}

TEST_CASE("rank-deficient designs are rejected") {
    Eigen::MatrixXd Z(4, 3);
    Z << 1, 2, 4, 1, 3, 6, 1, -1, -2, 1, 0.5, 1;
    const Eigen::VectorXd y = vec({0, 1, 0, 1});
    CHECK_THROWS(fit(Z, y, PenaltySpec::ml()));
}

TEST_CASE("Firth on saturated dummy designs equals the add-half rule") {
    // Two categories, counts (nonevents, events) = (3, 5) and (6, 2); the
    // no-intercept dummy design makes each category's probability
    // (events + 1/2) / (total + 1).
    Eigen::MatrixXd Z(16, 2);
    Eigen::VectorXd y(16);
    int row = 0;
    auto add = [&](int col, int zeros, int ones) {
        for (int i = 0; i < zeros + ones; ++i, ++row) {
            Z.row(row).setZero();
            Z(row, col) = 1.0;
            y[row] = i < zeros ? 0.0 : 1.0;
        }
    };
    add(0, 3, 5);
    add(1, 6, 2);
    const FitResult r = fit(Z, y, PenaltySpec::firth());
    REQUIRE(r.converged);
    CHECK(logistic(r.beta[0]) == Catch::Approx(5.5 / 9.0).margin(1e-8));
    CHECK(logistic(r.beta[1]) == Catch::Approx(2.5 / 9.0).margin(1e-8));
}

TEST_CASE("Firth stays finite under complete separation; ML flags divergence") {
    Eigen::MatrixXd Z(6, 2);
    Z << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
    const Eigen::VectorXd y = vec({0, 0, 0, 1, 1, 1});
    const FitResult fc = fit(Z, y, PenaltySpec::firth());
    CHECK(fc.converged);
    CHECK(fc.beta.cwiseAbs().maxCoeff() < 10.0);
    const FitResult ml = fit(Z, y, PenaltySpec::ml());
    CHECK_FALSE(ml.converged);
}

TEST_CASE("ridge at lambda 0 equals ML; large lambda shrinks slopes only") {
    Eigen::MatrixXd Z(8, 2);
    Z << 1, -2, 1, -1.5, 1, -1, 1, -0.5, 1, 0.5, 1, 1, 1, 1.5, 1, 2;
    const Eigen::VectorXd y = vec({0, 1, 0, 0, 1, 0, 1, 1});
    const FitResult ml = fit(Z, y, PenaltySpec::ml());
    const FitResult r0 = fit(Z, y, PenaltySpec::ridge(0.0));
    CHECK((ml.beta - r0.beta).cwiseAbs().maxCoeff() < 1e-8);

    const FitResult rbig = fit(Z, y, PenaltySpec::ridge(1e9));
    CHECK(std::fabs(rbig.beta[1]) < 1e-6);
    CHECK(logistic(rbig.beta[0]) == Catch::Approx(y.mean()).margin(1e-8));

    // penalized objective bookkeeping
    const FitResult r1 = fit(Z, y, PenaltySpec::ridge(2.0));
    const Eigen::VectorXd P = PenaltySpec::ridge(2.0).penalty_diag(2);
    CHECK(r1.penalized_loglik ==
          Catch::Approx(r1.loglik - 1.0 * (P.array() * r1.beta.array().square()).sum())
              .margin(1e-12));
}

TEST_CASE("ridge via data augmentation approaches the exact fit as s grows") {
    Eigen::MatrixXd Z(10, 3);
    Z << 1, -2, 0, 1, -1.5, 1, 1, -1, 0, 1, -0.5, 1, 1, 0, 0, 1, 0.5, 1, 1, 1, 0, 1, 1.5, 1,
        1, 2, 0, 1, 2.5, 1;
    const Eigen::VectorXd y = vec({0, 0, 1, 0, 1, 0, 1, 1, 1, 1});
    const double lambda = 1.0;
    const FitResult exact = fit(Z, y, PenaltySpec::ridge(lambda));
    const FitResult aug10 = fit_augmented(Z, y, lambda, {}, 10.0);
    const FitResult aug100 = fit_augmented(Z, y, lambda, {}, 100.0);
    const double d10 = (exact.beta - aug10.beta).cwiseAbs().maxCoeff();
    const double d100 = (exact.beta - aug100.beta).cwiseAbs().maxCoeff();
    CHECK(d10 < 0.05);
    CHECK(d100 < d10);
}

TEST_CASE("effective degrees of freedom: full at 0, decreasing, floor at unpenalized count") {
    Eigen::MatrixXd Z(8, 3);
    Z << 1, -2, 1, 1, -1.5, 0, 1, -1, 1, 1, -0.5, 0, 1, 0.5, 1, 1, 1, 0, 1, 1.5, 1, 1, 2, 0;
    const Eigen::VectorXd y = vec({0, 1, 0, 0, 1, 0, 1, 1});
    const Eigen::VectorXd P = PenaltySpec::ridge(1.0).penalty_diag(3);

    const FitResult r = fit(Z, y, PenaltySpec::ridge(0.5));
    CHECK(effective_df(r.fisher_info, 0.0, P) == Catch::Approx(3.0).margin(1e-10));
    double prev = 3.0 + 1e-9;
    for (double lam : {0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e7}) {
        const double df = effective_df(r.fisher_info, lam, P);
        CHECK(df < prev);
        prev = df;
    }
    CHECK(effective_df(r.fisher_info, 1e12, P) == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("weighted fits reproduce replicated rows") {
    Eigen::MatrixXd Z(4, 2);
    Z << 1, -1, 1, 0, 1, 1, 1, 2;
    const Eigen::VectorXd y = vec({0, 1, 0, 1});
    Eigen::VectorXd w = vec({2, 1, 3, 1});

    Eigen::MatrixXd Zr(7, 2);
    Eigen::VectorXd yr(7);
    int k = 0;
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < static_cast<int>(w[i]); ++c, ++k) {
            Zr.row(k) = Z.row(i);
            yr[k] = y[i];
        }
    const FitResult a = fit(Z, y, PenaltySpec::ml(), {}, &w);
    const FitResult b = fit(Zr, yr, PenaltySpec::ml());
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(a.loglik == Catch::Approx(b.loglik).margin(1e-8));
}
