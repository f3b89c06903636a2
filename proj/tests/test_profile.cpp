#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "penlogit/dataset.hpp"
#include "penlogit/glm_core.hpp"
#include "penlogit/profile.hpp"
#include "penlogit/special.hpp"

using namespace penlogit;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<int>(v.size()));
    int i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

// Two-group design: intercept + group dummy, (events, nonevents) per group.
void two_group(int a0, int b0, int a1, int b1, Eigen::MatrixXd& Z, Eigen::VectorXd& y) {
    const int n = a0 + b0 + a1 + b1;
    Z.resize(n, 2);
    y.resize(n);
    int r = 0;
    for (int i = 0; i < a0 + b0; ++i, ++r) {
        Z.row(r) << 1.0, 0.0;
        y[r] = i < a0 ? 1.0 : 0.0;
    }
    for (int i = 0; i < a1 + b1; ++i, ++r) {
        Z.row(r) << 1.0, 1.0;
        y[r] = i < a1 ? 1.0 : 0.0;
    }
}

Dataset load_fixture() {
    return load_csv(std::string(PENLOGIT_DATA_DIR) + "/endometrial.csv", "HG");
}

Eigen::MatrixXd univariable_design(const Dataset& d, const std::string& name) {
    int idx = -1;
    for (size_t i = 0; i < d.names.size(); ++i)
        if (d.names[i] == name) idx = static_cast<int>(i);
    REQUIRE(idx >= 0);
    Eigen::MatrixXd Z(d.n(), 2);
    Z.col(0).setOnes();
    Z.col(1) = d.X.col(idx);
    return Z;
}

} // namespace

TEST_CASE("profile at the unconstrained optimum reproduces it") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(3, 7, 6, 4, Z, y);
    for (const PenaltySpec& pen :
         {PenaltySpec::ml(), PenaltySpec::firth(), PenaltySpec::ridge(0.7)}) {
        const FitResult fr = fit(Z, y, pen);
        REQUIRE(fr.converged);
        for (int j = 0; j < 2; ++j) {
            const double obj = profile_objective(Z, y, pen, j, fr.beta[j]);
            CHECK(obj == Catch::Approx(fr.penalized_loglik).margin(1e-9));
        }
    }
}

TEST_CASE("single-cell profile matches the one-dimensional closed form") {
    // One column of ones: the only coefficient is the log-odds of the cell,
    // so the profile has nothing to optimize over and must equal
    // l(v) + 1/2 log I(v) with l(v) = a1 v - n log(1+e^v), I(v) = n pi (1-pi).
    const int n = 8, a1 = 3;
    Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(n, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y.head(a1).setOnes();
    for (int t = 0; t <= 40; ++t) {
        const double v = -4.0 + 8.0 * t / 40.0;
        const double pi = logistic(v);
        const double oracle = a1 * v - n * log1pexp(v) + 0.5 * std::log(n * pi * (1.0 - pi));
        const double got = profile_objective(Z, y, PenaltySpec::firth(), 0, v);
        CHECK(got == Catch::Approx(oracle).margin(1e-10));
    }
}

TEST_CASE("profile curves are unimodal on a 41-point scan") {
    Eigen::MatrixXd Z(12, 2);
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) {
        Z(i, 0) = 1.0;
        Z(i, 1) = (i % 6) - 2.5;
        y[i] = (i == 1 || i >= 7) ? 1.0 : 0.0;
    }
    for (const PenaltySpec& pen :
         {PenaltySpec::ml(), PenaltySpec::firth(), PenaltySpec::ridge(0.25)}) {
        const FitResult fr = fit(Z, y, pen);
        REQUIRE(fr.converged);
        for (int j = 0; j < 2; ++j) {
            std::vector<double> vals;
            for (int t = 0; t <= 40; ++t) {
                const double v = fr.beta[j] - 2.5 + 5.0 * t / 40.0;
                vals.push_back(profile_objective(Z, y, pen, j, v));
            }
            const auto peak = std::max_element(vals.begin(), vals.end());
            for (auto it = vals.begin(); it + 1 < peak + 1; ++it)
                CHECK(*it <= *(it + 1) + 1e-10);
            for (auto it = peak; it + 1 < vals.end(); ++it)
                CHECK(*(it + 1) <= *it + 1e-10);
        }
    }
}

TEST_CASE("finite limits invert the likelihood-ratio statistic") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(3, 7, 7, 3, Z, y);
    for (const PenaltySpec& pen : {PenaltySpec::firth(), PenaltySpec::ridge(0.5)}) {
        const FitResult fr = fit(Z, y, pen);
        REQUIRE(fr.converged);
        const double q = chi2_quantile(0.95, 1);
        for (int j = 0; j < 2; ++j) {
            const ProfileCI ci = profile_ci(Z, y, pen, j, 0.95);
            REQUIRE(std::isfinite(ci.lower));
            REQUIRE(std::isfinite(ci.upper));
            CHECK(ci.lower <= fr.beta[j]);
            CHECK(ci.upper >= fr.beta[j]);
            for (double limit : {ci.lower, ci.upper}) {
                const double obj = profile_objective(Z, y, pen, j, limit);
                CHECK(2.0 * (fr.penalized_loglik - obj) ==
                      Catch::Approx(q).margin(5e-6));
            }
            // the trace is sorted by abscissa for plotting
            for (size_t t = 1; t < ci.profile_trace.size(); ++t)
                CHECK(ci.profile_trace[t - 1].first <= ci.profile_trace[t].first);
        }
    }
}

TEST_CASE("balanced two-group table gives an interval symmetric about zero") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(2, 6, 2, 6, Z, y);
    const FitResult fr = fit(Z, y, PenaltySpec::firth());
    REQUIRE(fr.converged);
    CHECK(std::fabs(fr.beta[1]) < 1e-8);
    const ProfileCI ci = profile_ci(Z, y, PenaltySpec::firth(), 1, 0.95);
    REQUIRE(std::isfinite(ci.lower));
    REQUIRE(std::isfinite(ci.upper));
    CHECK(std::fabs(ci.lower + ci.upper) < 1e-6);
}

TEST_CASE("a tight search bound reports the limit as infinite") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(2, 6, 2, 6, Z, y);
    const FitResult fr = fit(Z, y, PenaltySpec::firth());
    REQUIRE(fr.converged);
    // the slope estimate is ~0 but both true limits lie outside |v| <= 1
    const ProfileCI ci =
        profile_ci(Z, y, PenaltySpec::firth(), 1, 0.95, {}, &fr, 1.0);
    CHECK(std::isinf(ci.upper));
    CHECK(ci.upper > 0);
    CHECK(std::isinf(ci.lower));
    CHECK(ci.lower < 0);
}

TEST_CASE("raising the level widens the interval") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(3, 7, 7, 3, Z, y);
    for (const PenaltySpec& pen : {PenaltySpec::firth(), PenaltySpec::ridge(1.0)}) {
        const ProfileCI c95 = profile_ci(Z, y, pen, 1, 0.95);
        const ProfileCI c99 = profile_ci(Z, y, pen, 1, 0.99);
        CHECK(c99.lower <= c95.lower + 1e-9);
        CHECK(c99.upper >= c95.upper - 1e-9);
        CHECK(c99.upper - c99.lower > c95.upper - c95.lower);
    }
}

TEST_CASE("wald comparator is finite and contains the estimate") {
    Eigen::MatrixXd Z;
    Eigen::VectorXd y;
    two_group(3, 7, 7, 3, Z, y);
    const FitResult fr = fit(Z, y, PenaltySpec::firth());
    const WaldCI w = wald_ci(Z, PenaltySpec::firth(), fr, 1, 0.95);
    CHECK(w.se > 0.0);
    CHECK(std::isfinite(w.lower));
    CHECK(std::isfinite(w.upper));
    CHECK(w.lower < fr.beta[1]);
    CHECK(w.upper > fr.beta[1]);
    CHECK(w.upper - w.lower ==
          Catch::Approx(2.0 * 1.959963984540054 * w.se).margin(1e-9));
}

TEST_CASE("study fixture: single-covariate intervals match published analyses") {
    const Dataset d = load_fixture();
    const Eigen::MatrixXd Z = univariable_design(d, "NV");
    const FitResult fr = fit(Z, d.y, PenaltySpec::firth());
    REQUIRE(fr.converged);

    SECTION("penalized-likelihood interval for the binary covariate") {
        const ProfileCI ci = profile_ci(Z, d.y, PenaltySpec::firth(), 1, 0.95, {}, &fr);
        CHECK(ci.lower == Catch::Approx(2.23).margin(0.02));
        CHECK(ci.upper == Catch::Approx(9.21).margin(0.02));
        CHECK(ci.lower <= fr.beta[1]);
        CHECK(ci.upper >= fr.beta[1]);
    }

    SECTION("heavy ridge shrinkage narrows the interval") {
        const ProfileCI firth_ci = profile_ci(Z, d.y, PenaltySpec::firth(), 1, 0.95, {}, &fr);
        const ProfileCI ridge_ci = profile_ci(Z, d.y, PenaltySpec::ridge(1e4), 1, 0.95);
        REQUIRE(std::isfinite(ridge_ci.lower));
        REQUIRE(std::isfinite(ridge_ci.upper));
        CHECK(ridge_ci.upper - ridge_ci.lower < firth_ci.upper - firth_ci.lower);
    }

    SECTION("level ordering holds on the fixture") {
        const ProfileCI c95 = profile_ci(Z, d.y, PenaltySpec::firth(), 1, 0.95, {}, &fr);
        const ProfileCI c99 = profile_ci(Z, d.y, PenaltySpec::firth(), 1, 0.99, {}, &fr);
        CHECK(c99.lower <= c95.lower);
        CHECK(c99.upper >= c95.upper);
    }
}
