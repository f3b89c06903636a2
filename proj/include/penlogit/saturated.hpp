#pragma once

// Closed-form engine for the saturated (dummy-coded) model: exact ridge
// probability estimators, LOOCV/validation criterion curves, optimal-lambda
// closed forms, and the analytic classification of where those curves attain
// their minima. Serves as an independent oracle for the iterative fitters.
//
// Conventions: a table row k holds (a_k0 nonevents, a_k1 events); a row is
// "pure" when one of the counts is zero. Complete separation = every row
// pure; quasi-complete = some but not all. All classifiers return
// Indeterminate for tables with a single-subject category, where LOOCV
// curves degenerate and the analytic results do not apply.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "penlogit/separation.hpp"

namespace penlogit {

struct ContingencyTable {
    std::vector<std::array<long long, 2>> rows;

    int K() const { return static_cast<int>(rows.size()); }
    long long a0(int k) const { return rows[k][0]; }
    long long a1(int k) const { return rows[k][1]; }
    long long tot(int k) const { return rows[k][0] + rows[k][1]; }
    long long n() const {
        long long s = 0;
        for (int k = 0; k < K(); ++k) s += tot(k);
        return s;
    }
    long long events() const {
        long long s = 0;
        for (const auto& r : rows) s += r[1];
        return s;
    }
    long long nonevents() const {
        long long s = 0;
        for (const auto& r : rows) s += r[0];
        return s;
    }
    bool row_pure(int k) const { return rows[k][0] == 0 || rows[k][1] == 0; }
    SeparationKind separation() const {
        int pure = 0;
        for (int k = 0; k < K(); ++k) pure += row_pure(k);
        if (pure == 0) return SeparationKind::None;
        return pure == K() ? SeparationKind::Complete : SeparationKind::QuasiComplete;
    }
    long long min_tot() const {
        long long m = std::numeric_limits<long long>::max();
        for (int k = 0; k < K(); ++k) m = std::min(m, tot(k));
        return m;
    }

    void validate() const {
        if (rows.empty()) throw std::invalid_argument("table: no rows");
        for (const auto& r : rows) {
            if (r[0] < 0 || r[1] < 0) throw std::invalid_argument("table: negative count");
            if (r[0] + r[1] < 1) throw std::invalid_argument("table: empty category");
        }
    }

    // "a10,a11;a20,a21;..."
    static ContingencyTable parse(const std::string& text) {
        ContingencyTable t;
        std::stringstream ss(text);
        std::string row;
        while (std::getline(ss, row, ';')) {
            if (row.empty()) continue;
            const auto comma = row.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("table: expected 'a0,a1' in '" + row + "'");
            t.rows.push_back({std::stoll(row.substr(0, comma)), std::stoll(row.substr(comma + 1))});
        }
        t.validate();
        return t;
    }
};

// ---------------------------------------------------------------------------
// Estimators.

// One-step ridge estimator from a half start: (a_k1 + 2 lambda)/(a_k. + 4 lambda).
inline Eigen::VectorXd pi_hat(const ContingencyTable& t, double lambda) {
    Eigen::VectorXd p(t.K());
    for (int k = 0; k < t.K(); ++k)
        p[k] = (t.a1(k) + 2.0 * lambda) / (t.tot(k) + 4.0 * lambda);
    return p;
}

// Firth estimate on the saturated design adds 1/2 to each cell count.
inline Eigen::VectorXd firth_pi(const ContingencyTable& t) {
    Eigen::VectorXd p(t.K());
    for (int k = 0; k < t.K(); ++k) p[k] = (t.a1(k) + 0.5) / (t.tot(k) + 1.0);
    return p;
}

// Leave-one-out estimates after removing one nonevent (first) or one event
// (second) from category k.
inline std::vector<std::pair<double, double>> loocv_pi(const ContingencyTable& t, double lambda) {
    std::vector<std::pair<double, double>> p(t.K());
    for (int k = 0; k < t.K(); ++k) {
        const double den = t.tot(k) - 1.0 + 4.0 * lambda;
        p[k] = {(t.a1(k) + 2.0 * lambda) / den, (t.a1(k) - 1.0 + 2.0 * lambda) / den};
    }
    return p;
}

// LOOCV deviance; zero-count terms vanish and are dropped. +inf signals the
// boundary cases where a log argument hits zero (for example a count of
// exactly one at lambda = 0).
inline double dev_loocv(const ContingencyTable& t, double lambda) {
    double dev = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double a0 = static_cast<double>(t.a0(k));
        const double a1 = static_cast<double>(t.a1(k));
        const double den = a0 + a1 - 1.0 + 4.0 * lambda;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        // 1 - pi_k0 = (a0 - 1 + 2 lambda)/den, pi_k1 = (a1 - 1 + 2 lambda)/den.
        if (a0 > 0) {
            const double num = a0 - 1.0 + 2.0 * lambda;
            if (num <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * a0 * (std::log(num) - std::log(den));
        }
        if (a1 > 0) {
            const double num = a1 - 1.0 + 2.0 * lambda;
            if (num <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * a1 * (std::log(num) - std::log(den));
        }
    }
    return dev;
}

// LOOCV mean squared prediction error.
inline double pe_loocv(const ContingencyTable& t, double lambda) {
    double pe = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double a0 = static_cast<double>(t.a0(k));
        const double a1 = static_cast<double>(t.a1(k));
        const double den = a0 + a1 - 1.0 + 4.0 * lambda;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        const double p0 = (a1 + 2.0 * lambda) / den;        // prediction for a removed nonevent
        const double p1 = (a1 - 1.0 + 2.0 * lambda) / den;  // prediction for a removed event
        pe += a0 * p0 * p0 + a1 * (1.0 - p1) * (1.0 - p1);
    }
    return pe / static_cast<double>(t.n());
}

// Tail-stable forms of the LOOCV criteria, shifted by their lambda -> inf
// limits (2 n log 2 for the deviance, 1/4 for the prediction error). Near the
// limit the plain sums lose the tail ordering to rounding; with
// 2 num - den constant in lambda, log(2 num/den) = log1p((2 num - den)/den)
// keeps full relative precision, so boundary minimizers classify exactly.
inline double dev_loocv_excess(const ContingencyTable& t, double lambda) {
    double excess = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double a0 = static_cast<double>(t.a0(k));
        const double a1 = static_cast<double>(t.a1(k));
        const double den = a0 + a1 - 1.0 + 4.0 * lambda;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        if (a0 > 0) {
            const double r = (a0 - a1 - 1.0) / den;  // 2(a0-1+2l)/den - 1
            if (r <= -1.0) return std::numeric_limits<double>::infinity();
            excess += -2.0 * a0 * std::log1p(r);
        }
        if (a1 > 0) {
            const double r = (a1 - a0 - 1.0) / den;
            if (r <= -1.0) return std::numeric_limits<double>::infinity();
            excess += -2.0 * a1 * std::log1p(r);
        }
    }
    return excess;
}

inline double pe_loocv_excess(const ContingencyTable& t, double lambda) {
    double excess = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double a0 = static_cast<double>(t.a0(k));
        const double a1 = static_cast<double>(t.a1(k));
        const double den = a0 + a1 - 1.0 + 4.0 * lambda;
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        // p0 - 1/2 and (1 - p1) - 1/2 with the lambda terms cancelled exactly.
        const double b = (a1 - a0 + 1.0) / (2.0 * den);
        const double c = (a0 - a1 + 1.0) / (2.0 * den);
        excess += a0 * b * (1.0 + b) + a1 * c * (1.0 + c);
    }
    return excess / static_cast<double>(t.n());
}

// Validation criteria: probabilities come from the full training table.
inline double dev_valid(const ContingencyTable& t, const ContingencyTable& tv, double lambda) {
    if (t.K() != tv.K()) throw std::invalid_argument("dev_valid: K mismatch");
    double dev = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double den = t.tot(k) + 4.0 * lambda;
        const double num1 = t.a1(k) + 2.0 * lambda;
        const double num0 = t.a0(k) + 2.0 * lambda;
        if (tv.a0(k) > 0) {
            if (num0 <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * tv.a0(k) * (std::log(num0) - std::log(den));
        }
        if (tv.a1(k) > 0) {
            if (num1 <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * tv.a1(k) * (std::log(num1) - std::log(den));
        }
    }
    return dev;
}

inline double pe_valid(const ContingencyTable& t, const ContingencyTable& tv, double lambda) {
    if (t.K() != tv.K()) throw std::invalid_argument("pe_valid: K mismatch");
    double pe = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const double p = (t.a1(k) + 2.0 * lambda) / (t.tot(k) + 4.0 * lambda);
        pe += tv.a0(k) * p * p + tv.a1(k) * (1.0 - p) * (1.0 - p);
    }
    return pe / static_cast<double>(tv.n());
}

// ---------------------------------------------------------------------------
// Gamma parameterization (intercept plus K-1 dummies, intercept unpenalized),
// closed forms printed for K = 2 only.

inline Eigen::VectorXd gamma_pi_hat(const ContingencyTable& t, double lambda) {
    if (t.K() != 2) throw std::invalid_argument("gamma_pi_hat: K must be 2");
    Eigen::VectorXd p(2);
    const double e = static_cast<double>(t.events());
    const double n = static_cast<double>(t.n());
    for (int k = 0; k < 2; ++k) {
        const double aj = static_cast<double>(t.tot(1 - k));
        p[k] = (aj * t.a1(k) + 4.0 * lambda * e) / (t.tot(k) * aj + 4.0 * lambda * n);
    }
    return p;
}

inline std::vector<std::pair<double, double>> gamma_loocv_pi(const ContingencyTable& t,
                                                             double lambda) {
    if (t.K() != 2) throw std::invalid_argument("gamma_loocv_pi: K must be 2");
    std::vector<std::pair<double, double>> p(2);
    const double e = static_cast<double>(t.events());
    const double n = static_cast<double>(t.n());
    for (int k = 0; k < 2; ++k) {
        const double aj = static_cast<double>(t.tot(1 - k));
        const double den = (t.tot(k) - 1.0) * aj + 4.0 * lambda * (n - 1.0);
        p[k] = {(t.a1(k) * aj + 4.0 * lambda * e) / den,
                ((t.a1(k) - 1.0) * aj + 4.0 * lambda * (e - 1.0)) / den};
    }
    return p;
}

inline double gamma_dev_loocv(const ContingencyTable& t, double lambda) {
    if (t.K() != 2) throw std::invalid_argument("gamma_dev_loocv: K must be 2");
    const double e = static_cast<double>(t.events());
    const double n = static_cast<double>(t.n());
    double dev = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double aj = static_cast<double>(t.tot(1 - k));
        const double den = (t.tot(k) - 1.0) * aj + 4.0 * lambda * (n - 1.0);
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        // 1 - pi_k0 = ((a_k0 - 1) a_j. + 4 lambda (a_.0 - 1))/den.
        if (t.a0(k) > 0) {
            const double num = (t.a0(k) - 1.0) * aj + 4.0 * lambda * (n - e - 1.0);
            if (num <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * t.a0(k) * (std::log(num) - std::log(den));
        }
        if (t.a1(k) > 0) {
            const double num = (t.a1(k) - 1.0) * aj + 4.0 * lambda * (e - 1.0);
            if (num <= 0.0) return std::numeric_limits<double>::infinity();
            dev += -2.0 * t.a1(k) * (std::log(num) - std::log(den));
        }
    }
    return dev;
}

inline double gamma_pe_loocv(const ContingencyTable& t, double lambda) {
    if (t.K() != 2) throw std::invalid_argument("gamma_pe_loocv: K must be 2");
    const auto p = gamma_loocv_pi(t, lambda);
    double pe = 0.0;
    for (int k = 0; k < 2; ++k)
        pe += t.a0(k) * p[k].first * p[k].first +
              t.a1(k) * (1.0 - p[k].second) * (1.0 - p[k].second);
    return pe / static_cast<double>(t.n());
}

// ---------------------------------------------------------------------------
// Analytic classification of the criterion minimizers.

enum class Verdict { Zero, PositiveFinite, Infinite, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Zero: return "zero";
        case Verdict::PositiveFinite: return "positive-finite";
        case Verdict::Infinite: return "infinite";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

struct LambdaVerdict {
    Verdict value = Verdict::Indeterminate;
    std::optional<double> closed_form;  // present only with PositiveFinite
    std::string source;
    // True when the minimizer is known to be strictly positive even though
    // finite-vs-infinite is unresolved (so value stays Indeterminate).
    bool positive_guarantee = false;
};

namespace detail {

inline LambdaVerdict verdict(Verdict v, const char* src, bool guarantee = false) {
    LambdaVerdict r;
    r.value = v;
    r.source = src;
    r.positive_guarantee = guarantee || v == Verdict::PositiveFinite || v == Verdict::Infinite;
    return r;
}

inline LambdaVerdict closed(double lambda, const char* src) {
    LambdaVerdict r;
    r.value = Verdict::PositiveFinite;
    r.closed_form = lambda;
    r.source = src;
    r.positive_guarantee = true;
    return r;
}

inline bool all_counts_above_one(const ContingencyTable& t) {
    for (const auto& r : t.rows)
        if (r[0] <= 1 || r[1] <= 1) return false;
    return true;
}

inline bool complete_all_above_one(const ContingencyTable& t) {
    for (int k = 0; k < t.K(); ++k)
        if (!t.row_pure(k) || t.tot(k) <= 1) return false;
    return true;
}

}  // namespace detail

// K = 1 deviance minimizer.
inline LambdaVerdict lambda_D_closed(const ContingencyTable& t) {
    if (t.K() != 1) throw std::invalid_argument("lambda_D_closed: K must be 1");
    const long long a0 = t.a0(0), a1 = t.a1(0), tot = a0 + a1;
    if (std::llabs(a0 - a1) == tot && tot > 1)
        return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
    if (a0 > 1 && a1 > 1) {
        const long long d2 = (a0 - a1) * (a0 - a1);
        if (d2 > tot)
            return detail::closed(
                static_cast<double>(a0 * (a0 - 1) + a1 * (a1 - 1)) / (2.0 * (d2 - tot)),
                "no separation, (a0-a1)^2 > a0+a1: interior closed form");
        return detail::verdict(Verdict::Infinite,
                               "no separation, (a0-a1)^2 <= a0+a1: deviance decreasing");
    }
    return detail::verdict(Verdict::Indeterminate, "counts of at most one: outside preconditions");
}

// K = 1 squared-prediction-error minimizer.
inline LambdaVerdict lambda_PE_closed(const ContingencyTable& t) {
    if (t.K() != 1) throw std::invalid_argument("lambda_PE_closed: K must be 1");
    const long long a0 = t.a0(0), a1 = t.a1(0), tot = a0 + a1;
    if (std::llabs(a0 - a1) == tot && tot > 1)
        return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
    if (a0 > 1 && a1 > 1) {
        const long long d2 = (a0 - a1) * (a0 - a1);
        if (d2 <= tot)
            return detail::verdict(Verdict::Infinite,
                                   "(a0-a1)^2 <= a0+a1: prediction error decreasing");
        return detail::closed(static_cast<double>(a0 * a1) / static_cast<double>(d2 - tot),
                              "(a0-a1)^2 > a0+a1: interior closed form");
    }
    return detail::verdict(Verdict::Indeterminate, "counts of at most one: outside preconditions");
}

// Deviance-minimizer classification for a general table. Conditions are
// applied mutually exclusively; regions the analysis resolves only
// numerically come back Indeterminate rather than hard-coded.
inline LambdaVerdict classify_lambda_D(const ContingencyTable& t) {
    t.validate();
    if (t.min_tot() < 2)
        return detail::verdict(Verdict::Indeterminate,
                               "single-subject category: LOOCV curve degenerate");
    const SeparationKind sep = t.separation();

    if (sep == SeparationKind::Complete) {
        if (detail::complete_all_above_one(t))
            return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
        return detail::verdict(Verdict::Indeterminate, "complete rows with a single subject");
    }

    if (sep == SeparationKind::None) {
        if (!detail::all_counts_above_one(t))
            return detail::verdict(Verdict::Indeterminate,
                                   "unseparated row with a count of at most one");
        if (t.K() == 1) return lambda_D_closed(t);
        bool all_above = true, all_at_most = true;
        for (int k = 0; k < t.K(); ++k) {
            const long long d2 = (t.a0(k) - t.a1(k)) * (t.a0(k) - t.a1(k));
            (d2 > t.tot(k) ? all_at_most : all_above) = false;
        }
        if (all_above)
            return detail::verdict(Verdict::PositiveFinite,
                                   "every row has (a0-a1)^2 > a0+a1: interior minimum");
        if (all_at_most)
            return detail::verdict(Verdict::Infinite,
                                   "every row has (a0-a1)^2 <= a0+a1: deviance decreasing");
        return detail::verdict(Verdict::Indeterminate,
                               "no separation: minimizer positive, finiteness unresolved", true);
    }

    // Quasi-complete separation.
    if (t.K() == 2) {
        const int k = t.row_pure(0) ? 0 : 1;
        const int l = 1 - k;
        const long long ak = t.tot(k);
        const long long al = t.tot(l);
        const long long l0 = t.a0(l), l1 = t.a1(l);
        if (l0 > 1 && l1 > 1 && ak > 1) {
            if (l0 == l1) {
                // Pure row against a balanced row.
                if (ak > 2 && al < ak * (ak - 1)) {
                    // al is even, so al/2 is exact.
                    if (ak * (al / 2 - 1) * (al - 1) >= al * (ak - 1))
                        return detail::verdict(Verdict::Zero,
                                               "pure vs balanced row: boundary minimum");
                    return detail::verdict(Verdict::PositiveFinite,
                                           "pure vs balanced row: interior minimum");
                }
                if (ak > 2)
                    return detail::verdict(Verdict::Zero, "pure vs balanced row: boundary minimum");
                if (al > 4)
                    return detail::verdict(Verdict::Zero, "pure vs balanced row: boundary minimum");
                return detail::verdict(Verdict::Infinite,
                                       "pure pair vs two balanced pairs: deviance decreasing");
            }
            // Pure row against an unbalanced mixed row.
            if (ak == 2 && al == 5)
                return detail::verdict(Verdict::Indeterminate,
                                       "two global minima, at zero and at infinity");
            const long long d2 = (l0 - l1) * (l0 - l1);
            const bool zero =
                (d2 < al && ak * (ak - 1) <= al - d2) || (d2 > al && ak > 2) ||
                (6 * l0 * l1 <= l0 * l0 + l1 * l1 + 5 * al - 10 && ak == 2) ||
                (d2 < al && ak * (ak - 1) >= al - d2 &&
                 ak * (ak - 1) * (3 * al - 5) - 2 * ((l0 - 1) * l0 + (l1 - 1) * l1) +
                         3 * (ak - 1) * (d2 - al) >=
                     0) ||
                (d2 == al && ak * (ak - 1) * (3 * al - 5) >= 4 * l0 * l1);
            if (zero)
                return detail::verdict(Verdict::Zero, "pure vs unbalanced row: boundary minimum");
            return detail::verdict(Verdict::Indeterminate,
                                   "pure vs unbalanced row: region resolved only numerically");
        }
    }

    // General-K quasi-complete bound: pure rows with more than one subject
    // against rows with both counts above one.
    bool partitioned = true;
    double sum_pure = 0.0, sum_mixed = 0.0;
    for (int k = 0; k < t.K(); ++k) {
        const long long a0 = t.a0(k), a1 = t.a1(k), tot = a0 + a1;
        if (t.row_pure(k) && tot > 1) {
            sum_pure += static_cast<double>(tot) / (tot - 1.0);
        } else if (a0 > 1 && a1 > 1) {
            sum_mixed += static_cast<double>(a0 * a0 + a1 * a1 - tot) /
                         ((a1 - 1.0) * (a0 - 1.0) * (tot - 1.0));
        } else {
            partitioned = false;
        }
    }
    if (partitioned && sum_mixed > sum_pure)
        return detail::verdict(Verdict::Indeterminate,
                               "quasi-complete: minimizer positive, finiteness unresolved", true);
    return detail::verdict(Verdict::Indeterminate, "no analytic condition applies");
}

// Prediction-error-minimizer classification: zero if and only if complete
// separation; K = 1 refines via the closed forms.
inline LambdaVerdict classify_lambda_PE(const ContingencyTable& t) {
    t.validate();
    if (t.min_tot() < 2)
        return detail::verdict(Verdict::Indeterminate,
                               "single-subject category: LOOCV curve degenerate");
    if (detail::complete_all_above_one(t))
        return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
    if (t.K() == 1) return lambda_PE_closed(t);
    return detail::verdict(Verdict::Indeterminate,
                           "not completely separated: minimizer positive", true);
}

// Gamma-parameterization classification, K = 2.
inline LambdaVerdict classify_gamma_lambda(const ContingencyTable& t, bool prediction_error) {
    if (t.K() != 2) throw std::invalid_argument("classify_gamma_lambda: K must be 2");
    t.validate();
    if (t.min_tot() < 2)
        return detail::verdict(Verdict::Indeterminate,
                               "single-subject category: LOOCV curve degenerate");
    const bool complete = detail::complete_all_above_one(t);

    if (prediction_error) {
        if (complete)
            return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
        return detail::verdict(Verdict::Indeterminate,
                               "not completely separated: minimizer positive", true);
    }

    if (complete) return detail::verdict(Verdict::Zero, "complete separation: minimizer at zero");
    const int npure = t.row_pure(0) + t.row_pure(1);
    if (npure == 1) {
        const int k = t.row_pure(0) ? 0 : 1;
        const int l = 1 - k;
        if (t.a0(l) > 1 && t.a1(l) > 1) {
            // Normalize so the pure row has no nonevents; otherwise mirror the
            // mixed row's counts.
            const bool pure_events = t.a0(k) == 0;
            const long long c0 = pure_events ? t.a0(l) : t.a1(l);
            const long long c1 = pure_events ? t.a1(l) : t.a0(l);
            const long long pk = pure_events ? t.a1(k) : t.a0(k);
            if (c1 > c0 || (2 < c1 && c1 <= c0) ||
                (2 == c1 && c1 <= c0 && pk * (c0 - 1) - c0 * (1 + c0) + 2 <= 0))
                return detail::verdict(Verdict::Zero,
                                       "quasi-complete separation: boundary minimum");
            return detail::verdict(Verdict::Indeterminate,
                                   "quasi-complete: minimizer positive, finiteness unresolved",
                                   true);
        }
        return detail::verdict(Verdict::Indeterminate,
                               "mixed row with a count of at most one");
    }
    return detail::verdict(Verdict::Indeterminate,
                           "no separation: minimizer positive, finiteness unresolved", true);
}

// ---------------------------------------------------------------------------
// Numeric minimization used to cross-check the verdicts.

struct CurveScan {
    double lambda = 0.0;
    double value = 0.0;
    bool at_lower = false;
    bool at_upper = false;
};

// Log-spaced grid scan with golden-section refinement between the argmin's
// neighbors. Ties resolve to the smallest lambda.
template <typename F>
CurveScan scan_log_minimum(F&& f, double lo, double hi, int points = 400, int refine = 100) {
    const double llo = std::log(lo), lhi = std::log(hi);
    int best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    std::vector<double> lams(points);
    for (int i = 0; i < points; ++i) {
        const double lam = std::exp(llo + (lhi - llo) * i / (points - 1.0));
        lams[i] = lam;
        const double v = f(lam);
        if (v < best_v) {  // strict: ties keep the smallest lambda
            best_v = v;
            best = i;
        }
    }
    CurveScan s;
    s.at_lower = best == 0;
    s.at_upper = best == points - 1;
    if (s.at_lower || s.at_upper) {
        s.lambda = lams[best];
        s.value = best_v;
        return s;
    }
    double a = std::log(lams[best - 1]), b = std::log(lams[best + 1]);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
    for (int i = 0; i < refine; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(std::exp(x2));
        }
    }
    s.lambda = std::exp(f1 <= f2 ? x1 : x2);
    s.value = std::min(f1, f2);

    // Value comparisons cannot localize a flat minimum past the rounding
    // noise of f; the slope sign from a central difference stays reliable
    // much closer in, so polish by bisecting the derivative sign between the
    // original grid neighbors.
    {
        const double h = 1e-4;
        const auto slope = [&](double x) {
            return f(std::exp(x + h)) - f(std::exp(x - h));
        };
        double da = std::log(lams[best - 1]), db = std::log(lams[best + 1]);
        double sa = slope(da), sb = slope(db);
        if (sa < 0.0 && sb > 0.0) {
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (da + db);
                const double sm = slope(mid);
                if (sm == 0.0) {
                    da = db = mid;
                    break;
                }
                (sm < 0.0 ? da : db) = mid;
            }
            const double xr = 0.5 * (da + db);
            const double fr = f(std::exp(xr));
            if (fr <= s.value + 1e-12 * (1.0 + std::fabs(s.value))) {
                s.lambda = std::exp(xr);
                s.value = fr;
            }
        }
    }
    if (s.value > best_v) {
        s.lambda = lams[best];
        s.value = best_v;
    }
    return s;
}

// Boundary classification of a numeric scan over [lo, hi].
inline Verdict verdict_of_scan(const CurveScan& s, double zero_edge = 1e-6,
                               double inf_edge = 1e7) {
    if (s.lambda < zero_edge) return Verdict::Zero;
    if (s.lambda > inf_edge) return Verdict::Infinite;
    return Verdict::PositiveFinite;
}

}  // namespace penlogit
