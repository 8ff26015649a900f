#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string_view>

namespace kcard {

/// Below this residual sum of squares a fit counts as exact: information
/// criteria become -infinity and p-values NaN.
inline constexpr double kRssFloor = 1e-30;

/// Ordinary least squares of y on the polynomial basis 1, x, ..., x^degree.
struct RegressionFit {
    int degree = 1;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd p_values;
    double rss = 0.0;
    double tss = 0.0;
    Eigen::Index n = 0;
    double aic = 0.0;
    double bic = 0.0;
    double adj_r2 = 0.0;
    bool degenerate = false;

    /// Highest-order coefficient and its p-value.
    double leading() const { return coefficients(degree); }
    double leading_p() const { return p_values(degree); }
    /// Coefficient on x.
    double slope() const { return coefficients(1); }
};

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y, int degree);

/// Two-sided Student-t tail probability 2 * (1 - F(|t|; df)).
double student_t_two_sided_p(double t_stat, double df);

enum class Verdict { QuadraticUnambiguous, LinearRetained };

std::string_view to_string(Verdict verdict);

struct ConditionFlags {
    bool lower_aic = false;
    bool lower_bic = false;
    bool higher_adj_r2 = false;
    bool significant = false;

    bool all() const { return lower_aic && lower_bic && higher_adj_r2 && significant; }
};

struct ModelComparison {
    RegressionFit linear;
    RegressionFit quadratic;
    double alpha = 0.05;
    double m = 1.0;
    Verdict verdict = Verdict::LinearRetained;
    ConditionFlags flags;

    double threshold() const { return alpha / m; }
};

/// Quadratic wins only if it beats the linear fit on AIC, BIC and adjusted R^2
/// and its x^2 coefficient has p < alpha / m.
ModelComparison compare_models(const RegressionFit& linear, const RegressionFit& quadratic,
                               double alpha, double m);

} // namespace kcard
