#include "kcard/regression.hpp"

#include "kcard/error.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace kcard {

namespace {

double binomial(int n, int k) {
    double out = 1.0;
    for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

} // namespace

RegressionFit ols_fit(std::span<const double> x, std::span<const double> y, int degree) {
    if (degree != 1 && degree != 2)
        throw Error(ErrorCode::InvalidArgument, "only degree 1 and 2 fits are supported");
    if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
    const auto n = static_cast<Eigen::Index>(x.size());
    const int p = degree + 1;
    if (n < p + 1)
        throw Error(ErrorCode::InvalidArgument, "need at least " + std::to_string(p + 1) +
                                                    " observations for a degree " +
                                                    std::to_string(degree) + " fit");
    if (std::set<double>(x.begin(), x.end()).size() < static_cast<std::size_t>(p))
        throw Error(ErrorCode::SingularDesign, "too few distinct x values for the polynomial degree");

    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    if (!xv.allFinite() || !yv.allFinite())
        throw Error(ErrorCode::InvalidArgument, "regression inputs must be finite");

    // Normal equations on the standardized basis z = (x - c) / s, then mapped
    // back to raw powers of x. Raw Vandermonde normal equations on k = 10..100
    // lose about nine digits.
    const double center = xv.mean();
    const double scale = std::sqrt((xv.array() - center).square().mean());
    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    for (int j = 1; j < p; ++j)
        design.col(j) = design.col(j - 1).cwiseProduct((xv.array() - center).matrix() / scale);

    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * ldlt.vectorD().maxCoeff())
        throw Error(ErrorCode::SingularDesign, "normal equations are singular");
    const Eigen::VectorXd gamma = ldlt.solve(design.transpose() * yv);
    const Eigen::MatrixXd gram_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

    // beta = T * gamma with T(i, j) = C(j, i) (-c)^(j - i) / s^j.
    Eigen::MatrixXd to_raw = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i <= j; ++i)
            to_raw(i, j) = binomial(j, i) * std::pow(-center, j - i) / std::pow(scale, j);

    RegressionFit fit;
    fit.degree = degree;
    fit.n = n;
    fit.coefficients = to_raw * gamma;
    fit.rss = (yv - design * gamma).squaredNorm();
    fit.tss = (yv.array() - yv.mean()).square().sum();

    const auto dof = static_cast<double>(n - p);
    const double sigma2 = fit.rss / dof;
    const Eigen::MatrixXd cov = sigma2 * (to_raw * gram_inv * to_raw.transpose());
    fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();

    // Rounding alone leaves RSS around (eps * |y|)^2; treat that as exact.
    const double rounding_floor = std::pow(1e3 * std::numeric_limits<double>::epsilon(), 2) * yv.squaredNorm();
    fit.degenerate = fit.rss < std::max(kRssFloor, rounding_floor);

    const auto nd = static_cast<double>(n);
    const double params = p + 1.0;
    if (fit.degenerate) {
        fit.aic = -std::numeric_limits<double>::infinity();
        fit.bic = -std::numeric_limits<double>::infinity();
        fit.p_values = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    } else {
        const double log_lik_term = nd * std::log(fit.rss / nd);
        fit.aic = log_lik_term + 2.0 * params;
        fit.bic = log_lik_term + std::log(nd) * params;
        fit.p_values.resize(p);
        for (int j = 0; j < p; ++j)
            fit.p_values(j) = student_t_two_sided_p(fit.coefficients(j) / fit.std_errors(j), dof);
    }

    if (fit.tss > 0.0)
        fit.adj_r2 = 1.0 - (fit.rss / dof) / (fit.tss / (nd - 1.0));
    else
        fit.adj_r2 = 1.0;
    return fit;
}

double student_t_two_sided_p(double t_stat, double df) {
    if (!(df >= 1.0)) throw Error(ErrorCode::InvalidArgument, "Student-t needs df >= 1");
    if (std::isnan(t_stat)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t_stat)) return 0.0;
    // P(|T| > t) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    const double t2 = t_stat * t_stat;
    const double p = boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
    return std::clamp(p, 0.0, 1.0);
}

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::QuadraticUnambiguous ? "quadratic-unambiguous" : "linear-retained";
}

ModelComparison compare_models(const RegressionFit& linear, const RegressionFit& quadratic,
                               double alpha, double m) {
    if (linear.degree != 1 || quadratic.degree != 2 || linear.n != quadratic.n)
        throw Error(ErrorCode::MismatchedFits,
                    "expected a degree-1 and a degree-2 fit over the same observations");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    if (!(m >= 1.0)) throw Error(ErrorCode::InvalidArgument, "hypothesis count must be at least 1");

    ModelComparison cmp;
    cmp.linear = linear;
    cmp.quadratic = quadratic;
    cmp.alpha = alpha;
    cmp.m = m;
    cmp.flags.lower_aic = quadratic.aic < linear.aic;
    cmp.flags.lower_bic = quadratic.bic < linear.bic;
    cmp.flags.higher_adj_r2 = quadratic.adj_r2 > linear.adj_r2;
    cmp.flags.significant = quadratic.leading_p() < cmp.threshold();
    cmp.verdict = cmp.flags.all() ? Verdict::QuadraticUnambiguous : Verdict::LinearRetained;
    return cmp;
}

} // namespace kcard
