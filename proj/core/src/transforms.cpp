#include "qmamis/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "qmamis/error.hpp"

namespace qmamis {

namespace {

// Acklam's rational approximation, relative error about 1.15e-9.
double acklam_lower(double p)
{
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Quantile for p <= 0.5, refined by one Halley step against erfc.
double inv_norm_lower(double p)
{
    if (p == 0.5) return 0.0;
    double x = acklam_lower(p);
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

void check_unit(double u, const char* what)
{
    if (!(u >= 0.0 && u <= 1.0))
        throw InvalidArgument(std::string(what) + ": probability " + std::to_string(u) +
                              " outside [0,1]");
}

} // namespace

double clamp_unit(double u)
{
    return std::clamp(u, kUnitClampLow, kUnitClampHigh);
}

double norm_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double inv_norm_cdf(double u)
{
    check_unit(u, "inv_norm_cdf");
    u = clamp_unit(u);
    // 1 - u is exact for u >= 1/2, so the upper half reflects without loss
    if (u > 0.5) return -inv_norm_lower(1.0 - u);
    return inv_norm_lower(u);
}

double chi2_cdf(double w, double nu)
{
    QMAMIS_REQUIRE(nu > 0.0 && std::isfinite(nu), InvalidArgument,
                   "chi-square degrees of freedom must be positive");
    if (w <= 0.0) return 0.0;
    return boost::math::gamma_p(0.5 * nu, 0.5 * w);
}

double inv_chi2_cdf(double u, double nu)
{
    check_unit(u, "inv_chi2_cdf");
    QMAMIS_REQUIRE(nu > 0.0 && std::isfinite(nu), InvalidArgument,
                   "chi-square degrees of freedom must be positive");
    u = clamp_unit(u);
    // Invert on whichever tail keeps the target probability exact.
    const double a = 0.5 * nu;
    const double x = u > 0.5 ? boost::math::gamma_q_inv(a, 1.0 - u) : boost::math::gamma_p_inv(a, u);
    return 2.0 * x;
}

Eigen::VectorXd gaussian_transport(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                                   std::span<const double> row)
{
    const auto d = mean.size();
    QMAMIS_REQUIRE(chol_lower.rows() == d && chol_lower.cols() == d &&
                       static_cast<Eigen::Index>(row.size()) == d,
                   InvalidArgument, "gaussian_transport: shape mismatch");
    Eigen::VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z[j] = inv_norm_cdf(row[j]);
    return mean + chol_lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd student_t_transport(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                                    double nu, std::span<const double> row)
{
    const auto d = mean.size();
    QMAMIS_REQUIRE(chol_lower.rows() == d && chol_lower.cols() == d &&
                       static_cast<Eigen::Index>(row.size()) == d + 1,
                   InvalidArgument, "student_t_transport: shape mismatch");
    Eigen::VectorXd z(d);
    for (Eigen::Index j = 0; j < d; ++j) z[j] = inv_norm_cdf(row[j]);
    const double w = inv_chi2_cdf(row[d], nu);
    const Eigen::VectorXd lz = chol_lower.triangularView<Eigen::Lower>() * z;
    return mean + std::sqrt(nu / w) * lz;
}

} // namespace qmamis
