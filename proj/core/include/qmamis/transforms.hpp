#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace qmamis {

/// Uniforms are clamped into [kUnitClampLow, kUnitClampHigh] before any
/// inverse CDF so that a scrambled net emitting exactly 0 stays finite.
inline constexpr double kUnitClampLow = 0x1p-53;
inline constexpr double kUnitClampHigh = 1.0 - 0x1p-53;

double clamp_unit(double u);

/// Standard normal CDF.
double norm_cdf(double x) noexcept;

/// Standard normal quantile. Accepts u in [0,1] (clamped as above);
/// throws InvalidArgument outside that range or for NaN.
double inv_norm_cdf(double u);

/// CDF of the chi-square distribution with nu degrees of freedom.
double chi2_cdf(double w, double nu);

/// Chi-square quantile, |CDF(w) - u| <= 1e-10. Same clamping as inv_norm_cdf.
double inv_chi2_cdf(double u, double nu);

/// mean + chol_lower * Phi^{-1}(row), Phi^{-1} applied componentwise.
Eigen::VectorXd gaussian_transport(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                                   std::span<const double> row);

/// Multivariate Student-t draw from a (d+1)-coordinate row: the first d
/// coordinates give z = Phi^{-1}(row), the last gives w ~ chi2_nu, and the
/// result is mean + chol_lower * z * sqrt(nu / w).
Eigen::VectorXd student_t_transport(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol_lower,
                                    double nu, std::span<const double> row);

} // namespace qmamis
