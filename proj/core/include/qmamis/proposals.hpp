#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "qmamis/pointgen.hpp"

namespace qmamis {

enum class Family { GaussianFixedCov, GaussianMeanCov, StudentT };

std::string_view to_string(Family family) noexcept;

/// Smallest eigenvalue allowed in a proposal covariance block.
inline constexpr double kMinEigenvalue = 1e-8;

/// Static description of a proposal family {Q(theta)}.
///
/// GaussianFixedCov adapts only the mean (theta in R^d) and carries the
/// fixed covariance with its Cholesky factor. GaussianMeanCov and StudentT
/// adapt theta = (mean, vec(cov)) in R^(d + d^2), vec taken row-major. For
/// StudentT the "cov" block is the scale matrix and nu is fixed.
class FamilySpec {
public:
    static FamilySpec gaussian_fixed_cov(const Eigen::MatrixXd& cov);
    static FamilySpec gaussian_mean_cov(std::size_t d);
    static FamilySpec student_t(std::size_t d, double nu);

    Family family() const noexcept { return family_; }
    std::size_t dim() const noexcept { return dim_; }
    double nu() const noexcept { return nu_; }
    const Eigen::MatrixXd& fixed_cov() const noexcept { return fixed_cov_; }
    const Eigen::MatrixXd& fixed_cov_chol() const noexcept { return fixed_chol_; }

    /// Length D of the packed parameter vector.
    std::size_t param_dim() const noexcept;
    /// Uniform coordinates consumed per draw (d, or d+1 for StudentT).
    std::size_t uniform_dim() const noexcept;
    bool adapts_covariance() const noexcept { return family_ != Family::GaussianFixedCov; }

private:
    FamilySpec(Family family, std::size_t dim, double nu) : family_(family), dim_(dim), nu_(nu) {}

    Family family_;
    std::size_t dim_;
    double nu_;
    Eigen::MatrixXd fixed_cov_;
    Eigen::MatrixXd fixed_chol_;
};

struct SpdRepair {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd chol_lower;
    bool floored = false; ///< true when an eigenvalue was raised to kMinEigenvalue
};

/// Symmetrizes sigma and floors its eigenvalues at kMinEigenvalue. An input
/// whose smallest eigenvalue already exceeds the floor is returned as its
/// symmetric part. Throws InvalidParameter on non-finite entries.
SpdRepair spd_repair(const Eigen::MatrixXd& sigma);

/// Row-major vec: (a11, a12, ..., a1d, a21, ..., add).
Eigen::VectorXd vec_row_major(const Eigen::MatrixXd& a);
Eigen::MatrixXd unvec_row_major(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t d);

/// An adaptation parameter theta together with the factorization needed to
/// evaluate and sample Q(theta). Immutable once built.
class ProposalParam {
public:
    ProposalParam() = default;

    /// Unpacks theta; the covariance block (if any) goes through spd_repair
    /// and the stored theta holds the repaired block.
    static ProposalParam from_theta(const FamilySpec& spec, const Eigen::VectorXd& theta);
    static ProposalParam from_moments(const FamilySpec& spec, const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& cov);

    Family family() const noexcept { return family_; }
    const Eigen::VectorXd& theta() const noexcept { return theta_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& chol_lower() const noexcept { return chol_; }
    Eigen::MatrixXd cov() const { return chol_ * chol_.transpose(); }
    double nu() const noexcept { return nu_; }
    /// True when spd_repair had to floor an eigenvalue.
    bool repaired() const noexcept { return repaired_; }
    /// Log of the normalizing constant (everything but the quadratic term).
    double log_norm() const noexcept { return log_norm_; }

private:
    void finish(const FamilySpec& spec);

    Family family_ = Family::GaussianFixedCov;
    Eigen::VectorXd theta_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd chol_;
    double nu_ = 0.0;
    double log_norm_ = 0.0;
    bool repaired_ = false;
};

/// log q(x, theta) of the normalized family density.
double log_density(const FamilySpec& spec, const ProposalParam& theta,
                   const Eigen::Ref<const Eigen::VectorXd>& x);

/// log q for every row of `samples` (N x d).
Eigen::VectorXd log_density_rows(const FamilySpec& spec, const ProposalParam& theta,
                                 const Eigen::MatrixXd& samples);

/// GaussianFixedCov only: L^{-1} X^T (d x N) for the shared Cholesky factor L.
/// Whitening once lets many means be scored at O(d) per sample.
Eigen::MatrixXd whiten_rows(const FamilySpec& spec, const Eigen::MatrixXd& samples);

/// GaussianFixedCov only: log q for samples already passed through whiten_rows.
Eigen::VectorXd log_density_whitened(const FamilySpec& spec, const ProposalParam& theta,
                                     const Eigen::MatrixXd& whitened);

/// Transport every point of ps through Q(theta); row i is the image of point i.
Eigen::MatrixXd sample(const FamilySpec& spec, const ProposalParam& theta,
                       const UniformPointSet& ps);

/// The moment-matching map h with theta* = E_pi[h(X)].
///
/// Identity: h(x) = x (mean-only family). Centered: (x, vec((x - m)(x - m)^T))
/// for a supplied auxiliary mean m. Pilot: (x, vec(x x^T)).
class HStatistic {
public:
    enum class Kind { Identity, Centered, Pilot };

    static HStatistic identity(std::size_t d) { return HStatistic(Kind::Identity, d, {}); }
    static HStatistic centered(const Eigen::VectorXd& aux_mean)
    {
        return HStatistic(Kind::Centered, static_cast<std::size_t>(aux_mean.size()), aux_mean);
    }
    static HStatistic pilot(std::size_t d) { return HStatistic(Kind::Pilot, d, {}); }

    Kind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t output_dim() const noexcept { return kind_ == Kind::Identity ? dim_ : dim_ + dim_ * dim_; }
    const Eigen::VectorXd& aux_mean() const noexcept { return aux_mean_; }

    Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    HStatistic(Kind kind, std::size_t dim, Eigen::VectorXd aux)
        : kind_(kind), dim_(dim), aux_mean_(std::move(aux)) {}

    Kind kind_;
    std::size_t dim_;
    Eigen::VectorXd aux_mean_;
};

/// h for the family: x for mean-only; centered when aux_mean is given,
/// otherwise the pilot variant.
Eigen::VectorXd h_statistic(const FamilySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const std::optional<Eigen::VectorXd>& aux_mean);

} // namespace qmamis
