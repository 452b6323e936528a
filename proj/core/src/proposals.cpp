#include "qmamis/proposals.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "qmamis/error.hpp"
#include "qmamis/transforms.hpp"

namespace qmamis {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& m, const char* what)
{
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw SingularProposal(std::string(what) + ": Cholesky failed");
    return llt.matrixL();
}

} // namespace

std::string_view to_string(Family family) noexcept
{
    switch (family) {
    case Family::GaussianFixedCov: return "gaussian_fixed_cov";
    case Family::GaussianMeanCov: return "gaussian_mean_cov";
    case Family::StudentT: return "student_t";
    }
    return "?";
}

FamilySpec FamilySpec::gaussian_fixed_cov(const Eigen::MatrixXd& cov)
{
    QMAMIS_REQUIRE(cov.rows() >= 1 && cov.rows() == cov.cols(), InvalidArgument,
                   "fixed covariance must be square");
    QMAMIS_REQUIRE(cov.isApprox(cov.transpose(), 1e-12), InvalidArgument,
                   "fixed covariance must be symmetric");
    FamilySpec spec(Family::GaussianFixedCov, static_cast<std::size_t>(cov.rows()), 0.0);
    spec.fixed_cov_ = cov;
    spec.fixed_chol_ = cholesky_or_throw(cov, "fixed covariance");
    return spec;
}

FamilySpec FamilySpec::gaussian_mean_cov(std::size_t d)
{
    QMAMIS_REQUIRE(d >= 1, InvalidArgument, "family dimension must be positive");
    return FamilySpec(Family::GaussianMeanCov, d, 0.0);
}

FamilySpec FamilySpec::student_t(std::size_t d, double nu)
{
    QMAMIS_REQUIRE(d >= 1, InvalidArgument, "family dimension must be positive");
    QMAMIS_REQUIRE(nu > 0.0 && std::isfinite(nu), InvalidArgument, "nu must be positive");
    return FamilySpec(Family::StudentT, d, nu);
}

std::size_t FamilySpec::param_dim() const noexcept
{
    return family_ == Family::GaussianFixedCov ? dim_ : dim_ + dim_ * dim_;
}

std::size_t FamilySpec::uniform_dim() const noexcept
{
    return family_ == Family::StudentT ? dim_ + 1 : dim_;
}

SpdRepair spd_repair(const Eigen::MatrixXd& sigma)
{
    QMAMIS_REQUIRE(sigma.rows() == sigma.cols() && sigma.rows() >= 1, InvalidArgument,
                   "spd_repair: matrix must be square");
    if (!sigma.allFinite()) throw InvalidParameter("spd_repair: non-finite covariance entries");

    SpdRepair out;
    Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success) throw SingularProposal("spd_repair: eigendecomposition failed");

    if (eig.eigenvalues().minCoeff() > kMinEigenvalue) {
        out.matrix = std::move(sym);
    } else {
        const Eigen::VectorXd floored = eig.eigenvalues().cwiseMax(kMinEigenvalue);
        out.matrix = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
        out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
        out.floored = true;
    }
    out.chol_lower = cholesky_or_throw(out.matrix, "spd_repair");
    return out;
}

Eigen::VectorXd vec_row_major(const Eigen::MatrixXd& a)
{
    Eigen::VectorXd v(a.size());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) v[i * a.cols() + j] = a(i, j);
    return v;
}

Eigen::MatrixXd unvec_row_major(const Eigen::Ref<const Eigen::VectorXd>& v, std::size_t d)
{
    const auto n = static_cast<Eigen::Index>(d);
    QMAMIS_REQUIRE(v.size() == n * n, InvalidArgument, "unvec: length is not d^2");
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = v[i * n + j];
    return a;
}

ProposalParam ProposalParam::from_theta(const FamilySpec& spec, const Eigen::VectorXd& theta)
{
    const auto d = static_cast<Eigen::Index>(spec.dim());
    QMAMIS_REQUIRE(theta.size() == static_cast<Eigen::Index>(spec.param_dim()), InvalidArgument,
                   "theta length " + std::to_string(theta.size()) + " does not match family (" +
                       std::to_string(spec.param_dim()) + ")");
    if (!theta.allFinite()) throw InvalidParameter("theta has non-finite entries");

    ProposalParam p;
    p.family_ = spec.family();
    p.nu_ = spec.nu();
    p.mean_ = theta.head(d);
    if (spec.family() == Family::GaussianFixedCov) {
        p.theta_ = theta;
        p.chol_ = spec.fixed_cov_chol();
    } else {
        SpdRepair rep = spd_repair(unvec_row_major(theta.tail(d * d), spec.dim()));
        p.theta_.resize(theta.size());
        p.theta_ << p.mean_, vec_row_major(rep.matrix);
        p.chol_ = std::move(rep.chol_lower);
        p.repaired_ = rep.floored;
    }
    p.finish(spec);
    return p;
}

ProposalParam ProposalParam::from_moments(const FamilySpec& spec, const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& cov)
{
    if (spec.family() == Family::GaussianFixedCov) return from_theta(spec, mean);
    Eigen::VectorXd theta(spec.param_dim());
    theta << mean, vec_row_major(cov);
    return from_theta(spec, theta);
}

void ProposalParam::finish(const FamilySpec& spec)
{
    const double d = static_cast<double>(spec.dim());
    const double log_det_half = chol_.diagonal().array().log().sum();
    if (family_ == Family::StudentT) {
        log_norm_ = std::lgamma(0.5 * (nu_ + d)) - std::lgamma(0.5 * nu_) -
                    0.5 * d * std::log(nu_ * std::numbers::pi) - log_det_half;
    } else {
        log_norm_ = -0.5 * d * kLogTwoPi - log_det_half;
    }
}

namespace {

double log_density_from_quad(const ProposalParam& theta, double quad, double d)
{
    if (theta.family() == Family::StudentT)
        return theta.log_norm() - 0.5 * (theta.nu() + d) * std::log1p(quad / theta.nu());
    return theta.log_norm() - 0.5 * quad;
}

} // namespace

double log_density(const FamilySpec& spec, const ProposalParam& theta,
                   const Eigen::Ref<const Eigen::VectorXd>& x)
{
    QMAMIS_REQUIRE(x.size() == static_cast<Eigen::Index>(spec.dim()), InvalidArgument,
                   "log_density: dimension mismatch");
    Eigen::VectorXd r = x - theta.mean();
    theta.chol_lower().triangularView<Eigen::Lower>().solveInPlace(r);
    return log_density_from_quad(theta, r.squaredNorm(), static_cast<double>(spec.dim()));
}

Eigen::MatrixXd whiten_rows(const FamilySpec& spec, const Eigen::MatrixXd& samples)
{
    QMAMIS_REQUIRE(spec.family() == Family::GaussianFixedCov, InvalidArgument,
                   "whiten_rows: family has no shared covariance");
    QMAMIS_REQUIRE(samples.cols() == static_cast<Eigen::Index>(spec.dim()), InvalidArgument,
                   "whiten_rows: dimension mismatch");
    Eigen::MatrixXd w = samples.transpose();
    spec.fixed_cov_chol().triangularView<Eigen::Lower>().solveInPlace(w);
    return w;
}

Eigen::VectorXd log_density_whitened(const FamilySpec& spec, const ProposalParam& theta,
                                     const Eigen::MatrixXd& whitened)
{
    QMAMIS_REQUIRE(spec.family() == Family::GaussianFixedCov &&
                       whitened.rows() == static_cast<Eigen::Index>(spec.dim()),
                   InvalidArgument, "log_density_whitened: shape or family mismatch");
    Eigen::VectorXd m = theta.mean();
    spec.fixed_cov_chol().triangularView<Eigen::Lower>().solveInPlace(m);
    const Eigen::VectorXd quad = (whitened.colwise() - m).colwise().squaredNorm().transpose();
    return (theta.log_norm() - 0.5 * quad.array()).matrix();
}

Eigen::VectorXd log_density_rows(const FamilySpec& spec, const ProposalParam& theta,
                                 const Eigen::MatrixXd& samples)
{
    QMAMIS_REQUIRE(samples.cols() == static_cast<Eigen::Index>(spec.dim()), InvalidArgument,
                   "log_density_rows: dimension mismatch");
    if (spec.family() == Family::GaussianFixedCov)
        return log_density_whitened(spec, theta, whiten_rows(spec, samples));
    Eigen::MatrixXd r = (samples.rowwise() - theta.mean().transpose()).transpose();
    theta.chol_lower().triangularView<Eigen::Lower>().solveInPlace(r);
    const Eigen::VectorXd quad = r.colwise().squaredNorm().transpose();
    const double d = static_cast<double>(spec.dim());
    Eigen::VectorXd out(quad.size());
    for (Eigen::Index i = 0; i < quad.size(); ++i) out[i] = log_density_from_quad(theta, quad[i], d);
    return out;
}

Eigen::MatrixXd sample(const FamilySpec& spec, const ProposalParam& theta, const UniformPointSet& ps)
{
    const auto d = static_cast<Eigen::Index>(spec.dim());
    QMAMIS_REQUIRE(ps.d() == spec.uniform_dim(), InvalidArgument,
                   "sample: point set has " + std::to_string(ps.d()) + " coordinates, family needs " +
                       std::to_string(spec.uniform_dim()));
    const auto n = static_cast<Eigen::Index>(ps.n());
    Eigen::MatrixXd z(d, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) z(j, i) = inv_norm_cdf(ps(i, j));

    Eigen::MatrixXd x = theta.chol_lower().triangularView<Eigen::Lower>() * z;
    if (spec.family() == Family::StudentT) {
        for (Eigen::Index i = 0; i < n; ++i)
            x.col(i) *= std::sqrt(spec.nu() / inv_chi2_cdf(ps(i, d), spec.nu()));
    }
    x.colwise() += theta.mean();
    return x.transpose();
}

Eigen::VectorXd HStatistic::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    const auto d = static_cast<Eigen::Index>(dim_);
    QMAMIS_REQUIRE(x.size() == d, InvalidArgument, "h statistic: dimension mismatch");
    if (kind_ == Kind::Identity) return x;
    Eigen::VectorXd out(d + d * d);
    out.head(d) = x;
    const Eigen::VectorXd c = kind_ == Kind::Centered ? Eigen::VectorXd(x - aux_mean_) : Eigen::VectorXd(x);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out[d + i * d + j] = c[i] * c[j];
    return out;
}

Eigen::VectorXd h_statistic(const FamilySpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                            const std::optional<Eigen::VectorXd>& aux_mean)
{
    if (!spec.adapts_covariance()) return HStatistic::identity(spec.dim())(x);
    if (aux_mean) return HStatistic::centered(*aux_mean)(x);
    return HStatistic::pilot(spec.dim())(x);
}

} // namespace qmamis
