#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qmamis/error.hpp"
#include "qmamis/pointgen.hpp"
#include "qmamis/proposals.hpp"

using namespace qmamis;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double min_eig(const Eigen::MatrixXd& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

} // namespace

TEST(Proposals, StandardNormalAtOrigin)
{
    for (std::size_t d : {1u, 2u, 5u}) {
        const auto spec = FamilySpec::gaussian_mean_cov(d);
        const auto n = static_cast<Eigen::Index>(d);
        const auto p = ProposalParam::from_moments(spec, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
        EXPECT_NEAR(log_density(spec, p, Eigen::VectorXd::Zero(n)), -0.5 * static_cast<double>(d) * kLog2Pi, 1e-14);
    }
}

TEST(Proposals, NormalDensityIntegratesToOne)
{
    const auto spec = FamilySpec::gaussian_mean_cov(1);
    const auto p = ProposalParam::from_moments(spec, Eigen::VectorXd::Constant(1, 0.4),
                                               Eigen::MatrixXd::Constant(1, 1, 2.25));
    const int n = 20001;
    const double lo = -20.0, hi = 20.0, h = (hi - lo) / (n - 1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        sum += w * std::exp(log_density(spec, p, Eigen::VectorXd::Constant(1, lo + h * i)));
    }
    EXPECT_NEAR(sum * h, 1.0, 1e-6);
}

TEST(Proposals, StudentT2AtOrigin)
{
    const auto spec = FamilySpec::student_t(1, 2.0);
    const auto p = ProposalParam::from_moments(spec, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    EXPECT_NEAR(log_density(spec, p, Eigen::VectorXd::Zero(1)), -1.039721, 1e-6);
    EXPECT_NEAR(log_density(spec, p, Eigen::VectorXd::Zero(1)), std::log(1.0 / (2.0 * std::sqrt(2.0))), 1e-14);
}

TEST(Proposals, StudentTMatchesUnivariateClosedForm)
{
    // t_nu(mu, s^2) density at x
    const double nu = 3.5, mu = 0.7, s2 = 1.8, x = -1.3;
    const auto spec = FamilySpec::student_t(1, nu);
    const auto p = ProposalParam::from_moments(spec, Eigen::VectorXd::Constant(1, mu),
                                               Eigen::MatrixXd::Constant(1, 1, s2));
    const double r = (x - mu) * (x - mu) / s2;
    const double expected = std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) -
                            0.5 * std::log(nu * std::numbers::pi * s2) - 0.5 * (nu + 1) * std::log1p(r / nu);
    EXPECT_NEAR(log_density(spec, p, Eigen::VectorXd::Constant(1, x)), expected, 1e-13);
}

TEST(Proposals, RowsAgreeWithSinglePoint)
{
    Eigen::Matrix3d cov;
    cov << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 0.5;
    const auto fixed = FamilySpec::gaussian_fixed_cov(cov);
    const auto pf = ProposalParam::from_theta(fixed, Eigen::Vector3d(0.1, 0.2, 0.3));
    const auto tspec = FamilySpec::student_t(3, 2.0);
    const auto pt = ProposalParam::from_moments(tspec, Eigen::Vector3d(1, 0, -1), cov);
    const auto ps = generate_sobol(5, 4, 3);
    const Eigen::MatrixXd x = sample(tspec, pt, ps);
    const Eigen::VectorXd rf = log_density_rows(fixed, pf, x);
    const Eigen::VectorXd rt = log_density_rows(tspec, pt, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        EXPECT_NEAR(rf[i], log_density(fixed, pf, x.row(i).transpose()), 1e-12);
        EXPECT_NEAR(rt[i], log_density(tspec, pt, x.row(i).transpose()), 1e-12);
    }
    EXPECT_EQ(log_density_whitened(fixed, pf, whiten_rows(fixed, x)), rf);
}

TEST(Proposals, SampleCenterRowIsLocation)
{
    const Eigen::Vector2d mu(1.5, -0.5);
    Eigen::Matrix2d cov;
    cov << 1.0, 0.4, 0.4, 2.0;
    const UniformPointSet center2(SamplerKind::IID, 1, 2, 0, {0.5, 0.5});
    const UniformPointSet center3(SamplerKind::IID, 1, 3, 0, {0.5, 0.5, 0.3});
    const auto fixed = FamilySpec::gaussian_fixed_cov(cov);
    const auto mc = FamilySpec::gaussian_mean_cov(2);
    const auto t = FamilySpec::student_t(2, 2.0);
    EXPECT_EQ(Eigen::VectorXd(sample(fixed, ProposalParam::from_theta(fixed, mu), center2).row(0).transpose()),
              Eigen::VectorXd(mu));
    EXPECT_EQ(Eigen::VectorXd(sample(mc, ProposalParam::from_moments(mc, mu, cov), center2).row(0).transpose()),
              Eigen::VectorXd(mu));
    EXPECT_EQ(Eigen::VectorXd(sample(t, ProposalParam::from_moments(t, mu, cov), center3).row(0).transpose()),
              Eigen::VectorXd(mu));
    EXPECT_THROW(sample(t, ProposalParam::from_moments(t, mu, cov), center2), InvalidArgument);
}

TEST(Proposals, FixedCovSampleCovariance)
{
    Eigen::Matrix3d cov;
    cov << 3, 1, 1, 1, 3, 1, 1, 1, 3;
    const auto spec = FamilySpec::gaussian_fixed_cov(cov);
    const auto p = ProposalParam::from_theta(spec, Eigen::Vector3d::Zero());
    const auto ps = generate_sobol(14, 3, 21);
    const Eigen::MatrixXd x = sample(spec, p, ps);
    EXPECT_EQ(x, sample(spec, p, ps));
    const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd emp = c.transpose() * c / static_cast<double>(x.rows());
    EXPECT_LE((emp - cov).norm(), 0.05 * cov.norm());
}

TEST(Proposals, HStatisticExamples)
{
    const Eigen::Vector2d x(1.0, 2.0);
    EXPECT_EQ(HStatistic::identity(2)(x), Eigen::VectorXd(x));
    Eigen::VectorXd pilot(6);
    pilot << 1, 2, 1, 2, 2, 4;
    EXPECT_EQ(HStatistic::pilot(2)(x), pilot);
    Eigen::VectorXd centered(6);
    centered << 1, 2, 0, 0, 0, 0;
    EXPECT_EQ(HStatistic::centered(x)(x), centered);

    EXPECT_EQ(h_statistic(FamilySpec::gaussian_mean_cov(2), x, std::nullopt), pilot);
    EXPECT_EQ(h_statistic(FamilySpec::gaussian_mean_cov(2), x, Eigen::VectorXd(x)), centered);
    EXPECT_EQ(h_statistic(FamilySpec::gaussian_fixed_cov(Eigen::Matrix2d::Identity()), x, std::nullopt),
              Eigen::VectorXd(x));
}

TEST(Proposals, WeightedHRecoversMoments)
{
    // discrete target on four atoms with exact probabilities
    Eigen::MatrixXd atoms(4, 2);
    atoms << 0, 0, 1, 0, 0, 2, 3, 1;
    const Eigen::Vector4d p(0.1, 0.2, 0.3, 0.4);
    const Eigen::VectorXd mean = atoms.transpose() * p;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 4; ++i) {
        const Eigen::Vector2d c = atoms.row(i).transpose() - mean;
        cov += p[i] * c * c.transpose();
    }
    const HStatistic h = HStatistic::centered(mean);
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(6);
    for (int i = 0; i < 4; ++i) avg += p[i] * h(atoms.row(i).transpose());
    EXPECT_LE((avg.head(2) - mean).norm(), 1e-14);
    EXPECT_LE((avg.tail(4) - vec_row_major(cov)).norm(), 1e-14);
}

TEST(Proposals, VecLayoutIsRowMajorAndRoundTrips)
{
    Eigen::Matrix2d a;
    a << 1, 2, 3, 4;
    EXPECT_EQ(vec_row_major(a), Eigen::Vector4d(1, 2, 3, 4));
    EXPECT_EQ(unvec_row_major(vec_row_major(a), 2), Eigen::MatrixXd(a));

    const auto spec = FamilySpec::gaussian_mean_cov(2);
    Eigen::VectorXd theta(6);
    theta << 0.5, -0.5, 2.0, 0.3, 0.3, 1.0;
    const auto p = ProposalParam::from_theta(spec, theta);
    EXPECT_EQ(p.theta(), theta);
    EXPECT_FALSE(p.repaired());
    EXPECT_LE((p.cov() - unvec_row_major(theta.tail(4), 2)).norm(), 1e-14);
}

TEST(Proposals, SpdRepairExamples)
{
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    const SpdRepair r1 = spd_repair(eye);
    EXPECT_EQ(r1.matrix, eye);

    Eigen::Matrix2d bad;
    bad << 1.0, 0.0, 0.0, -0.5;
    const SpdRepair r2 = spd_repair(bad);
    EXPECT_NEAR(r2.matrix(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(r2.matrix(1, 1), 1e-8, 1e-20);
    EXPECT_NEAR(r2.matrix(0, 1), 0.0, 1e-15);

    // PSD with a zero eigenvalue
    Eigen::MatrixXd b(3, 2);
    b << 1, 2, -1, 0.5, 0.3, -0.7;
    const Eigen::MatrixXd psd = b * b.transpose();
    const SpdRepair r3 = spd_repair(psd);
    EXPECT_NEAR(min_eig(r3.matrix), 1e-8, 1e-12);
    EXPECT_LE((r3.chol_lower * r3.chol_lower.transpose() - r3.matrix).norm(), 1e-12);

    Eigen::Matrix2d nan = Eigen::Matrix2d::Identity();
    nan(0, 1) = NAN;
    EXPECT_THROW(spd_repair(nan), InvalidParameter);
}

TEST(Proposals, RepairedThetaRejectsNonFinite)
{
    const auto spec = FamilySpec::gaussian_mean_cov(2);
    Eigen::VectorXd theta(6);
    theta << NAN, 0, 1, 0, 0, 1;
    EXPECT_THROW(ProposalParam::from_theta(spec, theta), InvalidParameter);
    EXPECT_THROW(ProposalParam::from_theta(spec, Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(Proposals, LogDensityFiniteEverywhere)
{
    const auto g = FamilySpec::gaussian_mean_cov(2);
    const auto t = FamilySpec::student_t(2, 2.0);
    const auto pg = ProposalParam::from_moments(g, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity() * 1e-6);
    const auto pt = ProposalParam::from_moments(t, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity() * 1e-6);
    for (double s : {0.0, 1.0, 1e3, 1e8}) {
        EXPECT_TRUE(std::isfinite(log_density(g, pg, Eigen::Vector2d(s, -s))));
        EXPECT_TRUE(std::isfinite(log_density(t, pt, Eigen::Vector2d(s, -s))));
    }
}

TEST(Proposals, FamilyDimensions)
{
    EXPECT_EQ(FamilySpec::gaussian_fixed_cov(Eigen::Matrix3d::Identity()).param_dim(), 3u);
    EXPECT_EQ(FamilySpec::gaussian_mean_cov(3).param_dim(), 12u);
    EXPECT_EQ(FamilySpec::student_t(3, 2.0).uniform_dim(), 4u);
    EXPECT_EQ(FamilySpec::gaussian_mean_cov(3).uniform_dim(), 3u);
    EXPECT_THROW(FamilySpec::student_t(3, 0.0), InvalidArgument);
    Eigen::Matrix2d notspd;
    notspd << 1, 2, 2, 1;
    EXPECT_THROW(FamilySpec::gaussian_fixed_cov(notspd), SingularProposal);
}
