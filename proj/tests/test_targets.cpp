#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "qmamis/baselines.hpp"
#include "qmamis/error.hpp"
#include "qmamis/pointgen.hpp"
#include "qmamis/targets.hpp"

using namespace qmamis;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body)
{
    const auto p = std::filesystem::temp_directory_path() / ("qmamis_test_" + name);
    std::ofstream(p) << body;
    return p;
}

std::string pima_body(std::size_t rows, bool header)
{
    std::ifstream in(QMAMIS_PIMA_CSV);
    std::string line, out;
    std::getline(in, line);
    if (header) out += line + "\n";
    for (std::size_t i = 0; i < rows && std::getline(in, line); ++i) out += line + "\n";
    return out;
}

} // namespace

TEST(SharedCovGmm, TruthAndSymmetry)
{
    const Target t = make_shared_cov_gmm(20);
    EXPECT_TRUE(t.normalized());
    EXPECT_DOUBLE_EQ((*t.ground_truth("first_coord_squared"))[0], 20.0 + 2.0 / 3.0);
    EXPECT_EQ(*t.ground_truth("identity"), Eigen::VectorXd::Zero(20));
    const auto ps = generate_iid(50, 20, 4);
    for (std::size_t i = 0; i < ps.n(); ++i) {
        Eigen::VectorXd x(20);
        for (int j = 0; j < 20; ++j) x[j] = 10.0 * (ps(i, static_cast<std::size_t>(j)) - 0.5);
        EXPECT_NEAR(t.log_density(x), t.log_density(-x), 1e-12);
    }
    EXPECT_THROW(make_shared_cov_gmm(1), InvalidArgument);
}

TEST(SharedCovGmm, MatchesDirectMixtureFormula)
{
    const std::size_t d = 3;
    const Target t = make_shared_cov_gmm(d);
    const Eigen::MatrixXd s = shared_cov_gmm_covariance(d);
    const Eigen::MatrixXd si = s.inverse();
    const double norm = std::pow(2.0 * std::numbers::pi, -1.5) / std::sqrt(s.determinant());
    const Eigen::Vector3d x(0.3, -1.2, 2.0);
    double p = 0.0;
    for (double m : {1.0, 0.0, -1.0}) {
        const Eigen::Vector3d c = x - Eigen::Vector3d::Constant(m);
        p += norm * std::exp(-0.5 * c.dot(si * c)) / 3.0;
    }
    EXPECT_NEAR(t.log_density(x), std::log(p), 1e-12);
}

TEST(SharedCovGmm, IntegratesToOneIn2D)
{
    const Target t = make_shared_cov_gmm(2);
    const int n = 801;
    const double lo = -14.0, hi = 14.0, h = (hi - lo) / (n - 1);
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sum += std::exp(t.log_density(Eigen::Vector2d(lo + i * h, lo + j * h)));
    EXPECT_NEAR(sum * h * h, 1.0, 1e-3);
}

TEST(FiveMixture, Means)
{
    const Target t = make_five_mixture();
    EXPECT_FALSE(t.ground_truth("identity")->hasNaN());
    const auto comps = five_mixture_components();
    ASSERT_EQ(comps.size(), 5u);
    Eigen::Vector2d avg = Eigen::Vector2d::Zero();
    for (const auto& c : comps) avg += c.mean / 5.0;
    // arithmetic over the listed component means
    EXPECT_NEAR(avg[0], 2.16, 1e-12);
    EXPECT_NEAR(avg[1], 2.18, 1e-12);
    EXPECT_LE((*t.ground_truth("identity") - avg).norm(), 1e-12);
    EXPECT_EQ(five_mixture_stated_mean(), Eigen::Vector2d(2.16, 2.14));
    EXPECT_NEAR(comps[0].cov(0, 1), 0.6 / 1600.0, 1e-18);
    EXPECT_NEAR(comps[3].cov(1, 1), 0.5 / 1600.0, 1e-18);
}

TEST(FiveMixture, DensityLowerBound)
{
    const Target t = make_five_mixture();
    const auto c = five_mixture_components()[0];
    const double own = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(c.cov.determinant());
    EXPECT_GE(t.log_density(c.mean), std::log(0.2) + own - 1e-12);
}

TEST(Banana, DensityShape)
{
    const Target t = make_banana(3.0, 2.0, 10.0);
    EXPECT_FALSE(t.normalized());
    EXPECT_EQ(*t.ground_truth("identity"), Eigen::VectorXd::Zero(2));
    EXPECT_EQ(t.log_density(Eigen::Vector2d(0.4, 0.0)), 0.0);
    for (double x1 : {-2.0, 0.1, 0.4, 3.0})
        for (double x2 : {0.3, 1.7, 5.0}) {
            EXPECT_EQ(t.log_density(Eigen::Vector2d(x1, x2)), t.log_density(Eigen::Vector2d(x1, -x2)));
            EXPECT_LE(t.log_density(Eigen::Vector2d(x1, x2)), 0.0);
        }
    EXPECT_THROW(make_banana(0.0, 2.0, 10.0), InvalidArgument);
}

TEST(Banana, QuadratureMean)
{
    // Conditional on x2 the density is Gaussian in x1 with mean (4 - x2^2)/b, so
    // E[x1] = (4 - E[x2^2]) / b = 0 for eta2 = 2; an adaptive 1-D quadrature of that
    // identity gives -2.5e-17.
    const Eigen::Vector2d m = banana_quadrature_mean(3.0, 2.0, 10.0);
    EXPECT_NEAR(m[0], 0.0, 1e-6);
    EXPECT_NEAR(m[1], 0.0, 1e-12);
    // another parameter set: E[x1] = (4 - eta2^2) / b
    const Eigen::Vector2d m2 = banana_quadrature_mean(1.0, 1.5, 4.0);
    EXPECT_NEAR(m2[0], (4.0 - 2.25) / 4.0, 1e-6);
}

TEST(Pima, LoadsAndStandardizes)
{
    const PimaDesign d = load_pima(QMAMIS_PIMA_CSV);
    ASSERT_EQ(d.X.rows(), 30);
    ASSERT_EQ(d.X.cols(), 9);
    ASSERT_EQ(d.Y.size(), 30);
    EXPECT_TRUE((d.X.col(0).array() == 1.0).all());
    for (Eigen::Index j = 1; j < 9; ++j) {
        const double mean = d.X.col(j).mean();
        const double var = (d.X.col(j).array() - mean).square().mean();
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(var, 1.0, 1e-12);
    }
    EXPECT_TRUE(((d.Y.array() == 0.0) || (d.Y.array() == 1.0)).all());
    EXPECT_EQ(d.Y.sum(), 18.0);
    EXPECT_EQ(d.columns.size(), 9u);
}

TEST(Pima, HeaderlessFileGivesSameDesign)
{
    const auto with = load_pima(QMAMIS_PIMA_CSV);
    const auto without = load_pima(temp_file("noheader.csv", pima_body(30, false)));
    EXPECT_EQ(with.X, without.X);
    EXPECT_EQ(with.Y, without.Y);
}

TEST(Pima, IngestionErrors)
{
    EXPECT_THROW(load_pima("/nonexistent/pima.csv"), IngestionError);
    EXPECT_THROW(load_pima(temp_file("short.csv", pima_body(10, true))), IngestionError);

    std::string body = pima_body(30, true);
    body.replace(body.find("\n") + 1, 1, "z");
    EXPECT_THROW(load_pima(temp_file("malformed.csv", body)), IngestionError);

    // constant insulin column
    std::string flat = "a,b,c,d,insulin,f,g,h,y\n";
    for (int i = 0; i < 30; ++i)
        flat += std::to_string(i) + "," + std::to_string(i * 2 % 7) + "," + std::to_string(i % 4) + "," + std::to_string(i % 5) + ",0," +
                std::to_string(i % 3) + ",0." + std::to_string(i % 9) + "," + std::to_string(20 + i) + "," +
                std::to_string(i % 2) + "\n";
    try {
        load_pima(temp_file("flat.csv", flat));
        FAIL() << "expected IngestionError";
    } catch (const IngestionError& e) {
        EXPECT_NE(std::string(e.what()).find("insulin"), std::string::npos) << e.what();
    }
}

TEST(Logistic, ValueAtZeroAndStableTerms)
{
    const PimaDesign d = load_pima(QMAMIS_PIMA_CSV);
    const Target t = make_logistic_posterior(d);
    EXPECT_FALSE(t.normalized());
    EXPECT_NEAR(t.log_density(Eigen::VectorXd::Zero(9)), -30.0 * std::log(2.0), 1e-12);
    EXPECT_NEAR(-20.794415, -30.0 * std::log(2.0), 1e-6);
    // Y*eta - log(1+e^eta) at eta = 700, Y = 1
    EXPECT_NEAR(700.0 - log1p_exp(700.0), 0.0, 1e-12);
    EXPECT_TRUE(std::isfinite(log1p_exp(1e6)));
    EXPECT_NEAR(log1p_exp(-800.0), 0.0, 1e-300);
    EXPECT_TRUE(std::isfinite(t.log_density(Eigen::VectorXd::Constant(9, 300.0))));
}

TEST(Logistic, GradientAtZeroAndFiniteDifferences)
{
    const PimaDesign d = load_pima(QMAMIS_PIMA_CSV);
    const Target t = make_logistic_posterior(d);
    const Eigen::VectorXd g0 = logistic_log_posterior_gradient(d, Eigen::VectorXd::Zero(9));
    const Eigen::VectorXd expected = d.X.transpose() * (d.Y.array() - 0.5).matrix();
    EXPECT_LE((g0 - expected).norm(), 1e-12);

    const LogFn f = [&t](const ConstVecRef& z) { return t.log_density(z); };
    const auto ps = generate_iid(20, 9, 8);
    for (std::size_t i = 0; i < ps.n(); ++i) {
        Eigen::VectorXd z(9);
        for (int j = 0; j < 9; ++j) z[j] = 4.0 * (ps(i, static_cast<std::size_t>(j)) - 0.5);
        const Eigen::VectorXd ga = logistic_log_posterior_gradient(d, z);
        const Eigen::VectorXd gf = fd_gradient(f, z);
        EXPECT_LE((ga - gf).norm(), 1e-5 * std::max(1.0, ga.norm()));
    }
}

TEST(Targets, FiniteOnWideCloud)
{
    const PimaDesign design = load_pima(QMAMIS_PIMA_CSV);
    const std::vector<std::pair<Target, double>> cases = {
        {make_shared_cov_gmm(5), 10.0 * std::sqrt(5.0)},
        {make_five_mixture(), 10.0},
        {make_banana(3.0, 2.0, 10.0), 20.0},
        {make_logistic_posterior(design), 10.0},
    };
    for (const auto& [t, half] : cases) {
        const auto ps = generate_iid(10000, t.dim(), 5);
        Eigen::MatrixXd x(static_cast<Eigen::Index>(ps.n()), static_cast<Eigen::Index>(t.dim()));
        for (std::size_t i = 0; i < ps.n(); ++i)
            for (std::size_t j = 0; j < t.dim(); ++j)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * half * (ps(i, j) - 0.5);
        EXPECT_TRUE(t.log_density_rows(x).allFinite()) << t.name();
    }
}

TEST(Targets, RescaledShiftsLogDensity)
{
    const Target t = make_shared_cov_gmm(3);
    const Target s = t.rescaled(std::log(1000.0));
    EXPECT_FALSE(s.normalized());
    const Eigen::Vector3d x(0.1, 0.2, 0.3);
    EXPECT_NEAR(s.log_density(x) - t.log_density(x), std::log(1000.0), 1e-12);
}

TEST(Integrands, Registry)
{
    const Eigen::Vector2d x(3.0, 4.0);
    EXPECT_EQ(integrand_registry("first_coord_squared")(x)[0], 9.0);
    EXPECT_EQ(integrand_registry("identity")(x), Eigen::VectorXd(x));
    EXPECT_EQ(integrand_registry("squared_norm")(x)[0], 25.0);
    EXPECT_EQ(integrand_registry("identity").output_dim(7), 7u);
    EXPECT_EQ(Integrand::constant(2.5)(x)[0], 2.5);
    EXPECT_THROW(integrand_registry("cube"), InvalidArgument);
}

TEST(Targets, LogSumExp)
{
    EXPECT_NEAR(log_sum_exp(Eigen::Vector3d(1000.0, 1000.0, -INFINITY)), 1000.0 + std::log(2.0), 1e-12);
    EXPECT_EQ(log_sum_exp(Eigen::Vector2d(-INFINITY, -INFINITY)), -INFINITY);
}
