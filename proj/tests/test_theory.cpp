#include <gtest/gtest.h>

#include <cmath>

#include "qmamis/error.hpp"
#include "qmamis/harness.hpp"
#include "qmamis/theory.hpp"

using namespace qmamis;

TEST(SmoothedProjection, Examples)
{
    const ProjectionRadius r(3.0);
    EXPECT_EQ(smoothed_projection(0.0, r), 0.0);
    EXPECT_EQ(smoothed_projection(10.0, r), 2.5);
    EXPECT_EQ(smoothed_projection(-10.0, r), -2.5);
    EXPECT_EQ(smoothed_projection(3.0, r), 2.5);
    EXPECT_EQ(smoothed_projection(2.0, r), 2.0);
    EXPECT_DOUBLE_EQ(smoothed_projection(2.5, r), -0.5 * 6.25 + 7.5 - 2.0);
}

TEST(SmoothedProjection, RadiusMustExceedOne)
{
    EXPECT_THROW(ProjectionRadius(1.0), InvalidArgument);
    EXPECT_THROW(ProjectionRadius(0.5), InvalidArgument);
    EXPECT_THROW(ProjectionRadius(NAN), InvalidArgument);
    EXPECT_NO_THROW(ProjectionRadius(1.0000001));
}

TEST(SmoothedProjection, BoundOddMonotoneCore)
{
    for (double rv : {1.5, 2.0, 3.0, 2.0 + std::sqrt(2.0), 10.0}) {
        const ProjectionRadius r(rv);
        double prev = -INFINITY;
        for (int i = -4000; i <= 4000; ++i) {
            const double x = i * (rv + 2.0) / 4000.0;
            const double p = smoothed_projection(x, r);
            EXPECT_LE(std::abs(p), rv - 0.5);
            EXPECT_EQ(smoothed_projection(-x, r), -p);
            EXPECT_GE(p, prev);
            prev = p;
            if (std::abs(x) <= rv - 1.0) EXPECT_EQ(p, x);
        }
    }
}

TEST(SmoothedProjection, ContinuouslyDifferentiableAtKnots)
{
    const double h = 1e-6;
    for (double rv : {1.5, 3.0, 7.25}) {
        const ProjectionRadius r(rv);
        auto f = [&](double x) { return smoothed_projection(x, r); };
        for (double k : {-rv, -rv + 1.0, rv - 1.0, rv}) {
            EXPECT_NEAR(f(k - h), f(k + h), 1e-5);
            // one-sided central differences just left and right of the knot
            const double left = (f(k - h) - f(k - 3 * h)) / (2 * h);
            const double right = (f(k + 3 * h) - f(k + h)) / (2 * h);
            EXPECT_NEAR(left, right, 1e-4) << "R=" << rv << " knot=" << k;
        }
    }
}

TEST(SmoothedProjection, Componentwise)
{
    const ProjectionRadius r(3.0);
    const Eigen::Vector3d x(-10.0, 0.25, 2.5);
    const Eigen::VectorXd p = smoothed_projection(x, r);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(p[j], smoothed_projection(x[j], r));
}

TEST(LqError, LinearIntegrandImprovesWithBudget)
{
    const ScalarFn f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x[0]; };
    const double small = empirical_lq_error(f, 1, SamplerKind::ScrambledSobol, 256, 2.0, 30, 0.0, 1);
    const double large = empirical_lq_error(f, 1, SamplerKind::ScrambledSobol, 4096, 2.0, 30, 0.0, 1);
    EXPECT_LT(large, small);
    EXPECT_THROW(empirical_lq_error(f, 1, SamplerKind::IID, 16, 0.5, 2, 0.0, 1), InvalidArgument);
}

TEST(LqError, RatesForSquaredCoordinate)
{
    const ScalarFn f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x[0] * x[0]; };
    std::vector<double> ns, rq, mc;
    for (std::size_t n = 64; n <= 8192; n *= 2) {
        ns.push_back(static_cast<double>(n));
        rq.push_back(empirical_lq_error(f, 2, SamplerKind::ScrambledSobol, n, 2.0, 50, 1.0, 3));
        mc.push_back(empirical_lq_error(f, 2, SamplerKind::IID, n, 2.0, 50, 1.0, 3));
    }
    EXPECT_LE(fit_loglog_slope(ns, rq).slope, -0.9);
    const double s = fit_loglog_slope(ns, mc).slope;
    EXPECT_GE(s, -0.65);
    EXPECT_LE(s, -0.35);
}

TEST(LqError, HigherMomentIsLarger)
{
    const ScalarFn f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x[0] * x[0]; };
    const double e2 = empirical_lq_error(f, 2, SamplerKind::IID, 128, 2.0, 40, 1.0, 5);
    const double e4 = empirical_lq_error(f, 2, SamplerKind::IID, 128, 4.0, 40, 1.0, 5);
    EXPECT_GE(e4, e2); // power-mean inequality on the same reps
}
