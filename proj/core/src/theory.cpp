#include "qmamis/theory.hpp"

#include <cmath>
#include <string>

#include "qmamis/error.hpp"
#include "qmamis/seeding.hpp"
#include "qmamis/transforms.hpp"

namespace qmamis {

ProjectionRadius::ProjectionRadius(double r) : r_(r)
{
    QMAMIS_REQUIRE(r > 1.0 && std::isfinite(r), InvalidArgument,
                   "projection radius must exceed 1, got " + std::to_string(r));
}

double smoothed_projection(double x, ProjectionRadius radius) noexcept
{
    const double r = radius.value();
    if (x <= -r) return -r + 0.5;
    if (x < -r + 1.0) return 0.5 * x * x + r * x + 0.5 * (r - 1.0) * (r - 1.0);
    if (x <= r - 1.0) return x;
    if (x < r) return -0.5 * x * x + r * x - 0.5 * (r - 1.0) * (r - 1.0);
    return r - 0.5;
}

Eigen::VectorXd smoothed_projection(const Eigen::Ref<const Eigen::VectorXd>& x, ProjectionRadius radius)
{
    return x.unaryExpr([radius](double v) { return smoothed_projection(v, radius); });
}

double plain_estimate(const ScalarFn& f, const UniformPointSet& points)
{
    Eigen::VectorXd z(static_cast<Eigen::Index>(points.d()));
    double sum = 0.0;
    for (std::size_t i = 0; i < points.n(); ++i) {
        for (std::size_t j = 0; j < points.d(); ++j) z[static_cast<Eigen::Index>(j)] = inv_norm_cdf(points(i, j));
        sum += f(z);
    }
    return sum / static_cast<double>(points.n());
}

double empirical_lq_error(const ScalarFn& f, std::size_t d, SamplerKind sampler, std::size_t n, double q,
                          std::size_t reps, double truth, std::uint64_t seed)
{
    QMAMIS_REQUIRE(q >= 1.0, InvalidArgument, "moment order q must be at least 1");
    QMAMIS_REQUIRE(reps >= 1 && n >= 1 && d >= 1, InvalidArgument, "empirical_lq_error: empty budget");
    double acc = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        const UniformPointSet points = generate_points(sampler, n, d, derive_seed(seed, r));
        acc += std::pow(std::abs(plain_estimate(f, points) - truth), q);
    }
    return std::pow(acc / static_cast<double>(reps), 1.0 / q);
}

} // namespace qmamis
