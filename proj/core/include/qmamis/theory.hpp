#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "qmamis/pointgen.hpp"

namespace qmamis {

/// Radius of the smoothed projection; must exceed 1.
class ProjectionRadius {
public:
    explicit ProjectionRadius(double r);
    double value() const noexcept { return r_; }

private:
    double r_;
};

/// C^1 clamp onto [-R + 1/2, R - 1/2]: identity on [-R+1, R-1], quadratic
/// blends on the two unit-width shoulders, constant beyond +-R.
double smoothed_projection(double x, ProjectionRadius radius) noexcept;
Eigen::VectorXd smoothed_projection(const Eigen::Ref<const Eigen::VectorXd>& x, ProjectionRadius radius);

using ScalarFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// Plain estimator (1/n) sum_j f(Phi^{-1}(y_j)) over one point set.
double plain_estimate(const ScalarFn& f, const UniformPointSet& points);

/// ((1/reps) sum_r |I_n^(r)(f) - truth|^q)^(1/q) over independent point sets,
/// for f integrated against N(0, I_d).
double empirical_lq_error(const ScalarFn& f, std::size_t d, SamplerKind sampler, std::size_t n, double q,
                          std::size_t reps, double truth, std::uint64_t seed);

} // namespace qmamis
