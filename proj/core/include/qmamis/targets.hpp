#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qmamis {

using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;

/// A target density pi on R^d, possibly known only up to a constant.
class Target {
public:
    using LogDensityFn = std::function<double(const ConstVecRef&)>;

    Target(std::string name, std::size_t dim, LogDensityFn log_density, bool normalized,
           std::map<std::string, Eigen::VectorXd> ground_truth = {});

    const std::string& name() const noexcept { return name_; }
    std::size_t dim() const noexcept { return dim_; }
    bool normalized() const noexcept { return normalized_; }

    double log_density(const ConstVecRef& x) const { return log_density_(x); }
    /// log pi for every row of an N x d sample matrix.
    Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& samples) const;

    /// Analytic E_pi[psi] keyed by integrand name, when known.
    std::optional<Eigen::VectorXd> ground_truth(const std::string& integrand) const;
    const std::map<std::string, Eigen::VectorXd>& ground_truths() const noexcept { return truth_; }

    /// Same density multiplied by exp(log_factor); always marked unnormalized.
    Target rescaled(double log_factor) const;

private:
    std::string name_;
    std::size_t dim_;
    LogDensityFn log_density_;
    bool normalized_;
    std::map<std::string, Eigen::VectorXd> truth_;
};

/// A function of interest psi: R^d -> R^k.
class Integrand {
public:
    using Fn = std::function<Eigen::VectorXd(const ConstVecRef&)>;

    /// output_dim == 0 means "same as the input dimension".
    Integrand(std::string name, std::size_t output_dim, Fn fn)
        : name_(std::move(name)), output_dim_(output_dim), fn_(std::move(fn)) {}

    static Integrand constant(double c);

    const std::string& name() const noexcept { return name_; }
    std::size_t output_dim(std::size_t input_dim) const noexcept
    {
        return output_dim_ == 0 ? input_dim : output_dim_;
    }
    Eigen::VectorXd operator()(const ConstVecRef& x) const { return fn_(x); }

private:
    std::string name_;
    std::size_t output_dim_;
    Fn fn_;
};

/// first_coord_squared, identity or squared_norm.
Integrand integrand_registry(const std::string& name);
std::vector<std::string> integrand_names();

/// Equal-weight mixture of N(1, S), N(0, S), N(-1, S) in R^d, where S has
/// d on the diagonal and 1 elsewhere.
Target make_shared_cov_gmm(std::size_t d);
Eigen::MatrixXd shared_cov_gmm_covariance(std::size_t d);

/// The 2-D mixture of five normals with covariances scaled by 1/40^2.
Target make_five_mixture();
/// Mean as printed alongside the experiment, (2.16, 2.14); the exact
/// mixture mean of the listed components is (2.16, 2.18).
Eigen::Vector2d five_mixture_stated_mean();

struct FiveMixtureComponent {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};
std::vector<FiveMixtureComponent> five_mixture_components();

/// log pi~(x) = -(4 - b x1 - x2^2)^2 / (2 eta1^2) - x2^2 / (2 eta2^2).
Target make_banana(double eta1, double eta2, double b);

/// Brute-force 2-D trapezoid mean of the banana density. The x1 grid of each
/// x2 row is centred on the ridge (4 - x2^2)/b.
Eigen::Vector2d banana_quadrature_mean(double eta1, double eta2, double b,
                                       std::size_t nodes_per_axis = 2001);

/// Logistic-regression design: 30 rows, intercept column followed by the
/// eight standardized pima features.
struct PimaDesign {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    std::vector<std::string> columns;
};

inline constexpr std::size_t kPimaRows = 30;

/// Reads a pima CSV (8 feature columns then a 0/1 outcome, optional header),
/// keeps the first 30 rows, standardizes each feature over those rows
/// (population variance) and prepends an intercept.
PimaDesign load_pima(const std::filesystem::path& path);

/// Posterior under N(0, I) prior: -|z|^2/2 + sum_i [y_i x_i'z - log(1 + exp(x_i'z))].
Target make_logistic_posterior(const PimaDesign& design);
Eigen::VectorXd logistic_log_posterior_gradient(const PimaDesign& design, const ConstVecRef& z);

/// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) noexcept;

/// log(sum exp(v)) with the max factored out; -inf for an empty or all -inf input.
double log_sum_exp(const ConstVecRef& v) noexcept;

} // namespace qmamis
