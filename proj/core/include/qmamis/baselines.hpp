#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include <Eigen/Core>

#include "qmamis/mamis.hpp"
#include "qmamis/pointgen.hpp"
#include "qmamis/proposals.hpp"
#include "qmamis/targets.hpp"

namespace qmamis {

struct ModeResult {
    Eigen::VectorXd mode;
    Eigen::MatrixXd neg_hessian;
    double value = 0.0;
    double gradient_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

using LogFn = std::function<double(const ConstVecRef&)>;

/// Central differences with step 1e-5 * (1 + |x_j|).
Eigen::VectorXd fd_gradient(const LogFn& f, const Eigen::VectorXd& x);
Eigen::MatrixXd fd_hessian(const LogFn& f, const Eigen::VectorXd& x);

/// Damped Newton ascent on log_f with finite-difference derivatives and
/// backtracking halving; at most 200 iterations, converged once the
/// gradient norm is at most 1e-6.
ModeResult find_mode(const LogFn& log_f, const Eigen::VectorXd& x0);

/// Inverse negative Hessian at the mode, SPD-repaired.
SpdRepair laplace_cov(const ModeResult& mode);

/// Best cell centre of a uniform grid over the box [lo, hi]^d (d <= 3).
Eigen::VectorXd grid_scan_argmax(const LogFn& log_f, std::size_t d, double lo, double hi,
                                 std::size_t cells_per_axis);

enum class BaselineVariant { ODIS, LapIS, LapIS_t };

std::string_view to_string(BaselineVariant v) noexcept;

struct BaselineOptions {
    Eigen::VectorXd start;                  ///< mode-search start; origin when empty
    std::optional<Eigen::MatrixXd> odis_cov; ///< ODIS covariance; identity when absent
    double nu = 2.0;                        ///< LapIS_t degrees of freedom
};

/// A fixed proposal built once per experiment.
struct BaselineProposal {
    FamilySpec spec;
    ProposalParam theta;
    ModeResult mode;
};

/// H = log(psi * pi~) for a positive scalar psi, else H = log pi~.
LogFn baseline_objective(const Target& target, const Integrand& psi);

BaselineProposal make_baseline_proposal(const Target& target, const Integrand& psi, BaselineVariant variant,
                                        const BaselineOptions& options = {});

/// Single-proposal IS with total_samples draws (power of two for RQMC);
/// self-normalized when the target is unnormalized.
Estimate run_is_baseline(const Target& target, const Integrand& psi, const BaselineProposal& proposal,
                         std::size_t total_samples, SamplerKind sampler, std::uint64_t seed);

Estimate run_is_baseline(const Target& target, const Integrand& psi, BaselineVariant variant,
                         std::size_t total_samples, SamplerKind sampler, std::uint64_t seed,
                         const BaselineOptions& options = {});

} // namespace qmamis
