#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmamis/pointgen.hpp"
#include "qmamis/proposals.hpp"
#include "qmamis/targets.hpp"

namespace qmamis {

/// Unnormalized weights need a normalized target; self-normalized weights
/// divide by their per-stage sum and work for any pi~.
enum class WeightMode { Unnormalized, SelfNormalized };

/// One adaptation stage: N_t draws from Q(theta_t) and their log weights.
struct StageRecord {
    std::size_t t = 0;
    ProposalParam theta;
    Eigen::MatrixXd samples;           ///< N_t x d
    Eigen::VectorXd log_target;        ///< log pi~(X_i)
    Eigen::VectorXd stage_log_weights; ///< log pi~(X_i) - log q(X_i, theta_t)
    std::uint64_t point_seed = 0;
    bool update_fallback = false; ///< the update after this stage kept theta_t

    std::size_t size() const noexcept { return static_cast<std::size_t>(samples.rows()); }
};

struct Trace {
    FamilySpec spec;
    std::vector<StageRecord> stages{};
    std::vector<std::size_t> schedule{};
    SamplerKind sampler = SamplerKind::ScrambledSobol;
    WeightMode mode = WeightMode::Unnormalized;
    /// theta_{T+1}, the parameter the final update produced.
    std::optional<ProposalParam> next_theta{};
    /// Per-stage recycled log weights; empty until recycle_weights ran.
    std::vector<Eigen::VectorXd> recycled_log_weights{};
    std::size_t omega_T = 0;

    bool recycled() const noexcept { return !recycled_log_weights.empty(); }
    std::size_t fallback_count() const noexcept;
};

struct Estimate {
    Eigen::VectorXd value;
    std::string method;
    std::size_t T = 0;
    std::vector<std::size_t> schedule;
    double mean_budget = 0.0; ///< Omega_T / T

    bool finite() const noexcept { return value.allFinite(); }
};

/// Draws N_t points (power of two for RQMC) from `point_seed`, transports
/// them through Q(theta_t) and stores log pi~ - log q.
StageRecord run_stage(const Target& target, const FamilySpec& spec, const ProposalParam& theta_t,
                      std::size_t n_t, SamplerKind sampler, std::uint64_t point_seed,
                      std::size_t t = 1);

struct ParameterUpdate {
    ProposalParam theta;
    bool fallback = false; ///< true when the previous theta was kept
};

/// theta_{t+1} = N_t^{-1} sum w_i h(X_i) (unnormalized) or
/// sum (w_i / sum w) h(X_i) (self-normalized). A non-finite or irreparable
/// result keeps the stage's theta and sets `fallback`.
ParameterUpdate parameter_update(const StageRecord& record, const FamilySpec& spec,
                                 const HStatistic& h, WeightMode mode);

/// Modified AMIS with unnormalized weights. Requires target.normalized().
Trace run_mamis(const Target& target, const FamilySpec& spec, const ProposalParam& theta_1,
                const std::vector<std::size_t>& schedule, SamplerKind sampler, const HStatistic& h,
                std::uint64_t master_seed);

/// Self-normalized MAMIS; the target may be unnormalized.
Trace run_self_normalized_mamis(const Target& target, const FamilySpec& spec,
                                const ProposalParam& theta_1, const std::vector<std::size_t>& schedule,
                                SamplerKind sampler, const HStatistic& h, std::uint64_t master_seed);

/// Reweights every sample against the mixture Omega_T^{-1} sum_l N_l q(., theta_l).
/// The mixture terms are summed in an order fixed by (theta_l, N_l), so the
/// result does not depend on the order of the stages.
Trace recycle_weights(Trace trace);

/// Recycled estimator of E_pi[psi] for the trace's weight mode.
Estimate mamis_estimate(const Trace& trace, const Integrand& psi);

/// Omega_T^{-1} sum_t sum_i pi(X)/q(X, theta*) psi(X) for a known theta*.
Estimate auxiliary_estimate(const Trace& trace, const ProposalParam& theta_star, const Integrand& psi);

/// Per-stage self-normalized weights exp(lw - logsumexp(lw)).
Eigen::VectorXd normalized_weights(const Eigen::VectorXd& log_weights);

struct PilotResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov; ///< averaged final covariance block of the pilot runs
};

/// Runs `reps` independent self-normalized MAMIS pilots with h(x) = (x, vec(x x^T)),
/// starting from (0, vec(I)), and averages their final mean and covariance blocks.
PilotResult pilot_mean(const Target& target, const FamilySpec& spec, std::size_t stages,
                       std::size_t points_per_stage, std::size_t reps, SamplerKind sampler,
                       std::uint64_t seed);

/// CSV dump: stage,sample_index,x1..xd,stage_log_weight,recycled_log_weight.
void write_trace_csv(std::ostream& os, const Trace& trace);

} // namespace qmamis
