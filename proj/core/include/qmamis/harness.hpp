#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qmamis/pointgen.hpp"
#include "qmamis/proposals.hpp"
#include "qmamis/targets.hpp"

namespace qmamis {

/// Everything `qmamis run --config` accepts. Defaults are the desk-scale
/// protocol (T=16, J=20, budgets 2^8..2^13).
struct ExperimentConfig {
    std::string experiment = "toy_gmm"; ///< toy_gmm, five_mixture, banana, logistic, lq_rates
    SamplerKind sampler = SamplerKind::ScrambledSobol;
    std::string method = "mamis"; ///< mamis, sn_mamis, odis, lapis, lapis_t
    std::size_t stages = 16;      ///< T
    std::vector<std::size_t> budgets = {256, 512, 1024, 2048, 4096, 8192};
    std::size_t reps = 20; ///< J
    std::uint64_t seed = 1;
    std::string family; ///< empty: the experiment's default family
    double nu = 2.0;
    std::size_t dim = 20; ///< toy_gmm dimension

    std::filesystem::path pima_path = "data/pima_first30.csv";
    std::filesystem::path output_dir; ///< empty: $QMAMIS_OUTPUT_DIR, else "."
    std::string output_name;          ///< empty: <experiment>_<method>_<sampler>.csv

    std::size_t truth_budget = std::size_t{1} << 15; ///< logistic self-oracle N per stage
    std::size_t truth_stages = 32;

    std::size_t pilot_stages = 32;
    std::size_t pilot_points = 16;
    std::size_t pilot_reps = 10;
    SamplerKind pilot_sampler = SamplerKind::ScrambledSobol;

    double q = 2.0;         ///< lq_rates moment order, capped at 8
    std::size_t lq_dim = 2; ///< lq_rates dimension

    double eta1 = 3.0;
    double eta2 = 2.0;
    double banana_b = 10.0;

    std::size_t threads = 0; ///< 0: hardware concurrency

    /// Throws InvalidArgument describing the first violated constraint.
    void validate() const;
};

std::vector<std::string> experiment_names();
std::vector<std::string> method_names();

/// Flat key=value text; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

struct Truth {
    Eigen::VectorXd value;
    std::string provenance; ///< analytic, quadrature or self-oracle
    std::string note;
};

/// Target, integrand, proposal family and start shared by all series of one
/// experiment. Pilot runs (if any) happen once here.
struct ExperimentContext {
    std::string experiment;
    std::optional<Target> target;
    std::optional<Integrand> psi;
    std::optional<FamilySpec> family;
    ProposalParam theta_1;
    std::optional<HStatistic> h;
    Truth truth;
    Eigen::MatrixXd odis_cov; ///< empty: identity
    Eigen::VectorXd mode_start;
};

ExperimentContext prepare_experiment(const ExperimentConfig& config);
Truth compute_truth(const ExperimentConfig& config);

struct BudgetResult {
    std::size_t budget = 0;
    std::vector<Eigen::VectorXd> estimates;
    double rmse = 0.0;
    std::optional<std::string> failure;
};

struct SeriesResult {
    std::string method;
    SamplerKind sampler = SamplerKind::ScrambledSobol;
    std::size_t stages = 0;
    std::vector<BudgetResult> budgets;
    double slope = 0.0; ///< NaN when fewer than three budgets succeeded
    double intercept = 0.0;

    std::vector<double> rmses() const;
};

struct ExperimentResult {
    std::string experiment;
    Truth truth;
    std::vector<SeriesResult> series;
};

/// sqrt((1/J) sum_r |est_r - truth|_2^2).
double rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth);

struct SlopeFit {
    double slope;
    double intercept;
};

/// OLS of ln(rmse) on ln(budget); needs at least three positive pairs.
SlopeFit fit_loglog_slope(const std::vector<double>& budgets, const std::vector<double>& rmses);

SeriesResult run_series(const ExperimentContext& context, const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

void write_csv(const ExperimentResult& result, std::ostream& os);
void write_csv(const ExperimentResult& result, const std::filesystem::path& path);

/// Resolved CSV destination for a config.
std::filesystem::path output_path(const ExperimentConfig& config);

} // namespace qmamis
