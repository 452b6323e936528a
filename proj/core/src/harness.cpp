#include "qmamis/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "qmamis/baselines.hpp"
#include "qmamis/error.hpp"
#include "qmamis/mamis.hpp"
#include "qmamis/seeding.hpp"
#include "qmamis/theory.hpp"

namespace qmamis {

namespace {

constexpr std::uint64_t kPilotStream = 0x70696c6f74ULL; // "pilot"
constexpr std::uint64_t kTruthStream = 0x7472757468ULL; // "truth"
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index owns its
// output slot, so the caller's reduction order stays fixed.
template <class Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body)
{
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) body(i);
        });
}

FamilySpec mean_cov_family(const ExperimentConfig& c, std::size_t d, const char* fallback)
{
    const std::string family = c.family.empty() ? fallback : c.family;
    if (family == "gaussian_mean_cov") return FamilySpec::gaussian_mean_cov(d);
    if (family == "student_t") return FamilySpec::student_t(d, c.nu);
    throw InvalidArgument("experiment '" + c.experiment + "' adapts the covariance; family '" + family +
                          "' is not supported");
}

// Pilot-initialized start: theta_1 = (mu_hat, cov_init), h centred at mu_hat.
void pilot_start(ExperimentContext& ctx, const ExperimentConfig& c, bool use_pilot_cov)
{
    const PilotResult pilot = pilot_mean(*ctx.target, *ctx.family, c.pilot_stages, c.pilot_points, c.pilot_reps,
                                         c.pilot_sampler, derive_seed(c.seed, kPilotStream));
    const auto d = static_cast<Eigen::Index>(ctx.family->dim());
    const Eigen::MatrixXd cov = use_pilot_cov ? pilot.cov : Eigen::MatrixXd::Identity(d, d);
    ctx.theta_1 = ProposalParam::from_moments(*ctx.family, pilot.mean, cov);
    ctx.h = HStatistic::centered(pilot.mean);
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<double> SeriesResult::rmses() const
{
    std::vector<double> out;
    for (const auto& b : budgets) out.push_back(b.rmse);
    return out;
}

double rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth)
{
    QMAMIS_REQUIRE(!estimates.empty(), InvalidArgument, "rmse: no estimates");
    double acc = 0.0;
    for (const auto& e : estimates) {
        QMAMIS_REQUIRE(e.size() == truth.size(), InvalidArgument,
                       "rmse: estimate has " + std::to_string(e.size()) + " components, truth has " +
                           std::to_string(truth.size()));
        acc += (e - truth).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

SlopeFit fit_loglog_slope(const std::vector<double>& budgets, const std::vector<double>& rmses)
{
    QMAMIS_REQUIRE(budgets.size() == rmses.size(), InvalidArgument, "slope fit: length mismatch");
    if (budgets.size() < 3) throw FitError("slope fit needs at least three points");
    const auto n = static_cast<double>(budgets.size());
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (!(budgets[i] > 0.0) || !(rmses[i] > 0.0) || !std::isfinite(rmses[i]))
            throw FitError("slope fit needs positive finite budgets and RMSEs");
        // log2 keeps power-of-two budget rescalings exact, so the slope is unchanged bit for bit
        xs.push_back(std::log2(budgets[i]));
        ys.push_back(std::log(rmses[i]));
        sx += xs.back();
        sy += ys.back();
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("slope fit needs at least two distinct budgets");
    const double slope = sxy / sxx / std::numbers::ln2;
    return {slope, my - slope * mx * std::numbers::ln2};
}

ExperimentContext prepare_experiment(const ExperimentConfig& c)
{
    c.validate();
    ExperimentContext ctx;
    ctx.experiment = c.experiment;

    if (c.experiment == "toy_gmm") {
        QMAMIS_REQUIRE(c.family.empty() || c.family == "gaussian_fixed_cov", InvalidArgument,
                       "toy_gmm uses the fixed-covariance Gaussian family");
        const auto d = static_cast<Eigen::Index>(c.dim);
        ctx.target = make_shared_cov_gmm(c.dim);
        ctx.psi = integrand_registry("first_coord_squared");
        const Eigen::MatrixXd sigma = shared_cov_gmm_covariance(c.dim);
        ctx.family = FamilySpec::gaussian_fixed_cov(sigma);
        ctx.theta_1 = ProposalParam::from_theta(*ctx.family, Eigen::VectorXd::Constant(d, 0.1));
        ctx.h = HStatistic::identity(c.dim);
        ctx.truth = {*ctx.target->ground_truth("first_coord_squared"), "analytic", "d + 2/3"};
        ctx.odis_cov = sigma;
        ctx.mode_start = Eigen::VectorXd::Constant(d, 0.1);
    } else if (c.experiment == "five_mixture") {
        ctx.target = make_five_mixture();
        ctx.psi = integrand_registry("identity");
        ctx.family = mean_cov_family(c, 2, "gaussian_mean_cov");
        pilot_start(ctx, c, false);
        const Eigen::Vector2d stated = five_mixture_stated_mean();
        ctx.truth = {*ctx.target->ground_truth("identity"), "analytic",
                     "exact mixture mean; stated value (" + format_double(stated[0]) + ", " +
                         format_double(stated[1]) + ")"};
        ctx.mode_start = Eigen::VectorXd::Zero(2);
    } else if (c.experiment == "banana") {
        ctx.target = make_banana(c.eta1, c.eta2, c.banana_b);
        ctx.psi = integrand_registry("identity");
        ctx.family = mean_cov_family(c, 2, "gaussian_mean_cov");
        pilot_start(ctx, c, false);
        ctx.truth = {banana_quadrature_mean(c.eta1, c.eta2, c.banana_b), "quadrature", "stated value (0, 0)"};
        const Target& target = *ctx.target;
        ctx.mode_start = grid_scan_argmax([&target](const ConstVecRef& x) { return target.log_density(x); }, 2,
                                          -2.0, 2.0, 200);
    } else if (c.experiment == "logistic") {
        const PimaDesign design = load_pima(c.pima_path);
        ctx.target = make_logistic_posterior(design);
        ctx.psi = integrand_registry("squared_norm");
        ctx.family = mean_cov_family(c, ctx.target->dim(), "student_t");
        pilot_start(ctx, c, true);
        const std::vector<std::size_t> schedule(c.truth_stages, c.truth_budget);
        const Trace trace = run_self_normalized_mamis(*ctx.target, *ctx.family, ctx.theta_1, schedule,
                                                      SamplerKind::ScrambledSobol, *ctx.h,
                                                      derive_seed(c.seed, kTruthStream));
        ctx.truth = {mamis_estimate(trace, *ctx.psi).value, "self-oracle",
                     "RQMC sn_mamis, T=" + std::to_string(c.truth_stages) +
                         ", N=" + std::to_string(c.truth_budget)};
        // psi = |z|^2 vanishes at the origin, so log(psi pi) needs an off-origin start
        ctx.mode_start = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(ctx.target->dim()), 0.1);
    } else {
        ctx.truth = {Eigen::VectorXd::Constant(1, 1.0), "analytic", "E[x1^2] under N(0, I)"};
    }
    return ctx;
}

Truth compute_truth(const ExperimentConfig& config)
{
    return prepare_experiment(config).truth;
}

SeriesResult run_series(const ExperimentContext& ctx, const ExperimentConfig& c)
{
    c.validate();
    const bool lq = ctx.experiment == "lq_rates";
    SeriesResult series;
    series.method = lq ? "plain" : c.method;
    series.sampler = c.sampler;
    series.stages = lq ? 1 : c.stages;

    std::optional<BaselineProposal> baseline;
    std::optional<std::string> setup_failure;
    const bool is_baseline = c.method == "odis" || c.method == "lapis" || c.method == "lapis_t";
    if (!lq && is_baseline) {
        BaselineOptions opts;
        opts.start = ctx.mode_start;
        if (ctx.odis_cov.size() > 0) opts.odis_cov = ctx.odis_cov;
        opts.nu = c.nu;
        const BaselineVariant variant = c.method == "odis"    ? BaselineVariant::ODIS
                                        : c.method == "lapis" ? BaselineVariant::LapIS
                                                              : BaselineVariant::LapIS_t;
        try {
            baseline = make_baseline_proposal(*ctx.target, *ctx.psi, variant, opts);
        } catch (const Error& e) {
            setup_failure = e.what();
        }
    }

    const auto lq_fn = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return x[0] * x[0]; };
    const double q = lq ? c.q : 2.0;

    for (const std::size_t budget : c.budgets) {
        BudgetResult br;
        br.budget = budget;
        if (setup_failure) {
            br.failure = setup_failure;
            br.rmse = kNaN;
            series.budgets.push_back(std::move(br));
            continue;
        }
        std::vector<Eigen::VectorXd> estimates(c.reps);
        std::vector<std::string> errors(c.reps);
        parallel_for(c.reps, c.threads, [&](std::size_t r) {
            const std::uint64_t seed = derive_seed(c.seed, {budget, r});
            try {
                if (lq) {
                    const UniformPointSet pts = generate_points(c.sampler, budget, c.lq_dim, seed);
                    estimates[r] = Eigen::VectorXd::Constant(1, plain_estimate(lq_fn, pts));
                } else if (baseline) {
                    estimates[r] = run_is_baseline(*ctx.target, *ctx.psi, *baseline, c.stages * budget, c.sampler,
                                                   seed).value;
                } else {
                    const std::vector<std::size_t> schedule(c.stages, budget);
                    const Trace trace =
                        c.method == "mamis"
                            ? run_mamis(*ctx.target, *ctx.family, ctx.theta_1, schedule, c.sampler, *ctx.h, seed)
                            : run_self_normalized_mamis(*ctx.target, *ctx.family, ctx.theta_1, schedule, c.sampler,
                                                        *ctx.h, seed);
                    estimates[r] = mamis_estimate(trace, *ctx.psi).value;
                }
            } catch (const Error& e) {
                errors[r] = e.what();
            }
        });

        for (std::size_t r = 0; r < c.reps; ++r)
            if (!errors[r].empty()) {
                br.failure = "rep " + std::to_string(r) + ": " + errors[r];
                break;
            }
        if (br.failure) {
            br.rmse = kNaN;
        } else {
            br.estimates = std::move(estimates);
            if (q == 2.0) {
                br.rmse = rmse(br.estimates, ctx.truth.value);
            } else {
                double acc = 0.0;
                for (const auto& e : br.estimates) acc += std::pow((e - ctx.truth.value).norm(), q);
                br.rmse = std::pow(acc / static_cast<double>(br.estimates.size()), 1.0 / q);
            }
        }
        series.budgets.push_back(std::move(br));
    }

    std::vector<double> xs, ys;
    for (const auto& b : series.budgets)
        if (!b.failure) {
            xs.push_back(static_cast<double>(b.budget));
            ys.push_back(b.rmse);
        }
    try {
        const SlopeFit fit = fit_loglog_slope(xs, ys);
        series.slope = fit.slope;
        series.intercept = fit.intercept;
    } catch (const FitError&) {
        series.slope = series.intercept = kNaN;
    }
    return series;
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    const ExperimentContext ctx = prepare_experiment(config);
    ExperimentResult result{ctx.experiment, ctx.truth, {}};
    result.series.push_back(run_series(ctx, config));
    return result;
}

void write_csv(const ExperimentResult& result, std::ostream& os)
{
    const auto k = result.truth.value.size();
    os << "experiment,method,sampler,T,budget,rep";
    if (k <= 1) {
        os << ",estimate,truth";
    } else {
        for (Eigen::Index j = 0; j < k; ++j) os << ",estimate_" << (j + 1);
        for (Eigen::Index j = 0; j < k; ++j) os << ",truth_" << (j + 1);
    }
    os << ",rmse,slope\n";

    const auto width = std::max<Eigen::Index>(k, 1);
    auto truth_cells = [&] {
        for (Eigen::Index j = 0; j < width; ++j) os << ',' << (j < k ? format_double(result.truth.value[j]) : "");
    };
    for (const auto& s : result.series) {
        const std::string prefix = result.experiment + "," + s.method + "," + std::string(to_string(s.sampler)) +
                                   "," + std::to_string(s.stages) + ",";
        for (const auto& b : s.budgets) {
            for (std::size_t r = 0; r < b.estimates.size(); ++r) {
                os << prefix << b.budget << ',' << r;
                for (Eigen::Index j = 0; j < width; ++j)
                    os << ',' << (j < b.estimates[r].size() ? format_double(b.estimates[r][j]) : "");
                truth_cells();
                os << ",,\n";
            }
            os << prefix << b.budget << ',' << (b.failure ? "failed" : "summary");
            for (Eigen::Index j = 0; j < width; ++j) os << ',';
            truth_cells();
            os << ',' << (b.failure ? "" : format_double(b.rmse)) << ',' << format_double(s.slope) << '\n';
        }
    }
}

void write_csv(const ExperimentResult& result, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_csv(result, out);
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::filesystem::path output_path(const ExperimentConfig& c)
{
    std::filesystem::path dir = c.output_dir;
    if (dir.empty()) {
        const char* env = std::getenv("QMAMIS_OUTPUT_DIR");
        dir = env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
    }
    const std::string name = c.output_name.empty()
                                 ? c.experiment + "_" + (c.experiment == "lq_rates" ? "plain" : c.method) + "_" +
                                       std::string(to_string(c.sampler)) + ".csv"
                                 : c.output_name;
    return dir / name;
}

} // namespace qmamis
