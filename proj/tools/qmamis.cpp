// qmamis: experiment runner for the RQMC MAMIS library.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qmamis/error.hpp"
#include "qmamis/harness.hpp"
#include "qmamis/pointgen.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kInvalidConfig = 3,
    kIo = 4,
    kIngestion = 5,
    kRunFailed = 6,
    kInternal = 10,
};

struct Failure {
    int code;
    const char* name;
};

Failure classify(const std::exception& e)
{
    if (dynamic_cast<const qmamis::InvalidArgument*>(&e) || dynamic_cast<const qmamis::UnsupportedDimension*>(&e))
        return {kInvalidConfig, "invalid-config"};
    if (dynamic_cast<const qmamis::IoError*>(&e)) return {kIo, "io-error"};
    if (dynamic_cast<const qmamis::IngestionError*>(&e)) return {kIngestion, "ingestion-error"};
    if (dynamic_cast<const qmamis::Error*>(&e)) return {kRunFailed, "run-failed"};
    return {kInternal, "internal-error"};
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_run(const std::string& config_path)
{
    const qmamis::ExperimentConfig config = qmamis::load_config(config_path);
    const qmamis::ExperimentResult result = qmamis::run_experiment(config);
    const std::filesystem::path out = qmamis::output_path(config);
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    qmamis::write_csv(result, out);

    bool failed = false;
    for (const auto& s : result.series) {
        for (const auto& b : s.budgets) {
            if (b.failure) {
                failed = true;
                std::cerr << "qmamis: run-failed: " << s.method << " budget " << b.budget << ": " << *b.failure
                          << '\n';
            } else {
                std::cout << s.method << ' ' << qmamis::to_string(s.sampler) << " budget=" << b.budget
                          << " rmse=" << fmt(b.rmse) << '\n';
            }
        }
        std::cout << s.method << ' ' << qmamis::to_string(s.sampler) << " slope=" << fmt(s.slope) << '\n';
    }
    std::cout << "wrote " << out.string() << '\n';
    return failed ? kRunFailed : kOk;
}

int cmd_truth(const std::string& experiment, const std::string& config_path)
{
    qmamis::ExperimentConfig config =
        config_path.empty() ? qmamis::ExperimentConfig{} : qmamis::load_config(config_path);
    config.experiment = experiment;
    const qmamis::Truth truth = qmamis::compute_truth(config);
    std::cout << "experiment=" << experiment << "\ntruth=";
    for (Eigen::Index j = 0; j < truth.value.size(); ++j) std::cout << (j ? "," : "") << fmt(truth.value[j]);
    std::cout << "\nprovenance=" << truth.provenance << '\n';
    if (!truth.note.empty()) std::cout << "note=" << truth.note << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"RQMC multiple importance sampling experiments"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a key=value config file");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    app.add_subcommand("list-experiments", "List experiment names");

    int m = 0;
    std::size_t d = 1;
    std::uint64_t seed = 1;
    std::string sampler = "rqmc";
    auto* dump = app.add_subcommand("dump-points", "Print 2^m points in [0,1)^d");
    dump->add_option("--m", m, "log2 of the point count")->required();
    dump->add_option("--d", d, "Dimension")->required();
    dump->add_option("--seed", seed, "Scrambling seed")->required();
    dump->add_option("--sampler", sampler, "rqmc or mc");

    std::string experiment;
    std::string truth_config;
    auto* truth = app.add_subcommand("truth", "Print an experiment's ground truth and its provenance");
    truth->add_option("--experiment", experiment, "Experiment name")->required();
    truth->add_option("--config", truth_config, "Optional config overriding defaults")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(config_path);
        if (app.got_subcommand("list-experiments")) {
            for (const auto& name : qmamis::experiment_names()) std::cout << name << '\n';
            return kOk;
        }
        if (*dump) {
            const auto kind = qmamis::parse_sampler(sampler);
            QMAMIS_REQUIRE(m >= 0 && m <= qmamis::kMaxSobolLog2, InvalidArgument,
                           "--m must lie in [0, " + std::to_string(qmamis::kMaxSobolLog2) + "]");
            qmamis::write_points(std::cout, qmamis::generate_points(kind, std::size_t{1} << m, d, seed));
            return kOk;
        }
        if (*truth) return cmd_truth(experiment, truth_config);
    } catch (const std::exception& e) {
        const Failure f = classify(e);
        std::cerr << "qmamis: " << f.name << ": " << e.what() << '\n';
        return f.code;
    }
    return kUsage;
}
