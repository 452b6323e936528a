#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qmamis/error.hpp"
#include "qmamis/harness.hpp"

using namespace qmamis;

namespace {

ExperimentConfig small_config(const std::string& experiment, SamplerKind sampler)
{
    ExperimentConfig c;
    c.experiment = experiment;
    c.sampler = sampler;
    c.method = experiment == "toy_gmm" ? "mamis" : "sn_mamis";
    c.stages = 4;
    c.budgets = {64, 128, 256};
    c.reps = 3;
    c.dim = 4;
    c.pilot_stages = 4;
    c.pilot_reps = 2;
    c.pima_path = QMAMIS_PIMA_CSV;
    c.truth_budget = 256;
    c.truth_stages = 4;
    return c;
}

std::string csv_of(const ExperimentResult& r)
{
    std::ostringstream os;
    write_csv(r, os);
    return os.str();
}

} // namespace

TEST(Rmse, Examples)
{
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(1, 4.0);
    EXPECT_EQ(rmse({t, t, t}, t), 0.0);
    EXPECT_EQ(rmse({Eigen::VectorXd::Constant(1, 5.0), Eigen::VectorXd::Constant(1, 3.0)}, t), 1.0);
    const Eigen::Vector2d t2(1.0, 2.0);
    EXPECT_EQ(rmse({Eigen::VectorXd(t2 + Eigen::Vector2d(3.0, 4.0))}, t2), 5.0);
    EXPECT_THROW(rmse({Eigen::VectorXd::Zero(3)}, t2), InvalidArgument);
}

TEST(SlopeFit, Examples)
{
    std::vector<double> n, inv, isqrt, cst;
    for (double b = 256; b <= 8192; b *= 2) {
        n.push_back(b);
        inv.push_back(3.0 / b);
        isqrt.push_back(0.7 / std::sqrt(b));
        cst.push_back(2.0);
    }
    EXPECT_NEAR(fit_loglog_slope(n, inv).slope, -1.0, 1e-12);
    EXPECT_NEAR(fit_loglog_slope(n, isqrt).slope, -0.5, 1e-12);
    EXPECT_NEAR(fit_loglog_slope(n, cst).slope, 0.0, 1e-12);
    EXPECT_NEAR(fit_loglog_slope(n, inv).intercept, std::log(3.0), 1e-10);
}

TEST(SlopeFit, Errors)
{
    EXPECT_THROW(fit_loglog_slope({1, 2}, {1, 2}), FitError);
    EXPECT_THROW(fit_loglog_slope({1, 2, 4}, {1, 0, 2}), FitError);
    EXPECT_THROW(fit_loglog_slope({1, 2, 4}, {1, -1, 2}), FitError);
}

TEST(SlopeFit, InvariantToBudgetUnits)
{
    const std::vector<double> n = {256, 512, 1024, 2048, 4096};
    const std::vector<double> r = {0.3, 0.17, 0.11, 0.052, 0.031};
    std::vector<double> n2 = n;
    for (double& v : n2) v *= 4.0; // exact power-of-two rescaling
    const SlopeFit a = fit_loglog_slope(n, r), b = fit_loglog_slope(n2, r);
    EXPECT_EQ(a.slope, b.slope);
    EXPECT_NEAR(b.intercept, a.intercept - a.slope * std::log(4.0), 1e-12);
}

TEST(Config, ParsesKeysAndRanges)
{
    std::istringstream in(R"(# comment
experiment = five_mixture
sampler = mc
method = sn_mamis
T = 8
budgets = 2^9..2^11, 4096
J = 5
seed = 42
family = student_t
nu = 3.5
)");
    const ExperimentConfig c = parse_config(in);
    EXPECT_EQ(c.experiment, "five_mixture");
    EXPECT_EQ(c.sampler, SamplerKind::IID);
    EXPECT_EQ(c.stages, 8u);
    EXPECT_EQ(c.budgets, (std::vector<std::size_t>{512, 1024, 2048, 4096}));
    EXPECT_EQ(c.reps, 5u);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.family, "student_t");
    EXPECT_EQ(c.nu, 3.5);
}

TEST(Config, ValidationErrors)
{
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return parse_config(in);
    };
    EXPECT_THROW(parse("experiment = nope\n"), InvalidArgument);
    EXPECT_THROW(parse("method = nope\n"), InvalidArgument);
    EXPECT_THROW(parse("budgets = 512, 256\n"), InvalidArgument);
    EXPECT_THROW(parse("budgets = 300\n"), InvalidArgument); // RQMC needs powers of two
    EXPECT_NO_THROW(parse("sampler = mc\nbudgets = 300, 600, 900\n"));
    EXPECT_THROW(parse("J = 1\n"), InvalidArgument);
    EXPECT_THROW(parse("T = x\n"), InvalidArgument);
    EXPECT_THROW(parse("bogus = 1\n"), InvalidArgument);
    EXPECT_THROW(parse("no equals sign\n"), InvalidArgument);
    EXPECT_THROW(parse("q = 9\n"), InvalidArgument);
    EXPECT_THROW(load_config("/nonexistent/qmamis.cfg"), IoError);
}

TEST(Truth, ProvenancePerExperiment)
{
    EXPECT_EQ(compute_truth(small_config("toy_gmm", SamplerKind::IID)).provenance, "analytic");
    EXPECT_EQ(compute_truth(small_config("five_mixture", SamplerKind::IID)).provenance, "analytic");
    const Truth b = compute_truth(small_config("banana", SamplerKind::IID));
    EXPECT_EQ(b.provenance, "quadrature");
    EXPECT_NEAR(b.value[0], 0.0, 1e-6);
    EXPECT_EQ(compute_truth(small_config("logistic", SamplerKind::IID)).provenance, "self-oracle");
    EXPECT_EQ(compute_truth(small_config("lq_rates", SamplerKind::IID)).value[0], 1.0);
}

TEST(Csv, EmptyResultIsHeaderOnly)
{
    ExperimentResult r;
    r.experiment = "toy_gmm";
    r.truth.value = Eigen::VectorXd::Constant(1, 1.0);
    EXPECT_EQ(csv_of(r), "experiment,method,sampler,T,budget,rep,estimate,truth,rmse,slope\n");
}

TEST(Csv, RowCountAndReplayAreExact)
{
    for (const char* exp : {"toy_gmm", "five_mixture", "banana", "lq_rates"}) {
        const ExperimentConfig c = small_config(exp, SamplerKind::ScrambledSobol);
        const ExperimentResult a = run_experiment(c);
        const ExperimentResult b = run_experiment(c);
        const std::string sa = csv_of(a);
        EXPECT_EQ(sa, csv_of(b)) << exp;
        std::size_t rows = 1;
        for (const auto& s : a.series) rows += s.budgets.size() * (c.reps + 1);
        EXPECT_EQ(static_cast<std::size_t>(std::count(sa.begin(), sa.end(), '\n')), rows) << exp;
        for (const auto& s : a.series)
            for (const auto& br : s.budgets) EXPECT_GE(br.rmse, 0.0);
    }
}

TEST(Csv, ThreadCountDoesNotChangeOutput)
{
    ExperimentConfig c = small_config("banana", SamplerKind::IID);
    c.threads = 1;
    const std::string one = csv_of(run_experiment(c));
    c.threads = 4;
    EXPECT_EQ(one, csv_of(run_experiment(c)));
}

TEST(Csv, WritesFileAndReportsBadPath)
{
    const ExperimentResult r = run_experiment(small_config("lq_rates", SamplerKind::IID));
    const auto path = std::filesystem::temp_directory_path() / "qmamis_test_harness.csv";
    write_csv(r, path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    EXPECT_EQ(buf.str(), csv_of(r));
    std::filesystem::remove(path);
    EXPECT_THROW(write_csv(r, std::filesystem::path("/nonexistent/dir/out.csv")), IoError);
}

TEST(Output, PathResolution)
{
    ExperimentConfig c;
    c.experiment = "banana";
    c.method = "sn_mamis";
    c.sampler = SamplerKind::IID;
    c.output_dir = "/tmp/x";
    EXPECT_EQ(output_path(c), std::filesystem::path("/tmp/x/banana_sn_mamis_mc.csv"));
    c.output_dir.clear();
    ::setenv("QMAMIS_OUTPUT_DIR", "/tmp/env", 1);
    EXPECT_EQ(output_path(c), std::filesystem::path("/tmp/env/banana_sn_mamis_mc.csv"));
    ::unsetenv("QMAMIS_OUTPUT_DIR");
    EXPECT_EQ(output_path(c), std::filesystem::path("./banana_sn_mamis_mc.csv"));
    c.output_name = "custom.csv";
    EXPECT_EQ(output_path(c).filename(), "custom.csv");
}
