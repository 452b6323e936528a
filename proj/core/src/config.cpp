#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>

#include "qmamis/error.hpp"
#include "qmamis/harness.hpp"

namespace qmamis {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class T>
T parse_integer(std::string_view key, std::string_view v)
{
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw InvalidArgument("config key '" + std::string(key) + "': '" + std::string(v) + "' is not an integer");
    return out;
}

double parse_real(std::string_view key, std::string_view v)
{
    try {
        std::size_t used = 0;
        const std::string s(v);
        const double out = std::stod(s, &used);
        if (used == s.size()) return out;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("config key '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
}

// "1024" or "2^10".
std::size_t parse_budget(std::string_view key, std::string_view tok)
{
    tok = trim(tok);
    if (tok.starts_with("2^")) {
        const auto e = parse_integer<unsigned>(key, tok.substr(2));
        if (e >= 63) throw InvalidArgument("config key '" + std::string(key) + "': exponent too large");
        return std::size_t{1} << e;
    }
    return parse_integer<std::size_t>(key, tok);
}

// Comma list of budgets; "a..b" expands to the doubling sequence a, 2a, ..., b.
std::vector<std::size_t> parse_budgets(std::string_view key, std::string_view v)
{
    std::vector<std::size_t> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        const std::string_view tok = trim(v.substr(0, comma));
        v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
        if (tok.empty()) continue;
        if (const auto dots = tok.find(".."); dots != std::string_view::npos) {
            std::size_t lo = parse_budget(key, tok.substr(0, dots));
            const std::size_t hi = parse_budget(key, tok.substr(dots + 2));
            if (lo == 0 || lo > hi)
                throw InvalidArgument("config key '" + std::string(key) + "': bad range '" + std::string(tok) + "'");
            for (; lo <= hi; lo *= 2) out.push_back(lo);
        } else {
            out.push_back(parse_budget(key, tok));
        }
    }
    return out;
}

} // namespace

std::vector<std::string> experiment_names()
{
    return {"toy_gmm", "five_mixture", "banana", "logistic", "lq_rates"};
}

std::vector<std::string> method_names()
{
    return {"mamis", "sn_mamis", "odis", "lapis", "lapis_t"};
}

void ExperimentConfig::validate() const
{
    const auto experiments = experiment_names();
    QMAMIS_REQUIRE(std::find(experiments.begin(), experiments.end(), experiment) != experiments.end(),
                   InvalidArgument, "unknown experiment '" + experiment + "'");
    const auto methods = method_names();
    QMAMIS_REQUIRE(std::find(methods.begin(), methods.end(), method) != methods.end(), InvalidArgument,
                   "unknown method '" + method + "'");
    QMAMIS_REQUIRE(!budgets.empty(), InvalidArgument, "budgets must not be empty");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        QMAMIS_REQUIRE(budgets[i] >= 1, InvalidArgument, "budgets must be positive");
        if (i > 0)
            QMAMIS_REQUIRE(budgets[i] > budgets[i - 1], InvalidArgument, "budgets must be strictly increasing");
        if (sampler == SamplerKind::ScrambledSobol)
            QMAMIS_REQUIRE(std::has_single_bit(budgets[i]), InvalidArgument,
                           "RQMC budgets must be powers of two, got " + std::to_string(budgets[i]));
    }
    QMAMIS_REQUIRE(reps >= 2, InvalidArgument, "reps (J) must be at least 2");
    QMAMIS_REQUIRE(stages >= 1, InvalidArgument, "T must be at least 1");
    QMAMIS_REQUIRE(nu > 0.0, InvalidArgument, "nu must be positive");
    QMAMIS_REQUIRE(q >= 1.0 && q <= 8.0, InvalidArgument, "q must lie in [1, 8]");
    QMAMIS_REQUIRE(!(experiment == "toy_gmm") || dim >= 2, InvalidArgument, "toy_gmm needs dim >= 2");
    QMAMIS_REQUIRE(truth_budget >= 1 && truth_stages >= 1, InvalidArgument, "truth budget must be positive");
    QMAMIS_REQUIRE(pilot_stages >= 1 && pilot_points >= 1 && pilot_reps >= 1, InvalidArgument,
                   "pilot budgets must be positive");
    if (!family.empty())
        QMAMIS_REQUIRE(family == "gaussian_fixed_cov" || family == "gaussian_mean_cov" || family == "student_t",
                       InvalidArgument, "unknown family '" + family + "'");
}

ExperimentConfig parse_config(std::istream& in)
{
    ExperimentConfig c;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view v = trim(line.substr(eq + 1));

        if (key == "experiment") c.experiment = v;
        else if (key == "sampler") c.sampler = parse_sampler(v);
        else if (key == "method") c.method = v;
        else if (key == "T" || key == "stages") c.stages = parse_integer<std::size_t>(key, v);
        else if (key == "budgets") c.budgets = parse_budgets(key, v);
        else if (key == "reps" || key == "J") c.reps = parse_integer<std::size_t>(key, v);
        else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, v);
        else if (key == "family") c.family = v;
        else if (key == "nu") c.nu = parse_real(key, v);
        else if (key == "dim") c.dim = parse_integer<std::size_t>(key, v);
        else if (key == "pima_path") c.pima_path = std::string(v);
        else if (key == "output_dir") c.output_dir = std::string(v);
        else if (key == "output_name") c.output_name = v;
        else if (key == "truth_budget") c.truth_budget = parse_budget(key, v);
        else if (key == "truth_T") c.truth_stages = parse_integer<std::size_t>(key, v);
        else if (key == "pilot_T") c.pilot_stages = parse_integer<std::size_t>(key, v);
        else if (key == "pilot_N") c.pilot_points = parse_budget(key, v);
        else if (key == "pilot_reps") c.pilot_reps = parse_integer<std::size_t>(key, v);
        else if (key == "pilot_sampler") c.pilot_sampler = parse_sampler(v);
        else if (key == "q") c.q = parse_real(key, v);
        else if (key == "lq_dim") c.lq_dim = parse_integer<std::size_t>(key, v);
        else if (key == "eta1") c.eta1 = parse_real(key, v);
        else if (key == "eta2") c.eta2 = parse_real(key, v);
        else if (key == "b") c.banana_b = parse_real(key, v);
        else if (key == "threads") c.threads = parse_integer<std::size_t>(key, v);
        else throw InvalidArgument("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    ExperimentConfig c = parse_config(in);
    // a relative data path that exists next to the config file wins over the cwd
    if (c.pima_path.is_relative()) {
        const auto beside = path.parent_path() / c.pima_path;
        if (!path.parent_path().empty() && std::filesystem::exists(beside)) c.pima_path = beside;
    }
    return c;
}

} // namespace qmamis
