#include "qmamis/targets.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "qmamis/error.hpp"

namespace qmamis {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Mixture of Gaussians evaluated through per-component whitening.
struct GaussianComponent {
    Eigen::VectorXd mean;
    Eigen::MatrixXd chol;
    double log_norm; // log weight - d/2 log 2pi - log|L|
};

GaussianComponent make_component(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                 double log_weight)
{
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw InvalidArgument("mixture covariance is not SPD");
    Eigen::MatrixXd l = llt.matrixL();
    const double d = static_cast<double>(mean.size());
    return {mean, l, log_weight - 0.5 * d * kLogTwoPi - l.diagonal().array().log().sum()};
}

} // namespace

Target::Target(std::string name, std::size_t dim, LogDensityFn log_density, bool normalized,
               std::map<std::string, Eigen::VectorXd> ground_truth)
    : name_(std::move(name)),
      dim_(dim),
      log_density_(std::move(log_density)),
      normalized_(normalized),
      truth_(std::move(ground_truth))
{
    QMAMIS_REQUIRE(dim_ >= 1, InvalidArgument, "target dimension must be positive");
    QMAMIS_REQUIRE(static_cast<bool>(log_density_), InvalidArgument, "target needs a log density");
}

Eigen::VectorXd Target::log_density_rows(const Eigen::MatrixXd& samples) const
{
    QMAMIS_REQUIRE(samples.cols() == static_cast<Eigen::Index>(dim_), InvalidArgument,
                   "target '" + name_ + "': sample dimension mismatch");
    Eigen::VectorXd out(samples.rows());
    Eigen::VectorXd x(dim_);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        x = samples.row(i).transpose();
        out[i] = log_density_(x);
    }
    return out;
}

std::optional<Eigen::VectorXd> Target::ground_truth(const std::string& integrand) const
{
    auto it = truth_.find(integrand);
    if (it == truth_.end()) return std::nullopt;
    return it->second;
}

Target Target::rescaled(double log_factor) const
{
    auto base = log_density_;
    return Target(name_, dim_, [base, log_factor](const ConstVecRef& x) { return base(x) + log_factor; },
                  false, truth_);
}

Integrand Integrand::constant(double c)
{
    return Integrand("constant", 1, [c](const ConstVecRef&) { return Eigen::VectorXd::Constant(1, c); });
}

Integrand integrand_registry(const std::string& name)
{
    if (name == "first_coord_squared")
        return Integrand(name, 1, [](const ConstVecRef& x) {
            return Eigen::VectorXd::Constant(1, x[0] * x[0]);
        });
    if (name == "identity")
        return Integrand(name, 0, [](const ConstVecRef& x) { return Eigen::VectorXd(x); });
    if (name == "squared_norm")
        return Integrand(name, 1, [](const ConstVecRef& x) {
            return Eigen::VectorXd::Constant(1, x.squaredNorm());
        });
    throw InvalidArgument("unknown integrand '" + name + "'");
}

std::vector<std::string> integrand_names()
{
    return {"first_coord_squared", "identity", "squared_norm"};
}

double log1p_exp(double eta) noexcept
{
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double log_sum_exp(const ConstVecRef& v) noexcept
{
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::MatrixXd shared_cov_gmm_covariance(std::size_t d)
{
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd s = Eigen::MatrixXd::Ones(n, n);
    s.diagonal().setConstant(static_cast<double>(d));
    return s;
}

Target make_shared_cov_gmm(std::size_t d)
{
    QMAMIS_REQUIRE(d >= 2, InvalidArgument, "shared-covariance GMM needs d >= 2");
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::LLT<Eigen::MatrixXd> llt(shared_cov_gmm_covariance(d));
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_norm = -std::log(3.0) - 0.5 * static_cast<double>(d) * kLogTwoPi -
                            l.diagonal().array().log().sum();

    // Whitened component means L^{-1} mu_k for mu = 1, 0, -1.
    Eigen::VectorXd w_one = Eigen::VectorXd::Ones(n);
    l.triangularView<Eigen::Lower>().solveInPlace(w_one);

    auto log_density = [l, w_one, log_norm](const ConstVecRef& x) {
        Eigen::VectorXd z = x;
        l.triangularView<Eigen::Lower>().solveInPlace(z);
        Eigen::Vector3d e;
        e[0] = -0.5 * (z - w_one).squaredNorm();
        e[1] = -0.5 * z.squaredNorm();
        e[2] = -0.5 * (z + w_one).squaredNorm();
        return log_norm + log_sum_exp(e);
    };

    std::map<std::string, Eigen::VectorXd> truth;
    truth["first_coord_squared"] = Eigen::VectorXd::Constant(1, static_cast<double>(d) + 2.0 / 3.0);
    truth["identity"] = Eigen::VectorXd::Zero(n);
    return Target("toy_gmm", d, std::move(log_density), true, std::move(truth));
}

std::vector<FiveMixtureComponent> five_mixture_components()
{
    const double s = 1.0 / (40.0 * 40.0);
    auto cov = [s](double a, double b, double c) {
        Eigen::Matrix2d m;
        m << a, b, b, c;
        return Eigen::Matrix2d(s * m);
    };
    return {
        {{1.0, 1.0}, cov(2.0, 0.6, 1.0)},
        {{2.0, 3.6}, cov(2.0, -0.4, 2.0)},
        {{3.3, 2.8}, cov(2.0, 0.8, 2.0)},
        {{1.1, 2.9}, cov(3.0, 0.0, 0.5)},
        {{3.4, 0.6}, cov(2.0, -0.1, 2.0)},
    };
}

Eigen::Vector2d five_mixture_stated_mean()
{
    return {2.16, 2.14};
}

Target make_five_mixture()
{
    const auto parts = five_mixture_components();
    std::vector<GaussianComponent> comps;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : parts) {
        comps.push_back(make_component(p.mean, p.cov, -std::log(static_cast<double>(parts.size()))));
        mean += p.mean / static_cast<double>(parts.size());
    }
    auto log_density = [comps](const ConstVecRef& x) {
        Eigen::VectorXd e(static_cast<Eigen::Index>(comps.size()));
        for (std::size_t k = 0; k < comps.size(); ++k) {
            Eigen::VectorXd z = x - comps[k].mean;
            comps[k].chol.triangularView<Eigen::Lower>().solveInPlace(z);
            e[static_cast<Eigen::Index>(k)] = comps[k].log_norm - 0.5 * z.squaredNorm();
        }
        return log_sum_exp(e);
    };
    std::map<std::string, Eigen::VectorXd> truth;
    truth["identity"] = mean;
    return Target("five_mixture", 2, std::move(log_density), true, std::move(truth));
}

Target make_banana(double eta1, double eta2, double b)
{
    QMAMIS_REQUIRE(eta1 > 0.0 && eta2 > 0.0 && b > 0.0, InvalidArgument,
                   "banana parameters must be positive");
    auto log_density = [eta1, eta2, b](const ConstVecRef& x) {
        const double r = 4.0 - b * x[0] - x[1] * x[1];
        return -r * r / (2.0 * eta1 * eta1) - x[1] * x[1] / (2.0 * eta2 * eta2);
    };
    std::map<std::string, Eigen::VectorXd> truth;
    truth["identity"] = Eigen::VectorXd::Zero(2);
    return Target("banana", 2, std::move(log_density), false, std::move(truth));
}

Eigen::Vector2d banana_quadrature_mean(double eta1, double eta2, double b, std::size_t nodes_per_axis)
{
    QMAMIS_REQUIRE(nodes_per_axis >= 3, InvalidArgument, "quadrature needs at least 3 nodes");
    const Target target = make_banana(eta1, eta2, b);
    const double half2 = 16.0 * eta2;
    const double half1 = 16.0 * eta1 / b;
    const auto n = static_cast<Eigen::Index>(nodes_per_axis);
    const double h2 = 2.0 * half2 / static_cast<double>(n - 1);
    const double h1 = 2.0 * half1 / static_cast<double>(n - 1);

    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    Eigen::Vector2d x;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double x2 = -half2 + h2 * static_cast<double>(j);
        const double w2 = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        const double centre = (4.0 - x2 * x2) / b;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x1 = centre - half1 + h1 * static_cast<double>(i);
            const double w1 = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            x << x1, x2;
            const double w = w1 * w2 * std::exp(target.log_density(x));
            mass += w;
            m1 += w * x1;
            m2 += w * x2;
        }
    }
    return {m1 / mass, m2 / mass};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        auto first = field.find_first_not_of(" \t\r\"");
        auto last = field.find_last_not_of(" \t\r\"");
        out.push_back(first == std::string::npos ? std::string() : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_number(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace

PimaDesign load_pima(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open pima file '" + path.string() + "'");

    constexpr std::size_t kColumns = 9;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < kColumns; ++j) names.push_back("column " + std::to_string(j + 1));

    std::vector<std::array<double, kColumns>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (rows.size() < kPimaRows && std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        if (first) {
            first = false;
            bool numeric = !fields.empty();
            for (const auto& f : fields) numeric = numeric && parse_number(f).has_value();
            if (!numeric) {
                if (fields.size() != kColumns)
                    throw IngestionError(path.string() + ": header has " + std::to_string(fields.size()) +
                                         " columns, expected 9");
                names = fields;
                continue;
            }
        }
        if (fields.size() != kColumns)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns, got " +
                                 std::to_string(fields.size()));
        std::array<double, kColumns> row{};
        for (std::size_t j = 0; j < kColumns; ++j) {
            auto v = parse_number(fields[j]);
            if (!v)
                throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": column '" + names[j] +
                                     "' is not numeric ('" + fields[j] + "')");
            row[j] = *v;
        }
        if (row[8] != 0.0 && row[8] != 1.0)
            throw IngestionError(path.string() + ":" + std::to_string(line_no) + ": outcome column '" +
                                 names[8] + "' must be 0 or 1");
        rows.push_back(row);
    }
    if (rows.size() < kPimaRows)
        throw IngestionError(path.string() + ": need at least 30 data rows, found " + std::to_string(rows.size()));

    const auto n = static_cast<Eigen::Index>(kPimaRows);
    PimaDesign design;
    design.X.resize(n, 9);
    design.Y.resize(n);
    design.columns.push_back("intercept");
    design.X.col(0).setOnes();
    for (std::size_t j = 0; j < 8; ++j) {
        Eigen::VectorXd col(n);
        for (Eigen::Index i = 0; i < n; ++i) col[i] = rows[static_cast<std::size_t>(i)][j];
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        if (!(var > 0.0)) throw IngestionError(path.string() + ": column '" + names[j] + "' has zero variance");
        design.X.col(static_cast<Eigen::Index>(j) + 1) = (col.array() - mean) / std::sqrt(var);
        design.columns.push_back(names[j]);
    }
    for (Eigen::Index i = 0; i < n; ++i) design.Y[i] = rows[static_cast<std::size_t>(i)][8];
    return design;
}

Target make_logistic_posterior(const PimaDesign& design)
{
    QMAMIS_REQUIRE(design.X.rows() == design.Y.size() && design.X.rows() > 0, InvalidArgument,
                   "logistic design: X and Y sizes differ");
    const Eigen::MatrixXd X = design.X;
    const Eigen::VectorXd Y = design.Y;
    auto log_density = [X, Y](const ConstVecRef& z) {
        const Eigen::VectorXd eta = X * z;
        double ll = -0.5 * z.squaredNorm();
        for (Eigen::Index i = 0; i < eta.size(); ++i) ll += Y[i] * eta[i] - log1p_exp(eta[i]);
        return ll;
    };
    return Target("logistic", static_cast<std::size_t>(X.cols()), std::move(log_density), false);
}

Eigen::VectorXd logistic_log_posterior_gradient(const PimaDesign& design, const ConstVecRef& z)
{
    const Eigen::VectorXd eta = design.X * z;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = design.Y[i] - 1.0 / (1.0 + std::exp(-eta[i]));
    return design.X.transpose() * resid - z;
}

} // namespace qmamis
