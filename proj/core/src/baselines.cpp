#include "qmamis/baselines.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "qmamis/error.hpp"

namespace qmamis {

namespace {

constexpr std::size_t kMaxNewtonIterations = 200;
constexpr double kGradientTolerance = 1e-6;
// Newton keeps polishing past the convergence test while the objective still improves.
constexpr double kPolishTolerance = 1e-10;

double fd_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

// Ascent direction from a possibly indefinite Hessian: |eigenvalues| floored.
Eigen::VectorXd newton_direction(const Eigen::MatrixXd& neg_h, const Eigen::VectorXd& g)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (neg_h + neg_h.transpose()));
    if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) return g;
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    const Eigen::VectorXd inv =
        eig.eigenvalues().cwiseAbs().cwiseMax(1e-8 * scale).cwiseInverse();
    return eig.eigenvectors() * (inv.asDiagonal() * (eig.eigenvectors().transpose() * g));
}

} // namespace

Eigen::VectorXd fd_gradient(const LogFn& f, const Eigen::VectorXd& x)
{
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd y = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = fd_step(x[j]);
        y[j] = x[j] + h;
        const double fp = f(y);
        y[j] = x[j] - h;
        const double fm = f(y);
        y[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd fd_hessian(const LogFn& f, const Eigen::VectorXd& x)
{
    const auto d = x.size();
    Eigen::MatrixXd hess(d, d);
    Eigen::VectorXd y = x;
    const double f0 = f(x);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double hi = fd_step(x[i]);
        y[i] = x[i] + hi;
        const double fp = f(y);
        y[i] = x[i] - hi;
        const double fm = f(y);
        y[i] = x[i];
        hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = fd_step(x[j]);
            double acc = 0.0;
            for (int si : {1, -1})
                for (int sj : {1, -1}) {
                    y[i] = x[i] + si * hi;
                    y[j] = x[j] + sj * hj;
                    acc += si * sj * f(y);
                }
            y[i] = x[i];
            y[j] = x[j];
            hess(i, j) = hess(j, i) = acc / (4.0 * hi * hj);
        }
    }
    return hess;
}

ModeResult find_mode(const LogFn& log_f, const Eigen::VectorXd& x0)
{
    QMAMIS_REQUIRE(x0.size() >= 1, InvalidArgument, "find_mode: empty starting point");
    ModeResult res;
    Eigen::VectorXd x = x0;
    double fx = log_f(x);
    QMAMIS_REQUIRE(std::isfinite(fx), InvalidArgument, "find_mode: objective is not finite at the start");

    Eigen::VectorXd g = fd_gradient(log_f, x);
    std::size_t iter = 0;
    for (; iter < kMaxNewtonIterations; ++iter) {
        if (g.norm() <= kPolishTolerance) break;
        const Eigen::MatrixXd neg_h = -fd_hessian(log_f, x);
        Eigen::VectorXd p = newton_direction(neg_h, g);
        if (g.dot(p) <= 0.0) p = g;

        double step = 1.0;
        bool improved = false;
        for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
            const Eigen::VectorXd trial = x + step * p;
            const double ft = log_f(trial);
            if (std::isfinite(ft) && (ft > fx || (ft == fx && g.norm() > kGradientTolerance))) {
                x = trial;
                fx = ft;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        g = fd_gradient(log_f, x);
    }

    res.mode = x;
    res.value = fx;
    res.gradient_norm = g.norm();
    res.iterations = iter;
    res.converged = res.gradient_norm <= kGradientTolerance;
    res.neg_hessian = -fd_hessian(log_f, x);
    return res;
}

SpdRepair laplace_cov(const ModeResult& mode)
{
    if (!mode.converged) throw RunError("laplace_cov: mode search did not converge");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mode.neg_hessian);
    if (!lu.isInvertible()) throw RunError("laplace_cov: negative Hessian is singular");
    try {
        return spd_repair(lu.inverse());
    } catch (const Error& e) {
        throw RunError(std::string("laplace_cov: ") + e.what());
    }
}

Eigen::VectorXd grid_scan_argmax(const LogFn& log_f, std::size_t d, double lo, double hi,
                                 std::size_t cells_per_axis)
{
    QMAMIS_REQUIRE(d >= 1 && d <= 3 && cells_per_axis >= 1 && hi > lo, InvalidArgument,
                   "grid_scan_argmax: bad grid");
    const double width = (hi - lo) / static_cast<double>(cells_per_axis);
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) total *= cells_per_axis;

    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    Eigen::VectorXd best = x;
    double best_f = -std::numeric_limits<double>::infinity();
    for (std::size_t cell = 0; cell < total; ++cell) {
        std::size_t c = cell;
        for (std::size_t k = 0; k < d; ++k, c /= cells_per_axis)
            x[static_cast<Eigen::Index>(k)] = lo + width * (static_cast<double>(c % cells_per_axis) + 0.5);
        const double f = log_f(x);
        if (f > best_f) {
            best_f = f;
            best = x;
        }
    }
    return best;
}

std::string_view to_string(BaselineVariant v) noexcept
{
    switch (v) {
    case BaselineVariant::ODIS: return "odis";
    case BaselineVariant::LapIS: return "lapis";
    case BaselineVariant::LapIS_t: return "lapis_t";
    }
    return "?";
}

LogFn baseline_objective(const Target& target, const Integrand& psi)
{
    if (psi.output_dim(target.dim()) != 1)
        return [&target](const ConstVecRef& x) { return target.log_density(x); };
    return [&target, psi](const ConstVecRef& x) {
        const double v = psi(x)[0];
        if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
        return std::log(v) + target.log_density(x);
    };
}

BaselineProposal make_baseline_proposal(const Target& target, const Integrand& psi, BaselineVariant variant,
                                        const BaselineOptions& options)
{
    const auto d = static_cast<Eigen::Index>(target.dim());
    const Eigen::VectorXd start = options.start.size() == 0 ? Eigen::VectorXd::Zero(d) : options.start;
    QMAMIS_REQUIRE(start.size() == d, InvalidArgument, "baseline start has the wrong dimension");

    ModeResult mode = find_mode(baseline_objective(target, psi), start);
    if (!mode.converged)
        throw RunError(std::string(to_string(variant)) + ": mode search did not converge (gradient norm " +
                       std::to_string(mode.gradient_norm) + " after " + std::to_string(mode.iterations) +
                       " iterations)");

    if (variant == BaselineVariant::ODIS) {
        const Eigen::MatrixXd cov = options.odis_cov.value_or(Eigen::MatrixXd::Identity(d, d));
        FamilySpec spec = FamilySpec::gaussian_fixed_cov(cov);
        ProposalParam theta = ProposalParam::from_theta(spec, mode.mode);
        return {std::move(spec), std::move(theta), std::move(mode)};
    }
    const SpdRepair cov = laplace_cov(mode);
    FamilySpec spec = variant == BaselineVariant::LapIS ? FamilySpec::gaussian_mean_cov(target.dim())
                                                        : FamilySpec::student_t(target.dim(), options.nu);
    ProposalParam theta = ProposalParam::from_moments(spec, mode.mode, cov.matrix);
    return {std::move(spec), std::move(theta), std::move(mode)};
}

Estimate run_is_baseline(const Target& target, const Integrand& psi, const BaselineProposal& proposal,
                         std::size_t total_samples, SamplerKind sampler, std::uint64_t seed)
{
    const StageRecord rec = run_stage(target, proposal.spec, proposal.theta, total_samples, sampler, seed, 1);
    const std::size_t k = psi.output_dim(target.dim());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));

    Eigen::VectorXd w;
    double w_sum = 0.0;
    if (target.normalized()) {
        w = rec.stage_log_weights.array().exp().matrix() / static_cast<double>(total_samples);
    } else {
        w = normalized_weights(rec.stage_log_weights);
    }
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const Eigen::VectorXd v = psi(rec.samples.row(i).transpose());
        if (!v.allFinite())
            throw EstimateError("integrand '" + psi.name() + "' is non-finite at sample " + std::to_string(i));
        acc += w[i] * v;
        w_sum += w[i];
    }
    if (!target.normalized()) acc /= w_sum;

    Estimate e;
    e.value = std::move(acc);
    e.method = std::string(proposal.spec.family() == Family::GaussianFixedCov ? "odis"
                           : proposal.spec.family() == Family::StudentT      ? "lapis_t"
                                                                             : "lapis");
    e.T = 1;
    e.schedule = {total_samples};
    e.mean_budget = static_cast<double>(total_samples);
    return e;
}

Estimate run_is_baseline(const Target& target, const Integrand& psi, BaselineVariant variant,
                         std::size_t total_samples, SamplerKind sampler, std::uint64_t seed,
                         const BaselineOptions& options)
{
    return run_is_baseline(target, psi, make_baseline_proposal(target, psi, variant, options), total_samples,
                           sampler, seed);
}

} // namespace qmamis
