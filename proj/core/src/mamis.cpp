#include "qmamis/mamis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "qmamis/error.hpp"
#include "qmamis/seeding.hpp"

namespace qmamis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_schedule(const std::vector<std::size_t>& schedule)
{
    QMAMIS_REQUIRE(!schedule.empty(), InvalidArgument, "MAMIS schedule must be nonempty");
    for (auto n : schedule) QMAMIS_REQUIRE(n >= 1, InvalidArgument, "every N_t must be at least 1");
}

// sum_i c_i h(X_i) for weights c.
Eigen::VectorXd weighted_h(const Eigen::MatrixXd& x, const Eigen::VectorXd& c, const HStatistic& h)
{
    const auto d = x.cols();
    if (h.kind() == HStatistic::Kind::Identity) return x.transpose() * c;

    Eigen::VectorXd out(d + d * d);
    out.head(d) = x.transpose() * c;
    Eigen::MatrixXd centred = x;
    if (h.kind() == HStatistic::Kind::Centered) centred.rowwise() -= h.aux_mean().transpose();
    const Eigen::MatrixXd second = centred.transpose() * c.asDiagonal() * centred;
    out.tail(d * d) = vec_row_major(second);
    return out;
}

Trace run_adaptive(const Target& target, const FamilySpec& spec, const ProposalParam& theta_1,
                   const std::vector<std::size_t>& schedule, SamplerKind sampler, const HStatistic& h,
                   std::uint64_t master_seed, WeightMode mode)
{
    check_schedule(schedule);
    QMAMIS_REQUIRE(target.dim() == spec.dim(), InvalidArgument, "target and family dimensions differ");
    QMAMIS_REQUIRE(h.output_dim() == spec.param_dim() && h.dim() == spec.dim(), InvalidArgument,
                   "h statistic does not match the family parameter layout");

    Trace trace{.spec = spec};
    trace.schedule = schedule;
    trace.sampler = sampler;
    trace.mode = mode;
    trace.stages.reserve(schedule.size());

    ProposalParam theta = theta_1;
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        StageRecord rec = run_stage(target, spec, theta, schedule[t], sampler,
                                    derive_seed(master_seed, t + 1), t + 1);
        ParameterUpdate upd = parameter_update(rec, spec, h, mode);
        rec.update_fallback = upd.fallback;
        theta = std::move(upd.theta);
        trace.stages.push_back(std::move(rec));
    }
    trace.next_theta = std::move(theta);
    return recycle_weights(std::move(trace));
}

} // namespace

std::size_t Trace::fallback_count() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(stages.begin(), stages.end(), [](const StageRecord& s) { return s.update_fallback; }));
}

StageRecord run_stage(const Target& target, const FamilySpec& spec, const ProposalParam& theta_t,
                      std::size_t n_t, SamplerKind sampler, std::uint64_t point_seed, std::size_t t)
{
    QMAMIS_REQUIRE(n_t >= 1, InvalidArgument, "stage size must be at least 1");
    const UniformPointSet points = generate_points(sampler, n_t, spec.uniform_dim(), point_seed);

    StageRecord rec;
    rec.t = t;
    rec.theta = theta_t;
    rec.point_seed = point_seed;
    rec.samples = sample(spec, theta_t, points);
    rec.log_target = target.log_density_rows(rec.samples);
    rec.stage_log_weights = rec.log_target - log_density_rows(spec, theta_t, rec.samples);
    for (Eigen::Index i = 0; i < rec.stage_log_weights.size(); ++i) {
        const double lw = rec.stage_log_weights[i];
        if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
            throw RunError("stage " + std::to_string(t) + ": non-finite log weight at sample " +
                           std::to_string(i) + " (target density " + std::to_string(rec.log_target[i]) + ")");
    }
    return rec;
}

Eigen::VectorXd normalized_weights(const Eigen::VectorXd& log_weights)
{
    const double lse = log_sum_exp(log_weights);
    if (!std::isfinite(lse)) throw DegenerateWeights("all self-normalized weights are zero or non-finite");
    return (log_weights.array() - lse).exp().matrix();
}

ParameterUpdate parameter_update(const StageRecord& record, const FamilySpec& spec, const HStatistic& h,
                                 WeightMode mode)
{
    const Eigen::VectorXd& lw = record.stage_log_weights;
    QMAMIS_REQUIRE(lw.size() == record.samples.rows() && lw.size() > 0, InvalidArgument,
                   "parameter_update: stage record is not populated");

    Eigen::VectorXd coeff;
    if (mode == WeightMode::SelfNormalized) {
        coeff = normalized_weights(lw);
    } else {
        const double m = lw.maxCoeff();
        const double scale = std::exp(m) / static_cast<double>(lw.size());
        if (!std::isfinite(m) || !std::isfinite(scale) || scale == 0.0) return {record.theta, true};
        coeff = (lw.array() - m).exp().matrix() * scale;
    }

    const Eigen::VectorXd next = weighted_h(record.samples, coeff, h);
    if (!next.allFinite()) return {record.theta, true};
    try {
        return {ProposalParam::from_theta(spec, next), false};
    } catch (const InvalidParameter&) {
        return {record.theta, true};
    } catch (const SingularProposal&) {
        return {record.theta, true};
    }
}

Trace run_mamis(const Target& target, const FamilySpec& spec, const ProposalParam& theta_1,
                const std::vector<std::size_t>& schedule, SamplerKind sampler, const HStatistic& h,
                std::uint64_t master_seed)
{
    if (!target.normalized())
        throw InvalidArgument("target '" + target.name() +
                              "' is unnormalized; use run_self_normalized_mamis (self-normalized MAMIS)");
    return run_adaptive(target, spec, theta_1, schedule, sampler, h, master_seed, WeightMode::Unnormalized);
}

Trace run_self_normalized_mamis(const Target& target, const FamilySpec& spec, const ProposalParam& theta_1,
                                const std::vector<std::size_t>& schedule, SamplerKind sampler,
                                const HStatistic& h, std::uint64_t master_seed)
{
    return run_adaptive(target, spec, theta_1, schedule, sampler, h, master_seed, WeightMode::SelfNormalized);
}

Trace recycle_weights(Trace trace)
{
    const std::size_t T = trace.stages.size();
    QMAMIS_REQUIRE(T >= 1, InvalidArgument, "recycle_weights: trace has no stages");
    const FamilySpec& spec = trace.spec;

    std::size_t omega = 0;
    for (const auto& s : trace.stages) {
        QMAMIS_REQUIRE(s.size() >= 1 && s.stage_log_weights.size() == s.samples.rows(), InvalidArgument,
                       "recycle_weights: stage " + std::to_string(s.t) + " is not populated");
        omega += s.size();
    }
    trace.omega_T = omega;

    // ln(N_l / Omega_T) is exactly 0 when T = 1.
    std::vector<double> log_share(T);
    for (std::size_t l = 0; l < T; ++l)
        log_share[l] = std::log(static_cast<double>(trace.stages[l].size()) / static_cast<double>(omega));

    // Canonical summation order keyed by (theta_l, N_l).
    std::vector<std::size_t> order(T);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ta = trace.stages[a].theta.theta();
        const auto& tb = trace.stages[b].theta.theta();
        if (std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end())) return true;
        if (std::lexicographical_compare(tb.begin(), tb.end(), ta.begin(), ta.end())) return false;
        return trace.stages[a].size() < trace.stages[b].size();
    });

    trace.recycled_log_weights.assign(T, Eigen::VectorXd());
    for (std::size_t t = 0; t < T; ++t) {
        const StageRecord& st = trace.stages[t];
        const auto n = st.samples.rows();
        Eigen::MatrixXd terms(n, static_cast<Eigen::Index>(T));
        if (spec.family() == Family::GaussianFixedCov) {
            const Eigen::MatrixXd w = whiten_rows(spec, st.samples);
            for (std::size_t k = 0; k < T; ++k) {
                const std::size_t l = order[k];
                terms.col(static_cast<Eigen::Index>(k)) =
                    log_density_whitened(spec, trace.stages[l].theta, w).array() + log_share[l];
            }
        } else {
            for (std::size_t k = 0; k < T; ++k) {
                const std::size_t l = order[k];
                terms.col(static_cast<Eigen::Index>(k)) =
                    log_density_rows(spec, trace.stages[l].theta, st.samples).array() + log_share[l];
            }
        }
        Eigen::VectorXd out(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = terms.row(i).maxCoeff();
            double s = 0.0;
            for (Eigen::Index k = 0; k < terms.cols(); ++k) s += std::exp(terms(i, k) - m);
            out[i] = st.log_target[i] - (m + std::log(s));
        }
        trace.recycled_log_weights[t] = std::move(out);
    }
    return trace;
}

namespace {

Eigen::VectorXd psi_at(const Integrand& psi, const StageRecord& st, Eigen::Index i)
{
    Eigen::VectorXd v = psi(st.samples.row(i).transpose());
    if (!v.allFinite())
        throw EstimateError("integrand '" + psi.name() + "' is non-finite at stage " + std::to_string(st.t) +
                            ", sample " + std::to_string(i));
    return v;
}

Estimate make_estimate(const Trace& trace, Eigen::VectorXd value, std::string method)
{
    Estimate e;
    e.value = std::move(value);
    e.method = std::move(method);
    e.T = trace.stages.size();
    e.schedule = trace.schedule;
    e.mean_budget = static_cast<double>(trace.omega_T) / static_cast<double>(e.T);
    return e;
}

} // namespace

Estimate mamis_estimate(const Trace& trace, const Integrand& psi)
{
    QMAMIS_REQUIRE(trace.recycled(), InvalidArgument, "mamis_estimate: run recycle_weights first");
    const std::size_t k = psi.output_dim(trace.spec.dim());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    const double omega = static_cast<double>(trace.omega_T);

    for (std::size_t t = 0; t < trace.stages.size(); ++t) {
        const StageRecord& st = trace.stages[t];
        const Eigen::VectorXd& rlw = trace.recycled_log_weights[t];
        Eigen::VectorXd w;
        double stage_factor;
        if (trace.mode == WeightMode::SelfNormalized) {
            w = normalized_weights(rlw);
            stage_factor = static_cast<double>(st.size()) / omega;
        } else {
            w = rlw.array().exp().matrix();
            stage_factor = 1.0 / omega;
        }
        Eigen::VectorXd stage_sum = Eigen::VectorXd::Zero(acc.size());
        double w_sum = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            stage_sum += w[i] * psi_at(psi, st, i);
            w_sum += w[i];
        }
        // dividing by the weight sum accumulated in the same order makes psi == 1 exactly 1
        if (trace.mode == WeightMode::SelfNormalized) stage_sum /= w_sum;
        acc += stage_factor * stage_sum;
    }
    return make_estimate(trace, std::move(acc),
                         trace.mode == WeightMode::SelfNormalized ? "sn_mamis" : "mamis");
}

Estimate auxiliary_estimate(const Trace& trace, const ProposalParam& theta_star, const Integrand& psi)
{
    QMAMIS_REQUIRE(!trace.stages.empty(), InvalidArgument, "auxiliary_estimate: empty trace");
    const std::size_t k = psi.output_dim(trace.spec.dim());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    std::size_t omega = 0;
    for (const auto& st : trace.stages) {
        const Eigen::VectorXd lq = log_density_rows(trace.spec, theta_star, st.samples);
        for (Eigen::Index i = 0; i < lq.size(); ++i)
            acc += std::exp(st.log_target[i] - lq[i]) * psi_at(psi, st, i);
        omega += st.size();
    }
    acc /= static_cast<double>(omega);
    Estimate e = make_estimate(trace, std::move(acc), "auxiliary");
    e.mean_budget = static_cast<double>(omega) / static_cast<double>(e.T);
    return e;
}

PilotResult pilot_mean(const Target& target, const FamilySpec& spec, std::size_t stages,
                       std::size_t points_per_stage, std::size_t reps, SamplerKind sampler, std::uint64_t seed)
{
    QMAMIS_REQUIRE(spec.adapts_covariance(), InvalidArgument, "pilot runs need a mean+covariance family");
    QMAMIS_REQUIRE(stages >= 1 && points_per_stage >= 1 && reps >= 1, InvalidArgument,
                   "pilot budgets must be positive");
    const auto d = static_cast<Eigen::Index>(spec.dim());
    const ProposalParam theta_1 =
        ProposalParam::from_moments(spec, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
    const std::vector<std::size_t> schedule(stages, points_per_stage);
    const HStatistic h = HStatistic::pilot(spec.dim());
    const Integrand identity = integrand_registry("identity");

    PilotResult out{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
    for (std::size_t r = 0; r < reps; ++r) {
        const Trace trace =
            run_self_normalized_mamis(target, spec, theta_1, schedule, sampler, h, derive_seed(seed, r));
        out.mean += mamis_estimate(trace, identity).value;
        out.cov += trace.next_theta->cov();
    }
    out.mean /= static_cast<double>(reps);
    out.cov /= static_cast<double>(reps);
    return out;
}

void write_trace_csv(std::ostream& os, const Trace& trace)
{
    const auto d = static_cast<Eigen::Index>(trace.spec.dim());
    os << "stage,sample_index";
    for (Eigen::Index j = 0; j < d; ++j) os << ",x" << (j + 1);
    os << ",stage_log_weight,recycled_log_weight\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (std::size_t t = 0; t < trace.stages.size(); ++t) {
        const auto& st = trace.stages[t];
        for (Eigen::Index i = 0; i < st.samples.rows(); ++i) {
            os << st.t << ',' << i;
            for (Eigen::Index j = 0; j < d; ++j) put(st.samples(i, j));
            put(st.stage_log_weights[i]);
            if (trace.recycled()) put(trace.recycled_log_weights[t][i]);
            else os << ',';
            os << '\n';
        }
    }
}

} // namespace qmamis
