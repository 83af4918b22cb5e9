#include "specbal/walk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "specbal/errors.hpp"
#include "specbal/spectral.hpp"

namespace specbal {

StepDistribution StepDistribution::gaussian(const SymMatrix& covariance) {
    if (!covariance.positive_definite()) {
        throw ConfigError("gaussian step covariance must be positive definite");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(covariance.m());
    if (llt.info() != Eigen::Success) {
        throw ConfigError("covariance factorization failed");
    }
    StepDistribution d;
    d.kind_ = Kind::Gaussian;
    d.dim_ = covariance.dim();
    d.factor_ = llt.matrixL();
    return d;
}

StepDistribution StepDistribution::finite_support(std::vector<Eigen::VectorXd> points,
                                                  std::vector<double> probabilities) {
    if (points.empty() || points.size() != probabilities.size()) {
        throw ConfigError("finite support needs matching nonempty points and probabilities");
    }
    const int dim = static_cast<int>(points.front().size());
    double total = 0.0;
    double scale = 1.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim) throw ConfigError("support points have mixed dimensions");
        if (!points[i].allFinite()) throw ConfigError("support points must be finite");
        if (probabilities[i] < 0.0) throw ConfigError("probabilities must be nonnegative");
        total += probabilities[i];
        mean += probabilities[i] * points[i];
        scale = std::max(scale, points[i].lpNorm<Eigen::Infinity>());
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ConfigError("probabilities must sum to 1");
    }
    if (mean.lpNorm<Eigen::Infinity>() > 1e-12 * scale) {
        throw ConfigError("step distribution must have mean zero");
    }

    StepDistribution d;
    d.kind_ = Kind::FiniteSupport;
    d.dim_ = dim;
    d.points_ = std::move(points);
    d.cum_prob_.resize(d.points_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < d.points_.size(); ++i) {
        acc += probabilities[i];
        d.cum_prob_[i] = acc;
    }
    d.cum_prob_.back() = 1.0;
    return d;
}

Eigen::VectorXd StepDistribution::sample(CounterRng& rng) const {
    if (kind_ == Kind::Gaussian) {
        return factor_ * gaussian_vector(rng, static_cast<int>(factor_.cols()));
    }
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum_prob_.begin(), cum_prob_.end(), u);
    const std::size_t idx =
        std::min<std::size_t>(it - cum_prob_.begin(), points_.size() - 1);
    return points_[idx];
}

Eigen::MatrixXd StepDistribution::covariance() const {
    if (kind_ == Kind::Gaussian) return factor_ * factor_.transpose();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim_, dim_);
    double prev = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const double p = cum_prob_[i] - prev;
        prev = cum_prob_[i];
        cov += p * points_[i] * points_[i].transpose();
    }
    return cov;
}

StepDistribution StepDistribution::pushforward(const Eigen::MatrixXd& a) const {
    if (a.cols() != dim_ || a.rows() != dim_) {
        throw ConfigError("pushforward map must be square in the walk dimension");
    }
    StepDistribution d = *this;
    if (kind_ == Kind::Gaussian) {
        d.factor_ = a * factor_;
    } else {
        for (Eigen::VectorXd& p : d.points_) p = a * p;
    }
    return d;
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "round_robin") return Strategy::round_robin();
    if (name == "uniform_random") return Strategy::uniform_random();
    if (name == "max_radial_variance") return Strategy::max_radial_variance();
    if (name == "min_radial_variance") return Strategy::min_radial_variance();
    if (name.rfind("fixed", 0) == 0) {
        int idx = 0;
        if (name.size() > 5) {
            if (name[5] != ':') throw ConfigError("unknown strategy: " + name);
            const char* first = name.data() + 6;
            const char* last = name.data() + name.size();
            auto [ptr, ec] = std::from_chars(first, last, idx);
            if (ec != std::errc{} || ptr != last || first == last) {
                throw ConfigError("unknown strategy: " + name);
            }
        }
        return Strategy::fixed(idx);
    }
    throw ConfigError("unknown strategy: " + name);
}

std::string strategy_name(const Strategy& s) {
    switch (s.kind) {
        case Strategy::Kind::Fixed: return "fixed:" + std::to_string(s.fixed_index);
        case Strategy::Kind::RoundRobin: return "round_robin";
        case Strategy::Kind::UniformRandom: return "uniform_random";
        case Strategy::Kind::MaxRadialVariance: return "max_radial_variance";
        case Strategy::Kind::MinRadialVariance: return "min_radial_variance";
        case Strategy::Kind::Custom: return "custom";
    }
    return "unknown";
}

namespace {

struct WalkContext {
    const std::vector<StepDistribution>* dists = nullptr;
    std::vector<Eigen::MatrixXd> observed_cov;  // covariances of observed increments
    Eigen::MatrixXd precond;                    // empty when unused
    bool has_precond = false;
    int dim = 0;
};

void validate_common(const WalkConfig& config) {
    if (config.distributions.empty()) throw ConfigError("no step distributions given");
    const int d = config.distributions.front().dim();
    for (const StepDistribution& s : config.distributions) {
        if (s.dim() != d) throw ConfigError("step distributions have mixed dimensions");
    }
    if (config.preconditioner.size() != 0 &&
        (config.preconditioner.rows() != d || config.preconditioner.cols() != d)) {
        std::ostringstream os;
        os << "preconditioner must be " << d << "x" << d << ", got "
           << config.preconditioner.rows() << "x" << config.preconditioner.cols();
        throw ConfigError(os.str());
    }
    if (config.n_walks < 1) throw ConfigError("n_walks must be at least 1");
    if (config.t_max < 1) throw ConfigError("t_max must be at least 1");
    const int l = static_cast<int>(config.distributions.size());
    if (config.strategy.kind == Strategy::Kind::Fixed &&
        (config.strategy.fixed_index < 0 || config.strategy.fixed_index >= l)) {
        throw ConfigError("fixed strategy index out of range");
    }
    if (config.strategy.kind == Strategy::Kind::Custom && !config.strategy.custom) {
        throw ConfigError("custom strategy has no callback");
    }
}

WalkContext make_context(const WalkConfig& config) {
    WalkContext ctx;
    ctx.dists = &config.distributions;
    ctx.dim = config.distributions.front().dim();
    ctx.has_precond = config.preconditioner.size() != 0;
    if (ctx.has_precond) ctx.precond = config.preconditioner;
    for (const StepDistribution& s : config.distributions) {
        Eigen::MatrixXd c = s.covariance();
        if (ctx.has_precond) c = ctx.precond * c * ctx.precond.transpose();
        ctx.observed_cov.push_back(std::move(c));
    }
    return ctx;
}

int choose_index(const Strategy& strategy, std::int64_t t, const Eigen::VectorXd& y,
                 const WalkContext& ctx, CounterRng& rng) {
    const int l = static_cast<int>(ctx.dists->size());
    switch (strategy.kind) {
        case Strategy::Kind::Fixed:
            return strategy.fixed_index;
        case Strategy::Kind::RoundRobin:
            return static_cast<int>(t % l);
        case Strategy::Kind::UniformRandom:
            return static_cast<int>(rng.below(static_cast<std::uint64_t>(l)));
        case Strategy::Kind::MaxRadialVariance:
        case Strategy::Kind::MinRadialVariance: {
            if (y.squaredNorm() == 0.0) return 0;
            int best = 0;
            double best_val = y.dot(ctx.observed_cov[0] * y);
            for (int i = 1; i < l; ++i) {
                const double val = y.dot(ctx.observed_cov[i] * y);
                const bool better = strategy.kind == Strategy::Kind::MaxRadialVariance
                                        ? val > best_val
                                        : val < best_val;
                if (better) {
                    best = i;
                    best_val = val;
                }
            }
            return best;
        }
        case Strategy::Kind::Custom:
            return strategy.custom(t, y, ctx.observed_cov);
    }
    return 0;
}

struct WalkOutcome {
    std::int64_t last_return = 0;
    std::int64_t first_exit = 0;
};

WalkOutcome run_walk(const WalkConfig& config, const WalkContext& ctx, int walk_index) {
    CounterRng rng(config.seed, static_cast<std::uint64_t>(walk_index));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(ctx.dim);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(ctx.dim);
    const double r_sq = config.return_radius * config.return_radius;
    WalkOutcome out;
    for (std::int64_t t = 1; t <= config.t_max; ++t) {
        const int idx = choose_index(config.strategy, t - 1, y, ctx, rng);
        const Eigen::VectorXd step = (*ctx.dists)[static_cast<std::size_t>(idx)].sample(rng);
        if (ctx.has_precond) {
            x += step;
            y += ctx.precond * step;
        } else {
            x += step;
            y = x;
        }
        const double n_sq = y.squaredNorm();
        if (n_sq <= r_sq) {
            out.last_return = t;
        } else if (out.first_exit == 0) {
            out.first_exit = t;
        }
    }
    return out;
}

WalkStats simulate_impl(const WalkConfig& config, bool parallel) {
    validate_common(config);
    if (!(config.return_radius > 0.0)) throw ConfigError("return_radius must be positive");
    for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
        if (config.checkpoints[c] < 1 || config.checkpoints[c] > config.t_max) {
            throw ConfigError("checkpoints must lie in [1, t_max]");
        }
        if (c > 0 && config.checkpoints[c] <= config.checkpoints[c - 1]) {
            throw ConfigError("checkpoints must be strictly increasing");
        }
    }

    const WalkContext ctx = make_context(config);
    const int n = config.n_walks;
    std::vector<std::int64_t> last_return(n), first_exit(n);

#pragma omp parallel for schedule(static) if (parallel)
    for (int w = 0; w < n; ++w) {
        const WalkOutcome out = run_walk(config, ctx, w);
        last_return[w] = out.last_return;
        first_exit[w] = out.first_exit;
    }

    WalkStats stats;
    stats.checkpoints = config.checkpoints;
    stats.last_return = std::move(last_return);
    stats.first_exit = std::move(first_exit);
    stats.t_max = config.t_max;
    stats.n_walks = n;
    stats.seed = config.seed;
    for (std::int64_t T : stats.checkpoints) {
        int count = 0;
        for (std::int64_t lr : stats.last_return) {
            if (lr > T) ++count;
        }
        const double p = static_cast<double>(count) / n;
        stats.p_hat.push_back(p);
        stats.std_err.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    return stats;
}

double phi(const Eigen::VectorXd& y, double alpha) {
    const double r = y.norm();
    if (r <= 1.0) return 1.0;
    return std::pow(r, -alpha);
}

}  // namespace

WalkStats simulate_walks(const WalkConfig& config) { return simulate_impl(config, true); }

WalkStats simulate_walks_reference(const WalkConfig& config) {
    return simulate_impl(config, false);
}

DriftEstimate lyapunov_drift(const StepDistribution& dist, double alpha,
                             const Eigen::VectorXd& x, std::int64_t n_samples,
                             std::uint64_t seed) {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (x.size() != dist.dim()) throw ConfigError("point dimension does not match distribution");
    if (n_samples < 1) throw ConfigError("need at least one sample");

    const double phi_x = phi(x, alpha);
    constexpr std::int64_t kChunk = 8192;
    const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;

    std::vector<double> chunk_mean(static_cast<std::size_t>(n_chunks), 0.0);
    std::vector<double> chunk_m2(static_cast<std::size_t>(n_chunks), 0.0);
    std::vector<std::int64_t> chunk_n(static_cast<std::size_t>(n_chunks), 0);

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        CounterRng rng(seed, static_cast<std::uint64_t>(c));
        const std::int64_t count = std::min(kChunk, n_samples - c * kChunk);
        double mean = 0.0, m2 = 0.0;
        for (std::int64_t i = 0; i < count; ++i) {
            const double value = phi(x + dist.sample(rng), alpha) - phi_x;
            const double delta = value - mean;
            mean += delta / static_cast<double>(i + 1);
            m2 += delta * (value - mean);
        }
        chunk_mean[static_cast<std::size_t>(c)] = mean;
        chunk_m2[static_cast<std::size_t>(c)] = m2;
        chunk_n[static_cast<std::size_t>(c)] = count;
    }

    // Serial pairwise combination in chunk order keeps the result independent
    // of the thread count.
    double mean = 0.0, m2 = 0.0;
    std::int64_t n = 0;
    for (std::int64_t c = 0; c < n_chunks; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const double delta = chunk_mean[ci] - mean;
        const std::int64_t nn = n + chunk_n[ci];
        m2 += chunk_m2[ci] +
              delta * delta * static_cast<double>(n) * static_cast<double>(chunk_n[ci]) /
                  static_cast<double>(nn);
        mean += delta * static_cast<double>(chunk_n[ci]) / static_cast<double>(nn);
        n = nn;
    }

    DriftEstimate est;
    est.mean = mean;
    est.n_samples = n;
    est.std_err = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))
                        : 0.0;
    return est;
}

double locate_drift_radius(const StepDistribution& dist, double alpha,
                           std::int64_t n_samples, std::uint64_t seed, double r_lo,
                           double r_hi, double rel_tol) {
    if (!(0.0 < r_lo && r_lo < r_hi)) throw ConfigError("need 0 < r_lo < r_hi");
    const Eigen::VectorXd dir = sym_eig(dist.covariance()).vectors.col(0);

    const auto negative_there = [&](double r) {
        const DriftEstimate e = lyapunov_drift(dist, alpha, r * dir, n_samples, seed);
        return e.mean + 3.0 * e.std_err <= 0.0;
    };

    if (negative_there(r_lo)) return r_lo;
    if (!negative_there(r_hi)) {
        std::ostringstream os;
        os << "drift estimate is not negative by 3 standard errors even at radius " << r_hi;
        throw DegenerateError(os.str());
    }
    while (r_hi / r_lo > 1.0 + rel_tol) {
        const double mid = std::sqrt(r_lo * r_hi);
        if (negative_there(mid)) {
            r_hi = mid;
        } else {
            r_lo = mid;
        }
    }
    return r_hi;
}

ExitStats exit_time_stats(const WalkConfig& config, double R, double delta) {
    validate_common(config);
    if (!(R > 0.0)) throw ConfigError("exit radius must be positive");
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");

    ExitStats stats;
    stats.stay_cutoff = static_cast<std::int64_t>(std::ceil(std::pow(R, 2.0 + delta)));
    if (config.t_max < stats.stay_cutoff) {
        std::ostringstream os;
        os << "t_max = " << config.t_max << " is below the stay cutoff "
           << stats.stay_cutoff << ", the staying fraction would be truncated";
        throw ConfigError(os.str());
    }

    const WalkContext ctx = make_context(config);
    const int n = config.n_walks;
    std::vector<std::int64_t> exits(n);
    const double r_sq = R * R;

#pragma omp parallel for schedule(static)
    for (int w = 0; w < n; ++w) {
        CounterRng rng(config.seed, static_cast<std::uint64_t>(w));
        Eigen::VectorXd x = Eigen::VectorXd::Zero(ctx.dim);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(ctx.dim);
        std::int64_t exit_t = config.t_max;  // censored marker
        for (std::int64_t t = 1; t <= config.t_max; ++t) {
            const int idx = choose_index(config.strategy, t - 1, y, ctx, rng);
            const Eigen::VectorXd step =
                (*ctx.dists)[static_cast<std::size_t>(idx)].sample(rng);
            if (ctx.has_precond) {
                x += step;
                y += ctx.precond * step;
            } else {
                x += step;
                y = x;
            }
            if (y.squaredNorm() > r_sq) {
                exit_t = t;
                break;
            }
        }
        exits[w] = exit_t;
    }

    double sum = 0.0;
    int stayed = 0, censored = 0;
    for (int w = 0; w < n; ++w) {
        sum += static_cast<double>(exits[w]);
        if (exits[w] > stats.stay_cutoff) ++stayed;
        if (exits[w] == config.t_max) ++censored;  // may rarely be a real exit at t_max
    }
    stats.mean_exit_time = sum / n;
    stats.stay_fraction = static_cast<double>(stayed) / n;
    stats.censored = censored;
    stats.exit_times = std::move(exits);
    return stats;
}

double exit_time_constant(const std::vector<StepDistribution>& distributions) {
    if (distributions.empty()) throw ConfigError("no distributions given");
    double c = 0.0, K = 0.0;
    for (std::size_t i = 0; i < distributions.size(); ++i) {
        const double tr = distributions[i].covariance().trace();
        if (!(tr > 0.0)) throw ConfigError("covariance trace must be positive");
        c = i == 0 ? tr : std::min(c, tr);
        K = std::max(K, tr);
    }
    const double Q = 8.0 * K / c;
    return 4.0 * (1.0 + Q) * (1.0 + Q) / c;
}

std::optional<double> fit_loglog_slope(const std::vector<std::int64_t>& t,
                                       const std::vector<double>& p) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size() && i < p.size(); ++i) {
        if (t[i] > 0 && p[i] > 0.0) {
            xs.push_back(std::log(static_cast<double>(t[i])));
            ys.push_back(std::log(p[i]));
        }
    }
    if (xs.size() < 2) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

TransienceReport transience_experiment(const std::vector<StepDistribution>& distributions,
                                       const Eigen::MatrixXd& a,
                                       const std::vector<Strategy>& strategies,
                                       const WalkConfig& base_config) {
    TransienceReport report;
    for (const Strategy& s : strategies) {
        WalkConfig cfg = base_config;
        cfg.distributions = distributions;
        cfg.strategy = s;
        cfg.preconditioner = a;
        TransienceRow row;
        row.strategy = strategy_name(s);
        row.stats = simulate_walks(cfg);
        row.slope = fit_loglog_slope(row.stats.checkpoints, row.stats.p_hat);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace specbal
