#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specbal/rng.hpp"
#include "specbal/sym_matrix.hpp"

namespace specbal {

// A centered step distribution. Gaussian kind stores a factor L with
// covariance = L L^T and samples L z, z iid standard normal; pushing forward
// by A therefore reproduces A * sample() with the same RNG stream up to
// roundoff. FiniteSupport samples its points by inverse CDF on one uniform.
class StepDistribution {
public:
    enum class Kind { Gaussian, FiniteSupport };

    static StepDistribution gaussian(const SymMatrix& covariance);
    static StepDistribution finite_support(std::vector<Eigen::VectorXd> points,
                                           std::vector<double> probabilities);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    Eigen::VectorXd sample(CounterRng& rng) const;
    Eigen::MatrixXd covariance() const;
    StepDistribution pushforward(const Eigen::MatrixXd& a) const;

private:
    StepDistribution() = default;

    Kind kind_ = Kind::Gaussian;
    int dim_ = 0;
    Eigen::MatrixXd factor_;  // Gaussian: covariance = factor * factor^T
    std::vector<Eigen::VectorXd> points_;
    std::vector<double> cum_prob_;  // inclusive prefix sums
};

// Step-choice rule. Decisions see only the observed trajectory so far (the
// preconditioned process when a preconditioner is set), the observed step
// covariances, and per-walk private randomness.
struct Strategy {
    enum class Kind {
        Fixed,               // always index `fixed_index`
        RoundRobin,          // t mod l
        UniformRandom,       // one uniform draw per step
        MaxRadialVariance,   // argmax_i of y^T C_i y / |y|^2, index 0 at y=0
        MinRadialVariance,   // argmin of the same
        Custom,              // user hook: (t, y, covariances) -> index
    };

    Kind kind = Kind::RoundRobin;
    int fixed_index = 0;
    std::function<int(std::int64_t t, const Eigen::VectorXd& y,
                      const std::vector<Eigen::MatrixXd>& covariances)>
        custom;

    static Strategy fixed(int i) { return {Kind::Fixed, i, nullptr}; }
    static Strategy round_robin() { return {Kind::RoundRobin, 0, nullptr}; }
    static Strategy uniform_random() { return {Kind::UniformRandom, 0, nullptr}; }
    static Strategy max_radial_variance() { return {Kind::MaxRadialVariance, 0, nullptr}; }
    static Strategy min_radial_variance() { return {Kind::MinRadialVariance, 0, nullptr}; }
};

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(const Strategy& s);

struct WalkConfig {
    std::vector<StepDistribution> distributions;
    Strategy strategy;
    // Optional preconditioner: statistics and strategy decisions are taken on
    // the observed process Y_t = precond * X_t. Empty matrix means identity.
    Eigen::MatrixXd preconditioner;
    std::int64_t t_max = 0;
    double return_radius = 0.0;
    std::vector<std::int64_t> checkpoints;  // ascending, each <= t_max
    int n_walks = 0;
    std::uint64_t seed = 0;
};

struct WalkStats {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> p_hat;    // fraction of walks returning to the ball after T
    std::vector<double> std_err;  // binomial standard error per checkpoint
    std::vector<std::int64_t> last_return;  // per walk; 0 when never inside after t=0
    std::vector<std::int64_t> first_exit;   // per walk; 0 when never outside by t_max
    std::int64_t t_max = 0;
    int n_walks = 0;
    std::uint64_t seed = 0;
};

// Simulates n_walks independent trajectories from the origin. Walk w draws
// from a stream keyed by (seed, w), so results do not depend on scheduling.
// simulate_walks runs the walks in parallel; simulate_walks_reference is the
// serial implementation kept for testing, and the two agree bit for bit.
WalkStats simulate_walks(const WalkConfig& config);
WalkStats simulate_walks_reference(const WalkConfig& config);

// Monte Carlo estimate of E[phi(x + Z) - phi(x)] for phi(y) = min(|y|^-alpha, 1)
// (phi(0) = 1), Z ~ dist. Returns mean and standard error of the mean.
// Deterministic for fixed seed independent of thread count: samples are drawn
// in fixed-size chunks with per-chunk streams and combined in chunk order.
struct DriftEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::int64_t n_samples = 0;
};
DriftEstimate lyapunov_drift(const StepDistribution& dist, double alpha,
                             const Eigen::VectorXd& x, std::int64_t n_samples,
                             std::uint64_t seed = 0);

// Smallest radius (up to rel_tol) along the top-variance direction of dist at
// which the drift estimate is <= 0 by at least 3 standard errors, located by
// bisection on [r_lo, r_hi]. Throws DegenerateError when even r_hi fails.
double locate_drift_radius(const StepDistribution& dist, double alpha,
                           std::int64_t n_samples, std::uint64_t seed, double r_lo,
                           double r_hi, double rel_tol = 0.05);

// First-exit times from the ball of radius R, plus the fraction of walks
// still inside at time ceil(R^(2+delta)). Walks are capped at config.t_max;
// censored walks count as "still inside" everywhere, so reported means are
// underestimates and the censored count is exposed.
struct ExitStats {
    double mean_exit_time = 0.0;
    double stay_fraction = 0.0;     // still inside at ceil(R^(2+delta))
    std::int64_t stay_cutoff = 0;   // ceil(R^(2+delta))
    int censored = 0;               // walks that never left by t_max
    std::vector<std::int64_t> exit_times;  // per walk, t_max when censored
};
ExitStats exit_time_stats(const WalkConfig& config, double R, double delta);

// Explicit constant from the exit-time bound E[tau] <= Q' R^2 for families
// with trace bounds 0 < c <= Tr(M_i) <= K: Q = 8 K / c, Q' = 4 (1 + Q)^2 / c.
double exit_time_constant(const std::vector<StepDistribution>& distributions);

// Least-squares slope of log(p) against log(t), skipping p <= 0 entries.
// Requires at least two usable points, else returns nullopt.
std::optional<double> fit_loglog_slope(const std::vector<std::int64_t>& t,
                                       const std::vector<double>& p);

// Runs simulate_walks on the observed process Y = A X for each requested
// strategy and fits the decay slope of the return-frequency curve.
struct TransienceRow {
    std::string strategy;
    WalkStats stats;
    std::optional<double> slope;
};
struct TransienceReport {
    std::vector<TransienceRow> rows;
};
TransienceReport transience_experiment(const std::vector<StepDistribution>& distributions,
                                       const Eigen::MatrixXd& a,
                                       const std::vector<Strategy>& strategies,
                                       const WalkConfig& base_config);

}  // namespace specbal
