#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specbal/balancer.hpp"
#include "specbal/errors.hpp"
#include "specbal/matrix_io.hpp"
#include "specbal/rng.hpp"
#include "specbal/sharpness.hpp"
#include "specbal/spectral.hpp"
#include "specbal/walk.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitIterationLimit = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerification = 4;

struct BalanceArgs {
    std::string input;
    int k = 2;
    std::string R = "auto";
    double tol = 1e-6;
    int max_iter = 400;
    std::string out;
    std::string trace;
    std::uint64_t seed = 0;
};

struct VerifyArgs {
    std::string input;
    std::string a_file;
    int k = 2;
};

struct SharpnessArgs {
    int d = 0;
    int k = 0;
    double epsilon = 0.0;  // 0 means default 1/(2d)
    int trials = 1000;
    std::string out;
    std::uint64_t seed = 0;
};

struct SimulateArgs {
    std::string input;
    std::string balancer = "auto";
    int k = 2;
    std::string strategy = "round_robin";
    double radius = 10.0;
    std::vector<std::int64_t> checkpoints;
    int walks = 1000;
    std::int64_t t_max = 0;  // 0 means 4x the last checkpoint
    std::uint64_t seed = 0;
    std::string csv;
    std::string summary;
};

json result_to_json(const specbal::BalanceResult& res, int k) {
    json j;
    j["A"] = specbal::matrix_to_json(res.A);
    j["final_score"] = res.final_score;
    j["ratios"] = res.per_matrix_ratios;
    j["k"] = k;
    j["status"] = specbal::to_string(res.status);
    j["iterations"] = res.iterations;
    j["R_used"] = res.R_used;
    return j;
}

void write_trace_csv(const specbal::BalanceResult& res, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw specbal::InputError("cannot open trace file: " + path);
    out << "iteration,kind,epsilon,f_before,f_after\n";
    char line[160];
    for (const specbal::StepRecord& s : res.step_log) {
        std::snprintf(line, sizeof(line), "%d,%s,%.17g,%.17g,%.17g\n", s.iteration,
                      s.kind == 'i' ? "interior" : "boundary", s.epsilon, s.f_before,
                      s.f_after);
        out << line;
    }
}

int cmd_balance(const BalanceArgs& args) {
    const specbal::MatrixSet set = specbal::load_matrix_set(args.input);
    specbal::BalanceProblem problem{set, args.k};

    specbal::BalancerConfig config;
    if (args.R == "auto") {
        config.R = 0.0;
    } else {
        config.R = std::stod(args.R);
        if (!(config.R > 1.0)) throw specbal::ConfigError("R must exceed 1");
    }
    config.target_margin = args.tol;
    config.max_iterations = args.max_iter;
    config.seed = args.seed;

    const specbal::BalanceResult res = specbal::balance(problem, config);

    json j = result_to_json(res, args.k);
    j["manifest"] = specbal::make_manifest(
        "balance",
        {{"k", args.k}, {"R", args.R}, {"tol", args.tol}, {"max_iter", args.max_iter}},
        args.seed, {args.input});
    if (!args.out.empty()) specbal::write_json_file(j, args.out);
    if (!args.trace.empty()) write_trace_csv(res, args.trace);

    std::printf("status=%s score=%.12g target=%.12g iterations=%d R=%g\n",
                specbal::to_string(res.status), res.final_score,
                1.0 / args.k - args.tol, res.iterations, res.R_used);
    for (std::size_t i = 0; i < res.per_matrix_ratios.size(); ++i) {
        std::printf("ratio[%zu]=%.12g\n", i, res.per_matrix_ratios[i]);
    }
    return res.status == specbal::BalanceStatus::Converged ? kExitOk : kExitIterationLimit;
}

Eigen::MatrixXd load_a_matrix(const std::string& path) {
    const json j = specbal::read_json_file(path);
    if (j.is_object() && j.contains("A")) return specbal::matrix_from_json(j["A"]);
    if (j.is_array()) return specbal::matrix_from_json(j);
    throw specbal::InputError("expected a matrix array or an object with an \"A\" field in " +
                              path);
}

int cmd_verify(const VerifyArgs& args) {
    const specbal::MatrixSet set = specbal::load_matrix_set(args.input);
    const Eigen::MatrixXd a = load_a_matrix(args.a_file);
    if (a.rows() != set.dim()) {
        throw specbal::InputError("matrix A dimension does not match the input set");
    }
    if (args.k < 2) throw specbal::ConfigError("k must be at least 2");

    const double threshold = 1.0 / args.k;
    bool all_below = true;
    for (int i = 0; i < set.count(); ++i) {
        const double r = specbal::balance_ratio(a, set[i]);
        const bool ok = r < threshold;
        all_below = all_below && ok;
        std::printf("ratio[%d]=%.12g %s\n", i, r, ok ? "ok" : "VIOLATED");
    }
    std::printf("threshold=%.12g verdict=%s\n", threshold, all_below ? "pass" : "fail");
    return all_below ? kExitOk : kExitVerification;
}

int cmd_sharpness(const SharpnessArgs& args) {
    const double eps = args.epsilon > 0.0 ? args.epsilon : 1.0 / (2.0 * args.d);
    const specbal::SharpFamily fam = specbal::sharp_family(args.d, args.k, eps);
    if (!args.out.empty()) specbal::save_matrix_set(fam.as_set(), args.out);

    std::printf("family d=%d k=%d l=%d epsilon=%g\n", fam.d, fam.k, fam.l, fam.epsilon);
    specbal::CounterRng rng(args.seed, 0);
    int found = 0;
    double worst_ratio = 2.0;
    for (int t = 0; t < args.trials; ++t) {
        const Eigen::MatrixXd a = specbal::gaussian_matrix(rng, fam.d, fam.d);
        const specbal::Witness w = specbal::witness_violation(a, fam);
        ++found;
        worst_ratio = std::min(worst_ratio, w.ratio);
        if (t < 5) {
            std::printf("trial %d: member %d violated, ratio %.6f > 1/%d\n", t, w.index,
                        w.ratio, fam.k);
        }
    }
    std::printf("violations found in %d/%d trials, smallest witness ratio %.6f\n", found,
                args.trials, worst_ratio);
    return found == args.trials ? kExitOk : kExitVerification;
}

int cmd_simulate(const SimulateArgs& args) {
    const specbal::MatrixSet set = specbal::load_matrix_set(args.input);
    std::vector<specbal::StepDistribution> dists;
    for (int i = 0; i < set.count(); ++i) {
        dists.push_back(specbal::StepDistribution::gaussian(set[i]));
    }

    Eigen::MatrixXd a;
    if (args.balancer == "auto") {
        specbal::BalanceProblem problem{set, args.k};
        specbal::BalancerConfig config;
        config.seed = args.seed;
        const specbal::BalanceResult res = specbal::balance(problem, config);
        if (res.status != specbal::BalanceStatus::Converged) {
            throw specbal::DegenerateError("balancing did not converge, pass an A file");
        }
        a = res.A;
    } else {
        a = load_a_matrix(args.balancer);
        if (a.rows() != set.dim() || a.cols() != set.dim()) {
            throw specbal::InputError("balancer matrix dimension does not match the input");
        }
    }

    specbal::WalkConfig config;
    config.distributions = dists;
    config.strategy = specbal::strategy_from_name(args.strategy);
    config.preconditioner = a;
    config.return_radius = args.radius;
    config.checkpoints = args.checkpoints;
    if (config.checkpoints.empty()) throw specbal::ConfigError("no checkpoints given");
    config.t_max = args.t_max > 0 ? args.t_max : 4 * config.checkpoints.back();
    config.n_walks = args.walks;
    config.seed = args.seed;

    const specbal::WalkStats stats = specbal::simulate_walks(config);
    const std::optional<double> slope =
        specbal::fit_loglog_slope(stats.checkpoints, stats.p_hat);

    if (!args.csv.empty()) {
        std::ofstream out(args.csv);
        if (!out) throw specbal::InputError("cannot open csv file: " + args.csv);
        out << "strategy,T,p_hat,std_err,n_walks,T_max,seed\n";
        char line[256];
        for (std::size_t i = 0; i < stats.checkpoints.size(); ++i) {
            std::snprintf(line, sizeof(line),
                          "%s,%" PRId64 ",%.17g,%.17g,%d,%" PRId64 ",%" PRIu64 "\n",
                          args.strategy.c_str(), stats.checkpoints[i], stats.p_hat[i],
                          stats.std_err[i], stats.n_walks, stats.t_max, stats.seed);
            out << line;
        }
    }
    if (!args.summary.empty()) {
        json j;
        j["strategy"] = args.strategy;
        j["checkpoints"] = stats.checkpoints;
        j["p_hat"] = stats.p_hat;
        j["std_err"] = stats.std_err;
        j["n_walks"] = stats.n_walks;
        j["t_max"] = stats.t_max;
        if (slope) {
            j["slope"] = *slope;
        } else {
            j["slope"] = nullptr;
        }
        j["manifest"] = specbal::make_manifest(
            "simulate",
            {{"strategy", args.strategy},
             {"radius", args.radius},
             {"walks", args.walks},
             {"t_max", config.t_max},
             {"balancer", args.balancer}},
            args.seed, {args.input});
        specbal::write_json_file(j, args.summary);
    }

    for (std::size_t i = 0; i < stats.checkpoints.size(); ++i) {
        std::printf("T=%" PRId64 " p_hat=%.6g +- %.2g\n", stats.checkpoints[i],
                    stats.p_hat[i], stats.std_err[i]);
    }
    if (slope) {
        std::printf("slope=%.6g\n", *slope);
    } else {
        std::printf("slope=undefined (too few nonzero points)\n");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral balancing of matrix families and adaptive walk experiments"};
    app.require_subcommand(1);

    BalanceArgs bal;
    CLI::App* balance = app.add_subcommand(
        "balance", "Find A making every ratio lambda_1/trace fall below 1/k");
    balance->add_option("--input", bal.input, "matrix set JSON file")->required();
    balance->add_option("--k", bal.k, "balance target parameter, ratios must drop below 1/k")
        ->required();
    balance->add_option("--R", bal.R, "domain aspect bound, a number or 'auto'");
    balance->add_option("--tol", bal.tol, "stop margin below 1/k");
    balance->add_option("--max-iter", bal.max_iter, "iteration budget per R stage");
    balance->add_option("--out", bal.out, "write the result JSON here");
    balance->add_option("--trace", bal.trace, "write a per-step CSV log here");
    balance->add_option("--seed", bal.seed, "random seed");

    VerifyArgs ver;
    CLI::App* verify = app.add_subcommand("verify", "Check an A against a matrix set");
    verify->add_option("--input", ver.input, "matrix set JSON file")->required();
    verify->add_option("--A", ver.a_file, "matrix A file (raw rows or balance output)")
        ->required();
    verify->add_option("--k", ver.k, "threshold parameter")->required();

    SharpnessArgs shp;
    CLI::App* sharpness = app.add_subcommand(
        "sharpness", "Emit the tight diagonal family and hunt for violations");
    sharpness->add_option("--d", shp.d, "dimension")->required();
    sharpness->add_option("--k", shp.k, "target parameter, k-1 must divide d")->required();
    sharpness->add_option("--epsilon", shp.epsilon, "off-block entry, default 1/(2d)");
    sharpness->add_option("--trials", shp.trials, "number of random A to test");
    sharpness->add_option("--out", shp.out, "write the family JSON here");
    sharpness->add_option("--seed", shp.seed, "random seed");

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Run adaptive random walks with balanced step covariances");
    simulate->add_option("--input", sim.input, "covariance set JSON file")->required();
    simulate->add_option("--balancer", sim.balancer, "A matrix file, or 'auto' to balance");
    simulate->add_option("--k", sim.k, "balance parameter used with --balancer auto");
    simulate->add_option("--strategy", sim.strategy,
                         "fixed[:i], round_robin, uniform_random, max_radial_variance, "
                         "min_radial_variance");
    simulate->add_option("--radius", sim.radius, "return ball radius");
    simulate->add_option("--checkpoints", sim.checkpoints, "times T to report p_hat at")
        ->delimiter(',')
        ->required();
    simulate->add_option("--walks", sim.walks, "number of independent walks");
    simulate->add_option("--t-max", sim.t_max, "horizon, default 4x last checkpoint");
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--csv", sim.csv, "write per-checkpoint CSV here");
    simulate->add_option("--summary", sim.summary, "write summary JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (balance->parsed()) return cmd_balance(bal);
        if (verify->parsed()) return cmd_verify(ver);
        if (sharpness->parsed()) return cmd_sharpness(shp);
        if (simulate->parsed()) return cmd_simulate(sim);
    } catch (const specbal::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const specbal::InternalError& e) {
        std::cerr << "verification failure: " << e.what() << "\n";
        return kExitVerification;
    } catch (const specbal::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const specbal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
