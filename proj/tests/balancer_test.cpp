#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "specbal/balancer.hpp"
#include "specbal/errors.hpp"
#include "specbal/perturbation.hpp"
#include "specbal/spectral.hpp"

using namespace specbal;

namespace {

MatrixSet identity_family(int d, int count) {
    std::vector<SymMatrix> members;
    for (int i = 0; i < count; ++i) members.emplace_back(Eigen::MatrixXd::Identity(d, d));
    return MatrixSet(members);
}

}  // namespace

TEST_CASE("feasibility window") {
    CounterRng rng(41, 0);
    SUBCASE("k below 2 is a configuration error") {
        BalanceProblem p{MatrixSet(helpers::random_pd_family(rng, 3, 1)), 1};
        CHECK_FALSE(p.feasible());
        CHECK_THROWS_AS(p.require_feasible(), ConfigError);
    }
    SUBCASE("dimension must exceed k") {
        BalanceProblem p{MatrixSet(helpers::random_pd_family(rng, 2, 1)), 2};
        CHECK_FALSE(p.feasible());
        CHECK_THROWS_WITH_AS(p.require_feasible(), doctest::Contains("need d > k"),
                             InfeasibleError);
    }
    SUBCASE("family size capped by floor((d-1)/(k-1))") {
        BalanceProblem p{MatrixSet(helpers::random_pd_family(rng, 3, 3)), 2};
        CHECK_FALSE(p.feasible());
        CHECK_THROWS_WITH_AS(p.require_feasible(), doctest::Contains("floor((d-1)/(k-1))"),
                             InfeasibleError);
    }
    SUBCASE("admissible shapes pass") {
        for (auto [d, k, l] : {std::tuple<int, int, int>{3, 2, 2},
                               {5, 3, 2},
                               {7, 4, 2},
                               {7, 2, 6},
                               {4, 3, 1}}) {
            BalanceProblem p{MatrixSet(helpers::random_pd_family(rng, d, l)), k};
            CHECK(p.feasible());
            CHECK_NOTHROW(p.require_feasible());
        }
    }
}

TEST_CASE("active set selection") {
    std::vector<SymMatrix> members;
    members.emplace_back(Eigen::MatrixXd(Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal()));
    members.emplace_back(Eigen::MatrixXd(Eigen::Vector3d(1.0, 1.0, 1.0).asDiagonal()));
    MatrixSet set(members);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    // Ratios are 0.5 and 1/3: only the first member is active at a tight
    // tolerance, both at a loose one.
    CHECK(active_set(id, set, 1e-8) == std::vector<int>{0});
    CHECK(active_set(id, set, 0.5) == std::vector<int>{0, 1});
}

TEST_CASE("interior direction is orthogonal to the leading eigenvectors") {
    CounterRng rng(42, 0);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 4 + static_cast<int>(rng.below(4));
        const int k = 2 + static_cast<int>(rng.below(2));
        // Keep the stacked constraint rows strictly under d so an orthogonal
        // direction is guaranteed to exist.
        const int l = std::min(2, (d - 1) / (k - 1));
        Eigen::MatrixXd a = normalize_to_domain(
            polar_decompose(helpers::random_pd(rng, d)).stretch);
        MatrixSet set(helpers::random_pd_family(rng, d, l));
        std::vector<int> active;
        for (int i = 0; i < l; ++i) active.push_back(i);

        const Eigen::VectorXd v = interior_direction(a, set, active, k);
        CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
        for (int i : active) {
            const EigResult e = sym_eig(a * set[i].m() * a);
            for (int j = 0; j < k - 1; ++j) {
                CHECK(std::abs(v.dot(e.vectors.col(j))) < 1e-10);
            }
        }
    }
}

TEST_CASE("interior step preserves the pinned eigenpair") {
    CounterRng rng(43, 0);
    const Eigen::MatrixXd a = normalize_to_domain(
        polar_decompose(helpers::random_pd(rng, 4)).stretch);
    SymMatrix m(helpers::random_pd(rng, 4));
    const EigResult e = sym_eig(a * m.m() * a);
    const Eigen::VectorXd q = e.vectors.col(0);

    Eigen::VectorXd v = helpers::random_unit(rng, 4);
    v -= v.dot(q) * q;
    v.normalize();
    CHECK(eigenvector_preservation_check(a, m, v, q, 0.25));
    // Negative control: a direction with mass on q moves the eigenpair.
    CHECK_FALSE(eigenvector_preservation_check(a, m, q, q, 0.25));
}

TEST_CASE("boundary plan postconditions on a fully tight state") {
    CounterRng rng(44, 0);
    const double R = 13.0;
    const double c0 = 0.25;
    // sqrt(2 * 3 * (1 + c0)^2 / c0^2) = sqrt(150) <= 13, so the shifted point
    // is guaranteed admissible at R = 13.
    const double spread_R = std::sqrt(2.0 * 3 * (1 + c0) * (1 + c0) / (c0 * c0));
    REQUIRE(spread_R <= R);

    Eigen::VectorXd s(3);
    s << 1.0, 1.0 / R, 1.0 / (R * R);
    const Eigen::MatrixXd a = helpers::pd_with_spectrum(rng, s);
    MatrixSet set(helpers::random_pd_family(rng, 3, 1));

    const PerturbationPlan plan = boundary_direction(a, set, {0}, 2, R, c0);
    REQUIRE(plan.eta.size() == 3);
    CHECK(plan.eta.norm() > 0.0);
    CHECK(plan.suggested_R == doctest::Approx(spread_R).epsilon(1e-12));
    CHECK((plan.u - u_from_eta(plan.profile, plan.eta)).norm() < 1e-9);
    CHECK(check_u_condition(plan.profile, plan.u, R));
    CHECK(check_eta_condition(plan.profile, plan.eta, R));
    // Every coordinate of the shifted point carries mass.
    CHECK(plan.u.array().square().minCoeff() >= c0 * c0 / 3.0 * (1.0 - 1e-12));
}

TEST_CASE("line search") {
    BalancerConfig config;
    std::vector<SymMatrix> members;
    members.emplace_back(Eigen::MatrixXd(Eigen::Vector3d(2.0, 1.0, 1.0).asDiagonal()));
    MatrixSet set(members);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);

    SUBCASE("accepts the full step on an easy descent direction") {
        const Eigen::Vector3d eta(0.0, 1.0, 0.0);  // orthogonal to the top axis
        const auto res = line_search(id, set, eta, 16.0, config);
        REQUIRE(res.has_value());
        CHECK(res->epsilon == 0.5);
        CHECK(res->f_next == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
        CHECK(res->f_next < balance_score(id, set));
    }
    SUBCASE("zero direction yields no step") {
        CHECK_FALSE(line_search(id, set, Eigen::Vector3d::Zero(), 16.0, config).has_value());
    }
    SUBCASE("successors stay symmetric, normalized, and in the domain") {
        CounterRng rng(45, 0);
        int accepted = 0;
        for (int trial = 0; trial < 30; ++trial) {
            const int d = 3 + static_cast<int>(rng.below(3));
            const Eigen::MatrixXd a = normalize_to_domain(
                polar_decompose(helpers::random_pd(rng, d)).stretch);
            MatrixSet fam(helpers::random_pd_family(rng, d, 2));
            const Eigen::VectorXd eta = helpers::random_unit(rng, d);
            const auto res = line_search(a, fam, eta, 64.0, config);
            if (!res) continue;
            ++accepted;
            CHECK((res->a_next - res->a_next.transpose()).cwiseAbs().maxCoeff() == 0.0);
            const Eigen::VectorXd sv =
                Eigen::JacobiSVD<Eigen::MatrixXd>(res->a_next).singularValues();
            CHECK(std::abs(sv[0] - 1.0) <= 1e-9);
            CHECK(in_domain(res->a_next, 64.0));
            CHECK(res->f_next < balance_score(a, fam));
            CHECK(res->f_next == doctest::Approx(balance_score(res->a_next, fam)));
        }
        CHECK(accepted > 0);
    }
}

TEST_CASE("balance on an already balanced family stops immediately") {
    BalanceProblem problem{identity_family(3, 2), 2};
    const BalanceResult res = balance(problem, BalancerConfig{});
    CHECK(res.status == BalanceStatus::Converged);
    CHECK(res.iterations == 0);
    CHECK(res.step_log.empty());
    CHECK((res.A - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.final_score == doctest::Approx(1.0 / 3.0));
    REQUIRE(res.per_matrix_ratios.size() == 2);
    CHECK(res.per_matrix_ratios[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("balance solves a simple pair and logs monotone progress") {
    std::vector<SymMatrix> members;
    members.emplace_back(Eigen::MatrixXd(Eigen::Vector3d(4.0, 1.0, 0.5).asDiagonal()));
    members.emplace_back(Eigen::MatrixXd::Identity(3, 3));
    BalanceProblem problem{MatrixSet(members), 2};

    const BalanceResult res = balance(problem, BalancerConfig{});
    CHECK(res.status == BalanceStatus::Converged);
    CHECK(res.final_score <= 0.5 - 1e-6);
    for (double r : res.per_matrix_ratios) CHECK(r <= 0.5 - 1e-6);
    CHECK(in_domain(res.A, res.R_used));
    REQUIRE(!res.step_log.empty());
    for (std::size_t i = 0; i < res.step_log.size(); ++i) {
        const StepRecord& rec = res.step_log[i];
        CHECK(rec.f_after < rec.f_before);
        CHECK((rec.kind == 'i' || rec.kind == 'b'));
        CHECK(rec.epsilon > 0.0);
        if (i > 0) CHECK(rec.iteration == res.step_log[i - 1].iteration + 1);
    }
    CHECK(res.final_score == doctest::Approx(res.step_log.back().f_after));
}

TEST_CASE("balance is deterministic") {
    CounterRng rng(46, 0);
    BalanceProblem problem{MatrixSet(helpers::random_pd_family(rng, 5, 2)), 3};
    const BalanceResult r1 = balance(problem, BalancerConfig{});
    const BalanceResult r2 = balance(problem, BalancerConfig{});
    CHECK(r1.status == r2.status);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.final_score == r2.final_score);
    CHECK((r1.A - r2.A).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(r1.step_log.size() == r2.step_log.size());
    for (std::size_t i = 0; i < r1.step_log.size(); ++i) {
        CHECK(r1.step_log[i].epsilon == r2.step_log[i].epsilon);
        CHECK(r1.step_log[i].f_after == r2.step_log[i].f_after);
    }
}

TEST_CASE("balance rejects infeasible problems") {
    CounterRng rng(47, 0);
    BalanceProblem problem{MatrixSet(helpers::random_pd_family(rng, 3, 3)), 2};
    CHECK_THROWS_AS(balance(problem, BalancerConfig{}), InfeasibleError);
}

TEST_CASE("closed-form pair balancing") {
    SUBCASE("known instance hits the closed-form ratios") {
        SymMatrix m1(Eigen::MatrixXd::Identity(3, 3));
        SymMatrix m2(Eigen::MatrixXd(Eigen::Vector3d(4.0, 1.0, 0.5).asDiagonal()));
        const Eigen::MatrixXd a = pair_balance(m1, m2);
        CHECK(balance_ratio(a, m1) == doctest::Approx(1.0 / 2.25).epsilon(1e-12));
        CHECK(balance_ratio(a, m2) == doctest::Approx(1.0 / 2.5).epsilon(1e-12));
    }
    SUBCASE("identical members come out fully isotropic") {
        SymMatrix id(Eigen::MatrixXd::Identity(3, 3));
        const Eigen::MatrixXd a = pair_balance(id, id);
        CHECK(balance_ratio(a, id) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("scaling either input does not change the ratios") {
        CounterRng rng(48, 0);
        SymMatrix m1(helpers::random_pd(rng, 3));
        SymMatrix m2(helpers::random_pd(rng, 3));
        SymMatrix m2s(4.0 * m2.m());
        const Eigen::MatrixXd a = pair_balance(m1, m2);
        const Eigen::MatrixXd as = pair_balance(m1, m2s);
        CHECK(balance_ratio(a, m2) == doctest::Approx(balance_ratio(as, m2s)).epsilon(1e-10));
        CHECK(balance_ratio(a, m1) == doctest::Approx(balance_ratio(as, m1)).epsilon(1e-10));
    }
    SUBCASE("random pairs always land strictly below one half") {
        CounterRng rng(49, 0);
        for (int trial = 0; trial < 50; ++trial) {
            SymMatrix m1(helpers::random_pd(rng, 3));
            SymMatrix m2(helpers::random_pd(rng, 3));
            const Eigen::MatrixXd a = pair_balance(m1, m2);
            CHECK(balance_ratio(a, m1) < 0.5);
            CHECK(balance_ratio(a, m2) < 0.5);
        }
    }
    SUBCASE("iterative balancer agrees that the pair is solvable") {
        CounterRng rng(50, 0);
        std::vector<SymMatrix> members = helpers::random_pd_family(rng, 3, 2);
        const Eigen::MatrixXd direct = pair_balance(members[0], members[1]);
        CHECK(balance_ratio(direct, members[0]) < 0.5);
        CHECK(balance_ratio(direct, members[1]) < 0.5);
        BalanceProblem problem{MatrixSet(members), 2};
        const BalanceResult res = balance(problem, BalancerConfig{});
        CHECK(res.status == BalanceStatus::Converged);
        CHECK(res.final_score <= 0.5 - 1e-6);
    }
    SUBCASE("input validation") {
        SymMatrix small(Eigen::MatrixXd::Identity(2, 2));
        CHECK_THROWS_AS(pair_balance(small, small), InputError);
    }
}
