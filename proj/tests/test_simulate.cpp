#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sublin/simulate.hpp"

using namespace sublin;

namespace {

MeasureFamily rademacher_pair() {
    return MeasureFamily(
        {Distribution(ScaledRademacher{1.0}), Distribution(ScaledRademacher{3.0})});
}

MeasureFamily std_normal_family() {
    return MeasureFamily({Distribution(Gaussian{0.0, 1.0})});
}

constexpr std::uint64_t kSeed = 20250809;

} // namespace

TEST_SUITE("simulate") {

TEST_CASE("mixture weight interpolates the band") {
    const SigmaBounds band{1.0, 9.0};
    CHECK(mixture_weight(5.0, band) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(mixture_weight(9.0, band) == 0.0);
    CHECK(mixture_weight(1.0, band) == 1.0);
    CHECK(mixture_weight(2.0, SigmaBounds{2.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(mixture_weight(10.0, band), std::invalid_argument);
    CHECK_THROWS_AS(mixture_weight(0.5, band), std::invalid_argument);
}

TEST_CASE("policy validation") {
    const MeasureFamily fam = rademacher_pair();
    const TruncationSchedule sched;
    CHECK_THROWS_AS(run_trajectory(fam, Policy::constant(7), sched, 100, {kSeed, 0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        run_trajectory(fam, Policy::scripted({0, 1}), sched, 100, {kSeed, 0, 0}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        run_trajectory(fam, Policy::mixture(1.5, 0, 1), sched, 100, {kSeed, 0, 0}),
        std::invalid_argument);
    CHECK_THROWS_AS(run_trajectory(fam, Policy::constant(0), sched, 1, {kSeed, 0, 0}),
                    std::invalid_argument);
}

TEST_CASE("scripted repetition of one index equals the constant policy") {
    const MeasureFamily fam = rademacher_pair();
    const TruncationSchedule sched;
    const std::uint64_t N = 512;
    const Trajectory a = run_trajectory(fam, Policy::constant(0), sched, N,
                                        {kSeed, 3, 5}, CheckpointRule::all());
    const Trajectory b =
        run_trajectory(fam, Policy::scripted(std::vector<std::size_t>(N, 0)), sched,
                       N, {kSeed, 3, 5}, CheckpointRule::all());
    REQUIRE(a.checkpoints.size() == b.checkpoints.size());
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
        CHECK(a.checkpoints[i].S == b.checkpoints[i].S);
        CHECK(a.checkpoints[i].V2 == b.checkpoints[i].V2);
        CHECK(a.checkpoints[i].U2 == b.checkpoints[i].U2);
    }
}

TEST_CASE("accumulators are monotone, ordered and replayable") {
    const MeasureFamily fam({Distribution(Gaussian{0.0, 1.0}),
                             Distribution(ScaledRademacher{3.0})});
    const TruncationSchedule sched;
    const std::uint64_t N = 1000;
    const TrajectorySeeds seeds{kSeed, 9, 2};
    const Policy policy = Policy::cyclic({0, 1}, 3);
    const Trajectory traj =
        run_trajectory(fam, policy, sched, N, seeds, CheckpointRule::all());
    REQUIRE(traj.checkpoints.size() == N);

    double prev_v2 = 0.0, prev_u2 = 0.0;
    for (const Checkpoint& cp : traj.checkpoints) {
        CHECK(cp.V2 >= prev_v2);
        CHECK(cp.U2 >= prev_u2);
        CHECK(cp.V2 <= cp.U2 + 1e-12);
        if (cp.T)
            CHECK(std::fabs(*cp.T) <=
                  cp.sum_abs_y / (std::sqrt(cp.V2) * t_of(double(cp.n))) + 1e-12);
        prev_v2 = cp.V2;
        prev_u2 = cp.U2;
    }

    // replay the draw stream and recompute the accumulators independently
    double S = 0.0, V2 = 0.0, U2 = 0.0, running_b = 0.0;
    std::uint64_t i = 0;
    std::uint64_t first_exceed = 0;
    stream_policy_draws(fam, policy, N, seeds, [&](std::size_t, double y) {
        ++i;
        S += y;
        running_b = std::fmax(running_b, sched.raw_b(i));
        V2 += std::fmin(y * y, running_b * running_b);
        U2 += y * y;
        if (first_exceed == 0 && std::fabs(y) > running_b) first_exceed = i;
        const Checkpoint& cp = traj.checkpoints[i - 1];
        CHECK(cp.S == S);
        CHECK(cp.V2 == V2);
        CHECK(cp.U2 == U2);
    });
    // V == U exactly until the first draw exceeding its truncation level
    REQUIRE(first_exceed > 0);
    CHECK(traj.checkpoints[first_exceed - 2].V2 ==
          traj.checkpoints[first_exceed - 2].U2);
    CHECK(traj.checkpoints[first_exceed - 1].V2 <
          traj.checkpoints[first_exceed - 1].U2);
}

TEST_CASE("T is undefined while V vanishes") {
    const MeasureFamily fam(
        {Distribution(DiscreteDistribution({{0.0, 0.95}, {1.0, 0.05}}))});
    const TruncationSchedule sched;
    const Trajectory traj = run_trajectory(fam, Policy::constant(0), sched, 200,
                                           {kSeed, 11, 0}, CheckpointRule::all());
    bool seen_positive = false;
    for (const Checkpoint& cp : traj.checkpoints) {
        if (cp.V2 == 0.0) {
            CHECK_FALSE(cp.T.has_value());
        } else {
            seen_positive = true;
            CHECK(cp.T.has_value());
        }
    }
    CHECK(seen_positive);
}

TEST_CASE("truncated quadratic mass settles near the variance") {
    const MeasureFamily fam = std_normal_family();
    const TruncationSchedule sched;
    double mean_ratio = 0.0;
    const int seeds = 20;
    for (int r = 0; r < seeds; ++r) {
        const Trajectory traj =
            run_trajectory(fam, Policy::constant(0), sched, 1000000,
                           {kSeed, 21, static_cast<std::uint64_t>(r)},
                           CheckpointRule::geometric(8.0));
        const Checkpoint& last = traj.checkpoints.back();
        mean_ratio += last.V2 / static_cast<double>(last.n);
    }
    mean_ratio /= seeds;
    CHECK(mean_ratio >= 0.93);
    CHECK(mean_ratio <= 1.0);
}

TEST_CASE("running maxima stay within Gaussian envelopes") {
    const MeasureFamily fam = std_normal_family();
    const TruncationSchedule sched;
    const std::uint64_t N = 1000000;
    const Trajectory traj = run_trajectory(fam, Policy::constant(0), sched, N,
                                           {kSeed, 22, 0});
    CHECK(traj.max_abs_y <= 6.0 * std::sqrt(2.0 * std::log(double(N))));
}

TEST_CASE("cluster estimation on deterministic sequences") {
    SUBCASE("constant sequence collapses to a point") {
        const ClusterEstimate est = estimate_cluster_values(
            std::vector<double>(200, 3.25), 0.1, std::array<double, 2>{3.25, 3.25});
        CHECK(est.has_interval);
        CHECK(est.lo == 3.25);
        CHECK(est.hi == 3.25);
        CHECK(*est.hausdorff_to_target == 0.0);
    }
    SUBCASE("slowly winding oscillation fills its range") {
        std::vector<double> values;
        values.reserve(1000000);
        for (std::uint64_t n = 2; n <= 1000000; ++n)
            values.push_back(std::sin(std::log(double(n))));
        const ClusterEstimate est = estimate_cluster_values(values, 0.05);
        REQUIRE(est.has_interval);
        CHECK(est.lo <= -0.99);
        CHECK(est.hi >= 0.99);
    }
    SUBCASE("empty input") {
        const ClusterEstimate est = estimate_cluster_values({}, 0.1);
        CHECK(est.sample_points == 0);
        CHECK_FALSE(est.has_interval);
        CHECK(!est.note.empty());
    }
    SUBCASE("a wide gap splits the run") {
        const ClusterEstimate est =
            estimate_cluster_values({0.0, 0.05, 0.1, 5.0, 5.01}, 0.2);
        CHECK(est.lo == 0.0);
        CHECK(est.hi == doctest::Approx(0.1));
    }
}

TEST_CASE("windowed cluster estimate flags thin windows") {
    const MeasureFamily fam = std_normal_family();
    const Trajectory traj = run_trajectory(fam, Policy::constant(0),
                                           TruncationSchedule(), 2000,
                                           {kSeed, 23, 0},
                                           CheckpointRule::geometric(2.0));
    const ClusterEstimate est = estimate_cluster(traj, ClusterStatistic::R, 100, 0.1);
    CHECK(est.sample_points < 100);
    CHECK(!est.note.empty());
    CHECK_THROWS_AS(estimate_cluster(traj, ClusterStatistic::R, 2000, 0.1),
                    std::invalid_argument);
}

TEST_CASE("conditional dominance holds for constant and greedy policies") {
    const MeasureFamily fam = rademacher_pair();
    const RealFn phi = [](double x) { return std::clamp(x, -1.0, 1.0); };
    const std::vector<double> edges = {-10.0, -3.0, 0.0, 3.0, 10.0};

    const DominanceReport constant = conditional_dominance_check(
        fam, Policy::constant(0), phi, 100, 20000, edges, {kSeed, 31, 0}, 2);
    CHECK(constant.pass);
    CHECK(std::fabs(constant.bound) <= 1e-12);

    const DominanceReport greedy = conditional_dominance_check(
        fam, Policy::greedy(true), phi, 100, 20000, edges, {kSeed, 32, 0}, 2);
    CHECK(greedy.pass);

    // a constant test function is reproduced exactly in every occupied bin
    const DominanceReport flat = conditional_dominance_check(
        fam, Policy::constant(1), [](double) { return 0.75; }, 50, 2000, edges,
        {kSeed, 33, 0});
    for (const DominanceBin& bin : flat.bins)
        if (bin.count > 0) CHECK(bin.mean == 0.75);
    CHECK(flat.pass);
}

TEST_CASE("empirical upper capacity") {
    const MeasureFamily fam = rademacher_pair();
    const std::vector<Policy> policies = {Policy::constant(0), Policy::constant(1),
                                          Policy::greedy(true)};
    SUBCASE("sign event on a symmetric family") {
        const TrajectoryPredicate nonneg_end = [](const std::vector<double>& ys) {
            double s = 0.0;
            for (double y : ys) s += y;
            return s >= 0.0;
        };
        // past-independent scenarios keep the walk symmetric
        const CapacityEstimate sym = empirical_upper_capacity(
            fam, nonneg_end,
            {Policy::constant(0), Policy::constant(1), Policy::cyclic({0, 1}, 1)},
            10000, 100, {kSeed, 41, 0}, 2);
        CHECK(sym.estimate >= 0.48);
        CHECK(sym.estimate <= 0.56);
        CHECK(sym.label == "lower bound of upper capacity (finite policy set)");
        // the sign-switching adversary genuinely lifts the frequency: bold
        // steps while behind, small steps while ahead
        const CapacityEstimate adv = empirical_upper_capacity(
            fam, nonneg_end, {Policy::greedy(true)}, 10000, 100, {kSeed, 41, 0}, 2);
        CHECK(adv.estimate > 0.65);
    }
    SUBCASE("impossible event") {
        const CapacityEstimate est = empirical_upper_capacity(
            fam,
            [](const std::vector<double>& ys) {
                double s = 0.0;
                for (double y : ys) s += y;
                return s > 3.0 * static_cast<double>(ys.size());
            },
            policies, 2000, 50, {kSeed, 42, 0});
        CHECK(est.estimate == 0.0);
    }
    SUBCASE("maximal-sum event matches the reflection oracle") {
        const MeasureFamily single({Distribution(ScaledRademacher{1.0})});
        const CapacityEstimate est = empirical_upper_capacity(
            single,
            [](const std::vector<double>& ys) {
                double s = 0.0;
                for (double y : ys) {
                    s += y;
                    if (s >= 10.0) return true;
                }
                return false;
            },
            {Policy::constant(0)}, 100000, 100, {kSeed, 43, 0}, 4);
        const double oracle = oracles::reflection_max_prob(100, 10);
        CHECK(std::fabs(est.estimate - oracle) <= 4.0 * est.stderr_);
        CHECK(est.estimate == doctest::Approx(0.317).epsilon(0.02));
    }
    SUBCASE("repetition floor") {
        CHECK_THROWS_AS(
            empirical_upper_capacity(
                fam, [](const std::vector<double>&) { return true; }, policies, 10,
                10, {kSeed, 44, 0}),
            std::invalid_argument);
    }
}

TEST_CASE("worker count never changes results") {
    const MeasureFamily fam = rademacher_pair();
    const TrajectoryPredicate event = [](const std::vector<double>& ys) {
        double s = 0.0, m = 0.0;
        for (double y : ys) {
            s += y;
            m = std::fmax(m, s);
        }
        return m >= 8.0;
    };
    const std::vector<Policy> policies = {Policy::constant(1), Policy::greedy(true)};
    const CapacityEstimate serial =
        empirical_upper_capacity(fam, event, policies, 5000, 64, {kSeed, 45, 0}, 1);
    const CapacityEstimate parallel =
        empirical_upper_capacity(fam, event, policies, 5000, 64, {kSeed, 45, 0}, 8);
    CHECK(serial.estimate == parallel.estimate);
    CHECK(serial.per_policy == parallel.per_policy);

    const RealFn phi = [](double x) { return std::clamp(x, -1.0, 1.0); };
    const DominanceReport d1 = conditional_dominance_check(
        fam, Policy::greedy(false), phi, 50, 4000, {-4.0, 0.0, 4.0}, {kSeed, 46, 0}, 1);
    const DominanceReport d8 = conditional_dominance_check(
        fam, Policy::greedy(false), phi, 50, 4000, {-4.0, 0.0, 4.0}, {kSeed, 46, 0}, 8);
    REQUIRE(d1.bins.size() == d8.bins.size());
    for (std::size_t i = 0; i < d1.bins.size(); ++i) {
        CHECK(d1.bins[i].mean == d8.bins[i].mean);
        CHECK(d1.bins[i].count == d8.bins[i].count);
    }
}

} // TEST_SUITE
