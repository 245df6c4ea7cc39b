#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sublin/capacity.hpp"
#include "sublin/schedules.hpp"
#include "sublin/sublinear.hpp"

namespace sublin {

// Per-step measure-selection rule: one scenario of a sequence that is
// i.i.d. under the upper expectation.  Decisions may read the past (the
// running sum), which is exactly the measure class the conditional bound
// of the dominance check quantifies over.
struct Policy {
    enum class Kind { Constant, Cyclic, Mixture, Greedy, Scripted };
    Kind kind = Kind::Constant;

    std::size_t theta = 0;             // Constant
    std::vector<std::size_t> thetas;   // Cyclic / Scripted
    std::size_t hold = 1;              // Cyclic: steps per listed entry
    double alpha = 0.0;                // Mixture: weight of theta_low
    std::size_t theta_low = 0, theta_high = 0;
    bool maximize = true;              // Greedy objective

    static Policy constant(std::size_t theta);
    static Policy cyclic(std::vector<std::size_t> thetas, std::size_t hold = 1);
    static Policy mixture(double alpha, std::size_t theta_low, std::size_t theta_high);
    static Policy greedy(bool maximize);
    static Policy scripted(std::vector<std::size_t> thetas);

    std::string describe() const;
};

struct TrajectorySeeds {
    std::uint64_t master = 0;
    std::uint64_t config_tag = 0;
    std::uint64_t repetition = 0;
};

struct CheckpointRule {
    enum class Kind { Geometric, All };
    Kind kind = Kind::Geometric;
    double ratio = 1.01;      // geometric subsampling ratio
    std::uint64_t first = 1;  // first checkpoint index

    static CheckpointRule geometric(double ratio = 1.01, std::uint64_t first = 1) {
        return {Kind::Geometric, ratio, first};
    }
    static CheckpointRule all() { return {Kind::All, 1.0, 1}; }
};

struct Checkpoint {
    std::uint64_t n = 0;
    double S = 0.0;
    double V2 = 0.0; // sum of Y_j^2 ^ b_j^2
    double U2 = 0.0; // sum of Y_j^2
    double R = 0.0;  // S / d(n)
    std::optional<double> T; // S / (V * t(n)); absent while V == 0
    double sum_abs_y = 0.0;
};

struct Trajectory {
    std::uint64_t horizon = 0;
    std::vector<Checkpoint> checkpoints;
    double max_abs_y = 0.0;
    double running_max_S = 0.0; // max over k <= N of S_k
    double running_min_S = 0.0;
    TrajectorySeeds seeds;
};

// Streams i = 1..N in one pass with O(checkpoints) memory; bit-reproducible
// for a given seed triple.
Trajectory run_trajectory(const MeasureFamily& fam, const Policy& policy,
                          const TruncationSchedule& schedule, std::uint64_t horizon,
                          const TrajectorySeeds& seeds,
                          const CheckpointRule& rule = CheckpointRule::geometric());

// One scenario repetition fed to a sink: per step the chosen member index
// and the raw draw.  Every Monte-Carlo surface shares this stream
// discipline (draws on stream 2r, policy coins on 2r+1), so estimates are
// reproducible across entry points and worker counts.
void stream_policy_draws(
    const MeasureFamily& fam, const Policy& policy, std::uint64_t horizon,
    const TrajectorySeeds& seeds,
    const std::function<void(std::size_t theta, double y)>& sink);

// alpha with alpha*lower + (1-alpha)*upper = target (variance units).
double mixture_weight(double target_sigma2, const SigmaBounds& bounds);

struct ClusterEstimate {
    std::uint64_t window_lo = 0, window_hi = 0;
    double epsilon = 0.0;
    bool has_interval = false;
    double lo = 0.0, hi = 0.0;
    std::optional<double> hausdorff_to_target;
    std::size_t sample_points = 0;
    std::string note;
};

// Largest interval of observed values every epsilon-subinterval of which is
// hit by at least one observation.
ClusterEstimate estimate_cluster_values(
    std::vector<double> values, double epsilon,
    const std::optional<std::array<double, 2>>& target = std::nullopt);

enum class ClusterStatistic { R, T };

// Windowed cluster estimate over checkpoints with n in [n0, horizon];
// fewer than 100 checkpoints is reported, not thrown.
ClusterEstimate estimate_cluster(const Trajectory& traj, ClusterStatistic stat,
                                 std::uint64_t n0, double epsilon,
                                 const std::optional<std::array<double, 2>>& target
                                 = std::nullopt);

struct DominanceBin {
    double lo = 0.0, hi = 0.0; // bin over the running sum before the draw
    std::uint64_t count = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    bool exceeds = false;
};

struct DominanceReport {
    double bound = 0.0; // upper expectation of phi
    std::vector<DominanceBin> bins;
    bool pass = false;
};

// Per-bin empirical conditional mean of phi(Y_n) given the running sum,
// compared against the upper expectation of phi; a bin fails when its mean
// exceeds the bound by more than 3 standard errors.
DominanceReport conditional_dominance_check(
    const MeasureFamily& fam, const Policy& policy, const RealFn& phi,
    std::uint64_t horizon, std::size_t repetitions,
    const std::vector<double>& bin_edges, const TrajectorySeeds& seeds,
    int workers = 1);

struct CapacityEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t best_policy = 0;
    std::vector<double> per_policy;
    std::string label; // the finite-policy sup under-approximates the true sup
};

using TrajectoryPredicate = std::function<bool(const std::vector<double>& draws)>;

// max over the policy set of the empirical frequency of the event; reported
// as a lower bound of the upper capacity because the policy set is finite.
CapacityEstimate empirical_upper_capacity(const MeasureFamily& fam,
                                          const TrajectoryPredicate& event,
                                          const std::vector<Policy>& policy_set,
                                          std::size_t repetitions,
                                          std::uint64_t horizon,
                                          const TrajectorySeeds& seeds,
                                          int workers = 1);

} // namespace sublin
