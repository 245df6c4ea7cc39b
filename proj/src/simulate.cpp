#include "sublin/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sublin/parallel.hpp"

namespace sublin {

Policy Policy::constant(std::size_t theta) {
    Policy p;
    p.kind = Kind::Constant;
    p.theta = theta;
    return p;
}

Policy Policy::cyclic(std::vector<std::size_t> thetas, std::size_t hold) {
    Policy p;
    p.kind = Kind::Cyclic;
    p.thetas = std::move(thetas);
    p.hold = hold;
    return p;
}

Policy Policy::mixture(double alpha, std::size_t theta_low, std::size_t theta_high) {
    Policy p;
    p.kind = Kind::Mixture;
    p.alpha = alpha;
    p.theta_low = theta_low;
    p.theta_high = theta_high;
    return p;
}

Policy Policy::greedy(bool maximize) {
    Policy p;
    p.kind = Kind::Greedy;
    p.maximize = maximize;
    return p;
}

Policy Policy::scripted(std::vector<std::size_t> thetas) {
    Policy p;
    p.kind = Kind::Scripted;
    p.thetas = std::move(thetas);
    return p;
}

std::string Policy::describe() const {
    std::ostringstream os;
    switch (kind) {
    case Kind::Constant: os << "constant(" << theta << ")"; break;
    case Kind::Cyclic:
        os << "cyclic(";
        for (std::size_t i = 0; i < thetas.size(); ++i) os << (i ? "," : "") << thetas[i];
        os << ";hold=" << hold << ")";
        break;
    case Kind::Mixture:
        os << "mixture(alpha=" << alpha << "," << theta_low << "," << theta_high << ")";
        break;
    case Kind::Greedy: os << (maximize ? "greedy(max)" : "greedy(min)"); break;
    case Kind::Scripted: os << "scripted(len=" << thetas.size() << ")"; break;
    }
    return os.str();
}

namespace {

void validate_policy(const Policy& policy, const MeasureFamily& fam,
                     std::uint64_t horizon) {
    const std::size_t K = fam.size();
    const auto check = [K](std::size_t idx) {
        if (idx >= K) throw std::invalid_argument("policy index out of range");
    };
    switch (policy.kind) {
    case Policy::Kind::Constant: check(policy.theta); break;
    case Policy::Kind::Cyclic:
        if (policy.thetas.empty() || policy.hold == 0)
            throw std::invalid_argument("cyclic policy needs entries and hold >= 1");
        for (std::size_t t : policy.thetas) check(t);
        break;
    case Policy::Kind::Mixture:
        if (!(policy.alpha >= 0.0 && policy.alpha <= 1.0))
            throw std::invalid_argument("mixture weight must lie in [0,1]");
        check(policy.theta_low);
        check(policy.theta_high);
        break;
    case Policy::Kind::Greedy: break;
    case Policy::Kind::Scripted:
        if (policy.thetas.size() < horizon)
            throw std::invalid_argument("scripted policy shorter than the horizon");
        for (std::size_t t : policy.thetas) check(t);
        break;
    }
}

// Stateful per-trajectory selector.  Greedy reads the running sum: it takes
// the best truncated mean, breaking ties toward high dispersion while the
// sum is on the unfavourable side of 0 and low dispersion otherwise.
class PolicyEngine {
public:
    PolicyEngine(const Policy& policy, const MeasureFamily& fam,
                 RandomStream policy_stream)
        : policy_(policy), stream_(policy_stream) {
        if (policy_.kind == Policy::Kind::Greedy) {
            means_.reserve(fam.size());
            disp_.reserve(fam.size());
            for (const Distribution& d : fam.members()) {
                MeasureFamily single({d}, fam.quadrature_tol());
                means_.push_back(
                    breve_expect(single, [](double x) { return x; },
                                 default_c_grid(), 1e-9)
                        .value);
                disp_.push_back(truncated_moment(d, 2, 1e6));
            }
        }
    }

    std::size_t decide(std::uint64_t i, double running_sum) {
        switch (policy_.kind) {
        case Policy::Kind::Constant: return policy_.theta;
        case Policy::Kind::Cyclic:
            return policy_.thetas[((i - 1) / policy_.hold) % policy_.thetas.size()];
        case Policy::Kind::Mixture:
            return stream_.uniform() < policy_.alpha ? policy_.theta_low
                                                     : policy_.theta_high;
        case Policy::Kind::Scripted: return policy_.thetas[i - 1];
        case Policy::Kind::Greedy: break;
        }
        const double sign = policy_.maximize ? 1.0 : -1.0;
        double best_mean = -1e300;
        for (std::size_t k = 0; k < means_.size(); ++k)
            best_mean = std::fmax(best_mean, sign * means_[k]);
        const bool behind = sign * running_sum < 0.0;
        std::size_t pick = 0;
        double pick_disp = behind ? -1e300 : 1e300;
        for (std::size_t k = 0; k < means_.size(); ++k) {
            if (sign * means_[k] < best_mean - 1e-12) continue;
            const bool better = behind ? disp_[k] > pick_disp : disp_[k] < pick_disp;
            if (better) {
                pick = k;
                pick_disp = disp_[k];
            }
        }
        return pick;
    }

private:
    Policy policy_;
    RandomStream stream_;
    std::vector<double> means_;
    std::vector<double> disp_;
};

} // namespace

void stream_policy_draws(
    const MeasureFamily& fam, const Policy& policy, std::uint64_t horizon,
    const TrajectorySeeds& seeds,
    const std::function<void(std::size_t theta, double y)>& sink) {
    validate_policy(policy, fam, horizon);
    RandomStream draw_stream(seeds.master,
                             stream_id(seeds.config_tag, seeds.repetition, false));
    RandomStream policy_stream(seeds.master,
                               stream_id(seeds.config_tag, seeds.repetition, true));
    PolicyEngine engine(policy, fam, policy_stream);
    double S = 0.0;
    for (std::uint64_t i = 1; i <= horizon; ++i) {
        const std::size_t theta = engine.decide(i, S);
        const double y = fam.member(theta).sample_one(draw_stream);
        sink(theta, y);
        S += y;
    }
}

Trajectory run_trajectory(const MeasureFamily& fam, const Policy& policy,
                          const TruncationSchedule& schedule, std::uint64_t horizon,
                          const TrajectorySeeds& seeds, const CheckpointRule& rule) {
    if (horizon < 2) throw std::invalid_argument("trajectory horizon must be >= 2");
    if (rule.kind == CheckpointRule::Kind::Geometric && !(rule.ratio > 1.0))
        throw std::invalid_argument("geometric checkpoint ratio must be > 1");

    Trajectory traj;
    traj.horizon = horizon;
    traj.seeds = seeds;

    double S = 0.0, V2 = 0.0, U2 = 0.0, sum_abs = 0.0;
    double running_b = 0.0;
    std::uint64_t i = 0;
    std::uint64_t next_checkpoint = rule.first;

    stream_policy_draws(fam, policy, horizon, seeds, [&](std::size_t, double y) {
        ++i;
        S += y;
        running_b = std::fmax(running_b, schedule.raw_b(i));
        const double y2 = y * y;
        V2 += std::fmin(y2, running_b * running_b);
        U2 += y2;
        sum_abs += std::fabs(y);
        traj.max_abs_y = std::fmax(traj.max_abs_y, std::fabs(y));
        traj.running_max_S = std::fmax(traj.running_max_S, S);
        traj.running_min_S = std::fmin(traj.running_min_S, S);

        const bool due = rule.kind == CheckpointRule::Kind::All
                             ? i >= rule.first
                             : i == next_checkpoint;
        const bool last = i == horizon && horizon >= rule.first;
        if (due || last) {
            Checkpoint cp;
            cp.n = i;
            cp.S = S;
            cp.V2 = V2;
            cp.U2 = U2;
            cp.R = S / d_of(static_cast<double>(i));
            if (V2 > 0.0)
                cp.T = S / (std::sqrt(V2) * t_of(static_cast<double>(i)));
            cp.sum_abs_y = sum_abs;
            traj.checkpoints.push_back(cp);
            if (due && rule.kind == CheckpointRule::Kind::Geometric) {
                const double scaled =
                    std::ceil(static_cast<double>(next_checkpoint) * rule.ratio);
                std::uint64_t next = static_cast<std::uint64_t>(scaled);
                if (next <= next_checkpoint) next = next_checkpoint + 1;
                next_checkpoint = next;
            }
        }
    });
    return traj;
}

double mixture_weight(double target_sigma2, const SigmaBounds& bounds) {
    if (!(bounds.lower <= bounds.upper))
        throw std::invalid_argument("mixture weight: invalid band");
    if (!(target_sigma2 >= bounds.lower && target_sigma2 <= bounds.upper))
        throw std::invalid_argument("mixture weight: target outside the variance band");
    if (bounds.upper == bounds.lower) return 0.0; // degenerate band hit exactly
    return (bounds.upper - target_sigma2) / (bounds.upper - bounds.lower);
}

ClusterEstimate estimate_cluster_values(
    std::vector<double> values, double epsilon,
    const std::optional<std::array<double, 2>>& target) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    ClusterEstimate out;
    out.epsilon = epsilon;
    out.sample_points = values.size();
    if (values.empty()) {
        out.note = "no observations in window";
        return out;
    }
    std::sort(values.begin(), values.end());
    // maximal runs whose consecutive gaps stay <= epsilon; the widest run is
    // the covered interval
    double best_lo = values.front(), best_hi = values.front();
    double run_lo = values.front(), run_hi = values.front();
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] - run_hi <= epsilon) {
            run_hi = values[i];
        } else {
            if (run_hi - run_lo > best_hi - best_lo) {
                best_lo = run_lo;
                best_hi = run_hi;
            }
            run_lo = run_hi = values[i];
        }
    }
    if (run_hi - run_lo > best_hi - best_lo) {
        best_lo = run_lo;
        best_hi = run_hi;
    }
    out.has_interval = true;
    out.lo = best_lo;
    out.hi = best_hi;
    if (target)
        out.hausdorff_to_target =
            std::fmax(std::fabs(best_lo - (*target)[0]), std::fabs(best_hi - (*target)[1]));
    return out;
}

ClusterEstimate estimate_cluster(const Trajectory& traj, ClusterStatistic stat,
                                 std::uint64_t n0, double epsilon,
                                 const std::optional<std::array<double, 2>>& target) {
    if (n0 >= traj.horizon)
        throw std::invalid_argument("cluster window start must precede the horizon");
    std::vector<double> values;
    for (const Checkpoint& cp : traj.checkpoints) {
        if (cp.n < n0) continue;
        if (stat == ClusterStatistic::R) {
            values.push_back(cp.R);
        } else if (cp.T) {
            values.push_back(*cp.T);
        }
    }
    ClusterEstimate out = estimate_cluster_values(std::move(values), epsilon, target);
    out.window_lo = n0;
    out.window_hi = traj.horizon;
    if (out.sample_points < 100 && out.note.empty())
        out.note = "fewer than 100 checkpoints in window";
    return out;
}

DominanceReport conditional_dominance_check(
    const MeasureFamily& fam, const Policy& policy, const RealFn& phi,
    std::uint64_t horizon, std::size_t repetitions,
    const std::vector<double>& bin_edges, const TrajectorySeeds& seeds,
    int workers) {
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("bin edges must be strictly increasing");
    validate_policy(policy, fam, horizon);

    const std::size_t nbins = bin_edges.size() + 1;
    struct Accum {
        std::vector<double> sum, sumsq;
        std::vector<std::uint64_t> count;
    };
    std::vector<Accum> partial(repetitions ? std::min<std::size_t>(repetitions, 256) : 1);
    for (Accum& a : partial) {
        a.sum.assign(nbins, 0.0);
        a.sumsq.assign(nbins, 0.0);
        a.count.assign(nbins, 0);
    }
    const std::size_t slots = partial.size();

    const auto bin_of = [&bin_edges](double s) {
        return static_cast<std::size_t>(
            std::upper_bound(bin_edges.begin(), bin_edges.end(), s) -
            bin_edges.begin());
    };

    // slot r % slots accumulates repetition r; slot totals merge in slot
    // order afterwards, so the result is worker-count independent
    parallel_for(slots, workers, [&](std::size_t slot) {
        Accum& acc = partial[slot];
        for (std::size_t rep = slot; rep < repetitions; rep += slots) {
            double S = 0.0;
            stream_policy_draws(fam, policy, horizon,
                                {seeds.master, seeds.config_tag, rep},
                                [&](std::size_t, double y) {
                                    const std::size_t b = bin_of(S);
                                    const double v = phi(y);
                                    acc.sum[b] += v;
                                    acc.sumsq[b] += v * v;
                                    acc.count[b] += 1;
                                    S += y;
                                });
        }
    });

    DominanceReport report;
    report.bound = upper_expect(fam, phi);
    report.pass = true;
    for (std::size_t b = 0; b < nbins; ++b) {
        DominanceBin bin;
        bin.lo = b == 0 ? -std::numeric_limits<double>::infinity() : bin_edges[b - 1];
        bin.hi = b == bin_edges.size() ? std::numeric_limits<double>::infinity()
                                       : bin_edges[b];
        double sum = 0.0, sumsq = 0.0;
        std::uint64_t count = 0;
        for (const Accum& a : partial) {
            sum += a.sum[b];
            sumsq += a.sumsq[b];
            count += a.count[b];
        }
        bin.count = count;
        if (count > 0) {
            bin.mean = sum / static_cast<double>(count);
            const double var =
                std::fmax(0.0, sumsq / static_cast<double>(count) - bin.mean * bin.mean);
            bin.stderr_ = std::sqrt(var / static_cast<double>(count));
            bin.exceeds = bin.mean > report.bound + 3.0 * bin.stderr_;
            if (bin.exceeds) report.pass = false;
        }
        report.bins.push_back(bin);
    }
    return report;
}

CapacityEstimate empirical_upper_capacity(const MeasureFamily& fam,
                                          const TrajectoryPredicate& event,
                                          const std::vector<Policy>& policy_set,
                                          std::size_t repetitions,
                                          std::uint64_t horizon,
                                          const TrajectorySeeds& seeds,
                                          int workers) {
    if (policy_set.empty())
        throw std::invalid_argument("empirical capacity needs a nonempty policy set");
    if (repetitions < 1000)
        throw std::invalid_argument("empirical capacity needs at least 1000 repetitions");
    for (const Policy& p : policy_set) validate_policy(p, fam, horizon);

    CapacityEstimate out;
    out.label = "lower bound of upper capacity (finite policy set)";
    out.per_policy.assign(policy_set.size(), 0.0);

    std::vector<std::uint64_t> hits(policy_set.size(), 0);
    for (std::size_t pi = 0; pi < policy_set.size(); ++pi) {
        std::vector<unsigned char> hit(repetitions, 0);
        parallel_for(repetitions, workers, [&](std::size_t rep) {
            std::vector<double> ys;
            ys.reserve(horizon);
            stream_policy_draws(
                fam, policy_set[pi], horizon,
                {seeds.master, seeds.config_tag, pi * repetitions + rep},
                [&](std::size_t, double y) { ys.push_back(y); });
            hit[rep] = event(ys) ? 1 : 0;
        });
        for (unsigned char h : hit) hits[pi] += h;
        out.per_policy[pi] =
            static_cast<double>(hits[pi]) / static_cast<double>(repetitions);
    }
    out.best_policy = static_cast<std::size_t>(
        std::max_element(out.per_policy.begin(), out.per_policy.end()) -
        out.per_policy.begin());
    out.estimate = out.per_policy[out.best_policy];
    out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) /
                            static_cast<double>(repetitions));
    return out;
}

} // namespace sublin
