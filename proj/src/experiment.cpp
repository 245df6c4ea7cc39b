#include "sublin/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sublin/parallel.hpp"
#include "sublin/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sublin {

// ---------------------------------------------------------------------------
// small utilities
// ---------------------------------------------------------------------------

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return fnv1a_hex(os.str());
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("short write to " + path.string());
}

// strict-schema helpers: every object is checked against an allowlist
void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed,
                const std::set<std::string>& required) {
    if (!obj.is_object()) throw config_error(where + ": expected an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw config_error(where + ": unknown field '" + item.key() + "'");
    for (const std::string& key : required)
        if (!obj.contains(key))
            throw config_error(where + ": missing required field '" + key + "'");
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.at(key).is_number())
        throw config_error(where + "/" + key + ": expected a number");
    return obj.at(key).get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return get_number(obj, key, where);
}

std::uint64_t get_count(const json& obj, const std::string& key,
                        const std::string& where) {
    if (!obj.at(key).is_number_unsigned() && !obj.at(key).is_number_integer())
        throw config_error(where + "/" + key + ": expected a nonnegative integer");
    const auto v = obj.at(key).get<std::int64_t>();
    if (v < 0) throw config_error(where + "/" + key + ": must be >= 0");
    return static_cast<std::uint64_t>(v);
}

std::uint64_t get_count_or(const json& obj, const std::string& key,
                           std::uint64_t fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return get_count(obj, key, where);
}

std::array<double, 2> get_interval(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw config_error(where + ": expected [lo, hi]");
    std::array<double, 2> out{j[0].get<double>(), j[1].get<double>()};
    if (!(out[0] <= out[1])) throw config_error(where + ": needs lo <= hi");
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// JSON <-> domain objects
// ---------------------------------------------------------------------------

Distribution distribution_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type"))
        throw config_error(where + ": distribution literal needs a 'type'");
    const std::string type = j.at("type").get<std::string>();
    try {
        if (type == "gaussian") {
            check_keys(j, where, {"type", "mean", "variance"}, {"mean", "variance"});
            return Distribution(
                Gaussian{get_number(j, "mean", where), get_number(j, "variance", where)});
        }
        if (type == "pareto") {
            check_keys(j, where, {"type", "tailIndex", "scale"}, {"tailIndex"});
            return Distribution(SymmetricPareto{get_number(j, "tailIndex", where),
                                                get_number_or(j, "scale", 1.0, where)});
        }
        if (type == "rademacher") {
            check_keys(j, where, {"type", "magnitude"}, {"magnitude"});
            return Distribution(ScaledRademacher{get_number(j, "magnitude", where)});
        }
        if (type == "discrete") {
            check_keys(j, where, {"type", "atoms"}, {"atoms"});
            const json& atoms = j.at("atoms");
            if (!atoms.is_array() || atoms.empty())
                throw config_error(where + "/atoms: expected a nonempty array");
            std::vector<Atom> parsed;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                const json& a = atoms[i];
                if (!a.is_array() || a.size() != 2)
                    throw config_error(where + "/atoms/" + std::to_string(i) +
                                       ": expected [value, probability]");
                parsed.push_back({a[0].get<double>(), a[1].get<double>()});
            }
            return Distribution(DiscreteDistribution(std::move(parsed)));
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(where + ": " + e.what());
    }
    throw config_error(where + ": unknown distribution type '" + type + "'");
}

json distribution_to_json(const Distribution& d) {
    if (const DiscreteDistribution* disc = d.discrete()) {
        json atoms = json::array();
        for (const Atom& a : disc->atoms()) atoms.push_back({a.value, a.probability});
        return {{"type", "discrete"}, {"atoms", atoms}};
    }
    if (const Gaussian* g = d.gaussian())
        return {{"type", "gaussian"}, {"mean", g->mean}, {"variance", g->variance}};
    if (const SymmetricPareto* p = d.pareto())
        return {{"type", "pareto"}, {"tailIndex", p->tail_index}, {"scale", p->scale}};
    const ScaledRademacher* r = d.rademacher();
    return {{"type", "rademacher"}, {"magnitude", r->magnitude}};
}

Policy policy_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type"))
        throw config_error(where + ": policy literal needs a 'type'");
    const std::string type = j.at("type").get<std::string>();
    const auto indices = [&](const char* key) {
        std::vector<std::size_t> out;
        for (const json& v : j.at(key)) out.push_back(v.get<std::size_t>());
        return out;
    };
    if (type == "constant") {
        check_keys(j, where, {"type", "theta"}, {"theta"});
        return Policy::constant(j.at("theta").get<std::size_t>());
    }
    if (type == "cyclic") {
        check_keys(j, where, {"type", "thetas", "hold"}, {"thetas"});
        return Policy::cyclic(indices("thetas"),
                              static_cast<std::size_t>(get_count_or(j, "hold", 1, where)));
    }
    if (type == "mixture") {
        check_keys(j, where, {"type", "alpha", "thetaLow", "thetaHigh"},
                   {"alpha", "thetaLow", "thetaHigh"});
        return Policy::mixture(get_number(j, "alpha", where),
                               j.at("thetaLow").get<std::size_t>(),
                               j.at("thetaHigh").get<std::size_t>());
    }
    if (type == "greedy") {
        check_keys(j, where, {"type", "objective"}, {"objective"});
        const std::string objective = j.at("objective").get<std::string>();
        if (objective != "maximize" && objective != "minimize")
            throw config_error(where + "/objective: expected maximize|minimize");
        return Policy::greedy(objective == "maximize");
    }
    if (type == "scripted") {
        check_keys(j, where, {"type", "thetas"}, {"thetas"});
        return Policy::scripted(indices("thetas"));
    }
    throw config_error(where + ": unknown policy type '" + type + "'");
}

namespace {

MeasureFamily family_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"members", "quadratureTol"}, {"members"});
    const json& members = j.at("members");
    if (!members.is_array() || members.empty())
        throw config_error(where + "/members: expected a nonempty array");
    std::vector<Distribution> parsed;
    for (std::size_t i = 0; i < members.size(); ++i)
        parsed.push_back(distribution_from_json(
            members[i], where + "/members/" + std::to_string(i)));
    const double tol = get_number_or(j, "quadratureTol", 1e-9, where);
    try {
        return MeasureFamily(std::move(parsed), tol);
    } catch (const std::invalid_argument& e) {
        throw config_error(where + ": " + e.what());
    }
}

TruncationSchedule schedule_from_json(const json* j, const std::string& where) {
    if (!j) return TruncationSchedule();
    check_keys(*j, where, {"p", "alphaQ", "lambda"}, {});
    try {
        return TruncationSchedule(get_number_or(*j, "p", 3.0, where),
                                  get_number_or(*j, "alphaQ", 0.5, where));
    } catch (const std::invalid_argument& e) {
        throw config_error(where + ": " + e.what());
    }
}

ThresholdEvent event_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"form", "threshold"}, {"form", "threshold"});
    const std::string form = j.at("form").get<std::string>();
    const double t = get_number(j, "threshold", where);
    if (form == "ge") return ThresholdEvent::ge(t);
    if (form == "gt") return ThresholdEvent::gt(t);
    if (form == "absGe") return ThresholdEvent::abs_ge(t);
    if (form == "absGt") return ThresholdEvent::abs_gt(t);
    throw config_error(where + "/form: expected ge|gt|absGe|absGt");
}

ChoquetTransform transform_from_name(const std::string& name, const std::string& where) {
    if (name == "identity") return ChoquetTransform::identity();
    if (name == "square") return ChoquetTransform::square();
    if (name == "squareOverLogLog") return ChoquetTransform::square_over_loglog();
    throw config_error(where + ": unknown transform '" + name + "'");
}

// JSON has no +-inf/NaN; encode escapes as strings so the verdict-bearing
// fields survive serialization
json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "undecided";
    return v > 0 ? "+inf" : "-inf";
}

json choquet_to_json(const ChoquetResult& r) {
    return {{"value", finite_or_string(r.value)},
            {"positivePart", finite_or_string(r.positive_part)},
            {"negativePart", finite_or_string(r.negative_part)},
            {"verdict", to_string(r.verdict)}};
}

json cluster_to_json(const ClusterEstimate& c) {
    json out{{"window", {c.window_lo, c.window_hi}},
             {"epsilon", c.epsilon},
             {"samplePoints", c.sample_points}};
    if (c.has_interval) out["coveredInterval"] = {c.lo, c.hi};
    if (c.hausdorff_to_target) out["hausdorffToTarget"] = *c.hausdorff_to_target;
    if (!c.note.empty()) out["note"] = c.note;
    return out;
}

json bound_terms_to_json(const BoundTerms& b) {
    return {{"tailTerm", b.tail_term},
            {"middleTerm", b.middle_term},
            {"exponentialTerm", b.exponential_term},
            {"total", b.total},
            {"vacuous", b.vacuous}};
}

json verification_to_json(const VerificationReport& r) {
    return {{"name", r.name},
            {"lhsEstimate", r.lhs_estimate},
            {"lhsStderr", r.lhs_stderr},
            {"lhsLabel", r.lhs_label},
            {"simpleBound", bound_terms_to_json(r.simple)},
            {"refinedBound", bound_terms_to_json(r.refined)},
            {"rhsBound", r.rhs_bound},
            {"pass", r.pass},
            {"repetitions", r.repetitions},
            {"policies", r.policies},
            {"masterSeed", r.master_seed}};
}

std::string checkpoints_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "n,S,V2,U2,R,T\n";
    for (const Checkpoint& cp : traj.checkpoints) {
        os << cp.n << ',' << format_double(cp.S) << ',' << format_double(cp.V2)
           << ',' << format_double(cp.U2) << ',' << format_double(cp.R) << ',';
        if (cp.T) os << format_double(*cp.T);
        os << '\n';
    }
    return os.str();
}

// fixed stream tags so distinct experiment parts never share streams
constexpr std::uint64_t kTagTrajectory = 1;
constexpr std::uint64_t kTagLln = 2;
constexpr std::uint64_t kTagVerifyBase = 16;
constexpr std::uint64_t kTagDominanceBase = 48;

struct ExperimentResult {
    json summary;
    std::map<std::string, std::string> extra_files; // name -> bytes
    std::vector<std::string> failures;
};

// ---------------------------------------------------------------------------
// experiment runners
// ---------------------------------------------------------------------------

ExperimentResult run_axioms(const json& cfg, std::uint64_t seed, int /*workers*/) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "count", "maxMembers",
                "maxAtoms", "tolerance"},
               {});
    const std::size_t count = get_count_or(cfg, "count", 500, "/");
    const std::size_t max_members = get_count_or(cfg, "maxMembers", 4, "/");
    const std::size_t max_atoms = get_count_or(cfg, "maxAtoms", 6, "/");
    const double tol = get_number_or(cfg, "tolerance", 1e-12, "/");

    const AxiomSweepResult result =
        run_axiom_sweep(count, max_members, max_atoms, tol, seed);

    ExperimentResult out;
    out.summary = {{"experiment", "axioms"},
                   {"families", result.families},
                   {"violations", result.violations},
                   {"maxSubadditivityExcess", result.max_subadditivity_excess},
                   {"maxHomogeneityError", result.max_homogeneity_error},
                   {"conjugacyExact", result.conjugacy_exact},
                   {"monotonicityOk", result.monotonicity_ok},
                   {"constantsOk", result.constants_ok},
                   {"bandOrdered", result.band_ordered}};
    if (result.violations != 0)
        out.failures.push_back("axiom sweep found " +
                               std::to_string(result.violations) + " violations");
    return out;
}

ExperimentResult run_choquet(const json& cfg, std::uint64_t /*seed*/, int /*workers*/) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "family", "transforms",
                "events", "assert"},
               {"family"});
    const MeasureFamily fam = family_from_json(cfg.at("family"), "/family");

    std::vector<std::string> names = {"identity", "square", "squareOverLogLog"};
    if (cfg.contains("transforms")) {
        names.clear();
        for (const json& t : cfg.at("transforms")) names.push_back(t.get<std::string>());
    }

    ExperimentResult out;
    json transforms = json::object();
    for (const std::string& name : names) {
        const ChoquetTransform tr = transform_from_name(name, "/transforms");
        transforms[name] = {{"upper", choquet_to_json(choquet(fam, tr, Side::Upper))},
                            {"lower", choquet_to_json(choquet(fam, tr, Side::Lower))}};
    }
    json events = json::array();
    if (cfg.contains("events")) {
        for (std::size_t i = 0; i < cfg.at("events").size(); ++i) {
            const ThresholdEvent ev = event_from_json(
                cfg.at("events")[i], "/events/" + std::to_string(i));
            const CapacityValue cv = capacity(fam, ev);
            events.push_back({{"event", cfg.at("events")[i]},
                              {"upper", cv.upper},
                              {"lower", cv.lower}});
        }
    }
    out.summary = {{"experiment", "choquet"},
                   {"transforms", transforms},
                   {"events", events}};

    if (cfg.contains("assert")) {
        const json& asserts = cfg.at("assert");
        check_keys(asserts, "/assert", {"expected"}, {"expected"});
        for (std::size_t i = 0; i < asserts.at("expected").size(); ++i) {
            const json& e = asserts.at("expected")[i];
            const std::string where = "/assert/expected/" + std::to_string(i);
            check_keys(e, where, {"transform", "side", "value", "tol"},
                       {"transform", "side", "value"});
            const std::string tname = e.at("transform").get<std::string>();
            const std::string side = e.at("side").get<std::string>();
            const double want = get_number(e, "value", where);
            const double tol = get_number_or(e, "tol", 1e-9, where);
            const json& got_json = transforms.at(tname).at(side).at("value");
            if (!got_json.is_number()) {
                out.failures.push_back("choquet " + tname + "/" + side +
                                       " is not finite: " + got_json.dump());
                continue;
            }
            const double got = got_json.get<double>();
            if (!(std::fabs(got - want) <= tol))
                out.failures.push_back("choquet " + tname + "/" + side + " = " +
                                       format_double(got) + ", expected " +
                                       format_double(want) + " +- " +
                                       format_double(tol));
        }
    }
    return out;
}

ExperimentResult run_sigma(const json& cfg, std::uint64_t /*seed*/, int /*workers*/) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "family", "tol",
                "assert"},
               {"family"});
    const MeasureFamily fam = family_from_json(cfg.at("family"), "/family");
    const double tol = get_number_or(cfg, "tol", 1e-6, "/");

    const SigmaBandResult band = sigma_bounds(fam, default_c_grid(), tol);
    const MeanZeroReport mean_zero = check_mean_zero(fam, default_c_grid(), tol);

    ExperimentResult out;
    out.summary = {{"experiment", "sigma"},
                   {"band", {band.bounds.lower, band.bounds.upper}},
                   {"memberLimits", band.member_limits},
                   {"converged", band.converged},
                   {"note", band.note},
                   {"meanZero",
                    {{"pass", mean_zero.pass},
                     {"plusLimit", mean_zero.plus.value},
                     {"minusLimit", mean_zero.minus.value}}}};
    if (cfg.contains("assert")) {
        const json& a = cfg.at("assert");
        check_keys(a, "/assert", {"band", "tol"}, {"band"});
        const auto want = get_interval(a.at("band"), "/assert/band");
        const double atol = get_number_or(a, "tol", 1e-6, "/assert");
        if (!(std::fabs(band.bounds.lower - want[0]) <= atol &&
              std::fabs(band.bounds.upper - want[1]) <= atol))
            out.failures.push_back(
                "sigma band (" + format_double(band.bounds.lower) + "," +
                format_double(band.bounds.upper) + ") differs from (" +
                format_double(want[0]) + "," + format_double(want[1]) + ") by more than " +
                format_double(atol));
        if (!band.converged) out.failures.push_back("sigma band did not converge");
    }
    return out;
}

ExperimentResult run_lln(const json& cfg, std::uint64_t seed, int workers) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "family", "schedule",
                "targetSigma2", "horizon", "repetitions", "assert"},
               {"family", "targetSigma2", "horizon"});
    const MeasureFamily fam = family_from_json(cfg.at("family"), "/family");
    const TruncationSchedule schedule = schedule_from_json(
        cfg.contains("schedule") ? &cfg.at("schedule") : nullptr, "/schedule");
    const double target = get_number(cfg, "targetSigma2", "/");
    const std::uint64_t horizon = get_count(cfg, "horizon", "/");
    const std::size_t reps = get_count_or(cfg, "repetitions", 20, "/");

    const SigmaBandResult band = sigma_bounds(fam);
    if (!band.converged) throw config_error("family has an escaping variance band");
    double alpha;
    try {
        alpha = mixture_weight(target, band.bounds);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("/targetSigma2: ") + e.what());
    }
    const std::size_t theta_low = static_cast<std::size_t>(
        std::min_element(band.member_limits.begin(), band.member_limits.end()) -
        band.member_limits.begin());
    const std::size_t theta_high = static_cast<std::size_t>(
        std::max_element(band.member_limits.begin(), band.member_limits.end()) -
        band.member_limits.begin());
    const Policy policy = Policy::mixture(alpha, theta_low, theta_high);

    std::vector<double> ratios(reps, 0.0);
    parallel_for(reps, workers, [&](std::size_t rep) {
        const Trajectory traj =
            run_trajectory(fam, policy, schedule, horizon,
                           {seed, kTagLln, rep}, CheckpointRule::geometric(4.0));
        const Checkpoint& last = traj.checkpoints.back();
        ratios[rep] = last.V2 / static_cast<double>(last.n);
    });

    double tolerance = 0.15;
    std::size_t min_pass = reps > 0 ? reps - 1 : 0;
    if (cfg.contains("assert")) {
        const json& a = cfg.at("assert");
        check_keys(a, "/assert", {"tolerance", "minPass"}, {});
        tolerance = get_number_or(a, "tolerance", tolerance, "/assert");
        min_pass = get_count_or(a, "minPass", min_pass, "/assert");
    }
    std::size_t hits = 0;
    for (double r : ratios)
        if (std::fabs(r - target) <= tolerance) ++hits;

    std::ostringstream csv;
    csv << "seed,V2_over_N\n";
    for (std::size_t r = 0; r < reps; ++r)
        csv << r << ',' << format_double(ratios[r]) << '\n';

    ExperimentResult out;
    out.summary = {{"experiment", "lln"},
                   {"targetSigma2", target},
                   {"band", {band.bounds.lower, band.bounds.upper}},
                   {"mixtureAlpha", alpha},
                   {"horizon", horizon},
                   {"repetitions", reps},
                   {"ratios", ratios},
                   {"withinTolerance", hits},
                   {"tolerance", tolerance}};
    out.extra_files["lln_seeds.csv"] = csv.str();
    if (hits < min_pass)
        out.failures.push_back("V2/N within " + format_double(tolerance) +
                               " of target in only " + std::to_string(hits) + "/" +
                               std::to_string(reps) + " seeds (need " +
                               std::to_string(min_pass) + ")");
    return out;
}

void apply_band_assertions(const ClusterEstimate& est, const std::string& label,
                           const std::optional<std::array<double, 2>>& contains,
                           const std::optional<std::array<double, 2>>& within,
                           std::vector<std::string>& failures) {
    if (!est.has_interval) {
        if (contains || within) failures.push_back(label + ": no covered interval");
        return;
    }
    if (contains && !(est.lo <= (*contains)[0] && est.hi >= (*contains)[1]))
        failures.push_back(label + ": covered interval [" + format_double(est.lo) +
                           "," + format_double(est.hi) + "] does not contain [" +
                           format_double((*contains)[0]) + "," +
                           format_double((*contains)[1]) + "]");
    if (within && !(est.lo >= (*within)[0] && est.hi <= (*within)[1]))
        failures.push_back(label + ": covered interval [" + format_double(est.lo) +
                           "," + format_double(est.hi) + "] escapes [" +
                           format_double((*within)[0]) + "," +
                           format_double((*within)[1]) + "]");
}

std::optional<std::array<double, 2>> interval_or_null(const json& a,
                                                      const std::string& key,
                                                      const std::string& where) {
    if (!a.contains(key)) return std::nullopt;
    return get_interval(a.at(key), where + "/" + key);
}

ExperimentResult run_cluster(const json& cfg, std::uint64_t seed, int workers,
                             bool selfnorm_only) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "family", "policy",
                "schedule", "targetSigma2", "horizon", "window", "epsilon",
                "checkpointRatio", "assert"},
               {"family", "horizon"});
    (void)workers;
    const MeasureFamily fam = family_from_json(cfg.at("family"), "/family");
    const TruncationSchedule schedule = schedule_from_json(
        cfg.contains("schedule") ? &cfg.at("schedule") : nullptr, "/schedule");
    const std::uint64_t horizon = get_count(cfg, "horizon", "/");
    const double ratio = get_number_or(cfg, "checkpointRatio", 1.01, "/");
    const double epsilon = get_number_or(cfg, "epsilon", 0.1, "/");
    std::array<double, 2> window{1e3, static_cast<double>(horizon)};
    if (cfg.contains("window")) window = get_interval(cfg.at("window"), "/window");

    const SigmaBandResult band = sigma_bounds(fam);

    Policy policy = Policy::constant(0);
    double sigma_target2;
    if (cfg.contains("policy")) {
        policy = policy_from_json(cfg.at("policy"), "/policy");
        // R target for a constant policy is that member's own deviation scale
        sigma_target2 = policy.kind == Policy::Kind::Constant
                            ? band.member_limits[policy.theta]
                            : band.bounds.upper;
    } else if (cfg.contains("targetSigma2")) {
        sigma_target2 = get_number(cfg, "targetSigma2", "/");
        double alpha;
        try {
            alpha = mixture_weight(sigma_target2, band.bounds);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("/targetSigma2: ") + e.what());
        }
        const std::size_t lo = static_cast<std::size_t>(
            std::min_element(band.member_limits.begin(), band.member_limits.end()) -
            band.member_limits.begin());
        const std::size_t hi = static_cast<std::size_t>(
            std::max_element(band.member_limits.begin(), band.member_limits.end()) -
            band.member_limits.begin());
        policy = Policy::mixture(alpha, lo, hi);
    } else {
        throw config_error("/: needs either a policy or a targetSigma2");
    }
    const double sigma_target = std::sqrt(sigma_target2);

    const Trajectory traj =
        run_trajectory(fam, policy, schedule, horizon, {seed, kTagTrajectory, 0},
                       CheckpointRule::geometric(ratio));

    const std::uint64_t n0 = static_cast<std::uint64_t>(window[0]);
    const ClusterEstimate r_est = estimate_cluster(
        traj, ClusterStatistic::R, n0, epsilon,
        std::array<double, 2>{-sigma_target, sigma_target});
    const ClusterEstimate t_est = estimate_cluster(
        traj, ClusterStatistic::T, n0, epsilon, std::array<double, 2>{-1.0, 1.0});

    ExperimentResult out;
    out.summary = {{"experiment", selfnorm_only ? "selfnorm-lil" : "cluster"},
                   {"policy", policy.describe()},
                   {"band", {band.bounds.lower, band.bounds.upper}},
                   {"sigmaTarget", sigma_target},
                   {"horizon", horizon},
                   {"epsilon", epsilon},
                   {"T", cluster_to_json(t_est)},
                   {"maxAbsY", traj.max_abs_y}};
    if (!selfnorm_only) out.summary["R"] = cluster_to_json(r_est);
    const Checkpoint& last = traj.checkpoints.back();
    out.summary["finalV2overN"] = last.V2 / static_cast<double>(last.n);
    out.summary["finalV2overU2"] = last.U2 > 0 ? last.V2 / last.U2 : 1.0;
    out.extra_files["checkpoints.csv"] = checkpoints_csv(traj);

    if (cfg.contains("assert")) {
        const json& a = cfg.at("assert");
        check_keys(a, "/assert",
                   {"rContains", "rWithin", "tContains", "tWithin"}, {});
        apply_band_assertions(r_est, "R", interval_or_null(a, "rContains", "/assert"),
                              interval_or_null(a, "rWithin", "/assert"), out.failures);
        apply_band_assertions(t_est, "T", interval_or_null(a, "tContains", "/assert"),
                              interval_or_null(a, "tWithin", "/assert"), out.failures);
    }
    return out;
}

ExperimentResult run_verify_ineq(const json& cfg, std::uint64_t seed, int workers) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "repetitions", "grid"},
               {});
    const std::size_t reps = get_count_or(cfg, "repetitions", 100000, "/");
    if (cfg.contains("grid") && cfg.at("grid").get<std::string>() != "shipped")
        throw config_error("/grid: only the 'shipped' grid is available");

    ExperimentResult out;
    json reports = json::array();
    std::vector<VerificationConfig> grid = shipped_verification_grid();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const VerificationConfig& vc = grid[i];
        const TrajectorySeeds seeds{seed, kTagVerifyBase + i, 0};
        VerificationReport report;
        if (vc.martingale) {
            MartingaleSpec spec{vc.fam, vc.policy_set.front(), vc.n, vc.clamp_c};
            report = verify_martingale_ineq(spec, vc.x, vc.y, reps, seeds, workers);
        } else {
            const ExpIneqInputs inputs =
                make_exp_ineq_inputs(vc.fam, vc.n, vc.x, vc.y, vc.p, vc.delta);
            report = verify_exp_ineq(vc.fam, vc.policy_set, inputs, reps, seeds,
                                     workers);
        }
        report.name = vc.name;
        reports.push_back(verification_to_json(report));
        if (!report.pass)
            out.failures.push_back("inequality check failed: " + vc.name);
    }
    out.summary = {{"experiment", "verify-ineq"},
                   {"repetitions", reps},
                   {"reports", reports}};
    return out;
}

ExperimentResult run_diagnostics(const json& cfg, std::uint64_t seed, int workers) {
    check_keys(cfg, "/",
               {"version", "experiment", "masterSeed", "out", "family", "delta",
                "nMax", "smallOGrid", "dominance"},
               {"family"});
    const MeasureFamily fam = family_from_json(cfg.at("family"), "/family");
    const double delta = get_number_or(cfg, "delta", 1.0, "/");
    const std::uint64_t n_max = get_count_or(cfg, "nMax", 1000000, "/");

    ExperimentResult out;
    const SeriesDiagnostic series = series_diagnostic(fam, delta, n_max);
    json series_json = {{"checkpoints", series.checkpoints},
                        {"partialSumsTail", series.partial_sums_i},
                        {"partialSumsMoment", series.partial_sums_ii},
                        {"classTail", to_string(series.class_i)},
                        {"classMoment", to_string(series.class_ii)},
                        {"loglogMoment", to_string(series.companion)},
                        {"consistent", series.consistent}};
    if (!series.consistent)
        out.failures.push_back("series classification contradicts the loglog moment");

    std::vector<std::uint64_t> grid = {10000, 100000, 1000000};
    if (cfg.contains("smallOGrid")) {
        grid.clear();
        for (const json& g : cfg.at("smallOGrid")) grid.push_back(g.get<std::uint64_t>());
    }
    const SmallOReport smallo = smallo_checks(fam, delta, grid);
    json smallo_json = {{"grid", smallo.grid},
                        {"refused", smallo.refused},
                        {"ratioSecondMoment", smallo.ratio_second_moment},
                        {"ratioPlusPart", smallo.ratio_plus_part},
                        {"pass", smallo.pass}};
    if (smallo.refused) smallo_json["reason"] = smallo.reason;
    if (!smallo.refused && !smallo.pass)
        out.failures.push_back("small-o ratios are not decreasing on the grid");

    // converse-direction reading of the per-index tail capacities
    std::vector<double> caps;
    caps.reserve(100000);
    for (std::uint64_t n = 1; n <= 100000; ++n) {
        const double threshold =
            delta * std::sqrt(static_cast<double>(n) * loglog_c(static_cast<double>(n)));
        double c = 0.0;
        for (const Distribution& d : fam.members())
            c = std::fmax(c, d.prob_abs_ge(threshold, false));
        caps.push_back(c);
    }
    const BorelCantelliDiag bc = borel_cantelli_diag(caps);
    json bc_json = {{"class", to_string(bc.cls)},
                    {"sumFinite", bc.sum_finite},
                    {"impliedVerdict", bc.implied_verdict}};

    json dominance = json::array();
    if (cfg.contains("dominance")) {
        const json& dom = cfg.at("dominance");
        check_keys(dom, "/dominance",
                   {"policies", "horizon", "repetitions", "binEdges"}, {"policies"});
        const std::uint64_t horizon = get_count_or(dom, "horizon", 100, "/dominance");
        const std::size_t reps =
            get_count_or(dom, "repetitions", 100000, "/dominance");
        std::vector<double> edges = {-10.0, -3.0, 0.0, 3.0, 10.0};
        if (dom.contains("binEdges")) {
            edges.clear();
            for (const json& e : dom.at("binEdges")) edges.push_back(e.get<double>());
        }
        const RealFn phi = [](double x) { return std::clamp(x, -1.0, 1.0); };
        for (std::size_t i = 0; i < dom.at("policies").size(); ++i) {
            const Policy policy = policy_from_json(
                dom.at("policies")[i], "/dominance/policies/" + std::to_string(i));
            const DominanceReport rep = conditional_dominance_check(
                fam, policy, phi, horizon, reps, edges,
                {seed, kTagDominanceBase + i, 0}, workers);
            json bins = json::array();
            for (const DominanceBin& b : rep.bins)
                bins.push_back({{"lo", b.lo},
                                {"hi", b.hi},
                                {"count", b.count},
                                {"mean", b.mean},
                                {"stderr", b.stderr_},
                                {"exceeds", b.exceeds}});
            dominance.push_back({{"policy", policy.describe()},
                                 {"bound", rep.bound},
                                 {"bins", bins},
                                 {"pass", rep.pass}});
            if (!rep.pass)
                out.failures.push_back("conditional dominance failed for policy " +
                                       policy.describe());
        }
    }

    out.summary = {{"experiment", "diagnostics"},
                   {"delta", delta},
                   {"series", series_json},
                   {"smallO", smallo_json},
                   {"borelCantelli", bc_json},
                   {"dominance", dominance}};
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// axiom sweep
// ---------------------------------------------------------------------------

AxiomSweepResult run_axiom_sweep(std::size_t families, std::size_t max_members,
                                 std::size_t max_atoms, double tolerance,
                                 std::uint64_t seed) {
    RandomStream rng(seed, 0);
    AxiomSweepResult result;
    result.families = families;

    const auto coeff = [&rng] { return rng.uniform() * 4.0 - 2.0; };

    for (std::size_t f = 0; f < families; ++f) {
        const std::size_t members = 1 + rng.next_u64() % max_members;
        std::vector<Distribution> dists;
        for (std::size_t m = 0; m < members; ++m) {
            const std::size_t atoms = 1 + rng.next_u64() % max_atoms;
            std::vector<Atom> a;
            double total = 0.0;
            std::vector<double> weights;
            for (std::size_t k = 0; k < atoms; ++k) {
                weights.push_back(rng.uniform_pos());
                total += weights.back();
            }
            for (std::size_t k = 0; k < atoms; ++k)
                a.push_back({rng.uniform() * 8.0 - 4.0, weights[k] / total});
            dists.emplace_back(DiscreteDistribution(std::move(a)));
        }
        const MeasureFamily fam(std::move(dists));

        const double a0 = coeff(), a1 = coeff(), a2 = coeff();
        const double b0 = coeff(), b1 = coeff(), b2 = coeff();
        const RealFn phi = [=](double x) { return a0 + a1 * x + a2 * x * x; };
        const RealFn bump = [=](double x) {
            return std::fabs(b0 + b1 * x + b2 * x * x);
        };
        const RealFn psi = [=](double x) { return phi(x) + bump(x); };

        const double up_phi = upper_expect(fam, phi);
        const double up_psi = upper_expect(fam, psi);
        const double up_bump = upper_expect(fam, bump);

        // monotonicity: phi <= psi pointwise on every support
        if (!(up_phi <= up_psi + tolerance)) {
            result.monotonicity_ok = false;
            ++result.violations;
        }
        // constant preserving
        const double c = coeff();
        if (std::fabs(upper_expect(fam, [c](double) { return c; }) - c) > tolerance) {
            result.constants_ok = false;
            ++result.violations;
        }
        // sub-additivity
        const double both = upper_expect(fam, [&](double x) { return phi(x) + bump(x); });
        const double excess = both - (up_phi + up_bump);
        result.max_subadditivity_excess =
            std::fmax(result.max_subadditivity_excess, excess);
        if (excess > tolerance) ++result.violations;
        // positive homogeneity
        const double lambda = rng.uniform() * 4.0;
        const double scaled =
            upper_expect(fam, [&](double x) { return lambda * phi(x); });
        const double herr = std::fabs(scaled - lambda * up_phi);
        result.max_homogeneity_error = std::fmax(result.max_homogeneity_error, herr);
        if (herr > tolerance) ++result.violations;
        // conjugacy: the min route and the negated-max route agree bitwise
        const double lo = lower_expect(fam, phi);
        double direct_min = std::numeric_limits<double>::infinity();
        for (const Distribution& d : fam.members())
            direct_min = std::fmin(direct_min, expect(d, phi, fam.quadrature_tol()));
        if (lo != direct_min) {
            result.conjugacy_exact = false;
            ++result.violations;
        }
        // band ordering
        const SigmaBandResult band = sigma_bounds(fam);
        if (!(band.bounds.lower <= band.bounds.upper)) {
            result.band_ordered = false;
            ++result.violations;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// runner plumbing
// ---------------------------------------------------------------------------

json config_schema() {
    static const char* kSchema = R"SCHEMA({
  "version": 1,
  "title": "experiment configuration",
  "type": "object",
  "required": ["version", "experiment", "masterSeed"],
  "additionalProperties": false,
  "properties": {
    "version": {"const": 1},
    "experiment": {"enum": ["axioms", "choquet", "sigma", "lln", "selfnorm-lil",
                            "cluster", "verify-ineq", "diagnostics"]},
    "masterSeed": {"type": "integer", "minimum": 0},
    "out": {"type": "string"},
    "family": {
      "type": "object",
      "required": ["members"],
      "properties": {
        "members": {
          "type": "array",
          "minItems": 1,
          "items": {
            "oneOf": [
              {"properties": {"type": {"const": "gaussian"},
                              "mean": {"type": "number"},
                              "variance": {"type": "number", "exclusiveMinimum": 0}}},
              {"properties": {"type": {"const": "pareto"},
                              "tailIndex": {"type": "number", "exclusiveMinimum": 0},
                              "scale": {"type": "number", "exclusiveMinimum": 0}}},
              {"properties": {"type": {"const": "rademacher"},
                              "magnitude": {"type": "number", "exclusiveMinimum": 0}}},
              {"properties": {"type": {"const": "discrete"},
                              "atoms": {"type": "array",
                                        "items": {"type": "array",
                                                  "minItems": 2, "maxItems": 2}}}}
            ]
          }
        },
        "quadratureTol": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "policy": {
      "type": "object",
      "description": "constant|cyclic|mixture|greedy|scripted with per-kind fields",
      "properties": {
        "type": {"enum": ["constant", "cyclic", "mixture", "greedy", "scripted"]},
        "theta": {"type": "integer", "minimum": 0},
        "thetas": {"type": "array"},
        "hold": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "thetaLow": {"type": "integer", "minimum": 0},
        "thetaHigh": {"type": "integer", "minimum": 0},
        "objective": {"enum": ["maximize", "minimize"]}
      }
    },
    "schedule": {
      "type": "object",
      "properties": {
        "p": {"type": "number", "exclusiveMinimum": 2},
        "alphaQ": {"type": "number", "exclusiveMinimum": 0},
        "lambda": {"type": "number", "exclusiveMinimum": 1}
      }
    },
    "horizon": {"type": "integer", "minimum": 2},
    "repetitions": {"type": "integer", "minimum": 1},
    "window": {"type": "array", "minItems": 2, "maxItems": 2},
    "epsilon": {"type": "number", "exclusiveMinimum": 0},
    "checkpointRatio": {"type": "number", "exclusiveMinimum": 1},
    "targetSigma2": {"type": "number"},
    "delta": {"type": "number", "exclusiveMinimum": 0},
    "nMax": {"type": "integer", "minimum": 2000},
    "smallOGrid": {"type": "array"},
    "dominance": {
      "type": "object",
      "properties": {
        "policies": {"type": "array"},
        "horizon": {"type": "integer"},
        "repetitions": {"type": "integer"},
        "binEdges": {"type": "array"}
      }
    },
    "transforms": {"type": "array",
                   "items": {"enum": ["identity", "square", "squareOverLogLog"]}},
    "events": {"type": "array"},
    "count": {"type": "integer", "minimum": 1},
    "maxMembers": {"type": "integer", "minimum": 1},
    "maxAtoms": {"type": "integer", "minimum": 1},
    "tolerance": {"type": "number", "exclusiveMinimum": 0},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "grid": {"const": "shipped"},
    "assert": {"type": "object",
               "description": "per-experiment assertion bands and tolerances"}
  }
})SCHEMA";
    return json::parse(kSchema);
}
RunOutcome run_experiment(const json& cfg, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (!cfg.is_object()) throw config_error("/: config must be a JSON object");
    if (!cfg.contains("version") || !cfg.at("version").is_number_integer() ||
        cfg.at("version").get<int>() != 1)
        throw config_error("/version: expected the integer 1");
    if (!cfg.contains("experiment") || !cfg.at("experiment").is_string())
        throw config_error("/experiment: expected a string");
    if (!cfg.contains("masterSeed"))
        throw config_error("/masterSeed: required");
    const std::string experiment = cfg.at("experiment").get<std::string>();
    std::uint64_t seed = get_count(cfg, "masterSeed", "/");
    if (options.seed_override) seed = *options.seed_override;
    const int workers = options.workers > 0 ? options.workers : 1;

    ExperimentResult result;
    if (experiment == "axioms")
        result = run_axioms(cfg, seed, workers);
    else if (experiment == "choquet")
        result = run_choquet(cfg, seed, workers);
    else if (experiment == "sigma")
        result = run_sigma(cfg, seed, workers);
    else if (experiment == "lln")
        result = run_lln(cfg, seed, workers);
    else if (experiment == "cluster")
        result = run_cluster(cfg, seed, workers, false);
    else if (experiment == "selfnorm-lil")
        result = run_cluster(cfg, seed, workers, true);
    else if (experiment == "verify-ineq")
        result = run_verify_ineq(cfg, seed, workers);
    else if (experiment == "diagnostics")
        result = run_diagnostics(cfg, seed, workers);
    else
        throw config_error("/experiment: unknown kind '" + experiment + "'");

    // only write after the experiment completed
    std::string out_dir = options.out_dir;
    if (out_dir.empty() && cfg.contains("out"))
        out_dir = cfg.at("out").get<std::string>();
    if (out_dir.empty()) out_dir = experiment + "_run";
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create " + out_dir + ": " + ec.message());

    result.summary["assertionFailures"] = result.failures;
    result.summary["pass"] = result.failures.empty();

    std::map<std::string, std::string> outputs;
    outputs["summary.json"] = result.summary.dump(2) + "\n";
    for (const auto& [name, bytes] : result.extra_files) outputs[name] = bytes;
    for (const auto& [name, bytes] : outputs)
        write_file(fs::path(out_dir) / name, bytes);

    json digests = json::object();
    for (const auto& [name, bytes] : outputs) digests[name] = fnv1a_hex(bytes);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    json manifest{{"configEcho", cfg},
                  {"libraryVersion", kLibraryVersion},
                  {"experiment", experiment},
                  {"masterSeed", seed},
                  {"seeds",
                   {{"master", seed},
                    {"derivation",
                     "xoshiro256++ seeded by splitmix64(master ^ streamId * "
                     "0x9E3779B97F4A7C15); repetition r draws on stream 2r, "
                     "policy coins on 2r+1, experiment parts offset by a "
                     "40-bit tag"}}},
                  {"workers", workers},
                  {"wallClockSeconds", wall},
                  {"outputs", digests}};
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");

    RunOutcome outcome;
    outcome.run_dir = out_dir;
    outcome.failures = result.failures;
    outcome.exit_code = result.failures.empty() ? kExitOk : kExitAssertion;
    return outcome;
}

RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOptions& options) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw io_error("cannot read config " + config_path);
    json cfg;
    try {
        cfg = json::parse(in, nullptr, true, false);
    } catch (const json::parse_error& e) {
        throw config_error(config_path + ": " + e.what());
    }
    return run_experiment(cfg, options);
}

// ---------------------------------------------------------------------------
// plot-data emission
// ---------------------------------------------------------------------------

void emit_plot_data(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const fs::path cps = dir / "checkpoints.csv";
    std::ifstream in(cps, std::ios::binary);
    if (!in) throw io_error("no checkpoints.csv in " + run_dir);

    std::string header;
    std::getline(in, header);
    struct Row {
        std::uint64_t n;
        double S, V2, U2, R;
        std::string T;
    };
    std::vector<Row> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r;
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');
        r.n = std::stoull(field);
        std::getline(ls, field, ',');
        r.S = std::stod(field);
        std::getline(ls, field, ',');
        r.V2 = std::stod(field);
        std::getline(ls, field, ',');
        r.U2 = std::stod(field);
        std::getline(ls, field, ',');
        r.R = std::stod(field);
        std::getline(ls, r.T, ',');
        rows.push_back(std::move(r));
    }

    std::ostringstream r_csv, t_csv, v_csv, h_csv;
    r_csv << "n,R\n";
    t_csv << "n,T\n";
    v_csv << "n,V2_over_n\n";
    h_csv << "bin_lo,bin_hi,count\n";
    for (const Row& r : rows) {
        r_csv << r.n << ',' << format_double(r.R) << '\n';
        t_csv << r.n << ',' << r.T << '\n';
        v_csv << r.n << ','
              << format_double(r.V2 / static_cast<double>(r.n)) << '\n';
    }
    if (!rows.empty()) {
        double lo = rows.front().R, hi = rows.front().R;
        for (const Row& r : rows) {
            lo = std::fmin(lo, r.R);
            hi = std::fmax(hi, r.R);
        }
        const int bins = 41;
        const double width = hi > lo ? (hi - lo) / bins : 1.0;
        std::vector<std::uint64_t> counts(bins, 0);
        for (const Row& r : rows) {
            int b = static_cast<int>((r.R - lo) / width);
            if (b >= bins) b = bins - 1;
            if (b < 0) b = 0;
            ++counts[static_cast<std::size_t>(b)];
        }
        for (int b = 0; b < bins; ++b)
            h_csv << format_double(lo + b * width) << ','
                  << format_double(lo + (b + 1) * width) << ',' << counts[b] << '\n';
    }
    write_file(dir / "plot_r.csv", r_csv.str());
    write_file(dir / "plot_t.csv", t_csv.str());
    write_file(dir / "plot_v2n.csv", v_csv.str());
    write_file(dir / "cluster_hist.csv", h_csv.str());
}

} // namespace sublin
