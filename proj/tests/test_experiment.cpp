#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sublin/experiment.hpp"

using namespace sublin;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sublin_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json gaussian_pair_family() {
    return {{"members",
             {{{"type", "gaussian"}, {"mean", 0.0}, {"variance", 1.0}},
              {{"type", "gaussian"}, {"mean", 0.0}, {"variance", 4.0}}}}};
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("distribution literals round-trip") {
    const json literals = {
        {{"type", "gaussian"}, {"mean", 0.5}, {"variance", 2.0}},
        {{"type", "pareto"}, {"tailIndex", 3.0}, {"scale", 1.5}},
        {{"type", "rademacher"}, {"magnitude", 2.0}},
        {{"type", "discrete"}, {"atoms", {{-1.0, 0.25}, {2.0, 0.75}}}}};
    for (const json& j : literals) {
        const Distribution d = distribution_from_json(j, "/member");
        const json back = distribution_to_json(d);
        const Distribution d2 = distribution_from_json(back, "/member");
        CHECK(d.describe() == d2.describe());
    }
}

TEST_CASE("strict schema rejects unknown and malformed fields") {
    CHECK_THROWS_AS(distribution_from_json(
                        {{"type", "gaussian"}, {"mean", 0.0}, {"var", 1.0}}, "/m"),
                    config_error);
    CHECK_THROWS_AS(distribution_from_json({{"type", "cauchy"}}, "/m"), config_error);
    CHECK_THROWS_AS(policy_from_json({{"type", "constant"}}, "/p"), config_error);
    CHECK_THROWS_AS(
        policy_from_json({{"type", "greedy"}, {"objective", "sideways"}}, "/p"),
        config_error);

    const json cfg{{"version", 1},
                   {"experiment", "sigma"},
                   {"masterSeed", 1},
                   {"family", gaussian_pair_family()},
                   {"surprise", true}};
    RunOptions opt;
    opt.out_dir = (scratch_dir("unknown_field") / "run").string();
    CHECK_THROWS_AS(run_experiment(cfg, opt), config_error);
    CHECK_FALSE(fs::exists(opt.out_dir)); // nothing written on config errors
}

TEST_CASE("malformed JSON fails without outputs") {
    const fs::path dir = scratch_dir("malformed");
    const fs::path cfg = dir / "bad.json";
    {
        std::ofstream out(cfg);
        out << "{ not json";
    }
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    CHECK_THROWS_AS(run_experiment_file(cfg.string(), opt), config_error);
    CHECK_FALSE(fs::exists(opt.out_dir));
    CHECK_THROWS_AS(run_experiment_file((dir / "absent.json").string(), opt),
                    io_error);
}

TEST_CASE("sigma experiment writes a summary and honors assertions") {
    const fs::path dir = scratch_dir("sigma");
    const json cfg{{"version", 1},
                   {"experiment", "sigma"},
                   {"masterSeed", 7},
                   {"family", gaussian_pair_family()},
                   {"assert", {{"band", {1.0, 4.0}}, {"tol", 1e-6}}}};
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    const RunOutcome outcome = run_experiment(cfg, opt);
    CHECK(outcome.exit_code == kExitOk);
    const json summary = json::parse(slurp(fs::path(outcome.run_dir) / "summary.json"));
    CHECK(summary.at("pass").get<bool>());
    CHECK(summary.at("band")[0].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(summary.at("band")[1].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(summary.at("meanZero").at("pass").get<bool>());

    // a wrong expected band trips the assertion exit code
    json bad = cfg;
    bad["assert"]["band"] = {2.0, 4.0};
    RunOptions opt2;
    opt2.out_dir = (dir / "run_bad").string();
    const RunOutcome failed = run_experiment(bad, opt2);
    CHECK(failed.exit_code == kExitAssertion);
    CHECK(!failed.failures.empty());
}

TEST_CASE("manifest digests are recomputable from the outputs") {
    const fs::path dir = scratch_dir("digest");
    const json cfg{{"version", 1},
                   {"experiment", "choquet"},
                   {"masterSeed", 3},
                   {"family",
                    {{"members",
                      {{{"type", "discrete"}, {"atoms", {{0.0, 0.7}, {2.0, 0.3}}}},
                       {{"type", "discrete"},
                        {"atoms", {{0.0, 0.4}, {2.0, 0.6}}}}}}}},
                   {"transforms", {"identity"}},
                   {"assert",
                    {{"expected",
                      {{{"transform", "identity"},
                        {"side", "upper"},
                        {"value", 1.2},
                        {"tol", 1e-12}},
                       {{"transform", "identity"},
                        {"side", "lower"},
                        {"value", 0.6},
                        {"tol", 1e-12}}}}}}};
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    const RunOutcome outcome = run_experiment(cfg, opt);
    REQUIRE(outcome.exit_code == kExitOk);
    const json manifest =
        json::parse(slurp(fs::path(outcome.run_dir) / "manifest.json"));
    for (const auto& item : manifest.at("outputs").items()) {
        const std::string recomputed =
            digest_file((fs::path(outcome.run_dir) / item.key()).string());
        CHECK(item.value().get<std::string>() == recomputed);
    }
}

TEST_CASE("replay reproduces every CSV bit-for-bit at any worker count") {
    const fs::path dir = scratch_dir("replay");
    const json cfg{{"version", 1},
                   {"experiment", "lln"},
                   {"masterSeed", 20250809},
                   {"family",
                    {{"members",
                      {{{"type", "rademacher"}, {"magnitude", 1.0}},
                       {{"type", "rademacher"}, {"magnitude", 3.0}}}}}},
                   {"targetSigma2", 5.0},
                   {"horizon", 20000},
                   {"repetitions", 6},
                   {"assert", {{"tolerance", 0.15}, {"minPass", 5}}}};

    RunOptions serial;
    serial.out_dir = (dir / "serial").string();
    serial.workers = 1;
    RunOptions parallel;
    parallel.out_dir = (dir / "parallel").string();
    parallel.workers = 4;

    const RunOutcome a = run_experiment(cfg, serial);
    const RunOutcome b = run_experiment(cfg, parallel);
    CHECK(a.exit_code == kExitOk);
    CHECK(b.exit_code == kExitOk);
    CHECK(slurp(fs::path(a.run_dir) / "lln_seeds.csv") ==
          slurp(fs::path(b.run_dir) / "lln_seeds.csv"));
    CHECK(slurp(fs::path(a.run_dir) / "summary.json") ==
          slurp(fs::path(b.run_dir) / "summary.json"));

    // a second serial run replays byte-identically
    RunOptions again;
    again.out_dir = (dir / "again").string();
    const RunOutcome c = run_experiment(cfg, again);
    CHECK(slurp(fs::path(a.run_dir) / "lln_seeds.csv") ==
          slurp(fs::path(c.run_dir) / "lln_seeds.csv"));
}

TEST_CASE("cluster run emits checkpoints and plot data") {
    const fs::path dir = scratch_dir("cluster");
    const json cfg{{"version", 1},
                   {"experiment", "cluster"},
                   {"masterSeed", 20250809},
                   {"family",
                    {{"members", {{{"type", "gaussian"}, {"mean", 0.0},
                                   {"variance", 1.0}}}}}},
                   {"policy", {{"type", "constant"}, {"theta", 0}}},
                   {"horizon", 50000},
                   {"window", {100, 50000}},
                   {"epsilon", 0.2}};
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    const RunOutcome outcome = run_experiment(cfg, opt);
    REQUIRE(outcome.exit_code == kExitOk);

    const std::string cps = slurp(fs::path(outcome.run_dir) / "checkpoints.csv");
    const std::size_t rows = std::count(cps.begin(), cps.end(), '\n') - 1;
    CHECK(rows > 100);

    emit_plot_data(outcome.run_dir);
    for (const char* name : {"plot_r.csv", "plot_t.csv", "plot_v2n.csv"}) {
        const std::string plot = slurp(fs::path(outcome.run_dir) / name);
        CHECK(std::count(plot.begin(), plot.end(), '\n') == rows + 1);
    }
    const std::string hist = slurp(fs::path(outcome.run_dir) / "cluster_hist.csv");
    CHECK(std::count(hist.begin(), hist.end(), '\n') == 42); // header + 41 bins

    const json summary = json::parse(slurp(fs::path(outcome.run_dir) / "summary.json"));
    CHECK(summary.contains("R"));
    CHECK(summary.contains("T"));
    // unit-variance member: the truncated quadratic mass settles near 1
    CHECK(summary.at("finalV2overN").get<double>() > 0.9);
    CHECK(summary.at("finalV2overN").get<double>() < 1.1);
}

TEST_CASE("plot emission on an empty checkpoint file stays header-only") {
    const fs::path dir = scratch_dir("plot_empty");
    {
        std::ofstream out(dir / "checkpoints.csv", std::ios::binary);
        out << "n,S,V2,U2,R,T\n";
    }
    emit_plot_data(dir.string());
    CHECK(slurp(dir / "plot_r.csv") == "n,R\n");
    CHECK(slurp(dir / "plot_t.csv") == "n,T\n");
    CHECK(slurp(dir / "plot_v2n.csv") == "n,V2_over_n\n");
    CHECK(slurp(dir / "cluster_hist.csv") == "bin_lo,bin_hi,count\n");
    CHECK_THROWS_AS(emit_plot_data((dir / "absent").string()), io_error);
}

TEST_CASE("config schema names every experiment") {
    const json schema = config_schema();
    const auto& kinds = schema.at("properties").at("experiment").at("enum");
    CHECK(kinds.size() == 8);
}

TEST_CASE("axioms experiment") {
    const fs::path dir = scratch_dir("axioms");
    const json cfg{{"version", 1},
                   {"experiment", "axioms"},
                   {"masterSeed", 99},
                   {"count", 60}};
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    const RunOutcome outcome = run_experiment(cfg, opt);
    CHECK(outcome.exit_code == kExitOk);
}

TEST_CASE("verify-ineq experiment at reduced repetitions") {
    const fs::path dir = scratch_dir("verify");
    const json cfg{{"version", 1},
                   {"experiment", "verify-ineq"},
                   {"masterSeed", 20250809},
                   {"repetitions", 4000}};
    RunOptions opt;
    opt.out_dir = (dir / "run").string();
    opt.workers = 4;
    const RunOutcome outcome = run_experiment(cfg, opt);
    CHECK(outcome.exit_code == kExitOk);
    const json summary = json::parse(slurp(fs::path(outcome.run_dir) / "summary.json"));
    CHECK(summary.at("reports").size() >= 6);
    for (const json& r : summary.at("reports")) CHECK(r.at("pass").get<bool>());
}

} // TEST_SUITE
