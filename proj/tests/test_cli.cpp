// End-to-end checks of the command-line runner and its exit-code contract.
// argv[1] = path to the CLI binary, argv[2] = shipped configs directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void require(bool ok, const std::string& what) {
    if (ok) {
        std::printf("[PASS] %s\n", what.c_str());
    } else {
        std::printf("[FAIL] %s\n", what.c_str());
        ++g_failures;
    }
}

int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: test_cli <cli-binary> <configs-dir>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path configs = argv[2];
    const fs::path scratch = fs::temp_directory_path() / "sublin_cli_test";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const std::string quiet = " > /dev/null 2>&1";

    // schema prints parseable JSON covering every experiment kind
    {
        const fs::path out = scratch / "schema.json";
        const int rc = run_command(cli + " schema > " + out.string() + " 2>/dev/null");
        require(rc == 0, "schema exits 0");
        std::ifstream in(out);
        nlohmann::json schema;
        bool parsed = true;
        try {
            in >> schema;
        } catch (...) {
            parsed = false;
        }
        require(parsed, "schema output parses as JSON");
        require(parsed && schema.at("properties").at("experiment").at("enum").size() == 8,
                "schema enumerates the 8 experiment kinds");
    }

    // a valid run exits 0 and leaves manifest + summary behind
    {
        const fs::path out = scratch / "sigma";
        const int rc = run_command(cli + " run " + (configs / "sigma.json").string() +
                                   " --out " + out.string() + quiet);
        require(rc == 0, "sigma run exits 0");
        require(fs::exists(out / "summary.json") && fs::exists(out / "manifest.json"),
                "sigma run writes summary and manifest");
    }

    // malformed config: exit 2, nothing written
    {
        const fs::path bad = scratch / "bad.json";
        std::ofstream(bad) << "{ definitely not json";
        const fs::path out = scratch / "bad_run";
        const int rc =
            run_command(cli + " run " + bad.string() + " --out " + out.string() + quiet);
        require(rc == 2, "malformed config exits 2");
        require(!fs::exists(out), "malformed config writes nothing");
    }

    // unknown field: exit 2
    {
        const fs::path bad = scratch / "unknown.json";
        std::ofstream(bad) << R"({"version":1,"experiment":"axioms","masterSeed":1,)"
                           << R"("count":50,"pets":"cat"})";
        const int rc = run_command(cli + " run " + bad.string() + " --out " +
                                   (scratch / "unknown_run").string() + quiet);
        require(rc == 2, "unknown config field exits 2");
    }

    // failed assertion: exit 3, outputs still written for inspection
    {
        const fs::path bad = scratch / "assert.json";
        std::ofstream(bad)
            << R"({"version":1,"experiment":"sigma","masterSeed":1,)"
            << R"("family":{"members":[{"type":"gaussian","mean":0.0,"variance":1.0}]},)"
            << R"("assert":{"band":[2.0,3.0],"tol":1e-6}})";
        const fs::path out = scratch / "assert_run";
        const int rc =
            run_command(cli + " run " + bad.string() + " --out " + out.string() + quiet);
        require(rc == 3, "failed assertion exits 3");
        require(fs::exists(out / "summary.json"), "failed assertion still writes summary");
    }

    // plot on a completed run; plot on a missing run exits 4
    {
        const fs::path out = scratch / "cluster";
        const fs::path cfg = scratch / "cluster_small.json";
        std::ofstream(cfg)
            << R"({"version":1,"experiment":"cluster","masterSeed":777,)"
            << R"("family":{"members":[{"type":"gaussian","mean":0.0,"variance":1.0}]},)"
            << R"("policy":{"type":"constant","theta":0},)"
            << R"("horizon":50000,"window":[100,50000],"epsilon":0.2})";
        const int rc =
            run_command(cli + " run " + cfg.string() + " --out " + out.string() + quiet);
        require(rc == 0, "small cluster run exits 0");
        const int plot_rc = run_command(cli + " plot " + out.string() + quiet);
        require(plot_rc == 0, "plot exits 0");
        require(fs::exists(out / "plot_r.csv") && fs::exists(out / "plot_t.csv") &&
                    fs::exists(out / "plot_v2n.csv") &&
                    fs::exists(out / "cluster_hist.csv"),
                "plot writes its four CSVs");
        const int missing_rc =
            run_command(cli + " plot " + (scratch / "nowhere").string() + quiet);
        require(missing_rc == 4, "plot on a missing run exits 4");
    }

    // --seed overrides the config seed; output reflects it
    {
        const fs::path out = scratch / "seeded";
        const int rc = run_command(cli + " run " + (configs / "axioms.json").string() +
                                   " --out " + out.string() + " --seed 999" + quiet);
        require(rc == 0, "seed override run exits 0");
        std::ifstream in(out / "manifest.json");
        nlohmann::json manifest;
        in >> manifest;
        require(manifest.at("masterSeed").get<std::uint64_t>() == 999,
                "manifest records the overridden seed");
    }

    // every shipped quick config runs clean end to end
    for (const char* name :
         {"choquet.json", "cluster_mixture.json", "selfnorm.json",
          "diagnostics_pareto.json", "diagnostics_rademacher.json"}) {
        const fs::path out = scratch / ("shipped_" + std::string(name));
        const int rc = run_command(cli + " run " + (configs / name).string() +
                                   " --out " + out.string() + " --workers 4" + quiet);
        require(rc == 0, std::string("shipped config ") + name + " exits 0");
    }

    if (g_failures) {
        std::printf("%d CLI check(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all CLI checks passed\n");
    return 0;
}
