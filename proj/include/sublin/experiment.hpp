#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublin/inequalities.hpp"
#include "sublin/simulate.hpp"

namespace sublin {

// exit-code contract: 0 ok, 2 config error, 3 assertion failure, 4 I/O error
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAssertion = 3;
inline constexpr int kExitIo = 4;

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

struct RunOptions {
    std::string out_dir;            // overrides the config's output directory
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::string run_dir;
    std::vector<std::string> failures; // failed assertion descriptions
};

// Parse + validate (strict: unknown fields are rejected), then execute and
// persist manifest / summary / checkpoint CSVs into the run directory.
RunOutcome run_experiment(const nlohmann::json& config, const RunOptions& options);
RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOptions& options);

// Tidy plot CSVs ((n,R), (n,T), (n,V2/n), histogram) from a completed run.
void emit_plot_data(const std::string& run_dir);

// The versioned config schema as a JSON document.
nlohmann::json config_schema();

// JSON literals <-> domain objects (shared with tests)
Distribution distribution_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json distribution_to_json(const Distribution& d);
Policy policy_from_json(const nlohmann::json& j, const std::string& where);

// FNV-1a 64-bit digest, the recomputable manifest fingerprint.
std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

// Definition 1-style axiom sweep over random finitely-supported families;
// shared by the `axioms` experiment and the acceptance suite.
struct AxiomSweepResult {
    std::size_t families = 0;
    std::size_t violations = 0;
    double max_subadditivity_excess = 0.0;
    double max_homogeneity_error = 0.0;
    bool conjugacy_exact = true;
    bool monotonicity_ok = true;
    bool constants_ok = true;
    bool band_ordered = true;
};

AxiomSweepResult run_axiom_sweep(std::size_t families, std::size_t max_members,
                                 std::size_t max_atoms, double tolerance,
                                 std::uint64_t seed);

} // namespace sublin
