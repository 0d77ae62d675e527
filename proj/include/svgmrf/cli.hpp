#pragma once

#include "svgmrf/synthgen.hpp"
#include "svgmrf/tuning.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace svgmrf {

enum class ExitCode : int {
    ok = 0,
    usage = 2,
    invalid_argument = 3,
    singular_backward_mapping = 4,
    not_positive_definite = 5,
    no_valid_model = 6,
    solver_failure = 7,
    io_error = 8,
    verification_failed = 9,
};

const char* exit_code_name(ExitCode code);

/// The exit code table shown by --help.
std::string exit_code_help();

/// Parses "c1=values,c2=values,c3=values" where values is lo:hi:n (log-spaced) or
/// v1/v2/... (explicit). Missing constants keep the default grid.
TuningGrid parse_grid(const std::string& text);

struct RunConfig {
    std::string subcommand;
    std::filesystem::path out = "out";

    // estimate, tune
    std::vector<std::filesystem::path> data;
    std::optional<std::filesystem::path> combined;
    int q = 2;
    std::optional<double> mu;
    std::optional<double> gamma;
    std::optional<double> nu;
    double nu_const = 1.0;
    std::string grid;
    /// "auto", "uniform" or a CSV path.
    std::string weights = "auto";
    unsigned workers = 1;
    bool center = false;
    bool diag_penalty = true;
    double tol_kkt = 1e-9;
    TuningParallelism parallelism = TuningParallelism::coordinates;

    // generate, benchmark
    SynthConfig synth;

    // evaluate
    std::filesystem::path truth_dir;
    std::filesystem::path estimate_dir;
    std::string experiment = "custom";

    // verify-theory
    Index max_k = 8;
    Index max_k_incoherence = 6;

    // benchmark
    std::vector<Index> dims{200, 400, 650};
    std::vector<Index> cluster_counts;
    int repeats = 1;
    double c1 = 0.5;
    double c2 = 0.5;
    double c3 = 0.5;
    /// Samples per cluster as a multiple of d.
    double sample_factor = 2.0;

    void validate() const;
};

/// A RunConfig that fails validation.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Runs one subcommand. Progress and per-phase timing lines go to `log`.
/// Library errors propagate as exceptions; a failed verify-theory sweep
/// returns ExitCode::verification_failed.
ExitCode run(const RunConfig& config, std::ostream& log);

/// Argument parsing, run() and the mapping of errors to exit codes. Errors
/// print one line: error: code=<name> exit=<n> message="...".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svgmrf
