#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace khabi::cli {

enum class Format { csv, json, human };

struct RunConfig {
    std::string command;
    int n = 2;
    std::optional<double> rho;
    std::optional<double> rho_min;
    std::optional<double> rho_max;
    int steps = 1;
    int iters = 200;
    double tol = 1e-10;
    double root_tol = 1e-13;
    bool extended = false;
    Format format = Format::human;
    std::string out;
    std::string plot;

    /// The rho values to evaluate, in ascending order.
    std::vector<double> rho_values() const;
};

using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

enum ExitCode : int { ok = 0, usage = 1, oracle_failure = 2, non_convergence = 3 };

/// Parses argv and runs one subcommand. Results go to `out` (or the --out file),
/// diagnostics to `err`. `env_tol` is the value of KHABI_TOL, if set.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const char* env_tol = nullptr);

/// Renders a finished table in the configured format.
std::string render(const RunConfig& config, const Table& table, const std::string& residuals_json);

} // namespace khabi::cli
