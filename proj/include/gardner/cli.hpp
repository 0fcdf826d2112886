#pragma once
#include <gardner/capacity.hpp>
#include <gardner/percep.hpp>
#include <gardner/volume.hpp>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gardner {
namespace cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_usage = 2;

/// Bad flags, bad config files, out-of-range parameters.
class usage_error : public error
{
public:
    using error::error;
};

enum class Command
{
    theory_capacity,
    theory_quantum,
    saddle,
    empirical,
    volume,
    circuit_verify,
    selfavg
};

std::string to_string(Command command);

struct ExperimentConfig
{
    Command command = Command::theory_capacity;
    /// scalar kappa, epsilon, sigma for the commands that take them
    capacity::TheoryParams params{0.0, 0.5, 0.0};
    int n = 0;
    std::vector<double> alpha_grid;
    std::vector<double> kappa_grid;
    std::vector<double> sigma_grid;
    std::vector<double> epsilon_grid;
    std::vector<int> n_list;
    double alpha = 0.5;
    int trials = 0;
    int samples = 0;
    int shots = 0;
    int draws = 0;
    int bootstrap = 200;
    bool quantum = false;
    percep::Distribution dist = percep::Distribution::gaussian;
    volume::Method method = volume::Method::sequential;
    std::uint64_t seed = 1;
    std::string out_path = "-";
    int threads = 1;
};

/// Comma-separated reals, non-empty and strictly increasing.
std::vector<double> parse_grid(const std::string& text);
std::vector<int> parse_int_grid(const std::string& text);

/// Flat `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_config(std::istream& in);

/// Number formatting used in every CSV: 17 significant digits.
std::string format_real(double x);

/// Placeholder for cells that have no value.
inline constexpr const char* not_applicable = "NA";

// Each command writes its CSV (header first) to `out`, diagnostics to `log`,
// and returns the process exit code.
int cmd_theory_capacity(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_theory_quantum(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_saddle(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_empirical(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_volume(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_circuit_verify(const ExperimentConfig& config, std::ostream& out, std::ostream& log);
int cmd_selfavg(const ExperimentConfig& config, std::ostream& out, std::ostream& log);

int dispatch(const ExperimentConfig& config, std::ostream& out, std::ostream& log);

/// Full front end: argument parsing, config file, output routing.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace cli
} // namespace gardner
