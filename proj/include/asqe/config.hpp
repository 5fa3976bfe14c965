#pragma once

#include "asqe/anderson.hpp"
#include "asqe/gibbs.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asqe {

/// Schema violation; the message starts with the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  struct Grid {
    int n_per_dim = 64;
  };
  struct Operator {
    int cutoff_K = 12;
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;
    Counterterm counterterm = Counterterm::automatic();
    /// "white" (sampled xi) or "zero" (xi = 0).
    std::string noise = "white";
  };
  struct Sampler {
    std::string kind = "pcn";
    PcnSettings pcn;
    long n_samples = 1000;
  };
  struct Measure {
    std::vector<double> F_coeffs = {0.0, 0.0, 0.0, 0.0, 0.25};
    double N = 8.0;
    std::optional<double> M;
    Sampler sampler;
  };
  struct Dynamics {
    double dt = 5e-4;
    double t_max = 0.5;
    int record_every = 100;
    /// "ou", "full" or "finite_dim".
    std::string scheme = "full";
    long replicas = 2000;
  };
  struct Green {
    std::vector<double> N_values = {4.0, 8.0, 16.0};
    int distances = 48;
  };
  struct Check {
    std::vector<std::string> suites = {"all"};
    std::map<std::string, double> n_samples;
  };
  struct Output {
    std::string dir = "asqe_out";
    std::vector<std::string> formats = {"csv", "json", "bin"};
  };

  Grid grid;
  Operator op;
  Measure measure;
  Dynamics dynamics;
  Green green;
  Check check;
  Output output;

  /// Operator noise stream.
  RngSpec noise_spec() const { return {op.seed, op.stream_id}; }
  /// Root stream for sampling, dynamics and checks (disjoint from the noise stream).
  RngSpec run_spec() const { return noise_spec().child(1); }
  GibbsConfig gibbs() const;
  bool wants(const std::string& format) const;
  double n_samples_or(const std::string& key, double fallback) const;
};

/// Every suite name accepted by check.suites (plus "all").
const std::vector<std::string>& known_suites();
/// Keys accepted in check.n_samples.
const std::vector<std::string>& known_sample_overrides();

/// Validates against the schema; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
/// All fields, defaults included.
nlohmann::json to_json(const RunConfig& cfg);
/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace asqe
