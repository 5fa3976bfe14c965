#pragma once

// ASQE binary container:
//   "ASQE" | u32 version | u64 header length | UTF-8 JSON header | f64 arrays | u32 CRC32
// All integers and floats are little-endian. The header is
//   {"arrays": [{"name", "dtype": "f64le", "shape"}], "meta": {...}}
// and arrays follow in declared order, row-major. The CRC32 covers every
// preceding byte.

#include "asqe/anderson.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asqe {

inline constexpr std::uint32_t kContainerVersion = 1;

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  /// Row-major values.
  std::vector<double> data;

  static NamedArray vector(std::string name, const Eigen::VectorXd& v);
  static NamedArray matrix(std::string name, const Eigen::MatrixXd& m);
  Eigen::VectorXd as_vector() const;
  Eigen::MatrixXd as_matrix() const;
};

struct Container {
  std::vector<NamedArray> arrays;
  nlohmann::json meta = nlohmann::json::object();

  const NamedArray& array(const std::string& name) const;
};

std::string encode_container(const Container& c);
/// Throws ContainerError on a bad magic, version, layout or checksum.
Container decode_container(const std::string& bytes);
void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

// ---------------------------------------------------------------------------
// Eigendecomposition cache

struct OperatorKey {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  int cutoff_K = 0;
  int n_per_dim = 0;
  Counterterm counterterm;
  /// "white" or "zero".
  std::string noise = "white";

  std::string descriptor() const;
};

/// $ASQE_CACHE_DIR, else $XDG_CACHE_HOME/asqe, else $HOME/.cache/asqe, else ./.asqe_cache.
std::string cache_directory();
std::string cache_path(const OperatorKey& key, const std::string& dir);

/// The noise field for a key (zero or white noise from (master_seed, stream_id)).
Field operator_noise(const OperatorKey& key);

struct CacheResult {
  bool hit = false;
  std::vector<std::string> warnings;
};

/// Loads the eigendecomposition for `key` from `dir` or computes and stores it.
/// A checksum mismatch or a key mismatch discards the file with a warning.
AndersonOperator cached_operator(const OperatorKey& key, const std::string& dir, CacheResult* result = nullptr);

}  // namespace asqe
