#include <doctest.h>

#include "asqe/config.hpp"
#include "asqe/container.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace asqe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("asqe_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  } catch (const std::invalid_argument& e) {
    return std::string("invalid_argument: ") + e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config defaults") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.grid.n_per_dim == 64);
  CHECK(c.op.cutoff_K == 12);
  CHECK(c.op.counterterm.mode == Counterterm::Mode::automatic);
  CHECK(c.measure.F_coeffs == std::vector<double>{0, 0, 0, 0, 0.25});
  CHECK(c.measure.N == 8.0);
  CHECK_FALSE(c.measure.M);
  CHECK(c.dynamics.dt == 5e-4);
  CHECK(c.dynamics.scheme == "full");
  CHECK(c.wants("csv"));
  CHECK(c.run_spec() == c.noise_spec().child(1));
  CHECK(c.gibbs().pcn.beta == 0.2);
}

TEST_CASE("config round trip and hash") {
  const json j = {{"grid", {{"n_per_dim", 32}}},
                  {"operator", {{"cutoff_K", 8}, {"seed", 7}, {"counterterm", 0.5}, {"noise", "zero"}}},
                  {"measure", {{"F_coeffs", {1.0, 0.0, 2.0}}, {"N", 4}, {"M", 3.0}, {"sampler", {{"kind", "importance"}}}}},
                  {"dynamics", {{"scheme", "finite_dim"}, {"dt", 1e-3}}},
                  {"check", {{"suites", {"algebra", "dpd"}}, {"n_samples", {{"algebra", 1000}}}}},
                  {"output", {{"dir", "out"}, {"formats", {"json"}}}}};
  const RunConfig c = parse_config(j);
  CHECK(c.op.counterterm.mode == Counterterm::Mode::fixed);
  CHECK(c.op.counterterm.value == 0.5);
  CHECK(*c.measure.M == 3.0);
  CHECK(c.gibbs().sampler == GibbsConfig::Sampler::importance);
  CHECK(c.n_samples_or("algebra", 5.0) == 1000.0);
  CHECK(c.n_samples_or("dpd_replicas", 5.0) == 5.0);
  CHECK_FALSE(c.wants("csv"));

  const RunConfig again = parse_config(to_json(c));
  CHECK(to_json(again) == to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(config_hash(c).size() == 16);
  CHECK(config_hash(c) != config_hash(parse_config(json::object())));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config errors name the offending key") {
  CHECK(error_of({{"bogus", 1}}).find("bogus") != std::string::npos);
  CHECK(error_of({{"grid", {{"n_per_dim", 48}}}}).rfind("grid.n_per_dim", 0) == 0);
  CHECK(error_of({{"grid", {{"n_per_dim", 16}}}, {"operator", {{"cutoff_K", 6}}}}).find("cutoff_K") != std::string::npos);
  CHECK(error_of({{"measure", {{"F_coeffs", {0, 0, 0, 1}}}}}).rfind("measure.F_coeffs", 0) == 0);
  CHECK(error_of({{"measure", {{"F_coeffs", {0, 0, -1}}}}}).rfind("measure.F_coeffs", 0) == 0);
  CHECK(error_of({{"measure", {{"sampler", {{"kind", "gibbs"}}}}}}).rfind("measure.sampler.kind", 0) == 0);
  CHECK(error_of({{"dynamics", {{"scheme", "finite_dim"}}}}).rfind("dynamics.scheme", 0) == 0);
  CHECK(error_of({{"dynamics", {{"dt", -1.0}}}}).rfind("dynamics.dt", 0) == 0);
  CHECK(error_of({{"check", {{"suites", {"nope"}}}}}).rfind("check.suites", 0) == 0);
  CHECK(error_of({{"check", {{"n_samples", {{"nope", 3}}}}}}).rfind("check.n_samples", 0) == 0);
  CHECK(error_of({{"operator", {{"seed", "x"}}}}).rfind("operator.seed", 0) == 0);
  CHECK(error_of({{"operator", {{"counterterm", "manual"}}}}).rfind("operator.counterterm", 0) == 0);
  CHECK_THROWS_AS(load_config("/nonexistent/asqe.json"), ConfigError);
}

TEST_CASE("container round trip") {
  Container c;
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  c.arrays.push_back(NamedArray::matrix("m", m));
  c.arrays.push_back(NamedArray::vector("v", Eigen::Vector2d(-0.5, 1e300)));
  c.meta = {{"note", "x"}, {"n", 3}};

  const std::string bytes = encode_container(c);
  CHECK(bytes.substr(0, 4) == "ASQE");
  const Container d = decode_container(bytes);
  CHECK(d.array("m").as_matrix() == m);
  CHECK(d.array("m").data == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(d.array("v").as_vector() == Eigen::Vector2d(-0.5, 1e300));
  CHECK(d.meta == c.meta);
  CHECK_THROWS_AS(d.array("missing"), ContainerError);

  const fs::path dir = scratch_dir("container");
  write_container((dir / "a.asqe").string(), c);
  CHECK(read_container((dir / "a.asqe").string()).array("m").as_matrix() == m);
}

TEST_CASE("container corruption is detected") {
  Container c;
  c.arrays.push_back(NamedArray::vector("v", Eigen::Vector3d(1, 2, 3)));
  const std::string bytes = encode_container(c);

  std::string flipped = bytes;
  flipped[bytes.size() - 10] ^= 0x01;
  CHECK_THROWS_WITH_AS(decode_container(flipped), "container: checksum mismatch", ContainerError);
  CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 3)), ContainerError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_container(magic), "container: bad magic", ContainerError);
  CHECK_THROWS_AS(decode_container(""), ContainerError);

  NamedArray bad{"x", {2, 2}, {1.0}};
  Container wrong;
  wrong.arrays.push_back(bad);
  CHECK_THROWS_AS(encode_container(wrong), ContainerError);
}

TEST_CASE("eigendecomposition cache") {
  const fs::path dir = scratch_dir("cache");
  OperatorKey key{2024, 0, 4, 16, Counterterm::automatic(), "white"};

  CacheResult first, second;
  const AndersonOperator a = cached_operator(key, dir.string(), &first);
  CHECK_FALSE(first.hit);
  CHECK(fs::exists(cache_path(key, dir.string())));
  const AndersonOperator b = cached_operator(key, dir.string(), &second);
  CHECK(second.hit);
  CHECK(second.warnings.empty());
  CHECK(a.eigenvalues() == b.eigenvalues());
  CHECK(a.eigenvectors() == b.eigenvectors());
  CHECK(a.counterterm() == b.counterterm());
  CHECK(a.xi().values() == b.xi().values());

  OperatorKey other = key;
  other.stream_id = 1;
  CHECK(cache_path(other, dir.string()) != cache_path(key, dir.string()));
  other = key;
  other.noise = "zero";
  CHECK(cache_path(other, dir.string()) != cache_path(key, dir.string()));

  // Corrupt one byte: the loader warns and recomputes the same operator.
  const std::string path = cache_path(key, dir.string());
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char ch;
    f.seekg(200);
    f.get(ch);
    f.seekp(200);
    f.put(static_cast<char>(ch ^ 0x20));
  }
  CacheResult third;
  const AndersonOperator c = cached_operator(key, dir.string(), &third);
  CHECK_FALSE(third.hit);
  REQUIRE(third.warnings.size() == 1);
  CHECK(third.warnings.front().find("checksum") != std::string::npos);
  CHECK(c.eigenvalues() == a.eigenvalues());

  CacheResult fourth;
  cached_operator(key, dir.string(), &fourth);
  CHECK(fourth.hit);
}

TEST_CASE("cache directory resolution") {
  setenv("ASQE_CACHE_DIR", "/tmp/asqe_cache_here", 1);
  CHECK(cache_directory() == "/tmp/asqe_cache_here");
  unsetenv("ASQE_CACHE_DIR");
  setenv("XDG_CACHE_HOME", "/tmp/xdg", 1);
  CHECK(cache_directory() == "/tmp/xdg/asqe");
  unsetenv("XDG_CACHE_HOME");
}
