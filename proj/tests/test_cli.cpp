#include <doctest.h>

#include "asqe/cli.hpp"
#include "asqe/container.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace asqe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

struct Workspace {
  fs::path root;

  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("asqe_test_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
    setenv("ASQE_CACHE_DIR", (root / "cache").c_str(), 1);
  }

  std::string config(json j) const {
    j["output"]["dir"] = (root / "out").string();
    const fs::path p = root / "config.json";
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  fs::path out(const std::string& file) const { return root / "out" / file; }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

json small_operator(const std::string& noise = "white") {
  return {{"grid", {{"n_per_dim", 16}}}, {"operator", {{"cutoff_K", 4}, {"seed", 3}, {"noise", noise}}}};
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitValidation);
  CHECK(run({"frobnicate"}).code == kExitValidation);
  CHECK(run({"spectrum", "--config", "/nonexistent.json"}).code == kExitValidation);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("spectrum outputs") {
  const Workspace ws("spectrum");
  const Run r = run({"spectrum", "--config", ws.config(small_operator("zero"))});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(ws.out("config.json")));
  CHECK(fs::exists(ws.out("spectrum.csv")));
  const json j = read_json(ws.out("spectrum.json"));
  CHECK(j.contains("config_hash"));
  CHECK(j.contains("seeds"));
  const Container c = read_container(ws.out("spectrum.asqe").string());
  const Eigen::VectorXd lambda = c.arrays.front().as_vector();
  CHECK(lambda.size() == 49);
  CHECK(lambda[0] == doctest::Approx(1.0));
  CHECK(lambda[1] == doctest::Approx(2.0));
  std::ifstream csv(ws.out("spectrum.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "n,lambda,raw_lambda");

  const Run again = run({"spectrum", "--config", ws.config(small_operator("zero"))});
  CHECK(again.code == kExitOk);
  CHECK(read_container(ws.out("spectrum.asqe").string()).arrays.front().as_vector() == lambda);
}

TEST_CASE("validation errors exit with code 1 and name the key") {
  const Workspace ws("validation");
  json odd = small_operator();
  odd["measure"]["F_coeffs"] = {0, 0, 0, 1};
  const Run r = run({"sample-gibbs", "--config", ws.config(odd)});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("F_coeffs") != std::string::npos);

  json unknown = small_operator();
  unknown["operator"]["colour"] = "red";
  const Run u = run({"spectrum", "--config", ws.config(unknown)});
  CHECK(u.code == kExitValidation);
  CHECK(u.err.find("operator.colour") != std::string::npos);

  const Run inv = run({"invariance", "--config", ws.config(small_operator())});
  CHECK(inv.code == kExitValidation);
  CHECK(inv.err.find("config_hash=") != std::string::npos);
}

TEST_CASE("sampling and simulation commands") {
  const Workspace ws("sampling");
  json j = small_operator();
  j["measure"] = {{"N", 4}, {"sampler", {{"n_samples", 40}, {"burn_in", 20}, {"thin", 2}, {"chains", 2}}}};
  j["dynamics"] = {{"dt", 0.001}, {"t_max", 0.02}, {"record_every", 5}};
  const std::string cfg = ws.config(j);

  CHECK(run({"sample-gff", "--config", cfg}).code == kExitOk);
  CHECK(read_container(ws.out("gff.asqe").string()).arrays.front().shape.size() == 2);
  CHECK(run({"sample-gibbs", "--config", cfg}).code == kExitOk);
  const json g = read_json(ws.out("gibbs.json"));
  CHECK(g.contains("config_hash"));
  CHECK(run({"--threads", "2", "simulate", "--config", cfg}).code == kExitOk);
  const json t = read_json(ws.out("trajectory.json"));
  CHECK(t["halted"] == false);
  CHECK(fs::exists(ws.out("trajectory.csv")));
}

TEST_CASE("blow-up exits with code 2") {
  const Workspace ws("blowup");
  json j = small_operator();
  j["measure"] = {{"F_coeffs", {0, 0, 0, 0, 200}}, {"N", 4}};
  j["dynamics"] = {{"dt", 0.5}, {"t_max", 50.0}, {"record_every", 1}};
  const Run r = run({"simulate", "--config", ws.config(j)});
  CHECK(r.code == kExitNumerical);
  CHECK(r.err.find("seed=3") != std::string::npos);
}

TEST_CASE("check command") {
  const Workspace ws("check");
  json j = small_operator();
  j["check"] = {{"n_samples", {{"algebra", 20000}}}};
  const Run r = run({"check", "--suites", "algebra", "--config", ws.config(j)});
  CHECK(r.code == kExitOk);
  const json report = read_json(ws.out("check_algebra.json"));
  CHECK(report["pass"] == true);
  CHECK(run({"check", "--suites", "nope", "--config", ws.config(j)}).code == kExitValidation);
}
