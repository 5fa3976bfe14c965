#include "asqe/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace asqe {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json* member(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "must be finite");
  return d;
}

long get_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<long>();
}

std::uint64_t get_unsigned(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

template <typename T, typename Get>
void read(const json& obj, const char* key, const std::string& path, T& out, Get get) {
  if (const json* v = member(obj, key)) out = get(*v, path + "." + key);
}

void one_of(const std::string& value, const std::string& path, const std::vector<std::string>& options) {
  if (std::find(options.begin(), options.end(), value) == options.end()) {
    std::string list;
    for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
    fail(path, "\"" + value + "\" is not one of {" + list + "}");
  }
}

bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s = {"algebra", "spectrum", "green",     "fields",
                                             "semigroup", "invariance", "partition", "dpd"};
  return s;
}

const std::vector<std::string>& known_sample_overrides() {
  static const std::vector<std::string> s = {"algebra",
                                             "fields_covariance",
                                             "fields_cauchy",
                                             "fields_ou_replicas",
                                             "semigroup_fields",
                                             "invariance_replicas",
                                             "invariance_bias_replicas",
                                             "invariance_control_replicas",
                                             "partition",
                                             "dpd_replicas"};
  return s;
}

GibbsConfig RunConfig::gibbs() const {
  GibbsConfig g;
  g.poly = WickPolynomial(measure.F_coeffs);
  g.N = measure.N;
  g.M = measure.M;
  g.sampler = measure.sampler.kind == "importance" ? GibbsConfig::Sampler::importance : GibbsConfig::Sampler::pcn;
  g.pcn = measure.sampler.pcn;
  return g;
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

double RunConfig::n_samples_or(const std::string& key, double fallback) const {
  auto it = check.n_samples.find(key);
  return it == check.n_samples.end() ? fallback : it->second;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  reject_unknown(j, "", {"grid", "operator", "measure", "dynamics", "green", "check", "output"});

  if (const json* g = member(j, "grid")) {
    reject_unknown(*g, "grid", {"n_per_dim"});
    long n = c.grid.n_per_dim;
    read(*g, "n_per_dim", "grid", n, get_integer);
    if (n < 8 || !is_power_of_two(n) || n > 4096) fail("grid.n_per_dim", "must be a power of two in [8, 4096]");
    c.grid.n_per_dim = static_cast<int>(n);
  }

  if (const json* o = member(j, "operator")) {
    reject_unknown(*o, "operator", {"cutoff_K", "seed", "stream_id", "counterterm", "noise"});
    long K = c.op.cutoff_K;
    read(*o, "cutoff_K", "operator", K, get_integer);
    if (K < 1 || K > 1000) fail("operator.cutoff_K", "must be in [1, 1000]");
    c.op.cutoff_K = static_cast<int>(K);
    read(*o, "seed", "operator", c.op.seed, get_unsigned);
    read(*o, "stream_id", "operator", c.op.stream_id, get_unsigned);
    if (const json* ct = member(*o, "counterterm")) {
      if (ct->is_string()) {
        if (ct->get<std::string>() != "auto") fail("operator.counterterm", "expected \"auto\" or a number");
        c.op.counterterm = Counterterm::automatic();
      } else {
        c.op.counterterm = Counterterm::fixed(get_number(*ct, "operator.counterterm"));
      }
    }
    read(*o, "noise", "operator", c.op.noise, get_string);
    one_of(c.op.noise, "operator.noise", {"white", "zero"});
  }
  if (3 * c.op.cutoff_K > c.grid.n_per_dim) fail("operator.cutoff_K", "requires 3 * cutoff_K <= grid.n_per_dim");

  if (const json* m = member(j, "measure")) {
    reject_unknown(*m, "measure", {"F_coeffs", "N", "M", "sampler"});
    if (const json* f = member(*m, "F_coeffs")) {
      if (!f->is_array()) fail("measure.F_coeffs", "expected an array of numbers");
      c.measure.F_coeffs.clear();
      for (std::size_t i = 0; i < f->size(); ++i)
        c.measure.F_coeffs.push_back(get_number((*f)[i], "measure.F_coeffs[" + std::to_string(i) + "]"));
    }
    read(*m, "N", "measure", c.measure.N, get_number);
    if (const json* M = member(*m, "M"); M && !M->is_null()) c.measure.M = get_number(*M, "measure.M");
    if (const json* s = member(*m, "sampler")) {
      reject_unknown(*s, "measure.sampler", {"kind", "beta", "burn_in", "thin", "chains", "n_samples"});
      auto& sp = c.measure.sampler;
      read(*s, "kind", "measure.sampler", sp.kind, get_string);
      one_of(sp.kind, "measure.sampler.kind", {"pcn", "importance"});
      read(*s, "beta", "measure.sampler", sp.pcn.beta, get_number);
      long v = sp.pcn.burn_in;
      read(*s, "burn_in", "measure.sampler", v, get_integer);
      sp.pcn.burn_in = static_cast<int>(v);
      v = sp.pcn.thin;
      read(*s, "thin", "measure.sampler", v, get_integer);
      sp.pcn.thin = static_cast<int>(v);
      v = sp.pcn.chains;
      read(*s, "chains", "measure.sampler", v, get_integer);
      sp.pcn.chains = static_cast<int>(v);
      read(*s, "n_samples", "measure.sampler", sp.n_samples, get_integer);
    }
  }
  try {
    WickPolynomial p(c.measure.F_coeffs);
  } catch (const std::invalid_argument& e) {
    fail("measure.F_coeffs", e.what());
  }
  if (!(c.measure.N >= 1.0)) fail("measure.N", "must be >= 1");
  if (c.measure.M && !(*c.measure.M > 0.0)) fail("measure.M", "must be > 0");
  const auto& sp = c.measure.sampler;
  if (!(sp.pcn.beta > 0.0 && sp.pcn.beta <= 1.0)) fail("measure.sampler.beta", "must lie in (0, 1]");
  if (sp.pcn.burn_in < 0) fail("measure.sampler.burn_in", "must be >= 0");
  if (sp.pcn.thin < 1) fail("measure.sampler.thin", "must be >= 1");
  if (sp.pcn.chains < 1) fail("measure.sampler.chains", "must be >= 1");
  if (sp.n_samples < 1) fail("measure.sampler.n_samples", "must be >= 1");

  if (const json* d = member(j, "dynamics")) {
    reject_unknown(*d, "dynamics", {"dt", "t_max", "record_every", "scheme", "replicas"});
    read(*d, "dt", "dynamics", c.dynamics.dt, get_number);
    read(*d, "t_max", "dynamics", c.dynamics.t_max, get_number);
    long r = c.dynamics.record_every;
    read(*d, "record_every", "dynamics", r, get_integer);
    c.dynamics.record_every = static_cast<int>(r);
    read(*d, "scheme", "dynamics", c.dynamics.scheme, get_string);
    one_of(c.dynamics.scheme, "dynamics.scheme", {"ou", "full", "finite_dim"});
    read(*d, "replicas", "dynamics", c.dynamics.replicas, get_integer);
  }
  if (!(c.dynamics.dt > 0.0)) fail("dynamics.dt", "must be > 0");
  if (!(c.dynamics.t_max > 0.0)) fail("dynamics.t_max", "must be > 0");
  if (c.dynamics.t_max / c.dynamics.dt > 1e7) fail("dynamics.dt", "t_max / dt exceeds 1e7 steps");
  if (c.dynamics.record_every < 1) fail("dynamics.record_every", "must be >= 1");
  if (c.dynamics.replicas < 1) fail("dynamics.replicas", "must be >= 1");
  if (c.dynamics.scheme == "finite_dim" && !c.measure.M) fail("dynamics.scheme", "finite_dim requires measure.M");

  if (const json* g = member(j, "green")) {
    reject_unknown(*g, "green", {"N_values", "distances"});
    if (const json* nv = member(*g, "N_values")) {
      if (!nv->is_array() || nv->empty()) fail("green.N_values", "expected a non-empty array");
      c.green.N_values.clear();
      for (std::size_t i = 0; i < nv->size(); ++i) {
        const double v = get_number((*nv)[i], "green.N_values[" + std::to_string(i) + "]");
        if (!(v >= 1.0)) fail("green.N_values", "entries must be >= 1");
        c.green.N_values.push_back(v);
      }
    }
    long d = c.green.distances;
    read(*g, "distances", "green", d, get_integer);
    if (d < 2) fail("green.distances", "must be >= 2");
    c.green.distances = static_cast<int>(d);
  }

  if (const json* k = member(j, "check")) {
    reject_unknown(*k, "check", {"suites", "n_samples"});
    if (const json* s = member(*k, "suites")) {
      if (!s->is_array()) fail("check.suites", "expected an array of names");
      c.check.suites.clear();
      for (std::size_t i = 0; i < s->size(); ++i) {
        const std::string name = get_string((*s)[i], "check.suites[" + std::to_string(i) + "]");
        if (name != "all") one_of(name, "check.suites", known_suites());
        c.check.suites.push_back(name);
      }
    }
    if (const json* ns = member(*k, "n_samples")) {
      if (!ns->is_object()) fail("check.n_samples", "expected an object");
      for (const auto& [key, value] : ns->items()) {
        one_of(key, "check.n_samples", known_sample_overrides());
        const double v = get_number(value, "check.n_samples." + key);
        if (!(v >= 1.0)) fail("check.n_samples." + key, "must be >= 1");
        c.check.n_samples[key] = v;
      }
    }
  }

  if (const json* o = member(j, "output")) {
    reject_unknown(*o, "output", {"dir", "formats"});
    read(*o, "dir", "output", c.output.dir, get_string);
    if (c.output.dir.empty()) fail("output.dir", "must not be empty");
    if (const json* f = member(*o, "formats")) {
      if (!f->is_array()) fail("output.formats", "expected an array");
      c.output.formats.clear();
      for (std::size_t i = 0; i < f->size(); ++i) {
        const std::string name = get_string((*f)[i], "output.formats[" + std::to_string(i) + "]");
        one_of(name, "output.formats", {"csv", "json", "bin"});
        c.output.formats.push_back(name);
      }
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config: " + path + " is not valid JSON (" + e.what() + ")");
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json j;
  j["grid"] = {{"n_per_dim", c.grid.n_per_dim}};
  json ct = c.op.counterterm.mode == Counterterm::Mode::automatic ? json("auto") : json(c.op.counterterm.value);
  j["operator"] = {{"cutoff_K", c.op.cutoff_K},
                   {"seed", c.op.seed},
                   {"stream_id", c.op.stream_id},
                   {"counterterm", ct},
                   {"noise", c.op.noise}};
  const auto& sp = c.measure.sampler;
  j["measure"] = {{"F_coeffs", c.measure.F_coeffs},
                  {"N", c.measure.N},
                  {"M", c.measure.M ? json(*c.measure.M) : json(nullptr)},
                  {"sampler",
                   {{"kind", sp.kind},
                    {"beta", sp.pcn.beta},
                    {"burn_in", sp.pcn.burn_in},
                    {"thin", sp.pcn.thin},
                    {"chains", sp.pcn.chains},
                    {"n_samples", sp.n_samples}}}};
  j["dynamics"] = {{"dt", c.dynamics.dt},
                   {"t_max", c.dynamics.t_max},
                   {"record_every", c.dynamics.record_every},
                   {"scheme", c.dynamics.scheme},
                   {"replicas", c.dynamics.replicas}};
  j["green"] = {{"N_values", c.green.N_values}, {"distances", c.green.distances}};
  j["check"] = {{"suites", c.check.suites}, {"n_samples", json::object()}};
  for (const auto& [k, v] : c.check.n_samples) j["check"]["n_samples"][k] = v;
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}};
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

}  // namespace asqe
