#include "asqe/cli.hpp"

#include "asqe/config.hpp"
#include "asqe/container.hpp"
#include "asqe/dynamics.hpp"
#include "asqe/gibbs.hpp"
#include "asqe/parallel.hpp"
#include "asqe/stats.hpp"
#include "asqe/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <locale>
#include <sstream>

namespace asqe {

using nlohmann::json;

namespace {

class BlowUp : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

struct Csv {
  std::ostringstream os;

  explicit Csv(const std::vector<std::string>& header) {
    os.imbue(std::locale::classic());
    os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
  }
  template <typename... T>
  void row(const T&... v) {
    bool first = true;
    ((os << (first ? "" : ",") << v, first = false), ...);
    os << '\n';
  }
};

struct Session {
  RunConfig cfg;
  std::string hash;
  int threads = 1;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::filesystem::path dir() const { return cfg.output.dir; }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream f(dir() / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir() / name).string());
    f << text;
  }
  void write_csv(const std::string& name, const Csv& csv) const {
    if (cfg.wants("csv")) write_text(name, csv.os.str());
  }
  json envelope() const {
    return {{"config", to_json(cfg)},
            {"config_hash", hash},
            {"seeds", {{{"master_seed", cfg.op.seed}, {"stream_id", cfg.op.stream_id}}}}};
  }
  void write_json(const std::string& name, json body) const {
    if (!cfg.wants("json")) return;
    for (auto& [k, v] : envelope().items()) body[k] = v;
    write_text(name, body.dump(2) + "\n");
  }
  void write_bin(const std::string& name, Container c) const {
    if (!cfg.wants("bin")) return;
    c.meta["config_hash"] = hash;
    c.meta["config"] = to_json(cfg);
    c.meta["seeds"] = envelope()["seeds"];
    write_container((dir() / name).string(), c);
  }

  OperatorKey key() const {
    return {cfg.op.seed, cfg.op.stream_id, cfg.op.cutoff_K, cfg.grid.n_per_dim, cfg.op.counterterm, cfg.op.noise};
  }
  AndersonOperator op(OperatorKey k) const {
    CacheResult res;
    AndersonOperator o = cached_operator(k, cache_directory(), &res);
    for (const auto& w : res.warnings) *err << "warning: " << w << '\n';
    return o;
  }
  AndersonOperator op() const { return op(key()); }
};

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a * std::pow(b / a, n > 1 ? double(i) / (n - 1) : 0.0));
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// M with exactly `modes` eigenvalues below M^2.
double M_for_modes(const AndersonOperator& op, Eigen::Index modes) {
  const auto& l = op.eigenvalues();
  modes = std::clamp<Eigen::Index>(modes, 1, op.dim() - 1);
  return std::sqrt(0.5 * (l[modes - 1] + l[modes]));
}

int cmd_spectrum(const Session& s) {
  const AndersonOperator op = s.op();
  Csv csv({"n", "lambda", "raw_lambda"});
  for (Eigen::Index i = 0; i < op.dim(); ++i) csv.row(i, op.eigenvalues()[i], op.raw_eigenvalues()[i]);
  s.write_csv("spectrum.csv", csv);
  const double slope = op.dim() > 20 ? weyl_slope(op) : std::numeric_limits<double>::quiet_NaN();
  json body = {{"dimension", op.dim()},
               {"lambda_max", op.eigenvalues()[op.dim() - 1]},
               {"shift", op.shift()},
               {"counterterm", op.counterterm()},
               {"raw_ground_state", op.raw_ground_state()}};
  body["weyl_slope"] = std::isfinite(slope) ? json(slope) : json(nullptr);
  s.write_json("spectrum.json", body);
  Container c;
  c.arrays.push_back(NamedArray::vector("eigenvalues", op.eigenvalues()));
  c.arrays.push_back(NamedArray::vector("raw_eigenvalues", op.raw_eigenvalues()));
  s.write_bin("spectrum.asqe", c);
  *s.out << "spectrum: D=" << op.dim() << " lambda_0=" << op.eigenvalues()[0]
         << " lambda_max=" << op.eigenvalues()[op.dim() - 1] << " -> " << s.dir().string() << '\n';
  return kExitOk;
}

int cmd_green(const Session& s) {
  const AndersonOperator op = s.op();
  const Point o{0.0, 0.0};
  const auto ds = geomspace(0.01, std::numbers::pi, s.cfg.green.distances);
  std::vector<Point> pts;
  for (double d : ds) pts.push_back({d, 0.0});
  Csv csv({"N", "distance", "green", "log_distance_plus_inv_N"});
  json fits = json::array();
  for (double N : s.cfg.green.N_values) {
    const Eigen::RowVectorXd left =
        (smoothed_eigenfunctions_at(op, Smoothing::p(N), {o}).row(0).array() / op.eigenvalues().transpose().array());
    const Eigen::VectorXd g = smoothed_eigenfunctions_at(op, Smoothing::p(N), pts) * left.transpose();
    std::vector<double> xs;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      xs.push_back(std::log(ds[i] + 1.0 / N));
      csv.row(N, ds[i], g[static_cast<Eigen::Index>(i)], xs.back());
    }
    const auto fit = stats::linear_fit(to_vector(xs), g);
    fits.push_back({{"N", N}, {"slope", fit.slope}, {"intercept", fit.intercept}});
  }
  s.write_csv("green.csv", csv);
  s.write_json("green.json", {{"fits", fits},
                              {"reference_slope", -1.0 / kTwoPi},
                              {"lattice_green_at_pi", lattice_green(op.cutoff(), o, {std::numbers::pi, 0.0})}});
  *s.out << "green: " << s.cfg.green.N_values.size() << " cutoffs x " << ds.size() << " distances -> "
         << s.dir().string() << '\n';
  return kExitOk;
}

void write_samples(const Session& s, const AndersonOperator& op, const SampleBatch& batch, const std::string& stem) {
  Container c;
  c.arrays.push_back(NamedArray::matrix("coeffs", batch.coeffs.transpose()));
  c.arrays.push_back(NamedArray::vector("weights", batch.weights));
  c.arrays.push_back(NamedArray::vector("eigenvalues", op.eigenvalues()));
  s.write_bin(stem + ".asqe", c);
  if (batch.size() > 0) {
    const Field f = batch.field(op, 0);
    Csv csv({"x1", "x2", "value"});
    for (Eigen::Index i = 0; i < f.values().size(); ++i) {
      const Point p = f.grid().point(i);
      csv.row(p.x1, p.x2, f[i]);
    }
    s.write_csv(stem + "_first.csv", csv);
  }
  Csv norms({"sample", "weight", "l2_norm"});
  for (Eigen::Index i = 0; i < batch.size(); ++i) norms.row(i, batch.weights[i], batch.coeffs.col(i).norm());
  s.write_csv(stem + "_norms.csv", norms);
}

int cmd_sample_gff(const Session& s) {
  const AndersonOperator op = s.op();
  const Eigen::Index n = s.cfg.measure.sampler.n_samples;
  const RngSpec spec = s.cfg.run_spec().child(0);
  SampleBatch batch;
  batch.seed = spec;
  batch.coeffs.resize(op.dim(), n);
  const Eigen::Index block = 256;
  parallel_for(static_cast<std::size_t>((n + block - 1) / block), s.threads, [&](std::size_t b) {
    Rng rng(spec.child(b));
    for (Eigen::Index i = static_cast<Eigen::Index>(b) * block; i < std::min(n, Eigen::Index(b + 1) * block); ++i)
      batch.coeffs.col(i) = sample_gff_coeffs(op, rng);
  });
  batch.weights = Eigen::VectorXd::Ones(n);
  batch.effective_sample_size = static_cast<double>(n);
  write_samples(s, op, batch, "gff");
  s.write_json("gff.json", {{"n_samples", n}, {"dimension", op.dim()}});
  *s.out << "sample-gff: " << n << " draws, D=" << op.dim() << " -> " << s.dir().string() << '\n';
  return kExitOk;
}

int cmd_sample_gibbs(const Session& s) {
  const AndersonOperator op = s.op();
  const GibbsConfig g = s.cfg.gibbs();
  g.validate(op);
  const SampleBatch batch =
      sample_gibbs(op, g, s.cfg.measure.sampler.n_samples, s.cfg.run_spec().child(0), s.threads);
  for (const auto& w : batch.warnings) *s.err << "warning: " << w << '\n';
  write_samples(s, op, batch, "gibbs");
  json body = {{"n_samples", batch.size()},
               {"effective_sample_size", batch.effective_sample_size},
               {"warnings", batch.warnings}};
  body["acceptance_rate"] = batch.acceptance_rate ? json(*batch.acceptance_rate) : json(nullptr);
  s.write_json("gibbs.json", body);
  *s.out << "sample-gibbs: " << batch.size() << " samples, ESS=" << batch.effective_sample_size;
  if (batch.acceptance_rate) *s.out << " acceptance=" << *batch.acceptance_rate;
  *s.out << " -> " << s.dir().string() << '\n';
  return kExitOk;
}

SimConfig sim_config(const RunConfig& cfg) {
  SimConfig sim;
  sim.dt = cfg.dynamics.dt;
  sim.t_max = cfg.dynamics.t_max;
  sim.record_every = cfg.dynamics.record_every;
  sim.cfg = cfg.gibbs();
  return sim;
}

int cmd_simulate(const Session& s) {
  const AndersonOperator op = s.op();
  const SimConfig sim = sim_config(s.cfg);
  for (const auto& w : sim.validate(op)) *s.err << "warning: " << w << '\n';
  const Scheme scheme = s.cfg.dynamics.scheme == "ou"     ? Scheme::ou
                        : s.cfg.dynamics.scheme == "full" ? Scheme::full
                                                          : Scheme::finite_dim;
  const Stepper stepper(op, sim, scheme);
  Rng init(s.cfg.run_spec().child(0));
  const Eigen::VectorXd a0 = sample_gff_coeffs(op, init);
  const Trajectory t = simulate(stepper, sim, a0, s.cfg.run_spec().child(1));

  Csv csv({"t", "l2_norm", "energy"});
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    const Eigen::VectorXd a = t.snapshots.col(static_cast<Eigen::Index>(i));
    const double e = stepper.potential() ? stepper.potential()->energy(a) : 0.0;
    csv.row(t.times[i], a.norm(), e);
  }
  s.write_csv("trajectory.csv", csv);
  Container c;
  c.arrays.push_back(NamedArray::vector("times", to_vector(t.times)));
  c.arrays.push_back(NamedArray::matrix("snapshots", t.snapshots.transpose()));
  s.write_bin("trajectory.asqe", c);
  s.write_json("trajectory.json", {{"halted", t.halted},
                                   {"halt_time", t.halt_time},
                                   {"final_norm", t.final_norm},
                                   {"recorded", t.times.size()},
                                   {"steps", sim.steps()}});
  if (t.halted) {
    throw BlowUp("simulate: blow-up at t=" + std::to_string(t.halt_time) +
                 " (norm=" + std::to_string(t.final_norm) + ")");
  }
  *s.out << "simulate: " << s.cfg.dynamics.scheme << " scheme, " << sim.steps() << " steps, final L2 norm "
         << t.final_norm << " -> " << s.dir().string() << '\n';
  return kExitOk;
}

InvarianceSettings invariance_settings(const RunConfig& cfg) {
  InvarianceSettings is;
  is.bias_replicas = static_cast<Eigen::Index>(cfg.n_samples_or("invariance_bias_replicas", is.bias_replicas));
  is.control_replicas = static_cast<Eigen::Index>(cfg.n_samples_or("invariance_control_replicas", is.control_replicas));
  return is;
}

CheckReport run_invariance(const Session& s, const AndersonOperator& op, bool derive_M) {
  GibbsConfig g = s.cfg.gibbs();
  std::optional<double> derived;
  if (!g.M) {
    if (!derive_M) throw ConfigError("measure.M: invariance requires M (finite-dimensional regime)");
    derived = M_for_modes(op, 16);
    g.M = derived;
  }
  SimConfig sim = sim_config(s.cfg);
  sim.cfg = g;
  const auto replicas =
      static_cast<Eigen::Index>(s.cfg.n_samples_or("invariance_replicas", static_cast<double>(s.cfg.dynamics.replicas)));
  CheckReport r = check_invariance(op, g, sim, replicas, s.cfg.run_spec().child(10), invariance_settings(s.cfg),
                                   s.threads);
  if (derived) r.info["derived_M"] = *derived;
  return r;
}

void emit_report(const Session& s, const CheckReport& r) {
  if (s.cfg.wants("json")) {
    json body = json::parse(r.to_json());
    body["config_hash"] = s.hash;
    body["config"] = to_json(s.cfg);
    s.write_text("check_" + r.suite + ".json", body.dump(2) + "\n");
  }
  const auto passed = std::count_if(r.cases.begin(), r.cases.end(), [](const CheckCase& c) { return c.pass; });
  *s.out << "check " << r.suite << ": " << (r.passed() ? "PASS" : "FAIL") << " (" << passed << "/" << r.cases.size()
         << " cases, " << r.wall_time_s << " s)\n";
  for (const auto& c : r.cases) {
    if (!c.pass) *s.out << "  failed: " << c.name << " measured=" << c.measured << " expected=" << c.expected
                        << " tolerance=" << c.tolerance << '\n';
  }
}

int cmd_invariance(const Session& s) {
  const AndersonOperator op = s.op();
  const CheckReport r = run_invariance(s, op, false);
  emit_report(s, r);
  return r.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_check(const Session& s, std::vector<std::string> suites) {
  if (suites.empty()) suites = s.cfg.check.suites;
  if (std::find(suites.begin(), suites.end(), "all") != suites.end()) suites = known_suites();
  for (const auto& name : suites) {
    if (std::find(known_suites().begin(), known_suites().end(), name) == known_suites().end()) {
      throw ConfigError("--suites: unknown suite \"" + name + "\"");
    }
  }
  const RngSpec root = s.cfg.run_spec();
  std::optional<AndersonOperator> op;
  auto the_op = [&]() -> const AndersonOperator& {
    if (!op) {
      OperatorKey k = s.key();
      k.noise = "white";
      op.emplace(s.op(k));
    }
    return *op;
  };
  bool all_pass = true;
  for (const auto& name : suites) {
    CheckReport r;
    if (name == "algebra") {
      AlgebraSettings as;
      as.samples = static_cast<Eigen::Index>(s.cfg.n_samples_or("algebra", static_cast<double>(as.samples)));
      r = check_algebra(root.child(1), as);
    } else if (name == "spectrum") {
      if (s.cfg.op.cutoff_K < 12) throw ConfigError("operator.cutoff_K: the spectrum suite requires cutoff_K >= 12");
      OperatorKey z = s.key();
      z.noise = "zero";
      z.counterterm = Counterterm::fixed(0.0);
      r = check_spectrum(s.op(z), the_op());
    } else if (name == "green") {
      r = check_green(the_op(), s.cfg.green.N_values, root.child(3));
    } else if (name == "fields") {
      FieldSettings fs;
      fs.covariance_draws =
          static_cast<Eigen::Index>(s.cfg.n_samples_or("fields_covariance", static_cast<double>(fs.covariance_draws)));
      fs.cauchy_draws =
          static_cast<Eigen::Index>(s.cfg.n_samples_or("fields_cauchy", static_cast<double>(fs.cauchy_draws)));
      fs.ou_replicas =
          static_cast<Eigen::Index>(s.cfg.n_samples_or("fields_ou_replicas", static_cast<double>(fs.ou_replicas)));
      const double lmax = the_op().eigenvalues()[the_op().dim() - 1];
      std::erase_if(fs.M_ladder, [&](double M) { return M * M > lmax; });
      r = check_fields(the_op(), root.child(4), fs, s.threads);
    } else if (name == "semigroup") {
      SemigroupSettings ss;
      ss.fields = static_cast<int>(s.cfg.n_samples_or("semigroup_fields", ss.fields));
      r = check_semigroup(the_op(), root.child(5), ss);
    } else if (name == "invariance") {
      r = run_invariance(s, the_op(), true);
    } else if (name == "partition") {
      PartitionSettings ps;
      ps.samples = static_cast<Eigen::Index>(s.cfg.n_samples_or("partition", static_cast<double>(ps.samples)));
      r = check_partition(the_op(), s.cfg.gibbs(), root.child(7), ps, s.threads);
    } else if (name == "dpd") {
      DpdSettings ds;
      ds.replicas = static_cast<int>(s.cfg.n_samples_or("dpd_replicas", ds.replicas));
      r = check_dpd(the_op(), s.cfg.gibbs(), root.child(8), ds, s.threads);
    }
    emit_report(s, r);
    all_pass = all_pass && r.passed();
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

std::string context(const Session& s) {
  std::ostringstream os;
  os << " [config_hash=" << (s.hash.empty() ? "none" : s.hash) << " seed=" << s.cfg.op.seed
     << " stream_id=" << s.cfg.op.stream_id << "]";
  return os.str();
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral laboratory for the parabolic Anderson stochastic quantization equation on the 2D torus",
               "asqe"};
  app.require_subcommand(1, 1);
  std::string config_path;
  int threads = default_threads();
  std::vector<std::string> suites;
  app.add_option("--threads", threads, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "Eigenvalues of the Anderson Hamiltonian"},
      {"green", "Smoothed Green function along a distance sweep"},
      {"sample-gff", "Draws from the Gaussian free field mu^H"},
      {"sample-gibbs", "Draws from the truncated Gibbs measure"},
      {"simulate", "Integrate the truncated stochastic dynamics"},
      {"invariance", "Gibbs invariance experiment"},
      {"check", "Run verification suites"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    sub->add_option("--config", config_path, "JSON run configuration");
    if (name == "check") sub->add_option("--suites", suites, "Suites to run (default: check.suites)")->delimiter(',');
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Session s;
  s.threads = threads;
  s.out = &out;
  s.err = &err;
  try {
    s.cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
    s.hash = config_hash(s.cfg);
    std::filesystem::create_directories(s.dir());
    s.write_text("config.json", to_json(s.cfg).dump(2) + "\n");
    if (command == "spectrum") return cmd_spectrum(s);
    if (command == "green") return cmd_green(s);
    if (command == "sample-gff") return cmd_sample_gff(s);
    if (command == "sample-gibbs") return cmd_sample_gibbs(s);
    if (command == "simulate") return cmd_simulate(s);
    if (command == "invariance") return cmd_invariance(s);
    return cmd_check(s, suites);
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << context(s) << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "validation error: " << e.what() << context(s) << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << context(s) << '\n';
    return kExitValidation;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace asqe
