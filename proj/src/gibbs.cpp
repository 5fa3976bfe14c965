#include "asqe/gibbs.hpp"

#include "asqe/errors.hpp"
#include "asqe/parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace asqe {

namespace {

constexpr Eigen::Index kBlock = 256;

// Integrated autocorrelation time of a scalar trace (initial positive sequence).
double autocorrelation_time(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n / 2; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
    const double rho = c / c0;
    if (rho <= 0.0) break;
    tau += 2.0 * rho;
  }
  return tau;
}

}  // namespace

void GibbsConfig::validate(const AndersonOperator& op) const {
  if (!(N >= 1.0)) throw std::invalid_argument("measure.N must be >= 1");
  if (M) {
    if (!(*M > 0.0)) throw std::invalid_argument("measure.M must be > 0");
    if (*M * *M > op.eigenvalues()[op.dim() - 1]) {
      throw std::invalid_argument("measure.M: M^2 exceeds the largest eigenvalue");
    }
  }
  if (!(pcn.beta > 0.0 && pcn.beta <= 1.0)) throw std::invalid_argument("sampler.beta must lie in (0, 1]");
  if (pcn.burn_in < 0 || pcn.thin < 1 || pcn.chains < 1) {
    throw std::invalid_argument("sampler: burn_in >= 0, thin >= 1 and chains >= 1 are required");
  }
}

Eigen::VectorXd sample_gff_coeffs(const AndersonOperator& op, Rng& rng) {
  return rng.normals(op.dim()).cwiseQuotient(op.eigenvalues().cwiseSqrt());
}

Field sample_gff(const AndersonOperator& op, const RngSpec& spec) {
  Rng rng(spec);
  return op.synthesize(sample_gff_coeffs(op, rng));
}

double energy(const AndersonOperator& op, const GibbsConfig& cfg, const Field& u) {
  const WickPotential potential(op, cfg.poly, cfg.N, cfg.M);
  return potential.energy(op.project(u));
}

PartitionEstimate estimate_partition(const AndersonOperator& op, const GibbsConfig& cfg, Eigen::Index n_samples,
                                     const RngSpec& spec, int threads) {
  if (n_samples < 100) throw std::invalid_argument("estimate_partition: n_samples must be >= 100");
  cfg.validate(op);
  if (cfg.poly.is_constant()) {
    const double e = cfg.poly.a()[0] * kTorusArea;
    if (e < -700.0) throw NumericalFailure("estimate_partition: energy below -700, exp(-energy) overflows");
    return {std::exp(-e), 0.0, n_samples};
  }
  const WickPotential potential(op, cfg.poly, cfg.N, cfg.M);
  Eigen::VectorXd values(n_samples);
  const auto blocks = static_cast<std::size_t>((n_samples + kBlock - 1) / kBlock);
  parallel_for(blocks, threads, [&](std::size_t b) {
    Rng rng(spec.child(b));
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBlock;
    const Eigen::Index hi = std::min(n_samples, lo + kBlock);
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double e = potential.energy(sample_gff_coeffs(op, rng));
      if (e < -700.0) {
        throw NumericalFailure("estimate_partition: energy " + std::to_string(e) + " below -700 at sample " +
                               std::to_string(i) + " (seed " + std::to_string(spec.master_seed) + ", stream " +
                               std::to_string(spec.stream_id) + ")");
      }
      values[i] = std::exp(-e);
    }
  });
  const double mean = values.mean();
  const double var = (values.array() - mean).square().sum() / static_cast<double>(n_samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_samples)), n_samples};
}

SampleBatch sample_gibbs(const AndersonOperator& op, const GibbsConfig& cfg, Eigen::Index n_samples,
                         const RngSpec& spec, int threads) {
  const WickPotential potential(op, cfg.poly, cfg.N, cfg.M);
  return sample_gibbs(potential, cfg, n_samples, spec, threads);
}

SampleBatch sample_gibbs(const WickPotential& potential, const GibbsConfig& cfg, Eigen::Index n_samples,
                         const RngSpec& spec, int threads) {
  const AndersonOperator& op = potential.op();
  cfg.validate(op);
  if (n_samples < 1) throw std::invalid_argument("sample_gibbs: n_samples must be >= 1");
  const Eigen::Index D = op.dim();

  SampleBatch batch;
  batch.seed = spec;
  batch.coeffs.resize(D, n_samples);

  if (cfg.sampler == GibbsConfig::Sampler::importance) {
    Eigen::VectorXd energies(n_samples);
    const auto blocks = static_cast<std::size_t>((n_samples + kBlock - 1) / kBlock);
    parallel_for(blocks, threads, [&](std::size_t b) {
      Rng rng(spec.child(b));
      const Eigen::Index lo = static_cast<Eigen::Index>(b) * kBlock;
      const Eigen::Index hi = std::min(n_samples, lo + kBlock);
      for (Eigen::Index i = lo; i < hi; ++i) {
        batch.coeffs.col(i) = sample_gff_coeffs(op, rng);
        energies[i] = potential.energy(batch.coeffs.col(i));
      }
    });
    // Shifting by the minimum energy keeps every weight finite.
    const double emin = energies.minCoeff();
    Eigen::VectorXd w = (-(energies.array() - emin)).exp().matrix();
    w *= static_cast<double>(n_samples) / w.sum();
    batch.effective_sample_size = w.sum() * w.sum() / w.squaredNorm();
    batch.weights = std::move(w);
    return batch;
  }

  const Eigen::Index d = potential.active_modes();
  const Eigen::VectorXd inv_sqrt_lambda = op.eigenvalues().cwiseSqrt().cwiseInverse();
  const double beta = cfg.pcn.beta;
  const double keep = std::sqrt(1.0 - beta * beta);
  const int chains = static_cast<int>(std::min<Eigen::Index>(cfg.pcn.chains, n_samples));

  std::vector<Eigen::Index> start(static_cast<std::size_t>(chains) + 1, 0);
  for (int c = 0; c < chains; ++c) {
    start[c + 1] = start[c] + n_samples / chains + (c < n_samples % chains ? 1 : 0);
  }
  std::vector<long> accepted(chains, 0), proposed(chains, 0);
  std::vector<double> ess(chains, 0.0);

  parallel_for(static_cast<std::size_t>(chains), threads, [&](std::size_t c) {
    const RngSpec chain_spec = spec.child(c);
    Rng rng(chain_spec.child(0));
    Rng tail_rng(chain_spec.child(1));
    Eigen::VectorXd x = rng.normals(d).cwiseProduct(inv_sqrt_lambda.head(d));
    double ex = potential.energy(x);
    std::vector<double> trace;
    auto advance = [&](bool count) {
      const Eigen::VectorXd y = keep * x + beta * rng.normals(d).cwiseProduct(inv_sqrt_lambda.head(d));
      const double ey = potential.energy(y);
      const double u = rng.uniform();
      if (count) ++proposed[c];
      if (std::log(u) < ex - ey) {
        x = y;
        ex = ey;
        if (count) ++accepted[c];
      }
    };
    for (int s = 0; s < cfg.pcn.burn_in; ++s) advance(false);
    for (Eigen::Index i = start[c]; i < start[c + 1]; ++i) {
      for (int s = 0; s < cfg.pcn.thin; ++s) advance(true);
      batch.coeffs.col(i).head(d) = x;
      if (d < D) batch.coeffs.col(i).tail(D - d) = tail_rng.normals(D - d).cwiseProduct(inv_sqrt_lambda.tail(D - d));
      trace.push_back(ex);
    }
    ess[c] = static_cast<double>(trace.size()) / autocorrelation_time(trace);
  });

  long acc = 0, prop = 0;
  for (int c = 0; c < chains; ++c) {
    acc += accepted[c];
    prop += proposed[c];
    batch.effective_sample_size += ess[c];
  }
  batch.weights = Eigen::VectorXd::Ones(n_samples);
  batch.acceptance_rate = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 1.0;
  if (*batch.acceptance_rate < 0.05 || *batch.acceptance_rate > 0.95) {
    batch.warnings.push_back("pCN acceptance rate " + std::to_string(*batch.acceptance_rate) +
                             " is outside [0.05, 0.95]");
  }
  return batch;
}

}  // namespace asqe
