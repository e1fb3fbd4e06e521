// Independent oracles and statistical audits: a raw-quadrature re-derivation
// of the residual machinery, marginal-law KS / frequency checks, variance
// curve regressions, envelope audits, Hill tail-index estimation and the
// worst-coupling Monte-Carlo search used to audit the VaR brackets.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "endseq/marginal.hpp"
#include "endseq/riskagg.hpp"
#include "endseq/rng.hpp"
#include "endseq/sampler.hpp"

namespace endseq::verify {

struct VerificationReport {
  std::string test;
  std::string inputsDigest;
  std::vector<std::pair<std::string, double>> statistics;
  double threshold = 0.0;
  bool pass = false;
  double runtimeSeconds = 0.0;

  double stat(const std::string& name) const;
  /// Lossless JSON-lines row; runtime is dropped when includeRuntime is false
  /// so files stay byte-identical across runs.
  std::string toJsonLine(bool includeRuntime = true) const;
};

/// FNV-1a digest of a canonical input string, hex-encoded.
std::string digest(const std::string& canonical);

// ---------------------------------------------------------------------------
// Brute-force oracles. All marginal access is pointwise (quantile/cdf); the
// cumulative quantile integral is rebuilt on a dense composite-quadrature
// grid, so nothing is shared with the closed forms or caches under test.
class QuadratureOracle {
 public:
  explicit QuadratureOracle(const MarginalDistribution& dist);

  double mean() const { return mu_; }
  double nu() const { return nu_; }
  double nuPlus() const { return nuPlus_; }
  double hMin() const { return c_; }
  /// Integral of the quantile over [0, t].
  double integralTo(double t) const;
  double h(double s) const;
  double muPQ(double p, double q) const;
  std::pair<double, double> branchInverse(double s) const;  // (A, B)
  double kQuantile(double q) const;

 private:
  MarginalDistribution dist_;
  std::vector<double> nodes_;
  std::vector<double> cum_;
  double tailRemainder_ = 0.0;  // extrapolated mass beyond the last node
  double mu_ = 0.0;
  double nu_ = 0.0;
  double nuPlus_ = 0.0;
  double c_ = 0.0;
};

struct BranchPair {
  double a;
  double b;
};
BranchPair oracleBranchInverse(const MarginalDistribution& dist, double s);

// ---------------------------------------------------------------------------
// Statistical utilities shared with the test suites.

/// One-sample Kolmogorov-Smirnov statistic against U[0,1].
double ksStatisticUniform(std::vector<double> sample);
/// Order-statistic quantile (index ceil(p*m)).
double empiricalQuantile(std::vector<double> sample, double p);
/// Bootstrap standard error of the empirical p-quantile.
double bootstrapQuantileSE(const std::vector<double>& sample, double p,
                           std::size_t resamples, std::uint64_t seed);

struct VarianceEstimate {
  double variance;
  double se;  // fourth-moment standard error of the variance estimate
};
VarianceEstimate sampleVariance(const std::vector<double>& xs);

struct SlopeFit {
  double slope;
  double stderrSlope;
  double intercept;
};
/// OLS of log(y) on log(x), over points with y > 0.
SlopeFit logLogSlope(const std::vector<double>& x, const std::vector<double>& y);

struct TailIndexEstimate {
  double estimate;
  double lo;
  double hi;
  bool applicable;  // false when the top order statistics look bounded
};
/// Hill estimator on the top 5% order statistics with a bootstrap CI.
TailIndexEstimate tailIndex(const std::vector<double>& samples,
                            std::uint64_t seed = rng::kDefaultSeed);

// ---------------------------------------------------------------------------
// Audits.

VerificationReport ksMarginal(const MarginalDistribution& dist, Scenario scenario,
                              std::size_t n, std::size_t reps, std::uint64_t seed);

VerificationReport varianceCurve(const MarginalDistribution& dist,
                                 Scenario scenario,
                                 const std::vector<std::size_t>& ns,
                                 std::size_t reps, std::uint64_t seed);

/// Worst empirical VaR_p(S_n) over END-on-tail, comonotonic, independent and
/// random-shuffle couplings; passes when it lands inside the analytic
/// bracket widened by 3 bootstrap SE.
VerificationReport couplingSearchVar(const MarginalDistribution& dist, double p,
                                     std::size_t n, std::size_t reps,
                                     std::uint64_t seed);

enum class Suite { Residual, Sampler, Bounds, All };

struct SuiteOptions {
  std::size_t budget = 20000;  // caps reps * n per statistical check
  std::uint64_t seed = rng::kDefaultSeed;
};

std::vector<VerificationReport> runSuite(Suite suite, const SuiteOptions& opt);

}  // namespace endseq::verify
