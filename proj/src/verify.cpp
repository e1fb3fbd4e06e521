#include "endseq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "endseq/numeric.hpp"
#include "endseq/residual.hpp"

namespace endseq::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool looksDiscrete(const MarginalDistribution& dist) {
  for (int i = 1; i < 16; ++i) {
    const double x = dist.quantile(i / 16.0);
    if (dist.hasAtomAt(x)) return true;
  }
  return false;
}

}  // namespace

double VerificationReport::stat(const std::string& name) const {
  for (const auto& [k, v] : statistics) {
    if (k == name) return v;
  }
  throw std::out_of_range("VerificationReport: no statistic " + name);
}

std::string VerificationReport::toJsonLine(bool includeRuntime) const {
  nlohmann::json j;
  j["test"] = test;
  j["inputs"] = inputsDigest;
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [k, v] : statistics) stats[k] = v;
  j["statistics"] = stats;
  j["threshold"] = threshold;
  j["pass"] = pass;
  if (includeRuntime) j["runtime_seconds"] = runtimeSeconds;
  return j.dump();
}

std::string digest(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// QuadratureOracle

QuadratureOracle::QuadratureOracle(const MarginalDistribution& dist)
    : dist_(dist) {
  const auto f = [this](double t) { return dist_.quantile(t); };
  const bool unbounded = !dist_.boundedAbove();

  // Bulk grid to 1-1/64, then geometric cells toward 1.
  const int bulk = 4096;
  const double bulkEnd = 1.0 - 1.0 / 64.0;
  nodes_.reserve(bulk + 64);
  for (int i = 0; i <= bulk; ++i) {
    nodes_.push_back(bulkEnd * i / bulk);
  }
  double d = 1.0 - bulkEnd;
  while (d > 0.75e-13) {
    d *= 0.5;
    nodes_.push_back(1.0 - d);
  }
  if (!unbounded) nodes_.push_back(1.0);

  cum_.resize(nodes_.size(), 0.0);
  double lastCell = 0.0, prevCell = 0.0;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const double cell =
        quad::adaptiveSimpson(f, nodes_[i - 1], nodes_[i], 1e-14);
    cum_[i] = cum_[i - 1] + cell;
    prevCell = lastCell;
    lastCell = cell;
  }
  if (unbounded && std::abs(prevCell) > 0.0) {
    const double r = std::abs(lastCell) / std::abs(prevCell);
    if (r >= 0.999) {
      throw std::runtime_error("QuadratureOracle: divergent quantile tail");
    }
    tailRemainder_ = lastCell * r / (1.0 - r);
  }

  mu_ = integralTo(1.0);
  nu_ = dist_.cdfLeft(mu_);
  nuPlus_ = dist_.cdf(mu_);
  c_ = h(nu_);
}

double QuadratureOracle::integralTo(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= nodes_.back()) return cum_.back() + tailRemainder_;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  if (t == nodes_[j]) return cum_[j];
  const auto f = [this](double s) { return dist_.quantile(s); };
  return cum_[j] + quad::adaptiveSimpson(f, nodes_[j], t, 1e-14);
}

double QuadratureOracle::h(double s) const { return integralTo(s) - s * mu_; }

double QuadratureOracle::muPQ(double p, double q) const {
  return (integralTo(q) - integralTo(p)) / (q - p);
}

std::pair<double, double> QuadratureOracle::branchInverse(double s) const {
  const auto hh = [this](double x) { return h(x); };
  const double a = bisectMonotone(hh, 0.0, nu_, s);
  const double b = bisectMonotone(hh, nuPlus_, 1.0, s);
  return {a, b};
}

double QuadratureOracle::kQuantile(double q) const {
  const auto kOf = [this](double s) {
    if (s >= 0.0) return 1.0;
    const auto [a, b] = branchInverse(s);
    return b - a;
  };
  return bisectMonotone(kOf, c_, 0.0, q);
}

BranchPair oracleBranchInverse(const MarginalDistribution& dist, double s) {
  const QuadratureOracle oracle(dist);
  const auto [a, b] = oracle.branchInverse(s);
  return {a, b};
}

// ---------------------------------------------------------------------------
// Statistical utilities

double ksStatisticUniform(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("ksStatisticUniform: empty");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double hi = (i + 1) / n - sample[i];
    const double lo = sample[i] - i / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

double empiricalQuantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("empiricalQuantile: empty");
  std::sort(sample.begin(), sample.end());
  const double m = static_cast<double>(sample.size());
  std::size_t idx = static_cast<std::size_t>(std::ceil(p * m));
  idx = std::min(std::max<std::size_t>(idx, 1), sample.size());
  return sample[idx - 1];
}

double bootstrapQuantileSE(const std::vector<double>& sample, double p,
                           std::size_t resamples, std::uint64_t seed) {
  rng::Stream s(seed, rng::Purpose::Bootstrap, 0);
  std::vector<double> qs(resamples);
  std::vector<double> buf(sample.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (auto& x : buf) x = sample[s.below(sample.size())];
    qs[b] = empiricalQuantile(buf, p);
  }
  const double v = sampleVariance(qs).variance;
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

VarianceEstimate sampleVariance(const std::vector<double>& xs) {
  const std::size_t r = xs.size();
  if (r < 2) throw std::invalid_argument("sampleVariance: need two samples");
  KahanSum sum;
  for (double x : xs) sum.add(x);
  const double mean = sum.value() / static_cast<double>(r);
  KahanSum m2s, m4s;
  for (double x : xs) {
    const double d = x - mean;
    m2s.add(d * d);
    m4s.add(d * d * d * d);
  }
  const double m2 = m2s.value() / static_cast<double>(r);
  const double m4 = m4s.value() / static_cast<double>(r);
  const double var = m2 * static_cast<double>(r) / static_cast<double>(r - 1);
  const double rd = static_cast<double>(r);
  const double varOfVar = std::max(0.0, (m4 - m2 * m2 * (rd - 3.0) / (rd - 1.0)) / rd);
  return {var, std::sqrt(varOfVar)};
}

SlopeFit logLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (y[i] > 0.0 && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const std::size_t m = lx.size();
  if (m < 3) throw std::invalid_argument("logLogSlope: need 3 positive points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ly[i] - intercept - slope * lx[i];
    rss += e * e;
  }
  const double se = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  return {slope, se, intercept};
}

TailIndexEstimate tailIndex(const std::vector<double>& samples,
                            std::uint64_t seed) {
  if (samples.size() < 10000) {
    throw std::runtime_error("tailIndex: needs at least 1e4 samples");
  }
  std::vector<double> sorted(samples);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t k =
      static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(sorted.size())));
  const double threshold = sorted[k];
  TailIndexEstimate est{0.0, 0.0, 0.0, true};
  if (!(threshold > 0.0) || sorted.front() / threshold < 2.0) {
    est.applicable = false;  // top order statistics look bounded
    return est;
  }
  std::vector<double> logs(k);
  for (std::size_t i = 0; i < k; ++i) logs[i] = std::log(sorted[i] / threshold);
  double meanLog = 0.0;
  for (double v : logs) meanLog += v;
  meanLog /= static_cast<double>(k);
  est.estimate = 1.0 / meanLog;

  rng::Stream s(seed, rng::Purpose::Bootstrap, 1);
  std::vector<double> boot;
  boot.reserve(200);
  for (int b = 0; b < 200; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += logs[s.below(k)];
    boot.push_back(static_cast<double>(k) / acc);
  }
  std::sort(boot.begin(), boot.end());
  est.lo = boot[static_cast<std::size_t>(0.025 * 200)];
  est.hi = boot[static_cast<std::size_t>(0.975 * 200) - 1];
  return est;
}

// ---------------------------------------------------------------------------
// Audits

VerificationReport ksMarginal(const MarginalDistribution& dist, Scenario scenario,
                              std::size_t n, std::size_t reps, std::uint64_t seed) {
  const auto start = Clock::now();
  VerificationReport rep;
  rep.test = "ks_marginal";
  {
    std::ostringstream os;
    os << dist.description() << "|sc=" << static_cast<int>(scenario) << "|n=" << n
       << "|reps=" << reps << "|seed=" << seed;
    rep.inputsDigest = digest(os.str());
  }

  const ResidualTransform rt(dist);
  std::vector<double> values(reps);
  parallelFor(reps, [&](std::size_t r) {
    const auto path = samplePath(rt, scenario, n, seed, r);
    values[r] = path.back();  // fixed coordinate index k = n
  });

  if (!looksDiscrete(dist)) {
    // Continuous law: the probability-integral transform of the fixed
    // coordinate must be U[0,1]; one-sample KS at the 1% asymptotic level.
    std::vector<double> pit(reps);
    for (std::size_t r = 0; r < reps; ++r) pit[r] = dist.cdf(values[r]);
    const double d = ksStatisticUniform(pit);
    rep.threshold = 1.63 / std::sqrt(static_cast<double>(reps));
    rep.statistics = {{"ks", d}, {"n_samples", static_cast<double>(reps)}};
    rep.pass = d < rep.threshold;
  } else {
    // Atomic law: exact frequency comparison on the observed support.
    std::map<double, std::size_t> counts;
    for (double v : values) ++counts[v];
    double worst = 0.0;
    const double nd = static_cast<double>(reps);
    for (const auto& [x, cnt] : counts) {
      const double mass = dist.cdf(x) - dist.cdfLeft(x);
      const double freq = static_cast<double>(cnt) / nd;
      const double sigma = std::sqrt(std::max(mass * (1.0 - mass), 1e-12) / nd);
      worst = std::max(worst, std::abs(freq - mass) / sigma);
    }
    rep.threshold = 3.0;
    rep.statistics = {{"max_z", worst}, {"n_samples", nd}};
    rep.pass = worst <= 3.0;
  }
  rep.runtimeSeconds = seconds(start);
  return rep;
}

VerificationReport varianceCurve(const MarginalDistribution& dist,
                                 Scenario scenario,
                                 const std::vector<std::size_t>& ns,
                                 std::size_t reps, std::uint64_t seed) {
  const auto start = Clock::now();
  VerificationReport rep;
  rep.test = "variance_curve";
  {
    std::ostringstream os;
    os << dist.description() << "|sc=" << static_cast<int>(scenario)
       << "|reps=" << reps << "|seed=" << seed;
    for (auto n : ns) os << "|" << n;
    rep.inputsDigest = digest(os.str());
  }

  const ResidualTransform rt(dist);
  std::vector<double> vars, ses, nsd;
  for (std::size_t n : ns) {
    std::vector<double> sums(reps);
    parallelFor(reps, [&](std::size_t r) {
      const auto path = samplePath(rt, scenario, n, seed + 1000 + n, r);
      KahanSum s;
      for (double x : path) s.add(x);
      sums[r] = s.value();
    });
    const VarianceEstimate ve = sampleVariance(sums);
    vars.push_back(ve.variance);
    ses.push_back(ve.se);
    nsd.push_back(static_cast<double>(n));
    std::ostringstream key;
    key << "var_n" << n;
    rep.statistics.emplace_back(key.str(), ve.variance);
    key.str("");
    key << "se_n" << n;
    rep.statistics.emplace_back(key.str(), ve.se);
  }

  switch (scenario) {
    case Scenario::Independent: {
      const SlopeFit fit = logLogSlope(nsd, vars);
      rep.statistics.emplace_back("slope", fit.slope);
      rep.statistics.emplace_back("slope_se", fit.stderrSlope);
      rep.threshold = 0.1;
      rep.pass = std::abs(fit.slope - 1.0) <= 0.1;
      break;
    }
    case Scenario::Comonotonic: {
      const SlopeFit fit = logLogSlope(nsd, vars);
      rep.statistics.emplace_back("slope", fit.slope);
      rep.statistics.emplace_back("slope_se", fit.stderrSlope);
      rep.threshold = 0.05;
      rep.pass = std::abs(fit.slope - 2.0) <= 0.05;
      break;
    }
    default: {
      // END (or cm): hard cap Var(S_n) <= E[Z^2]/4 within 3 SE at every n.
      const double cap = 0.25 * rt.residualMoment(2.0);
      rep.statistics.emplace_back("cap", cap);
      rep.threshold = cap;
      bool ok = std::isfinite(cap);
      for (std::size_t i = 0; i < vars.size() && ok; ++i) {
        ok = vars[i] <= cap + 3.0 * ses[i];
      }
      rep.pass = ok;
      break;
    }
  }
  rep.runtimeSeconds = seconds(start);
  return rep;
}

VerificationReport couplingSearchVar(const MarginalDistribution& dist, double p,
                                     std::size_t n, std::size_t reps,
                                     std::uint64_t seed) {
  if (n < 1 || n > 64) {
    throw std::invalid_argument("couplingSearchVar: n must be in [1, 64]");
  }
  const auto start = Clock::now();
  VerificationReport rep;
  rep.test = "coupling_search_var";
  {
    std::ostringstream os;
    os << dist.description() << "|p=" << p << "|n=" << n << "|reps=" << reps
       << "|seed=" << seed;
    rep.inputsDigest = digest(os.str());
  }

  const RiskBoundReport env = varEnvelope(dist, p, static_cast<long long>(n), 64);
  const double nd = static_cast<double>(n);

  // Distinct replicate-ID lanes per coupling keep the streams disjoint.
  constexpr std::uint64_t kLane = 1ULL << 32;

  // Comonotonic.
  std::vector<double> sComo(reps);
  {
    rng::Stream s(seed, rng::Purpose::Coupling, 0);
    for (auto& v : sComo) v = nd * dist.quantile(s.u01());
  }
  // Independent.
  std::vector<double> sIndep(reps);
  parallelFor(reps, [&](std::size_t r) {
    rng::Stream s(seed, rng::Purpose::Coupling, kLane + r);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += dist.quantile(s.u01());
    sIndep[r] = acc;
  });
  // Random shuffle of a stratified grid, per coordinate.
  std::vector<double> sShuffle(reps, 0.0);
  {
    std::vector<std::size_t> perm(reps);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < reps; ++j) perm[j] = j;
      rng::Stream s(seed, rng::Purpose::Coupling, 2 * kLane + i);
      for (std::size_t j = reps; j > 1; --j) {
        std::swap(perm[j - 1], perm[s.below(j)]);
      }
      for (std::size_t j = 0; j < reps; ++j) {
        const double level = (static_cast<double>(perm[j]) + 0.5) /
                             static_cast<double>(reps);
        sShuffle[j] += dist.quantile(level);
      }
    }
  }
  // END on the [p, q*] tail conditional, mixed per the attainment coupling.
  std::vector<double> sTail(reps);
  {
    double qStar = env.qStarSup;
    if (!(qStar > p && qStar <= 1.0)) qStar = 0.5 * (1.0 + p);
    const MarginalDistribution restricted = dist.conditionalRestrict(p, qStar);
    const ResidualTransform rtTail(restricted);
    const double pc = qStar >= 1.0 ? 1.0 : (qStar - p) / (1.0 - p);
    parallelFor(reps, [&](std::size_t r) {
      rng::Stream s(seed, rng::Purpose::Coupling, 3 * kLane + r);
      const double v = s.u01();
      if (v <= p) {
        sTail[r] = nd * dist.quantile(v);
        return;
      }
      if (s.u01() < pc) {
        EndStream stream(rtTail, s.u01(), s.u01());
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += stream.next();
        sTail[r] = acc;
      } else {
        sTail[r] = nd * dist.quantile(qStar + (1.0 - qStar) * s.u01());
      }
    });
  }

  const double vComo = empiricalQuantile(sComo, p);
  const double vIndep = empiricalQuantile(sIndep, p);
  const double vShuffle = empiricalQuantile(sShuffle, p);
  const double vTail = empiricalQuantile(sTail, p);
  double best = vComo;
  const std::vector<double>* bestSample = &sComo;
  if (vIndep > best) {
    best = vIndep;
    bestSample = &sIndep;
  }
  if (vShuffle > best) {
    best = vShuffle;
    bestSample = &sShuffle;
  }
  if (vTail > best) {
    best = vTail;
    bestSample = &sTail;
  }
  const double se = bootstrapQuantileSE(*bestSample, p, 200, seed + 7);
  const double tol = 3.0 * se;

  rep.statistics = {
      {"max_var", best},         {"var_comonotonic", vComo},
      {"var_independent", vIndep}, {"var_shuffle", vShuffle},
      {"var_end_tail", vTail},   {"bracket_lower", env.varSup.lower},
      {"bracket_upper", env.varSup.upper}, {"mc_tol", tol},
      {"q_star", env.qStarSup},
  };
  rep.threshold = tol;
  rep.pass = best >= env.varSup.lower - tol && best <= env.varSup.upper + tol;
  rep.runtimeSeconds = seconds(start);
  return rep;
}

// ---------------------------------------------------------------------------
// Suite runner

namespace {

MarginalDistribution builtin(int which) {
  switch (which) {
    case 0:
      return MarginalDistribution::bernoulli(0.3);
    case 1:
      return MarginalDistribution::uniform(0.0, 1.0);
    default:
      return MarginalDistribution::pareto(2.0);
  }
}

VerificationReport oracleAgreement(const MarginalDistribution& dist,
                                   std::size_t draws, std::uint64_t seed) {
  const auto start = Clock::now();
  VerificationReport rep;
  rep.test = "oracle_agreement";
  rep.inputsDigest = digest(dist.description() + "|oracle");
  const QuadratureOracle oracle(dist);
  const ResidualTransform rt(dist);
  rng::Stream s(seed, rng::Purpose::Oracle, 17);

  double worstBranch = 0.0, worstK = 0.0, worstMu = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double t = rt.hMin() * s.u01();
    const auto [a, b] = oracle.branchInverse(t);
    worstBranch = std::max(worstBranch, std::abs(a - rt.branchA(t)));
    worstBranch = std::max(worstBranch, std::abs(b - rt.branchB(t)));

    const double q = s.u01();
    worstK = std::max(worstK, std::abs(oracle.kQuantile(q) - rt.kQuantile(q)));

    double lo = s.u01();
    double hi = s.u01();
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo > 1e-6) {
      const double impl = muPQ(dist, lo, hi);
      const double diff = std::abs(oracle.muPQ(lo, hi) - impl) /
                          std::max(1.0, std::abs(impl));
      worstMu = std::max(worstMu, diff);
    }
  }
  rep.statistics = {{"branch_max_err", worstBranch},
                    {"kquantile_max_err", worstK},
                    {"mupq_max_err", worstMu}};
  rep.threshold = 1e-8;
  rep.pass = worstBranch < 1e-8 && worstK < 1e-8 && worstMu < 1e-8;
  rep.runtimeSeconds = seconds(start);
  return rep;
}

VerificationReport envelopeAudit(const MarginalDistribution& dist,
                                 std::size_t reps, std::uint64_t seed) {
  const auto start = Clock::now();
  VerificationReport rep;
  rep.test = "deviation_envelope";
  rep.inputsDigest = digest(dist.description() + "|envelope");
  const ResidualTransform rt(dist);
  const auto rows = deviationEnvelope(rt, {1, 10, 100, 1000, 10000}, reps, seed);
  double worstSlack = -kInf;
  for (const auto& row : rows) {
    const double tol = static_cast<double>(row.n) * 0x1.0p-48 *
                       std::max(1.0, row.residualBound + std::abs(rt.mu()));
    worstSlack = std::max(worstSlack, row.absDeviation - row.residualBound - tol);
  }
  rep.statistics = {{"worst_slack", worstSlack},
                    {"rows", static_cast<double>(rows.size())}};
  rep.threshold = 0.0;
  rep.pass = worstSlack <= 0.0;
  rep.runtimeSeconds = seconds(start);
  return rep;
}

}  // namespace

std::vector<VerificationReport> runSuite(Suite suite, const SuiteOptions& opt) {
  std::vector<VerificationReport> out;
  const std::size_t reps = std::max<std::size_t>(200, opt.budget / 4);

  const bool doResidual = suite == Suite::Residual || suite == Suite::All;
  const bool doSampler = suite == Suite::Sampler || suite == Suite::All;
  const bool doBounds = suite == Suite::Bounds || suite == Suite::All;

  if (doResidual) {
    for (int i = 0; i < 3; ++i) {
      out.push_back(oracleAgreement(builtin(i), std::max<std::size_t>(50, opt.budget / 400), opt.seed));
    }
  }
  if (doSampler) {
    for (int i = 0; i < 3; ++i) {
      out.push_back(ksMarginal(builtin(i), Scenario::End, 7, reps, opt.seed));
    }
    out.push_back(ksMarginal(builtin(1), Scenario::Comonotonic, 7, reps, opt.seed));
    const std::vector<std::size_t> ns{16, 32, 64, 128, 256, 512, 1024};
    const std::size_t vcReps = std::max<std::size_t>(300, opt.budget / 32);
    out.push_back(varianceCurve(builtin(1), Scenario::Independent, ns, vcReps, opt.seed));
    out.push_back(varianceCurve(builtin(1), Scenario::Comonotonic, ns, vcReps, opt.seed));
    out.push_back(varianceCurve(builtin(0), Scenario::End, ns, vcReps, opt.seed));
    out.push_back(envelopeAudit(builtin(0), std::max<std::size_t>(32, reps / 64), opt.seed));
    out.push_back(envelopeAudit(builtin(2), std::max<std::size_t>(32, reps / 64), opt.seed));
  }
  if (doBounds) {
    out.push_back(couplingSearchVar(builtin(1), 0.9, 8, std::max<std::size_t>(2000, opt.budget), opt.seed));
    out.push_back(couplingSearchVar(MarginalDistribution::pareto(3.0), 0.9, 8,
                                    std::max<std::size_t>(2000, opt.budget), opt.seed));
  }
  return out;
}

}  // namespace endseq::verify
