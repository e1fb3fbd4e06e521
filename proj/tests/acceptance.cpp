// Acceptance gates. Each criterion runs against its stated tolerance and
// runtime budget and prints exactly one [PASS]/[FAIL] line; the binary exits
// non-zero if any gate fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "endseq/marginal.hpp"
#include "endseq/numeric.hpp"
#include "endseq/residual.hpp"
#include "endseq/riskagg.hpp"
#include "endseq/rng.hpp"
#include "endseq/sampler.hpp"
#include "endseq/verify.hpp"

using namespace endseq;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;

void report(int index, const std::string& name, bool ok, double runtime,
            double budget, const std::string& detail) {
  const bool inTime = runtime < budget;
  std::printf("[%s] criterion %d: %s (%s; runtime %.2fs < %.0fs%s)\n",
              ok && inTime ? "PASS" : "FAIL", index, name.c_str(), detail.c_str(),
              runtime, budget, inTime ? "" : " EXCEEDED");
  std::fflush(stdout);
  if (!ok || !inTime) ++g_failures;
}

template <class Body>
void criterion(int index, const std::string& name, double budgetSeconds,
               Body&& body) {
  const auto start = Clock::now();
  bool ok = false;
  std::string detail;
  try {
    detail = body(ok);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  const double runtime = std::chrono::duration<double>(Clock::now() - start).count();
  report(index, name, ok, runtime, budgetSeconds, detail);
}

std::int64_t floorOfProduct(std::uint64_t k, double u) {
  const double kd = static_cast<double>(k);
  const double hi = kd * u;
  const double lo = std::fma(kd, u, -hi);
  const double f = (hi - std::floor(hi)) + lo;
  auto base = static_cast<std::int64_t>(std::floor(hi));
  if (f >= 1.0) return base + 1;
  if (f < 0.0) return base - 1;
  return base;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// 1. Bernoulli envelope: |S_n - np| <= 1 for every n up to 1e6, on integer
//    counts, 64 replicates, p in {0.3, round(1/sqrt 2, 12), 0.5}.
std::string bernoulliEnvelope(bool& ok) {
  const std::vector<double> ps{0.3, 0.707106781187, 0.5};
  const std::uint64_t nMax = 1000000;
  const std::size_t reps = 64;
  double maxDev = 0.0;
  bool identity = true;
  for (std::size_t f = 0; f < ps.size(); ++f) {
    const ResidualTransform rt(MarginalDistribution::bernoulli(ps[f]));
    std::vector<double> repDev(reps, 0.0);
    std::vector<char> repOk(reps, 1);
    parallelFor(reps, [&](std::size_t r) {
      EndStream s = EndStream::fromSeed(rt, 1001 + f, r);
      const double u = s.weight();
      std::int64_t count = 0;
      double worst = 0.0;
      bool good = true;
      for (std::uint64_t k = 1; k <= nMax; ++k) {
        count += s.next() == 1.0 ? 1 : 0;
        const std::int64_t fl = floorOfProduct(k, u);
        const std::int64_t excess = count - fl;
        good = good && (excess == 0 || excess == 1);
        const double dev =
            std::abs(static_cast<double>(excess) - fracOfProduct(k, u));
        worst = std::max(worst, dev);
      }
      repDev[r] = worst;
      repOk[r] = good ? 1 : 0;
    });
    for (std::size_t r = 0; r < reps; ++r) {
      maxDev = std::max(maxDev, repDev[r]);
      identity = identity && repOk[r] == 1;
    }
  }
  ok = identity && maxDev <= 1.0;
  return "max|S_n-np| = " + fmt(maxDev) + ", counting identity " +
         (identity ? "holds" : "violated");
}

// 2. Uniform residual law is U[0,1]: one-sample KS on 1e5 residual draws.
std::string uniformResidualKs(bool& ok) {
  const ResidualTransform rt(MarginalDistribution::uniform(0.0, 1.0));
  const std::size_t n = 100000;
  rng::Stream s(2002, rng::Purpose::Path, 0);
  std::vector<double> z(n);
  for (auto& v : z) v = rt.residualSample(s.u01());
  const double ks = verify::ksStatisticUniform(z);
  const double threshold = 1.63 / std::sqrt(static_cast<double>(n));
  ok = ks < threshold;
  return "KS = " + fmt(ks) + " vs " + fmt(threshold);
}

// 3. Pareto(2) residual CDF against the closed form on [0.1, 100].
std::string paretoResidualCdf(bool& ok) {
  const ResidualTransform rt(MarginalDistribution::pareto(2.0));
  double maxErr = 0.0;
  const int points = 512;
  for (int i = 0; i <= points; ++i) {
    const double x =
        0.1 * std::pow(1000.0, static_cast<double>(i) / points);  // 0.1 .. 100
    const double closed = std::sqrt(1.0 + 4.0 / (x * x)) - 2.0 / x;
    maxErr = std::max(maxErr, std::abs(rt.residualCdf(x) - closed));
  }
  ok = maxErr < 1e-6;
  return "max|F_impl - F_closed| = " + fmt(maxErr);
}

// 4. Variance bound Var(S_n) <= E[Z^2]/4 for uniform END at n in
//    {1,10,100,1000}, and the Bernoulli(1/2) SEND equality case.
std::string varianceBound(bool& ok) {
  const std::size_t reps = 10000;
  const ResidualTransform uni(MarginalDistribution::uniform(0.0, 1.0));
  const double cap = 0.25 * uni.residualMoment(2.0);
  const std::vector<std::size_t> ns{1, 10, 100, 1000};
  std::vector<std::vector<double>> sums(ns.size(), std::vector<double>(reps));
  parallelFor(reps, [&](std::size_t r) {
    EndStream s = EndStream::fromSeed(uni, 4004, r);
    KahanSum acc;
    std::size_t k = 0;
    for (std::size_t j = 0; j < ns.size(); ++j) {
      while (k < ns[j]) {
        acc.add(s.next());
        ++k;
      }
      sums[j][r] = acc.value();
    }
  });
  bool capped = true;
  double worstExcess = -kInf;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const auto ve = verify::sampleVariance(sums[j]);
    capped = capped && ve.variance <= cap + 3.0 * ve.se;
    worstExcess = std::max(worstExcess, ve.variance - cap);
  }

  const ResidualTransform half(MarginalDistribution::bernoulli(0.5));
  std::vector<double> first(reps);
  parallelFor(reps, [&](std::size_t r) {
    EndStream s = EndStream::fromSeed(half, 4005, r);
    first[r] = s.next();
  });
  const auto v1 = verify::sampleVariance(first);
  const bool sendCase = std::abs(v1.variance - 0.25) <= 3.0 * v1.se &&
                        std::abs(0.25 * half.residualMoment(2.0) - 0.25) <= 1e-9 &&
                        sendStatus(half) == SendStatus::Certified;

  ok = capped && sendCase;
  return "uniform worst excess over E[Z^2]/4 = " + fmt(worstExcess) +
         ", bernoulli(1/2) Var(S_1) = " + fmt(v1.variance);
}

// 5. Variance regimes: slope 1 +- 0.1 independent, 2 +- 0.05 comonotonic.
std::string varianceRegimes(bool& ok) {
  const auto uniform = MarginalDistribution::uniform(0.0, 1.0);
  const std::vector<std::size_t> ns{16, 32, 64, 128, 256, 512, 1024, 2048, 4096};
  const auto indep =
      verify::varianceCurve(uniform, Scenario::Independent, ns, 2000, 5005);
  const auto como =
      verify::varianceCurve(uniform, Scenario::Comonotonic, ns, 2000, 5006);
  const double s1 = indep.stat("slope");
  const double s2 = como.stat("slope");
  ok = std::abs(s1 - 1.0) <= 0.1 && std::abs(s2 - 2.0) <= 0.05;
  return "slopes: independent " + fmt(s1) + ", comonotonic " + fmt(s2);
}

// 6. Summed construction equals the closed-form deviation at n = 1e6 within
//    n * 2^-48 * scale, 100 streams per built-in family.
std::string deviationIdentity(bool& ok) {
  const std::vector<MarginalDistribution> laws = {
      MarginalDistribution::bernoulli(0.3),
      MarginalDistribution::uniform(0.0, 1.0),
      MarginalDistribution::pareto(2.0),
  };
  const std::uint64_t n = 1000000;
  const std::size_t streams = 100;
  double worstRatio = 0.0;
  bool within = true;
  for (std::size_t f = 0; f < laws.size(); ++f) {
    const ResidualTransform rt(laws[f]);
    std::vector<double> ratios(streams);
    parallelFor(streams, [&](std::size_t r) {
      EndStream s = EndStream::fromSeed(rt, 6006 + f, r);
      KahanSum dev;
      for (std::uint64_t k = 0; k < n; ++k) dev.add(s.nextCentered());
      const double closed = s.deviationClosedForm(n);
      const double scale =
          std::max({std::abs(s.highValue()), std::abs(s.lowValue()), 1.0});
      const double tol = static_cast<double>(n) * 0x1.0p-48 * scale;
      ratios[r] = std::abs(dev.value() - closed) / tol;
    });
    for (double r : ratios) {
      worstRatio = std::max(worstRatio, r);
      within = within && r <= 1.0;
    }
  }
  ok = within;
  return "worst |sum - closed| / tolerance = " + fmt(worstRatio);
}

// 7. VaR bracket consistency: coupling search inside the bracket for uniform
//    and Pareto(3); exact width and O(1/n) shrinkage on the bounded family.
std::string varBracketConsistency(bool& ok) {
  const auto uniform = MarginalDistribution::uniform(0.0, 1.0);
  const auto pareto3 = MarginalDistribution::pareto(3.0);
  bool inside = true;
  for (const auto& dist : {uniform, pareto3}) {
    for (double p : {0.9, 0.99}) {
      for (std::size_t n : {8, 64}) {
        const auto rep = verify::couplingSearchVar(dist, p, n, 20000, 7007);
        inside = inside && rep.pass;
      }
    }
  }
  bool widthOk = true;
  double ratioDev = 0.0;
  for (double p : {0.9, 0.99}) {
    double relWidth8 = 0.0;
    for (long long n : {8LL, 64LL}) {
      const auto env = varEnvelope(uniform, p, n, 64);
      const double width = env.varSup.upper - env.varSup.lower;
      const double gap = uniform.quantile(env.qStarSup) - uniform.quantile(p);
      widthOk = widthOk && width <= gap + 1e-12;
      const double rel = width / env.varSup.upper;
      if (n == 8) {
        relWidth8 = rel;
      } else {
        ratioDev = std::max(ratioDev, std::abs(relWidth8 / rel - 8.0));
      }
    }
  }
  ok = inside && widthOk && ratioDev <= 1e-9;
  return std::string("couplings ") + (inside ? "inside" : "OUTSIDE") +
         ", width O(1/n) ratio deviation = " + fmt(ratioDev);
}

// 8. VaR/ES equivalence: exact bounded-case ratio and the heavy-tail decay
//    rate of the deficit.
std::string varEsEquivalenceRate(bool& ok) {
  const auto uniform = MarginalDistribution::uniform(0.0, 1.0);
  bool exact = true;
  for (const auto& row : varEsEquivalence(uniform, 0.9, {10, 100, 1000}, 0.0, 64)) {
    const double expected = 1.0 - 0.1 / (0.95 * static_cast<double>(row.n));
    exact = exact && std::abs(row.lowerRatio - expected) <= 1e-12;
  }

  const auto pareto3 = MarginalDistribution::pareto(3.0);
  const std::vector<long long> ns{100, 1000, 10000, 100000};
  std::vector<double> nsd, deficit;
  for (const auto& row : varEsEquivalence(pareto3, 0.9, ns, 2.5, 64)) {
    nsd.push_back(static_cast<double>(row.n));
    deficit.push_back(1.0 - row.lowerRatio);
  }
  const auto fit = verify::logLogSlope(nsd, deficit);
  const double slopeCap = -(1.0 - 1.0 / 2.5) + 0.15;
  ok = exact && fit.slope <= slopeCap;
  return std::string("bounded case ") + (exact ? "exact" : "OFF") +
         ", deficit slope " + fmt(fit.slope) + " <= " + fmt(slopeCap);
}

// 9. Hill tail index of the Pareto(2) residual law is ~1.
std::string residualTailIndex(bool& ok) {
  const ResidualTransform rt(MarginalDistribution::pareto(2.0));
  rng::Stream s(9009, rng::Purpose::Path, 0);
  std::vector<double> z(100000);
  for (auto& v : z) v = rt.residualSample(s.u01());
  const auto hill = verify::tailIndex(z, 9010);
  ok = hill.applicable && hill.estimate >= 0.8 && hill.estimate <= 1.2;
  return "Hill estimate = " + fmt(hill.estimate) + " [" + fmt(hill.lo) + ", " +
         fmt(hill.hi) + "]";
}

// 10. Branch inverses, K quantiles and mu_{p,q} against brute-force oracles.
std::string oracleEquivalence(bool& ok) {
  const std::vector<MarginalDistribution> laws = {
      MarginalDistribution::bernoulli(0.3),
      MarginalDistribution::uniform(0.0, 1.0),
      MarginalDistribution::pareto(2.0),
  };
  double worst = 0.0;
  for (std::size_t f = 0; f < laws.size(); ++f) {
    const verify::QuadratureOracle oracle(laws[f]);
    const ResidualTransform rt(laws[f]);
    rng::Stream s(1010 + f, rng::Purpose::Oracle, 0);
    for (int i = 0; i < 200; ++i) {
      const double t = rt.hMin() * s.u01();
      const auto [a, b] = oracle.branchInverse(t);
      worst = std::max(worst, std::abs(a - rt.branchA(t)));
      worst = std::max(worst, std::abs(b - rt.branchB(t)));
      const double q = s.u01();
      worst = std::max(worst, std::abs(oracle.kQuantile(q) - rt.kQuantile(q)));
      double lo = s.u01(), hi = s.u01();
      if (lo > hi) std::swap(lo, hi);
      if (hi - lo > 1e-6) {
        const double impl = muPQ(laws[f], lo, hi);
        worst = std::max(worst, std::abs(oracle.muPQ(lo, hi) - impl) /
                                    std::max(1.0, std::abs(impl)));
      }
    }
  }
  ok = worst < 1e-8;
  return "worst oracle disagreement = " + fmt(worst);
}

}  // namespace

int main() {
  criterion(1, "bernoulli envelope", 10.0, bernoulliEnvelope);
  criterion(2, "uniform residual law", 5.0, uniformResidualKs);
  criterion(3, "pareto residual cdf", 5.0, paretoResidualCdf);
  criterion(4, "variance bound", 30.0, varianceBound);
  criterion(5, "variance regimes", 60.0, varianceRegimes);
  criterion(6, "closed-form deviation identity", 20.0, deviationIdentity);
  criterion(7, "VaR bracket consistency", 60.0, varBracketConsistency);
  criterion(8, "VaR/ES equivalence rate", 30.0, varEsEquivalenceRate);
  criterion(9, "residual tail index", 10.0, residualTailIndex);
  criterion(10, "oracle equivalence", 10.0, oracleEquivalence);

  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
