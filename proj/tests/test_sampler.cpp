#include <cmath>
#include <cstdint>
#include <doctest.h>
#include <vector>

#include "endseq/numeric.hpp"
#include "endseq/sampler.hpp"
#include "endseq/verify.hpp"

using namespace endseq;

namespace {

ResidualTransform rtOf(const MarginalDistribution& d) { return ResidualTransform(d); }

// floor(k*u) consistent with fracOfProduct's compensated split.
std::int64_t floorOfProduct(std::uint64_t k, double u) {
  const double kd = static_cast<double>(k);
  const double hi = kd * u;
  const double lo = std::fma(kd, u, -hi);
  const double fh = hi - std::floor(hi);
  const double f = fh + lo;
  auto base = static_cast<std::int64_t>(std::floor(hi));
  if (f >= 1.0) return base + 1;
  if (f < 0.0) return base - 1;
  return base;
}

}  // namespace

TEST_CASE("fractional part helpers") {
  // u = 1/4 is exact in binary: frac cycles through {0, .25, .5, .75} forever.
  for (std::uint64_t k : {1ULL, 5ULL, 1000ULL, 999999937ULL}) {
    const double f = fracOfProduct(k, 0.25);
    CHECK(f == doctest::Approx(0.25 * static_cast<double>(k % 4)).epsilon(1e-15));
  }
  rng::Stream s(30, rng::Purpose::Oracle, 0);
  for (int i = 0; i < 200; ++i) {
    const double u = s.u01();
    const std::uint64_t k = 1 + s.below(1000);
    const double direct = std::fmod(static_cast<double>(k) * u, 1.0);
    CHECK(fracOfProduct(k, u) == doctest::Approx(direct).epsilon(1e-12));
    const double U = s.u01();
    const double fs = fracShifted(U, k, u);
    CHECK(fs >= 0.0);
    CHECK(fs < 1.0);
  }
}

TEST_CASE("bernoulli paths stay within one of the mean") {
  const auto rt = rtOf(MarginalDistribution::bernoulli(0.3));
  for (std::uint64_t rep = 0; rep < 8; ++rep) {
    EndStream s = EndStream::fromSeed(rt, 99, rep);
    CHECK(s.weight() == doctest::Approx(0.3).epsilon(1e-12));
    std::int64_t count = 0;
    for (std::uint64_t k = 1; k <= 10000; ++k) {
      const double x = s.next();
      CHECK((x == 0.0 || x == 1.0));
      count += x == 1.0 ? 1 : 0;
      // counting identity, per step
      const std::int64_t fl = floorOfProduct(k, s.weight());
      CHECK(count >= fl);
      CHECK(count <= fl + 1);
      CHECK(std::abs(static_cast<double>(count) - 0.3 * static_cast<double>(k)) <=
            1.0);
    }
  }
}

TEST_CASE("degenerate law emits the mean") {
  const auto rt = rtOf(MarginalDistribution::empirical({3.5, 3.5, 3.5}));
  EndStream s = EndStream::fromSeed(rt, 7, 0);
  for (int i = 0; i < 100; ++i) CHECK(s.next() == 3.5);
  CHECK(s.deviationClosedForm(1000) == 0.0);
}

TEST_CASE("summed construction matches the closed-form deviation") {
  const std::vector<MarginalDistribution> laws = {
      MarginalDistribution::bernoulli(0.3),
      MarginalDistribution::uniform(0.0, 1.0),
      MarginalDistribution::pareto(2.0),
  };
  for (const auto& law : laws) {
    const auto rt = rtOf(law);
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
      EndStream s = EndStream::fromSeed(rt, 41, rep);
      EndStream probe = EndStream::fromSeed(rt, 41, rep);
      KahanSum dev;
      const double scale =
          std::max({std::abs(s.highValue()), std::abs(s.lowValue()), 1.0});
      for (std::uint64_t n = 1; n <= 1000; ++n) {
        dev.add(probe.nextCentered());
        const double closed = s.deviationClosedForm(n);
        const double tol = static_cast<double>(n) * 0x1.0p-48 * scale + 1e-12;
        CHECK(std::abs(dev.value() - closed) <= tol);
        CHECK(std::abs(closed) <= s.residual() + 1e-12);
      }
    }
  }
}

TEST_CASE("closed-form deviation special cases") {
  const auto rt = rtOf(MarginalDistribution::bernoulli(0.3));
  EndStream s(rt, /*drivingUniform=*/0.1, /*mixDeviate=*/0.5);
  CHECK(s.weight() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(s.highValue() == 1.0);
  CHECK(s.lowValue() == 0.0);
  // n=2: frac(0.6)=0.6, indicator {0.1 >= 0.4} = 0, deviation -0.6, S_2 = 0.
  CHECK(s.deviationClosedForm(2) == doctest::Approx(-0.6).epsilon(1e-12));
  const double x1 = s.next();
  const double x2 = s.next();
  CHECK(x1 + x2 == 0.0);

  // n=1 form: z * (1{U >= 1-u} - u)
  EndStream hi(rt, 0.95, 0.5);
  CHECK(hi.deviationClosedForm(1) == doctest::Approx(1.0 - 0.3).epsilon(1e-12));
  EndStream lo(rt, 0.05, 0.5);
  CHECK(lo.deviationClosedForm(1) == doctest::Approx(-0.3).epsilon(1e-12));

  // frac(n*u) == 0 kills the deviation: u = 1/2, even n.
  const auto rtHalf = rtOf(MarginalDistribution::bernoulli(0.5));
  EndStream even(rtHalf, 0.77, 0.4);
  CHECK(even.deviationClosedForm(2) == 0.0);
  CHECK(even.deviationClosedForm(1000) == 0.0);
}

TEST_CASE("sample paths by scenario") {
  const auto rt = rtOf(MarginalDistribution::uniform(0.0, 1.0));

  SUBCASE("comonotonic paths are constant") {
    const auto path = samplePath(rt, Scenario::Comonotonic, 64, 5, 3);
    for (double x : path) CHECK(x == path.front());
  }

  SUBCASE("independent variance scales like n") {
    const std::size_t n = 50, reps = 4000;
    std::vector<double> sums(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      const auto path = samplePath(rt, Scenario::Independent, n, 6, r);
      KahanSum s;
      for (double x : path) s.add(x);
      sums[r] = s.value();
    }
    const auto ve = verify::sampleVariance(sums);
    CHECK(ve.variance / static_cast<double>(n) ==
          doctest::Approx(1.0 / 12.0).epsilon(0.15));
  }

  SUBCASE("deterministic in seed and replicate") {
    const auto a = samplePath(rt, Scenario::End, 32, 9, 1);
    const auto b = samplePath(rt, Scenario::End, 32, 9, 1);
    const auto c = samplePath(rt, Scenario::End, 32, 9, 2);
    CHECK(a == b);
    CHECK(a != c);
  }

  SUBCASE("cm periodic blocks") {
    double lastV = 0.0;
    MixProvider provider = [&](rng::Stream& s) {
      lastV = s.u01();
      return std::vector<double>{lastV, 1.0 - lastV};
    };
    for (std::uint64_t rep = 0; rep < 16; ++rep) {
      const auto path = samplePath(rt, Scenario::CmPeriodic, 33, 10, rep, &provider);
      KahanSum s;
      const double bound = std::abs(lastV - 0.5) + 1e-12;
      for (std::size_t m = 0; m < path.size(); ++m) {
        s.add(path[m]);
        const double dev = s.value() - 0.5 * static_cast<double>(m + 1);
        CHECK(std::abs(dev) <= bound);
      }
    }
    MixProvider bad = [](rng::Stream& s) {
      return std::vector<double>{s.u01(), 0.55};
    };
    CHECK_THROWS_AS(samplePath(rt, Scenario::CmPeriodic, 8, 11, 0, &bad),
                    std::invalid_argument);
    CHECK_THROWS_AS(samplePath(rt, Scenario::CmPeriodic, 8, 11, 0, nullptr),
                    std::invalid_argument);
  }
}

TEST_CASE("deviation envelope") {
  SUBCASE("bernoulli residual is one") {
    const auto rt = rtOf(MarginalDistribution::bernoulli(0.3));
    const auto rows = deviationEnvelope(rt, {1, 10, 100, 10000}, 32, 12);
    for (const auto& r : rows) {
      CHECK(r.residualBound == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(r.absDeviation <= 1.0 + 1e-9);
    }
  }
  SUBCASE("pareto residual is dominated by 2/(1-U) per replicate") {
    const auto rt = rtOf(MarginalDistribution::pareto(2.0));
    const auto rows = deviationEnvelope(rt, {1, 100, 10000}, 48, 13);
    for (const auto& r : rows) {
      EndStream s = EndStream::fromSeed(rt, 13, r.replicate);
      CHECK(r.residualBound == doctest::Approx(s.residual()).epsilon(1e-12));
      // the stream's mixing deviate is the second counter slot
      rng::Stream probe(13, rng::Purpose::StreamDriver, r.replicate);
      (void)probe.u01();
      const double U = probe.u01();
      CHECK(r.residualBound <= 2.0 / (1.0 - U) + 1e-9);
      const double tol = static_cast<double>(r.n) * 0x1.0p-48 *
                         std::max(1.0, r.residualBound + 2.0);
      CHECK(r.absDeviation <= r.residualBound + tol);
    }
  }
  SUBCASE("degenerate envelope vanishes") {
    const auto rt = rtOf(MarginalDistribution::empirical({1.0, 1.0}));
    for (const auto& r : deviationEnvelope(rt, {1, 1000}, 8, 14)) {
      CHECK(r.absDeviation == 0.0);
      CHECK(r.residualBound == 0.0);
    }
  }
  SUBCASE("bounded path criterion at n = 1e6") {
    const auto rt = rtOf(MarginalDistribution::uniform(0.0, 1.0));
    const auto rows = deviationEnvelope(rt, {1000000}, 4, 15);
    const double logN = std::log(1e6);
    for (const auto& r : rows) {
      CHECK(r.absDeviation / logN <= r.residualBound / logN + 1e-9);
    }
  }
}

TEST_CASE("window deviations share the residual bound") {
  const auto rt = rtOf(MarginalDistribution::pareto(2.0));
  rng::Stream pick(31, rng::Purpose::Oracle, 0);
  for (std::uint64_t rep = 0; rep < 8; ++rep) {
    EndStream s = EndStream::fromSeed(rt, 44, rep);
    for (int i = 0; i < 32; ++i) {
      std::uint64_t m = 1 + pick.below(5000);
      std::uint64_t n = m + 1 + pick.below(5000);
      const double windowDev = s.deviationClosedForm(n) - s.deviationClosedForm(m);
      CHECK(std::abs(windowDev) <= s.residual() + 1e-9);
    }
  }
}

TEST_CASE("variance bound and SEND certification") {
  SUBCASE("uniform variance capped by E[Z^2]/4") {
    const auto rt = rtOf(MarginalDistribution::uniform(0.0, 1.0));
    const double cap = 0.25 * rt.residualMoment(2.0);
    CHECK(cap == doctest::Approx(1.0 / 12.0).epsilon(1e-8));
    const std::size_t reps = 3000;
    for (std::size_t n : {1, 10, 100, 1000}) {
      std::vector<double> sums(reps);
      parallelFor(reps, [&](std::size_t r) {
        EndStream s = EndStream::fromSeed(rt, 150 + n, r);
        KahanSum acc;
        for (std::size_t k = 0; k < n; ++k) acc.add(s.next());
        sums[r] = acc.value();
      });
      const auto ve = verify::sampleVariance(sums);
      CHECK(ve.variance <= cap + 3.0 * ve.se);
    }
  }
  SUBCASE("certification status") {
    CHECK(sendStatus(rtOf(MarginalDistribution::bernoulli(0.5))) ==
          SendStatus::Certified);
    CHECK(sendStatus(rtOf(MarginalDistribution::uniform(0.0, 1.0))) ==
          SendStatus::Certified);
    CHECK(sendStatus(rtOf(MarginalDistribution::bernoulli(0.3))) ==
          SendStatus::Unknown);
    CHECK(sendStatus(rtOf(MarginalDistribution::pareto(2.0))) ==
          SendStatus::Unknown);
  }
}

TEST_CASE("variance regimes by scenario") {
  const auto uniform = MarginalDistribution::uniform(0.0, 1.0);
  const std::vector<std::size_t> ns{16, 32, 64, 128, 256, 512, 1024};
  const auto indep = verify::varianceCurve(uniform, Scenario::Independent, ns, 800, 77);
  CHECK(indep.pass);
  CHECK(std::abs(indep.stat("slope") - 1.0) <= 0.15);
  const auto como = verify::varianceCurve(uniform, Scenario::Comonotonic, ns, 800, 77);
  CHECK(como.pass);
  CHECK(std::abs(como.stat("slope") - 2.0) <= 0.1);
  // END on an asymmetric law: flat in n and capped.
  const auto endCurve = verify::varianceCurve(MarginalDistribution::bernoulli(0.3),
                                              Scenario::End, ns, 800, 77);
  CHECK(endCurve.pass);
}
