#include "endseq/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "endseq/numeric.hpp"

namespace endseq {

std::vector<double> samplePath(const ResidualTransform& rt, Scenario scenario,
                               std::size_t n, std::uint64_t seed,
                               std::uint64_t replicate, const MixProvider* mix) {
  if (n == 0) throw std::invalid_argument("samplePath: n must be positive");
  std::vector<double> out(n);
  switch (scenario) {
    case Scenario::End: {
      EndStream s = EndStream::fromSeed(rt, seed, replicate);
      for (auto& x : out) x = s.next();
      return out;
    }
    case Scenario::Independent: {
      rng::Stream s(seed, rng::Purpose::Path, replicate);
      for (auto& x : out) x = rt.marginal().quantile(s.u01());
      return out;
    }
    case Scenario::Comonotonic: {
      rng::Stream s(seed, rng::Purpose::Path, replicate);
      const double x = rt.marginal().quantile(s.u01());
      std::fill(out.begin(), out.end(), x);
      return out;
    }
    case Scenario::CmPeriodic: {
      if (mix == nullptr || !*mix) {
        throw std::invalid_argument("samplePath: cm scenario needs a mix provider");
      }
      rng::Stream s(seed, rng::Purpose::Path, replicate);
      const std::vector<double> block = (*mix)(s);
      if (block.empty()) throw std::invalid_argument("samplePath: empty mix block");
      KahanSum sum;
      for (double y : block) sum.add(y);
      const double target = static_cast<double>(block.size()) * rt.mu();
      if (std::abs(sum.value() - target) > 1e-9 * std::max(1.0, std::abs(target))) {
        throw std::invalid_argument("samplePath: mix block sum deviates from mu");
      }
      for (std::size_t i = 0; i < n; ++i) out[i] = block[i % block.size()];
      return out;
    }
  }
  throw std::logic_error("samplePath: unknown scenario");
}

std::vector<EnvelopeRow> deviationEnvelope(const ResidualTransform& rt,
                                           std::vector<std::uint64_t> ns,
                                           std::size_t replicates,
                                           std::uint64_t seed) {
  if (replicates == 0) {
    throw std::invalid_argument("deviationEnvelope: replicates must be positive");
  }
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.empty() || ns.front() == 0) {
    throw std::invalid_argument("deviationEnvelope: n values must be positive");
  }
  std::vector<std::vector<EnvelopeRow>> perRep(replicates);
  parallelFor(replicates, [&](std::size_t rep) {
    EndStream stream = EndStream::fromSeed(rt, seed, rep);
    const double z = stream.residual();
    KahanSum dev;
    std::uint64_t k = 0;
    auto& rows = perRep[rep];
    rows.reserve(ns.size());
    for (std::uint64_t target : ns) {
      while (k < target) {
        dev.add(stream.nextCentered());
        ++k;
      }
      rows.push_back({target, rep, std::abs(dev.value()), z});
    }
  });
  std::vector<EnvelopeRow> out;
  out.reserve(replicates * ns.size());
  for (auto& rows : perRep) {
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

MixProvider antitheticMixProvider(const ResidualTransform& rt) {
  const MarginalDistribution dist = rt.marginal();
  const double mu = rt.mu();
  return [dist, mu](rng::Stream& s) {
    const double v = dist.quantile(s.u01());
    return std::vector<double>{v, 2.0 * mu - v};
  };
}

SendStatus sendStatus(const ResidualTransform& rt) {
  const double m2 = rt.marginal().moment(2.0);
  if (!std::isfinite(m2)) return SendStatus::Unknown;
  const double var = m2 - rt.mu() * rt.mu();
  const double ez2 = rt.residualMoment(2.0);
  if (!std::isfinite(ez2)) return SendStatus::Unknown;
  const double bound = 0.25 * ez2;
  if (std::abs(var - bound) <= 1e-9 * std::max(1.0, bound)) {
    return SendStatus::Certified;
  }
  return SendStatus::Unknown;
}

}  // namespace endseq
