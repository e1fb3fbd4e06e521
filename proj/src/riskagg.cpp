#include "endseq/riskagg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "endseq/numeric.hpp"
#include "endseq/residual.hpp"

namespace endseq {

namespace {

void requireLevel(double p, const char* where) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error(std::string(where) + ": p outside (0,1)");
  }
}

void pushIfInside(std::vector<double>& pts, double q, double lo, double hi) {
  if (q > lo && q <= hi) pts.push_back(q);
}

void sortDedupe(std::vector<double>& pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-15; }),
            pts.end());
}

}  // namespace

double muPQ(const MarginalDistribution& dist, double p, double q) {
  if (!(p >= 0.0 && q <= 1.0 && p < q)) {
    throw std::domain_error("muPQ: need 0 <= p < q <= 1");
  }
  return dist.partialQuantileIntegral(p, q) / (q - p);
}

double varRisk(const MarginalDistribution& dist, double p) {
  requireLevel(p, "varRisk");
  return dist.quantile(p);
}

double tvarRisk(const MarginalDistribution& dist, double p) {
  requireLevel(p, "tvarRisk");
  return muPQ(dist, p, 1.0);
}

std::vector<double> supVarGrid(const MarginalDistribution& dist, double p,
                               long long n, int gridSize,
                               std::optional<double> momentOrder) {
  std::vector<double> pts;
  for (int g = std::max(2, gridSize); g >= 2; g /= 2) {
    const double uLo = (1.0 - p) * (1.0 - 1.0 / g);  // 1-q at the near end
    const double uHi = 1.0 / (16.0 * g);             // 1-q at the far end
    if (uHi >= uLo) {
      pushIfInside(pts, 1.0 - uLo, p, 1.0);
      pushIfInside(pts, 1.0 - uHi, p, 1.0);
      continue;
    }
    const double ratio = uHi / uLo;
    for (int i = 0; i < g; ++i) {
      const double u = uLo * std::pow(ratio, static_cast<double>(i) / (g - 1));
      pushIfInside(pts, 1.0 - u, p, 1.0);
    }
  }
  if (dist.boundedAbove()) pts.push_back(1.0);
  if (momentOrder && *momentOrder > 0.0) {
    for (double a : {1.0, 2.0, 4.0}) {
      const double q = dist.cdf(a * std::pow(static_cast<double>(n), 1.0 / *momentOrder));
      if (q > p && q < 1.0) pts.push_back(q);
    }
  }
  sortDedupe(pts);
  if (pts.empty()) pts.push_back(0.5 * (1.0 + p));
  return pts;
}

std::vector<double> infVarGrid(const MarginalDistribution& dist, double p,
                               int gridSize) {
  std::vector<double> pts;
  for (int g = std::max(2, gridSize); g >= 2; g /= 2) {
    const double qHi = p * (1.0 - 1.0 / g);
    const double qLo = p / (16.0 * g);
    if (qLo >= qHi) {
      if (qHi > 0.0 && qHi < p) pts.push_back(qHi);
      continue;
    }
    const double ratio = qHi / qLo;
    for (int i = 0; i < g; ++i) {
      const double q = qLo * std::pow(ratio, static_cast<double>(i) / (g - 1));
      if (q > 0.0 && q < p) pts.push_back(q);
    }
  }
  if (dist.boundedBelow()) pts.push_back(0.0);
  sortDedupe(pts);
  return pts;
}

RiskBoundReport varEnvelope(const MarginalDistribution& dist, double p,
                            long long n, int gridSize,
                            std::optional<double> momentOrder) {
  requireLevel(p, "varEnvelope");
  if (n < 1) throw std::domain_error("varEnvelope: n must be positive");
  if (gridSize < 2) throw std::domain_error("varEnvelope: grid size below 2");

  RiskBoundReport rep;
  rep.p = p;
  rep.n = n;
  const double nd = static_cast<double>(n);
  const double qp = dist.quantile(p);

  rep.varSup.upper = nd * muPQ(dist, p, 1.0);
  double best = -kInf;
  for (double q : supVarGrid(dist, p, n, gridSize, momentOrder)) {
    const double gap = dist.quantile(q) - qp;
    if (!std::isfinite(gap)) continue;
    const double val = nd * muPQ(dist, p, q) - gap;
    if (val > best) {
      best = val;
      rep.qStarSup = q;
    }
  }
  rep.varSup.lower = std::min(best, rep.varSup.upper);

  rep.varInf.lower = nd * muPQ(dist, 0.0, p);
  double bestUp = kInf;
  for (double q : infVarGrid(dist, p, gridSize)) {
    const double gap = qp - dist.quantile(q);
    if (!std::isfinite(gap)) continue;
    const double val = nd * muPQ(dist, q, p) + gap;
    if (val < bestUp) {
      bestUp = val;
      rep.qStarInf = q;
    }
  }
  rep.varInf.upper = std::max(bestUp, rep.varInf.lower);
  return rep;
}

RiskBoundReport tvarEnvelope(const MarginalDistribution& dist, double p,
                             long long n) {
  requireLevel(p, "tvarEnvelope");
  if (n < 1) throw std::domain_error("tvarEnvelope: n must be positive");

  RiskBoundReport rep;
  rep.p = p;
  rep.n = n;
  const double nd = static_cast<double>(n);
  rep.tvarSup = nd * muPQ(dist, p, 1.0);
  rep.tvarInf.lower = nd * dist.mean();

  double width;
  if (dist.boundedAbove() && dist.boundedBelow()) {
    width = dist.support().hi - dist.support().lo;
  } else if (!std::isfinite(dist.moment(2.0))) {
    width = kInf;
    rep.tvarWidthDivergent = true;
  } else {
    // TVaR_p of the residual law; its quantile function is q -> Z(q).
    const ResidualTransform rt(dist);
    const auto z = [&rt](double q) {
      return rt.residualSample(std::clamp(q, 1e-15, 1.0 - 0x1.0p-53));
    };
    width = quad::integrateToOne(z, p) / (1.0 - p);
  }
  rep.tvarInf.upper = rep.tvarInf.lower + width;
  return rep;
}

std::pair<double, double> convexSandwich(const MarginalDistribution& dist,
                                         const std::function<double(double)>& g,
                                         long long n, std::uint64_t seed) {
  if (n < 1) throw std::domain_error("convexSandwich: n must be positive");
  if (!(dist.boundedAbove() && dist.boundedBelow())) {
    throw std::runtime_error("convexSandwich: support must be bounded");
  }
  const double nd = static_cast<double>(n);
  const double center = nd * dist.mean();
  const double range = dist.support().hi - dist.support().lo;
  const double halfSpan = 2.0 * std::max(range, 1.0);

  rng::Stream s(seed, rng::Purpose::SpotCheck, 0);
  for (int i = 0; i < 64; ++i) {
    double x = center - halfSpan + 2.0 * halfSpan * s.u01();
    double z = center - halfSpan + 2.0 * halfSpan * s.u01();
    if (x > z) std::swap(x, z);
    const double lambda = s.u01();
    const double y = lambda * x + (1.0 - lambda) * z;
    const double lhs = g(y);
    const double rhs = lambda * g(x) + (1.0 - lambda) * g(z);
    const double tol = 1e-9 * (1.0 + std::abs(g(x)) + std::abs(g(z)));
    if (lhs > rhs + tol) {
      throw std::invalid_argument("convexSandwich: convexity spot-check failed");
    }
  }

  const double lower = g(center);
  const double upper = 0.5 * g(center + range) + 0.5 * g(center - range);
  return {lower, upper};
}

SuperadditiveReport superadditiveRatio(const MarginalDistribution& dist, double p,
                                       long long n, int gridSize) {
  const double vr = varRisk(dist, p);
  if (!(vr > 0.0)) {
    throw std::domain_error("superadditiveRatio: requires VaR_p > 0");
  }
  const RiskBoundReport env = varEnvelope(dist, p, n, gridSize);
  const double denom = static_cast<double>(n) * vr;
  SuperadditiveReport rep;
  rep.ratio = {env.varSup.lower / denom, env.varSup.upper / denom};
  rep.limit = tvarRisk(dist, p) / vr;
  return rep;
}

std::vector<EquivalenceRow> varEsEquivalence(const MarginalDistribution& dist,
                                             double p,
                                             const std::vector<long long>& ns,
                                             double momentOrder, int gridSize) {
  const double tv = tvarRisk(dist, p);
  if (!std::isfinite(tv) || tv == 0.0) {
    throw std::domain_error("varEsEquivalence: TVaR_p must be finite and non-zero");
  }
  std::vector<EquivalenceRow> rows;
  rows.reserve(ns.size());
  for (long long n : ns) {
    const RiskBoundReport env = varEnvelope(dist, p, n, gridSize, momentOrder);
    const double denom = static_cast<double>(n) * tv;
    rows.push_back({n, env.varSup.lower / denom, env.varSup.upper / denom});
  }
  return rows;
}

}  // namespace endseq
