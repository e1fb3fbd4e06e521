// Dependence-uncertainty bounds for aggregate positions S_n = X_1+...+X_n
// with all X_i ~ F and arbitrary joint law: VaR / TVaR envelopes, the convex
// sandwich on bounded support, the superadditive VaR ratio and the
// worst-case VaR/ES equivalence diagnostics.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "endseq/marginal.hpp"
#include "endseq/rng.hpp"

namespace endseq {

struct Bracket {
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
};

struct RiskBoundReport {
  double p = 0.0;
  long long n = 0;
  Bracket varSup;
  Bracket varInf;
  Bracket tvarInf;
  double tvarSup = std::numeric_limits<double>::quiet_NaN();
  double qStarSup = std::numeric_limits<double>::quiet_NaN();
  double qStarInf = std::numeric_limits<double>::quiet_NaN();
  /// Set when the inf-TVaR width is +inf (unbounded support with infinite
  /// second moment); the upper edge is then +inf, not an error.
  bool tvarWidthDivergent = false;
};

/// Average of the quantile over [p, q]; +inf possible only when the tail
/// integral diverges.
double muPQ(const MarginalDistribution& dist, double p, double q);

double varRisk(const MarginalDistribution& dist, double p);
double tvarRisk(const MarginalDistribution& dist, double p);

/// q-grid used for the sup-VaR lower bound: geometric in (1-q) between
/// p+(1-p)/G and 1-1/(16G), unioned over G, G/2, ... (doubling G never drops
/// points), plus q=1 on bounded support and the F(a*n^{1/k}) rate points for
/// a in {1,2,4} when a moment order k is supplied.
std::vector<double> supVarGrid(const MarginalDistribution& dist, double p,
                               long long n, int gridSize,
                               std::optional<double> momentOrder);
/// Mirror grid in [0, p) for the inf-VaR upper bound; q=0 on bounded-below
/// support.
std::vector<double> infVarGrid(const MarginalDistribution& dist, double p,
                               int gridSize);

RiskBoundReport varEnvelope(const MarginalDistribution& dist, double p,
                            long long n, int gridSize,
                            std::optional<double> momentOrder = std::nullopt);

RiskBoundReport tvarEnvelope(const MarginalDistribution& dist, double p,
                             long long n);

/// Jensen floor and the two-point ceiling for E[g(S_n)] on bounded support.
/// g is spot-checked for convexity on 64 random triples.
std::pair<double, double> convexSandwich(const MarginalDistribution& dist,
                                         const std::function<double(double)>& g,
                                         long long n,
                                         std::uint64_t seed = rng::kDefaultSeed);

struct SuperadditiveReport {
  Bracket ratio;  // sup-VaR bracket over n*VaR_p(F)
  double limit;   // TVaR_p/VaR_p, possibly +inf
};
SuperadditiveReport superadditiveRatio(const MarginalDistribution& dist, double p,
                                       long long n, int gridSize);

struct EquivalenceRow {
  long long n;
  double lowerRatio;
  double upperRatio;  // 1 by construction
};
std::vector<EquivalenceRow> varEsEquivalence(const MarginalDistribution& dist,
                                             double p,
                                             const std::vector<long long>& ns,
                                             double momentOrder, int gridSize);

}  // namespace endseq
