// Residual-distribution machinery for a marginal F with finite mean mu:
//
//   H(s)  = integral_0^s (F^{-1}(t) - mu) dt        convex, H(0)=H(1)=0
//   nu    = F(mu-), nuPlus = F(mu), c = H(nu) <= 0  critical points
//   A, B  = inverses of H on [0,nu) and (nuPlus,1]; A(c)=B(c)=nuPlus
//   K(s)  = B(s)-A(s) on (c,0], atom of mass nuPlus-nu at c
//   u(s)  = (mu - F^{-1}(A)) / (F^{-1}(B) - F^{-1}(A)), u(c)=1/2
//   Z     = F^{-1}(B(Y)) - F^{-1}(A(Y)), Y ~ K       the residual law
//
// Closed forms cover the Bernoulli, uniform and Pareto(2) families; other
// laws run on a cached-grid bisection engine over the exact H.
#pragma once

#include <memory>

#include "endseq/marginal.hpp"

namespace endseq {

namespace detail {
class ResidualCore;
}

/// One draw of the common randomness and everything derived from it.
struct StreamDraw {
  double y;   // Y ~ K
  double a;   // A(Y)
  double b;   // B(Y)
  double w1;  // F^{-1}(B(Y)), the "large" coordinate value
  double w2;  // F^{-1}(A(Y)), the "small" coordinate value
  double u;   // mixing weight, u*w1 + (1-u)*w2 = mu
};

class ResidualTransform {
 public:
  explicit ResidualTransform(MarginalDistribution dist, int cacheGridSize = 1024);

  const MarginalDistribution& marginal() const { return dist_; }
  double mu() const { return mu_; }
  double nu() const { return nu_; }
  double nuPlus() const { return nuPlus_; }
  /// Minimum of H; the left endpoint of the support of K. Zero only for a
  /// point mass, where the residual law collapses to delta_0.
  double hMin() const { return c_; }
  bool degenerate() const { return degenerate_; }
  /// Mass of the atom of K at hMin(): nuPlus - nu.
  double atomMass() const { return nuPlus_ - nu_; }

  double h(double s) const;
  double branchA(double s) const;
  double branchB(double s) const;
  double kCdf(double s) const;
  double kQuantile(double q) const;
  double uWeight(double s) const;

  /// Z driven by the uniform deviate q through k-quantile inversion.
  double residualSample(double q) const;
  double residualCdf(double x) const;
  /// E[Z^k]; +inf when divergent.
  double residualMoment(double k) const;

  /// Everything a sampler stream needs from one deviate q in (0,1).
  StreamDraw draw(double q) const;

 private:
  double zFromY(double y) const;

  MarginalDistribution dist_;
  double mu_;
  double nu_;
  double nuPlus_;
  double c_;
  bool degenerate_;
  std::shared_ptr<const detail::ResidualCore> core_;
};

}  // namespace endseq
