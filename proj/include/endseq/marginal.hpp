// Marginal distributions F: quantile / CDF / mean / partial quantile
// integrals / absolute moments, for the analytic families and for data-backed
// laws (empirical samples, quantile tables).
//
// quantile(t) is the left-continuous generalized inverse inf{x : F(x) >= t};
// quantile(0) is the left support endpoint and quantile(1) may be +inf.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "endseq/numeric.hpp"

namespace endseq {

struct Interval {
  double lo;
  double hi;
};

struct QuantileKnot {
  double t;  // probability level, strictly increasing across knots
  double x;  // quantile value, non-decreasing
};

namespace detail {
class DistImpl;
}

class MarginalDistribution {
 public:
  enum class Kind { Bernoulli, Uniform, Pareto, Empirical, QuantileTable, Derived };
  enum class TableInterp { Linear, Step };

  static MarginalDistribution bernoulli(double p);
  static MarginalDistribution uniform(double a, double b);
  /// F(x) = 1 - x^{-alpha} on [1, inf); alpha > 1 so the mean is finite.
  static MarginalDistribution pareto(double alpha);
  /// Sample is sorted on ingestion; quantile is the usual order-statistic step
  /// function (i-th value on ((i-1)/m, i/m]).
  static MarginalDistribution empirical(std::vector<double> sample);
  static MarginalDistribution quantileTable(std::vector<QuantileKnot> knots,
                                            TableInterp interp = TableInterp::Linear);
  /// Escape hatch for custom laws (tests, extensions). The finite-mean check
  /// still runs.
  static MarginalDistribution fromImpl(std::shared_ptr<const detail::DistImpl> impl);

  double quantile(double t) const;
  /// quantile(1 - eps) evaluated in tail space; avoids rounding 1-eps to 1
  /// for heavy-tailed laws.
  double quantileUpperTail(double eps) const;
  double cdf(double x) const;      // P(X <= x)
  double cdfLeft(double x) const;  // P(X < x)
  double mean() const { return mean_; }
  /// Unnormalized integral of the quantile over [p, q]; may be +inf at q=1.
  double partialQuantileIntegral(double p, double q) const;
  /// E|X|^k; +inf signals divergence, never an error.
  double moment(double k) const;
  Interval support() const { return support_; }
  Kind kind() const;
  bool hasAtomAt(double x) const;
  bool boundedAbove() const;
  bool boundedBelow() const;

  /// Law of quantile(p + T(q-p)) for T ~ U[0,1]: F conditioned between its
  /// p- and q-quantile levels.
  MarginalDistribution conditionalRestrict(double p, double q) const;
  /// Law of scale*X + shift, scale > 0.
  MarginalDistribution affine(double scale, double shift) const;

  const std::string& description() const;
  const detail::DistImpl& impl() const { return *impl_; }

 private:
  explicit MarginalDistribution(std::shared_ptr<const detail::DistImpl> impl);
  std::shared_ptr<const detail::DistImpl> impl_;
  double mean_;
  Interval support_;
  mutable std::string desc_;
};

namespace detail {

class DistImpl : public std::enable_shared_from_this<DistImpl> {
 public:
  virtual ~DistImpl() = default;
  virtual double quantile(double t) const = 0;
  virtual double quantileUpperTail(double eps) const { return quantile(1.0 - eps); }
  virtual double cdf(double x) const = 0;
  virtual double cdfLeft(double x) const = 0;
  virtual double partialQuantileIntegral(double p, double q) const = 0;
  virtual double momentAbs(double k) const;
  virtual Interval support() const = 0;
  virtual MarginalDistribution::Kind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual std::shared_ptr<const DistImpl> restrict(double p, double q) const;
};

}  // namespace detail

}  // namespace endseq
