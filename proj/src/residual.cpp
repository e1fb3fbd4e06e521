#include "endseq/residual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace endseq {

namespace detail {

class ResidualCore {
 public:
  virtual ~ResidualCore() = default;
  virtual double h(double s) const = 0;
  virtual double branchA(double t) const = 0;  // t in (c, 0)
  virtual double branchB(double t) const = 0;
  virtual double kQuantile(double q) const = 0;  // q in (atom mass, 1)
  /// Families whose mixing weight is constant report it here.
  virtual bool closedWeight(double& /*u*/) const { return false; }
};

namespace {

class BernoulliCore final : public ResidualCore {
 public:
  explicit BernoulliCore(double p) : p_(p) {}
  double h(double s) const override {
    return s <= 1.0 - p_ ? -p_ * s : -(1.0 - p_) * (1.0 - s);
  }
  double branchA(double t) const override { return -t / p_; }
  double branchB(double t) const override { return 1.0 + t / (1.0 - p_); }
  double kQuantile(double q) const override { return p_ * (1.0 - p_) * (q - 1.0); }
  bool closedWeight(double& u) const override {
    u = p_;
    return true;
  }

 private:
  double p_;
};

class UniformCore final : public ResidualCore {
 public:
  explicit UniformCore(double width) : w_(width) {}
  double h(double s) const override { return 0.5 * w_ * s * (s - 1.0); }
  double branchA(double t) const override {
    return 0.5 * (1.0 - std::sqrt(1.0 + 8.0 * t / w_));
  }
  double branchB(double t) const override {
    return 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * t / w_));
  }
  double kQuantile(double q) const override { return w_ * (q * q - 1.0) / 8.0; }
  bool closedWeight(double& u) const override {
    u = 0.5;
    return true;
  }

 private:
  double w_;
};

class ParetoTwoCore final : public ResidualCore {
 public:
  double h(double s) const override {
    return 2.0 * (1.0 - s) - 2.0 * std::sqrt(1.0 - s);
  }
  double branchA(double t) const override {
    return 0.5 * (1.0 - t - std::sqrt(1.0 + 2.0 * t));
  }
  double branchB(double t) const override {
    return 0.5 * (1.0 - t + std::sqrt(1.0 + 2.0 * t));
  }
  double kQuantile(double q) const override { return 0.5 * (q * q - 1.0); }
};

// Bisection engine over the exact H for laws without closed-form inverses.
// Grids cluster at both branch endpoints and only serve to tighten brackets;
// every returned value is an inversion of the true H.
class GenericCore final : public ResidualCore {
 public:
  GenericCore(const MarginalDistribution& dist, double mu, double nu,
              double nuPlus, double c, int gridSize)
      : dist_(dist), mu_(mu), nu_(nu), nuPlus_(nuPlus), c_(c) {
    const int n = std::max(16, gridSize);
    buildBranchGrid(0.0, nu_, n, aArg_, aVal_);
    buildBranchGrid(nuPlus_, 1.0, n, bArg_, bVal_);
    const int m = std::max(16, gridSize / 4);
    sGrid_.reserve(m + 1);
    kVal_.reserve(m + 1);
    for (int j = 0; j <= m; ++j) {
      const double s = c_ * (1.0 - cheb(static_cast<double>(j) / m));
      sGrid_.push_back(s);
      kVal_.push_back(s >= 0.0 ? 1.0 : branchB(s) - branchA(s));
    }
  }

  double h(double s) const override {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 0.0;
    return dist_.partialQuantileIntegral(0.0, s) - s * mu_;
  }

  double branchA(double t) const override {
    // H decreases from 0 to c over [0, nu].
    std::size_t j = bracket(aVal_, t, /*increasing=*/false);
    return bisectMonotone([this](double a) { return h(a); }, aArg_[j],
                          aArg_[j + 1], t);
  }

  double branchB(double t) const override {
    std::size_t j = bracket(bVal_, t, /*increasing=*/true);
    return bisectMonotone([this](double b) { return h(b); }, bArg_[j],
                          bArg_[j + 1], t);
  }

  double kQuantile(double q) const override {
    std::size_t j = bracket(kVal_, q, /*increasing=*/true);
    return bisectMonotone(
        [this](double s) {
          return s >= 0.0 ? 1.0 : branchB(s) - branchA(s);
        },
        sGrid_[j], sGrid_[j + 1], q);
  }

 private:
  static double cheb(double x) { return 0.5 * (1.0 - std::cos(M_PI * x)); }

  void buildBranchGrid(double lo, double hi, int n, std::vector<double>& arg,
                       std::vector<double>& val) {
    arg.reserve(n + 1);
    val.reserve(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double a = lo + (hi - lo) * cheb(static_cast<double>(i) / n);
      arg.push_back(a);
      val.push_back(h(a));
    }
  }

  // Index j such that target lies between val[j] and val[j+1].
  static std::size_t bracket(const std::vector<double>& val, double target,
                             bool increasing) {
    std::size_t lo = 0, hi = val.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool left = increasing ? (val[mid] <= target) : (val[mid] >= target);
      (left ? lo : hi) = mid;
    }
    return lo;
  }

  const MarginalDistribution dist_;
  double mu_, nu_, nuPlus_, c_;
  std::vector<double> aArg_, aVal_;
  std::vector<double> bArg_, bVal_;
  std::vector<double> sGrid_, kVal_;
};

std::shared_ptr<const ResidualCore> makeCore(const MarginalDistribution& dist,
                                             double mu, double nu, double nuPlus,
                                             double c, int gridSize) {
  using Kind = MarginalDistribution::Kind;
  switch (dist.kind()) {
    case Kind::Bernoulli:
      return std::make_shared<BernoulliCore>(mu);  // mean recovers p exactly
    case Kind::Uniform:
      return std::make_shared<UniformCore>(dist.support().hi - dist.support().lo);
    case Kind::Pareto: {
      const double alpha = mu / (mu - 1.0);
      if (std::abs(alpha - 2.0) < 1e-12) return std::make_shared<ParetoTwoCore>();
      break;
    }
    default:
      break;
  }
  return std::make_shared<GenericCore>(dist, mu, nu, nuPlus, c, gridSize);
}

}  // namespace
}  // namespace detail

ResidualTransform::ResidualTransform(MarginalDistribution dist, int cacheGridSize)
    : dist_(std::move(dist)), mu_(dist_.mean()) {
  nu_ = dist_.cdfLeft(mu_);
  nuPlus_ = dist_.cdf(mu_);
  degenerate_ = nu_ == 0.0 && nuPlus_ == 1.0;
  if (degenerate_) {
    c_ = 0.0;
    return;
  }
  c_ = dist_.partialQuantileIntegral(0.0, nu_) - nu_ * mu_;
  if (!(c_ < 0.0)) {
    // Round-off can only push a genuinely tiny minimum to zero; treat as
    // degenerate rather than dividing by a vanishing branch.
    degenerate_ = true;
    c_ = 0.0;
    nu_ = 0.0;
    nuPlus_ = 1.0;
    return;
  }
  core_ = detail::makeCore(dist_, mu_, nu_, nuPlus_, c_, cacheGridSize);
}

double ResidualTransform::h(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("h: s outside [0,1]");
  if (degenerate_ || s == 0.0 || s == 1.0) return 0.0;
  return core_->h(s);
}

double ResidualTransform::branchA(double s) const {
  if (!(s >= c_ && s <= 0.0)) throw std::domain_error("branchA: s outside [c,0]");
  if (s == c_) return nuPlus_;
  if (s == 0.0) return 0.0;
  return core_->branchA(s);
}

double ResidualTransform::branchB(double s) const {
  if (!(s >= c_ && s <= 0.0)) throw std::domain_error("branchB: s outside [c,0]");
  if (s == c_) return nuPlus_;
  if (s == 0.0) return 1.0;
  return core_->branchB(s);
}

double ResidualTransform::kCdf(double s) const {
  if (s >= 0.0) return 1.0;
  if (s < c_) return 0.0;
  if (s == c_) return atomMass();
  return core_->branchB(s) - core_->branchA(s);
}

double ResidualTransform::kQuantile(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("kQuantile: q outside (0,1]");
  if (degenerate_) return 0.0;
  if (q <= atomMass()) return c_;
  if (q == 1.0) return 0.0;
  return std::clamp(core_->kQuantile(q), c_, 0.0);
}

double ResidualTransform::uWeight(double s) const {
  if (!(s >= c_ && s <= 0.0)) throw std::domain_error("uWeight: s outside [c,0]");
  if (degenerate_ || s == c_) return 0.5;
  double u;
  if (core_->closedWeight(u)) return u;
  const double w2 = dist_.quantile(core_->branchA(s));
  const double w1 = dist_.quantile(core_->branchB(s));
  const double denom = w1 - w2;
  if (!(denom > 0.0)) {
    throw std::runtime_error("uWeight: degenerate branch spread");
  }
  return (mu_ - w2) / denom;  // 0 when w1 is +inf, by IEEE
}

double ResidualTransform::zFromY(double y) const {
  if (y == c_) return 0.0;
  const double a = core_->branchA(y);
  double b = core_->branchB(y);
  double w1 = dist_.quantile(b);
  if (!std::isfinite(w1)) {
    // b rounded up to 1 for an unbounded law; step just inside.
    b = std::nextafter(1.0, 0.0);
    w1 = dist_.quantile(b);
  }
  return w1 - dist_.quantile(a);
}

double ResidualTransform::residualSample(double q) const {
  if (!(q > 0.0 && q < 1.0)) {
    throw std::domain_error("residualSample: q outside (0,1)");
  }
  if (degenerate_) return 0.0;
  return zFromY(kQuantile(q));
}

double ResidualTransform::residualCdf(double x) const {
  if (x < 0.0) return 0.0;
  if (degenerate_) return 1.0;
  double lo = 1e-15;
  double hi = 1.0 - 0x1.0p-53;
  if (residualSample(hi) <= x) return 1.0;
  if (residualSample(lo) > x) return 0.0;
  // Z is non-decreasing in q (checked per family by tests); the cdf is the
  // largest driving level whose sample stays at or below x.
  for (int i = 0; i < 90; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (residualSample(mid) <= x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double ResidualTransform::residualMoment(double k) const {
  if (!(k > 0.0)) throw std::domain_error("residualMoment: k must be positive");
  if (degenerate_) return 0.0;
  const double a0 = atomMass();  // Z == 0 below the atom, contributes nothing
  const auto integrand = [this, k](double q) {
    const double qc = std::clamp(q, 1e-15, 1.0 - 0x1.0p-53);
    const double z = residualSample(qc);
    return z <= 0.0 ? 0.0 : std::pow(z, k);
  };
  return quad::integrateToOne(integrand, a0);
}

StreamDraw ResidualTransform::draw(double q) const {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("draw: q outside (0,1)");
  StreamDraw d;
  if (degenerate_) {
    const double m = dist_.quantile(nuPlus_);
    return {0.0, nuPlus_, nuPlus_, m, m, 0.5};
  }
  d.y = kQuantile(q);
  if (d.y == c_) {
    const double m = dist_.quantile(nuPlus_);
    return {c_, nuPlus_, nuPlus_, m, m, 0.5};
  }
  d.a = core_->branchA(d.y);
  d.b = core_->branchB(d.y);
  d.w2 = dist_.quantile(d.a);
  d.w1 = dist_.quantile(d.b);
  if (!std::isfinite(d.w1)) {
    d.b = std::nextafter(1.0, 0.0);
    d.w1 = dist_.quantile(d.b);
  }
  double u;
  if (core_->closedWeight(u)) {
    d.u = u;
  } else {
    const double denom = d.w1 - d.w2;
    if (!(denom > 0.0)) throw std::runtime_error("draw: degenerate branch spread");
    d.u = (mu_ - d.w2) / denom;
  }
  return d;
}

}  // namespace endseq
