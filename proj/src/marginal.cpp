#include "endseq/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace endseq {

namespace detail {
namespace {

std::string fmtParam(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// sign(x) * |x|^{k+1} / (k+1): antiderivative of |x|^k.
double absPowerAntideriv(double x, double k) {
  const double m = std::pow(std::abs(x), k + 1.0) / (k + 1.0);
  return x < 0 ? -m : m;
}

class BernoulliImpl final : public DistImpl {
 public:
  explicit BernoulliImpl(double p) : p_(p) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("bernoulli: p must lie in (0,1)");
    }
  }
  double quantile(double t) const override { return t <= 1.0 - p_ ? 0.0 : 1.0; }
  double cdf(double x) const override {
    if (x < 0.0) return 0.0;
    if (x < 1.0) return 1.0 - p_;
    return 1.0;
  }
  double cdfLeft(double x) const override {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return 1.0 - p_;
    return 1.0;
  }
  double partialQuantileIntegral(double p, double q) const override {
    return std::max(0.0, q - std::max(p, 1.0 - p_));
  }
  double momentAbs(double) const override { return p_; }
  Interval support() const override { return {0.0, 1.0}; }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Bernoulli;
  }
  std::string describe() const override { return "bernoulli:p=" + fmtParam(p_); }

 private:
  double p_;
};

class UniformImpl final : public DistImpl {
 public:
  UniformImpl(double a, double b) : a_(a), b_(b) {
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
      throw std::invalid_argument("uniform: need finite a < b");
    }
  }
  double quantile(double t) const override { return a_ + (b_ - a_) * t; }
  double cdf(double x) const override {
    if (x <= a_) return x < a_ ? 0.0 : 0.0;
    if (x >= b_) return 1.0;
    return (x - a_) / (b_ - a_);
  }
  double cdfLeft(double x) const override { return cdf(x); }
  double partialQuantileIntegral(double p, double q) const override {
    return (q - p) * (a_ + 0.5 * (b_ - a_) * (p + q));
  }
  double momentAbs(double k) const override {
    return (absPowerAntideriv(b_, k) - absPowerAntideriv(a_, k)) / (b_ - a_);
  }
  Interval support() const override { return {a_, b_}; }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Uniform;
  }
  std::string describe() const override {
    return "uniform:a=" + fmtParam(a_) + ",b=" + fmtParam(b_);
  }
  std::shared_ptr<const DistImpl> restrict(double p, double q) const override {
    return std::make_shared<UniformImpl>(quantile(p), quantile(q));
  }

 private:
  double a_, b_;
};

class ParetoImpl final : public DistImpl {
 public:
  explicit ParetoImpl(double alpha) : alpha_(alpha) {
    if (!(std::isfinite(alpha) && alpha > 1.0)) {
      throw std::invalid_argument("pareto: alpha must exceed 1 (finite mean)");
    }
  }
  double quantile(double t) const override {
    if (t >= 1.0) return kInf;
    return std::pow(1.0 - t, -1.0 / alpha_);
  }
  double quantileUpperTail(double eps) const override {
    if (eps <= 0.0) return kInf;
    return std::pow(eps, -1.0 / alpha_);
  }
  double cdf(double x) const override {
    if (x < 1.0) return 0.0;
    return 1.0 - std::pow(x, -alpha_);
  }
  double cdfLeft(double x) const override { return cdf(x); }
  double partialQuantileIntegral(double p, double q) const override {
    const double e = 1.0 - 1.0 / alpha_;
    const double hi = q >= 1.0 ? 0.0 : std::pow(1.0 - q, e);
    return (std::pow(1.0 - p, e) - hi) * alpha_ / (alpha_ - 1.0);
  }
  double momentAbs(double k) const override {
    if (k >= alpha_) return kInf;
    return alpha_ / (alpha_ - k);
  }
  Interval support() const override { return {1.0, kInf}; }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Pareto;
  }
  std::string describe() const override { return "pareto:alpha=" + fmtParam(alpha_); }

 private:
  double alpha_;
};

class EmpiricalImpl final : public DistImpl {
 public:
  explicit EmpiricalImpl(std::vector<double> sample) : v_(std::move(sample)) {
    if (v_.empty()) throw std::invalid_argument("empirical: sample is empty");
    for (double x : v_) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("empirical: sample must be finite");
      }
    }
    std::sort(v_.begin(), v_.end());
    prefix_.resize(v_.size() + 1, 0.0);
    for (std::size_t i = 0; i < v_.size(); ++i) prefix_[i + 1] = prefix_[i] + v_[i];
  }
  double quantile(double t) const override {
    const double m = static_cast<double>(v_.size());
    if (t <= 0.0) return v_.front();
    std::size_t idx = static_cast<std::size_t>(std::ceil(t * m));
    idx = std::min(std::max<std::size_t>(idx, 1), v_.size());
    return v_[idx - 1];
  }
  double cdf(double x) const override {
    const auto it = std::upper_bound(v_.begin(), v_.end(), x);
    return static_cast<double>(it - v_.begin()) / static_cast<double>(v_.size());
  }
  double cdfLeft(double x) const override {
    const auto it = std::lower_bound(v_.begin(), v_.end(), x);
    return static_cast<double>(it - v_.begin()) / static_cast<double>(v_.size());
  }
  double partialQuantileIntegral(double p, double q) const override {
    return levelIntegral(q) - levelIntegral(p);
  }
  double momentAbs(double k) const override {
    double s = 0.0;
    for (double x : v_) s += std::pow(std::abs(x), k);
    return s / static_cast<double>(v_.size());
  }
  Interval support() const override { return {v_.front(), v_.back()}; }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Empirical;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "empirical:m=" << v_.size() << ",lo=" << fmtParam(v_.front())
       << ",hi=" << fmtParam(v_.back()) << ",sum=" << fmtParam(prefix_.back());
    return os.str();
  }

 private:
  // Integral of the order-statistic step quantile over [0, b].
  double levelIntegral(double b) const {
    const std::size_t m = v_.size();
    if (b <= 0.0) return 0.0;
    if (b >= 1.0) return prefix_[m] / static_cast<double>(m);
    const double bm = b * static_cast<double>(m);
    std::size_t full = std::min<std::size_t>(static_cast<std::size_t>(bm), m - 1);
    return (prefix_[full] + v_[full] * (bm - static_cast<double>(full))) /
           static_cast<double>(m);
  }
  std::vector<double> v_;
  std::vector<double> prefix_;
};

class QuantileTableImpl final : public DistImpl {
 public:
  QuantileTableImpl(std::vector<QuantileKnot> knots,
                    MarginalDistribution::TableInterp interp)
      : knots_(std::move(knots)), interp_(interp) {
    if (knots_.empty()) throw std::invalid_argument("qtable: no knots");
    for (std::size_t j = 0; j < knots_.size(); ++j) {
      const auto& k = knots_[j];
      if (!(k.t >= 0.0 && k.t <= 1.0) || !std::isfinite(k.x)) {
        throw std::invalid_argument("qtable: knot out of range");
      }
      if (j > 0) {
        if (!(k.t > knots_[j - 1].t)) {
          throw std::invalid_argument("qtable: t must be strictly increasing");
        }
        if (k.x < knots_[j - 1].x) {
          throw std::invalid_argument("qtable: x must be non-decreasing");
        }
      }
    }
    buildLevelIntegrals();
  }

  double quantile(double t) const override {
    const double lo = knots_.front().t;
    const double hi = knots_.back().t;
    if (interp_ == MarginalDistribution::TableInterp::Linear) {
      if (t <= lo) return knots_.front().x;
      if (t >= hi) return knots_.back().x;
      const std::size_t j = segmentBelow(t);
      const auto& a = knots_[j];
      const auto& b = knots_[j + 1];
      return a.x + (b.x - a.x) * (t - a.t) / (b.t - a.t);
    }
    // Step: j-th knot value on (t_{j-1}, t_j], clamped above the last level.
    if (t <= lo) return knots_.front().x;
    if (t > hi) return knots_.back().x;
    const std::size_t j = segmentBelow(t);
    return t == knots_[j].t ? knots_[j].x : knots_[j + 1].x;
  }

  double cdf(double x) const override {
    if (x < knots_.front().x) return 0.0;
    if (x >= knots_.back().x) return 1.0;
    // Last knot with value <= x.
    std::size_t j = lastAtOrBelow(x);
    if (interp_ == MarginalDistribution::TableInterp::Step) return knots_[j].t;
    const auto& a = knots_[j];
    const auto& b = knots_[j + 1];
    return a.t + (b.t - a.t) * (x - a.x) / (b.x - a.x);
  }

  double cdfLeft(double x) const override {
    if (x <= knots_.front().x) return 0.0;
    if (x > knots_.back().x) return 1.0;
    // First knot with value >= x.
    const std::size_t j0 = firstAtOrAbove(x);
    if (j0 == 0) return 0.0;
    if (interp_ == MarginalDistribution::TableInterp::Step) return knots_[j0 - 1].t;
    const auto& a = knots_[j0 - 1];
    const auto& b = knots_[j0];
    if (x >= b.x) return b.t;  // x == b.x on a flat run start
    return a.t + (b.t - a.t) * (x - a.x) / (b.x - a.x);
  }

  double partialQuantileIntegral(double p, double q) const override {
    return levelIntegral(q) - levelIntegral(p);
  }

  double momentAbs(double k) const override {
    // Exact piecewise: clamped ends plus per-segment closed forms.
    const auto& first = knots_.front();
    const auto& last = knots_.back();
    double s = std::pow(std::abs(first.x), k) * first.t +
               std::pow(std::abs(last.x), k) * (1.0 - last.t);
    for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
      const auto& a = knots_[j];
      const auto& b = knots_[j + 1];
      if (interp_ == MarginalDistribution::TableInterp::Step || b.x == a.x) {
        s += std::pow(std::abs(b.x), k) * (b.t - a.t);
      } else {
        const double slope = (b.x - a.x) / (b.t - a.t);
        s += (absPowerAntideriv(b.x, k) - absPowerAntideriv(a.x, k)) / slope;
      }
    }
    return s;
  }

  Interval support() const override { return {knots_.front().x, knots_.back().x}; }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::QuantileTable;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "qtable:" << (interp_ == MarginalDistribution::TableInterp::Linear ? "linear" : "step")
       << ",knots=" << knots_.size() << ",lo=" << fmtParam(knots_.front().x)
       << ",hi=" << fmtParam(knots_.back().x);
    return os.str();
  }

 private:
  void buildLevelIntegrals() {
    levelInt_.resize(knots_.size(), 0.0);
    for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
      const auto& a = knots_[j];
      const auto& b = knots_[j + 1];
      const double piece = interp_ == MarginalDistribution::TableInterp::Linear
                               ? 0.5 * (a.x + b.x) * (b.t - a.t)
                               : b.x * (b.t - a.t);
      levelInt_[j + 1] = levelInt_[j] + piece;
    }
  }

  // Integral of the (clamped) quantile over [0, b].
  double levelIntegral(double b) const {
    const auto& first = knots_.front();
    const auto& last = knots_.back();
    if (b <= first.t) return first.x * b;
    double acc = first.x * first.t;
    if (b >= last.t) {
      return acc + levelInt_.back() + last.x * (b - last.t);
    }
    const std::size_t j = segmentBelow(b);
    acc += levelInt_[j];
    const auto& a = knots_[j];
    if (interp_ == MarginalDistribution::TableInterp::Linear) {
      const double qb = quantile(b);
      return acc + 0.5 * (a.x + qb) * (b - a.t);
    }
    return acc + knots_[j + 1].x * (b - a.t);
  }

  // Largest j with knots_[j].t <= t, j < size-1 guaranteed by callers.
  std::size_t segmentBelow(double t) const {
    std::size_t lo = 0, hi = knots_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (knots_[mid].t <= t ? lo : hi) = mid;
    }
    return lo;
  }
  std::size_t lastAtOrBelow(double x) const {
    std::size_t lo = 0, hi = knots_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (knots_[mid].x <= x ? lo : hi) = mid;
    }
    return lo;
  }
  std::size_t firstAtOrAbove(double x) const {
    std::size_t lo = 0, hi = knots_.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (knots_[mid].x >= x) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

  std::vector<QuantileKnot> knots_;
  MarginalDistribution::TableInterp interp_;
  std::vector<double> levelInt_;
};

class RestrictImpl final : public DistImpl {
 public:
  RestrictImpl(std::shared_ptr<const DistImpl> base, double p, double q)
      : base_(std::move(base)), p_(p), q_(q) {}

  double quantile(double t) const override { return base_->quantile(level(t)); }
  double quantileUpperTail(double eps) const override {
    const double scaled = eps * (q_ - p_);
    if (q_ >= 1.0) return base_->quantileUpperTail(scaled);
    return base_->quantile(q_ - scaled);
  }
  double cdf(double x) const override {
    return std::clamp((base_->cdf(x) - p_) / (q_ - p_), 0.0, 1.0);
  }
  double cdfLeft(double x) const override {
    return std::clamp((base_->cdfLeft(x) - p_) / (q_ - p_), 0.0, 1.0);
  }
  double partialQuantileIntegral(double p, double q) const override {
    return base_->partialQuantileIntegral(level(p), level(q)) / (q_ - p_);
  }
  Interval support() const override {
    const double hi = q_ >= 1.0 ? base_->support().hi : base_->quantile(q_);
    return {base_->quantile(p_), hi};
  }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Derived;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "restrict(" << base_->describe() << ";p=" << fmtParam(p_)
       << ",q=" << fmtParam(q_) << ")";
    return os.str();
  }
  std::shared_ptr<const DistImpl> restrict(double p, double q) const override {
    return base_->restrict(level(p), level(q));
  }

 private:
  double level(double t) const { return p_ + t * (q_ - p_); }
  std::shared_ptr<const DistImpl> base_;
  double p_, q_;
};

class AffineImpl final : public DistImpl {
 public:
  AffineImpl(std::shared_ptr<const DistImpl> base, double scale, double shift)
      : base_(std::move(base)), scale_(scale), shift_(shift) {}

  double quantile(double t) const override {
    return scale_ * base_->quantile(t) + shift_;
  }
  double quantileUpperTail(double eps) const override {
    return scale_ * base_->quantileUpperTail(eps) + shift_;
  }
  double cdf(double x) const override { return base_->cdf((x - shift_) / scale_); }
  double cdfLeft(double x) const override {
    return base_->cdfLeft((x - shift_) / scale_);
  }
  double partialQuantileIntegral(double p, double q) const override {
    return scale_ * base_->partialQuantileIntegral(p, q) + shift_ * (q - p);
  }
  double momentAbs(double k) const override {
    if (shift_ == 0.0) return std::pow(scale_, k) * base_->momentAbs(k);
    return DistImpl::momentAbs(k);
  }
  Interval support() const override {
    const Interval s = base_->support();
    return {scale_ * s.lo + shift_, scale_ * s.hi + shift_};
  }
  MarginalDistribution::Kind kind() const override {
    return MarginalDistribution::Kind::Derived;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "affine(" << base_->describe() << ";scale=" << fmtParam(scale_)
       << ",shift=" << fmtParam(shift_) << ")";
    return os.str();
  }

 private:
  std::shared_ptr<const DistImpl> base_;
  double scale_, shift_;
};

}  // namespace

double DistImpl::momentAbs(double k) const {
  const Interval s = support();
  const auto g = [this, k](double t) {
    // 1-t is exact for t >= 0.5 and harmless below; the tail override keeps
    // heavy-tailed quantiles evaluable arbitrarily close to 1.
    return std::pow(std::abs(quantileUpperTail(1.0 - t)), k);
  };
  if (s.lo == -kInf) {
    const auto gLow = [this, k](double v) {
      return std::pow(std::abs(quantile(1.0 - v)), k);
    };
    const double low = quad::integrateToOne(gLow, 0.5);
    const double high = s.hi == kInf ? quad::integrateToOne(g, 0.5)
                                     : quad::adaptiveSimpson(g, 0.5, 1.0);
    return low + high;
  }
  if (s.hi == kInf) return quad::integrateToOne(g, 0.0);
  return quad::adaptiveSimpson(g, 0.0, 1.0, 1e-13);
}

std::shared_ptr<const DistImpl> DistImpl::restrict(double p, double q) const {
  return std::make_shared<RestrictImpl>(shared_from_this(), p, q);
}

}  // namespace detail

MarginalDistribution::MarginalDistribution(
    std::shared_ptr<const detail::DistImpl> impl)
    : impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("marginal: null impl");
  mean_ = impl_->partialQuantileIntegral(0.0, 1.0);
  if (!std::isfinite(mean_)) {
    throw std::invalid_argument("marginal: mean is not finite: " + impl_->describe());
  }
  support_ = impl_->support();
}

MarginalDistribution MarginalDistribution::bernoulli(double p) {
  return MarginalDistribution(std::make_shared<detail::BernoulliImpl>(p));
}
MarginalDistribution MarginalDistribution::uniform(double a, double b) {
  return MarginalDistribution(std::make_shared<detail::UniformImpl>(a, b));
}
MarginalDistribution MarginalDistribution::pareto(double alpha) {
  return MarginalDistribution(std::make_shared<detail::ParetoImpl>(alpha));
}
MarginalDistribution MarginalDistribution::empirical(std::vector<double> sample) {
  return MarginalDistribution(
      std::make_shared<detail::EmpiricalImpl>(std::move(sample)));
}
MarginalDistribution MarginalDistribution::quantileTable(
    std::vector<QuantileKnot> knots, TableInterp interp) {
  return MarginalDistribution(
      std::make_shared<detail::QuantileTableImpl>(std::move(knots), interp));
}
MarginalDistribution MarginalDistribution::fromImpl(
    std::shared_ptr<const detail::DistImpl> impl) {
  return MarginalDistribution(std::move(impl));
}

double MarginalDistribution::quantile(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::domain_error("quantile: t outside [0,1]");
  }
  return impl_->quantile(t);
}

double MarginalDistribution::quantileUpperTail(double eps) const {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::domain_error("quantileUpperTail: eps outside [0,1]");
  }
  return impl_->quantileUpperTail(eps);
}

double MarginalDistribution::cdf(double x) const { return impl_->cdf(x); }
double MarginalDistribution::cdfLeft(double x) const { return impl_->cdfLeft(x); }

double MarginalDistribution::partialQuantileIntegral(double p, double q) const {
  if (!(p >= 0.0 && q <= 1.0 && p < q)) {
    throw std::domain_error("partialQuantileIntegral: need 0 <= p < q <= 1");
  }
  return impl_->partialQuantileIntegral(p, q);
}

double MarginalDistribution::moment(double k) const {
  if (!(k > 0.0)) throw std::domain_error("moment: k must be positive");
  return impl_->momentAbs(k);
}

MarginalDistribution::Kind MarginalDistribution::kind() const {
  return impl_->kind();
}

bool MarginalDistribution::hasAtomAt(double x) const {
  return impl_->cdf(x) - impl_->cdfLeft(x) > 0.0;
}

bool MarginalDistribution::boundedAbove() const { return support_.hi < kInf; }
bool MarginalDistribution::boundedBelow() const { return support_.lo > -kInf; }

MarginalDistribution MarginalDistribution::conditionalRestrict(double p,
                                                               double q) const {
  if (!(p >= 0.0 && q <= 1.0 && p < q)) {
    throw std::domain_error("conditionalRestrict: need 0 <= p < q <= 1");
  }
  return MarginalDistribution(impl_->restrict(p, q));
}

MarginalDistribution MarginalDistribution::affine(double scale, double shift) const {
  if (!(scale > 0.0 && std::isfinite(scale) && std::isfinite(shift))) {
    throw std::invalid_argument("affine: need finite scale > 0");
  }
  return MarginalDistribution(
      std::make_shared<detail::AffineImpl>(impl_, scale, shift));
}

const std::string& MarginalDistribution::description() const {
  if (desc_.empty()) desc_ = impl_->describe();
  return desc_;
}

}  // namespace endseq
