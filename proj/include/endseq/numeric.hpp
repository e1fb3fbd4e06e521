// Shared numeric kernels: compensated summation, adaptive quadrature with
// endpoint-tail handling, and monotone bisection.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace endseq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }
  void reset() { sum_ = comp_ = 0.0; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace quad {

namespace detail {

// absTol is per accepted interval and is NOT halved on recursion; together
// with the width cutoff this keeps integrands with a small evaluation-noise
// floor from recursing to the depth cap.
template <class F>
double simpsonStep(F& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double absTol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * absTol ||
      b - a <= 1e-14 * (std::abs(a) + std::abs(b) + 1.0)) {
    return left + right + delta / 15.0;
  }
  return simpsonStep(f, a, fa, m, fm, lm, flm, left, absTol, depth - 1) +
         simpsonStep(f, m, fm, b, fb, rm, frm, right, absTol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson on a closed interval. The integrand must be finite on
/// [a, b]; singular endpoints go through integrateToOne instead.
template <class F>
double adaptiveSimpson(F&& f, double a, double b, double absTol = 1e-12,
                       int maxDepth = 28) {
  if (!(a <= b)) throw std::invalid_argument("adaptiveSimpson: a > b");
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpsonStep(f, a, fa, b, fb, m, fm, whole, absTol, maxDepth);
}

/// Adaptive Simpson split at interior knots (step/kink locations).
template <class F>
double integrateWithKnots(F&& f, double a, double b,
                          const std::vector<double>& knots,
                          double absTol = 1e-12) {
  double total = 0.0;
  double lo = a;
  for (double k : knots) {
    if (k <= lo || k >= b) continue;
    total += adaptiveSimpson(f, lo, k, absTol);
    lo = k;
  }
  total += adaptiveSimpson(f, lo, b, absTol);
  return total;
}

/// Integral of f over [a, 1) where f may be unbounded as t -> 1.
///
/// The bulk [a, 1-d0] uses adaptive Simpson. The tail is accumulated over
/// chunks [1-d, 1-d/2] with d halved; once the chunk ratio stabilizes the
/// geometric remainder is added (exact for power-law tails). Chunks that do
/// not decay, or a running total beyond 1e290, report +inf.
template <class F>
double integrateToOne(F&& f, double a, double relTol = 1e-10) {
  if (!(a >= 0.0 && a < 1.0)) {
    throw std::invalid_argument("integrateToOne: a outside [0,1)");
  }
  const double d0 = std::min(0.25, 0.5 * (1.0 - a));
  const auto chunkTol = [relTol](double total) {
    return std::max(1e-16, 0.02 * relTol * std::max(1.0, std::abs(total)));
  };
  double total = adaptiveSimpson(f, a, 1.0 - d0, chunkTol(0.0));

  double d = d0;
  double prevChunk = 0.0;
  bool havePrev = false;
  int stall = 0;
  while (d > 1e-13) {
    const double hi = 1.0 - 0.5 * d;
    const double chunk = adaptiveSimpson(f, 1.0 - d, hi, chunkTol(total));
    total += chunk;
    if (!std::isfinite(total) || std::abs(total) > 1e290) return kInf;
    const double floor = relTol * std::max(1.0, std::abs(total));
    if (std::abs(chunk) <= 0.01 * floor) return total;
    if (havePrev && std::abs(prevChunk) > 0.0) {
      const double r = std::abs(chunk) / std::abs(prevChunk);
      if (r >= 0.995) {
        if (++stall >= 6) return kInf;
      } else {
        stall = 0;
      }
    }
    prevChunk = chunk;
    havePrev = true;
    d *= 0.5;
  }
  // Resolution floor reached: extrapolate the geometric remainder.
  if (havePrev && std::abs(prevChunk) > 0.0) {
    const double next = adaptiveSimpson(f, 1.0 - d, 1.0 - 0.5 * d, chunkTol(total));
    total += next;
    const double r = std::abs(next) / std::abs(prevChunk);
    if (r >= 0.995) return kInf;
    if (r > 0.0) total += next * r / (1.0 - r);
  }
  return total;
}

}  // namespace quad

/// Solves f(x) = target on [lo, hi] for monotone f, to the floating-point
/// floor of the bracket. Bracketed false position with the Illinois
/// downweighting and periodic bisection safeguards.
template <class F>
double bisectMonotone(F&& f, double lo, double hi, double target,
                      int maxIter = 100) {
  double flo = f(lo) - target;
  double fhi = f(hi) - target;
  const bool increasing = fhi >= flo;
  if (!increasing) {
    // Flip so the residual increases from lo to hi.
    if (flo <= 0.0) return lo;
    if (fhi >= 0.0) return hi;
  } else {
    if (flo >= 0.0) return lo;
    if (fhi <= 0.0) return hi;
  }
  const double sign = increasing ? 1.0 : -1.0;
  flo *= sign;
  fhi *= sign;
  int lastSide = 0;
  int sideRun = 0;
  for (int i = 0; i < maxIter; ++i) {
    double mid;
    if (sideRun >= 2 || fhi == flo) {
      mid = 0.5 * (lo + hi);  // safeguard: the bracket must keep shrinking
      sideRun = 0;
    } else {
      mid = lo - flo * (hi - lo) / (fhi - flo);
      const double margin = 1e-3 * (hi - lo);
      mid = std::min(std::max(mid, lo + margin), hi - margin);
    }
    if (!(mid > lo && mid < hi)) break;  // bracket at fp resolution
    const double fm = sign * (f(mid) - target);
    if (fm < 0.0) {
      sideRun = lastSide == -1 ? sideRun + 1 : 0;
      lastSide = -1;
      lo = mid;
      flo = fm;
    } else if (fm > 0.0) {
      sideRun = lastSide == 1 ? sideRun + 1 : 0;
      lastSide = 1;
      hi = mid;
      fhi = fm;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Runs body(i) for i in [0, n), replicate-parallel with deterministic
/// ownership of indices. Thread count: ENDSEQ_THREADS or hardware.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& body);
unsigned effectiveThreadCount();

}  // namespace endseq
