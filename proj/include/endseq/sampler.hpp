// END sequence generation and comparison scenarios.
//
// One stream draws a single pair (U, Y); coordinate k is then
//   X_k = F^{-1}(A(Y)) if frac(U + k*u(Y)) >= u(Y), else F^{-1}(B(Y)),
// which keeps every partial sum within Z = F^{-1}(B(Y)) - F^{-1}(A(Y)) of its
// mean. frac is computed per index from the full product (fma-compensated),
// never by accumulation, so the branch counting identity survives n ~ 1e9.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "endseq/residual.hpp"
#include "endseq/rng.hpp"

namespace endseq {

/// frac(k*u) with the product split exactly via fma.
inline double fracOfProduct(std::uint64_t k, double u) {
  const double kd = static_cast<double>(k);
  const double hi = kd * u;
  const double lo = std::fma(kd, u, -hi);
  double f = (hi - std::floor(hi)) + lo;
  if (f < 0.0) f += 1.0;
  if (f >= 1.0) f -= 1.0;
  return f;
}

/// frac(U + k*u) for U in [0,1).
inline double fracShifted(double U, std::uint64_t k, double u) {
  double f = U + fracOfProduct(k, u);
  if (f >= 1.0) f -= 1.0;
  return f;
}

class EndStream {
 public:
  /// Explicit driving pair: U is the phase uniform, mixDeviate the (0,1)
  /// deviate mapped through the K quantile to Y.
  EndStream(const ResidualTransform& rt, double drivingUniform, double mixDeviate)
      : U_(drivingUniform), mu_(rt.mu()) {
    const StreamDraw d = rt.draw(mixDeviate);
    y_ = d.y;
    u_ = d.u;
    w1_ = d.w1;
    w2_ = d.w2;
    dHigh_ = w1_ - mu_;
    dLow_ = w2_ - mu_;
  }

  /// Reproducible stream: (U, Y) occupy fixed counter slots of the
  /// (seed, replicate) generator.
  static EndStream fromSeed(const ResidualTransform& rt, std::uint64_t seed,
                            std::uint64_t replicate) {
    rng::Stream s(seed, rng::Purpose::StreamDriver, replicate);
    const double driving = s.u01();
    const double mixing = s.u01();
    return EndStream(rt, driving, mixing);
  }

  /// X_k for the current index; increments the index.
  double next() {
    const double f = fracShifted(U_, k_, u_);
    ++k_;
    return f < u_ ? w1_ : w2_;  // ties (f == u) take the small branch
  }

  /// X_k - mu with the centered branch values rounded once at construction;
  /// same branch rule and index as next().
  double nextCentered() {
    const double f = fracShifted(U_, k_, u_);
    ++k_;
    return f < u_ ? dHigh_ : dLow_;
  }

  /// Exact deviation S_n - n*mu implied by (U, Y); |result| <= residual().
  double deviationClosedForm(std::uint64_t n) const {
    const double f = fracOfProduct(n, u_);
    const double indicator = U_ >= 1.0 - f ? 1.0 : 0.0;
    return (w1_ - w2_) * (indicator - f);
  }

  double drivingUniform() const { return U_; }
  double mixValue() const { return y_; }
  double weight() const { return u_; }
  double highValue() const { return w1_; }
  double lowValue() const { return w2_; }
  double residual() const { return w1_ - w2_; }
  double mean() const { return mu_; }
  std::uint64_t index() const { return k_; }

 private:
  double U_;
  double mu_;
  double y_ = 0.0;
  double u_ = 0.5;
  double w1_ = 0.0;
  double w2_ = 0.0;
  double dHigh_ = 0.0;
  double dLow_ = 0.0;
  std::uint64_t k_ = 1;
};

enum class Scenario { End, Independent, Comonotonic, CmPeriodic };

/// Supplies one complete mix: a block with marginals F whose sum equals
/// (block length)*mu. The block is drawn once per path and tiled.
using MixProvider = std::function<std::vector<double>(rng::Stream&)>;

std::vector<double> samplePath(const ResidualTransform& rt, Scenario scenario,
                               std::size_t n, std::uint64_t seed,
                               std::uint64_t replicate = 0,
                               const MixProvider* mix = nullptr);

struct EnvelopeRow {
  std::uint64_t n;
  std::uint64_t replicate;
  double absDeviation;   // |S_n - n*mu| from actual summation
  double residualBound;  // Z for this replicate's stream
};

std::vector<EnvelopeRow> deviationEnvelope(const ResidualTransform& rt,
                                           std::vector<std::uint64_t> ns,
                                           std::size_t replicates,
                                           std::uint64_t seed);

/// Antithetic 2-block mix (V, 2*mu - V); a valid complete mix whenever F is
/// symmetric about its mean.
MixProvider antitheticMixProvider(const ResidualTransform& rt);

/// The variance-minimality condition Var(X_1) = E[Z^2]/4 is sufficient but
/// not necessary, so the status is never "false".
enum class SendStatus { Certified, Unknown };
SendStatus sendStatus(const ResidualTransform& rt);

}  // namespace endseq
