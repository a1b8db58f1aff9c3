#pragma once

#include <cstddef>

namespace contina {

struct AdaptHyperParams {
  double target_alpha = 0.1;  // miscoverage target
  double gamma1 = 0.005;      // base learning rate
  double beta = 0.99;         // second-moment decay
  double epsilon = 1e-8;      // keeps the rate finite at zero moment

  // Throws Error(kInvalidArgument) naming the first field out of range.
  void validate() const;
};

// Online state of one region. `alpha` is the working miscoverage level and
// may leave [0, 1]; `moment` is the decayed second moment of err - target.
struct RegionAdaptState {
  std::size_t region = 0;
  double alpha = 0.1;
  double moment = 0.0;

  static RegionAdaptState initial(std::size_t region, const AdaptHyperParams& hp) {
    return {region, hp.target_alpha, 0.0};
  }

  friend bool operator==(const RegionAdaptState&, const RegionAdaptState&) = default;
};

// Fraction of the region's two flows that fell outside their intervals.
double coverage_error(bool hit_inflow, bool hit_outflow) noexcept;

// Miss indicator for a single flow.
double per_flow_error(bool hit) noexcept;

// alpha += gamma * (target - err). Moment untouched.
RegionAdaptState update_alpha_fixed(const RegionAdaptState& state, double err, double gamma,
                                    const AdaptHyperParams& hp);

// moment = beta * moment + (1 - beta) * (err - target)^2.
RegionAdaptState update_moment(const RegionAdaptState& state, double err,
                               const AdaptHyperParams& hp);

// gamma1 / (sqrt(moment) + epsilon).
double adaptive_rate(double moment, const AdaptHyperParams& hp);

// Refreshes the moment with this step's error, then moves alpha by the rate
// derived from the refreshed moment.
RegionAdaptState update_alpha_adaptive(const RegionAdaptState& state, double err,
                                       const AdaptHyperParams& hp);

struct LemmaBounds {
  double lower = 0.0;
  double upper = 0.0;
  double k = 0.0;
  // k == 0 (target 0.5): the bound collapses to gamma1 / epsilon.
  bool degenerate = false;
};

// Envelope [-B, 1 + B] that adaptive updates keep alpha inside, with
// k = min{1, (0.5 - a)^2 / a^2, (1 - a)^2 / a^2} and
// B = gamma1 / (a * sqrt((1 - beta) * k) + epsilon).
LemmaBounds lemma_bounds(const AdaptHyperParams& hp);

}  // namespace contina
