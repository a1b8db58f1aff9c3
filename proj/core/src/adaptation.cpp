#include "contina/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "contina/error.hpp"

namespace contina {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCategory::kInvalidArgument, what);
}

}  // namespace

void AdaptHyperParams::validate() const {
  require(target_alpha > 0.0 && target_alpha < 1.0, "target alpha must lie in (0, 1)");
  require(gamma1 > 0.0 && std::isfinite(gamma1), "gamma1 must be positive");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
}

double coverage_error(bool hit_inflow, bool hit_outflow) noexcept {
  const int hits = (hit_inflow ? 1 : 0) + (hit_outflow ? 1 : 0);
  return 1.0 - static_cast<double>(hits) / 2.0;
}

double per_flow_error(bool hit) noexcept { return hit ? 0.0 : 1.0; }

RegionAdaptState update_alpha_fixed(const RegionAdaptState& state, double err, double gamma,
                                    const AdaptHyperParams& hp) {
  RegionAdaptState next = state;
  next.alpha = state.alpha + gamma * (hp.target_alpha - err);
  return next;
}

RegionAdaptState update_moment(const RegionAdaptState& state, double err,
                               const AdaptHyperParams& hp) {
  const double g = err - hp.target_alpha;
  RegionAdaptState next = state;
  next.moment = hp.beta * state.moment + (1.0 - hp.beta) * g * g;
  return next;
}

double adaptive_rate(double moment, const AdaptHyperParams& hp) {
  return hp.gamma1 / (std::sqrt(moment) + hp.epsilon);
}

RegionAdaptState update_alpha_adaptive(const RegionAdaptState& state, double err,
                                       const AdaptHyperParams& hp) {
  RegionAdaptState next = update_moment(state, err, hp);
  next.alpha = state.alpha - adaptive_rate(next.moment, hp) * (err - hp.target_alpha);
  return next;
}

LemmaBounds lemma_bounds(const AdaptHyperParams& hp) {
  const double a = hp.target_alpha;
  const double a2 = a * a;
  const double k = std::min({1.0, (0.5 - a) * (0.5 - a) / a2, (1.0 - a) * (1.0 - a) / a2});
  const double b = hp.gamma1 / (a * std::sqrt((1.0 - hp.beta) * k) + hp.epsilon);
  return {-b, 1.0 + b, k, k == 0.0};
}

}  // namespace contina
