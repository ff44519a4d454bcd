#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "uavisac/types.hpp"

namespace uavisac {

struct CmaesConfig {
  double sigma0 = 0.3;
  int population = 0;  ///< 0 selects 4 + floor(3 ln n)
  int max_generations = 200;
  double target = -1e300;  ///< stop once the best value drops below this
  std::uint64_t seed = 1;
  /// Candidates are clipped into [lower, upper] before evaluation when lower < upper.
  double lower = 0.0;
  double upper = 0.0;
};

struct CmaesResult {
  RVec best_x;
  double best_f = 0.0;
  std::vector<double> history;  ///< best value seen so far, per generation
  int generations = 0;
  long evaluations = 0;
};

int default_population(int dim);

/// (mu/mu_w, lambda)-CMA-ES with cumulative step-size adaptation and rank-one
/// plus rank-mu covariance updates. Minimizes `objective`.
CmaesResult cmaes_optimize(const std::function<double(const RVec&)>& objective, const RVec& x0,
                           const CmaesConfig& cfg);

}  // namespace uavisac
