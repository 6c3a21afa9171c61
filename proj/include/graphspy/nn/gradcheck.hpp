#pragma once

// Finite-difference check of reverse-mode gradients (run in double).

#include <cstdint>
#include <functional>
#include <string>

#include "graphspy/nn/optim.hpp"

namespace graphspy::nn {

struct GradCheckResult {
  bool pass = false;
  double worst_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;  // coordinates or probe directions compared
  bool probed = false;      // random directions were used instead of coordinates
};

struct GradCheckOptions {
  double eps = 1e-4;
  double tol = 1e-3;
  // Above this many entries in total, compare directional derivatives along
  // `probes` random directions instead of every coordinate.
  std::size_t max_coordinates = 10000;
  std::size_t probes = 24;
  std::uint64_t seed = 7;
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
double relative_error(double analytic, double numeric);

// `loss` rebuilds the graph from the current parameter values and returns a
// scalar. Parameter gradients are overwritten.
GradCheckResult grad_check(const std::function<Tensor<double>()>& loss, ParamList<double>& params,
                           const GradCheckOptions& options = {});

// Single-input form: checks d f(x) / d x.
GradCheckResult grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           Tensor<double> x, const GradCheckOptions& options = {});

}  // namespace graphspy::nn
