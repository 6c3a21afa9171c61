#include "graphspy/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace graphspy::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void note(GradCheckResult& r, double err, const std::string& where) {
  if (r.checked++ == 0 || err > r.worst_rel_error) {
    r.worst_rel_error = err;
    r.worst_param = where;
  }
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor<double>()>& loss, ParamList<double>& params,
                           const GradCheckOptions& options) {
  for (auto& p : params) {
    p.tensor.set_requires_grad(true);
    p.tensor.zero_grad();
  }
  backward(loss());
  std::vector<std::vector<double>> analytic;
  std::size_t total = 0;
  for (auto& p : params) {
    analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    total += p.tensor.size();
  }
  auto eval = [&] { return loss().item(); };

  GradCheckResult r;
  const double h = options.eps;
  if (total <= options.max_coordinates) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto d = params[k].tensor.data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double x0 = d[i];
        d[i] = x0 + h;
        const double fp = eval();
        d[i] = x0 - h;
        const double fm = eval();
        d[i] = x0;
        note(r, relative_error(analytic[k][i], (fp - fm) / (2 * h)),
             params[k].name + "[" + std::to_string(i) + "]");
      }
    }
  } else {
    r.probed = true;
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t probe = 0; probe < options.probes; ++probe) {
      std::vector<std::vector<double>> dir;
      double norm = 0.0;
      for (auto& p : params) {
        dir.emplace_back(p.tensor.size());
        for (auto& u : dir.back()) {
          u = normal(rng);
          norm += u * u;
        }
      }
      norm = std::sqrt(norm);
      double directional = 0.0;
      for (std::size_t k = 0; k < params.size(); ++k)
        for (std::size_t i = 0; i < dir[k].size(); ++i) {
          dir[k][i] /= norm;
          directional += analytic[k][i] * dir[k][i];
        }
      auto shift = [&](double s) {
        for (std::size_t k = 0; k < params.size(); ++k) {
          auto d = params[k].tensor.data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * dir[k][i];
        }
      };
      shift(h);
      const double fp = eval();
      shift(-2 * h);
      const double fm = eval();
      shift(h);
      note(r, relative_error(directional, (fp - fm) / (2 * h)), "probe " + std::to_string(probe));
    }
  }
  r.pass = r.worst_rel_error <= options.tol;
  return r;
}

GradCheckResult grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                           Tensor<double> x, const GradCheckOptions& options) {
  ParamList<double> params{{"x", x}};
  return grad_check([&] { return f(x); }, params, options);
}

}  // namespace graphspy::nn
