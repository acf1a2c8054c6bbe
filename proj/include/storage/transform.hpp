#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "storage/params.hpp"

namespace storage {

// Bijection between the admissible structural parameters and an unconstrained
// search space: rho = tanh(u1), a = u2, b = -exp(u3),
// delta = eps + (1 - eps) / (1 + exp(-u4)) with eps = 1e-4. Keeping delta
// strictly positive keeps the solver grid finite.
namespace param_transform {

inline constexpr double kDeltaEps = 1e-4;

inline std::array<double, 4> to_unconstrained(const StructuralParams& p) {
  return {std::atanh(p.rho), p.a, std::log(-p.b),
          -std::log((1.0 - kDeltaEps) / (p.delta - kDeltaEps) - 1.0)};
}

inline StructuralParams from_unconstrained(const std::array<double, 4>& u,
                                           double r) {
  StructuralParams p;
  p.rho = std::tanh(u[0]);
  p.a = u[1];
  p.b = -std::exp(u[2]);
  p.delta = kDeltaEps + (1.0 - kDeltaEps) / (1.0 + std::exp(-u[3]));
  p.r = r;
  return p;
}

}  // namespace param_transform

// Coordinates held fixed during optimization (e.g. rho = 0 for the iid
// supply-shock restriction).
struct ParamMask {
  std::array<bool, 4> free = {true, true, true, true};

  std::vector<double> pack(const std::array<double, 4>& u) const {
    std::vector<double> x;
    for (int i = 0; i < 4; ++i)
      if (free[i]) x.push_back(u[i]);
    return x;
  }

  std::array<double, 4> unpack(const std::vector<double>& x,
                               const std::array<double, 4>& fixed) const {
    std::array<double, 4> u = fixed;
    std::size_t k = 0;
    for (int i = 0; i < 4; ++i)
      if (free[i]) u[i] = x[k++];
    return u;
  }
};

}  // namespace storage
