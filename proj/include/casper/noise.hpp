#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "casper/rng.hpp"

namespace casper {

// Additive vector noise with density proportional to exp(-eta * ||v||) over
// R^dim, sampled as radius ~ Gamma(dim, 1/eta) times a uniform unit direction.
struct NoiseParams {
  std::size_t dim = 0;
  double eta = 1.0;
  void validate() const;  // throws std::invalid_argument unless dim >= 1, eta > 0
};

// Marsaglia-Tsang rejection sampler, valid for shape >= 1.
double sample_gamma(double shape, RngState& rng);

void sample_noise(const NoiseParams& params, RngState& rng, std::span<double> out);
std::vector<double> sample_noise(const NoiseParams& params, RngState& rng);

// P[||noise|| <= r]: regularized lower incomplete gamma P(dim, eta * r).
double radial_cdf(std::size_t dim, double eta, double r);

}  // namespace casper
