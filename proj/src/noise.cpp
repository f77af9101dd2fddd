#include "casper/noise.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

namespace casper {

void NoiseParams::validate() const {
  if (dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
}

double sample_gamma(double shape, RngState& rng) {
  if (!(shape >= 1.0)) throw std::invalid_argument("gamma shape must be >= 1");
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void sample_noise(const NoiseParams& params, RngState& rng, std::span<double> out) {
  params.validate();
  if (out.size() != params.dim) throw std::invalid_argument("noise output size mismatch");
  const double radius = sample_gamma(double(params.dim), rng) / params.eta;
  double norm_sq;
  do {
    norm_sq = 0.0;
    for (auto& v : out) {
      v = rng.next_normal();
      norm_sq += v * v;
    }
  } while (!(norm_sq > 0.0));
  const double scale = radius / std::sqrt(norm_sq);
  for (auto& v : out) v *= scale;
}

std::vector<double> sample_noise(const NoiseParams& params, RngState& rng) {
  std::vector<double> out(params.dim);
  sample_noise(params, rng, out);
  return out;
}

double radial_cdf(std::size_t dim, double eta, double r) {
  NoiseParams{dim, eta}.validate();
  if (r <= 0.0) return 0.0;
  return boost::math::gamma_p(double(dim), eta * r);
}

}  // namespace casper
