#include "casper/stencil.hpp"

#include <cmath>
#include <stdexcept>

namespace casper {

namespace {

void check_params(int window, double sigma) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
}

// Raw weights are computed max-shifted in log space so tiny sigmas cannot
// underflow every term at once.
void fill_weights(StencilWeights& w, int lo, int hi, std::size_t i, std::size_t n, bool clamp) {
  double min_sq = 0.0;
  bool first = true;
  for (int o = lo; o <= hi; ++o) {
    if (clamp) {
      const long long pos = (long long)i + o;
      if (pos < 0 || pos >= (long long)n) continue;
    }
    const double x = (double(o) - w.center) / w.sigma;
    if (first || x * x < min_sq) min_sq = x * x;
    first = false;
  }
  double sum = 0.0;
  for (int o = lo; o <= hi; ++o) {
    if (clamp) {
      const long long pos = (long long)i + o;
      if (pos < 0 || pos >= (long long)n) continue;
    }
    const double x = (double(o) - w.center) / w.sigma;
    const double g = std::exp(-0.5 * (x * x - min_sq));
    w.offsets.push_back(o);
    w.weights.push_back(g);
    sum += g;
  }
  for (auto& g : w.weights) g /= sum;
}

}  // namespace

StencilWeights stencil_weights(int window, double sigma) {
  check_params(window, sigma);
  StencilWeights w;
  w.sigma = sigma;
  w.window = window;
  w.center = (window % 2 == 0) ? 0.5 : 0.0;
  const int lo = (window % 2 == 0) ? -(window / 2 - 1) : -(window / 2);
  const int hi = window / 2;
  fill_weights(w, lo, hi, 0, 0, /*clamp=*/false);
  return w;
}

StencilWeights window_weights_at(std::size_t i, std::size_t n, int window, double sigma) {
  check_params(window, sigma);
  if (n == 0 || i >= n) throw std::invalid_argument("position outside the sentence");
  StencilWeights w;
  w.sigma = sigma;
  w.window = window;
  w.center = (window % 2 == 0) ? 0.5 : 0.0;
  const int lo = (window % 2 == 0) ? -(window / 2 - 1) : -(window / 2);
  const int hi = window / 2;
  fill_weights(w, lo, hi, i, n, /*clamp=*/true);
  return w;
}

std::vector<double> contribution_profile(std::size_t n, int window, double sigma) {
  check_params(window, sigma);
  std::vector<double> totals(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const StencilWeights w = window_weights_at(i, n, window, sigma);
    for (std::size_t j = 0; j < w.offsets.size(); ++j) {
      totals[i + w.offsets[j]] += w.weights[j];
    }
  }
  return totals;
}

}  // namespace casper
