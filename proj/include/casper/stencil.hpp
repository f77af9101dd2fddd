#pragma once

#include <cstddef>
#include <vector>

namespace casper {

// Discrete Gaussian window over token offsets. Odd window sizes center the
// peak on the current token; even sizes center halfway to the right neighbor,
// so offsets 0 and +1 share the maximum weight.
struct StencilWeights {
  std::vector<int> offsets;     // relative positions, ascending
  std::vector<double> weights;  // normalized to sum 1, same length
  double sigma = 1.0;
  int window = 1;               // total number of positions
  double center = 0.0;          // 0.0 for odd windows, +0.5 for even
};

// Unclamped window. Throws std::invalid_argument unless window >= 1, sigma > 0.
StencilWeights stencil_weights(int window, double sigma);

// Window for position i of an n-token sentence: offsets landing outside
// [0, n) are dropped and the surviving weights renormalized.
StencilWeights window_weights_at(std::size_t i, std::size_t n, int window, double sigma);

// Total window weight received by each of the n positions across all n
// windows. Interior positions (window <= j <= n - window) total exactly 1;
// no position ever exceeds 2.
std::vector<double> contribution_profile(std::size_t n, int window, double sigma);

}  // namespace casper
