#pragma once

// Shared statistical helpers and fixtures for the unit tests. The p-value
// helpers are written directly from the textbook formulas so they stay
// independent of the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "casper/embeddings.hpp"

namespace test_helpers {

// Kolmogorov limiting distribution Q(t) = 2 * sum_{j>=1} (-1)^{j-1} e^{-2 j^2 t^2}.
inline double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * t * t);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
inline double ks_p_value(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::fabs(f - double(i) / n));
    d = std::max(d, std::fabs(double(i + 1) / n - f));
  }
  // Stephens' small-sample correction keeps the asymptotic formula honest.
  const double t = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  return kolmogorov_q(t);
}

// Upper-tail chi-square p-value: P[X >= stat] with `dof` degrees of freedom.
inline double chi_square_p(double stat, double dof) {
  if (stat <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

// Chi-square p-value for observed counts against equal expected bin mass.
inline double uniform_bins_p(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (const auto c : counts) total += c;
  const double expected = double(total) / double(counts.size());
  double stat = 0.0;
  for (const auto c : counts) {
    const double diff = double(c) - expected;
    stat += diff * diff / expected;
  }
  return chi_square_p(stat, double(counts.size() - 1));
}

// Plain-loop cosine distance, the oracle for every packed kernel.
inline double reference_cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline casper::EmbeddingTable table_from_text(const std::string& text, bool normalize = false) {
  std::istringstream in(text);
  casper::LoadOptions opts;
  opts.normalize = normalize;
  return casper::load_table(in, opts);
}

}  // namespace test_helpers
