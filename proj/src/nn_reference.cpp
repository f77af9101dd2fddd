#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "casper/nn.hpp"

namespace casper {

// Textbook scan, deliberately written without the packed kernel so the tests
// have an independent oracle. Also the serial baseline in the benchmark.
std::vector<Neighbor> nearest_neighbors_reference(const EmbeddingTable& table,
                                                  std::span<const double> query, std::size_t k,
                                                  std::span<const TokenId> exclude) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (query.size() != table.dim()) throw std::invalid_argument("query dimension mismatch");
  if (table.size() == 0) throw EmptyTable();

  double query_sq = 0.0;
  for (const double v : query) query_sq += v * v;
  const double query_norm = std::sqrt(query_sq);
  if (query_norm < 1e-12) throw ZeroQuery();

  std::unordered_set<TokenId> banned;
  for (const TokenId id : exclude) {
    if (std::size_t(id) < table.size()) banned.insert(id);
  }

  std::vector<Neighbor> all;
  all.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (banned.count(TokenId(r))) continue;
    const auto row = table.row(TokenId(r));
    double dot = 0.0;
    for (std::size_t e = 0; e < row.size(); ++e) dot += row[e] * query[e];
    // Finish exactly as the packed kernel does (multiply by the precomputed
    // reciprocals, same association), so distances - and the (distance, id)
    // order among geometric ties - are bit-identical across implementations.
    const double sim = (dot * table.inv_norms()[r]) * (1.0 / query_norm);
    all.push_back(Neighbor{TokenId(r), 1.0 - sim});
  }

  const std::size_t want = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + want, all.end(),
                    [](const Neighbor& a, const Neighbor& b) {
                      return a.distance < b.distance ||
                             (a.distance == b.distance && a.id < b.id);
                    });
  all.resize(want);
  return all;
}

}  // namespace casper
