#pragma once

#include <span>
#include <vector>

#include "casper/embeddings.hpp"

namespace casper {

struct Neighbor {
  TokenId id;
  double distance;  // cosine distance, 1 - cos(query, row)
};

inline constexpr TokenId kNoBan = 0xffffffffu;

// Exact top-k by cosine distance, ties broken toward the lower id. Throws
// ZeroQuery when ||query|| < 1e-12, std::invalid_argument for k == 0 or a
// dimension mismatch. Returns min(k, size - #excluded) entries, ascending.
std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table,
                                        std::span<const double> query, std::size_t k,
                                        std::span<const TokenId> exclude = {});

// Batched production kernel, OpenMP-parallel over row blocks. `queries` is
// count x dim row-major; ban[i] (kNoBan for none) removes one candidate from
// query i's scan. Per-query results match nearest_neighbors: the scores come
// from the same packed kernel, so rankings are identical no matter how
// queries are batched or how many threads run.
void nearest_neighbors_batch(const EmbeddingTable& table, const double* queries,
                             std::size_t count, std::size_t k, const TokenId* ban,
                             std::vector<std::vector<Neighbor>>& out);

// Full cosine-distance rows (count x size) for mechanisms that score the
// whole vocabulary; same arithmetic as the top-k kernels. The caller bounds
// count so the output buffer stays reasonable.
void cosine_distance_rows(const EmbeddingTable& table, const double* queries,
                          std::size_t count, double* out);

// Plain serial scan kept as an independent oracle for the kernels above and
// as the benchmark baseline.
std::vector<Neighbor> nearest_neighbors_reference(const EmbeddingTable& table,
                                                  std::span<const double> query, std::size_t k,
                                                  std::span<const TokenId> exclude = {});

}  // namespace casper
