#include "casper/nn.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

namespace casper {

namespace {

constexpr std::size_t kLanes = 8;     // queries scored per packed group
constexpr std::size_t kTileRows = 8;  // rows scored per kernel pass
constexpr std::size_t kMaxBlockRows = 256;
constexpr std::size_t kBlockBytes = 512 * 1024;  // row block sized to stay cache resident

// Rows per block, octet-aligned. Blocks are sized so one block of rows stays
// in cache while every packed query group streams past it; the table then
// crosses memory once per batch instead of once per group.
std::size_t block_rows_for_dim(std::size_t dim) {
  std::size_t rows = kBlockBytes / (dim * sizeof(double));
  rows = std::min(rows, kMaxBlockRows);
  rows = std::max(rows, kTileRows);
  return rows - rows % kTileRows;
}

// Scores eight rows against eight packed queries (qt[e * kLanes + lane]):
// out[r * kLanes + l] = dot(row r, query l). Each (row, lane) pair
// accumulates through a single chain in element order, so a score is a fixed
// function of the row, the query, and dim alone - never of the tile, block,
// lane slot, or thread that computed it. The eight per-row accumulators are
// independent chains, which keeps the FMA pipeline full. noinline keeps one
// copy of the chain for every caller.
//
// On GNU-compatible compilers the eight lanes are a native vector type, so
// each (element, row) step is one broadcast multiply-add; the generic loop
// below it spells out the same chains for other compilers.
#if defined(__GNUC__) || defined(__clang__)

typedef double Vec8 __attribute__((vector_size(64)));

inline Vec8 load8(const double* p) {
  Vec8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store8(double* p, Vec8 v) { std::memcpy(p, &v, sizeof v); }

__attribute__((noinline)) void score_tile(const double* __restrict__ rows, std::size_t dim,
                                          const double* __restrict__ qt,
                                          double* __restrict__ out) {
  Vec8 a0{}, a1{}, a2{}, a3{}, a4{}, a5{}, a6{}, a7{};
  const double* __restrict__ r0 = rows;
  const double* __restrict__ r1 = rows + dim;
  const double* __restrict__ r2 = rows + 2 * dim;
  const double* __restrict__ r3 = rows + 3 * dim;
  const double* __restrict__ r4 = rows + 4 * dim;
  const double* __restrict__ r5 = rows + 5 * dim;
  const double* __restrict__ r6 = rows + 6 * dim;
  const double* __restrict__ r7 = rows + 7 * dim;
  for (std::size_t e = 0; e < dim; ++e) {
    const Vec8 q = load8(qt + e * kLanes);
    a0 += r0[e] * q;
    a1 += r1[e] * q;
    a2 += r2[e] * q;
    a3 += r3[e] * q;
    a4 += r4[e] * q;
    a5 += r5[e] * q;
    a6 += r6[e] * q;
    a7 += r7[e] * q;
  }
  store8(out + 0 * kLanes, a0);
  store8(out + 1 * kLanes, a1);
  store8(out + 2 * kLanes, a2);
  store8(out + 3 * kLanes, a3);
  store8(out + 4 * kLanes, a4);
  store8(out + 5 * kLanes, a5);
  store8(out + 6 * kLanes, a6);
  store8(out + 7 * kLanes, a7);
}

// Same contract and accumulation order as score_tile, for a final group of
// fewer than eight rows.
__attribute__((noinline)) void score_tail(const double* __restrict__ rows, std::size_t nrows,
                                          std::size_t dim, const double* __restrict__ qt,
                                          double* __restrict__ out) {
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* __restrict__ row = rows + r * dim;
    Vec8 acc{};
    for (std::size_t e = 0; e < dim; ++e) acc += row[e] * load8(qt + e * kLanes);
    store8(out + r * kLanes, acc);
  }
}

#else  // generic fallback, same chains

void score_tile(const double* rows, std::size_t dim, const double* qt, double* out) {
  double acc[kTileRows][kLanes] = {};
  for (std::size_t e = 0; e < dim; ++e) {
    const double* q = qt + e * kLanes;
    for (std::size_t r = 0; r < kTileRows; ++r) {
      const double b = rows[r * dim + e];
      for (std::size_t l = 0; l < kLanes; ++l) acc[r][l] += b * q[l];
    }
  }
  for (std::size_t r = 0; r < kTileRows; ++r) {
    for (std::size_t l = 0; l < kLanes; ++l) out[r * kLanes + l] = acc[r][l];
  }
}

void score_tail(const double* rows, std::size_t nrows, std::size_t dim, const double* qt,
                double* out) {
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* row = rows + r * dim;
    double acc[kLanes] = {};
    for (std::size_t e = 0; e < dim; ++e) {
      const double b = row[e];
      const double* q = qt + e * kLanes;
      for (std::size_t l = 0; l < kLanes; ++l) acc[l] += b * q[l];
    }
    for (std::size_t l = 0; l < kLanes; ++l) out[r * kLanes + l] = acc[l];
  }
}

#endif

void score_rows(const double* rows, std::size_t nrows, std::size_t dim, const double* qt,
                double* out) {
  std::size_t r = 0;
  for (; r + kTileRows <= nrows; r += kTileRows) {
    score_tile(rows + r * dim, dim, qt, out + r * kLanes);
  }
  if (r < nrows) score_tail(rows + r * dim, nrows - r, dim, qt, out + r * kLanes);
}

// Shared by every scoring path so distances agree bit for bit.
inline double finish_distance(double dot, double inv_row_norm, double inv_query_norm) {
  return 1.0 - (dot * inv_row_norm) * inv_query_norm;
}

inline bool better(double d1, TokenId id1, double d2, TokenId id2) {
  return d1 < d2 || (d1 == d2 && id1 < id2);
}

// Keeps the `cap` smallest (distance, id) pairs of everything offered, in
// ascending order, inside a caller-provided slice. The result is the minimum
// of a total order, so it does not depend on the order of offers.
inline void offer_neighbor(Neighbor* items, std::uint32_t& len, std::size_t cap, double dist,
                           TokenId id) {
  if (len == cap && !better(dist, id, items[len - 1].distance, items[len - 1].id)) return;
  std::size_t pos = len;
  while (pos > 0 && better(dist, id, items[pos - 1].distance, items[pos - 1].id)) --pos;
  const std::size_t end = (len < cap) ? len : cap - 1;
  for (std::size_t i = end; i > pos; --i) items[i] = items[i - 1];
  items[pos] = Neighbor{id, dist};
  if (len < cap) ++len;
}

// Packs queries [group * kLanes, ...) transposed into dst[e * kLanes + lane],
// zero-filling unused lanes.
void pack_group(const double* queries, std::size_t count, std::size_t dim, std::size_t group,
                double* dst) {
  const std::size_t begin = group * kLanes;
  const std::size_t n = std::min(kLanes, count - begin);
  for (std::size_t l = 0; l < n; ++l) {
    const double* q = queries + (begin + l) * dim;
    for (std::size_t e = 0; e < dim; ++e) dst[e * kLanes + l] = q[e];
  }
}

std::vector<double> query_inv_norms(const double* queries, std::size_t count, std::size_t dim) {
  std::vector<double> inv(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double* q = queries + i * dim;
    double sq = 0.0;
    for (std::size_t e = 0; e < dim; ++e) sq += q[e] * q[e];
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) throw ZeroQuery();
    inv[i] = 1.0 / norm;
  }
  return inv;
}

// Scores rows [r0, r1) against one packed group and offers the finished
// distances into per-query slices of `items`/`lens` (each `keep` wide).
// Queries are lane_base + l globally; their slices sit at slot_base + l, so
// callers can hold either per-group or whole-batch slices.
void score_and_offer(const EmbeddingTable& table, std::size_t r0, std::size_t r1,
                     const double* qt, std::size_t lane_base, std::size_t slot_base,
                     std::size_t lanes_used, std::size_t keep, const TokenId* ban,
                     const std::vector<double>& inv_q, double* scores, Neighbor* items,
                     std::uint32_t* lens) {
  const std::size_t dim = table.dim();
  const double* inv_rows = table.inv_norms();
  const std::size_t nrows = r1 - r0;
  score_rows(table.data() + r0 * dim, nrows, dim, qt, scores);
  for (std::size_t l = 0; l < lanes_used; ++l) {
    const std::size_t qi = lane_base + l;
    const TokenId banned = ban ? ban[qi] : kNoBan;
    Neighbor* slot = items + (slot_base + l) * keep;
    std::uint32_t& len = lens[slot_base + l];
    for (std::size_t r = 0; r < nrows; ++r) {
      const TokenId id = TokenId(r0 + r);
      if (id == banned) continue;
      const double dist = finish_distance(scores[r * kLanes + l], inv_rows[id], inv_q[qi]);
      offer_neighbor(slot, len, keep, dist, id);
    }
  }
}

}  // namespace

void nearest_neighbors_batch(const EmbeddingTable& table, const double* queries,
                             std::size_t count, std::size_t k, const TokenId* ban,
                             std::vector<std::vector<Neighbor>>& out) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (table.size() == 0) throw EmptyTable();
  const std::size_t dim = table.dim();
  const std::size_t size = table.size();
  const std::size_t keep = std::min(k, size);
  const auto inv_q = query_inv_norms(queries, count, dim);

  out.assign(count, {});
  const std::size_t ngroups = (count + kLanes - 1) / kLanes;
  const std::size_t qstride = dim * kLanes;
  std::vector<double> qt(ngroups * qstride, 0.0);
  for (std::size_t g = 0; g < ngroups; ++g) {
    pack_group(queries, count, dim, g, qt.data() + g * qstride);
  }

  const std::size_t block_rows = block_rows_for_dim(dim);
  const std::size_t nblocks = (size + block_rows - 1) / block_rows;
  const int max_threads = omp_get_max_threads();

  if (size <= 4096 && ngroups >= std::size_t(4 * max_threads)) {
    // Small vocabulary, many queries: one thread per group of queries; the
    // whole table is cache resident anyway.
#pragma omp parallel
    {
      std::vector<double> scores(block_rows * kLanes);
      std::vector<Neighbor> items(kLanes * keep);
      std::vector<std::uint32_t> lens(kLanes);
#pragma omp for schedule(static)
      for (std::size_t g = 0; g < ngroups; ++g) {
        const std::size_t lane_base = g * kLanes;
        const std::size_t lanes_used = std::min(kLanes, count - lane_base);
        std::fill(lens.begin(), lens.end(), 0u);
        for (std::size_t b = 0; b < nblocks; ++b) {
          const std::size_t r0 = b * block_rows;
          const std::size_t r1 = std::min(size, r0 + block_rows);
          score_and_offer(table, r0, r1, qt.data() + g * qstride, lane_base, 0, lanes_used,
                          keep, ban, inv_q, scores.data(), items.data(), lens.data());
        }
        for (std::size_t l = 0; l < lanes_used; ++l) {
          out[lane_base + l].assign(items.begin() + l * keep, items.begin() + l * keep + lens[l]);
        }
      }
    }
    return;
  }

  // Large vocabulary: threads split the row blocks; inside a block every
  // query group is scored while the block is cache resident. Each thread
  // keeps its own top-k per query, and the per-thread lists merge afterward.
  // The merged result is the k smallest (distance, id) pairs of the union -
  // a total order - so block size, scheduling, and thread count cannot
  // change it.
  std::vector<std::vector<Neighbor>> thread_items(max_threads);
  std::vector<std::vector<std::uint32_t>> thread_lens(max_threads);
#pragma omp parallel
  {
    const int tid = omp_get_thread_num();
    auto& items = thread_items[tid];
    auto& lens = thread_lens[tid];
    items.resize(count * keep);
    lens.assign(count, 0u);
    std::vector<double> scores(block_rows * kLanes);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t r0 = b * block_rows;
      const std::size_t r1 = std::min(size, r0 + block_rows);
      for (std::size_t g = 0; g < ngroups; ++g) {
        const std::size_t lane_base = g * kLanes;
        const std::size_t lanes_used = std::min(kLanes, count - lane_base);
        score_and_offer(table, r0, r1, qt.data() + g * qstride, lane_base, lane_base, lanes_used,
                        keep, ban, inv_q, scores.data(), items.data(), lens.data());
      }
    }
  }
  std::vector<Neighbor> merged(keep);
  for (std::size_t qi = 0; qi < count; ++qi) {
    std::uint32_t mlen = 0;
    for (int t = 0; t < max_threads; ++t) {
      if (thread_items[t].empty()) continue;
      const Neighbor* slot = thread_items[t].data() + qi * keep;
      for (std::uint32_t j = 0; j < thread_lens[t][qi]; ++j) {
        offer_neighbor(merged.data(), mlen, keep, slot[j].distance, slot[j].id);
      }
    }
    out[qi].assign(merged.begin(), merged.begin() + mlen);
  }
}

void cosine_distance_rows(const EmbeddingTable& table, const double* queries, std::size_t count,
                          double* out) {
  if (table.size() == 0) throw EmptyTable();
  const std::size_t dim = table.dim();
  const std::size_t size = table.size();
  const auto inv_q = query_inv_norms(queries, count, dim);
  const double* inv_rows = table.inv_norms();

  const std::size_t ngroups = (count + kLanes - 1) / kLanes;
  const std::size_t qstride = dim * kLanes;
  std::vector<double> qt(ngroups * qstride, 0.0);
  for (std::size_t g = 0; g < ngroups; ++g) {
    pack_group(queries, count, dim, g, qt.data() + g * qstride);
  }

  const std::size_t block_rows = block_rows_for_dim(dim);
  const std::size_t nblocks = (size + block_rows - 1) / block_rows;
#pragma omp parallel
  {
    std::vector<double> scores(block_rows * kLanes);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t r0 = b * block_rows;
      const std::size_t nrows = std::min(block_rows, size - r0);
      for (std::size_t g = 0; g < ngroups; ++g) {
        const std::size_t lane_base = g * kLanes;
        const std::size_t lanes_used = std::min(kLanes, count - lane_base);
        score_rows(table.data() + r0 * dim, nrows, dim, qt.data() + g * qstride, scores.data());
        for (std::size_t l = 0; l < lanes_used; ++l) {
          double* dst = out + (lane_base + l) * size;
          for (std::size_t r = 0; r < nrows; ++r) {
            dst[r0 + r] =
                finish_distance(scores[r * kLanes + l], inv_rows[r0 + r], inv_q[lane_base + l]);
          }
        }
      }
    }
  }
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingTable& table,
                                        std::span<const double> query, std::size_t k,
                                        std::span<const TokenId> exclude) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (query.size() != table.dim()) throw std::invalid_argument("query dimension mismatch");

  std::unordered_set<TokenId> banned;
  for (const TokenId id : exclude) {
    if (std::size_t(id) < table.size()) banned.insert(id);
  }
  const std::size_t avail = table.size() - banned.size();
  const std::size_t want = std::min(k, avail);
  const std::size_t k_eff = std::min(k + banned.size(), table.size());

  std::vector<std::vector<Neighbor>> out;
  nearest_neighbors_batch(table, query.data(), 1, std::max<std::size_t>(k_eff, 1), nullptr, out);

  std::vector<Neighbor> result;
  result.reserve(want);
  for (const auto& n : out[0]) {
    if (banned.count(n.id)) continue;
    result.push_back(n);
    if (result.size() == want) break;
  }
  return result;
}

}  // namespace casper
