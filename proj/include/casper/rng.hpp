#pragma once

#include <cstdint>

namespace casper {

// splitmix64 finalizer; good avalanche, used to derive stream keys and seeds.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive combine of two words into one stream key.
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b);

// xoshiro256++ seeded from (seed, stream). Distinct streams yield statistically
// independent sequences, so parallel workers seeded per work item produce the
// same draws regardless of scheduling. All derived distributions are sampled
// by hand (polar normals, rejection gamma) so runs are byte-identical across
// standard libraries; std::normal_distribution et al. are not pinned down.
struct RngState {
  std::uint64_t s[4];
  double spare = 0.0;
  bool has_spare = false;

  static RngState seeded(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next_unit();    // uniform [0, 1)
  double next_open();    // uniform (0, 1], safe under log()
  double next_normal();  // standard normal
};

}  // namespace casper
