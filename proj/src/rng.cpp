#include "casper/rng.hpp"

#include <cmath>

namespace casper {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + kGolden));
}

RngState RngState::seeded(std::uint64_t seed, std::uint64_t stream) {
  RngState r;
  std::uint64_t x = mix64(seed ^ 0x5851f42d4c957f2dull) ^ mix64(stream + 0x14057b7ef767814full);
  for (auto& word : r.s) {
    x += kGolden;
    word = mix64(x);
  }
  if (!(r.s[0] | r.s[1] | r.s[2] | r.s[3])) r.s[0] = kGolden;
  return r;
}

std::uint64_t RngState::next_u64() {
  const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

double RngState::next_unit() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::next_open() {
  return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngState::next_normal() {
  if (has_spare) {
    has_spare = false;
    return spare;
  }
  double u, v, q;
  do {
    u = 2.0 * next_unit() - 1.0;
    v = 2.0 * next_unit() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  spare = v * f;
  has_spare = true;
  return u * f;
}

}  // namespace casper
