#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "casper/embeddings.hpp"
#include "casper/nn.hpp"
#include "casper/noise.hpp"
#include "casper/rng.hpp"
#include "casper/stencil.hpp"
#include "casper/stopwords.hpp"

namespace casper {

// casper:     context window + additive vector noise + nearest-token decode
// convdef:    noiseless context window, original excluded from the decode
// dchi_noise: per-token vector noise + nearest-token decode, no context
// santext:    exponential mechanism over the whole vocabulary
// custext:    exponential mechanism over the token's top-k pool
enum class MechanismKind { casper, convdef, dchi_noise, santext, custext };

const char* to_string(MechanismKind kind);
std::optional<MechanismKind> mechanism_from_string(std::string_view name);

struct MechanismConfig {
  MechanismKind kind = MechanismKind::casper;
  double eta = 10.0;     // vector-noise scale (casper, dchi_noise)
  double epsilon = 1.0;  // exponential-mechanism budget (santext, custext)
  double sigma = 1.0;    // context window shape (casper, convdef)
  int window = 5;        // context window size (casper, convdef)
  int top_k = 10;        // candidate pool size (custext)
  bool exclude_original = false;  // drop the original token from the decode scan
  std::uint64_t seed = 0;
  double noise_scale = 1.0;  // diagnostic multiplier for auditor power tests; 1.0 otherwise

  // Per-kind defaults; convdef is the only mechanism that excludes the
  // original by default (it is deterministic, keeping it would be a no-op).
  static MechanismConfig defaults(MechanismKind kind);
  void validate() const;  // throws std::invalid_argument with a one-line reason
};

struct SanitizedToken {
  std::string text;
  bool was_stopword = false;
  bool was_oov = false;
  bool was_replaced = false;  // text differs from the original
};

// Window for position i with non-embeddable positions dropped and weights
// renormalized over what remains. Position i itself must be embeddable.
StencilWeights embeddable_window(std::size_t i, std::size_t n, int window, double sigma,
                                 std::span<const std::optional<TokenId>> ids);

// Weighted sum of the referenced rows; every offset must land on an
// embeddable position.
std::vector<double> compose_context_vector(const EmbeddingTable& table,
                                           std::span<const std::optional<TokenId>> ids,
                                           std::size_t i, const StencilWeights& window);

// Per-position stream: one rng per (seed, sentence, position), so parallel
// runs are order-independent and mechanisms sharing a stream draw the same
// noise.
RngState position_rng(std::uint64_t seed, std::uint64_t sentence_index, std::size_t position);

// Token-level mechanisms. `ids` holds the sentence with nullopt for
// non-embeddable positions; position i must be embeddable.
TokenId sanitize_token_casper(const EmbeddingTable& table,
                              std::span<const std::optional<TokenId>> ids, std::size_t i,
                              const MechanismConfig& cfg, RngState& rng);
TokenId sanitize_token_convdef(const EmbeddingTable& table,
                               std::span<const std::optional<TokenId>> ids, std::size_t i,
                               const MechanismConfig& cfg);
TokenId sanitize_token_dchi(const EmbeddingTable& table, TokenId token,
                            const MechanismConfig& cfg, RngState& rng);
TokenId sanitize_token_santext(const EmbeddingTable& table, TokenId token,
                               const MechanismConfig& cfg, RngState& rng);
TokenId sanitize_token_custext(const EmbeddingTable& table, TokenId token,
                               const MechanismConfig& cfg, RngState& rng);

// One draw with probabilities proportional to exp(-epsilon * distance / 2),
// computed max-shifted so extreme budgets stay finite. Consumes exactly one
// uniform. epsilon = 0 is the uniform distribution.
TokenId exponential_sample(std::span<const Neighbor> candidates, double epsilon, RngState& rng);
std::size_t exponential_sample_index(std::span<const double> distances, double epsilon,
                                     RngState& rng);

// Id-level batched core used by every higher-level path: builds all queries,
// runs the batched scans, then samples. Outputs are a function of (seed,
// sentence index, position) only - independent of chunking and thread count.
struct IdSentence {
  std::span<const std::optional<TokenId>> ids;
  std::span<const bool> stopword;  // empty means no stopwords
  std::uint64_t index = 0;
};
// out[s][p] = replacement id for eligible positions, nullopt for pass-through.
void sanitize_ids(const EmbeddingTable& table, std::span<const IdSentence> sentences,
                  const MechanismConfig& cfg,
                  std::vector<std::vector<std::optional<TokenId>>>& out);

// String-level paths. Stopword and out-of-vocabulary tokens pass through
// unchanged; stopwords still contribute context when embeddable.
std::vector<SanitizedToken> sanitize_sentence(const EmbeddingTable& table,
                                              std::span<const std::string> tokens,
                                              const MechanismConfig& cfg,
                                              const StopwordSet& stopwords,
                                              std::uint64_t sentence_index);
std::vector<std::vector<SanitizedToken>> sanitize_sentences(
    const EmbeddingTable& table, std::span<const std::vector<std::string>> sentences,
    std::uint64_t first_index, const MechanismConfig& cfg, const StopwordSet& stopwords);

}  // namespace casper
