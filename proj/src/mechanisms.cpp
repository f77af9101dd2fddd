#include "casper/mechanisms.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace casper {

const char* to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::casper: return "casper";
    case MechanismKind::convdef: return "convdef";
    case MechanismKind::dchi_noise: return "dchi_noise";
    case MechanismKind::santext: return "santext";
    case MechanismKind::custext: return "custext";
  }
  return "unknown";
}

std::optional<MechanismKind> mechanism_from_string(std::string_view name) {
  if (name == "casper") return MechanismKind::casper;
  if (name == "convdef") return MechanismKind::convdef;
  if (name == "dchi_noise") return MechanismKind::dchi_noise;
  if (name == "santext") return MechanismKind::santext;
  if (name == "custext") return MechanismKind::custext;
  return std::nullopt;
}

MechanismConfig MechanismConfig::defaults(MechanismKind kind) {
  MechanismConfig cfg;
  cfg.kind = kind;
  cfg.exclude_original = (kind == MechanismKind::convdef);
  return cfg;
}

void MechanismConfig::validate() const {
  if (!(noise_scale > 0.0)) throw std::invalid_argument("noise-scale must be > 0");
  switch (kind) {
    case MechanismKind::casper:
      if (!(eta > 0.0)) throw std::invalid_argument("casper requires eta > 0");
      [[fallthrough]];
    case MechanismKind::convdef:
      if (!(sigma > 0.0)) throw std::invalid_argument("context mechanisms require sigma > 0");
      if (window < 1) throw std::invalid_argument("context mechanisms require window >= 1");
      break;
    case MechanismKind::dchi_noise:
      if (!(eta > 0.0)) throw std::invalid_argument("dchi_noise requires eta > 0");
      break;
    case MechanismKind::custext:
      if (top_k < 1) throw std::invalid_argument("custext requires top-k >= 1");
      [[fallthrough]];
    case MechanismKind::santext:
      if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
      break;
  }
}

StencilWeights embeddable_window(std::size_t i, std::size_t n, int window, double sigma,
                                 std::span<const std::optional<TokenId>> ids) {
  StencilWeights w = window_weights_at(i, n, window, sigma);
  if (!ids[i]) throw std::invalid_argument("window centre must be embeddable");
  std::size_t kept = 0;
  double sum = 0.0;
  for (std::size_t j = 0; j < w.offsets.size(); ++j) {
    if (!ids[i + w.offsets[j]]) continue;  // non-embeddable neighbours contribute nothing
    w.offsets[kept] = w.offsets[j];
    w.weights[kept] = w.weights[j];
    sum += w.weights[j];
    ++kept;
  }
  w.offsets.resize(kept);
  w.weights.resize(kept);
  for (auto& g : w.weights) g /= sum;
  return w;
}

std::vector<double> compose_context_vector(const EmbeddingTable& table,
                                           std::span<const std::optional<TokenId>> ids,
                                           std::size_t i, const StencilWeights& window) {
  std::vector<double> ctx(table.dim(), 0.0);
  for (std::size_t j = 0; j < window.offsets.size(); ++j) {
    const auto id = ids[i + window.offsets[j]];
    if (!id) throw std::invalid_argument("context window references a non-embeddable position");
    const auto row = table.row(*id);
    const double weight = window.weights[j];
    for (std::size_t e = 0; e < ctx.size(); ++e) ctx[e] += weight * row[e];
  }
  return ctx;
}

RngState position_rng(std::uint64_t seed, std::uint64_t sentence_index, std::size_t position) {
  return RngState::seeded(seed, stream_key(sentence_index, position));
}

std::size_t exponential_sample_index(std::span<const double> distances, double epsilon,
                                     RngState& rng) {
  if (distances.empty()) throw std::invalid_argument("no candidates to sample");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  // Max-shift: weights exp(-eps*(d - d_min)/2) stay in (0, 1] for any budget.
  double d_min = distances[0];
  for (const double d : distances) d_min = std::min(d_min, d);
  double total = 0.0;
  for (const double d : distances) total += std::exp(-0.5 * epsilon * (d - d_min));
  const double u = rng.next_unit() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    cum += std::exp(-0.5 * epsilon * (distances[i] - d_min));
    if (u < cum) return i;
  }
  return distances.size() - 1;  // rounding fallthrough
}

TokenId exponential_sample(std::span<const Neighbor> candidates, double epsilon, RngState& rng) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to sample");
  std::vector<double> distances(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) distances[i] = candidates[i].distance;
  return candidates[exponential_sample_index(distances, epsilon, rng)].id;
}

namespace {

// Query for the vector-noise family; writes dim doubles.
void build_vector_query(const EmbeddingTable& table, std::span<const std::optional<TokenId>> ids,
                        std::size_t i, std::uint64_t sentence_index, const MechanismConfig& cfg,
                        double* query) {
  const std::size_t dim = table.dim();
  if (cfg.kind == MechanismKind::dchi_noise) {
    const auto row = table.row(*ids[i]);
    std::copy(row.begin(), row.end(), query);
  } else {
    const StencilWeights w = embeddable_window(i, ids.size(), cfg.window, cfg.sigma, ids);
    const auto ctx = compose_context_vector(table, ids, i, w);
    std::copy(ctx.begin(), ctx.end(), query);
  }
  if (cfg.kind != MechanismKind::convdef) {
    RngState rng = position_rng(cfg.seed, sentence_index, i);
    std::vector<double> noise(dim);
    sample_noise(NoiseParams{dim, cfg.eta}, rng, noise);
    for (std::size_t e = 0; e < dim; ++e) query[e] += cfg.noise_scale * noise[e];
  }
}

TokenId decode_or_keep(const std::vector<Neighbor>& hits, TokenId original) {
  return hits.empty() ? original : hits[0].id;
}

}  // namespace

TokenId sanitize_token_casper(const EmbeddingTable& table,
                              std::span<const std::optional<TokenId>> ids, std::size_t i,
                              const MechanismConfig& cfg, RngState& rng) {
  const StencilWeights w = embeddable_window(i, ids.size(), cfg.window, cfg.sigma, ids);
  auto query = compose_context_vector(table, ids, i, w);
  std::vector<double> noise(table.dim());
  sample_noise(NoiseParams{table.dim(), cfg.eta}, rng, noise);
  for (std::size_t e = 0; e < query.size(); ++e) query[e] += cfg.noise_scale * noise[e];
  const TokenId original = *ids[i];
  std::vector<TokenId> exclude;
  if (cfg.exclude_original) exclude.push_back(original);
  return decode_or_keep(nearest_neighbors(table, query, 1, exclude), original);
}

TokenId sanitize_token_convdef(const EmbeddingTable& table,
                               std::span<const std::optional<TokenId>> ids, std::size_t i,
                               const MechanismConfig& cfg) {
  const StencilWeights w = embeddable_window(i, ids.size(), cfg.window, cfg.sigma, ids);
  const auto query = compose_context_vector(table, ids, i, w);
  const TokenId original = *ids[i];
  std::vector<TokenId> exclude;
  if (cfg.exclude_original) exclude.push_back(original);
  return decode_or_keep(nearest_neighbors(table, query, 1, exclude), original);
}

TokenId sanitize_token_dchi(const EmbeddingTable& table, TokenId token,
                            const MechanismConfig& cfg, RngState& rng) {
  const auto row = table.row(token);
  std::vector<double> query(row.begin(), row.end());
  std::vector<double> noise(table.dim());
  sample_noise(NoiseParams{table.dim(), cfg.eta}, rng, noise);
  for (std::size_t e = 0; e < query.size(); ++e) query[e] += cfg.noise_scale * noise[e];
  std::vector<TokenId> exclude;
  if (cfg.exclude_original) exclude.push_back(token);
  return decode_or_keep(nearest_neighbors(table, query, 1, exclude), token);
}

TokenId sanitize_token_santext(const EmbeddingTable& table, TokenId token,
                               const MechanismConfig& cfg, RngState& rng) {
  std::vector<double> distances(table.size());
  cosine_distance_rows(table, table.row(token).data(), 1, distances.data());
  return TokenId(exponential_sample_index(distances, cfg.epsilon, rng));
}

TokenId sanitize_token_custext(const EmbeddingTable& table, TokenId token,
                               const MechanismConfig& cfg, RngState& rng) {
  const auto pool = nearest_neighbors(table, table.row(token), std::size_t(cfg.top_k));
  return exponential_sample(pool, cfg.epsilon, rng);
}

void sanitize_ids(const EmbeddingTable& table, std::span<const IdSentence> sentences,
                  const MechanismConfig& cfg,
                  std::vector<std::vector<std::optional<TokenId>>>& out) {
  cfg.validate();
  struct Item {
    std::uint32_t sentence;
    std::uint32_t position;
    TokenId original;
  };
  std::vector<Item> items;
  out.assign(sentences.size(), {});
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    out[s].assign(sent.ids.size(), std::nullopt);
    for (std::size_t p = 0; p < sent.ids.size(); ++p) {
      const bool stop = !sent.stopword.empty() && sent.stopword[p];
      if (sent.ids[p] && !stop) {
        items.push_back(Item{std::uint32_t(s), std::uint32_t(p), *sent.ids[p]});
      }
    }
  }
  if (items.empty()) return;

  const std::size_t dim = table.dim();

  if (cfg.kind == MechanismKind::casper || cfg.kind == MechanismKind::convdef ||
      cfg.kind == MechanismKind::dchi_noise) {
    std::vector<double> queries(items.size() * dim);
    std::vector<TokenId> bans(items.size(), kNoBan);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      const auto& sent = sentences[item.sentence];
      build_vector_query(table, sent.ids, item.position, sent.index, cfg,
                         queries.data() + i * dim);
      if (cfg.exclude_original) bans[i] = item.original;
    }
    std::vector<std::vector<Neighbor>> hits;
    nearest_neighbors_batch(table, queries.data(), items.size(), 1, bans.data(), hits);
    for (std::size_t i = 0; i < items.size(); ++i) {
      out[items[i].sentence][items[i].position] = decode_or_keep(hits[i], items[i].original);
    }
    return;
  }

  if (cfg.kind == MechanismKind::santext) {
    // Full-vocabulary scoring, chunked so the distance buffer stays modest.
    const std::size_t chunk = std::max<std::size_t>(1, 4000000 / table.size());
    std::vector<double> queries(std::min(chunk, items.size()) * dim);
    std::vector<double> distances(std::min(chunk, items.size()) * table.size());
    for (std::size_t base = 0; base < items.size(); base += chunk) {
      const std::size_t n = std::min(chunk, items.size() - base);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = table.row(items[base + i].original);
        std::copy(row.begin(), row.end(), queries.data() + i * dim);
      }
      cosine_distance_rows(table, queries.data(), n, distances.data());
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < n; ++i) {
        const auto& item = items[base + i];
        RngState rng = position_rng(cfg.seed, sentences[item.sentence].index, item.position);
        const std::span<const double> row(distances.data() + i * table.size(), table.size());
        out[item.sentence][item.position] =
            TokenId(exponential_sample_index(row, cfg.epsilon, rng));
      }
    }
    return;
  }

  // custext: top-k pools (the token itself competes), then one exponential draw.
  std::vector<double> queries(items.size() * dim);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto row = table.row(items[i].original);
    std::copy(row.begin(), row.end(), queries.data() + i * dim);
  }
  std::vector<std::vector<Neighbor>> pools;
  nearest_neighbors_batch(table, queries.data(), items.size(), std::size_t(cfg.top_k), nullptr,
                          pools);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    RngState rng = position_rng(cfg.seed, sentences[item.sentence].index, item.position);
    out[item.sentence][item.position] = exponential_sample(pools[i], cfg.epsilon, rng);
  }
}

std::vector<std::vector<SanitizedToken>> sanitize_sentences(
    const EmbeddingTable& table, std::span<const std::vector<std::string>> sentences,
    std::uint64_t first_index, const MechanismConfig& cfg, const StopwordSet& stopwords) {
  std::vector<std::vector<std::optional<TokenId>>> ids(sentences.size());
  std::vector<std::vector<bool>> stops(sentences.size());
  std::vector<std::unique_ptr<bool[]>> stop_flat(sentences.size());
  std::vector<IdSentence> views(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& tokens = sentences[s];
    ids[s].resize(tokens.size());
    stop_flat[s] = std::make_unique<bool[]>(tokens.size());
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      ids[s][p] = table.lookup(tokens[p]);
      stop_flat[s][p] = stopwords.contains(tokens[p]);
    }
    views[s] = IdSentence{ids[s], {stop_flat[s].get(), tokens.size()}, first_index + s};
  }

  std::vector<std::vector<std::optional<TokenId>>> replaced;
  sanitize_ids(table, views, cfg, replaced);

  std::vector<std::vector<SanitizedToken>> out(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& tokens = sentences[s];
    out[s].resize(tokens.size());
    for (std::size_t p = 0; p < tokens.size(); ++p) {
      SanitizedToken& t = out[s][p];
      t.was_stopword = stop_flat[s][p];
      t.was_oov = !ids[s][p].has_value();
      if (replaced[s][p]) {
        t.text = table.token(*replaced[s][p]);
        t.was_replaced = t.text != tokens[p];
      } else {
        t.text = tokens[p];
      }
    }
  }
  return out;
}

std::vector<SanitizedToken> sanitize_sentence(const EmbeddingTable& table,
                                              std::span<const std::string> tokens,
                                              const MechanismConfig& cfg,
                                              const StopwordSet& stopwords,
                                              std::uint64_t sentence_index) {
  std::vector<std::vector<std::string>> one;
  one.emplace_back(tokens.begin(), tokens.end());
  auto result = sanitize_sentences(table, one, sentence_index, cfg, stopwords);
  return std::move(result[0]);
}

}  // namespace casper
