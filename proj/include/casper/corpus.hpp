#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casper/mechanisms.hpp"

namespace casper {

// Split on Unicode whitespace, then peel leading/trailing ASCII punctuation
// into single-character tokens ("great." -> "great", "."). Internal
// punctuation stays ("don't"). lowercase folds ASCII case.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = false);

struct SentenceRecord {
  std::string id;
  std::vector<std::string> original_tokens;
  std::vector<std::string> sanitized_tokens;
  std::vector<bool> stopword_mask;
  std::vector<bool> oov_mask;
};

struct CorpusStats {
  std::uint64_t sentences = 0;
  std::uint64_t tokens = 0;
  std::uint64_t stopword_tokens = 0;
  std::uint64_t oov_tokens = 0;
  std::uint64_t replaced_tokens = 0;  // tokens actually changed
  std::uint64_t errors = 0;           // records skipped as malformed
  double cosine_sum = 0.0;            // sum of cos(original, replacement) over replaced

  double stopword_rate() const { return tokens ? double(stopword_tokens) / double(tokens) : 0.0; }
  double oov_rate() const { return tokens ? double(oov_tokens) / double(tokens) : 0.0; }
  double replaced_rate() const { return tokens ? double(replaced_tokens) / double(tokens) : 0.0; }
  // 1.0 by convention when nothing was replaced.
  double mean_cosine_similarity() const {
    return replaced_tokens ? cosine_sum / double(replaced_tokens) : 1.0;
  }
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CorpusFormat { jsonl, tsv };

struct CorpusOptions {
  CorpusFormat format = CorpusFormat::jsonl;
  bool lowercase = false;
  std::size_t chunk_sentences = 512;  // sentences sanitized per batched pass
  double error_budget = 0.01;         // abort when more than this fraction of records fail
};

// Streams records (JSONL {"id","text"} / {"id","tokens"} or TSV "id<TAB>text"),
// sanitizes them in batched chunks, and writes one JSON record per line in
// input order. Malformed records are logged to `log` and skipped; the run
// throws CorpusError when they exceed options.error_budget. Output is a pure
// function of (corpus, table, config, seed) - independent of thread count.
CorpusStats sanitize_corpus(std::istream& in, std::ostream& out, std::ostream& log,
                            const EmbeddingTable& table, const MechanismConfig& cfg,
                            const StopwordSet& stopwords, const CorpusOptions& options = {});

std::string to_json_line(const SentenceRecord& record);

// Token lists from a raw corpus stream (same formats as sanitize_corpus),
// skipping malformed records; max_sentences = 0 reads everything.
std::vector<std::vector<std::string>> read_corpus_tokens(std::istream& in,
                                                         const CorpusOptions& options,
                                                         std::size_t max_sentences = 0);

// Reads a sanitized JSONL stream back; missing masks default to all-false.
std::vector<SentenceRecord> read_sentence_records(std::istream& in);

// Recompute stats from emitted records (consistency checks).
CorpusStats stats_from_records(std::span<const SentenceRecord> records,
                               const EmbeddingTable& table);

}  // namespace casper
