#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "casper/corpus.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace casper;
using test_helpers::table_from_text;

namespace {

std::string sanitize_to_string(const std::string& corpus, const EmbeddingTable& table,
                               const MechanismConfig& cfg, const CorpusOptions& options,
                               CorpusStats* stats_out = nullptr,
                               std::string* log_out = nullptr) {
  std::istringstream in(corpus);
  std::ostringstream out, log;
  const auto stats = sanitize_corpus(in, out, log, table, cfg, StopwordSet::none(), options);
  if (stats_out) *stats_out = stats;
  if (log_out) *log_out = log.str();
  return out.str();
}

MechanismConfig identity_config() {
  auto cfg = MechanismConfig::defaults(MechanismKind::casper);
  cfg.eta = 1e9;
  cfg.sigma = 1e-6;
  cfg.window = 3;
  return cfg;
}

}  // namespace

TEST_CASE("tokenization peels edge punctuation and keeps internal marks") {
  CHECK(tokenize("The movie was great.") ==
        std::vector<std::string>{"The", "movie", "was", "great", "."});
  CHECK(tokenize("The Movie", true) == std::vector<std::string>{"the", "movie"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("(hello).") == std::vector<std::string>{"(", "hello", ")", "."});
  CHECK(tokenize("wait...") == std::vector<std::string>{"wait", ".", ".", "."});
  CHECK(tokenize("a b") == std::vector<std::string>{"a", "b"});  // NBSP separates
  CHECK(tokenize("naïve") == std::vector<std::string>{"naïve"});
  CHECK(tokenize("  \t \n ") == std::vector<std::string>{});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("sentence records survive a JSON round-trip") {
  SentenceRecord record;
  record.id = "r-1";
  record.original_tokens = {"he", "said", "\"hi\\there\""};
  record.sanitized_tokens = {"she", "said", "\"hi\\there\""};
  record.stopword_mask = {false, true, false};
  record.oov_mask = {false, false, true};

  std::istringstream in(to_json_line(record) + "\n");
  const auto records = read_sentence_records(in);
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == record.id);
  CHECK(records[0].original_tokens == record.original_tokens);
  CHECK(records[0].sanitized_tokens == record.sanitized_tokens);
  CHECK(records[0].stopword_mask == record.stopword_mask);
  CHECK(records[0].oov_mask == record.oov_mask);
}

TEST_CASE("missing masks default to all-false on read-back") {
  std::istringstream in(R"({"id":"x","tokens":["a","b"],"sanitized":["a","c"]})" "\n");
  const auto records = read_sentence_records(in);
  REQUIRE(records.size() == 1);
  CHECK(records[0].sanitized_tokens == std::vector<std::string>{"a", "c"});
  CHECK(records[0].stopword_mask == std::vector<bool>{false, false});
  CHECK(records[0].oov_mask == std::vector<bool>{false, false});

  // A record with no sanitized field reads back as unchanged text.
  std::istringstream bare(R"({"id":"y","tokens":["a","b"]})" "\n");
  const auto plain = read_sentence_records(bare);
  REQUIRE(plain.size() == 1);
  CHECK(plain[0].sanitized_tokens == plain[0].original_tokens);
}

TEST_CASE("read-back rejects records with mismatched lengths") {
  std::istringstream in(R"({"id":"x","tokens":["a","b"],"sanitized":["a"]})" "\n");
  CHECK_THROWS_AS(read_sentence_records(in), CorpusError);
}

TEST_CASE("the sanitizer accepts text, token, and TSV inputs") {
  const auto table = table_from_text("alpha 1 0\nbeta 0 1\ngamma -1 0\ndelta 0 -1\n");
  const auto cfg = identity_config();

  const std::string jsonl_text =
      R"({"id":"a","text":"alpha beta"})" "\n" R"({"id":"b","text":"gamma delta"})" "\n";
  const std::string jsonl_tokens =
      R"({"id":"a","tokens":["alpha","beta"]})" "\n" R"({"id":"b","tokens":["gamma","delta"]})" "\n";
  const std::string tsv = "a\talpha beta\nb\tgamma delta\n";

  CorpusOptions opts;
  const auto from_text = sanitize_to_string(jsonl_text, table, cfg, opts);
  const auto from_tokens = sanitize_to_string(jsonl_tokens, table, cfg, opts);
  opts.format = CorpusFormat::tsv;
  const auto from_tsv = sanitize_to_string(tsv, table, cfg, opts);

  CHECK(from_text == from_tokens);
  CHECK(from_text == from_tsv);

  std::istringstream back(from_text);
  const auto records = read_sentence_records(back);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "a");
  CHECK(records[0].original_tokens == std::vector<std::string>{"alpha", "beta"});
  CHECK(records[1].id == "b");
}

TEST_CASE("identity parameters leave every in-vocabulary token unchanged") {
  const auto table = table_from_text("alpha 1 0\nbeta 0 1\ngamma -1 0\ndelta 0 -1\n");
  std::string corpus;
  for (int i = 0; i < 20; ++i) {
    corpus += R"({"id":"s)" + std::to_string(i) + R"(","text":"alpha beta gamma delta"})" "\n";
  }
  CorpusStats stats{};
  const auto out = sanitize_to_string(corpus, table, identity_config(), {}, &stats);
  CHECK(stats.sentences == 20);
  CHECK(stats.tokens == 80);
  CHECK(stats.replaced_tokens == 0);
  CHECK(stats.mean_cosine_similarity() == 1.0);

  std::istringstream back(out);
  for (const auto& record : read_sentence_records(back)) {
    CHECK(record.sanitized_tokens == record.original_tokens);
  }
}

TEST_CASE("emitted statistics agree with a recount of the emitted records") {
  const auto table = table_from_text("alpha 1 0\nbeta 0.8 0.6\ngamma -1 0\ndelta 0 -1\n");
  std::string corpus;
  for (int i = 0; i < 30; ++i) {
    corpus += R"({"id":"s)" + std::to_string(i) + R"(","text":"alpha zzz beta the gamma"})" "\n";
  }
  auto cfg = MechanismConfig::defaults(MechanismKind::dchi_noise);
  cfg.eta = 2.0;
  cfg.seed = 99;

  std::istringstream in(corpus);
  std::ostringstream out, log;
  StopwordSet stopwords = StopwordSet::none();
  stopwords.words.insert("the");
  const auto stats = sanitize_corpus(in, out, log, table, cfg, stopwords, {});

  std::istringstream back(out.str());
  const auto records = read_sentence_records(back);
  const auto recount = stats_from_records(records, table);

  CHECK(stats.sentences == 30);
  CHECK(stats.stopword_tokens == 30);
  // "zzz" is plain OOV; "the" is a stopword that is also absent from the
  // table, so it lands in both masks.
  CHECK(stats.oov_tokens == 60);
  CHECK(recount.sentences == stats.sentences);
  CHECK(recount.tokens == stats.tokens);
  CHECK(recount.stopword_tokens == stats.stopword_tokens);
  CHECK(recount.oov_tokens == stats.oov_tokens);
  CHECK(recount.replaced_tokens == stats.replaced_tokens);
  CHECK(recount.cosine_sum == doctest::Approx(stats.cosine_sum).epsilon(1e-12));
  CHECK(stats.replaced_tokens > 0);  // eta = 2 on this geometry replaces plenty
}

TEST_CASE("chunk size never changes the output") {
  const auto table = table_from_text("alpha 1 0\nbeta 0.8 0.6\ngamma -1 0\ndelta 0 -1\n");
  std::string corpus;
  for (int i = 0; i < 25; ++i) {
    corpus += R"({"id":"s)" + std::to_string(i) + R"(","text":"alpha beta gamma delta beta"})" "\n";
  }
  auto cfg = MechanismConfig::defaults(MechanismKind::casper);
  cfg.eta = 3.0;
  cfg.window = 3;
  cfg.seed = 41;

  CorpusOptions one, many;
  one.chunk_sentences = 1;
  many.chunk_sentences = 512;
  CHECK(sanitize_to_string(corpus, table, cfg, one) ==
        sanitize_to_string(corpus, table, cfg, many));
}

TEST_CASE("malformed records are skipped within budget and fatal beyond it") {
  const auto table = table_from_text("alpha 1 0\nbeta 0 1\n");
  const std::string corpus = R"({"id":"a","text":"alpha beta"})" "\n"
                             "this is not json\n"
                             R"({"id":"b","text":"beta alpha"})" "\n"
                             R"({"id":"c","text":"alpha"})" "\n";

  CorpusOptions tolerant;
  tolerant.error_budget = 0.5;
  CorpusStats stats{};
  std::string log;
  const auto out = sanitize_to_string(corpus, table, identity_config(), tolerant, &stats, &log);
  CHECK(stats.errors == 1);
  CHECK(stats.sentences == 3);
  CHECK_FALSE(log.empty());
  std::istringstream back(out);
  CHECK(read_sentence_records(back).size() == 3);

  CorpusOptions strict;
  strict.error_budget = 0.0;
  std::istringstream in(corpus);
  std::ostringstream sink, log2;
  CHECK_THROWS_AS(
      sanitize_corpus(in, sink, log2, table, identity_config(), StopwordSet::none(), strict),
      CorpusError);
}

TEST_CASE("token readers honour sentence limits and skip malformed lines") {
  CorpusOptions opts;
  const std::string corpus = R"({"id":"a","text":"one two"})" "\n"
                             "broken\n"
                             R"({"id":"b","tokens":["three"]})" "\n"
                             R"({"id":"c","text":"four"})" "\n";
  {
    std::istringstream in(corpus);
    const auto all = read_corpus_tokens(in, opts);
    REQUIRE(all.size() == 3);
    CHECK(all[0] == std::vector<std::string>{"one", "two"});
    CHECK(all[1] == std::vector<std::string>{"three"});
    CHECK(all[2] == std::vector<std::string>{"four"});
  }
  {
    std::istringstream in(corpus);
    const auto capped = read_corpus_tokens(in, opts, 2);
    REQUIRE(capped.size() == 2);
    CHECK(capped[1] == std::vector<std::string>{"three"});
  }
  {
    CorpusOptions lower;
    lower.lowercase = true;
    std::istringstream in(R"({"id":"a","text":"One TWO"})" "\n");
    const auto folded = read_corpus_tokens(in, lower);
    REQUIRE(folded.size() == 1);
    CHECK(folded[0] == std::vector<std::string>{"one", "two"});
  }
}
