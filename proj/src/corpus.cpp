#include "casper/corpus.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "json.hpp"

namespace casper {

namespace {

bool is_ascii_punct(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return (u >= '!' && u <= '/') || (u >= ':' && u <= '@') || (u >= '[' && u <= '`') ||
         (u >= '{' && u <= '~');
}

// Decodes one UTF-8 codepoint at `i`; advances `i` past it. Malformed bytes
// decode as themselves so tokenization never throws.
char32_t next_codepoint(std::string_view text, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if ((b0 & 0x80u) == 0x00u) {
    len = 1;
  } else if ((b0 & 0xe0u) == 0xc0u) {
    len = 2;
    cp = b0 & 0x1fu;
  } else if ((b0 & 0xf0u) == 0xe0u) {
    len = 3;
    cp = b0 & 0x0fu;
  } else if ((b0 & 0xf8u) == 0xf0u) {
    len = 4;
    cp = b0 & 0x07u;
  } else {
    ++i;
    return b0;
  }
  if (i + len > text.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xc0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3fu);
  }
  i += len;
  return cp;
}

bool is_space_codepoint(char32_t cp) {
  switch (cp) {
    case U'\t':
    case U'\n':
    case U'\v':
    case U'\f':
    case U'\r':
    case U' ':
    case 0x0085:  // next line
    case 0x00a0:  // no-break space
    case 0x1680:  // ogham space mark
    case 0x2028:  // line separator
    case 0x2029:  // paragraph separator
    case 0x202f:  // narrow no-break space
    case 0x205f:  // medium mathematical space
    case 0x3000:  // ideographic space
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;  // en quad .. hair space
  }
}

void emit_chunk(std::string_view chunk, bool lowercase, std::vector<std::string>& out) {
  // Peel leading ASCII punctuation into single-character tokens.
  while (chunk.size() > 1 && is_ascii_punct(chunk.front())) {
    out.emplace_back(1, chunk.front());
    chunk.remove_prefix(1);
  }
  // Peel trailing punctuation, then restore text order.
  std::string trailing;
  while (chunk.size() > 1 && is_ascii_punct(chunk.back())) {
    trailing.push_back(chunk.back());
    chunk.remove_suffix(1);
  }
  out.push_back(lowercase ? ascii_lower(chunk) : std::string(chunk));
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out.emplace_back(1, *it);
}

using nlohmann::json;

std::string json_id(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

struct ParsedRecord {
  std::string id;
  std::vector<std::string> tokens;
};

// Parses one input line; returns false with `reason` set on malformed input.
bool parse_record(const std::string& line, const CorpusOptions& options, ParsedRecord& rec,
                  std::string& reason) {
  if (options.format == CorpusFormat::tsv) {
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      reason = "expected id<TAB>text";
      return false;
    }
    rec.id = line.substr(0, tab);
    rec.tokens = tokenize(std::string_view(line).substr(tab + 1), options.lowercase);
    return true;
  }
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    reason = "not a JSON object";
    return false;
  }
  if (!j.contains("id")) {
    reason = "missing \"id\"";
    return false;
  }
  rec.id = json_id(j.at("id"));
  if (j.contains("tokens")) {
    const json& toks = j.at("tokens");
    if (!toks.is_array()) {
      reason = "\"tokens\" is not an array";
      return false;
    }
    rec.tokens.clear();
    for (const json& t : toks) {
      if (!t.is_string()) {
        reason = "\"tokens\" holds a non-string";
        return false;
      }
      std::string tok = t.get<std::string>();
      if (options.lowercase) tok = ascii_lower(tok);
      rec.tokens.push_back(std::move(tok));
    }
    return true;
  }
  if (j.contains("text")) {
    const json& text = j.at("text");
    if (!text.is_string()) {
      reason = "\"text\" is not a string";
      return false;
    }
    rec.tokens = tokenize(text.get<std::string>(), options.lowercase);
    return true;
  }
  reason = "missing \"text\" or \"tokens\"";
  return false;
}

json mask_to_json(const std::vector<bool>& mask) {
  json arr = json::array();
  for (const bool b : mask) arr.push_back(b);
  return arr;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::size_t start = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = next_codepoint(text, i);
    if (is_space_codepoint(cp)) {
      if (in_token) {
        emit_chunk(text.substr(start, at - start), lowercase, out);
        in_token = false;
      }
    } else if (!in_token) {
      start = at;
      in_token = true;
    }
  }
  if (in_token) emit_chunk(text.substr(start), lowercase, out);
  return out;
}

CorpusStats sanitize_corpus(std::istream& in, std::ostream& out, std::ostream& log,
                            const EmbeddingTable& table, const MechanismConfig& cfg,
                            const StopwordSet& stopwords, const CorpusOptions& options) {
  cfg.validate();
  if (options.chunk_sentences == 0) throw std::invalid_argument("chunk size must be >= 1");
  CorpusStats stats;
  std::uint64_t records_seen = 0;  // valid + malformed, for the error budget
  std::uint64_t line_no = 0;

  std::vector<ParsedRecord> chunk;
  std::uint64_t chunk_first_index = 0;  // running index over valid records

  const auto check_budget = [&](bool final_check) {
    const double allowed = options.error_budget * double(records_seen);
    // Mid-stream, tolerate a small absolute excess so one early bad record
    // cannot abort a long run that would finish inside budget.
    if (double(stats.errors) > allowed + (final_check ? 0.0 : 16.0)) {
      throw CorpusError("malformed records exceed the error budget (" +
                        std::to_string(stats.errors) + " of " + std::to_string(records_seen) +
                        ")");
    }
  };

  const auto flush_chunk = [&] {
    if (chunk.empty()) return;
    std::vector<std::vector<std::optional<TokenId>>> ids(chunk.size());
    std::vector<std::unique_ptr<bool[]>> stop(chunk.size());
    std::vector<IdSentence> views(chunk.size());
    for (std::size_t s = 0; s < chunk.size(); ++s) {
      const auto& tokens = chunk[s].tokens;
      ids[s].resize(tokens.size());
      stop[s] = std::make_unique<bool[]>(tokens.size());
      for (std::size_t p = 0; p < tokens.size(); ++p) {
        ids[s][p] = table.lookup(tokens[p]);
        stop[s][p] = stopwords.contains(tokens[p]);
      }
      views[s] = IdSentence{ids[s], {stop[s].get(), tokens.size()}, chunk_first_index + s};
    }
    std::vector<std::vector<std::optional<TokenId>>> replaced;
    sanitize_ids(table, views, cfg, replaced);

    for (std::size_t s = 0; s < chunk.size(); ++s) {
      SentenceRecord rec;
      rec.id = std::move(chunk[s].id);
      rec.original_tokens = std::move(chunk[s].tokens);
      const auto& tokens = rec.original_tokens;
      rec.sanitized_tokens.resize(tokens.size());
      rec.stopword_mask.resize(tokens.size());
      rec.oov_mask.resize(tokens.size());
      ++stats.sentences;
      stats.tokens += tokens.size();
      for (std::size_t p = 0; p < tokens.size(); ++p) {
        rec.stopword_mask[p] = stop[s][p];
        rec.oov_mask[p] = !ids[s][p].has_value();
        stats.stopword_tokens += rec.stopword_mask[p];
        stats.oov_tokens += rec.oov_mask[p];
        if (replaced[s][p] && *replaced[s][p] != *ids[s][p]) {
          rec.sanitized_tokens[p] = table.token(*replaced[s][p]);
          ++stats.replaced_tokens;
          stats.cosine_sum += table.row_cosine(*ids[s][p], *replaced[s][p]);
        } else {
          rec.sanitized_tokens[p] = rec.original_tokens[p];
        }
      }
      out << to_json_line(rec) << '\n';
    }
    chunk_first_index += chunk.size();
    chunk.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++records_seen;
    ParsedRecord rec;
    std::string reason;
    if (!parse_record(line, options, rec, reason)) {
      ++stats.errors;
      log << "line " << line_no << ": " << reason << '\n';
      check_budget(false);
      continue;
    }
    chunk.push_back(std::move(rec));
    if (chunk.size() >= options.chunk_sentences) flush_chunk();
  }
  flush_chunk();
  check_budget(true);
  return stats;
}

std::string to_json_line(const SentenceRecord& record) {
  json j;
  j["id"] = record.id;
  j["tokens"] = record.original_tokens;
  j["sanitized"] = record.sanitized_tokens;
  j["stopword_mask"] = mask_to_json(record.stopword_mask);
  j["oov_mask"] = mask_to_json(record.oov_mask);
  return j.dump();
}

std::vector<std::vector<std::string>> read_corpus_tokens(std::istream& in,
                                                         const CorpusOptions& options,
                                                         std::size_t max_sentences) {
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while ((max_sentences == 0 || sentences.size() < max_sentences) && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ParsedRecord rec;
    std::string reason;
    if (parse_record(line, options, rec, reason)) sentences.push_back(std::move(rec.tokens));
  }
  return sentences;
}

std::vector<SentenceRecord> read_sentence_records(std::istream& in) {
  std::vector<SentenceRecord> records;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("tokens")) {
      throw CorpusError("line " + std::to_string(line_no) + ": not a sanitized record");
    }
    SentenceRecord rec;
    if (j.contains("id")) rec.id = json_id(j.at("id"));
    rec.original_tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("sanitized")) {
      rec.sanitized_tokens = j.at("sanitized").get<std::vector<std::string>>();
    } else {
      rec.sanitized_tokens = rec.original_tokens;
    }
    const auto read_mask = [&](const char* key, std::vector<bool>& mask) {
      mask.assign(rec.original_tokens.size(), false);
      if (!j.contains(key)) return;
      const json& arr = j.at(key);
      for (std::size_t p = 0; p < mask.size() && p < arr.size(); ++p) {
        const json& v = arr[p];
        mask[p] = v.is_boolean() ? v.get<bool>() : (v.is_number() && v.get<double>() != 0.0);
      }
    };
    read_mask("stopword_mask", rec.stopword_mask);
    read_mask("oov_mask", rec.oov_mask);
    if (rec.sanitized_tokens.size() != rec.original_tokens.size()) {
      throw CorpusError("line " + std::to_string(line_no) + ": token/sanitized length mismatch");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

CorpusStats stats_from_records(std::span<const SentenceRecord> records,
                               const EmbeddingTable& table) {
  CorpusStats stats;
  for (const auto& rec : records) {
    ++stats.sentences;
    stats.tokens += rec.original_tokens.size();
    for (std::size_t p = 0; p < rec.original_tokens.size(); ++p) {
      if (p < rec.stopword_mask.size() && rec.stopword_mask[p]) ++stats.stopword_tokens;
      if (p < rec.oov_mask.size() && rec.oov_mask[p]) ++stats.oov_tokens;
      if (rec.sanitized_tokens[p] != rec.original_tokens[p]) {
        ++stats.replaced_tokens;
        const auto a = table.lookup(rec.original_tokens[p]);
        const auto b = table.lookup(rec.sanitized_tokens[p]);
        if (a && b) stats.cosine_sum += table.row_cosine(*a, *b);
      }
    }
  }
  return stats;
}

}  // namespace casper
