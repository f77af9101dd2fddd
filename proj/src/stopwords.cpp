#include "casper/stopwords.hpp"

#include <istream>

namespace casper {

namespace {

// Classic English stopword list, 179 entries.
constexpr const char* kEnglish[] = {
    "i",         "me",        "my",       "myself",  "we",         "our",       "ours",
    "ourselves", "you",       "you're",   "you've",  "you'll",     "you'd",     "your",
    "yours",     "yourself",  "yourselves", "he",    "him",        "his",       "himself",
    "she",       "she's",     "her",      "hers",    "herself",    "it",        "it's",
    "its",       "itself",    "they",     "them",    "their",      "theirs",    "themselves",
    "what",      "which",     "who",      "whom",    "this",       "that",      "that'll",
    "these",     "those",     "am",       "is",      "are",        "was",       "were",
    "be",        "been",      "being",    "have",    "has",        "had",       "having",
    "do",        "does",      "did",      "doing",   "a",          "an",        "the",
    "and",       "but",       "if",       "or",      "because",    "as",        "until",
    "while",     "of",        "at",       "by",      "for",        "with",      "about",
    "against",   "between",   "into",     "through", "during",     "before",    "after",
    "above",     "below",     "to",       "from",    "up",         "down",      "in",
    "out",       "on",        "off",      "over",    "under",      "again",     "further",
    "then",      "once",      "here",     "there",   "when",       "where",     "why",
    "how",       "all",       "any",      "both",    "each",       "few",       "more",
    "most",      "other",     "some",     "such",    "no",         "nor",       "not",
    "only",      "own",       "same",     "so",      "than",       "too",       "very",
    "s",         "t",         "can",      "will",    "just",       "don",       "don't",
    "should",    "should've", "now",      "d",       "ll",         "m",         "o",
    "re",        "ve",        "y",        "ain",     "aren",       "aren't",    "couldn",
    "couldn't",  "didn",      "didn't",   "doesn",   "doesn't",    "hadn",      "hadn't",
    "hasn",      "hasn't",    "haven",    "haven't", "isn",        "isn't",     "ma",
    "mightn",    "mightn't",  "mustn",    "mustn't", "needn",      "needn't",   "shan",
    "shan't",    "shouldn",   "shouldn't", "wasn",   "wasn't",     "weren",     "weren't",
    "won",       "won't",     "wouldn",   "wouldn't"};

}  // namespace

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
  }
  return out;
}

bool StopwordSet::contains(std::string_view token) const {
  if (words.empty()) return false;
  if (case_sensitive) return words.count(std::string(token)) > 0;
  return words.count(ascii_lower(token)) > 0;
}

StopwordSet StopwordSet::load(std::istream& in, bool case_sensitive) {
  StopwordSet set;
  set.case_sensitive = case_sensitive;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    set.words.insert(case_sensitive ? line : ascii_lower(line));
  }
  return set;
}

const StopwordSet& StopwordSet::builtin_english() {
  static const StopwordSet set = [] {
    StopwordSet s;
    s.case_sensitive = false;
    for (const char* word : kEnglish) s.words.insert(word);
    return s;
  }();
  return set;
}

}  // namespace casper
