#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_set>

namespace casper {

std::string ascii_lower(std::string_view s);

// Stopword membership; lookups fold ASCII case unless case_sensitive.
struct StopwordSet {
  bool case_sensitive = false;
  std::unordered_set<std::string> words;

  bool contains(std::string_view token) const;

  // One word per line; blank lines skipped, CRLF accepted. Entries are folded
  // when case-insensitive.
  static StopwordSet load(std::istream& in, bool case_sensitive = false);

  // Built-in English list (179 entries).
  static const StopwordSet& builtin_english();

  static StopwordSet none() { return StopwordSet{true, {}}; }
};

}  // namespace casper
