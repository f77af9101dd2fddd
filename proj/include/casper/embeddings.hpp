#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace casper {

using TokenId = std::uint32_t;

struct EmbeddingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedLine : EmbeddingError {
  std::size_t line;
  explicit MalformedLine(std::size_t line_no);
};

struct EmptyTable : EmbeddingError {
  EmptyTable();
};

struct ZeroQuery : EmbeddingError {
  ZeroQuery();
};

struct LoadOptions {
  bool normalize = false;                                    // scale rows to unit norm
  std::size_t limit = std::numeric_limits<std::size_t>::max();  // keep at most this many rows
};

// Dense token -> vector table, row-major doubles. Row norms are precomputed
// for the cosine kernels. Zero-norm rows are kept and rank at similarity 0.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Takes ownership of `values` (size tokens.size() * dim). Duplicate tokens
  // keep the first occurrence; the drop count is recorded.
  EmbeddingTable(std::vector<std::string> tokens, std::vector<double> values,
                 std::size_t dim, bool normalize = false);

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return dim_; }
  bool normalized() const { return normalized_; }
  std::size_t duplicates_dropped() const { return duplicates_; }

  const std::string& token(TokenId id) const { return tokens_[id]; }
  std::span<const double> row(TokenId id) const {
    return {values_.data() + std::size_t(id) * dim_, dim_};
  }
  const double* data() const { return values_.data(); }
  double norm(TokenId id) const { return norms_[id]; }
  // 1/norm, or 0 for zero rows; the scoring kernels multiply by this.
  const double* inv_norms() const { return inv_norms_.data(); }

  std::optional<TokenId> lookup(std::string_view token) const;

  // cos(row a, row b); 0 when either row has zero norm.
  double row_cosine(TokenId a, TokenId b) const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::vector<double> norms_;
  std::vector<double> inv_norms_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> index_;
  std::size_t dim_ = 0;
  std::size_t duplicates_ = 0;
  bool normalized_ = false;
};

// Text format: one row per line, token then dim floats, space separated, no
// header. The first data line fixes the dimension; later width or number
// parse failures throw MalformedLine with the 1-based line number. Blank
// lines are skipped, CRLF accepted. Throws EmptyTable when nothing loads.
EmbeddingTable load_table(std::istream& in, const LoadOptions& opts = {});

// Row for a token, or nullopt when out of vocabulary.
std::optional<std::span<const double>> embed(const EmbeddingTable& table, std::string_view token);

}  // namespace casper
