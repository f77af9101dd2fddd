#include "casper/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <istream>

namespace casper {

MalformedLine::MalformedLine(std::size_t line_no)
    : EmbeddingError("malformed embedding line " + std::to_string(line_no)), line(line_no) {}

EmptyTable::EmptyTable() : EmbeddingError("embedding table is empty") {}

ZeroQuery::ZeroQuery() : EmbeddingError("query vector has (near-)zero norm") {}

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, std::vector<double> values,
                               std::size_t dim, bool normalize) {
  if (dim == 0) throw EmbeddingError("embedding dimension must be >= 1");
  if (values.size() != tokens.size() * dim) throw EmbeddingError("token/value size mismatch");

  dim_ = dim;
  tokens_.reserve(tokens.size());
  values_.reserve(values.size());
  index_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    // Keep the first occurrence of a repeated token, count the rest.
    const auto inserted = index_.emplace(tokens[i], TokenId(tokens_.size()));
    if (!inserted.second) {
      ++duplicates_;
      continue;
    }
    tokens_.push_back(std::move(tokens[i]));
    values_.insert(values_.end(), values.begin() + i * dim, values.begin() + (i + 1) * dim);
  }
  if (tokens_.empty()) throw EmptyTable();

  norms_.resize(tokens_.size());
  inv_norms_.resize(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    double* row = values_.data() + i * dim_;
    double sq = 0.0;
    for (std::size_t e = 0; e < dim_; ++e) sq += row[e] * row[e];
    double norm = std::sqrt(sq);
    if (normalize && norm >= 1e-12) {
      const double inv = 1.0 / norm;
      for (std::size_t e = 0; e < dim_; ++e) row[e] *= inv;
      norm = 1.0;
    }
    norms_[i] = norm;
    inv_norms_[i] = norm >= 1e-12 ? 1.0 / norm : 0.0;
  }
  normalized_ = normalize;
}

std::optional<TokenId> EmbeddingTable::lookup(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double EmbeddingTable::row_cosine(TokenId a, TokenId b) const {
  const auto ra = row(a);
  const auto rb = row(b);
  double dot = 0.0;
  for (std::size_t e = 0; e < ra.size(); ++e) dot += ra[e] * rb[e];
  return dot * inv_norms_[a] * inv_norms_[b];
}

EmbeddingTable load_table(std::istream& in, const LoadOptions& opts) {
  std::vector<std::string> tokens;
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::string line;

  while ((opts.limit == 0 || tokens.size() < opts.limit) && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos) continue;  // blank line

    const std::size_t tok_end = line.find_first_of(" \t", pos);
    if (tok_end == std::string::npos) throw MalformedLine(line_no);  // token with no values
    std::string token = line.substr(pos, tok_end - pos);

    std::vector<double> row;
    if (dim) row.reserve(dim);
    pos = tok_end;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t", pos);
      if (pos == std::string::npos) break;
      std::size_t end = line.find_first_of(" \t", pos);
      if (end == std::string::npos) end = line.size();
      double value = 0.0;
      const auto result = std::from_chars(line.data() + pos, line.data() + end, value);
      if (result.ec != std::errc() || result.ptr != line.data() + end) {
        throw MalformedLine(line_no);
      }
      row.push_back(value);
      pos = end;
    }
    if (row.empty()) throw MalformedLine(line_no);
    if (dim == 0) {
      dim = row.size();  // first data line fixes the dimension
    } else if (row.size() != dim) {
      throw MalformedLine(line_no);
    }
    tokens.push_back(std::move(token));
    values.insert(values.end(), row.begin(), row.end());
  }

  if (tokens.empty()) throw EmptyTable();
  return EmbeddingTable(std::move(tokens), std::move(values), dim, opts.normalize);
}

std::optional<std::span<const double>> embed(const EmbeddingTable& table, std::string_view token) {
  const auto id = table.lookup(token);
  if (!id) return std::nullopt;
  return table.row(*id);
}

}  // namespace casper
