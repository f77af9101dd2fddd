#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "casper/embeddings.hpp"
#include "casper/nn.hpp"
#include "casper/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using casper::cosine_distance_rows;
using casper::embed;
using casper::EmbeddingTable;
using casper::EmptyTable;
using casper::kNoBan;
using casper::load_table;
using casper::LoadOptions;
using casper::MalformedLine;
using casper::nearest_neighbors;
using casper::nearest_neighbors_batch;
using casper::nearest_neighbors_reference;
using casper::Neighbor;
using casper::TokenId;
using casper::ZeroQuery;
using test_helpers::reference_cosine_distance;
using test_helpers::table_from_text;

TEST_CASE("tables load from plain text") {
  const auto table = table_from_text("alpha 1 0\nbeta 0 1\ngamma -1 0\n");
  REQUIRE(table.size() == 3);
  CHECK(table.dim() == 2);
  CHECK_FALSE(table.normalized());
  CHECK(table.duplicates_dropped() == 0);
  CHECK(table.token(0) == "alpha");
  CHECK(table.token(2) == "gamma");
  CHECK(table.row(1)[1] == 1.0);
  CHECK(table.norm(0) == doctest::Approx(1.0));

  REQUIRE(table.lookup("beta").has_value());
  CHECK(*table.lookup("beta") == 1);
  CHECK_FALSE(table.lookup("delta").has_value());

  REQUIRE(embed(table, "gamma").has_value());
  CHECK((*embed(table, "gamma"))[0] == -1.0);
  CHECK_FALSE(embed(table, "missing").has_value());
}

TEST_CASE("loading accepts CRLF and blank lines, keeps first duplicate") {
  const auto table = table_from_text("a 1 2\r\n\r\nb 3 4\na 9 9\n\n");
  REQUIRE(table.size() == 2);
  CHECK(table.duplicates_dropped() == 1);
  CHECK(table.row(0)[0] == 1.0);  // the later "a 9 9" row was dropped
  CHECK(table.row(1)[1] == 4.0);
}

TEST_CASE("malformed rows report their 1-based line number") {
  std::istringstream wrong_width("a 1 2\nb 3\n");
  try {
    load_table(wrong_width);
    FAIL("expected MalformedLine");
  } catch (const MalformedLine& e) {
    CHECK(e.line == 2);
  }

  std::istringstream bad_number("a 1 2\n\nb 3 x\n");
  try {
    load_table(bad_number);
    FAIL("expected MalformedLine");
  } catch (const MalformedLine& e) {
    CHECK(e.line == 3);
  }

  std::istringstream empty("\n\n");
  CHECK_THROWS_AS(load_table(empty), EmptyTable);
}

TEST_CASE("load options limit rows and normalize") {
  std::istringstream in("a 3 4\nb 5 12\nc 8 6\n");
  LoadOptions opts;
  opts.limit = 2;
  opts.normalize = true;
  const auto table = load_table(in, opts);
  REQUIRE(table.size() == 2);
  CHECK(table.normalized());
  CHECK(table.norm(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.row(0)[0] == doctest::Approx(0.6).epsilon(1e-12));  // 3/5
  CHECK(table.row(1)[1] == doctest::Approx(12.0 / 13.0).epsilon(1e-12));
}

TEST_CASE("row cosine matches a plain-loop oracle") {
  const auto table = table_from_text("a 1 2 2\nb 2 -1 0\nc 0 0 0\nd 3 6 6\n");
  for (TokenId i = 0; i < 4; ++i) {
    for (TokenId j = 0; j < 4; ++j) {
      const double expect = 1.0 - reference_cosine_distance(table.row(i), table.row(j));
      CHECK(table.row_cosine(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(table.row_cosine(0, 3) == doctest::Approx(1.0).epsilon(1e-12));  // parallel rows
  CHECK(table.row_cosine(0, 2) == 0.0);                                  // zero row
}

TEST_CASE("nearest neighbors rank by cosine distance with id tie-breaks") {
  // "close" and "closer" point the same way at different lengths: cosine ties,
  // the lower id must win.
  const auto table = table_from_text(
      "east 1 0\nnorth 0 1\nwest -1 0\nsouth 0 -1\nclose 2 0\ncloser 4 0\n");
  const std::vector<double> query{1.0, 0.1};

  const auto hits = nearest_neighbors(table, query, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].id == 0);  // east: same direction as close/closer but lowest id
  CHECK(hits[1].id == 4);
  CHECK(hits[2].id == 5);
  CHECK(hits[0].distance == doctest::Approx(hits[1].distance).epsilon(1e-12));
  for (std::size_t i = 0; i + 1 < hits.size(); ++i) {
    CHECK((hits[i].distance < hits[i + 1].distance ||
           (hits[i].distance == hits[i + 1].distance && hits[i].id < hits[i + 1].id)));
  }

  // Distances agree with the plain-loop oracle.
  for (const auto& h : hits) {
    CHECK(h.distance ==
          doctest::Approx(reference_cosine_distance(query, table.row(h.id))).epsilon(1e-12));
  }

  // Excluding the front-runners promotes the next candidate.
  const std::vector<TokenId> exclude{0, 4, 5};
  const auto rest = nearest_neighbors(table, query, 1, exclude);
  REQUIRE(rest.size() == 1);
  CHECK(rest[0].id == 1);  // north beats west and south for a query tilted up
}

TEST_CASE("nearest neighbors validate their arguments") {
  const auto table = table_from_text("a 1 0\nb 0 1\n");
  const std::vector<double> query{1.0, 0.0};
  CHECK_THROWS_AS(nearest_neighbors(table, query, 0), std::invalid_argument);
  const std::vector<double> wrong{1.0, 0.0, 0.0};
  CHECK_THROWS_AS(nearest_neighbors(table, wrong, 1), std::invalid_argument);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(nearest_neighbors(table, zero, 1), ZeroQuery);

  // k larger than the table clips.
  const auto all = nearest_neighbors(table, query, 10);
  CHECK(all.size() == 2);

  EmbeddingTable empty;
  std::vector<std::vector<Neighbor>> out;
  CHECK_THROWS_AS(nearest_neighbors_batch(empty, query.data(), 1, 1, nullptr, out), EmptyTable);
}

TEST_CASE("zero-norm rows rank at distance one") {
  const auto table = table_from_text("a 1 0\nzero 0 0\nb -1 0\n");
  const std::vector<double> query{1.0, 0.0};
  const auto hits = nearest_neighbors(table, query, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].id == 0);
  CHECK(hits[1].id == 1);
  CHECK(hits[1].distance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hits[2].id == 2);
  CHECK(hits[2].distance == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("the batched kernel agrees with the serial reference everywhere") {
  // Random tables spanning odd dimensions, octet boundaries, and block edges.
  auto rng = casper::RngState::seeded(314, 0);
  for (const std::size_t dim : {1u, 3u, 8u, 17u, 301u}) {
    for (const std::size_t rows : {1u, 7u, 256u, 257u, 1000u}) {
      std::vector<std::string> tokens(rows);
      std::vector<double> values(rows * dim);
      for (std::size_t i = 0; i < rows; ++i) tokens[i] = "t" + std::to_string(i);
      for (auto& v : values) v = rng.next_normal();

      const EmbeddingTable table(std::move(tokens), std::move(values), dim);
      const std::size_t nq = 13;
      std::vector<double> queries(nq * dim);
      for (auto& v : queries) v = rng.next_normal();
      std::vector<TokenId> bans(nq, kNoBan);
      for (std::size_t i = 0; i < nq; i += 2) bans[i] = TokenId(rng.next_u64() % rows);

      for (const std::size_t k : {std::size_t(1), std::size_t(5), rows}) {
        std::vector<std::vector<Neighbor>> got;
        nearest_neighbors_batch(table, queries.data(), nq, k, bans.data(), got);
        REQUIRE(got.size() == nq);
        for (std::size_t q = 0; q < nq; ++q) {
          std::vector<TokenId> exclude;
          if (bans[q] != kNoBan) exclude.push_back(bans[q]);
          const auto want = nearest_neighbors_reference(
              table, std::span<const double>(queries.data() + q * dim, dim), k, exclude);
          REQUIRE(got[q].size() == want.size());
          for (std::size_t r = 0; r < want.size(); ++r) {
            CHECK(got[q][r].id == want[r].id);
            CHECK(got[q][r].distance == doctest::Approx(want[r].distance).epsilon(1e-9));
          }
        }
      }
    }
  }
}

TEST_CASE("batch results do not depend on how queries are batched") {
  auto rng = casper::RngState::seeded(2718, 5);
  const std::size_t dim = 19, rows = 500, nq = 37;
  std::vector<std::string> tokens(rows);
  std::vector<double> values(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) tokens[i] = "w" + std::to_string(i);
  for (auto& v : values) v = rng.next_normal();
  const EmbeddingTable table(std::move(tokens), std::move(values), dim);

  std::vector<double> queries(nq * dim);
  for (auto& v : queries) v = rng.next_normal();

  std::vector<std::vector<Neighbor>> batched;
  nearest_neighbors_batch(table, queries.data(), nq, 3, nullptr, batched);
  for (std::size_t q = 0; q < nq; ++q) {
    std::vector<std::vector<Neighbor>> single;
    nearest_neighbors_batch(table, queries.data() + q * dim, 1, 3, nullptr, single);
    REQUIRE(single[0].size() == batched[q].size());
    for (std::size_t r = 0; r < single[0].size(); ++r) {
      CHECK(single[0][r].id == batched[q][r].id);
      // Scores are a fixed function of (row, query); batching cannot move them.
      CHECK(single[0][r].distance == batched[q][r].distance);
    }
  }
}

TEST_CASE("full distance rows match the oracle") {
  auto rng = casper::RngState::seeded(99, 2);
  const std::size_t dim = 7, rows = 43, nq = 9;
  std::vector<std::string> tokens(rows);
  std::vector<double> values(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) tokens[i] = "v" + std::to_string(i);
  for (auto& v : values) v = rng.next_normal();
  const EmbeddingTable table(std::move(tokens), std::move(values), dim);

  std::vector<double> queries(nq * dim);
  for (auto& v : queries) v = rng.next_normal();

  std::vector<double> out(nq * rows);
  cosine_distance_rows(table, queries.data(), nq, out.data());
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double want = reference_cosine_distance(
          std::span<const double>(queries.data() + q * dim, dim), table.row(TokenId(r)));
      CHECK(out[q * rows + r] == doctest::Approx(want).epsilon(1e-9));
    }
  }
}
