#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "casper/cli.hpp"
#include "casper/corpus.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace casper;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args, const std::string& stdin_text = {}) {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  CliResult result;
  result.code = run_cli(std::move(args), in, out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

const std::string kDir = "/tmp/casper_cli_test.";

std::string write_file(const std::string& name, const std::string& content) {
  const std::string path = kDir + name;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  REQUIRE(file.good());
  file << content;
  REQUIRE(file.good());
  return path;
}

std::string compass_embeddings() {
  return write_file("emb.txt", "alpha 1 0\nbeta 0 1\ngamma -1 0\ndelta 0 -1\n");
}

std::string small_corpus() {
  std::string text;
  for (int i = 0; i < 5; ++i) {
    text += R"({"id":"s)" + std::to_string(i) + R"(","text":"alpha beta gamma delta"})" "\n";
  }
  return write_file("corpus.jsonl", text);
}

std::vector<std::string> identity_sanitize_args(const std::string& emb, const std::string& corpus,
                                                const std::string& out_path) {
  return {"sanitize",    "--embeddings", emb,       "--input",  corpus,   "--output",
          out_path,      "--stopwords",  "none",    "--mechanism", "casper", "--eta",
          "1e9",         "--sigma",      "1e-6",    "--window", "3"};
}

}  // namespace

TEST_CASE("the cli requires a subcommand and rejects unknown ones") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("help requests succeed and list the subcommands") {
  const auto top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* name : {"sanitize", "attack", "audit", "sweep", "table"}) {
    CHECK(top.out.find(name) != std::string::npos);
  }
  const auto san = run({"sanitize", "--help"});
  CHECK(san.code == 0);
  CHECK(san.out.find("--mechanism") != std::string::npos);
  CHECK(san.out.find("--eta") != std::string::npos);
  CHECK(san.out.find("--seed") != std::string::npos);
}

TEST_CASE("usage errors exit 1 and data errors exit 2") {
  const auto emb = compass_embeddings();
  const auto corpus = small_corpus();

  CHECK(run({"sanitize", "--embeddings", emb, "--mechanism", "nope"}).code == 1);
  CHECK(run({"sanitize", "--embeddings", emb, "--seed", "12x"}).code == 1);
  CHECK(run({"sanitize", "--embeddings", emb, "--eta", "-1"}).code == 1);
  CHECK(run({"audit", "--distance", "euclid"}).code == 1);
  CHECK(run({"attack", "--embeddings", emb, "--k", "0"}).code == 1);

  const auto missing_emb = run({"sanitize", "--embeddings", kDir + "no-such-file"});
  CHECK(missing_emb.code == 2);
  CHECK(missing_emb.err.find("error:") != std::string::npos);
  CHECK(run({"sanitize", "--embeddings", emb, "--input", kDir + "no-such-corpus"}).code == 2);
}

TEST_CASE("sanitize and attack round-trip through files") {
  const auto emb = compass_embeddings();
  const auto corpus = small_corpus();
  const auto sanitized = kDir + "sanitized.jsonl";

  const auto san = run(identity_sanitize_args(emb, corpus, sanitized));
  CHECK(san.code == 0);
  CHECK(san.err.find("sentences=5") != std::string::npos);
  CHECK(san.err.find("replaced=0") != std::string::npos);

  const auto atk = run({"attack", "--embeddings", emb, "--input", sanitized, "--k", "3"});
  CHECK(atk.code == 0);
  const json report = json::parse(atk.out);
  CHECK(report["attempts"] == 20);
  CHECK(report["pr_at_k"] == 1.0);
  CHECK(report["per_k_curve"].size() == 3);
}

TEST_CASE("sanitize streams stdin to stdout") {
  const auto emb = compass_embeddings();
  const std::string corpus = R"({"id":"x","text":"alpha beta"})" "\n";
  const auto res = run({"sanitize", "--embeddings", emb, "--stopwords", "none", "--mechanism",
                        "casper", "--eta", "1e9", "--sigma", "1e-6", "--window", "3"},
                       corpus);
  CHECK(res.code == 0);
  std::istringstream back(res.out);
  const auto records = read_sentence_records(back);
  REQUIRE(records.size() == 1);
  CHECK(records[0].id == "x");
  CHECK(records[0].sanitized_tokens == records[0].original_tokens);
}

TEST_CASE("a nominal audit exits 0 and reports pass") {
  const auto res = run({"audit", "--instance", "tiny4x2", "--mechanism", "dchi_noise",
                        "--epsilon", "2", "--trials", "20000", "--min-support", "50", "--seed",
                        "3"});
  CHECK(res.code == 0);
  CHECK(res.err.find("audit pass") != std::string::npos);
  const json report = json::parse(res.out);
  CHECK(report["pass"] == true);
  CHECK(report["trials"] == 20000);
  CHECK(report["mode"] == "joint");
}

TEST_CASE("an under-noised mechanism makes the audit exit 3") {
  const auto res = run({"audit", "--instance", "tiny4x2", "--mechanism", "casper", "--epsilon",
                        "2", "--noise-scale", "0.1", "--trials", "40000", "--min-support", "50",
                        "--seed", "13"});
  CHECK(res.code == 3);
  CHECK(res.err.find("audit FAIL") != std::string::npos);
  const json report = json::parse(res.out);
  CHECK(report["pass"] == false);
}

TEST_CASE("an unestimable audit exits 2 rather than concluding") {
  const auto res = run({"audit", "--instance", "tiny4x2", "--mechanism", "dchi_noise",
                        "--epsilon", "2", "--trials", "100", "--min-support", "1000"});
  CHECK(res.code == 2);
  CHECK(res.err.find("min_support") != std::string::npos);
}

TEST_CASE("table inspection prints the load summary") {
  const auto emb = write_file("dup.txt", "alpha 1 0\nbeta 0 1\nalpha 9 9\n");
  const auto res = run({"table", "--embeddings", emb});
  CHECK(res.code == 0);
  CHECK(res.out.find("dim: 2\n") != std::string::npos);
  CHECK(res.out.find("vocab: 2\n") != std::string::npos);
  CHECK(res.out.find("normalized: false\n") != std::string::npos);
  CHECK(res.out.find("duplicates_dropped: 1\n") != std::string::npos);
  CHECK(res.out.find("alpha norm=1 1 0\n") != std::string::npos);
}

TEST_CASE("config files fill in flags but explicit flags win") {
  const auto cfg = write_file("audit_cfg.json",
                              R"({"trials": 12345, "min_support": 60, "mechanism": "dchi_noise",)"
                              R"( "epsilon": 2.0, "seed": "5"})");
  const auto from_config = run({"audit", "--config", cfg});
  CHECK(from_config.code == 0);
  const json a = json::parse(from_config.out);
  CHECK(a["trials"] == 12345);
  CHECK(a["min_support"] == 60);

  const auto overridden = run({"audit", "--config", cfg, "--trials", "20000"});
  CHECK(overridden.code == 0);
  const json b = json::parse(overridden.out);
  CHECK(b["trials"] == 20000);
  CHECK(b["min_support"] == 60);
}

TEST_CASE("hex and decimal seeds agree and runs are reproducible") {
  const auto emb = compass_embeddings();
  const auto corpus = small_corpus();
  auto noisy = [&](const std::string& seed) {
    return run({"sanitize", "--embeddings", emb, "--input", corpus, "--stopwords", "none",
                "--mechanism", "dchi_noise", "--eta", "2", "--seed", seed});
  };
  const auto hex = noisy("0x10");
  const auto dec = noisy("16");
  const auto again = noisy("16");
  const auto other = noisy("17");
  CHECK(hex.code == 0);
  CHECK(hex.out == dec.out);
  CHECK(dec.out == again.out);
  CHECK(dec.out != other.out);
}
