#include "casper/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "casper/corpus.hpp"
#include "casper/evaluation.hpp"
#include "json.hpp"

namespace casper {

namespace {

using nlohmann::json;

// santext scores every vocabulary row per token; refuse tables past this
// unless the user caps the load explicitly.
constexpr std::size_t kSantextVocabCeiling = 500000;

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used, 0);  // base 0: decimal, 0x hex, 0 octal
  } catch (const std::exception&) {
    throw std::invalid_argument("seed '" + text + "' is not an unsigned integer");
  }
  if (used != text.size()) {
    throw std::invalid_argument("seed '" + text + "' is not an unsigned integer");
  }
  return value;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(flag) + ": '" + field + "' is not a number");
    }
  }
  if (values.empty()) throw std::invalid_argument(std::string(flag) + ": empty list");
  return values;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> values;
  for (const double v : parse_double_list(text, flag)) {
    if (v != double(int(v))) {
      throw std::invalid_argument(std::string(flag) + ": expected integers");
    }
    values.push_back(int(v));
  }
  return values;
}

struct InputStream {
  std::ifstream file;
  std::istream* stream = nullptr;
};

InputStream open_input(const std::string& path, std::istream& fallback) {
  InputStream in;
  if (path == "-") {
    in.stream = &fallback;
    return in;
  }
  in.file.open(path, std::ios::binary);
  if (!in.file) throw CorpusError("cannot open input file: " + path);
  in.stream = &in.file;
  return in;
}

struct OutputStream {
  std::ofstream file;
  std::ostream* stream = nullptr;
};

OutputStream open_output(const std::string& path, std::ostream& fallback) {
  OutputStream out;
  if (path == "-") {
    out.stream = &fallback;
    return out;
  }
  out.file.open(path, std::ios::binary);
  if (!out.file) throw CorpusError("cannot open output file: " + path);
  out.stream = &out.file;
  return out;
}

EmbeddingTable load_embeddings(const std::string& path, bool normalize, std::size_t max_vocab) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw EmbeddingError("cannot open embedding file: " + path);
  LoadOptions opts;
  opts.normalize = normalize;
  opts.limit = max_vocab;
  return load_table(file, opts);
}

StopwordSet resolve_stopwords(const std::string& path) {
  if (path.empty()) return StopwordSet::builtin_english();
  if (path == "none") return StopwordSet::none();
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CorpusError("cannot open stopword file: " + path);
  return StopwordSet::load(file, false);
}

CorpusFormat resolve_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "tsv") return CorpusFormat::tsv;
  throw std::invalid_argument("unknown format '" + name + "' (expected jsonl or tsv)");
}

// Options shared by every mechanism-running subcommand, bound to CLI11 flags.
struct MechFlags {
  std::string kind = "casper";
  double eta = 10.0;
  double epsilon = 1.0;
  double sigma = 1.0;
  int window = 5;
  int top_k = 10;
  std::string exclude_original = "auto";
  std::string seed = "0";
  double noise_scale = 1.0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--mechanism", kind,
                    "Mechanism: casper, convdef, dchi_noise, santext, custext")
        ->capture_default_str();
    cmd->add_option("--eta", eta, "Vector-noise scale (casper, dchi_noise)")
        ->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Exponential-mechanism budget (santext, custext)")
        ->capture_default_str();
    cmd->add_option("--sigma", sigma, "Context window shape (casper, convdef)")
        ->capture_default_str();
    cmd->add_option("--window", window, "Context window size L (casper, convdef)")
        ->capture_default_str();
    cmd->add_option("--top-k", top_k, "Candidate pool size (custext)")->capture_default_str();
    cmd->add_option("--exclude-original", exclude_original,
                    "Drop the original token from the decode scan: auto, true, false "
                    "(auto = true for convdef only)")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Master seed, decimal or 0x-hex")->capture_default_str();
    cmd->add_option("--noise-scale", noise_scale,
                    "Diagnostic noise multiplier; 1.0 outside auditor power checks")
        ->capture_default_str();
  }

  MechanismConfig build() const {
    const auto kind_value = mechanism_from_string(kind);
    if (!kind_value) throw std::invalid_argument("unknown mechanism '" + kind + "'");
    MechanismConfig cfg = MechanismConfig::defaults(*kind_value);
    cfg.eta = eta;
    cfg.epsilon = epsilon;
    cfg.sigma = sigma;
    cfg.window = window;
    cfg.top_k = top_k;
    if (exclude_original == "true") {
      cfg.exclude_original = true;
    } else if (exclude_original == "false") {
      cfg.exclude_original = false;
    } else if (exclude_original != "auto") {
      throw std::invalid_argument("--exclude-original expects auto, true, or false");
    }
    cfg.seed = parse_seed(seed);
    cfg.noise_scale = noise_scale;
    cfg.validate();
    return cfg;
  }
};

// Splices `--config file.json` values in as synthetic argv tokens placed
// before the real flags, so explicitly passed flags win.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CorpusError("cannot open config file: " + path);
  json cfg;
  try {
    cfg = json::parse(file);
  } catch (const json::exception& e) {
    throw CorpusError("config file " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw CorpusError("config file " + path + ": expected a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      tokens.push_back(flag + (value.get<bool>() ? "=true" : "=false"));
    } else if (value.is_string()) {
      tokens.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const json& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      tokens.push_back(flag + "=" + joined);
    } else {
      tokens.push_back(flag + "=" + value.dump());
    }
  }
  // Insert after the subcommand name.
  args.insert(args.begin() + 1, tokens.begin(), tokens.end());
  return args;
}

void take_last_everywhere(CLI::App* cmd) {
  for (CLI::Option* opt : cmd->get_options()) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

json attack_report_json(const AttackReport& report) {
  json j;
  j["k"] = report.k;
  j["attempts"] = report.attempts;
  j["hits"] = report.hits;
  j["skipped"] = report.skipped;
  j["pr_at_k"] = report.pr_at_k;
  j["per_k_curve"] = report.per_k_curve;
  return j;
}

json audit_report_json(const AuditReport& report, const EmbeddingTable& table,
                       const AuditConfig& cfg) {
  json j;
  j["x"] = report.x;
  j["x_prime"] = report.x_prime;
  j["distance_metric"] = cfg.distance == AuditDistance::d2 ? "d2" : "dc";
  j["mode"] = cfg.mode == AuditMode::joint ? "joint" : "interior";
  j["distance"] = report.distance;
  j["epsilon"] = cfg.epsilon;
  j["trials"] = report.trials;
  j["min_support"] = cfg.min_support;
  j["supported_outputs"] = report.supported_outputs;
  j["max_log_ratio"] = report.max_log_ratio;
  j["bound"] = report.bound;
  j["slack"] = report.slack;
  j["pass"] = report.pass;
  j["has_interior"] = report.has_interior;
  if (report.has_interior) {
    j["interior_max_log_ratio"] = report.interior_max_log_ratio;
    j["interior_bound"] = report.interior_bound;
    j["interior_slack"] = report.interior_slack;
    j["interior_pass"] = report.interior_pass;
  }
  json counts = json::array();
  for (const auto& entry : report.output_counts) {
    json row;
    json output = json::array();
    for (const TokenId id : entry.output) output.push_back(table.token(id));
    row["output"] = output;
    row["count_x"] = entry.count_x;
    row["count_x_prime"] = entry.count_x_prime;
    counts.push_back(row);
  }
  j["output_counts"] = counts;
  return j;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Token-level text sanitization with metric differential privacy"};
  app.name("casper");
  app.require_subcommand(1);

  // --- sanitize ---
  CLI::App* san = app.add_subcommand("sanitize", "Sanitize a corpus to JSONL records");
  struct {
    std::string embeddings;
    std::string input = "-";
    std::string output = "-";
    std::string format = "jsonl";
    std::string stopwords;
    std::string config;
    bool lowercase = false;
    bool normalize = false;
    std::size_t max_vocab = 0;
    std::size_t chunk = 512;
    double error_budget = 0.01;
    int threads = 0;
    MechFlags mech;
  } san_opt;
  san->add_option("--embeddings", san_opt.embeddings, "Embedding table file (token v1..vd lines)")
      ->required();
  san->add_option("--input", san_opt.input, "Corpus path, - for stdin")->capture_default_str();
  san->add_option("--output", san_opt.output, "Output path, - for stdout")->capture_default_str();
  san->add_option("--format", san_opt.format, "Corpus format: jsonl or tsv")
      ->capture_default_str();
  san->add_option("--stopwords", san_opt.stopwords,
                  "Stopword file, one per line; default builtin English list; 'none' disables");
  san->add_flag("--lowercase", san_opt.lowercase, "ASCII-lowercase tokens before processing");
  san->add_flag("--normalize", san_opt.normalize, "Scale embedding rows to unit norm at load");
  san->add_option("--max-vocab", san_opt.max_vocab, "Load at most this many rows (0 = all)")
      ->capture_default_str();
  san->add_option("--chunk", san_opt.chunk, "Sentences per batched pass")->capture_default_str();
  san->add_option("--error-budget", san_opt.error_budget,
                  "Abort when more than this fraction of records is malformed")
      ->capture_default_str();
  san->add_option("--threads", san_opt.threads, "Worker thread cap (0 = all cores)")
      ->capture_default_str();
  san->add_option("--config", san_opt.config, "JSON config file; explicit flags override it");
  san_opt.mech.add_options(san);

  // --- attack ---
  CLI::App* atk = app.add_subcommand("attack", "Rank reconstruction attack on sanitized JSONL");
  struct {
    std::string embeddings;
    std::string input = "-";
    std::string output = "-";
    std::string config;
    std::size_t k = 5;
    bool normalize = false;
    std::size_t max_vocab = 0;
    int threads = 0;
  } atk_opt;
  atk->add_option("--embeddings", atk_opt.embeddings, "Embedding table file")->required();
  atk->add_option("--input", atk_opt.input, "Sanitized JSONL path, - for stdin")
      ->capture_default_str();
  atk->add_option("--output", atk_opt.output, "Report path, - for stdout")->capture_default_str();
  atk->add_option("--k", atk_opt.k, "Report Pr@k for ranks 1..k")->capture_default_str();
  atk->add_flag("--normalize", atk_opt.normalize, "Scale embedding rows to unit norm at load");
  atk->add_option("--max-vocab", atk_opt.max_vocab, "Load at most this many rows (0 = all)")
      ->capture_default_str();
  atk->add_option("--threads", atk_opt.threads, "Worker thread cap (0 = all cores)")
      ->capture_default_str();
  atk->add_option("--config", atk_opt.config, "JSON config file; explicit flags override it");

  // --- audit ---
  CLI::App* aud = app.add_subcommand("audit", "Monte-Carlo output-ratio audit on a built-in instance");
  struct {
    std::string instance = "tiny4x2";
    std::string output = "-";
    std::string distance = "d2";
    std::string config;
    std::uint64_t trials = 1000000;
    std::uint64_t min_support = 1000;
    bool normalize = false;
    int threads = 0;
    MechFlags mech;  // --epsilon doubles as the audited bound's parameter
  } aud_opt;
  aud->add_option("--instance", aud_opt.instance, "Audit instance: tiny4x2 or interior12")
      ->capture_default_str();
  aud->add_option("--output", aud_opt.output, "Report path, - for stdout")->capture_default_str();
  aud->add_option("--distance", aud_opt.distance, "Bound distance: d2 (Euclidean) or dc (cosine)")
      ->capture_default_str();
  aud->add_option("--trials", aud_opt.trials, "Mechanism runs per input")->capture_default_str();
  aud->add_option("--min-support", aud_opt.min_support,
                  "Count floor (both inputs) for an output to be ratio-checked")
      ->capture_default_str();
  aud->add_flag("--normalize", aud_opt.normalize,
                "Unit-normalize the instance embeddings (pair with --distance dc)");
  aud->add_option("--threads", aud_opt.threads, "Worker thread cap (0 = all cores)")
      ->capture_default_str();
  aud->add_option("--config", aud_opt.config, "JSON config file; explicit flags override it");
  aud_opt.mech.eta = 1.0;  // audits default to the nominal scale eta = epsilon
  aud_opt.mech.window = 3;
  aud_opt.mech.add_options(aud);

  // --- sweep ---
  CLI::App* swp = app.add_subcommand("sweep", "Parameter sweep to CSV on a corpus sample");
  struct {
    std::string embeddings;
    std::string input = "-";
    std::string output = "-";
    std::string format = "jsonl";
    std::string stopwords;
    std::string config;
    std::string sigmas = "0.5,0.75,1.0";
    std::string windows = "3,5";
    std::string etas = "1,10,50";
    std::size_t k = 5;
    std::size_t max_sentences = 0;
    bool lowercase = false;
    bool normalize = false;
    std::size_t max_vocab = 0;
    int threads = 0;
    MechFlags mech;
  } swp_opt;
  swp->add_option("--embeddings", swp_opt.embeddings, "Embedding table file")->required();
  swp->add_option("--input", swp_opt.input, "Corpus sample path, - for stdin")
      ->capture_default_str();
  swp->add_option("--output", swp_opt.output, "CSV path, - for stdout")->capture_default_str();
  swp->add_option("--format", swp_opt.format, "Corpus format: jsonl or tsv")
      ->capture_default_str();
  swp->add_option("--stopwords", swp_opt.stopwords,
                  "Stopword file; default builtin English list; 'none' disables");
  swp->add_option("--sigmas", swp_opt.sigmas, "Comma-separated window shapes")
      ->capture_default_str();
  swp->add_option("--windows", swp_opt.windows, "Comma-separated window sizes")
      ->capture_default_str();
  swp->add_option("--etas", swp_opt.etas, "Comma-separated noise scales")->capture_default_str();
  swp->add_option("--k", swp_opt.k, "Attack rank cutoff per cell")->capture_default_str();
  swp->add_option("--max-sentences", swp_opt.max_sentences, "Sample size cap (0 = all)")
      ->capture_default_str();
  swp->add_flag("--lowercase", swp_opt.lowercase, "ASCII-lowercase tokens before processing");
  swp->add_flag("--normalize", swp_opt.normalize, "Scale embedding rows to unit norm at load");
  swp->add_option("--max-vocab", swp_opt.max_vocab, "Load at most this many rows (0 = all)")
      ->capture_default_str();
  swp->add_option("--threads", swp_opt.threads, "Worker thread cap (0 = all cores)")
      ->capture_default_str();
  swp->add_option("--config", swp_opt.config, "JSON config file; explicit flags override it");
  swp_opt.mech.add_options(swp);

  // --- table ---
  CLI::App* tbl = app.add_subcommand("table", "Inspect an embedding table");
  struct {
    std::string embeddings;
    std::string output = "-";
    std::string config;
    bool normalize = false;
    std::size_t max_vocab = 0;
    std::size_t sample = 5;
  } tbl_opt;
  tbl->add_option("--embeddings", tbl_opt.embeddings, "Embedding table file")->required();
  tbl->add_option("--output", tbl_opt.output, "Summary path, - for stdout")
      ->capture_default_str();
  tbl->add_flag("--normalize", tbl_opt.normalize, "Scale embedding rows to unit norm at load");
  tbl->add_option("--max-vocab", tbl_opt.max_vocab, "Load at most this many rows (0 = all)")
      ->capture_default_str();
  tbl->add_option("--sample", tbl_opt.sample, "Rows to print")->capture_default_str();
  tbl->add_option("--config", tbl_opt.config, "JSON config file; explicit flags override it");

  for (CLI::App* cmd : {san, atk, aud, swp, tbl}) take_last_everywhere(cmd);

  try {
    args = apply_config_file(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // Prints help for --help requests, the error message otherwise.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*san) {
      if (san_opt.threads > 0) omp_set_num_threads(san_opt.threads);
      const MechanismConfig cfg = san_opt.mech.build();
      const EmbeddingTable table =
          load_embeddings(san_opt.embeddings, san_opt.normalize, san_opt.max_vocab);
      if (cfg.kind == MechanismKind::santext && table.size() > kSantextVocabCeiling) {
        err << "error: santext scores the full vocabulary per token; table has " << table.size()
            << " rows - cap the load with --max-vocab (<= " << kSantextVocabCeiling << ")\n";
        return 1;
      }
      const StopwordSet stopwords = resolve_stopwords(san_opt.stopwords);
      CorpusOptions options;
      options.format = resolve_format(san_opt.format);
      options.lowercase = san_opt.lowercase;
      options.chunk_sentences = san_opt.chunk;
      options.error_budget = san_opt.error_budget;
      InputStream input = open_input(san_opt.input, in);
      OutputStream output = open_output(san_opt.output, out);
      const CorpusStats stats =
          sanitize_corpus(*input.stream, *output.stream, err, table, cfg, stopwords, options);
      output.stream->flush();
      err << "sentences=" << stats.sentences << " tokens=" << stats.tokens
          << " stopwords=" << stats.stopword_tokens << " oov=" << stats.oov_tokens
          << " replaced=" << stats.replaced_tokens << " errors=" << stats.errors
          << " replaced_rate=" << stats.replaced_rate()
          << " mean_cosine=" << stats.mean_cosine_similarity() << '\n';
      return 0;
    }

    if (*atk) {
      if (atk_opt.threads > 0) omp_set_num_threads(atk_opt.threads);
      if (atk_opt.k == 0) throw std::invalid_argument("--k must be >= 1");
      const EmbeddingTable table =
          load_embeddings(atk_opt.embeddings, atk_opt.normalize, atk_opt.max_vocab);
      InputStream input = open_input(atk_opt.input, in);
      const auto records = read_sentence_records(*input.stream);
      const AttackReport report = attack_pr_at_k(records, table, atk_opt.k);
      OutputStream output = open_output(atk_opt.output, out);
      *output.stream << attack_report_json(report).dump() << '\n';
      output.stream->flush();
      return 0;
    }

    if (*aud) {
      if (aud_opt.threads > 0) omp_set_num_threads(aud_opt.threads);
      const AuditInstance instance = make_audit_instance(aud_opt.instance, aud_opt.normalize);
      // Instance geometry supplies the window defaults unless flags override;
      // the mechanism runs at the nominal scale eta = epsilon unless told not to.
      if (aud->count("--window") == 0) aud_opt.mech.window = instance.window;
      if (aud->count("--sigma") == 0) aud_opt.mech.sigma = instance.sigma;
      if (aud->count("--eta") == 0) aud_opt.mech.eta = aud_opt.mech.epsilon;
      AuditConfig cfg;
      cfg.mech = aud_opt.mech.build();
      cfg.x = instance.x;
      cfg.x_prime = instance.x_prime;
      cfg.epsilon = aud_opt.mech.epsilon;
      cfg.trials = aud_opt.trials;
      cfg.min_support = aud_opt.min_support;
      cfg.mode = instance.mode;
      if (aud_opt.distance == "d2") {
        cfg.distance = AuditDistance::d2;
      } else if (aud_opt.distance == "dc") {
        cfg.distance = AuditDistance::dc;
      } else {
        throw std::invalid_argument("--distance expects d2 or dc");
      }
      const AuditReport report = dp_audit(instance.table, cfg);
      OutputStream output = open_output(aud_opt.output, out);
      *output.stream << audit_report_json(report, instance.table, cfg).dump() << '\n';
      output.stream->flush();
      err << (report.pass ? "audit pass" : "audit FAIL") << ": max_log_ratio="
          << report.max_log_ratio << " bound=" << report.bound << " slack=" << report.slack
          << '\n';
      return report.pass ? 0 : 3;
    }

    if (*swp) {
      if (swp_opt.threads > 0) omp_set_num_threads(swp_opt.threads);
      const auto sigmas = parse_double_list(swp_opt.sigmas, "--sigmas");
      const auto windows = parse_int_list(swp_opt.windows, "--windows");
      const auto etas = parse_double_list(swp_opt.etas, "--etas");
      const MechanismConfig base = swp_opt.mech.build();
      const EmbeddingTable table =
          load_embeddings(swp_opt.embeddings, swp_opt.normalize, swp_opt.max_vocab);
      const StopwordSet stopwords = resolve_stopwords(swp_opt.stopwords);
      CorpusOptions options;
      options.format = resolve_format(swp_opt.format);
      options.lowercase = swp_opt.lowercase;
      InputStream input = open_input(swp_opt.input, in);
      const auto sample = read_corpus_tokens(*input.stream, options, swp_opt.max_sentences);
      if (sample.empty()) throw CorpusError("sweep sample is empty");
      const auto cells = parameter_sweep(table, sample, stopwords, sigmas, windows, etas,
                                         parse_seed(swp_opt.mech.seed), swp_opt.k, base);
      OutputStream output = open_output(swp_opt.output, out);
      write_sweep_csv(*output.stream, cells);
      output.stream->flush();
      return 0;
    }

    if (*tbl) {
      const EmbeddingTable table =
          load_embeddings(tbl_opt.embeddings, tbl_opt.normalize, tbl_opt.max_vocab);
      OutputStream output = open_output(tbl_opt.output, out);
      std::ostream& os = *output.stream;
      os << "dim: " << table.dim() << '\n';
      os << "vocab: " << table.size() << '\n';
      os << "normalized: " << (table.normalized() ? "true" : "false") << '\n';
      os << "duplicates_dropped: " << table.duplicates_dropped() << '\n';
      const std::size_t rows = std::min<std::size_t>(tbl_opt.sample, table.size());
      const std::size_t cols = std::min<std::size_t>(table.dim(), 4);
      for (std::size_t i = 0; i < rows; ++i) {
        os << table.token(TokenId(i)) << " norm=" << table.norm(TokenId(i));
        const auto row = table.row(TokenId(i));
        for (std::size_t e = 0; e < cols; ++e) os << ' ' << row[e];
        if (cols < table.dim()) os << " ...";
        os << '\n';
      }
      output.stream->flush();
      return 0;
    }
  } catch (const InsufficientSupport& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace casper
