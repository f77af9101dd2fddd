#include "casper/evaluation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace casper {

namespace {

constexpr std::size_t kAttackChunk = 4096;   // queries per batched scan
constexpr std::size_t kAuditChunk = 8192;    // trials per batched mechanism pass

struct RatioExtreme {
  double log_ratio = 0.0;
  double slack = 0.0;
  bool any = false;

  // Track the output whose violation margin |log ratio| - slack is largest.
  void offer(std::uint64_t count_a, std::uint64_t count_b, std::uint64_t trials) {
    const double lr = std::fabs(std::log(double(count_a)) - std::log(double(count_b)));
    const double pa = double(count_a) / double(trials);
    const double pb = double(count_b) / double(trials);
    const double se =
        3.0 * std::sqrt((1.0 - pa) / double(count_a) + (1.0 - pb) / double(count_b));
    if (!any || lr - se > log_ratio - slack) {
      log_ratio = lr;
      slack = se;
      any = true;
    }
  }
};

}  // namespace

InsufficientSupport::InsufficientSupport()
    : std::runtime_error("no output reaches min_support under both inputs") {}

AttackReport attack_pr_at_k(std::span<const SentenceRecord> records,
                            const EmbeddingTable& table, std::size_t k) {
  if (k == 0) throw std::invalid_argument("attack requires k >= 1");
  AttackReport report;
  report.k = k;

  struct Attempt {
    TokenId original;
    TokenId replacement;
  };
  std::vector<Attempt> attempts;
  for (const auto& rec : records) {
    for (std::size_t p = 0; p < rec.original_tokens.size(); ++p) {
      const bool stop = p < rec.stopword_mask.size() && rec.stopword_mask[p];
      const bool oov = p < rec.oov_mask.size() && rec.oov_mask[p];
      if (stop || oov) continue;
      const auto original = table.lookup(rec.original_tokens[p]);
      if (!original) continue;  // mask and table disagree; nothing to rank
      const std::string& replacement_tok =
          p < rec.sanitized_tokens.size() ? rec.sanitized_tokens[p] : rec.original_tokens[p];
      const auto replacement = table.lookup(replacement_tok);
      if (!replacement) {
        ++report.skipped;
        continue;
      }
      attempts.push_back(Attempt{*original, *replacement});
    }
  }

  std::vector<std::uint64_t> hits_at(k, 0);
  std::vector<double> queries(std::min(kAttackChunk, attempts.size()) * table.dim());
  std::vector<std::vector<Neighbor>> hits;
  for (std::size_t base = 0; base < attempts.size(); base += kAttackChunk) {
    const std::size_t n = std::min(kAttackChunk, attempts.size() - base);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = table.row(attempts[base + i].replacement);
      std::copy(row.begin(), row.end(), queries.data() + i * table.dim());
    }
    nearest_neighbors_batch(table, queries.data(), n, k, nullptr, hits);
    for (std::size_t i = 0; i < n; ++i) {
      const TokenId target = attempts[base + i].original;
      for (std::size_t r = 0; r < hits[i].size(); ++r) {
        if (hits[i][r].id == target) {
          for (std::size_t j = r; j < k; ++j) ++hits_at[j];
          break;
        }
      }
    }
  }

  report.attempts = attempts.size();
  report.hits = report.attempts ? hits_at[k - 1] : 0;
  report.pr_at_k = report.attempts ? double(report.hits) / double(report.attempts) : 0.0;
  report.per_k_curve.resize(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    report.per_k_curve[j] =
        report.attempts ? double(hits_at[j]) / double(report.attempts) : 0.0;
  }
  return report;
}

UtilityReport utility_report(std::span<const SentenceRecord> records,
                             const EmbeddingTable& table) {
  UtilityReport report;
  std::uint64_t changed = 0;
  double cosine_sum = 0.0;
  for (const auto& rec : records) {
    for (std::size_t p = 0; p < rec.original_tokens.size(); ++p) {
      const bool stop = p < rec.stopword_mask.size() && rec.stopword_mask[p];
      const bool oov = p < rec.oov_mask.size() && rec.oov_mask[p];
      if (stop || oov) continue;
      ++report.evaluated;
      const std::string& replacement =
          p < rec.sanitized_tokens.size() ? rec.sanitized_tokens[p] : rec.original_tokens[p];
      if (replacement == rec.original_tokens[p]) {
        ++report.preserved;
        continue;
      }
      ++changed;
      const auto a = table.lookup(rec.original_tokens[p]);
      const auto b = table.lookup(replacement);
      if (a && b) cosine_sum += table.row_cosine(*a, *b);
    }
  }
  report.preservation =
      report.evaluated ? double(report.preserved) / double(report.evaluated) : 1.0;
  report.mean_cosine = changed ? cosine_sum / double(changed) : 1.0;
  return report;
}

AuditReport dp_audit(const EmbeddingTable& table, const AuditConfig& cfg) {
  cfg.mech.validate();
  if (cfg.x.empty() || cfg.x.size() != cfg.x_prime.size()) {
    throw std::invalid_argument("audit inputs must be non-empty and the same length");
  }
  if (cfg.trials == 0) throw std::invalid_argument("audit requires trials >= 1");
  if (!(cfg.epsilon >= 0.0)) throw std::invalid_argument("audit epsilon must be >= 0");

  const std::size_t n = cfg.x.size();
  std::vector<std::optional<TokenId>> ids_x(n), ids_xp(n);
  for (std::size_t p = 0; p < n; ++p) {
    ids_x[p] = table.lookup(cfg.x[p]);
    ids_xp[p] = table.lookup(cfg.x_prime[p]);
    if (!ids_x[p] || !ids_xp[p]) {
      throw std::invalid_argument("audit inputs must be fully in-vocabulary");
    }
  }

  double distance = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    if (*ids_x[p] == *ids_xp[p]) continue;  // identical tokens contribute exactly 0
    if (cfg.distance == AuditDistance::d2) {
      const auto ra = table.row(*ids_x[p]);
      const auto rb = table.row(*ids_xp[p]);
      double sq = 0.0;
      for (std::size_t e = 0; e < ra.size(); ++e) sq += (ra[e] - rb[e]) * (ra[e] - rb[e]);
      distance += std::sqrt(sq);
    } else {
      distance += 1.0 - table.row_cosine(*ids_x[p], *ids_xp[p]);
    }
  }

  // Mid-sentence positions whose window weight totals equal 1; outside the
  // context mechanisms every position qualifies.
  std::size_t interior_lo = 0, interior_hi = n - 1;
  if (cfg.mech.kind == MechanismKind::casper || cfg.mech.kind == MechanismKind::convdef) {
    interior_lo = std::size_t(cfg.mech.window) - 1;
    interior_hi = n >= std::size_t(cfg.mech.window) ? n - std::size_t(cfg.mech.window)
                                                    : 0;
  }
  const bool interior_range = interior_lo <= interior_hi && interior_hi < n;
  const bool count_joint = cfg.mode == AuditMode::joint;
  const bool count_interior = interior_range;

  std::map<std::vector<TokenId>, std::array<std::uint64_t, 2>> joint_counts;
  // interior_counts[position - interior_lo][token][side]
  std::vector<std::vector<std::array<std::uint64_t, 2>>> interior_counts;
  if (count_interior) {
    interior_counts.assign(interior_hi - interior_lo + 1,
                           std::vector<std::array<std::uint64_t, 2>>(
                               table.size(), std::array<std::uint64_t, 2>{0, 0}));
  }

  // In interior mode only the counted positions need outputs; flagging the
  // rest as stopwords skips their (identical-distribution) work.
  std::unique_ptr<bool[]> skip;
  if (!count_joint) {
    skip = std::make_unique<bool[]>(n);
    for (std::size_t p = 0; p < n; ++p) skip[p] = p < interior_lo || p > interior_hi;
  }

  std::vector<TokenId> key(count_joint ? n : 0);
  for (int side = 0; side < 2; ++side) {
    const auto& ids = side == 0 ? ids_x : ids_xp;
    const std::span<const std::optional<TokenId>> ids_span(ids);
    const std::span<const bool> skip_span =
        skip ? std::span<const bool>(skip.get(), n) : std::span<const bool>();
    std::vector<IdSentence> views(std::min<std::uint64_t>(kAuditChunk, cfg.trials));
    std::vector<std::vector<std::optional<TokenId>>> outputs;
    for (std::uint64_t base = 0; base < cfg.trials; base += kAuditChunk) {
      const std::size_t m = std::size_t(std::min<std::uint64_t>(kAuditChunk, cfg.trials - base));
      views.resize(m);
      for (std::size_t t = 0; t < m; ++t) {
        // Distinct substream per (trial, side): even indices drive x, odd x'.
        views[t] = IdSentence{ids_span, skip_span, 2 * (base + t) + std::uint64_t(side)};
      }
      sanitize_ids(table, views, cfg.mech, outputs);
      for (std::size_t t = 0; t < m; ++t) {
        if (count_joint) {
          for (std::size_t p = 0; p < n; ++p) key[p] = *outputs[t][p];
          ++joint_counts[key][side];
        }
        if (count_interior) {
          for (std::size_t p = interior_lo; p <= interior_hi; ++p) {
            ++interior_counts[p - interior_lo][*outputs[t][p]][side];
          }
        }
      }
    }
  }

  AuditReport report;
  report.x = cfg.x;
  report.x_prime = cfg.x_prime;
  report.distance = distance;
  report.trials = cfg.trials;

  RatioExtreme interior_extreme;
  if (count_interior) {
    for (const auto& position : interior_counts) {
      for (const auto& counts : position) {
        if (counts[0] >= cfg.min_support && counts[1] >= cfg.min_support) {
          interior_extreme.offer(counts[0], counts[1], cfg.trials);
        }
      }
    }
  }
  report.has_interior = interior_extreme.any;
  if (report.has_interior) {
    report.interior_max_log_ratio = interior_extreme.log_ratio;
    report.interior_bound = cfg.epsilon * distance;
    report.interior_slack = interior_extreme.slack;
    report.interior_pass =
        report.interior_max_log_ratio <= report.interior_bound + report.interior_slack;
  }

  if (count_joint) {
    RatioExtreme joint_extreme;
    for (const auto& [output, counts] : joint_counts) {
      report.output_counts.push_back(AuditOutputCount{output, counts[0], counts[1]});
      if (counts[0] >= cfg.min_support && counts[1] >= cfg.min_support) {
        ++report.supported_outputs;
        joint_extreme.offer(counts[0], counts[1], cfg.trials);
      }
    }
    if (!joint_extreme.any) throw InsufficientSupport();
    report.max_log_ratio = joint_extreme.log_ratio;
    report.bound = 2.0 * cfg.epsilon * distance;
    report.slack = joint_extreme.slack;
    report.pass = report.max_log_ratio <= report.bound + report.slack &&
                  (!report.has_interior || report.interior_pass);
  } else {
    if (!interior_extreme.any) throw InsufficientSupport();
    std::uint64_t supported = 0;
    for (const auto& position : interior_counts) {
      for (const auto& counts : position) {
        supported += counts[0] >= cfg.min_support && counts[1] >= cfg.min_support;
      }
    }
    report.supported_outputs = supported;
    report.max_log_ratio = report.interior_max_log_ratio;
    report.bound = report.interior_bound;
    report.slack = report.interior_slack;
    report.pass = report.interior_pass;
  }
  return report;
}

AuditInstance make_audit_instance(std::string_view name, bool normalize) {
  // Four tokens 75 degrees apart on a radius-0.3 circle: adjacent gaps are
  // wide enough that the cosine-distance bound dominates per-position leakage,
  // and the radius keeps outputs well-supported when under-scaled noise has
  // to be caught.
  constexpr double kRadius = 0.3;
  constexpr double kPi = 3.14159265358979323846;
  std::vector<std::string> tokens{"a", "b", "c", "d"};
  std::vector<double> values;
  for (const double degrees : {0.0, 75.0, 150.0, 225.0}) {
    const double t = degrees * kPi / 180.0;
    values.push_back(kRadius * std::cos(t));
    values.push_back(kRadius * std::sin(t));
  }
  AuditInstance instance;
  instance.table = EmbeddingTable(std::move(tokens), std::move(values), 2, normalize);
  if (name == "tiny4x2") {
    instance.x = {"a", "b"};
    instance.x_prime = {"b", "c"};
    instance.window = 3;
    instance.sigma = 1.0;
    instance.mode = AuditMode::joint;
  } else if (name == "interior12") {
    instance.x = {"a", "b", "a", "b", "a", "b", "a", "b", "a", "b", "a", "b"};
    instance.x_prime = {"a", "b", "a", "b", "c", "d", "c", "d", "a", "b", "a", "b"};
    instance.window = 4;
    instance.sigma = 1.0;
    instance.mode = AuditMode::interior;
  } else {
    throw std::invalid_argument("unknown audit instance (expected tiny4x2 or interior12)");
  }
  return instance;
}

std::uint64_t sweep_cell_seed(std::uint64_t master, double sigma, int window, double eta) {
  std::uint64_t h = mix64(master);
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(sigma));
  std::memcpy(&bits, &sigma, sizeof(bits));
  h = stream_key(h, bits);
  h = stream_key(h, std::uint64_t(window));
  std::memcpy(&bits, &eta, sizeof(bits));
  return stream_key(h, bits);
}

std::vector<SweepCell> parameter_sweep(const EmbeddingTable& table,
                                       std::span<const std::vector<std::string>> sample,
                                       const StopwordSet& stopwords,
                                       std::span<const double> sigmas, std::span<const int> windows,
                                       std::span<const double> etas, std::uint64_t master_seed,
                                       std::size_t attack_k, const MechanismConfig& base) {
  if (sigmas.empty() || windows.empty() || etas.empty()) {
    throw std::invalid_argument("sweep grid must be non-empty on every axis");
  }
  std::vector<SweepCell> cells;
  for (const double sigma : sigmas) {
    for (const int window : windows) {
      for (const double eta : etas) {
        SweepCell cell;
        cell.sigma = sigma;
        cell.window = window;
        cell.eta = eta;
        cell.seed = sweep_cell_seed(master_seed, sigma, window, eta);
        const auto start = std::chrono::steady_clock::now();
        try {
          MechanismConfig cfg = base;
          cfg.sigma = sigma;
          cfg.window = window;
          cfg.eta = eta;
          cfg.seed = cell.seed;
          const auto sanitized = sanitize_sentences(table, sample, 0, cfg, stopwords);
          std::vector<SentenceRecord> records(sample.size());
          for (std::size_t s = 0; s < sample.size(); ++s) {
            records[s].original_tokens = sample[s];
            records[s].sanitized_tokens.reserve(sample[s].size());
            records[s].stopword_mask.resize(sample[s].size());
            records[s].oov_mask.resize(sample[s].size());
            for (std::size_t p = 0; p < sanitized[s].size(); ++p) {
              records[s].sanitized_tokens.push_back(sanitized[s][p].text);
              records[s].stopword_mask[p] = sanitized[s][p].was_stopword;
              records[s].oov_mask[p] = sanitized[s][p].was_oov;
            }
          }
          cell.attack = attack_pr_at_k(records, table, attack_k);
          cell.utility = utility_report(records, table);
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        cell.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string quoted = "\"";
  for (const char c : value) {
    quoted += c;
    if (c == '"') quoted += '"';
  }
  quoted += '"';
  return quoted;
}

std::string csv_double(double value) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells) {
  out << "sigma,window,eta,seed,k,attempts,pr_at_k,evaluated,preservation,mean_cosine,"
         "seconds,ok,error\r\n";
  for (const auto& cell : cells) {
    out << csv_double(cell.sigma) << ',' << cell.window << ',' << csv_double(cell.eta) << ','
        << cell.seed << ',' << cell.attack.k << ',' << cell.attack.attempts << ','
        << csv_double(cell.attack.pr_at_k) << ',' << cell.utility.evaluated << ','
        << csv_double(cell.utility.preservation) << ',' << csv_double(cell.utility.mean_cosine)
        << ',' << csv_double(cell.seconds) << ',' << (cell.ok ? "true" : "false") << ','
        << csv_field(cell.error) << "\r\n";
  }
}

}  // namespace casper
