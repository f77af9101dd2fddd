#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casper/corpus.hpp"

namespace casper {

// Reconstruction attack: for every evaluated position (non-stopword,
// non-OOV), success at k iff the original token ranks within the top-k
// nearest neighbors of the replacement's embedding (the replacement itself
// competes as a candidate). Replacements missing from the table are skipped
// and tallied.
struct AttackReport {
  std::size_t k = 5;
  std::uint64_t attempts = 0;
  std::uint64_t hits = 0;
  double pr_at_k = 0.0;
  std::vector<double> per_k_curve;  // per_k_curve[j] = recall at k = j+1
  std::uint64_t skipped = 0;
};
AttackReport attack_pr_at_k(std::span<const SentenceRecord> records,
                            const EmbeddingTable& table, std::size_t k);

struct UtilityReport {
  std::uint64_t evaluated = 0;  // positions where a mechanism ran
  std::uint64_t preserved = 0;  // replacement == original among those
  double preservation = 1.0;
  double mean_cosine = 1.0;  // over changed tokens; 1.0 when none changed
};
UtilityReport utility_report(std::span<const SentenceRecord> records,
                             const EmbeddingTable& table);

// Monte-Carlo check of the output-ratio bound Pr[M(x)=y] <= e^B Pr[M(x')=y].
// Joint mode counts whole output sequences (keep instances tiny so counts are
// estimable); interior mode counts per-position marginals over the
// mid-sentence positions, which marginalization keeps valid and which stays
// estimable for longer inputs. Bounds: joint B = 2 * epsilon * d, interior
// B = epsilon * d, each plus three pooled standard errors of the estimate.
enum class AuditDistance { d2, dc };  // sum of Euclidean / cosine distances per position
enum class AuditMode { joint, interior };

struct InsufficientSupport : std::runtime_error {
  InsufficientSupport();
};

struct AuditConfig {
  MechanismConfig mech;
  std::vector<std::string> x;
  std::vector<std::string> x_prime;
  double epsilon = 1.0;  // bound parameter; the mechanism's own scale is mech.eta
  std::uint64_t trials = 1000000;
  std::uint64_t min_support = 1000;
  AuditDistance distance = AuditDistance::d2;
  AuditMode mode = AuditMode::joint;
};

struct AuditOutputCount {
  std::vector<TokenId> output;
  std::uint64_t count_x = 0;
  std::uint64_t count_x_prime = 0;
};

struct AuditReport {
  std::vector<std::string> x, x_prime;
  double distance = 0.0;  // d2 or dc per config
  std::uint64_t trials = 0;
  std::uint64_t supported_outputs = 0;
  std::vector<AuditOutputCount> output_counts;  // joint mode only
  double max_log_ratio = 0.0;
  double bound = 0.0;
  double slack = 0.0;  // 3 standard errors at the extreme output
  bool pass = true;
  // Interior marginal check (filled when the mid-sentence range is non-empty).
  bool has_interior = false;
  double interior_max_log_ratio = 0.0;
  double interior_bound = 0.0;
  double interior_slack = 0.0;
  bool interior_pass = true;
};

// Requires |x| == |x_prime| and every token present in the table. Throws
// InsufficientSupport when no output clears min_support under both inputs.
AuditReport dp_audit(const EmbeddingTable& table, const AuditConfig& cfg);

// Built-in audit instances over a 4-token, 2-d vocabulary (tokens 75 degrees
// apart on a circle): "tiny4x2" = 2-token inputs for joint audits,
// "interior12" = 12-token inputs differing only mid-sentence. normalize
// scales the rows to unit norm (used with the cosine distance bound).
struct AuditInstance {
  EmbeddingTable table;
  std::vector<std::string> x, x_prime;
  int window = 3;
  double sigma = 1.0;
  AuditMode mode = AuditMode::joint;
};
AuditInstance make_audit_instance(std::string_view name, bool normalize);

// Parameter sweep: casper over a (sigma, window, eta) grid on a fixed token
// sample. Every cell reseeds from (master_seed, sigma, window, eta), so a
// cell's row does not depend on which other cells are in the grid. Failures
// are flagged per cell rather than aborting the sweep.
struct SweepCell {
  double sigma = 1.0;
  int window = 1;
  double eta = 1.0;
  std::uint64_t seed = 0;
  AttackReport attack;
  UtilityReport utility;
  double seconds = 0.0;
  bool ok = true;
  std::string error;
};
std::uint64_t sweep_cell_seed(std::uint64_t master, double sigma, int window, double eta);
std::vector<SweepCell> parameter_sweep(const EmbeddingTable& table,
                                       std::span<const std::vector<std::string>> sample,
                                       const StopwordSet& stopwords,
                                       std::span<const double> sigmas, std::span<const int> windows,
                                       std::span<const double> etas, std::uint64_t master_seed,
                                       std::size_t attack_k, const MechanismConfig& base);
// RFC 4180 (CRLF, quoted where needed), one row per cell plus a header.
void write_sweep_csv(std::ostream& out, std::span<const SweepCell> cells);

}  // namespace casper
