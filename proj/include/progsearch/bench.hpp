#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "progsearch/exact_knn.hpp"
#include "progsearch/progressive.hpp"
#include "progsearch/vecstore.hpp"

namespace progsearch {

enum class Method { truncated, progressive };
const char* to_string(Method m);

/// Exact 1-NN over the first `dim` coordinates.
struct TruncatedConfig {
  Index dim = 0;
  bool operator==(const TruncatedConfig&) const = default;
};

using SearchConfig = std::variant<TruncatedConfig, ProgressiveConfig>;

Method method_of(const SearchConfig& cfg);
std::vector<Neighbor> run_search(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg);

/// Percentage of positions where results[i] == truth[i].
double top1_accuracy(std::span<const DocId> results, std::span<const DocId> truth);
/// Middle value, or the mean of the two middle values for even sizes.
double median(std::span<const double> values);

struct BenchReport {
  SearchConfig config;
  double accuracy_pct = 0.0;
  std::vector<double> timings_sec;
  /// NaN when timings were not collected (accuracy-only sweeps).
  double median_runtime_sec = 0.0;
  Index n_repeats = 0;
  Index n_queries = 0;
  Index n_docs = 0;
  std::string corpus_hash;
  std::string query_hash;
  int threads = 1;
  bool warmup = true;

  Method method() const { return method_of(config); }
};

struct BenchOptions {
  Index n_repeats = 10;
  /// One untimed run before the timed repeats.
  bool warmup = true;
};

/// Times the search alone, n_repeats times, and checks that every repeat
/// returns the same accuracy. Queries must carry ground truth.
BenchReport run_benchmark(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg,
                          const BenchOptions& options = {});

struct SweepGrid {
  std::vector<Index> truncated_dims;
  std::vector<Index> start_dims;
  std::vector<Index> max_dims;
  std::vector<Index> initial_ks;
  std::vector<PoolMode> pool_modes{PoolMode::per_query};
};

struct SweepResult {
  std::vector<BenchReport> reports;
  /// One human-readable line per rejected combination.
  std::vector<std::string> skipped;
};

/// Every truncated dim, plus the cartesian product of progressive parameters.
/// Combinations that are invalid for the corpus are skipped and logged. With
/// `accuracy_only`, configs run once each, in parallel, without timings.
SweepResult run_sweep(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SweepGrid& grid,
                      const BenchOptions& options = {}, bool accuracy_only = false);

/// Report order used by sweeps: method, max dim (or dim), start dim, k, pool mode.
bool report_before(const BenchReport& a, const BenchReport& b);

inline constexpr const char* kCsvHeader =
    "method,start_dim,max_dim,initial_k,pool_mode,accuracy_pct,median_runtime_sec,n_repeats,n_queries,n_docs,"
    "corpus_hash";

void write_csv(std::span<const BenchReport> reports, std::ostream& out);
/// Restores the columns the CSV carries; per-repeat timings are not in it.
std::vector<BenchReport> parse_csv(std::istream& in);

nlohmann::json to_json(const BenchReport& report);
nlohmann::json to_json(std::span<const BenchReport> reports);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace progsearch
