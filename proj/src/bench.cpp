#include "progsearch/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

#include "progsearch/errors.hpp"
#include "progsearch/parallel.hpp"

namespace progsearch {

const char* to_string(Method m) { return m == Method::truncated ? "truncated" : "progressive"; }

Method method_of(const SearchConfig& cfg) {
  return std::holds_alternative<TruncatedConfig>(cfg) ? Method::truncated : Method::progressive;
}

std::vector<Neighbor> run_search(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg) {
  if (const auto* t = std::get_if<TruncatedConfig>(&cfg)) return top1(corpus, queries, t->dim);
  return progressive_search(corpus, queries, std::get<ProgressiveConfig>(cfg));
}

double top1_accuracy(std::span<const DocId> results, std::span<const DocId> truth) {
  if (truth.empty()) throw ValidationError("accuracy needs at least one ground-truth entry");
  if (results.size() != truth.size()) {
    throw ValidationError("result count " + std::to_string(results.size()) + " != truth count " +
                          std::to_string(truth.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += results[i] == truth[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

namespace {

struct Fingerprints {
  std::string corpus;
  std::string queries;
};

Fingerprints fingerprints_of(const EmbeddingMatrix& corpus, const QueryBatch& queries) {
  return {to_hex(fingerprint(corpus)), to_hex(fingerprint(queries.data))};
}

double accuracy_of(const std::vector<Neighbor>& answers, const std::vector<DocId>& truth) {
  std::vector<DocId> ids;
  ids.reserve(answers.size());
  for (const Neighbor& n : answers) ids.push_back(n.id);
  return top1_accuracy(ids, truth);
}

const std::vector<DocId>& truth_of(const EmbeddingMatrix& corpus, const QueryBatch& queries) {
  if (!queries.ground_truth) throw ValidationError("benchmarking needs queries with ground truth");
  check_against(queries, corpus);
  return *queries.ground_truth;
}

BenchReport blank_report(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg,
                         const Fingerprints& fp) {
  BenchReport r;
  r.config = cfg;
  r.n_queries = queries.n_queries();
  r.n_docs = corpus.n_rows();
  r.corpus_hash = fp.corpus;
  r.query_hash = fp.queries;
  r.threads = num_threads();
  return r;
}

BenchReport bench_one(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg,
                      const BenchOptions& options, const Fingerprints& fp) {
  if (options.n_repeats < 1) throw ValidationError("n_repeats must be at least 1");
  const auto& truth = truth_of(corpus, queries);
  BenchReport report = blank_report(corpus, queries, cfg, fp);
  report.warmup = options.warmup;
  report.n_repeats = options.n_repeats;

  if (options.warmup) run_search(corpus, queries, cfg);

  std::optional<double> accuracy;
  for (Index rep = 0; rep < options.n_repeats; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    const auto answers = run_search(corpus, queries, cfg);
    const auto stop = std::chrono::steady_clock::now();
    report.timings_sec.push_back(std::chrono::duration<double>(stop - start).count());

    const double acc = accuracy_of(answers, truth);
    if (accuracy && *accuracy != acc) {
      throw std::runtime_error("accuracy changed between repeats (" + format_double(*accuracy) + " vs " +
                               format_double(acc) + ")");
    }
    accuracy = acc;
  }
  report.accuracy_pct = *accuracy;
  report.median_runtime_sec = median(report.timings_sec);
  return report;
}

auto sort_key(const BenchReport& r) {
  if (const auto* t = std::get_if<TruncatedConfig>(&r.config)) {
    return std::make_tuple(0, t->dim, Index{0}, Index{0}, 0);
  }
  const auto& p = std::get<ProgressiveConfig>(r.config);
  return std::make_tuple(1, p.max_dim, p.start_dim, p.initial_k, static_cast<int>(p.pool_mode));
}

}  // namespace

BenchReport run_benchmark(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SearchConfig& cfg,
                          const BenchOptions& options) {
  return bench_one(corpus, queries, cfg, options, fingerprints_of(corpus, queries));
}

bool report_before(const BenchReport& a, const BenchReport& b) { return sort_key(a) < sort_key(b); }

SweepResult run_sweep(const EmbeddingMatrix& corpus, const QueryBatch& queries, const SweepGrid& grid,
                      const BenchOptions& options, bool accuracy_only) {
  SweepResult result;
  std::vector<SearchConfig> configs;

  for (Index d : grid.truncated_dims) {
    if (d < 1 || d > corpus.dim()) {
      result.skipped.push_back("truncated dim=" + std::to_string(d) + ": outside [1, " +
                               std::to_string(corpus.dim()) + "]");
      continue;
    }
    configs.emplace_back(TruncatedConfig{d});
  }
  for (Index dm : grid.max_dims) {
    for (Index ds : grid.start_dims) {
      for (Index k : grid.initial_ks) {
        for (PoolMode mode : grid.pool_modes) {
          ProgressiveConfig cfg{ds, dm, k, mode};
          try {
            validate(cfg, corpus.dim());
          } catch (const ValidationError& e) {
            result.skipped.push_back("progressive (Ds=" + std::to_string(ds) + ", Dm=" + std::to_string(dm) +
                                     ", K=" + std::to_string(k) + ", " + to_string(mode) + "): " + e.what());
            continue;
          }
          configs.emplace_back(cfg);
        }
      }
    }
  }
  if (configs.empty() && result.skipped.empty()) throw ValidationError("sweep grid is empty");

  const Fingerprints fp = fingerprints_of(corpus, queries);
  if (!accuracy_only) {
    for (const auto& cfg : configs) result.reports.push_back(bench_one(corpus, queries, cfg, options, fp));
  } else {
    const auto& truth = truth_of(corpus, queries);
    result.reports.resize(configs.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < configs.size(); ++i) {
      try {
        BenchReport r = blank_report(corpus, queries, configs[i], fp);
        r.warmup = false;
        r.accuracy_pct = accuracy_of(run_search(corpus, queries, configs[i]), truth);
        r.median_runtime_sec = std::numeric_limits<double>::quiet_NaN();
        result.reports[i] = std::move(r);
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::stable_sort(result.reports.begin(), result.reports.end(), report_before);
  return result;
}

// ---- CSV / JSON -------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(std::span<const BenchReport> reports, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : reports) {
    out << to_string(r.method()) << ',';
    if (const auto* t = std::get_if<TruncatedConfig>(&r.config)) {
      out << ',' << t->dim << ",,,";
    } else {
      const auto& p = std::get<ProgressiveConfig>(r.config);
      out << p.start_dim << ',' << p.max_dim << ',' << p.initial_k << ',' << to_string(p.pool_mode) << ',';
    }
    out << format_double(r.accuracy_pct) << ',';
    if (!std::isnan(r.median_runtime_sec)) out << format_double(r.median_runtime_sec);
    out << ',' << r.n_repeats << ',' << r.n_queries << ',' << r.n_docs << ',' << r.corpus_hash << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T parse_field(const std::string& s, std::size_t lineno) {
  T value{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FormatError(FormatErrc::malformed, "csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return value;
}

}  // namespace

std::vector<BenchReport> parse_csv(std::istream& in) {
  std::vector<BenchReport> reports;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FormatError(FormatErrc::malformed, "csv header does not match");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 11) {
      throw FormatError(FormatErrc::malformed, "csv line " + std::to_string(lineno) + ": expected 11 fields");
    }
    BenchReport r;
    if (f[0] == "truncated") {
      r.config = TruncatedConfig{parse_field<Index>(f[2], lineno)};
    } else if (f[0] == "progressive") {
      r.config = ProgressiveConfig{parse_field<Index>(f[1], lineno), parse_field<Index>(f[2], lineno),
                                   parse_field<Index>(f[3], lineno), parse_pool_mode(f[4])};
    } else {
      throw FormatError(FormatErrc::malformed, "csv line " + std::to_string(lineno) + ": unknown method " + f[0]);
    }
    r.accuracy_pct = parse_field<double>(f[5], lineno);
    r.median_runtime_sec =
        f[6].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_field<double>(f[6], lineno);
    r.n_repeats = parse_field<Index>(f[7], lineno);
    r.n_queries = parse_field<Index>(f[8], lineno);
    r.n_docs = parse_field<Index>(f[9], lineno);
    r.corpus_hash = f[10];
    reports.push_back(std::move(r));
  }
  return reports;
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method());
  if (const auto* t = std::get_if<TruncatedConfig>(&r.config)) {
    j["start_dim"] = nullptr;
    j["max_dim"] = t->dim;
    j["initial_k"] = nullptr;
    j["pool_mode"] = nullptr;
  } else {
    const auto& p = std::get<ProgressiveConfig>(r.config);
    j["start_dim"] = p.start_dim;
    j["max_dim"] = p.max_dim;
    j["initial_k"] = p.initial_k;
    j["pool_mode"] = to_string(p.pool_mode);
  }
  j["accuracy_pct"] = r.accuracy_pct;
  j["median_runtime_sec"] = std::isnan(r.median_runtime_sec) ? nlohmann::json(nullptr) : nlohmann::json(r.median_runtime_sec);
  j["timings_sec"] = r.timings_sec;
  j["n_repeats"] = r.n_repeats;
  j["n_queries"] = r.n_queries;
  j["n_docs"] = r.n_docs;
  j["corpus_hash"] = r.corpus_hash;
  j["query_hash"] = r.query_hash;
  j["threads"] = r.threads;
  j["warmup"] = r.warmup;
  return j;
}

nlohmann::json to_json(std::span<const BenchReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

}  // namespace progsearch
