// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstring>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "progsearch/bench.hpp"
#include "progsearch/datagen.hpp"
#include "progsearch/exact_knn.hpp"
#include "progsearch/progressive.hpp"
#include "progsearch/vecstore.hpp"
#include "temp_dir.hpp"

namespace ps = progsearch;
using ps::DocId;
using ps::Index;
using ps::RowMatrixXf;

namespace {

// Pinned tolerances.
constexpr double kOracleRelTol = 1e-12;      // AC1: kernel vs sequential double sum, real-valued data
constexpr double kBandBelow = 1.0;           // AC4: points below exact@Ds
constexpr double kBandAbove = 0.5;           // AC4: points above exact@Dm
constexpr double kMaxInversion = 0.5;        // AC5
constexpr int kMaxInversions = 1;            // AC5
constexpr double kSpeedupRatio = 0.5;        // AC6: progressive median / truncated median
constexpr double kMaxAccuracyLoss = 1.0;     // AC6
constexpr int kSpeedRepeats = 3;             // AC6, after one warm-up run

struct Verdict {
  bool pass = true;
  std::string detail;
};

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ps::QueryBatch batch_of(RowMatrixXf q) { return ps::QueryBatch{std::move(q), std::nullopt}; }

std::vector<DocId> ids_of(const std::vector<ps::Neighbor>& v) {
  std::vector<DocId> out;
  for (const auto& n : v) out.push_back(n.id);
  return out;
}

double accuracy(const ps::SynthData& data, const ps::SearchConfig& cfg) {
  return ps::top1_accuracy(ids_of(ps::run_search(data.corpus, data.queries, cfg)), *data.queries.ground_truth);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The calibrated clustered corpus shared by AC4 and AC5.
ps::SynthSpec calibrated_spec() {
  ps::SynthSpec s;
  s.n_docs = 10000;
  s.dim = 256;
  s.n_clusters = 50;
  s.noise_sigma = 0.5;
  s.decay = 0.98;
  s.n_queries = 500;
  s.query_sigma = 0.5;
  s.seed = 7;
  return s;
}

Verdict ac1_oracle() {
  std::mt19937_64 rng(1001);
  Verdict v;
  int instances = 0, grid = 0;
  for (; instances < 120; ++instances) {
    const bool integer_grid = instances % 3 == 0;
    grid += integer_grid;
    const Index n = 1 + static_cast<Index>(rng() % 2000);
    const Index dim = 1 + static_cast<Index>(rng() % 128);
    const Index nq = 1 + static_cast<Index>(rng() % 50);
    const Index k = 1 + static_cast<Index>(rng() % 64);
    const Index d = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(dim));
    const RowMatrixXf rows = ps::oracle::random_matrix(rng, n, dim, integer_grid);
    const auto ids = ps::oracle::random_ids(rng, n);
    const RowMatrixXf q = ps::oracle::random_matrix(rng, nq, dim, integer_grid);
    const auto got = ps::topk(ps::EmbeddingMatrix(rows, ids), batch_of(q), d, k);
    const auto want = ps::oracle::topk(rows, ids, q, d, k);
    for (std::size_t qi = 0; qi < want.size() && v.pass; ++qi) {
      if (got[qi].size() != want[qi].size()) {
        v = {false, fmt("instance %d query %zu: %zu results, oracle %zu", instances, qi, got[qi].size(), want[qi].size())};
        break;
      }
      for (std::size_t r = 0; r < want[qi].size(); ++r) {
        const double a = got[qi][r].sq_distance, b = want[qi][r].sq_distance;
        const bool dist_ok = integer_grid ? a == b : std::abs(a - b) <= kOracleRelTol * std::max(1.0, b);
        if (got[qi][r].id != want[qi][r].id || !dist_ok) {
          v = {false, fmt("instance %d query %zu rank %zu: id %llu vs oracle %llu", instances, qi, r,
                          static_cast<unsigned long long>(got[qi][r].id),
                          static_cast<unsigned long long>(want[qi][r].id))};
          break;
        }
      }
    }
    if (!v.pass) break;
  }
  if (v.pass) v.detail = fmt("%d instances (%d integer-grid) identical to naive full sort", instances, grid);
  return v;
}

Verdict ac2_degenerate() {
  std::mt19937_64 rng(1002);
  int configs = 0;
  for (int t = 0; t < 40; ++t) {
    const Index n = 1 + static_cast<Index>(rng() % 1500);
    const Index dim = 1 + static_cast<Index>(rng() % 96);
    const Index nq = 1 + static_cast<Index>(rng() % 40);
    const Index d = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(dim));
    const Index k = 1 + static_cast<Index>(rng() % 64);
    const ps::EmbeddingMatrix corpus(ps::oracle::random_matrix(rng, n, dim, t % 2 == 0), ps::oracle::random_ids(rng, n));
    const ps::QueryBatch q = batch_of(ps::oracle::random_matrix(rng, nq, dim, t % 2 == 0));
    const auto truncated = ps::top1(corpus, q, d);
    for (ps::PoolMode mode : {ps::PoolMode::per_query, ps::PoolMode::shared}) {
      ++configs;
      const auto prog = ps::progressive_search(corpus, q, {d, d, k, mode});
      for (std::size_t i = 0; i < prog.size(); ++i) {
        if (prog[i].id != truncated[i].id ||
            std::memcmp(&prog[i].sq_distance, &truncated[i].sq_distance, sizeof(double)) != 0) {
          return {false, fmt("config %d (d=%lld, %s) query %zu differs", configs, static_cast<long long>(d),
                             ps::to_string(mode), i)};
        }
      }
    }
  }
  return {true, fmt("%d Ds==Dm configs bit-identical to truncated top-1, both pool modes", configs)};
}

Verdict ac3_dominance() {
  std::mt19937_64 rng(1003);
  int instances = 0;
  long long ties = 0;
  for (; instances < 120; ++instances) {
    const Index n = 2 + static_cast<Index>(rng() % 1500);
    const Index dim = 2 + static_cast<Index>(rng() % 127);
    const Index nq = 1 + static_cast<Index>(rng() % 40);
    const Index ds = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(dim));
    const Index k = 1 + static_cast<Index>(rng() % 64);
    const auto mode = instances % 2 ? ps::PoolMode::shared : ps::PoolMode::per_query;
    const RowMatrixXf rows = ps::oracle::random_matrix(rng, n, dim);
    const auto ids = ps::oracle::random_ids(rng, n);
    const RowMatrixXf q = ps::oracle::random_matrix(rng, nq, dim);
    const auto exact = ps::top1(ps::EmbeddingMatrix(rows, ids), batch_of(q), dim);
    const auto prog = ps::progressive_search(ps::EmbeddingMatrix(rows, ids), batch_of(q), {ds, dim, k, mode});
    for (std::size_t i = 0; i < prog.size(); ++i) {
      if (prog[i].sq_distance < exact[i].sq_distance) {
        return {false, fmt("instance %d query %zu: progressive %.17g < exact %.17g", instances, i,
                           prog[i].sq_distance, exact[i].sq_distance)};
      }
      if (prog[i].sq_distance == exact[i].sq_distance) {
        ++ties;
        if (prog[i].id != exact[i].id) {
          return {false, fmt("instance %d query %zu: equal distance but id %llu vs %llu", instances, i,
                             static_cast<unsigned long long>(prog[i].id), static_cast<unsigned long long>(exact[i].id))};
        }
      }
    }
  }
  return {true, fmt("%d instances, progressive never closer; %lld equal-distance answers share the exact id",
                    instances, ties)};
}

Verdict ac4_band(const ps::SynthData& data) {
  std::vector<double> exact(257, -1.0);
  auto exact_at = [&](Index d) {
    if (exact[static_cast<std::size_t>(d)] < 0) exact[static_cast<std::size_t>(d)] = accuracy(data, ps::TruncatedConfig{d});
    return exact[static_cast<std::size_t>(d)];
  };
  int configs = 0;
  std::string worst;
  double worst_margin = 1e9;
  for (Index ds : {8, 16, 32, 64}) {
    for (Index dm : {128, 256}) {
      for (Index k : {8, 32, 128}) {
        for (ps::PoolMode mode : {ps::PoolMode::per_query, ps::PoolMode::shared}) {
          ++configs;
          const double lo = exact_at(ds) - kBandBelow, hi = exact_at(dm) + kBandAbove;
          const double acc = accuracy(data, ps::ProgressiveConfig{ds, dm, k, mode});
          const double margin = std::min(acc - lo, hi - acc);
          if (margin < worst_margin) {
            worst_margin = margin;
            worst = fmt("(%lld,%lld,%lld,%s) acc %.2f in [%.2f, %.2f]", static_cast<long long>(ds),
                        static_cast<long long>(dm), static_cast<long long>(k), ps::to_string(mode), acc, lo, hi);
          }
          if (acc < lo || acc > hi) return {false, fmt("config %s outside band", worst.c_str())};
        }
      }
    }
  }
  return {true, fmt("%d configs in band; tightest %s", configs, worst.c_str())};
}

Verdict ac5_trend(const ps::SynthData& data) {
  std::vector<double> acc;
  std::string series;
  for (Index d : {8, 16, 32, 64, 128, 256}) {
    acc.push_back(accuracy(data, ps::TruncatedConfig{d}));
    series += fmt("%s%.2f", series.empty() ? "" : " / ", acc.back());
  }
  int inversions = 0;
  bool ok = true;
  for (std::size_t i = 1; i < acc.size(); ++i) {
    if (acc[i] < acc[i - 1]) {
      ++inversions;
      ok = ok && acc[i - 1] - acc[i] <= kMaxInversion;
    }
  }
  ok = ok && inversions <= kMaxInversions;
  return {ok, fmt("d=8..256: %s (%d inversions)", series.c_str(), inversions)};
}

Verdict ac6_speedup() {
  ps::SynthSpec s;
  s.n_docs = 100000;
  s.dim = 1024;
  s.n_clusters = 100;
  s.noise_sigma = 0.5;
  s.decay = 0.995;
  s.n_queries = 500;
  s.query_sigma = 0.7;
  s.seed = 11;
  const ps::SynthData data = ps::generate(s);
  const ps::BenchOptions opts{kSpeedRepeats, true};
  const auto truncated = ps::run_benchmark(data.corpus, data.queries, ps::TruncatedConfig{1024}, opts);
  const auto prog =
      ps::run_benchmark(data.corpus, data.queries, ps::ProgressiveConfig{64, 1024, 32, ps::PoolMode::shared}, opts);
  const double ratio = prog.median_runtime_sec / truncated.median_runtime_sec;
  const double loss = truncated.accuracy_pct - prog.accuracy_pct;
  return {ratio <= kSpeedupRatio && loss <= kMaxAccuracyLoss,
          fmt("truncated@1024 %.2f%% %.3fs, progressive(64,1024,32,shared) %.2f%% %.3fs, ratio %.3f, loss %.2f",
              truncated.accuracy_pct, truncated.median_runtime_sec, prog.accuracy_pct, prog.median_runtime_sec, ratio,
              loss)};
}

Verdict ac7_ladders() {
  using Ladder = std::vector<std::pair<Index, Index>>;
  const std::vector<std::pair<ps::ProgressiveConfig, Ladder>> cases{
      {{128, 512, 128}, {{128, 128}, {256, 64}, {512, 1}}},
      {{128, 2048, 16}, {{128, 16}, {256, 8}, {512, 4}, {1024, 2}, {2048, 1}}},
      {{128, 3584, 64}, {{128, 64}, {256, 32}, {512, 16}, {1024, 8}, {2048, 4}, {3584, 1}}},
      {{256, 3584, 16}, {{256, 16}, {512, 8}, {1024, 4}, {2048, 2}, {3584, 1}}},
      {{512, 3584, 16}, {{512, 16}, {1024, 8}, {2048, 4}, {3584, 1}}},
  };
  for (const auto& [cfg, want] : cases) {
    Ladder got;
    for (const ps::Stage& s : ps::build_schedule(cfg).all()) got.emplace_back(s.dim, s.k);
    if (got != want) {
      return {false, fmt("(%lld, %lld, %lld) ladder mismatch", static_cast<long long>(cfg.start_dim),
                         static_cast<long long>(cfg.max_dim), static_cast<long long>(cfg.initial_k))};
    }
  }
  return {true, "5 reference ladders reproduced exactly"};
}

Verdict ac8_harness() {
  std::mt19937_64 rng(1008);
  ps::testing::TempDir dir;
  const auto path = dir / "m.pgsv";
  for (int i = 0; i < 1000; ++i) {
    const Index n = static_cast<Index>(rng() % 40);
    const Index d = 1 + static_cast<Index>(rng() % 64);
    RowMatrixXf m = ps::oracle::random_matrix(rng, n, d);
    if (i % 10 == 0 && n > 0) m(0, 0) = -0.0f;
    const ps::EmbeddingMatrix original(m, ps::oracle::random_ids(rng, n));
    ps::save_matrix(original, path);
    if (!(ps::load_matrix(path) == original)) return {false, fmt("matrix %d did not round-trip", i)};
  }
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int n = 1; n <= 101; ++n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = (rng() % 4 == 0) ? std::round(u(rng)) : u(rng);
    if (ps::median(v) != ps::oracle::median(v)) return {false, fmt("median differs at length %d", n)};
  }
  std::vector<ps::BenchReport> reports;
  for (int i = 0; i < 50; ++i) {
    ps::BenchReport r;
    if (i % 3 == 0) {
      r.config = ps::TruncatedConfig{1 + static_cast<Index>(rng() % 4096)};
    } else {
      r.config = ps::ProgressiveConfig{1 + static_cast<Index>(rng() % 512), 512 + static_cast<Index>(rng() % 4096),
                                       1 + static_cast<Index>(rng() % 256),
                                       i % 2 ? ps::PoolMode::shared : ps::PoolMode::per_query};
    }
    r.accuracy_pct = 100.0 * static_cast<double>(rng() % 2471) / 2470.0;
    r.median_runtime_sec = i % 7 == 0 ? std::nan("") : u(rng) * u(rng) * 1e-3;
    r.n_repeats = 1 + static_cast<Index>(rng() % 20);
    r.n_queries = static_cast<Index>(rng() % 100000);
    r.n_docs = static_cast<Index>(rng() % 10000000);
    r.corpus_hash = ps::to_hex(rng());
    reports.push_back(r);
  }
  std::stringstream csv;
  ps::write_csv(reports, csv);
  const std::string first = csv.str();
  const auto back = ps::parse_csv(csv);
  if (back.size() != reports.size()) return {false, "CSV row count changed"};
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto& a = reports[i];
    const auto& b = back[i];
    const bool same_median = std::isnan(a.median_runtime_sec) ? std::isnan(b.median_runtime_sec)
                                                              : a.median_runtime_sec == b.median_runtime_sec;
    if (!(a.config == b.config) || a.accuracy_pct != b.accuracy_pct || !same_median || a.n_repeats != b.n_repeats ||
        a.n_queries != b.n_queries || a.n_docs != b.n_docs || a.corpus_hash != b.corpus_hash) {
      return {false, fmt("CSV row %zu did not re-parse identically", i)};
    }
  }
  std::stringstream again;
  ps::write_csv(back, again);
  if (again.str() != first) return {false, "re-emitted CSV differs"};
  return {true, "1000 matrices bit-exact, median n=1..101 matches sort, 50-row CSV re-parses identically"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* id, const char* name, const std::function<Verdict()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %s %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), elapsed_since(t0));
    std::fflush(stdout);
  };

  report("AC1", "oracle equivalence", ac1_oracle);
  report("AC2", "degenerate equivalence", ac2_degenerate);
  report("AC3", "distance dominance", ac3_dominance);
  const ps::SynthData calibrated = ps::generate(calibrated_spec());
  report("AC4", "accuracy band", [&] { return ac4_band(calibrated); });
  report("AC5", "monotone truncation trend", [&] { return ac5_trend(calibrated); });
  report("AC6", "desk-scale speedup", ac6_speedup);
  report("AC7", "schedule ladders", ac7_ladders);
  report("AC8", "format and harness", ac8_harness);

  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
