#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "progsearch/bench.hpp"
#include "progsearch/datagen.hpp"
#include "progsearch/errors.hpp"
#include "progsearch/parallel.hpp"
#include "progsearch/progressive.hpp"
#include "progsearch/vecstore.hpp"

namespace progsearch::cli {

namespace fs = std::filesystem;

std::string format_distance(double d) {
  std::string s = format_double(d);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

/// Collects every validation problem so they are reported together.
class Problems {
 public:
  void add(std::string message) { items_.push_back(std::move(message)); }
  void raise() const {
    if (items_.empty()) return;
    std::string joined;
    for (const auto& item : items_) joined += (joined.empty() ? "" : "; ") + item;
    throw ValidationError(joined);
  }

 private:
  std::vector<std::string> items_;
};

struct MethodFlags {
  CLI::Option* truncated = nullptr;
  CLI::Option* progressive = nullptr;
  CLI::Option* dim = nullptr;
  CLI::Option* start_dim = nullptr;
  CLI::Option* max_dim = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* pool = nullptr;

  Index dim_value = 0;
  Index start_dim_value = 0;
  Index max_dim_value = 0;
  Index k_value = 0;
  std::string pool_value = "per-query";

  void attach(CLI::App* sub) {
    truncated = sub->add_flag("--truncated", "Exact 1-NN on the first --dim coordinates");
    progressive = sub->add_flag("--progressive", "Coarse-to-fine progressive search");
    dim = sub->add_option("--dim", dim_value, "Truncation width");
    start_dim = sub->add_option("--start-dim", start_dim_value, "First-stage width");
    max_dim = sub->add_option("--max-dim", max_dim_value, "Final-stage width");
    k = sub->add_option("--k", k_value, "Neighbours kept per query after the first stage");
    pool = sub->add_option("--pool", pool_value, "Candidate pool mode: per-query or shared")->capture_default_str();
  }

  SearchConfig resolve(Problems& problems) const {
    const bool t = truncated->count() > 0;
    const bool p = progressive->count() > 0;
    if (t == p) {
      problems.add("choose exactly one of --truncated or --progressive");
      return TruncatedConfig{};
    }
    if (t) {
      if (!dim->count()) problems.add("--truncated requires --dim");
      for (const auto* opt : {start_dim, max_dim, k, pool}) {
        if (opt->count()) problems.add(opt->get_name() + " only applies to --progressive");
      }
      return TruncatedConfig{dim_value};
    }
    if (dim->count()) problems.add("--dim only applies to --truncated");
    for (const auto* opt : {start_dim, max_dim, k}) {
      if (!opt->count()) problems.add("--progressive requires " + opt->get_name());
    }
    ProgressiveConfig cfg{start_dim_value, max_dim_value, k_value, PoolMode::per_query};
    try {
      cfg.pool_mode = parse_pool_mode(pool_value);
    } catch (const ValidationError& e) {
      problems.add(e.what());
    }
    return cfg;
  }
};

void check_config(const SearchConfig& cfg, Index corpus_dim, Problems& problems) {
  if (const auto* t = std::get_if<TruncatedConfig>(&cfg)) {
    if (t->dim < 1 || t->dim > corpus_dim) {
      problems.add("--dim " + std::to_string(t->dim) + " outside [1, " + std::to_string(corpus_dim) + "]");
    }
    return;
  }
  try {
    validate(std::get<ProgressiveConfig>(cfg), corpus_dim);
  } catch (const ValidationError& e) {
    problems.add(e.what());
  }
}

/// Header-level checks on corpus and query files before anything is loaded.
void check_pair(const fs::path& corpus, const fs::path& queries, Problems& problems, Index& corpus_dim) {
  const MatrixHeader ch = read_header(corpus);
  const MatrixHeader qh = read_header(queries);
  corpus_dim = ch.dim;
  if (ch.dim != qh.dim) {
    problems.add("query dim " + std::to_string(qh.dim) + " != corpus dim " + std::to_string(ch.dim));
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  if (p.extension() == ".pgsv") p.replace_extension();
  return fs::path(p.string() + suffix);
}

// ---- gen --------------------------------------------------------------------

struct GenFlags {
  SynthSpec spec;
  CLI::Option* n_queries = nullptr;
  std::string out;
  std::string queries_out;
  std::string truth_out;
};

int cmd_gen(GenFlags& f, std::ostream& out) {
  if (!f.n_queries->count()) f.spec.n_queries = std::min<Index>(f.spec.n_docs > 0 ? f.spec.n_docs : 1, 100);
  validate(f.spec);
  const fs::path corpus_path = f.out;
  const fs::path queries_path = f.queries_out.empty() ? sibling(corpus_path, ".queries.pgsv") : fs::path(f.queries_out);
  const fs::path truth_path = f.truth_out.empty() ? sibling(corpus_path, ".truth.csv") : fs::path(f.truth_out);

  const SynthData data = generate(f.spec);
  save_matrix(data.corpus, corpus_path);
  save_matrix(as_matrix(data.queries), queries_path);
  write_truth(*data.queries.ground_truth, truth_path);

  nlohmann::json meta = {
      {"generator", kGeneratorAlgorithm}, {"n_docs", f.spec.n_docs},         {"dim", f.spec.dim},
      {"n_clusters", f.spec.n_clusters},  {"noise_sigma", f.spec.noise_sigma}, {"decay", f.spec.decay},
      {"n_queries", f.spec.n_queries},    {"query_sigma", f.spec.query_sigma}, {"seed", f.spec.seed},
  };
  auto meta_file = open_out(fs::path(corpus_path.string() + ".gen.json"));
  meta_file << meta.dump(2) << '\n';

  out << "corpus " << corpus_path.string() << " (" << data.corpus.n_rows() << " x " << data.corpus.dim() << ")\n"
      << "queries " << queries_path.string() << " (" << data.queries.n_queries() << ")\n"
      << "truth " << truth_path.string() << '\n';
  return kOk;
}

// ---- import-csv ---------------------------------------------------------------

struct ImportFlags {
  std::string in;
  std::string out;
  bool normalize = false;
};

int cmd_import(const ImportFlags& f, std::ostream& out) {
  const EmbeddingMatrix m = import_csv(f.in, f.normalize);
  save_matrix(m, f.out);
  out << f.out << " (" << m.n_rows() << " x " << m.dim() << ")\n";
  return kOk;
}

// ---- search -------------------------------------------------------------------

struct SearchFlags {
  std::string corpus;
  std::string queries;
  std::string out;
  std::string trace;
  MethodFlags method;
};

int cmd_search(const SearchFlags& f, std::ostream& out) {
  Problems problems;
  const SearchConfig cfg = f.method.resolve(problems);
  if (!f.trace.empty() && method_of(cfg) != Method::progressive) problems.add("--trace needs --progressive");
  problems.raise();

  Index corpus_dim = 0;
  check_pair(f.corpus, f.queries, problems, corpus_dim);
  check_config(cfg, corpus_dim, problems);
  problems.raise();

  const EmbeddingMatrix corpus = load_matrix(f.corpus);
  const QueryBatch queries = as_queries(load_matrix(f.queries));
  if (corpus.n_rows() == 0) throw EmptyInputError("corpus " + f.corpus + " has no rows");

  std::vector<Neighbor> answers;
  if (!f.trace.empty()) {
    const SearchTrace trace = explain_search(corpus, queries, std::get<ProgressiveConfig>(cfg));
    answers = trace.answers;
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t q = 0; q < trace.stages.size(); ++q) {
      nlohmann::json stages = nlohmann::json::array();
      for (const StageTrace& s : trace.stages[q]) {
        stages.push_back({{"dim", s.dim},
                          {"k", s.k},
                          {"pool_before", s.pool_before},
                          {"pool_after", s.pool_after},
                          {"answer_present", s.answer_present}});
      }
      j.push_back({{"query_index", q}, {"doc_id", trace.answers[q].id}, {"stages", std::move(stages)}});
    }
    auto trace_file = open_out(f.trace);
    trace_file << j.dump(2) << '\n';
  } else {
    answers = run_search(corpus, queries, cfg);
  }

  std::ofstream file;
  if (!f.out.empty()) file = open_out(f.out);
  std::ostream& sink = f.out.empty() ? out : file;
  for (std::size_t q = 0; q < answers.size(); ++q) {
    sink << q << ',' << answers[q].id << ',' << format_distance(std::sqrt(answers[q].sq_distance)) << '\n';
  }
  if (!sink) throw IoError("failed writing search results");
  return kOk;
}

// ---- bench / sweep ------------------------------------------------------------

struct ReportFlags {
  std::string corpus;
  std::string queries;
  std::string truth;
  Index repeats = 10;
  bool no_warmup = false;
  std::string csv;
  std::string json;
};

struct Workload {
  EmbeddingMatrix corpus;
  QueryBatch queries;
};

Workload load_workload(const ReportFlags& f) {
  Workload w{load_matrix(f.corpus), as_queries(load_matrix(f.queries), read_truth(f.truth))};
  if (w.corpus.n_rows() == 0) throw EmptyInputError("corpus " + f.corpus + " has no rows");
  if (w.queries.n_queries() == 0) throw EmptyInputError("query file " + f.queries + " has no rows");
  check_against(w.queries, w.corpus);
  return w;
}

void emit_reports(const ReportFlags& f, std::span<const BenchReport> reports, std::ostream& out) {
  if (f.csv.empty()) {
    write_csv(reports, out);
  } else {
    auto file = open_out(f.csv);
    write_csv(reports, file);
    if (!file) throw IoError("failed writing " + f.csv);
  }
  if (!f.json.empty()) {
    auto file = open_out(f.json);
    file << to_json(reports).dump(2) << '\n';
    if (!file) throw IoError("failed writing " + f.json);
  }
}

void check_repeats(const ReportFlags& f, Problems& problems) {
  if (f.repeats < 1) problems.add("--repeats must be at least 1");
}

struct BenchFlags {
  ReportFlags report;
  MethodFlags method;
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  Problems problems;
  const SearchConfig cfg = f.method.resolve(problems);
  check_repeats(f.report, problems);
  problems.raise();

  Index corpus_dim = 0;
  check_pair(f.report.corpus, f.report.queries, problems, corpus_dim);
  check_config(cfg, corpus_dim, problems);
  problems.raise();

  const Workload w = load_workload(f.report);
  const BenchReport report =
      run_benchmark(w.corpus, w.queries, cfg, BenchOptions{f.report.repeats, !f.report.no_warmup});
  emit_reports(f.report, std::span<const BenchReport>(&report, 1), out);
  return kOk;
}

struct SweepFlags {
  ReportFlags report;
  std::vector<Index> dims;
  std::vector<Index> start_dims;
  std::vector<Index> max_dims;
  std::vector<Index> ks;
  std::vector<std::string> pools{"per-query"};
  std::string skip_log;
  bool accuracy_only = false;
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  Problems problems;
  check_repeats(f.report, problems);
  SweepGrid grid;
  grid.truncated_dims = f.dims;
  grid.start_dims = f.start_dims;
  grid.max_dims = f.max_dims;
  grid.initial_ks = f.ks;
  grid.pool_modes.clear();
  for (const auto& p : f.pools) {
    try {
      grid.pool_modes.push_back(parse_pool_mode(p));
    } catch (const ValidationError& e) {
      problems.add(e.what());
    }
  }
  const bool any_progressive = !f.start_dims.empty() || !f.max_dims.empty() || !f.ks.empty();
  if (any_progressive && (f.start_dims.empty() || f.max_dims.empty() || f.ks.empty())) {
    problems.add("progressive sweeps need --start-dims, --max-dims and --ks together");
  }
  if (f.dims.empty() && !any_progressive) problems.add("sweep grid is empty");
  problems.raise();

  Index corpus_dim = 0;
  check_pair(f.report.corpus, f.report.queries, problems, corpus_dim);
  problems.raise();

  const Workload w = load_workload(f.report);
  const SweepResult result = run_sweep(w.corpus, w.queries, grid,
                                       BenchOptions{f.report.repeats, !f.report.no_warmup}, f.accuracy_only);
  for (const auto& line : result.skipped) err << "skipped: " << line << '\n';
  if (!f.skip_log.empty()) {
    auto file = open_out(f.skip_log);
    for (const auto& line : result.skipped) file << line << '\n';
  }
  emit_reports(f.report, result.reports, out);
  return kOk;
}

// ---- info -----------------------------------------------------------------------

struct InfoFlags {
  std::string path;
  bool hash = false;
};

int cmd_info(const InfoFlags& f, std::ostream& out) {
  const MatrixHeader h = read_header(f.path);
  out << "format PGSV\n"
      << "version " << h.version << '\n'
      << "rows " << h.n_rows << '\n'
      << "dim " << h.dim << '\n'
      << "bytes " << encoded_size(h.n_rows, h.dim) << '\n';
  const fs::path meta = meta_path(f.path);
  out << "meta " << (fs::exists(meta) ? meta.string() : std::string("none")) << '\n';
  if (f.hash) out << "fingerprint " << to_hex(fingerprint(load_matrix(f.path))) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated and progressive exact nearest-neighbour search", "progsearch"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file mirroring the command-line flags");

  int threads = 0;
  app.add_option("--threads", threads, "Search worker threads (default: all cores)")
      ->envname("PROGSEARCH_THREADS");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic clustered corpus with queries and truth");
  gen_cmd->add_option("--docs", gen.spec.n_docs, "Number of documents")->required();
  gen_cmd->add_option("--dim", gen.spec.dim, "Dimensionality")->required();
  gen_cmd->add_option("--clusters", gen.spec.n_clusters)->capture_default_str();
  gen_cmd->add_option("--noise-sigma", gen.spec.noise_sigma)->capture_default_str();
  gen_cmd->add_option("--decay", gen.spec.decay, "Per-coordinate spread factor in (0, 1]")->capture_default_str();
  gen.n_queries = gen_cmd->add_option("--n-queries", gen.spec.n_queries, "Queries (default min(docs, 100))");
  gen_cmd->add_option("--query-sigma", gen.spec.query_sigma)->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Corpus path")->required();
  gen_cmd->add_option("--queries-out", gen.queries_out, "Default: <out>.queries.pgsv");
  gen_cmd->add_option("--truth-out", gen.truth_out, "Default: <out>.truth.csv");

  ImportFlags import;
  auto* import_cmd = app.add_subcommand("import-csv", "Convert id,f0,f1,... lines to the binary format");
  import_cmd->add_option("--in", import.in)->required();
  import_cmd->add_option("--out", import.out)->required();
  import_cmd->add_flag("--normalize", import.normalize, "Scale rows to unit L2 norm");

  SearchFlags search;
  auto* search_cmd = app.add_subcommand("search", "Print query_index,doc_id,distance per query");
  search_cmd->add_option("--corpus", search.corpus)->required();
  search_cmd->add_option("--queries", search.queries)->required();
  search_cmd->add_option("--out", search.out, "Write results here instead of stdout");
  search_cmd->add_option("--trace", search.trace, "Write a per-query stage trace (JSON)");
  search.method.attach(search_cmd);

  auto attach_report = [](CLI::App* sub, ReportFlags& r) {
    sub->add_option("--corpus", r.corpus)->required();
    sub->add_option("--queries", r.queries)->required();
    sub->add_option("--truth", r.truth, "CSV query_index,truth_doc_id")->required();
    sub->add_option("--repeats", r.repeats)->capture_default_str();
    sub->add_flag("--no-warmup", r.no_warmup, "Skip the untimed warm-up run");
    sub->add_option("--csv", r.csv, "Write the CSV report here instead of stdout");
    sub->add_option("--json", r.json, "Also write a JSON report with per-repeat timings");
  };

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time one configuration and report accuracy");
  attach_report(bench_cmd, bench.report);
  bench.method.attach(bench_cmd);

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Benchmark a grid of configurations");
  attach_report(sweep_cmd, sweep.report);
  sweep_cmd->add_option("--dims", sweep.dims, "Truncated widths")->delimiter(',');
  sweep_cmd->add_option("--start-dims", sweep.start_dims)->delimiter(',');
  sweep_cmd->add_option("--max-dims", sweep.max_dims)->delimiter(',');
  sweep_cmd->add_option("--ks", sweep.ks, "Initial k values")->delimiter(',');
  sweep_cmd->add_option("--pools", sweep.pools, "Pool modes")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--skip-log", sweep.skip_log, "Write skipped combinations here");
  sweep_cmd->add_flag("--accuracy-only", sweep.accuracy_only, "Run configs in parallel without timing");

  InfoFlags info;
  auto* info_cmd = app.add_subcommand("info", "Print a matrix file header");
  info_cmd->add_option("path", info.path)->required();
  info_cmd->add_flag("--hash", info.hash, "Also load the file and print its fingerprint");

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::Success& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (threads < 0) throw ValidationError("--threads must be non-negative");
    set_num_threads(threads);
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*import_cmd) return cmd_import(import, out);
    if (*search_cmd) return cmd_search(search, out);
    if (*bench_cmd) return cmd_bench(bench, out);
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*info_cmd) return cmd_info(info, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const EmptyInputError& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace progsearch::cli
