#include "progsearch/vecstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "progsearch/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary format I/O assumes a little-endian host");

namespace progsearch {

const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::bad_version: return "unsupported version";
    case FormatErrc::truncated: return "truncated file";
    case FormatErrc::zero_dim: return "zero dimension";
    case FormatErrc::duplicate_id: return "duplicate id";
    case FormatErrc::non_finite: return "non-finite element";
    case FormatErrc::malformed: return "malformed input";
  }
  return "unknown";
}

namespace {

void check_ids(std::span<const DocId> ids) {
  std::vector<DocId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) {
    throw FormatError(FormatErrc::duplicate_id, "id " + std::to_string(*dup) + " appears more than once");
  }
}

void check_finite(const RowMatrixXf& data) {
  if (!data.allFinite()) {
    for (Index r = 0; r < data.rows(); ++r) {
      for (Index c = 0; c < data.cols(); ++c) {
        if (!std::isfinite(data(r, c))) {
          throw FormatError(FormatErrc::non_finite,
                            "row " + std::to_string(r) + " column " + std::to_string(c));
        }
      }
    }
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

MatrixHeader read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[4];
  if (!in.read(magic, 4)) {
    throw FormatError(FormatErrc::truncated, path.string() + ": missing header");
  }
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(FormatErrc::bad_magic, path.string());
  }
  MatrixHeader h;
  std::uint32_t reserved = 0;
  if (!get(in, h.version) || !get(in, h.n_rows) || !get(in, h.dim) || !get(in, reserved)) {
    throw FormatError(FormatErrc::truncated, path.string() + ": short header");
  }
  if (h.version != kFormatVersion) {
    throw FormatError(FormatErrc::bad_version, path.string() + ": version " + std::to_string(h.version));
  }
  if (h.dim == 0) {
    throw FormatError(FormatErrc::zero_dim, path.string());
  }
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return in;
}

}  // namespace

// ---- EmbeddingMatrix ------------------------------------------------------

EmbeddingMatrix::EmbeddingMatrix(RowMatrixXf data, std::vector<DocId> ids)
    : data_(std::move(data)), ids_(std::move(ids)) {
  validate();
}

EmbeddingMatrix::EmbeddingMatrix(RowMatrixXf data) : data_(std::move(data)) {
  ids_.resize(static_cast<std::size_t>(data_.rows()));
  std::iota(ids_.begin(), ids_.end(), DocId{0});
  validate();
}

void EmbeddingMatrix::validate() const {
  if (data_.cols() == 0) {
    throw FormatError(FormatErrc::zero_dim, "matrix has no columns");
  }
  if (static_cast<Index>(ids_.size()) != data_.rows()) {
    throw ValidationError("id count " + std::to_string(ids_.size()) + " != row count " +
                          std::to_string(data_.rows()));
  }
  check_ids(ids_);
  check_finite(data_);
}

std::optional<Index> EmbeddingMatrix::find(DocId id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<Index>(it - ids_.begin());
}

MatrixView EmbeddingMatrix::view() const { return MatrixView(ConstRowsRef(data_), ids_); }

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  if (dim() != other.dim() || n_rows() != other.n_rows() || ids_ != other.ids_) return false;
  // Bitwise so that -0.0 vs 0.0 counts as a difference.
  return std::memcmp(data_.data(), other.data_.data(), sizeof(float) * data_.size()) == 0;
}

MatrixView MatrixView::prefix(Index d) const {
  if (d < 1 || d > dim()) {
    throw ValidationError("prefix width " + std::to_string(d) + " outside [1, " + std::to_string(dim()) + "]");
  }
  return MatrixView(ConstRowsRef(rows_.leftCols(d)), ids_);
}

MatrixView prefix_view(const EmbeddingMatrix& m, Index d) { return m.view().prefix(d); }

void check_against(const QueryBatch& queries, const EmbeddingMatrix& corpus) {
  if (queries.dim() != corpus.dim()) {
    throw ValidationError("query dim " + std::to_string(queries.dim()) + " != corpus dim " +
                          std::to_string(corpus.dim()));
  }
  if (queries.ground_truth) {
    if (static_cast<Index>(queries.ground_truth->size()) != queries.n_queries()) {
      throw ValidationError("ground truth length does not match query count");
    }
    IdIndex index(corpus.ids());
    for (DocId id : *queries.ground_truth) {
      if (!index.find(id)) {
        throw ValidationError("ground-truth id " + std::to_string(id) + " not in corpus");
      }
    }
  }
}

IdIndex::IdIndex(std::span<const DocId> ids) {
  sorted_.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) sorted_.emplace_back(ids[i], static_cast<Index>(i));
  std::sort(sorted_.begin(), sorted_.end());
}

std::optional<Index> IdIndex::find(DocId id) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::make_pair(id, Index{0}));
  if (it == sorted_.end() || it->first != id) return std::nullopt;
  return it->second;
}

// ---- binary format --------------------------------------------------------

MatrixHeader read_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_header(in, path);
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  MatrixHeader h = read_header(in, path);

  // Reject sizes the file cannot possibly hold before allocating.
  std::error_code ec;
  auto file_size = std::filesystem::file_size(path, ec);
  if (!ec && file_size < encoded_size(h.n_rows, h.dim)) {
    throw FormatError(FormatErrc::truncated, path.string() + ": expected " +
                                                 std::to_string(encoded_size(h.n_rows, h.dim)) +
                                                 " bytes, found " + std::to_string(file_size));
  }

  const auto n = static_cast<Index>(h.n_rows);
  std::vector<DocId> ids(h.n_rows);
  RowMatrixXf data(n, static_cast<Index>(h.dim));
  if (!in.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(ids.size() * 8)) ||
      !in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 4))) {
    throw FormatError(FormatErrc::truncated, path.string());
  }
  return EmbeddingMatrix(std::move(data), std::move(ids));
}

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  out.write(kMagic, 4);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint64_t>(m.n_rows()));
  put(out, static_cast<std::uint32_t>(m.dim()));
  put(out, std::uint32_t{0});
  out.write(reinterpret_cast<const char*>(m.ids().data()), static_cast<std::streamsize>(m.ids().size() * 8));
  out.write(reinterpret_cast<const char*>(m.data().data()), static_cast<std::streamsize>(m.data().size() * 4));
  out.flush();
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t fingerprint(const EmbeddingMatrix& m) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t shape[2] = {static_cast<std::uint64_t>(m.n_rows()), static_cast<std::uint64_t>(m.dim())};
  fnv(h, shape, sizeof(shape));
  fnv(h, m.ids().data(), m.ids().size() * 8);
  fnv(h, m.data().data(), static_cast<std::size_t>(m.data().size()) * 4);
  return h;
}

std::uint64_t fingerprint(const RowMatrixXf& data) {
  std::uint64_t h = kFnvOffset;
  const std::uint64_t shape[2] = {static_cast<std::uint64_t>(data.rows()), static_cast<std::uint64_t>(data.cols())};
  fnv(h, shape, sizeof(shape));
  fnv(h, data.data(), static_cast<std::size_t>(data.size()) * 4);
  return h;
}

std::string to_hex(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xF];
  return s;
}

// ---- sidecars and converters ---------------------------------------------

std::filesystem::path meta_path(const std::filesystem::path& matrix_path) {
  return std::filesystem::path(matrix_path.string() + ".meta.jsonl");
}

void write_meta(const std::vector<DocText>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    out << nlohmann::json{{"id", r.id}, {"text", r.text}}.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<DocText> read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<DocText> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      records.push_back({j.at("id").get<DocId>(), j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatErrc::malformed, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

namespace {

template <typename T>
T parse_number(std::string_view field, const std::string& where) {
  std::string s(field);
  std::size_t used = 0;
  T value{};
  try {
    if constexpr (std::is_same_v<T, float>) {
      value = std::stof(s, &used);
    } else {
      if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
      value = std::stoull(s, &used);
    }
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (s.empty() || used != s.size()) {
    throw FormatError(FormatErrc::malformed, where + ": bad number '" + s + "'");
  }
  return value;
}

}  // namespace

EmbeddingMatrix import_csv(const std::filesystem::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<DocId> ids;
  std::vector<float> values;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);

    std::stringstream fields(line);
    std::string field;
    std::getline(fields, field, ',');
    ids.push_back(parse_number<DocId>(field, where));
    std::size_t count = 0;
    while (std::getline(fields, field, ',')) {
      values.push_back(parse_number<float>(field, where));
      ++count;
    }
    if (count == 0) throw FormatError(FormatErrc::zero_dim, where);
    if (width == 0) width = count;
    if (count != width) {
      throw FormatError(FormatErrc::malformed,
                        where + ": " + std::to_string(count) + " values, expected " + std::to_string(width));
    }
  }
  if (width == 0) throw FormatError(FormatErrc::zero_dim, path.string() + ": no rows");

  RowMatrixXf data = Eigen::Map<RowMatrixXf>(values.data(), static_cast<Index>(ids.size()), static_cast<Index>(width));
  if (normalize) {
    for (Index r = 0; r < data.rows(); ++r) {
      float n = data.row(r).norm();
      if (n > 0) data.row(r) /= n;
    }
  }
  return EmbeddingMatrix(std::move(data), std::move(ids));
}

void write_truth(std::span<const DocId> truth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "query_index,truth_doc_id\n";
  for (std::size_t i = 0; i < truth.size(); ++i) out << i << ',' << truth[i] << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<DocId> read_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<DocId> truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("query_index", 0) == 0) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(FormatErrc::malformed, where + ": expected two fields");
    auto index = parse_number<DocId>(std::string_view(line).substr(0, comma), where);
    if (index != truth.size()) {
      throw FormatError(FormatErrc::malformed, where + ": query_index out of order");
    }
    truth.push_back(parse_number<DocId>(std::string_view(line).substr(comma + 1), where));
  }
  return truth;
}

EmbeddingMatrix as_matrix(const QueryBatch& queries) { return EmbeddingMatrix(queries.data); }

QueryBatch as_queries(const EmbeddingMatrix& m, std::optional<std::vector<DocId>> truth) {
  QueryBatch q{m.data(), std::move(truth)};
  if (q.ground_truth && static_cast<Index>(q.ground_truth->size()) != q.n_queries()) {
    throw ValidationError("truth has " + std::to_string(q.ground_truth->size()) + " entries for " +
                          std::to_string(q.n_queries()) + " queries");
  }
  return q;
}

}  // namespace progsearch
