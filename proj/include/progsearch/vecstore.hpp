#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace progsearch {

using DocId = std::uint64_t;
using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixXf = RowMatrix<float>;

/// Read-only window over the leading columns of a row-major matrix.
using ConstRowsRef = Eigen::Ref<const RowMatrixXf, 0, Eigen::OuterStride<>>;

class EmbeddingMatrix;

/// Rows of a matrix restricted to the first `dim()` coordinates. Does not own
/// its storage; the source matrix must outlive the view.
class MatrixView {
 public:
  MatrixView(ConstRowsRef rows, std::span<const DocId> ids) : rows_(rows), ids_(ids) {}

  Index n_rows() const { return rows_.rows(); }
  Index dim() const { return rows_.cols(); }
  const ConstRowsRef& rows() const { return rows_; }
  std::span<const DocId> ids() const { return ids_; }

  std::span<const float> row(Index i) const {
    return {rows_.row(i).data(), static_cast<std::size_t>(rows_.cols())};
  }
  /// Pointer stride between consecutive rows, in floats.
  Index stride() const { return rows_.outerStride(); }
  const float* data() const { return rows_.data(); }

  MatrixView prefix(Index d) const;

 private:
  ConstRowsRef rows_;
  std::span<const DocId> ids_;
};

/// N x D float32 vectors with unique 64-bit document ids. Immutable once
/// constructed.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  /// Validates ids (unique, one per row) and data (finite, dim > 0).
  EmbeddingMatrix(RowMatrixXf data, std::vector<DocId> ids);
  /// Rows get ids 0..N-1.
  explicit EmbeddingMatrix(RowMatrixXf data);

  Index n_rows() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }
  const RowMatrixXf& data() const { return data_; }
  std::span<const DocId> ids() const { return ids_; }
  std::span<const float> row(Index i) const {
    return {data_.row(i).data(), static_cast<std::size_t>(data_.cols())};
  }

  /// Row index for `id`, or nullopt. Linear scan; build an IdIndex for bulk lookups.
  std::optional<Index> find(DocId id) const;

  MatrixView view() const;

  bool operator==(const EmbeddingMatrix& other) const;

 private:
  void validate() const;

  RowMatrixXf data_;
  std::vector<DocId> ids_;
};

MatrixView prefix_view(const EmbeddingMatrix& m, Index d);

/// Q x D query vectors plus optional ground-truth document ids.
struct QueryBatch {
  RowMatrixXf data;
  std::optional<std::vector<DocId>> ground_truth;

  Index n_queries() const { return data.rows(); }
  Index dim() const { return data.cols(); }
  std::span<const float> row(Index i) const {
    return {data.row(i).data(), static_cast<std::size_t>(data.cols())};
  }
};

/// Throws ValidationError if dims differ or a truth id is not in `corpus`.
void check_against(const QueryBatch& queries, const EmbeddingMatrix& corpus);

/// Sorted id -> row lookup table.
class IdIndex {
 public:
  explicit IdIndex(std::span<const DocId> ids);
  std::optional<Index> find(DocId id) const;

 private:
  std::vector<std::pair<DocId, Index>> sorted_;
};

// ---- binary format --------------------------------------------------------
//
// Little-endian:
//   "PGSV" | u32 version=1 | u64 n_rows | u32 dim | u32 reserved=0
//   | n_rows x u64 id | n_rows*dim x f32 row-major

inline constexpr char kMagic[4] = {'P', 'G', 'S', 'V'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4 + 4;

struct MatrixHeader {
  std::uint32_t version = kFormatVersion;
  std::uint64_t n_rows = 0;
  std::uint32_t dim = 0;
};

MatrixHeader read_header(const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// Encoded file size for an n_rows x dim matrix.
constexpr std::uint64_t encoded_size(std::uint64_t n_rows, std::uint64_t dim) {
  return kHeaderBytes + n_rows * 8 + n_rows * dim * 4;
}

/// 64-bit FNV-1a over dim, ids and raw float bits. Stable across platforms.
std::uint64_t fingerprint(const EmbeddingMatrix& m);
std::uint64_t fingerprint(const RowMatrixXf& data);
std::string to_hex(std::uint64_t h);

// ---- sidecars and converters ---------------------------------------------

struct DocText {
  DocId id;
  std::string text;
};

/// `<matrix path>.meta.jsonl`
std::filesystem::path meta_path(const std::filesystem::path& matrix_path);
void write_meta(const std::vector<DocText>& records, const std::filesystem::path& path);
std::vector<DocText> read_meta(const std::filesystem::path& path);

/// Each line: `id,f0,f1,...`. Blank lines are skipped; all rows must agree on
/// width. With `normalize`, rows are scaled to unit L2 norm.
EmbeddingMatrix import_csv(const std::filesystem::path& path, bool normalize = false);

/// Truth file: header `query_index,truth_doc_id`, then one row per query in order.
void write_truth(std::span<const DocId> truth, const std::filesystem::path& path);
std::vector<DocId> read_truth(const std::filesystem::path& path);

/// Queries share the matrix format; row ids are the query indices.
EmbeddingMatrix as_matrix(const QueryBatch& queries);
QueryBatch as_queries(const EmbeddingMatrix& m, std::optional<std::vector<DocId>> truth = std::nullopt);

}  // namespace progsearch
