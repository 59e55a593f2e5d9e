#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "progsearch/vecstore.hpp"

namespace progsearch {

struct Neighbor {
  DocId id = 0;
  double sq_distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Ranking order: distance, then smaller id.
inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.id < b.id);
}

/// Ascending by (sq_distance, id); length min(k, candidates).
using NeighborList = std::vector<Neighbor>;

/// Exact k nearest neighbours of every query over the first d coordinates.
/// `subset` restricts the search to those document ids. k larger than the
/// candidate count is clamped. Results do not depend on the thread count.
std::vector<NeighborList> topk(const MatrixView& corpus, const ConstRowsRef& queries, Index d, Index k,
                               std::optional<std::span<const DocId>> subset = std::nullopt);

std::vector<NeighborList> topk(const EmbeddingMatrix& corpus, const QueryBatch& queries, Index d, Index k,
                               std::optional<std::span<const DocId>> subset = std::nullopt);

std::vector<Neighbor> top1(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                           std::optional<std::span<const DocId>> subset = std::nullopt);

std::vector<Neighbor> top1(const EmbeddingMatrix& corpus, const QueryBatch& queries, Index d,
                           std::optional<std::span<const DocId>> subset = std::nullopt);

// ---- row-level scans --------------------------------------------------------
//
// These work on row positions rather than ids and skip id lookups; the
// progressive search drives them directly.

struct RowHit {
  double sq_distance;
  DocId id;
  Index row;
};

/// Every query against the same candidate rows; all rows when `rows` is nullopt.
/// Rows must be distinct.
std::vector<std::vector<RowHit>> scan_shared(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                                             Index k, std::optional<std::span<const Index>> rows = std::nullopt);

/// Query q against its own candidate rows pools[q]; each pool must be
/// non-empty with distinct rows.
std::vector<std::vector<RowHit>> scan_per_query(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                                                Index k, const std::vector<std::vector<Index>>& pools);

}  // namespace progsearch
