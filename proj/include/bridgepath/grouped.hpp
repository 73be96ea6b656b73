#pragma once

#include <Eigen/Core>
#include <numeric>
#include <utility>
#include <vector>

#include "bridgepath/errors.hpp"

namespace bridgepath {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Partition of a flat parameter vector into m contiguous blocks.
class BlockLayout {
 public:
  BlockLayout() = default;

  explicit BlockLayout(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
    require(!sizes_.empty(), "BlockLayout: need at least one block");
    offsets_.reserve(sizes_.size());
    Index off = 0;
    for (Index s : sizes_) {
      require(s >= 1, "BlockLayout: block sizes must be >= 1");
      offsets_.push_back(off);
      off += s;
    }
    total_ = off;
  }

  /// Single block covering the whole vector.
  static BlockLayout single(Index p) { return BlockLayout(std::vector<Index>{p}); }

  Index blocks() const { return static_cast<Index>(sizes_.size()); }
  Index size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
  Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  Index total() const { return total_; }
  const std::vector<Index>& sizes() const { return sizes_; }

  /// Block index owning flat coordinate j.
  Index block_of(Index j) const {
    Index i = 0;
    while (i + 1 < blocks() && j >= offset(i + 1)) ++i;
    return i;
  }

  friend bool operator==(const BlockLayout& a, const BlockLayout& b) {
    return a.sizes_ == b.sizes_;
  }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// A parameter vector together with its block partition. The flat storage is
/// authoritative; block views are segments of it.
class GroupedVector {
 public:
  GroupedVector() = default;

  GroupedVector(BlockLayout layout, VectorXd data)
      : layout_(std::move(layout)), data_(std::move(data)) {
    require(data_.size() == layout_.total(),
            "GroupedVector: data length does not match layout");
  }

  static GroupedVector zero(const BlockLayout& layout) {
    return GroupedVector(layout, VectorXd::Zero(layout.total()));
  }

  const BlockLayout& layout() const { return layout_; }
  const VectorXd& flat() const { return data_; }
  VectorXd& flat() { return data_; }
  Index size() const { return data_.size(); }

  auto block(Index i) const { return data_.segment(layout_.offset(i), layout_.size(i)); }
  auto block(Index i) { return data_.segment(layout_.offset(i), layout_.size(i)); }

  double operator[](Index j) const { return data_[j]; }

 private:
  BlockLayout layout_;
  VectorXd data_;
};

}  // namespace bridgepath
