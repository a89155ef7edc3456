#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "types.hpp"

namespace blockpursuit {

// ---------------------------------------------------------------------------
// BlockSupport
// ---------------------------------------------------------------------------

/// Strictly increasing set of block indices.
class BlockSupport
{
public:
  BlockSupport() = default;

  /// Sorts the input; duplicates and negative indices are rejected.
  explicit BlockSupport(std::vector<Index> indices) : indices_(std::move(indices))
  {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
      throw InvalidArgument("BlockSupport: duplicate block index");
    if (!indices_.empty() && indices_.front() < 0)
      throw InvalidArgument("BlockSupport: negative block index");
  }
  BlockSupport(std::initializer_list<Index> indices)
      : BlockSupport(std::vector<Index>(indices))
  {}

  Index size() const { return static_cast<Index>(indices_.size()); }
  bool empty() const { return indices_.empty(); }
  bool contains(Index l) const
  {
    return std::binary_search(indices_.begin(), indices_.end(), l);
  }
  Index operator[](Index i) const { return indices_[static_cast<std::size_t>(i)]; }
  const std::vector<Index>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  /// Blocks of {0..num_blocks-1} not in this support, increasing.
  std::vector<Index> complement(Index num_blocks) const
  {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(std::max<Index>(0, num_blocks - size())));
    for (Index l = 0; l < num_blocks; ++l)
      if (!contains(l))
        out.push_back(l);
    return out;
  }

  friend bool operator==(const BlockSupport&, const BlockSupport&) = default;

private:
  std::vector<Index> indices_;
};

// ---------------------------------------------------------------------------
// BlockVector
// ---------------------------------------------------------------------------

template <typename Scalar>
class BlockVector
{
public:
  using scalar_type = Scalar;

  BlockVector() = default;
  BlockVector(Vector<Scalar> entries, Index block_len)
      : entries_(std::move(entries)), block_len_(block_len)
  {
    if (block_len_ <= 0)
      throw InvalidArgument("BlockVector: block length must be positive");
    if (entries_.size() % block_len_ != 0)
      throw InvalidArgument("BlockVector: block length " + std::to_string(block_len_)
                            + " does not divide length " + std::to_string(entries_.size()));
  }

  static BlockVector zeros(Index n, Index block_len)
  {
    return BlockVector(Vector<Scalar>::Zero(n), block_len);
  }

  Index size() const { return entries_.size(); }
  Index block_len() const { return block_len_; }
  Index num_blocks() const { return block_len_ == 0 ? 0 : entries_.size() / block_len_; }

  const Vector<Scalar>& vector() const { return entries_; }
  Vector<Scalar>& vector() { return entries_; }

  auto block(Index l) const { return entries_.segment(l * block_len_, block_len_); }
  auto block(Index l) { return entries_.segment(l * block_len_, block_len_); }

private:
  Vector<Scalar> entries_;
  Index block_len_ = 1;
};

// ---------------------------------------------------------------------------
// BlockDictionary
// ---------------------------------------------------------------------------

/// L x N measurement matrix partitioned into M = N/d column blocks.
///
/// The checked constructor enforces unit-norm columns and full column rank
/// of every block. `unchecked` skips both and only requires d | N.
template <typename Scalar>
class BlockDictionary
{
public:
  using scalar_type = Scalar;

  BlockDictionary() = default;

  BlockDictionary(Matrix<Scalar> entries, Index block_len)
      : BlockDictionary(std::move(entries), block_len, true)
  {}

  static BlockDictionary unchecked(Matrix<Scalar> entries, Index block_len)
  {
    return BlockDictionary(std::move(entries), block_len, false);
  }

  Index rows() const { return entries_.rows(); }
  Index cols() const { return entries_.cols(); }
  Index block_len() const { return block_len_; }
  Index num_blocks() const { return entries_.cols() / block_len_; }
  bool checked() const { return checked_; }
  bool row_aligned() const { return entries_.rows() % block_len_ == 0; }

  /// R = L/d; throws when d does not divide L.
  Index row_blocks() const
  {
    if (!row_aligned())
      throw InvalidArgument("BlockDictionary: block length " + std::to_string(block_len_)
                            + " does not divide row count " + std::to_string(rows()));
    return rows() / block_len_;
  }

  const Matrix<Scalar>& matrix() const { return entries_; }

  auto block(Index l) const { return entries_.middleCols(l * block_len_, block_len_); }

  /// Same matrix, different partition. Validation state carries over.
  BlockDictionary reblocked(Index block_len) const
  {
    return BlockDictionary(entries_, block_len, checked_);
  }

private:
  BlockDictionary(Matrix<Scalar> entries, Index block_len, bool check)
      : entries_(std::move(entries)), block_len_(block_len), checked_(check)
  {
    if (block_len_ <= 0)
      throw InvalidArgument("BlockDictionary: block length must be positive");
    if (entries_.cols() == 0 || entries_.rows() == 0)
      throw InvalidArgument("BlockDictionary: empty matrix");
    if (entries_.cols() % block_len_ != 0)
      throw InvalidArgument("BlockDictionary: block length " + std::to_string(block_len_)
                            + " does not divide column count "
                            + std::to_string(entries_.cols()));
    if (check)
      validate();
  }

  void validate() const
  {
    for (Index c = 0; c < entries_.cols(); ++c) {
      const double n = entries_.col(c).norm();
      if (std::abs(n - 1.0) > tol::unit_norm)
        throw NumericalError("BlockDictionary: column " + std::to_string(c)
                             + " has norm " + std::to_string(n) + ", expected 1");
    }
    if (block_len_ > entries_.rows())
      throw NumericalError("BlockDictionary: block length exceeds row count; blocks cannot "
                           "have full column rank");
    for (Index l = 0; l < num_blocks(); ++l) {
      if (block_len_ == 1)
        continue; // a unit-norm column is full rank
      Eigen::JacobiSVD<Matrix<Scalar>> svd(block(l));
      const auto& s = svd.singularValues();
      if (!(s(s.size() - 1) > tol::block_rank * s(0)))
        throw NumericalError("BlockDictionary: block " + std::to_string(l)
                             + " is not of full column rank");
    }
  }

  Matrix<Scalar> entries_;
  Index block_len_ = 1;
  bool checked_ = false;
};

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> get_block(const BlockDictionary<Scalar>& dict, Index l)
{
  if (l < 0 || l >= dict.num_blocks())
    throw InvalidArgument("get_block: block index " + std::to_string(l) + " out of range [0, "
                          + std::to_string(dict.num_blocks()) + ")");
  return dict.block(l);
}

/// Vector of per-block Euclidean norms of a length-(Md) vector.
template <typename Derived>
VectorXr block_norms(const Eigen::MatrixBase<Derived>& v, Index block_len)
{
  if (block_len <= 0 || v.size() % block_len != 0)
    throw InvalidArgument("block_norms: block length does not divide vector length");
  const Index m = v.size() / block_len;
  VectorXr out(m);
  for (Index l = 0; l < m; ++l)
    out(l) = v.segment(l * block_len, block_len).norm();
  return out;
}

/// Mixed l2/lp norm for p in {0, 1, 2, inf}. p = 0 counts exactly-nonzero blocks.
template <typename Derived>
double mixed_norm(const Eigen::MatrixBase<Derived>& v, Index block_len, double p)
{
  const VectorXr norms = block_norms(v, block_len);
  if (p == 0.0)
    return static_cast<double>((norms.array() > 0.0).count());
  if (p == 1.0)
    return norms.sum();
  if (p == 2.0)
    return norms.norm();
  if (std::isinf(p) && p > 0)
    return norms.size() == 0 ? 0.0 : norms.maxCoeff();
  throw InvalidArgument("mixed_norm: unsupported p (expected 0, 1, 2 or inf)");
}

template <typename Scalar>
double mixed_norm(const BlockVector<Scalar>& x, double p)
{
  return mixed_norm(x.vector(), x.block_len(), p);
}

/// Blocks whose Euclidean norm exceeds `tol`.
template <typename Scalar>
BlockSupport block_support(const BlockVector<Scalar>& x, double tol = 0.0)
{
  if (tol < 0)
    throw InvalidArgument("block_support: tolerance must be nonnegative");
  std::vector<Index> idx;
  for (Index l = 0; l < x.num_blocks(); ++l)
    if (x.block(l).norm() > tol)
      idx.push_back(l);
  return BlockSupport(std::move(idx));
}

/// Scatter a vector of stacked block coefficients onto the given support.
template <typename Scalar, typename Derived>
BlockVector<Scalar> scatter_blocks(const Eigen::MatrixBase<Derived>& coeffs,
                                   const std::vector<Index>& blocks, Index num_blocks,
                                   Index block_len)
{
  auto x = BlockVector<Scalar>::zeros(num_blocks * block_len, block_len);
  for (std::size_t j = 0; j < blocks.size(); ++j)
    x.block(blocks[j]) = coeffs.segment(static_cast<Index>(j) * block_len, block_len);
  return x;
}

/// Columns of `dict` for the listed blocks, in listed order.
template <typename Scalar>
Matrix<Scalar> gather_blocks(const BlockDictionary<Scalar>& dict, const std::vector<Index>& blocks)
{
  const Index d = dict.block_len();
  Matrix<Scalar> out(dict.rows(), static_cast<Index>(blocks.size()) * d);
  for (std::size_t j = 0; j < blocks.size(); ++j)
    out.middleCols(static_cast<Index>(j) * d, d) = dict.block(blocks[j]);
  return out;
}

} // namespace blockpursuit
