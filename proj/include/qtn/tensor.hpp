#pragma once

#include <span>
#include <vector>

#include "qtn/common.hpp"

namespace qtn {

/// Dense multiway array of complex scalars.
///
/// Linearization is first-index-fastest: the entry at multi-index
/// (i_0, ..., i_{n-1}) lives at i_0 + n_0 * (i_1 + n_1 * (i_2 + ...)).
/// The same convention is used for every reshape in the library, in
/// particular for DenseState where site j is bit j of the basis index.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape);
  DenseTensor(std::vector<std::size_t> shape, std::vector<Scalar> data);

  std::size_t order() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return data_.size(); }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }

  std::size_t linear_index(std::span<const std::size_t> index) const;
  std::vector<std::size_t> multi_index(std::size_t linear) const;

  Scalar& operator()(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
  Scalar operator()(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }
  Scalar& at(std::initializer_list<std::size_t> index) {
    return data_[linear_index(std::span(index.begin(), index.size()))];
  }
  Scalar at(std::initializer_list<std::size_t> index) const {
    return data_[linear_index(std::span(index.begin(), index.size()))];
  }

  /// Same data, new shape with identical element count.
  DenseTensor reshaped(std::vector<std::size_t> shape) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Scalar> data_;
};

bool operator==(const DenseTensor& a, const DenseTensor& b);

/// Full 2^p coefficient vector of a p-site state; site j is bit j of the index.
struct DenseState {
  std::size_t sites = 0;
  Vector coefficients;

  DenseState() = default;
  DenseState(std::size_t p, Vector c);

  static DenseState zeros(std::size_t p);
  static DenseState basis(std::size_t p, std::size_t index);
  static DenseState from_tensor(const DenseTensor& t);

  DenseTensor to_tensor() const;
  std::size_t dim() const { return static_cast<std::size_t>(coefficients.size()); }
};

/// Rank-one tensor a_0 o a_1 o ... with result[i_0,...] = prod_j a_j[i_j].
DenseTensor outer_product(std::span<const Vector> factors);

/// Mode-n unfolding: rows indexed by i_n, columns by the remaining indices in
/// their original order, first remaining index fastest.
Matrix mode_n_unfold(const DenseTensor& t, std::size_t n);

/// Inverse of mode_n_unfold for a tensor of the given shape.
DenseTensor mode_n_fold(const Matrix& m, std::size_t n, std::vector<std::size_t> shape);

/// (t x_n u)[.., j, ..] = sum_{i_n} t[.., i_n, ..] u[j, i_n].
DenseTensor mode_n_product(const DenseTensor& t, std::size_t n, const Matrix& u);

/// Dense tensor whose modes carry integer labels; contraction sums over
/// every label the two operands share.
struct LabeledTensor {
  std::vector<int> labels;
  std::vector<std::size_t> dims;
  std::vector<Scalar> data;

  LabeledTensor() = default;
  LabeledTensor(std::vector<int> labels, std::vector<std::size_t> dims);
  LabeledTensor(std::vector<int> labels, std::vector<std::size_t> dims, std::vector<Scalar> data);

  static LabeledTensor scalar(Scalar value);

  std::size_t size() const { return data.size(); }
  std::size_t order() const { return labels.size(); }
  bool has_label(int label) const;
  std::size_t dim_of(int label) const;
};

/// Reorders the modes of t to the given label order (a permutation of t.labels).
LabeledTensor permuted(const LabeledTensor& t, std::span<const int> order);

/// Contracts all shared labels of a and b. Result modes are a's free labels
/// followed by b's free labels, each in original order. Counts
/// free_a * shared * free_b multiply-adds.
LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b, FlopCounter* flops = nullptr);

/// Merges consecutive labels `group` (already adjacent and in that order in
/// t.labels) into a single mode labelled `fused`.
LabeledTensor fuse(const LabeledTensor& t, std::span<const int> group, int fused);

}  // namespace qtn
