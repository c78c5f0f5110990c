#include "qtn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace qtn {

namespace {

std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> strides_of(std::span<const std::size_t> dims) {
  std::vector<std::size_t> strides(dims.size());
  std::size_t s = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    strides[k] = s;
    s *= dims[k];
  }
  return strides;
}

// Gathers `src` (modes with dims `dims`) into the mode order `perm`, so that
// result mode k is source mode perm[k].
std::vector<Scalar> permute_data(std::span<const Scalar> src, std::span<const std::size_t> dims,
                                 std::span<const std::size_t> perm) {
  const std::size_t n = perm.size();
  const auto src_strides = strides_of(dims);
  std::vector<std::size_t> new_dims(n), step(n);
  for (std::size_t k = 0; k < n; ++k) {
    new_dims[k] = dims[perm[k]];
    step[k] = src_strides[perm[k]];
  }
  std::vector<Scalar> out(src.size());
  if (src.empty()) return out;
  std::vector<std::size_t> counter(n, 0);
  std::size_t offset = 0;
  for (std::size_t linear = 0; linear < out.size(); ++linear) {
    out[linear] = src[offset];
    for (std::size_t k = 0; k < n; ++k) {
      if (++counter[k] < new_dims[k]) {
        offset += step[k];
        break;
      }
      offset -= step[k] * (new_dims[k] - 1);
      counter[k] = 0;
    }
  }
  return out;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("DenseTensor: mode sizes must be positive");
  }
  data_.assign(product(shape_), Scalar{0.0});
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<Scalar> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw DimensionError("DenseTensor: mode sizes must be positive");
  }
  if (product(shape_) != data_.size()) {
    throw DimensionError("DenseTensor: data size does not match shape");
  }
}

std::size_t DenseTensor::linear_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw DimensionError("DenseTensor: wrong index arity");
  std::size_t linear = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw DimensionError("DenseTensor: index out of range");
    linear += index[k] * stride;
    stride *= shape_[k];
  }
  return linear;
}

std::vector<std::size_t> DenseTensor::multi_index(std::size_t linear) const {
  if (linear >= data_.size()) throw DimensionError("DenseTensor: linear index out of range");
  std::vector<std::size_t> index(shape_.size());
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    index[k] = linear % shape_[k];
    linear /= shape_[k];
  }
  return index;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const {
  return DenseTensor(std::move(shape), data_);
}

bool operator==(const DenseTensor& a, const DenseTensor& b) {
  return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

DenseState::DenseState(std::size_t p, Vector c) : sites(p), coefficients(std::move(c)) {
  if (static_cast<std::size_t>(coefficients.size()) != pow2(p)) {
    throw DimensionError("DenseState: coefficient count must be 2^p");
  }
}

DenseState DenseState::zeros(std::size_t p) { return DenseState(p, Vector::Zero(pow2(p))); }

DenseState DenseState::basis(std::size_t p, std::size_t index) {
  auto s = zeros(p);
  if (index >= s.dim()) throw DimensionError("DenseState::basis: index out of range");
  s.coefficients(index) = 1.0;
  return s;
}

DenseState DenseState::from_tensor(const DenseTensor& t) {
  for (auto d : t.shape()) {
    if (d != 2) throw DimensionError("DenseState::from_tensor: all modes must be binary");
  }
  Vector c(t.size());
  std::copy(t.data().begin(), t.data().end(), c.data());
  return DenseState(t.order(), std::move(c));
}

DenseTensor DenseState::to_tensor() const {
  std::vector<Scalar> data(coefficients.data(), coefficients.data() + coefficients.size());
  return DenseTensor(std::vector<std::size_t>(sites, 2), std::move(data));
}

DenseTensor outer_product(std::span<const Vector> factors) {
  if (factors.empty()) throw DimensionError("outer_product: empty factor list");
  std::vector<std::size_t> shape;
  for (const auto& f : factors) {
    if (f.size() == 0) throw DimensionError("outer_product: empty factor");
    shape.push_back(static_cast<std::size_t>(f.size()));
  }
  std::vector<Scalar> data{Scalar{1.0}};
  for (const auto& f : factors) {
    std::vector<Scalar> next(data.size() * f.size());
    for (Eigen::Index j = 0; j < f.size(); ++j) {
      for (std::size_t i = 0; i < data.size(); ++i) next[i + data.size() * j] = data[i] * f(j);
    }
    data = std::move(next);
  }
  return DenseTensor(std::move(shape), std::move(data));
}

Matrix mode_n_unfold(const DenseTensor& t, std::size_t n) {
  if (n >= t.order()) throw DimensionError("mode_n_unfold: mode out of range");
  std::vector<std::size_t> perm{n};
  for (std::size_t k = 0; k < t.order(); ++k) {
    if (k != n) perm.push_back(k);
  }
  auto data = permute_data(t.data(), t.shape(), perm);
  const auto rows = static_cast<Eigen::Index>(t.dim(n));
  const auto cols = static_cast<Eigen::Index>(t.size() / t.dim(n));
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

DenseTensor mode_n_fold(const Matrix& m, std::size_t n, std::vector<std::size_t> shape) {
  if (n >= shape.size()) throw DimensionError("mode_n_fold: mode out of range");
  if (static_cast<std::size_t>(m.rows()) != shape[n] ||
      static_cast<std::size_t>(m.size()) != product(shape)) {
    throw DimensionError("mode_n_fold: matrix does not match shape");
  }
  // The unfolded layout is the tensor with mode n moved to the front.
  std::vector<std::size_t> unfolded_dims{shape[n]};
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k != n) unfolded_dims.push_back(shape[k]);
  }
  std::vector<std::size_t> inverse(shape.size());
  for (std::size_t k = 0; k < shape.size(); ++k) {
    inverse[k] = k < n ? k + 1 : (k == n ? 0 : k);
  }
  auto data = permute_data(std::span(m.data(), static_cast<std::size_t>(m.size())), unfolded_dims, inverse);
  return DenseTensor(std::move(shape), std::move(data));
}

DenseTensor mode_n_product(const DenseTensor& t, std::size_t n, const Matrix& u) {
  if (n >= t.order()) throw DimensionError("mode_n_product: mode out of range");
  if (static_cast<std::size_t>(u.cols()) != t.dim(n)) {
    throw DimensionError("mode_n_product: columns(u) must equal shape[n]");
  }
  auto shape = t.shape();
  shape[n] = static_cast<std::size_t>(u.rows());
  DenseTensor out(shape);
  std::size_t inner = 1;
  for (std::size_t k = 0; k < n; ++k) inner *= t.dim(k);
  const std::size_t outer = t.size() / (inner * t.dim(n));
  const std::size_t in_n = t.dim(n);
  const std::size_t out_n = shape[n];
  auto src = t.data();
  auto dst = out.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < out_n; ++j) {
      for (std::size_t i = 0; i < in_n; ++i) {
        const Scalar w = u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        if (w == Scalar{0.0}) continue;
        const Scalar* s = &src[inner * (i + in_n * o)];
        Scalar* d = &dst[inner * (j + out_n * o)];
        for (std::size_t a = 0; a < inner; ++a) d[a] += w * s[a];
      }
    }
  }
  return out;
}

LabeledTensor::LabeledTensor(std::vector<int> l, std::vector<std::size_t> d)
    : labels(std::move(l)), dims(std::move(d)) {
  if (labels.size() != dims.size()) throw DimensionError("LabeledTensor: labels/dims mismatch");
  data.assign(product(dims), Scalar{0.0});
}

LabeledTensor::LabeledTensor(std::vector<int> l, std::vector<std::size_t> d, std::vector<Scalar> values)
    : labels(std::move(l)), dims(std::move(d)), data(std::move(values)) {
  if (labels.size() != dims.size()) throw DimensionError("LabeledTensor: labels/dims mismatch");
  if (product(dims) != data.size()) throw DimensionError("LabeledTensor: data size mismatch");
}

LabeledTensor LabeledTensor::scalar(Scalar value) { return LabeledTensor({}, {}, {value}); }

bool LabeledTensor::has_label(int label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::size_t LabeledTensor::dim_of(int label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw DimensionError("LabeledTensor: unknown label");
  return dims[static_cast<std::size_t>(it - labels.begin())];
}

LabeledTensor permuted(const LabeledTensor& t, std::span<const int> order) {
  if (order.size() != t.order()) throw DimensionError("permuted: order must list every label");
  std::vector<std::size_t> perm(order.size());
  std::vector<std::size_t> dims(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto it = std::find(t.labels.begin(), t.labels.end(), order[k]);
    if (it == t.labels.end()) throw DimensionError("permuted: unknown label");
    perm[k] = static_cast<std::size_t>(it - t.labels.begin());
    dims[k] = t.dims[perm[k]];
  }
  bool identity = true;
  for (std::size_t k = 0; k < perm.size(); ++k) identity = identity && perm[k] == k;
  if (identity) return t;
  return LabeledTensor(std::vector<int>(order.begin(), order.end()), std::move(dims),
                       permute_data(t.data, t.dims, perm));
}

LabeledTensor contract(const LabeledTensor& a, const LabeledTensor& b, FlopCounter* flops) {
  std::vector<int> free_a, shared, free_b;
  for (int l : a.labels) (b.has_label(l) ? shared : free_a).push_back(l);
  for (int l : b.labels) {
    if (!a.has_label(l)) free_b.push_back(l);
  }
  std::size_t fa = 1, sh = 1, fb = 1;
  std::vector<std::size_t> dims;
  for (int l : free_a) {
    fa *= a.dim_of(l);
    dims.push_back(a.dim_of(l));
  }
  for (int l : shared) {
    if (a.dim_of(l) != b.dim_of(l)) throw DimensionError("contract: shared label dimension mismatch");
    sh *= a.dim_of(l);
  }
  for (int l : free_b) {
    fb *= b.dim_of(l);
    dims.push_back(b.dim_of(l));
  }

  std::vector<int> order_a = free_a;
  order_a.insert(order_a.end(), shared.begin(), shared.end());
  std::vector<int> order_b = shared;
  order_b.insert(order_b.end(), free_b.begin(), free_b.end());
  const auto pa = permuted(a, order_a);
  const auto pb = permuted(b, order_b);

  std::vector<int> labels = free_a;
  labels.insert(labels.end(), free_b.begin(), free_b.end());
  LabeledTensor out(std::move(labels), std::move(dims));
  Eigen::Map<const Matrix> ma(pa.data.data(), static_cast<Eigen::Index>(fa), static_cast<Eigen::Index>(sh));
  Eigen::Map<const Matrix> mb(pb.data.data(), static_cast<Eigen::Index>(sh), static_cast<Eigen::Index>(fb));
  Eigen::Map<Matrix> mo(out.data.data(), static_cast<Eigen::Index>(fa), static_cast<Eigen::Index>(fb));
  mo.noalias() = ma * mb;
  count(flops, static_cast<std::uint64_t>(fa) * sh * fb);
  return out;
}

LabeledTensor fuse(const LabeledTensor& t, std::span<const int> group, int fused) {
  if (group.empty()) throw DimensionError("fuse: empty group");
  auto first = std::find(t.labels.begin(), t.labels.end(), group[0]);
  if (first == t.labels.end()) throw DimensionError("fuse: unknown label");
  const auto start = static_cast<std::size_t>(first - t.labels.begin());
  if (start + group.size() > t.order()) throw DimensionError("fuse: group not contiguous");
  std::size_t dim = 1;
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (t.labels[start + k] != group[k]) throw DimensionError("fuse: group not contiguous");
    dim *= t.dims[start + k];
  }
  std::vector<int> labels(t.labels.begin(), t.labels.begin() + static_cast<std::ptrdiff_t>(start));
  std::vector<std::size_t> dims(t.dims.begin(), t.dims.begin() + static_cast<std::ptrdiff_t>(start));
  labels.push_back(fused);
  dims.push_back(dim);
  for (std::size_t k = start + group.size(); k < t.order(); ++k) {
    labels.push_back(t.labels[k]);
    dims.push_back(t.dims[k]);
  }
  return LabeledTensor(std::move(labels), std::move(dims), t.data);
}

}  // namespace qtn
