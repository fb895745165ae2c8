#include "assoc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "assoc/errors.hpp"

namespace assoc {

namespace {

std::string shape_str(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged row in Tensor2::from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor2(r, c, std::move(data));
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

void Tensor2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor2& Tensor2::operator+=(const Tensor2& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw DimensionError("cannot add " + shape_str(other) + " to " + shape_str(*this));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor2& Tensor2::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a) + " * " + shape_str(b));
  }
  Tensor2 out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn shape mismatch: " + shape_str(a) + "^T * " + shape_str(b));
  }
  Tensor2 out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto a_row = a.row(k);
    const auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt shape mismatch: " + shape_str(a) + " * " + shape_str(b) + "^T");
  }
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> indices) {
  Tensor2 out(indices.size(), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= a.rows()) {
      throw DimensionError("row index " + std::to_string(indices[i]) + " out of range for " +
                           shape_str(a));
    }
    std::copy_n(a.row(indices[i]).begin(), a.cols(), out.row(i).begin());
  }
  return out;
}

Tensor2 vstack(const Tensor2& top, const Tensor2& bottom) {
  if (top.empty()) return bottom;
  if (bottom.empty()) return top;
  if (top.cols() != bottom.cols()) {
    throw DimensionError("vstack column mismatch: " + shape_str(top) + " over " + shape_str(bottom));
  }
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Tensor2(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace assoc
