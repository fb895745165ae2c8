#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace assoc {

/// Dense row-major matrix of doubles. Batches of feature vectors are stored
/// one example per row.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor2 identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void fill(double v);

  Tensor2& operator+=(const Tensor2& other);
  Tensor2& operator*=(double s);

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a^T * b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// a * b^T
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

Tensor2 transpose(const Tensor2& a);
Tensor2 gather_rows(const Tensor2& a, std::span<const std::size_t> indices);
Tensor2 vstack(const Tensor2& top, const Tensor2& bottom);

bool all_finite(std::span<const double> values);
inline bool all_finite(const Tensor2& t) { return all_finite(t.values()); }

double max_abs(std::span<const double> values);
double max_abs_diff(const Tensor2& a, const Tensor2& b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace assoc
