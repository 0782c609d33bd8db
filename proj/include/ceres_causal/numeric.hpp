#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ceres {

/// Dense vector of finite doubles. Construction rejects NaN/Inf.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0);
  explicit Vector(std::vector<double> entries);
  Vector(std::initializer_list<double> entries);

  [[nodiscard]] std::size_t dim() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  [[nodiscard]] std::span<const double> span() const { return entries_; }
  [[nodiscard]] const std::vector<double>& values() const { return entries_; }
  [[nodiscard]] auto begin() const { return entries_.begin(); }
  [[nodiscard]] auto end() const { return entries_.end(); }

  /// Checked element write; rejects non-finite values.
  void set(std::size_t i, double value);

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double scale);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> entries_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator*(double s, Vector v);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm_inf(const Vector& v);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
/// Concatenation [a; b].
Vector concat(const Vector& a, const Vector& b);

/// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  void set(std::size_t r, std::size_t c, double value);
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return std::span<const double>(entries_).subspan(r * cols_, cols_);
  }
  [[nodiscard]] const std::vector<double>& values() const { return entries_; }

  [[nodiscard]] Vector operator*(const Vector& v) const;
  [[nodiscard]] Matrix transpose() const;
  [[nodiscard]] bool is_square() const { return rows_ == cols_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix operator*(double s, Matrix m);

/// Nonnegative weights summing to one (within 1e-12).
class SimplexWeights {
 public:
  static constexpr double kSumTolerance = 1e-12;

  SimplexWeights() = default;
  explicit SimplexWeights(std::vector<double> weights);

  [[nodiscard]] std::size_t size() const { return weights_.size(); }
  [[nodiscard]] bool empty() const { return weights_.empty(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  [[nodiscard]] std::span<const double> span() const { return weights_; }
  [[nodiscard]] const std::vector<double>& values() const { return weights_; }
  [[nodiscard]] auto begin() const { return weights_.begin(); }
  [[nodiscard]] auto end() const { return weights_.end(); }

  friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

 private:
  std::vector<double> weights_;
};

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs);

/// exp(s_j / temperature) normalized, with max-subtraction.
SimplexWeights softmax(std::span<const double> scores, double temperature = 1.0);
inline SimplexWeights softmax(const Vector& scores, double temperature = 1.0) {
  return softmax(scores.span(), temperature);
}

double log_sum_exp(std::span<const double> scores);
inline double log_sum_exp(const Vector& scores) { return log_sum_exp(scores.span()); }

/// sum_j weights[j] * tokens[j].
Vector convex_combine(const SimplexWeights& weights, std::span<const Vector> tokens);

/// Euclidean projection onto the probability simplex (sort and threshold).
/// Points already on the simplex are returned unchanged.
SimplexWeights simplex_project(std::span<const double> v);
inline SimplexWeights simplex_project(const Vector& v) { return simplex_project(v.span()); }

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> xs);

}  // namespace ceres
