#include "ceres_causal/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ceres_causal/error.hpp"

namespace ceres {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw InvalidInput(std::string(what) + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

// Vector

Vector::Vector(std::size_t dim, double fill) : entries_(dim, fill) {
  require_finite(entries_, "Vector");
}

Vector::Vector(std::vector<double> entries) : entries_(std::move(entries)) {
  require_finite(entries_, "Vector");
}

Vector::Vector(std::initializer_list<double> entries) : entries_(entries) {
  require_finite(entries_, "Vector");
}

void Vector::set(std::size_t i, double value) {
  if (!std::isfinite(value)) throw InvalidInput("Vector::set: non-finite value");
  entries_.at(i) = value;
}

Vector& Vector::operator+=(const Vector& other) {
  require_same_dim(dim(), other.dim(), "Vector +=");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  require_same_dim(dim(), other.dim(), "Vector -=");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

Vector& Vector::operator*=(double scale) {
  for (double& x : entries_) x *= scale;
  return *this;
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator*(double s, Vector v) { return v *= s; }

double dot(const Vector& a, const Vector& b) {
  require_same_dim(a.dim(), b.dim(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm_inf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a.size(), b.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Vector concat(const Vector& a, const Vector& b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return Vector(std::move(out));
}

// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  require_finite(entries_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), entries_(std::move(row_major)) {
  if (entries_.size() != rows * cols) {
    throw DimensionMismatch("Matrix: expected " + std::to_string(rows * cols) + " entries, got " +
                            std::to_string(entries_.size()));
  }
  require_finite(entries_, "Matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionMismatch("Matrix: ragged initializer");
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
  require_finite(entries_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.entries_[i * n + i] = 1.0;
  return m;
}

void Matrix::set(std::size_t r, std::size_t c, double value) {
  if (!std::isfinite(value)) throw InvalidInput("Matrix::set: non-finite value");
  if (r >= rows_ || c >= cols_) throw DimensionMismatch("Matrix::set: index out of range");
  entries_[r * cols_ + c] = value;
}

Vector Matrix::operator*(const Vector& v) const {
  require_same_dim(cols_, v.dim(), "Matrix * Vector");
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) acc += entries_[r * cols_ + c] * v[c];
    out[r] = acc;
  }
  return Vector(std::move(out));
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t.entries_[c * rows_ + r] = entries_[r * cols_ + c];
  return t;
}

Matrix operator*(double s, Matrix m) {
  std::vector<double> e = m.values();
  for (double& x : e) x *= s;
  return Matrix(m.rows(), m.cols(), std::move(e));
}

// SimplexWeights

SimplexWeights::SimplexWeights(std::vector<double> weights) : weights_(std::move(weights)) {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] < 0.0) {
      throw InvalidInput("SimplexWeights: entry " + std::to_string(i) + " is negative or non-finite");
    }
  }
  if (!weights_.empty() && std::abs(stable_sum(weights_) - 1.0) > kSumTolerance) {
    throw InvalidInput("SimplexWeights: weights do not sum to one");
  }
}

double stable_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

SimplexWeights softmax(std::span<const double> scores, double temperature) {
  if (scores.empty()) throw InvalidInput("softmax: empty scores");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("softmax: temperature must be positive and finite");
  }
  require_finite(scores, "softmax");
  // Subtract before dividing: s_j - peak is exact near the peak.
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> w(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) w[j] = std::exp((scores[j] - peak) / temperature);
  const double total = stable_sum(w);
  for (double& x : w) x /= total;
  return SimplexWeights(std::move(w));
}

double log_sum_exp(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("log_sum_exp: empty scores");
  require_finite(scores, "log_sum_exp");
  if (scores.size() == 1) return scores[0];
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> e(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) e[j] = std::exp(scores[j] - peak);
  return peak + std::log(stable_sum(e));
}

Vector convex_combine(const SimplexWeights& weights, std::span<const Vector> tokens) {
  if (tokens.empty()) throw InvalidInput("convex_combine: empty token list");
  require_same_dim(weights.size(), tokens.size(), "convex_combine weights vs tokens");
  const std::size_t d = tokens.front().dim();
  std::vector<double> out(d, 0.0);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    require_same_dim(tokens[j].dim(), d, "convex_combine token dim");
    const double w = weights[j];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) out[i] += w * tokens[j][i];
  }
  return Vector(std::move(out));
}

SimplexWeights simplex_project(std::span<const double> v) {
  if (v.empty()) throw InvalidInput("simplex_project: empty input");
  require_finite(v, "simplex_project");
  const double eps = std::numeric_limits<double>::epsilon();
  const bool nonneg = std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
  if (nonneg && std::abs(stable_sum(v) - 1.0) <= 4.0 * eps * static_cast<double>(v.size())) {
    return SimplexWeights(std::vector<double>(v.begin(), v.end()));
  }

  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::max(v[j] - theta, 0.0);
  // Renormalize away the rounding left by the threshold.
  const double total = stable_sum(out);
  for (double& x : out) x /= total;
  return SimplexWeights(std::move(out));
}

std::size_t argmax(std::span<const double> xs) {
  if (xs.empty()) throw InvalidInput("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] > xs[best]) best = i;
  return best;
}

}  // namespace ceres
