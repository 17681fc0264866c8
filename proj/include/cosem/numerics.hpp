#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "cosem/rng.hpp"

namespace cosem {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  void fill(double value) noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A learnable matrix with its gradient buffer. Vectors (biases) are n x 1.
struct Param {
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::size_t rows, std::size_t cols) : value(rows, cols), grad(rows, cols) {}

  void zero_grad() noexcept { grad.fill(0.0); }

  friend bool operator==(const Param&, const Param&) = default;
};

Vector matvec(const Matrix& w, std::span<const double> x);

// out += W^T y
void matvec_transposed_accumulate(const Matrix& w, std::span<const double> y,
                                  std::span<double> out);

// grad += scale * y x^T
void outer_accumulate(Matrix& grad, std::span<const double> y, std::span<const double> x,
                      double scale = 1.0);

double sigmoid(double x) noexcept;

Vector tanh_forward(std::span<const double> x);
Vector sigmoid_forward(std::span<const double> x);
Vector hadamard(std::span<const double> a, std::span<const double> b);

/// Fills `m` uniformly in [-limit, limit].
void fill_uniform(Matrix& m, double limit, Rng& rng);

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out) noexcept;

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Coordinates checked; all of them when the parameter set is smaller.
  std::size_t sample_count = 200;
  std::uint64_t seed = 0x5eed;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;

  bool passed() const noexcept { return failures == 0; }
};

/// Compares analytic gradients against central differences.
///
/// `compute_gradients` must leave d(loss)/d(value) in every `grad` buffer;
/// it is called once before any perturbation. `loss` is then evaluated at
/// value +/- epsilon for each sampled coordinate. Relative error is
/// |fd - an| / max(1e-8, |fd| + |an|).
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::function<void()>& compute_gradients,
                                  std::span<Param* const> params,
                                  const GradCheckOptions& options = {});

}  // namespace cosem
