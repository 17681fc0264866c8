#include "cosem/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cosem/error.hpp"

namespace cosem {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::empty_corpus: return "EmptyCorpus";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::divergence: return "DivergenceDetected";
    case ErrorCode::all_instances_skipped: return "AllInstancesSkipped";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::corrupt_file: return "CorruptFile";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::empty_train_set: return "EmptyTrainSet";
  }
  return "Unknown";
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCode::shape_mismatch, "ragged matrix literal");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Vector matvec(const Matrix& w, std::span<const double> x) {
  if (w.cols() != x.size()) {
    throw Error(ErrorCode::shape_mismatch,
                "matvec: matrix has " + std::to_string(w.cols()) + " columns, vector has " +
                    std::to_string(x.size()) + " entries");
  }
  Vector y(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto row = w.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

void matvec_transposed_accumulate(const Matrix& w, std::span<const double> y,
                                  std::span<double> out) {
  if (w.rows() != y.size() || w.cols() != out.size()) {
    throw Error(ErrorCode::shape_mismatch, "matvec_transposed_accumulate: shape mismatch");
  }
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    const auto row = w.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * yi;
  }
}

void outer_accumulate(Matrix& grad, std::span<const double> y, std::span<const double> x,
                      double scale) {
  if (grad.rows() != y.size() || grad.cols() != x.size()) {
    throw Error(ErrorCode::shape_mismatch, "outer_accumulate: shape mismatch");
  }
  for (std::size_t i = 0; i < grad.rows(); ++i) {
    const double yi = scale * y[i];
    if (yi == 0.0) continue;
    auto row = grad.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += yi * x[j];
  }
}

double sigmoid(double x) noexcept {
  // Branch on sign so exp never overflows.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector tanh_forward(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::tanh(v); });
  return y;
}

Vector sigmoid_forward(std::span<const double> x) {
  Vector y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return sigmoid(v); });
  return y;
}

Vector hadamard(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::shape_mismatch, "hadamard: length mismatch");
  }
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

void fill_uniform(Matrix& m, double limit, Rng& rng) {
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) noexcept {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  const std::function<void()>& compute_gradients,
                                  std::span<Param* const> params,
                                  const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "finite_diff_check: epsilon must be positive");
  }
  compute_gradients();

  struct Coord {
    std::size_t param;
    std::size_t index;
  };
  std::vector<Coord> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->value.size(); ++i) coords.push_back({p, i});
  }
  if (coords.size() > options.sample_count) {
    Rng rng(options.seed);
    rng.shuffle(std::span<Coord>(coords));
    coords.resize(options.sample_count);
  }

  GradCheckReport report;
  const double eps = options.epsilon;
  for (const Coord& c : coords) {
    double& theta = params[c.param]->value.data()[c.index];
    const double analytic = params[c.param]->grad.data()[c.index];
    const double saved = theta;
    theta = saved + eps;
    const double up = loss();
    theta = saved - eps;
    const double down = loss();
    theta = saved;

    const double numeric = (up - down) / (2.0 * eps);
    const double rel =
        std::abs(numeric - analytic) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
    report.max_relative_error = std::max(report.max_relative_error, rel);
    if (!(rel < options.tolerance)) ++report.failures;
    ++report.checked;
  }
  return report;
}

}  // namespace cosem
