#ifndef ONCOPROG_MATRIX_HPP
#define ONCOPROG_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "oncoprog/error.hpp"

namespace oncoprog {

// Dense row-major matrix of doubles.
class matrix {
public:
  matrix() = default;
  matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw error(errc::shape_mismatch, "matrix data length does not match shape");
  }

  [[nodiscard]] auto
  rows() const noexcept -> std::size_t {
    return rows_;
  }
  [[nodiscard]] auto
  cols() const noexcept -> std::size_t {
    return cols_;
  }

  auto
  operator()(std::size_t r, std::size_t c) noexcept -> double & {
    return data_[r * cols_ + c];
  }
  auto
  operator()(std::size_t r, std::size_t c) const noexcept -> double {
    return data_[r * cols_ + c];
  }

  [[nodiscard]] auto
  row(std::size_t r) noexcept -> std::span<double> {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] auto
  row(std::size_t r) const noexcept -> std::span<const double> {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] auto
  data() noexcept -> std::span<double> {
    return data_;
  }
  [[nodiscard]] auto
  data() const noexcept -> std::span<const double> {
    return data_;
  }

  void
  fill(double v) {
    std::ranges::fill(data_, v);
  }

  [[nodiscard]] auto
  all_finite() const -> bool {
    return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
  }

  auto
  operator==(const matrix &) const -> bool = default;

private:
  std::size_t rows_{};
  std::size_t cols_{};
  std::vector<double> data_;
};

// y += a * x
inline void
axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

[[nodiscard]] inline auto
dot(std::span<const double> a, std::span<const double> b) noexcept -> double {
  // four independent partial sums; fixed order keeps results reproducible
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i)
    s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace oncoprog

#endif  // ONCOPROG_MATRIX_HPP
