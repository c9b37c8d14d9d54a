#pragma once

#include <cstddef>
#include <vector>

namespace bdlstm {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
struct Mat {
  std::size_t rows = 0, cols = 0;
  Vec v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) { assign(r, c, fill); }

  void assign(std::size_t r, std::size_t c, double fill = 0.0) {
    rows = r;
    cols = c;
    v.assign(r * c, fill);
  }

  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace bdlstm
