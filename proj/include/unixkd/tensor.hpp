#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace unixkd {

inline size_t shape_product(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const std::vector<size_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense n-dimensional array of doubles, row-major.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(shape_product(shape), fill) {}

  static Tensor of(std::vector<size_t> s, std::vector<double> values) {
    if (shape_product(s) != values.size()) {
      throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                  " values do not fill shape " +
                                  shape_to_string(s));
    }
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
  }

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  size_t dim(size_t i) const { return shape.at(i); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  double& operator[](size_t i) { return data[i]; }
  double operator[](size_t i) const { return data[i]; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_shape(const Tensor& t, const std::vector<size_t>& want,
                          const char* what) {
  if (t.shape != want) {
    throw std::invalid_argument(std::string(what) + ": expected shape " +
                                shape_to_string(want) + ", got " +
                                shape_to_string(t.shape));
  }
}

}  // namespace unixkd
