#include "grl/array.h"

#include <algorithm>
#include <stdexcept>

namespace grl {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  if (shape_.empty()) throw std::invalid_argument("array shape must be non-empty");
}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw std::invalid_argument("array shape must be non-empty");
  if (data_.size() != shape_size(shape_)) {
    throw std::invalid_argument("array data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Array({r, c}, std::move(data));
}

std::span<double> Array::row(std::size_t r) {
  const std::size_t width = size() / shape_[0];
  return {data_.data() + r * width, width};
}

std::span<const double> Array::row(std::size_t r) const {
  const std::size_t width = size() / shape_[0];
  return {data_.data() + r * width, width};
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Array Array::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw std::invalid_argument("cannot reshape " + shape_string(shape_) +
                                " to " + shape_string(shape));
  }
  return Array(std::move(shape), data_);
}

}  // namespace grl
