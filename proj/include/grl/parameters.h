#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "grl/array.h"

namespace grl {

struct Parameter {
  std::string name;
  Array value;
  Array grad;  // same shape as value once zero_grad() has run

  void zero_grad();
};

// Named trainable arrays in insertion order. Names are unique.
class ParameterSet {
 public:
  Parameter& add(std::string name, Array value);

  bool contains(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t num_scalars() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace grl
