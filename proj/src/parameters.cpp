#include "grl/parameters.h"

#include <stdexcept>

namespace grl {

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) {
    grad = Array(value.shape());
  } else {
    grad.fill(0.0);
  }
}

Parameter& ParameterSet::add(std::string name, Array value) {
  if (index_.count(name)) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
  index_.emplace(name, params_.size());
  Parameter p{std::move(name), std::move(value), {}};
  p.zero_grad();
  params_.push_back(std::move(p));
  return params_.back();
}

bool ParameterSet::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("no parameter named '" + name + "'");
  }
  return params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

std::size_t ParameterSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    if (a.params_[i].name != b.params_[i].name ||
        a.params_[i].value != b.params_[i].value) {
      return false;
    }
  }
  return true;
}

}  // namespace grl
