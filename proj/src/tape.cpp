#include "grl/tape.h"

#include <stdexcept>

namespace grl::ad {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Array value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

Var Tape::record(Array value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Array value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) {
      throw std::invalid_argument("operation mixes values from different tapes");
    }
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Array& Tape::grad_of(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.has_grad) {
    n.grad = Array(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Array* Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("loss is not on this tape");
  if (loss.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " +
                                shape_string(loss.shape()));
  }
  grad_of(loss)[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) {
      n.backward(*this, n.grad, n.value);
    }
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.shape() != p.value.shape()) p.zero_grad();
      for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad[k] += n.grad[k];
    }
  }
}

}  // namespace grl::ad
