#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "grl/array.h"
#include "grl/parameters.h"

namespace grl::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in execution order. Node ids are therefore a
// topological order, and backward() walks them once in reverse.
class Tape {
 public:
  // Accumulates `out_grad` (gradient w.r.t. the node's output `out`) into
  // the gradients of the node's inputs via Tape::grad_of.
  using BackwardFn = std::function<void(Tape& tape, const Array& out_grad,
                                        const Array& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  // The node reads a copy of p.value; backward() adds into p.grad.
  Var parameter(Parameter& p);

  Var record(Array value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Array value, const std::vector<Var>& inputs, BackwardFn fn);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

  // Gradient buffer of `v`, allocated as zeros on first use. Only meaningful
  // during or after backward().
  Array& grad_of(Var v);
  const Array* grad(Var v) const;

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  // Parameter gradients are summed into Parameter::grad.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Node node);
  std::deque<Node> nodes_;  // stable references across push_back
};

inline const Array& Var::value() const { return tape_->value(id_); }

}  // namespace grl::ad
