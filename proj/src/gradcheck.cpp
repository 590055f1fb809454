#include "grl/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "grl/ops.h"
#include "grl/random.h"

namespace grl {

GradCheckResult finite_diff_check(const LossBuilder& loss,
                                  std::vector<Parameter*> params, double eps) {
  for (Parameter* p : params) p->zero_grad();
  {
    ad::Tape tape;
    ad::Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<Array> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto eval = [&loss]() {
    ad::Tape tape;
    return loss(tape).value()[0];
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + eps;
      const double up = eval();
      p.value[i] = orig - eps;
      const double down = eval();
      p.value[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double err = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        result.worst_parameter = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

namespace {

Array random_array(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : a.values()) v = u(rng);
  return a;
}

std::size_t rand_dim(Rng& rng) { return 1 + uniform_index(rng, 4); }

// One random instance of an op: the inputs to perturb and a function that
// applies the op to their tape bindings.
struct Instance {
  std::vector<Array> inputs;
  std::function<ad::Var(std::vector<ad::Var>&)> apply;
};

using InstanceMaker = std::function<Instance(Rng&)>;

std::vector<std::pair<std::string, InstanceMaker>> op_catalog() {
  std::vector<std::pair<std::string, InstanceMaker>> ops;
  ops.emplace_back("matmul", [](Rng& r) {
    auto m = rand_dim(r), k = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, k}), random_array(r, {k, n})},
                    [](auto& v) { return ad::matmul(v[0], v[1]); }};
  });
  ops.emplace_back("matmul_batched", [](Rng& r) {
    auto b = rand_dim(r), m = rand_dim(r), k = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {b, m, k}), random_array(r, {b, k, n})},
                    [](auto& v) { return ad::matmul(v[0], v[1]); }};
  });
  ops.emplace_back("transpose", [](Rng& r) {
    auto b = rand_dim(r), m = rand_dim(r), n = rand_dim(r);
    Shape s = uniform_index(r, 2) ? Shape{b, m, n} : Shape{m, n};
    return Instance{{random_array(r, s)},
                    [](auto& v) { return ad::transpose(v[0]); }};
  });
  ops.emplace_back("reshape", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, n})},
                    [m, n](auto& v) { return ad::reshape(v[0], {n * m}); }};
  });
  ops.emplace_back("add", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    const bool bcast = uniform_index(r, 2) != 0;
    Shape sb = bcast ? Shape{n} : Shape{m, n};
    return Instance{{random_array(r, {m, n}), random_array(r, sb)},
                    [](auto& v) { return ad::add(v[0], v[1]); }};
  });
  ops.emplace_back("sub", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, n}), random_array(r, {m, n})},
                    [](auto& v) { return ad::sub(v[0], v[1]); }};
  });
  ops.emplace_back("mul", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, n}), random_array(r, {m, n})},
                    [](auto& v) { return ad::mul(v[0], v[1]); }};
  });
  ops.emplace_back("mul_const", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    Array c = random_array(r, {m, n});
    return Instance{{random_array(r, {m, n})},
                    [c](auto& v) { return ad::mul_const(v[0], c); }};
  });
  ops.emplace_back("scale", [](Rng& r) {
    auto m = rand_dim(r);
    const double c = std::uniform_real_distribution<double>(-2, 2)(r);
    return Instance{{random_array(r, {m})},
                    [c](auto& v) { return ad::scale(v[0], c); }};
  });
  ops.emplace_back("add_scalar", [](Rng& r) {
    auto m = rand_dim(r);
    return Instance{{random_array(r, {m})},
                    [](auto& v) { return ad::add_scalar(v[0], 0.7); }};
  });
  ops.emplace_back("concat_last_dim", [](Rng& r) {
    auto m = rand_dim(r), a = rand_dim(r), b = rand_dim(r);
    return Instance{{random_array(r, {m, a}), random_array(r, {m, b})},
                    [](auto& v) { return ad::concat_last_dim(v); }};
  });
  ops.emplace_back("slice_last_dim", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r) + 1;
    auto begin = uniform_index(r, n - 1);
    auto end = begin + 1 + uniform_index(r, n - begin - 1);
    return Instance{{random_array(r, {m, n})}, [begin, end](auto& v) {
                      return ad::slice_last_dim(v[0], begin, end);
                    }};
  });
  ops.emplace_back("stack", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    auto axis = uniform_index(r, 3);
    return Instance{{random_array(r, {m, n}), random_array(r, {m, n}),
                     random_array(r, {m, n})},
                    [axis](auto& v) { return ad::stack(v, axis); }};
  });
  ops.emplace_back("select", [](Rng& r) {
    Shape s{rand_dim(r), rand_dim(r), rand_dim(r)};
    auto axis = uniform_index(r, 3);
    auto index = uniform_index(r, s[axis]);
    return Instance{{random_array(r, s)}, [axis, index](auto& v) {
                      return ad::select(v[0], axis, index);
                    }};
  });
  ops.emplace_back("gather_rows", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    std::vector<std::size_t> rows(1 + uniform_index(r, 6));
    for (auto& i : rows) i = uniform_index(r, m);
    return Instance{{random_array(r, {m, n})},
                    [rows](auto& v) { return ad::gather_rows(v[0], rows); }};
  });
  ops.emplace_back("outer_sum", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, 1}), random_array(r, {n, 1})},
                    [](auto& v) { return ad::outer_sum(v[0], v[1]); }};
  });
  ops.emplace_back("sigmoid", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)}, -4, 4)},
                    [](auto& v) { return ad::sigmoid(v[0]); }};
  });
  ops.emplace_back("leaky_relu", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)})},
                    [](auto& v) { return ad::leaky_relu(v[0], 0.2); }};
  });
  ops.emplace_back("elu", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)}, -3, 3)},
                    [](auto& v) { return ad::elu(v[0]); }};
  });
  ops.emplace_back("log", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)}, 0.5, 3.0)},
                    [](auto& v) { return ad::log(v[0]); }};
  });
  ops.emplace_back("clamp", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)}, -2, 2)},
                    [](auto& v) { return ad::clamp(v[0], -1.0, 1.0); }};
  });
  ops.emplace_back("sum", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)})},
                    [](auto& v) { return ad::sum(v[0]); }};
  });
  ops.emplace_back("mean", [](Rng& r) {
    return Instance{{random_array(r, {rand_dim(r), rand_dim(r)})},
                    [](auto& v) { return ad::mean(v[0]); }};
  });
  ops.emplace_back("inner_product", [](Rng& r) {
    auto m = rand_dim(r), n = rand_dim(r);
    return Instance{{random_array(r, {m, n}), random_array(r, {m, n})},
                    [](auto& v) { return ad::inner_product(v[0], v[1]); }};
  });
  ops.emplace_back("masked_softmax", [](Rng& r) {
    auto b = rand_dim(r), n = rand_dim(r) + 1;
    Array mask({n, n});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j > i) mask.at(i, j) = -INFINITY;
      }
    }
    return Instance{{random_array(r, {b, n, n}, -3, 3)},
                    [mask](auto& v) { return ad::masked_softmax(v[0], &mask); }};
  });
  return ops;
}

}  // namespace

std::vector<OpCheck> check_all_ops(std::uint64_t seed, std::size_t instances,
                                   double eps) {
  std::vector<OpCheck> out;
  const auto catalog = op_catalog();
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const auto& [name, make] = catalog[k];
    OpCheck check{name, 0.0, instances};
    for (std::size_t i = 0; i < instances; ++i) {
      Rng rng = make_rng(seed, "gradcheck-op", k, i);
      Instance inst = make(rng);
      std::vector<Parameter> params;
      params.reserve(inst.inputs.size());
      for (std::size_t j = 0; j < inst.inputs.size(); ++j) {
        params.push_back({"in" + std::to_string(j), inst.inputs[j], {}});
      }
      // Probe the output shape once to draw a fixed random projection, so the
      // scalar loss exercises every output entry with a distinct weight.
      Array weights;
      {
        ad::Tape tape;
        std::vector<ad::Var> vars;
        for (auto& p : params) vars.push_back(tape.parameter(p));
        weights = random_array(rng, inst.apply(vars).shape());
      }
      LossBuilder loss = [&](ad::Tape& tape) {
        std::vector<ad::Var> vars;
        for (auto& p : params) vars.push_back(tape.parameter(p));
        return ad::sum(ad::mul_const(inst.apply(vars), weights));
      };
      std::vector<Parameter*> ptrs;
      for (auto& p : params) ptrs.push_back(&p);
      check.max_rel_error = std::max(
          check.max_rel_error, finite_diff_check(loss, ptrs, eps).max_rel_error);
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace grl
