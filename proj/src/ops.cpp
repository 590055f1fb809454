#include "grl/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace grl::ad {
namespace {

Tape& tape_of(Var v) {
  if (!v.valid()) throw std::invalid_argument("operation on an empty Var");
  return *v.tape();
}

void accumulate(Tape& t, Var v, const Array& g) {
  if (!t.requires_grad(v)) return;
  Array& dst = t.grad_of(v);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// C[m x n] (+)= A[m x k] · B[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[m x k] += G[m x n] · B[k x n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m,
             std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

// C[k x n] += A[m x k]^T · G[m x n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

bool is_suffix(const Shape& whole, const Shape& suffix) {
  if (suffix.size() > whole.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), whole.rbegin());
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdx) {
  Tape& t = tape_of(a);
  const Array& x = a.value();
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return t.record(std::move(out), {a}, [a, dfdx](Tape& t, const Array& g, const Array&) {
    if (!t.requires_grad(a)) return;
    const Array& x = a.value();
    Array& dx = t.grad_of(a);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] += g[i] * dfdx(x[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool batched = sa.size() == 3 && sb.size() == 3;
  const bool plain = sa.size() == 2 && sb.size() == 2;
  if ((!batched && !plain) || (batched && sa[0] != sb[0]) ||
      sa.back() != sb[sb.size() - 2]) {
    throw std::invalid_argument("matmul shape mismatch: " + shape_string(sa) +
                                " vs " + shape_string(sb));
  }
  const std::size_t batch = batched ? sa[0] : 1;
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa.back();
  const std::size_t n = sb.back();
  Shape out_shape = batched ? Shape{batch, m, n} : Shape{m, n};
  Array out(out_shape);
  for (std::size_t q = 0; q < batch; ++q) {
    gemm_nn(a.value().data() + q * m * k, b.value().data() + q * k * n,
            out.data() + q * m * n, m, k, n);
  }
  return t.record(std::move(out), {a, b},
                  [a, b, batch, m, k, n](Tape& t, const Array& g, const Array&) {
                    if (t.requires_grad(a)) {
                      Array& da = t.grad_of(a);
                      for (std::size_t q = 0; q < batch; ++q) {
                        gemm_nt(g.data() + q * m * n,
                                b.value().data() + q * k * n,
                                da.data() + q * m * k, m, n, k);
                      }
                    }
                    if (t.requires_grad(b)) {
                      Array& db = t.grad_of(b);
                      for (std::size_t q = 0; q < batch; ++q) {
                        gemm_tn(a.value().data() + q * m * k,
                                g.data() + q * m * n, db.data() + q * k * n,
                                m, k, n);
                      }
                    }
                  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (s.size() != 2 && s.size() != 3) {
    throw std::invalid_argument("transpose needs rank 2 or 3, got " +
                                shape_string(s));
  }
  const std::size_t batch = s.size() == 3 ? s[0] : 1;
  const std::size_t r = s[s.size() - 2];
  const std::size_t c = s.back();
  Shape os = s;
  std::swap(os[os.size() - 1], os[os.size() - 2]);
  Array out(os);
  const Array& x = a.value();
  for (std::size_t q = 0; q < batch; ++q) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        out[q * r * c + j * r + i] = x[q * r * c + i * c + j];
      }
    }
  }
  return t.record(std::move(out), {a}, [a, batch, r, c](Tape& t, const Array& g, const Array&) {
    if (!t.requires_grad(a)) return;
    Array& dx = t.grad_of(a);
    for (std::size_t q = 0; q < batch; ++q) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
          dx[q * r * c + i * c + j] += g[q * r * c + j * r + i];
        }
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tape& t = tape_of(a);
  Array out = a.value().reshaped(std::move(shape));
  return t.record(std::move(out), {a},
                  [a](Tape& t, const Array& g, const Array&) { accumulate(t, a, g); });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Array& x = a.value();
  const Array& y = b.value();
  if (!is_suffix(x.shape(), y.shape())) {
    throw std::invalid_argument("add shape mismatch: " + shape_string(x.shape()) +
                                " vs " + shape_string(y.shape()));
  }
  const std::size_t bs = y.size();
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i % bs];
  return t.record(std::move(out), {a, b}, [a, b, bs](Tape& t, const Array& g, const Array&) {
    accumulate(t, a, g);
    if (t.requires_grad(b)) {
      Array& db = t.grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) db[i % bs] += g[i];
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Array& x = a.value();
  const Array& y = b.value();
  if (x.shape() != y.shape()) {
    throw std::invalid_argument("mul shape mismatch: " + shape_string(x.shape()) +
                                " vs " + shape_string(y.shape()));
  }
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, const Array& g, const Array&) {
    const Array& x = a.value();
    const Array& y = b.value();
    if (t.requires_grad(a)) {
      Array& da = t.grad_of(a);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
    }
    if (t.requires_grad(b)) {
      Array& db = t.grad_of(b);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * x[i];
    }
  });
}

Var mul_const(Var a, const Array& c) {
  Tape& t = tape_of(a);
  const Array& x = a.value();
  if (x.shape() != c.shape()) {
    throw std::invalid_argument("mul_const shape mismatch: " +
                                shape_string(x.shape()) + " vs " +
                                shape_string(c.shape()));
  }
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * c[i];
  return t.record(std::move(out), {a}, [a, c](Tape& t, const Array& g, const Array&) {
    if (!t.requires_grad(a)) return;
    Array& da = t.grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * c[i];
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var concat_last_dim(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat of zero parts");
  Tape& t = tape_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  Shape lead(s0.begin(), s0.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != s0.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw std::invalid_argument("concat shape mismatch: " + shape_string(s0) +
                                  " vs " + shape_string(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = shape_size(lead);
  Shape os = lead;
  os.push_back(total);
  Array out(os);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& x = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(x.data() + r * widths[k], widths[k],
                  out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), inputs,
                  [inputs, widths, rows, total](Tape& t, const Array& g, const Array&) {
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < inputs.size(); ++k) {
                      if (t.requires_grad(inputs[k])) {
                        Array& dx = t.grad_of(inputs[k]);
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t j = 0; j < widths[k]; ++j) {
                            dx[r * widths[k] + j] += g[r * total + offset + j];
                          }
                        }
                      }
                      offset += widths[k];
                    }
                  });
}

Var slice_last_dim(Var a, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  const std::size_t width = s.back();
  if (begin >= end || end > width) {
    throw std::invalid_argument("slice [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") out of range for " +
                                shape_string(s));
  }
  const std::size_t rows = a.size() / width;
  const std::size_t w = end - begin;
  Shape os = s;
  os.back() = w;
  Array out(os);
  const Array& x = a.value();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * width + begin, w, out.data() + r * w);
  }
  return t.record(std::move(out), {a},
                  [a, rows, width, begin, w](Tape& t, const Array& g, const Array&) {
                    if (!t.requires_grad(a)) return;
                    Array& dx = t.grad_of(a);
                    for (std::size_t r = 0; r < rows; ++r) {
                      for (std::size_t j = 0; j < w; ++j) {
                        dx[r * width + begin + j] += g[r * w + j];
                      }
                    }
                  });
}

Var stack(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("stack of zero parts");
  Tape& t = tape_of(parts[0]);
  const Shape& s0 = parts[0].shape();
  if (axis > s0.size()) throw std::invalid_argument("stack axis out of range");
  for (const Var& p : parts) {
    if (p.shape() != s0) {
      throw std::invalid_argument("stack shape mismatch: " + shape_string(s0) +
                                  " vs " + shape_string(p.shape()));
    }
  }
  const std::size_t outer = shape_size(Shape(s0.begin(), s0.begin() + axis));
  const std::size_t inner = shape_size(Shape(s0.begin() + axis, s0.end()));
  const std::size_t n = parts.size();
  Shape os = s0;
  os.insert(os.begin() + static_cast<std::ptrdiff_t>(axis), n);
  Array out(os);
  for (std::size_t k = 0; k < n; ++k) {
    const Array& x = parts[k].value();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(x.data() + o * inner, inner, out.data() + (o * n + k) * inner);
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), inputs,
                  [inputs, outer, inner, n](Tape& t, const Array& g, const Array&) {
                    for (std::size_t k = 0; k < n; ++k) {
                      if (!t.requires_grad(inputs[k])) continue;
                      Array& dx = t.grad_of(inputs[k]);
                      for (std::size_t o = 0; o < outer; ++o) {
                        for (std::size_t i = 0; i < inner; ++i) {
                          dx[o * inner + i] += g[(o * n + k) * inner + i];
                        }
                      }
                    }
                  });
}

Var select(Var a, std::size_t axis, std::size_t index) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (axis >= s.size() || index >= s[axis]) {
    throw std::invalid_argument("select index out of range for " + shape_string(s));
  }
  const std::size_t outer = shape_size(Shape(s.begin(), s.begin() + axis));
  const std::size_t mid = s[axis];
  const std::size_t inner = shape_size(Shape(s.begin() + axis + 1, s.end()));
  Shape os = s;
  os.erase(os.begin() + static_cast<std::ptrdiff_t>(axis));
  if (os.empty()) os = {1};
  Array out(os);
  const Array& x = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data() + (o * mid + index) * inner, inner,
                out.data() + o * inner);
  }
  return t.record(std::move(out), {a},
                  [a, outer, mid, inner, index](Tape& t, const Array& g, const Array&) {
                    if (!t.requires_grad(a)) return;
                    Array& dx = t.grad_of(a);
                    for (std::size_t o = 0; o < outer; ++o) {
                      for (std::size_t i = 0; i < inner; ++i) {
                        dx[(o * mid + index) * inner + i] += g[o * inner + i];
                      }
                    }
                  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (s.size() != 2) {
    throw std::invalid_argument("gather_rows needs rank 2, got " + shape_string(s));
  }
  const std::size_t w = s[1];
  Array out({rows.size(), w});
  const Array& x = a.value();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= s[0]) throw std::out_of_range("gather_rows index out of range");
    std::copy_n(x.data() + rows[i] * w, w, out.data() + i * w);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(out), {a}, [a, idx, w](Tape& t, const Array& g, const Array&) {
    if (!t.requires_grad(a)) return;
    Array& dx = t.grad_of(a);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < w; ++j) dx[idx[i] * w + j] += g[i * w + j];
    }
  });
}

Var outer_sum(Var col, Var row) {
  Tape& t = tape_of(col);
  const std::size_t n = col.size();
  const std::size_t m = row.size();
  const bool col_ok = col.shape().size() == 1 ||
                      (col.shape().size() == 2 && col.shape()[1] == 1);
  const bool row_ok = row.shape().size() == 1 ||
                      (row.shape().size() == 2 && row.shape()[1] == 1);
  if (!col_ok || !row_ok) {
    throw std::invalid_argument("outer_sum needs vectors, got " +
                                shape_string(col.shape()) + " and " +
                                shape_string(row.shape()));
  }
  Array out({n, m});
  const Array& c = col.value();
  const Array& r = row.value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = c[i] + r[j];
  }
  return t.record(std::move(out), {col, row},
                  [col, row, n, m](Tape& t, const Array& g, const Array&) {
                    if (t.requires_grad(col)) {
                      Array& dc = t.grad_of(col);
                      for (std::size_t i = 0; i < n; ++i) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < m; ++j) s += g[i * m + j];
                        dc[i] += s;
                      }
                    }
                    if (t.requires_grad(row)) {
                      Array& dr = t.grad_of(row);
                      for (std::size_t i = 0; i < n; ++i) {
                        for (std::size_t j = 0; j < m; ++j) dr[j] += g[i * m + j];
                      }
                    }
                  });
}

Var sigmoid(Var a) {
  auto f = [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  return unary(a, f, [f](double x) {
    const double s = f(x);
    return s * (1.0 - s);
  });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x) { return x > 0 ? 1.0 : slope; });
}

Var elu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : std::expm1(x); },
      [](double x) { return x > 0 ? 1.0 : std::exp(x); });
}

Var log(Var a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double x : a.value().values()) s += x;
  return t.record(Array::scalar(s), {a}, [a](Tape& t, const Array& g, const Array&) {
    if (!t.requires_grad(a)) return;
    Array& dx = t.grad_of(a);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Var inner_product(Var a, Var b) {
  Tape& t = tape_of(a);
  const Shape& s = a.shape();
  if (s != b.shape() || s.size() > 2) {
    throw std::invalid_argument("inner_product shape mismatch: " + shape_string(s) +
                                " vs " + shape_string(b.shape()));
  }
  const std::size_t rows = s.size() == 2 ? s[0] : 1;
  const std::size_t w = s.back();
  Array out({rows});
  const Array& x = a.value();
  const Array& y = b.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w; ++j) acc += x[r * w + j] * y[r * w + j];
    out[r] = acc;
  }
  return t.record(std::move(out), {a, b}, [a, b, rows, w](Tape& t, const Array& g, const Array&) {
    const Array& x = a.value();
    const Array& y = b.value();
    if (t.requires_grad(a)) {
      Array& da = t.grad_of(a);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < w; ++j) da[r * w + j] += g[r] * y[r * w + j];
      }
    }
    if (t.requires_grad(b)) {
      Array& db = t.grad_of(b);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < w; ++j) db[r * w + j] += g[r] * x[r * w + j];
      }
    }
  });
}

Var masked_softmax(Var logits, const Array* mask) {
  Tape& t = tape_of(logits);
  const Array& x = logits.value();
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  std::size_t ms = 0;
  if (mask != nullptr) {
    if (!is_suffix(x.shape(), mask->shape()) || mask->shape().back() != n) {
      throw std::invalid_argument("mask shape " + shape_string(mask->shape()) +
                                  " does not fit logits " + shape_string(x.shape()));
    }
    ms = mask->size();
  }
  auto masked = [&](std::size_t flat) {
    return mask != nullptr && (*mask)[flat % ms] <= kMaskedLogit;
  };
  Array out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (masked(base + j)) continue;
      const double v = x[base + j] + (mask ? (*mask)[(base + j) % ms] : 0.0);
      mx = any ? std::max(mx, v) : v;
      any = true;
    }
    if (!any) {
      throw std::invalid_argument("masked_softmax: row " + std::to_string(r) +
                                  " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (masked(base + j)) continue;
      const double e =
          std::exp(x[base + j] + (mask ? (*mask)[(base + j) % ms] : 0.0) - mx);
      out[base + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[base + j] /= z;
  }
  // Masked positions have y == 0 and therefore receive zero gradient.
  return t.record(std::move(out), {logits},
                  [logits, rows, n](Tape& t, const Array& g, const Array& y) {
                    if (!t.requires_grad(logits)) return;
                    Array& dx = t.grad_of(logits);
                    for (std::size_t r = 0; r < rows; ++r) {
                      const std::size_t base = r * n;
                      double dot = 0.0;
                      for (std::size_t j = 0; j < n; ++j) {
                        dot += y[base + j] * g[base + j];
                      }
                      for (std::size_t j = 0; j < n; ++j) {
                        dx[base + j] += y[base + j] * (g[base + j] - dot);
                      }
                    }
                  });
}

}  // namespace grl::ad
