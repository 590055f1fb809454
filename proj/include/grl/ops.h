#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grl/array.h"
#include "grl/tape.h"

// Differentiable primitives. Every function records one node on the tape of
// its inputs and registers the matching backward rule.
namespace grl::ad {

// Entries at or below this value in an additive mask count as -inf.
inline constexpr double kMaskedLogit = -1e30;

// Rank-2 product [m x k]·[k x n], or batched rank-3 [b x m x k]·[b x k x n].
Var matmul(Var a, Var b);
// Swaps the last two axes (rank 2 or 3).
Var transpose(Var a);
Var reshape(Var a, Shape shape);

// Elementwise a + b. `b` may also have a shape equal to a trailing suffix of
// a's shape, in which case it is broadcast over the leading axes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// Elementwise product with a constant array of the same shape.
Var mul_const(Var a, const Array& c);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

Var concat_last_dim(std::span<const Var> parts);
// Columns [begin, end) of the last axis.
Var slice_last_dim(Var a, std::size_t begin, std::size_t end);
// Stacks equal-shaped values along a new axis inserted at `axis`.
Var stack(std::span<const Var> parts, std::size_t axis);
// Removes `axis` by taking position `index` along it.
Var select(Var a, std::size_t axis, std::size_t index);
// Rows of a rank-2 value; indices may repeat.
Var gather_rows(Var a, std::span<const std::size_t> rows);
// out[i][j] = col[i] + row[j] for col [n x 1] (or [n]) and row [m x 1] (or [m]).
Var outer_sum(Var col, Var row);

Var sigmoid(Var a);
Var leaky_relu(Var a, double slope);
Var elu(Var a);
Var log(Var a);
// Values outside [lo, hi] are clamped and receive zero gradient.
Var clamp(Var a, double lo, double hi);

Var sum(Var a);
Var mean(Var a);
// Row-wise dot products of two [n x k] values -> [n]; two vectors -> [1].
Var inner_product(Var a, Var b);

// Softmax over the last axis. `mask` is additive with entries 0 or -inf
// (anything <= kMaskedLogit), shaped like a trailing suffix of the logits and
// broadcast over the leading axes. Masked outputs are exactly zero. Throws if
// a row has no unmasked entry.
Var masked_softmax(Var logits, const Array* mask = nullptr);

}  // namespace grl::ad
