#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "fare/matrix.hpp"

namespace fare {

// Index lists restricting row-wise operations: supports[i] are the column
// indices row i may touch. Shared between masked softmax and masked sums.
using RowSupports = std::vector<std::vector<std::size_t>>;

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode automatic differentiation over a small closed set of dense
// primitives. Values are computed eagerly as operations are recorded;
// backward() replays the record once in reverse, accumulating
// vector-Jacobian products. One tape per loss evaluation; tapes are not
// shared across threads.
class Tape {
public:
  Var leaf(Matrix value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double c);
  // A (n x d) plus a row vector (1 x d) broadcast over rows.
  Var add_rowvec(Var a, Var v);
  Var exp(Var a);
  Var log(Var a);
  Var relu(Var a);
  Var softmax_rows(Var a);
  // Softmax restricted to each row's support; entries off the support are
  // exactly 0.0 and receive no gradient.
  Var masked_softmax_rows(Var a, std::shared_ptr<const RowSupports> supports);
  Var l2_normalize_rows(Var a);
  // Row-wise reductions to an n x 1 column.
  Var row_dot(Var a, Var b);  // out_i = sum_j a_ij * b_ij
  Var masked_row_sum(Var a, std::shared_ptr<const RowSupports> supports);
  Var row_logsumexp(Var a);
  // out_i = a(i, idx[i]) for a per-row column index.
  Var gather_rows(Var a, std::vector<std::size_t> idx);
  Var diag(Var a);  // main diagonal of a square matrix, as n x 1
  Var sum(Var a);   // total reduction to 1 x 1

  const Matrix& value(Var v) const;
  // Runs reverse accumulation from a scalar (1 x 1) root. Gradients of
  // leaves not reachable from the root are zero.
  void backward(Var root);
  const Matrix& grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

private:
  enum class Op {
    kLeaf,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kHadamard,
    kScale,
    kAddRowvec,
    kExp,
    kLog,
    kRelu,
    kSoftmaxRows,
    kMaskedSoftmaxRows,
    kL2NormalizeRows,
    kRowDot,
    kMaskedRowSum,
    kRowLogsumexp,
    kGatherRows,
    kDiag,
    kSum,
  };

  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    Matrix value;
    Matrix grad;
    double scalar = 0.0;
    std::shared_ptr<const RowSupports> supports;
    std::vector<std::size_t> indices;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check(Var v) const;
  void backward_step(std::size_t idx);

  std::vector<Node> nodes_;
};

}  // namespace fare
