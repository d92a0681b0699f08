#include "fare/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fare {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Var v) const {
  require(v.id >= 0 && static_cast<std::size_t>(v.id) < nodes_.size(),
          "Tape: variable " + std::to_string(v.id) + " is not on this tape");
}

const Tape::Node& Tape::node(Var v) const {
  check(v);
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  require(n.grad.size() == n.value.size(), "Tape: backward() has not been run");
  return n.grad;
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n;
  n.op = Op::kMatmul;
  n.a = a.id;
  n.b = b.id;
  n.value = fare::matmul(value(a), value(b));
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.value = fare::transpose(value(a));
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = fare::add(value(a), value(b));
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = fare::sub(value(a), value(b));
  return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.op = Op::kHadamard;
  n.a = a.id;
  n.b = b.id;
  n.value = fare::hadamard(value(a), value(b));
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.scalar = c;
  n.value = fare::scale(value(a), c);
  return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var v) {
  const Matrix& av = value(a);
  const Matrix& vv = value(v);
  require(vv.rows() == 1 && vv.cols() == av.cols(),
          "add_rowvec: vector must be 1x" + std::to_string(av.cols()) + ", got " + vv.shape_str());
  Node n;
  n.op = Op::kAddRowvec;
  n.a = a.id;
  n.b = v.id;
  n.value = av;
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) n.value(i, j) += vv(0, j);
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  Node n;
  n.op = Op::kExp;
  n.a = a.id;
  n.value = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] = std::exp(n.value.data()[i]);
  return push(std::move(n));
}

Var Tape::log(Var a) {
  Node n;
  n.op = Op::kLog;
  n.a = a.id;
  n.value = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] = std::log(n.value.data()[i]);
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.value = value(a);
  for (std::size_t i = 0; i < n.value.size(); ++i)
    n.value.data()[i] = n.value.data()[i] > 0.0 ? n.value.data()[i] : 0.0;
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a.id;
  n.value = fare::softmax_rows(value(a));
  return push(std::move(n));
}

Var Tape::masked_softmax_rows(Var a, std::shared_ptr<const RowSupports> supports) {
  const Matrix& av = value(a);
  require(supports != nullptr && supports->size() == av.rows(),
          "masked_softmax_rows: one support per row required");
  Node n;
  n.op = Op::kMaskedSoftmaxRows;
  n.a = a.id;
  n.supports = supports;
  n.value = Matrix(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    const auto& s = (*supports)[i];
    require(!s.empty(), "masked_softmax_rows: empty support for row " + std::to_string(i));
    double row_max = av(i, s[0]);
    for (std::size_t j : s) {
      require(j < av.cols(), "masked_softmax_rows: support index out of range");
      row_max = std::max(row_max, av(i, j));
    }
    double denom = 0.0;
    for (std::size_t j : s) denom += std::exp(av(i, j) - row_max);
    for (std::size_t j : s) n.value(i, j) = std::exp(av(i, j) - row_max) / denom;
  }
  return push(std::move(n));
}

Var Tape::l2_normalize_rows(Var a) {
  Node n;
  n.op = Op::kL2NormalizeRows;
  n.a = a.id;
  n.value = fare::l2_normalize_rows(value(a));
  return push(std::move(n));
}

Var Tape::row_dot(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require(av.same_shape(bv),
          "row_dot: shapes differ, " + av.shape_str() + " vs " + bv.shape_str());
  Node n;
  n.op = Op::kRowDot;
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) acc += av(i, j) * bv(i, j);
    n.value(i, 0) = acc;
  }
  return push(std::move(n));
}

Var Tape::masked_row_sum(Var a, std::shared_ptr<const RowSupports> supports) {
  const Matrix& av = value(a);
  require(supports != nullptr && supports->size() == av.rows(),
          "masked_row_sum: one support per row required");
  Node n;
  n.op = Op::kMaskedRowSum;
  n.a = a.id;
  n.supports = supports;
  n.value = Matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j : (*supports)[i]) {
      require(j < av.cols(), "masked_row_sum: support index out of range");
      acc += av(i, j);
    }
    n.value(i, 0) = acc;
  }
  return push(std::move(n));
}

Var Tape::row_logsumexp(Var a) {
  const Matrix& av = value(a);
  Node n;
  n.op = Op::kRowLogsumexp;
  n.a = a.id;
  n.value = Matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double row_max = av(i, 0);
    for (std::size_t j = 1; j < av.cols(); ++j) row_max = std::max(row_max, av(i, j));
    double acc = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) acc += std::exp(av(i, j) - row_max);
    n.value(i, 0) = row_max + std::log(acc);
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> idx) {
  const Matrix& av = value(a);
  require(idx.size() == av.rows(), "gather_rows: one index per row required");
  Node n;
  n.op = Op::kGatherRows;
  n.a = a.id;
  n.indices = std::move(idx);
  n.value = Matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    require(n.indices[i] < av.cols(), "gather_rows: index out of range at row " + std::to_string(i));
    n.value(i, 0) = av(i, n.indices[i]);
  }
  return push(std::move(n));
}

Var Tape::diag(Var a) {
  const Matrix& av = value(a);
  require(av.rows() == av.cols(), "diag: matrix must be square, got " + av.shape_str());
  Node n;
  n.op = Op::kDiag;
  n.a = a.id;
  n.value = Matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) n.value(i, 0) = av(i, i);
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  const Matrix& av = value(a);
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = Matrix(1, 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av.data()[i];
  n.value(0, 0) = acc;
  return push(std::move(n));
}

void Tape::backward(Var root) {
  check(root);
  const Node& r = nodes_[static_cast<std::size_t>(root.id)];
  require(r.value.rows() == 1 && r.value.cols() == 1,
          "backward: root must be a 1x1 scalar, got " + r.value.shape_str());
  for (Node& n : nodes_) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  nodes_[static_cast<std::size_t>(root.id)].grad(0, 0) = 1.0;
  for (std::size_t idx = static_cast<std::size_t>(root.id) + 1; idx-- > 0;) {
    backward_step(idx);
  }
}

void Tape::backward_step(std::size_t idx) {
  Node& n = nodes_[idx];
  if (n.op == Op::kLeaf) return;
  const Matrix& g = n.grad;
  Matrix& ga = nodes_[static_cast<std::size_t>(n.a)].grad;
  const Matrix& av = nodes_[static_cast<std::size_t>(n.a)].value;

  switch (n.op) {
    case Op::kMatmul: {
      const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
      Matrix& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
      const Matrix da = matmul_nt(g, bv);  // g * B^T
      const Matrix db = matmul_tn(av, g);  // A^T * g
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += da.data()[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] += db.data()[i];
      break;
    }
    case Op::kTranspose: {
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
      break;
    }
    case Op::kAdd: {
      Matrix& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data()[i] += g.data()[i];
        gb.data()[i] += g.data()[i];
      }
      break;
    }
    case Op::kSub: {
      Matrix& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data()[i] += g.data()[i];
        gb.data()[i] -= g.data()[i];
      }
      break;
    }
    case Op::kHadamard: {
      const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
      Matrix& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.data()[i] += g.data()[i] * bv.data()[i];
        gb.data()[i] += g.data()[i] * av.data()[i];
      }
      break;
    }
    case Op::kScale: {
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += n.scalar * g.data()[i];
      break;
    }
    case Op::kAddRowvec: {
      Matrix& gv = nodes_[static_cast<std::size_t>(n.b)].grad;
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
          ga(i, j) += g(i, j);
          gv(0, j) += g(i, j);
        }
      break;
    }
    case Op::kExp: {
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.data()[i] += g.data()[i] * n.value.data()[i];
      break;
    }
    case Op::kLog: {
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] / av.data()[i];
      break;
    }
    case Op::kRelu: {
      for (std::size_t i = 0; i < g.size(); ++i)
        if (av.data()[i] > 0.0) ga.data()[i] += g.data()[i];
      break;
    }
    case Op::kSoftmaxRows: {
      // dx_j = y_j * (g_j - sum_k g_k y_k)
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * n.value(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, j) += n.value(i, j) * (g(i, j) - dot);
      }
      break;
    }
    case Op::kMaskedSoftmaxRows: {
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const auto& s = (*n.supports)[i];
        double dot = 0.0;
        for (std::size_t j : s) dot += g(i, j) * n.value(i, j);
        for (std::size_t j : s) ga(i, j) += n.value(i, j) * (g(i, j) - dot);
      }
      break;
    }
    case Op::kL2NormalizeRows: {
      // y = x / |x|; dx = (g - (g . y) y) / |x|
      for (std::size_t i = 0; i < g.rows(); ++i) {
        const double norm = row_norm(av, i);
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * n.value(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j)
          ga(i, j) += (g(i, j) - dot * n.value(i, j)) / norm;
      }
      break;
    }
    case Op::kRowDot: {
      const Matrix& bv = nodes_[static_cast<std::size_t>(n.b)].value;
      Matrix& gb = nodes_[static_cast<std::size_t>(n.b)].grad;
      for (std::size_t i = 0; i < av.rows(); ++i) {
        const double gi = g(i, 0);
        for (std::size_t j = 0; j < av.cols(); ++j) {
          ga(i, j) += gi * bv(i, j);
          gb(i, j) += gi * av(i, j);
        }
      }
      break;
    }
    case Op::kMaskedRowSum: {
      for (std::size_t i = 0; i < av.rows(); ++i) {
        const double gi = g(i, 0);
        for (std::size_t j : (*n.supports)[i]) ga(i, j) += gi;
      }
      break;
    }
    case Op::kRowLogsumexp: {
      // d lse / dx_j = softmax(x)_j = exp(x_j - lse)
      for (std::size_t i = 0; i < av.rows(); ++i) {
        const double gi = g(i, 0);
        for (std::size_t j = 0; j < av.cols(); ++j)
          ga(i, j) += gi * std::exp(av(i, j) - n.value(i, 0));
      }
      break;
    }
    case Op::kGatherRows: {
      for (std::size_t i = 0; i < av.rows(); ++i) ga(i, n.indices[i]) += g(i, 0);
      break;
    }
    case Op::kDiag: {
      for (std::size_t i = 0; i < av.rows(); ++i) ga(i, i) += g(i, 0);
      break;
    }
    case Op::kSum: {
      const double gs = g(0, 0);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += gs;
      break;
    }
    case Op::kLeaf:
      break;
  }
}

}  // namespace fare
