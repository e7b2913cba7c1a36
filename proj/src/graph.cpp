#include "crosstag/graph.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "crosstag/params.hpp"

namespace crosstag {

ShapeError::ShapeError(const std::string& op, const Shape& a, const Shape& b)
    : std::runtime_error(op + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b)) {}

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kParam: return "param";
    case Op::kMatVec: return "matvec";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kSMul: return "smul";
    case Op::kConcat: return "concat";
    case Op::kRelu: return "relu";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSoftmax: return "softmax";
    case Op::kLog: return "log";
    case Op::kScale: return "scale";
    case Op::kBilinear: return "bilinear";
    case Op::kDropout: return "dropout";
    case Op::kNll: return "nll";
    case Op::kGradReverse: return "grad_reverse";
    case Op::kSum: return "sum";
    case Op::kSelectRow: return "select_row";
    case Op::kIndex: return "index";
  }
  return "?";
}

Graph::Graph(Dtype dtype, bool training, Rng* dropout_rng)
    : dtype_(dtype), training_(training), dropout_rng_(dropout_rng) {}

Node Graph::push(NodeRec&& r) {
  nodes_.push_back(std::move(r));
  return Node{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Node Graph::input(Array v) {
  if (v.dtype() != dtype_) throw std::invalid_argument("Graph::input: dtype mismatch");
  NodeRec r;
  r.op = Op::kLeaf;
  r.value = std::move(v);
  return push(std::move(r));
}

Node Graph::input(Shape shape, const std::vector<double>& vals) {
  return input(Array::from(dtype_, std::move(shape), vals));
}

Node Graph::scalar_input(double v) { return input(Array::scalar(dtype_, v)); }

Node Graph::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  if (p.value.dtype() != dtype_) throw std::invalid_argument("Graph::param: dtype mismatch for " + p.name);
  NodeRec r;
  r.op = Op::kParam;
  r.requires_grad = true;
  r.value = p.value;  // copy; params are small at this scale
  r.param = &p;
  Node n = push(std::move(r));
  param_nodes_.emplace(&p, n);
  return n;
}

Node Graph::detach(Node x) {
  NodeRec r;
  r.op = Op::kLeaf;
  r.value = rec(x).value;
  return push(std::move(r));
}

Node Graph::unary(Op op, Node x) {
  NodeRec r;
  r.op = op;
  r.requires_grad = rec(x).requires_grad;
  r.inputs = {x.id};
  r.value = Array(dtype_, rec(x).value.shape());
  return push(std::move(r));
}

Node Graph::matvec(Node w, Node x) {
  const Array& wv = rec(w).value;
  const Array& xv = rec(x).value;
  if (wv.shape().size() != 2 || xv.shape().size() != 1 || wv.shape()[1] != xv.shape()[0])
    throw ShapeError("matvec", wv.shape(), xv.shape());
  std::size_t m = wv.shape()[0], n = wv.shape()[1];
  NodeRec r;
  r.op = Op::kMatVec;
  r.requires_grad = rec(w).requires_grad || rec(x).requires_grad;
  r.inputs = {w.id, x.id};
  r.value = Array(dtype_, Shape{m});
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* W = wv.data<T>();
    const T* X = xv.data<T>();
    T* Y = r.value.data<T>();
    for (std::size_t i = 0; i < m; ++i) {
      T acc = 0;
      const T* row = W + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * X[j];
      Y[i] = acc;
    }
  });
  return push(std::move(r));
}

Node Graph::add(Node a, Node b) {
  const Array& av = rec(a).value;
  const Array& bv = rec(b).value;
  if (av.shape() != bv.shape()) throw ShapeError("add", av.shape(), bv.shape());
  NodeRec r;
  r.op = Op::kAdd;
  r.requires_grad = rec(a).requires_grad || rec(b).requires_grad;
  r.inputs = {a.id, b.id};
  r.value = Array(dtype_, av.shape());
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* A = av.data<T>();
    const T* B = bv.data<T>();
    T* Y = r.value.data<T>();
    for (std::size_t i = 0; i < av.numel(); ++i) Y[i] = A[i] + B[i];
  });
  return push(std::move(r));
}

Node Graph::mul(Node a, Node b) {
  const Array& av = rec(a).value;
  const Array& bv = rec(b).value;
  if (av.shape() != bv.shape()) throw ShapeError("mul", av.shape(), bv.shape());
  NodeRec r;
  r.op = Op::kMul;
  r.requires_grad = rec(a).requires_grad || rec(b).requires_grad;
  r.inputs = {a.id, b.id};
  r.value = Array(dtype_, av.shape());
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* A = av.data<T>();
    const T* B = bv.data<T>();
    T* Y = r.value.data<T>();
    for (std::size_t i = 0; i < av.numel(); ++i) Y[i] = A[i] * B[i];
  });
  return push(std::move(r));
}

Node Graph::smul(Node scalar, Node vec) {
  const Array& sv = rec(scalar).value;
  const Array& xv = rec(vec).value;
  if (sv.numel() != 1) throw ShapeError("smul", sv.shape(), xv.shape());
  NodeRec r;
  r.op = Op::kSMul;
  r.requires_grad = rec(scalar).requires_grad || rec(vec).requires_grad;
  r.inputs = {scalar.id, vec.id};
  r.value = Array(dtype_, xv.shape());
  dispatch_dtype(dtype_, [&]<typename T>() {
    T s = sv.data<T>()[0];
    const T* X = xv.data<T>();
    T* Y = r.value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = s * X[i];
  });
  return push(std::move(r));
}

Node Graph::concat(const std::vector<Node>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  std::size_t total = 0;
  bool needs = false;
  for (Node x : xs) {
    const Array& v = rec(x).value;
    if (v.shape().size() != 1) throw ShapeError("concat", v.shape(), Shape{0});
    total += v.numel();
    needs = needs || rec(x).requires_grad;
  }
  NodeRec r;
  r.op = Op::kConcat;
  r.requires_grad = needs;
  for (Node x : xs) r.inputs.push_back(x.id);
  r.value = Array(dtype_, Shape{total});
  dispatch_dtype(dtype_, [&]<typename T>() {
    T* Y = r.value.data<T>();
    std::size_t off = 0;
    for (Node x : xs) {
      const Array& v = rec(x).value;
      std::memcpy(Y + off, v.data<T>(), v.numel() * sizeof(T));
      off += v.numel();
    }
  });
  return push(std::move(r));
}

Node Graph::relu(Node x) {
  Node n = unary(Op::kRelu, x);
  const Array& xv = rec(x).value;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = X[i] > T(0) ? X[i] : T(0);
  });
  return n;
}

Node Graph::tanh_(Node x) {
  Node n = unary(Op::kTanh, x);
  const Array& xv = rec(x).value;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = std::tanh(X[i]);
  });
  return n;
}

Node Graph::sigmoid(Node x) {
  Node n = unary(Op::kSigmoid, x);
  const Array& xv = rec(x).value;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = T(1) / (T(1) + std::exp(-X[i]));
  });
  return n;
}

Node Graph::softmax(Node x) {
  Node n = unary(Op::kSoftmax, x);
  const Array& xv = rec(x).value;
  const Shape& s = xv.shape();
  std::size_t cols = s.back();
  std::size_t rows = xv.numel() / cols;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* xr = X + r * cols;
      T* yr = Y + r * cols;
      T mx = xr[0];
      for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
      T z = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        yr[j] = std::exp(xr[j] - mx);
        z += yr[j];
      }
      for (std::size_t j = 0; j < cols; ++j) yr[j] /= z;
    }
  });
  return n;
}

Node Graph::log_(Node x) {
  Node n = unary(Op::kLog, x);
  const Array& xv = rec(x).value;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = std::log(X[i]);
  });
  return n;
}

Node Graph::scale(Node x, double s) {
  Node n = unary(Op::kScale, x);
  rec(n).scalar = s;
  const Array& xv = rec(x).value;
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    T* Y = rec(n).value.data<T>();
    T f = static_cast<T>(s);
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = f * X[i];
  });
  return n;
}

Node Graph::bilinear(Node m, Node g, Node h, bool transposed) {
  const Array& mv = rec(m).value;
  const Array& gv = rec(g).value;
  const Array& hv = rec(h).value;
  if (mv.shape().size() != 1 || hv.shape().size() != 1 || gv.shape().size() != 3 ||
      gv.shape()[1] != mv.shape()[0] || gv.shape()[2] != hv.shape()[0] ||
      mv.shape()[0] != hv.shape()[0])
    throw ShapeError("bilinear", gv.shape(), mv.shape());
  std::size_t K = gv.shape()[0], d = mv.shape()[0];
  NodeRec r;
  r.op = Op::kBilinear;
  r.requires_grad = rec(m).requires_grad || rec(g).requires_grad || rec(h).requires_grad;
  r.inputs = {m.id, g.id, h.id};
  r.transposed = transposed;
  r.value = Array(dtype_, Shape{K});
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* M = mv.data<T>();
    const T* G = gv.data<T>();
    const T* H = hv.data<T>();
    T* Y = r.value.data<T>();
    for (std::size_t k = 0; k < K; ++k) {
      const T* Gk = G + k * d * d;
      T acc = 0;
      if (!transposed) {
        for (std::size_t a = 0; a < d; ++a) {
          const T* row = Gk + a * d;
          T inner = 0;
          for (std::size_t b = 0; b < d; ++b) inner += row[b] * H[b];
          acc += M[a] * inner;
        }
      } else {
        // out[k] = sum_{a,b} M[a] * Gk[b][a] * H[b]
        for (std::size_t b = 0; b < d; ++b) {
          const T* row = Gk + b * d;
          T inner = 0;
          for (std::size_t a = 0; a < d; ++a) inner += row[a] * M[a];
          acc += H[b] * inner;
        }
      }
      Y[k] = acc;
    }
  });
  return push(std::move(r));
}

Node Graph::dropout(Node x, double rate) {
  if (!training_ || rate <= 0.0) return x;
  if (!dropout_rng_) throw std::logic_error("dropout: graph built without a dropout stream");
  double keep = 1.0 - rate;
  Array mask(dtype_, rec(x).value.shape());
  for (std::size_t i = 0; i < mask.numel(); ++i)
    mask.set(i, dropout_rng_->bernoulli(keep) ? 1.0 / keep : 0.0);
  Node n = unary(Op::kDropout, x);
  const Array& xv = rec(x).value;  // re-read: unary() may reallocate the node pool
  dispatch_dtype(dtype_, [&]<typename T>() {
    const T* X = xv.data<T>();
    const T* Mk = mask.data<T>();
    T* Y = rec(n).value.data<T>();
    for (std::size_t i = 0; i < xv.numel(); ++i) Y[i] = X[i] * Mk[i];
  });
  rec(n).mask = std::move(mask);
  return n;
}

Node Graph::nll(Node probs, std::int64_t label) {
  const Array& pv = rec(probs).value;
  if (pv.shape().size() != 1 || label < 0 || static_cast<std::size_t>(label) >= pv.numel())
    throw std::invalid_argument("nll: label out of range");
  NodeRec r;
  r.op = Op::kNll;
  r.requires_grad = rec(probs).requires_grad;
  r.inputs = {probs.id};
  r.index = label;
  // saturate at the dtype's minimum normal: keeps f32 training finite when a
  // softmax output underflows (loss caps near 87.3 in f32)
  double p = pv.at(static_cast<std::size_t>(label));
  double floor = dtype_ == Dtype::F32 ? static_cast<double>(std::numeric_limits<float>::min())
                                      : std::numeric_limits<double>::min();
  r.value = Array::scalar(dtype_, -std::log(std::max(p, floor)));
  return push(std::move(r));
}

Node Graph::grad_reverse(Node x, double lambda) {
  if (lambda < 0) throw std::invalid_argument("grad_reverse: lambda must be >= 0");
  Node n = unary(Op::kGradReverse, x);
  rec(n).scalar = lambda;
  rec(n).value = rec(x).value;  // exact identity forward
  return n;
}

Node Graph::sum(Node x) {
  const Array& xv = rec(x).value;
  NodeRec r;
  r.op = Op::kSum;
  r.requires_grad = rec(x).requires_grad;
  r.inputs = {x.id};
  double acc = 0;
  for (std::size_t i = 0; i < xv.numel(); ++i) acc += xv.at(i);
  r.value = Array::scalar(dtype_, acc);
  return push(std::move(r));
}

Node Graph::select_row(Node matrix, std::size_t row) {
  const Array& mv = rec(matrix).value;
  if (mv.shape().size() != 2 || row >= mv.shape()[0])
    throw std::invalid_argument("select_row: row out of range");
  std::size_t cols = mv.shape()[1];
  NodeRec r;
  r.op = Op::kSelectRow;
  r.requires_grad = rec(matrix).requires_grad;
  r.inputs = {matrix.id};
  r.index = static_cast<std::int64_t>(row);
  r.value = Array(dtype_, Shape{cols});
  dispatch_dtype(dtype_, [&]<typename T>() {
    std::memcpy(r.value.data<T>(), mv.data<T>() + row * cols, cols * sizeof(T));
  });
  return push(std::move(r));
}

Node Graph::index(Node vec, std::size_t i) {
  const Array& xv = rec(vec).value;
  if (xv.shape().size() != 1 || i >= xv.numel())
    throw std::invalid_argument("index: position out of range");
  NodeRec r;
  r.op = Op::kIndex;
  r.requires_grad = rec(vec).requires_grad;
  r.inputs = {vec.id};
  r.index = static_cast<std::int64_t>(i);
  r.value = Array::scalar(dtype_, xv.at(i));
  return push(std::move(r));
}

const Array& Graph::grad(Node n) const {
  const NodeRec& r = rec(n);
  if (r.grad.empty()) throw std::logic_error("grad: node was not reached by backward");
  return r.grad;
}

double Graph::scalar_value(Node n) const {
  const Array& v = rec(n).value;
  if (v.numel() != 1) throw std::logic_error("scalar_value: node is not scalar");
  return v.at(0);
}

void Graph::ensure_grad(NodeRec& r) {
  if (r.grad.empty()) r.grad = Array(dtype_, r.value.shape());
}

template <typename T>
void Graph::backward_node(NodeRec& r) {
  const T* gy = r.grad.data<T>();
  auto gin = [&](std::size_t slot) -> T* {
    NodeRec& in = nodes_[r.inputs[slot]];
    ensure_grad(in);
    return in.grad.data<T>();
  };
  auto want = [&](std::size_t slot) { return nodes_[r.inputs[slot]].requires_grad; };
  auto val = [&](std::size_t slot) -> const Array& { return nodes_[r.inputs[slot]].value; };

  switch (r.op) {
    case Op::kLeaf:
    case Op::kParam:
      break;
    case Op::kMatVec: {
      const Array& wv = val(0);
      const Array& xv = val(1);
      std::size_t m = wv.shape()[0], n = wv.shape()[1];
      const T* W = wv.data<T>();
      const T* X = xv.data<T>();
      if (want(0)) {
        T* gw = gin(0);
        for (std::size_t i = 0; i < m; ++i) {
          T g = gy[i];
          T* row = gw + i * n;
          for (std::size_t j = 0; j < n; ++j) row[j] += g * X[j];
        }
      }
      if (want(1)) {
        T* gx = gin(1);
        for (std::size_t i = 0; i < m; ++i) {
          T g = gy[i];
          const T* row = W + i * n;
          for (std::size_t j = 0; j < n; ++j) gx[j] += g * row[j];
        }
      }
      break;
    }
    case Op::kAdd: {
      std::size_t n = r.value.numel();
      for (std::size_t slot = 0; slot < 2; ++slot) {
        if (!want(slot)) continue;
        T* g = gin(slot);
        for (std::size_t i = 0; i < n; ++i) g[i] += gy[i];
      }
      break;
    }
    case Op::kMul: {
      std::size_t n = r.value.numel();
      const T* A = val(0).template data<T>();
      const T* B = val(1).template data<T>();
      if (want(0)) {
        T* g = gin(0);
        for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * B[i];
      }
      if (want(1)) {
        T* g = gin(1);
        for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * A[i];
      }
      break;
    }
    case Op::kSMul: {
      std::size_t n = r.value.numel();
      T s = val(0).template data<T>()[0];
      const T* X = val(1).template data<T>();
      if (want(0)) {
        T acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += gy[i] * X[i];
        gin(0)[0] += acc;
      }
      if (want(1)) {
        T* g = gin(1);
        for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * s;
      }
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::size_t slot = 0; slot < r.inputs.size(); ++slot) {
        std::size_t n = val(slot).numel();
        if (want(slot)) {
          T* g = gin(slot);
          for (std::size_t i = 0; i < n; ++i) g[i] += gy[off + i];
        }
        off += n;
      }
      break;
    }
    case Op::kRelu: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      const T* X = val(0).template data<T>();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i)
        if (X[i] > T(0)) g[i] += gy[i];
      break;
    }
    case Op::kTanh: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      const T* Y = r.value.data<T>();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * (T(1) - Y[i] * Y[i]);
      break;
    }
    case Op::kSigmoid: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      const T* Y = r.value.data<T>();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * Y[i] * (T(1) - Y[i]);
      break;
    }
    case Op::kSoftmax: {
      if (!want(0)) break;
      std::size_t cols = r.value.shape().back();
      std::size_t rows = r.value.numel() / cols;
      const T* Y = r.value.data<T>();
      T* g = gin(0);
      for (std::size_t rr = 0; rr < rows; ++rr) {
        const T* yr = Y + rr * cols;
        const T* gr = gy + rr * cols;
        T dot = 0;
        for (std::size_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
        T* gx = g + rr * cols;
        for (std::size_t j = 0; j < cols; ++j) gx[j] += yr[j] * (gr[j] - dot);
      }
      break;
    }
    case Op::kLog: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      const T* X = val(0).template data<T>();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] / X[i];
      break;
    }
    case Op::kScale: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      T f = static_cast<T>(r.scalar);
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * f;
      break;
    }
    case Op::kBilinear: {
      const Array& mv = val(0);
      const Array& gvv = val(1);
      const Array& hv = val(2);
      std::size_t K = gvv.shape()[0], d = mv.shape()[0];
      const T* M = mv.data<T>();
      const T* G = gvv.data<T>();
      const T* H = hv.data<T>();
      // For the transposed form swap the roles of (row, col) in each slice.
      const T* lhs = r.transposed ? H : M;  // multiplies rows
      const T* rhs = r.transposed ? M : H;  // multiplies cols
      T* glhs = nullptr;
      T* grhs = nullptr;
      if (r.transposed) {
        if (want(2)) glhs = gin(2);
        if (want(0)) grhs = gin(0);
      } else {
        if (want(0)) glhs = gin(0);
        if (want(2)) grhs = gin(2);
      }
      T* gG = want(1) ? gin(1) : nullptr;
      for (std::size_t k = 0; k < K; ++k) {
        T gk = gy[k];
        if (gk == T(0)) continue;
        const T* Gk = G + k * d * d;
        T* gGk = gG ? gG + k * d * d : nullptr;
        for (std::size_t a = 0; a < d; ++a) {
          const T* row = Gk + a * d;
          T la = lhs[a];
          if (glhs) {
            T inner = 0;
            for (std::size_t b = 0; b < d; ++b) inner += row[b] * rhs[b];
            glhs[a] += gk * inner;
          }
          if (grhs) {
            T gla = gk * la;
            for (std::size_t b = 0; b < d; ++b) grhs[b] += gla * row[b];
          }
          if (gGk) {
            T gla = gk * la;
            T* grow = gGk + a * d;
            for (std::size_t b = 0; b < d; ++b) grow[b] += gla * rhs[b];
          }
        }
      }
      break;
    }
    case Op::kDropout: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      const T* Mk = r.mask.data<T>();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[i] * Mk[i];
      break;
    }
    case Op::kNll: {
      if (!want(0)) break;
      const T* P = val(0).template data<T>();
      T* g = gin(0);
      std::size_t lbl = static_cast<std::size_t>(r.index);
      // saturate where -1/p would overflow the dtype; exact otherwise
      T p = std::max(P[lbl], std::numeric_limits<T>::min());
      g[lbl] += -gy[0] / p;
      break;
    }
    case Op::kGradReverse: {
      if (!want(0)) break;
      std::size_t n = r.value.numel();
      T f = static_cast<T>(-r.scalar);
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += f * gy[i];
      break;
    }
    case Op::kSum: {
      if (!want(0)) break;
      std::size_t n = val(0).numel();
      T* g = gin(0);
      for (std::size_t i = 0; i < n; ++i) g[i] += gy[0];
      break;
    }
    case Op::kSelectRow: {
      if (!want(0)) break;
      std::size_t cols = r.value.numel();
      T* g = gin(0) + static_cast<std::size_t>(r.index) * cols;
      for (std::size_t i = 0; i < cols; ++i) g[i] += gy[i];
      break;
    }
    case Op::kIndex: {
      if (!want(0)) break;
      gin(0)[static_cast<std::size_t>(r.index)] += gy[0];
      break;
    }
  }
}

void Graph::backward(Node root) {
  NodeRec& rr = rec(root);
  if (rr.value.numel() != 1) throw std::logic_error("backward: root must be scalar");
  ensure_grad(rr);
  rr.grad.set(0, 1.0);
  dispatch_dtype(dtype_, [&]<typename T>() {
    for (std::size_t i = root.id + 1; i-- > 0;) {
      NodeRec& r = nodes_[i];
      if (r.grad.empty() || !r.requires_grad) continue;
      backward_node<T>(r);
    }
  });
  // fold param-node grads into the persistent buffers
  for (auto& [p, node] : param_nodes_) {
    NodeRec& r = nodes_[node.id];
    if (r.grad.empty()) continue;
    Param* param = r.param;
    dispatch_dtype(dtype_, [&]<typename T>() {
      const T* g = r.grad.data<T>();
      T* pg = param->grad.data<T>();
      for (std::size_t i = 0; i < r.grad.numel(); ++i) pg[i] += g[i];
    });
    param->grad_touched = true;
  }
}

std::optional<std::pair<std::uint32_t, Op>> Graph::first_nonfinite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].value.all_finite()) return std::make_pair(static_cast<std::uint32_t>(i), nodes_[i].op);
  return std::nullopt;
}

}  // namespace crosstag
