#include "harpnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "harpnet/error.hpp"

namespace harpnet {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kDegenerateFrame: return "degenerate frame";
    case ErrorCode::kUnstableFilter: return "unstable filter";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kMissingData: return "missing data";
    case ErrorCode::kDivergence: return "training diverged";
    case ErrorCode::kModelMismatch: return "model/stream mismatch";
    case ErrorCode::kCorruptStream: return "corrupt stream";
    case ErrorCode::kBadMagic: return "bad magic";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kChecksumMismatch: return "checksum mismatch";
  }
  return "unknown error";
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    fail(ErrorCode::kShape, "tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::vector(std::vector<Real> data) {
  const std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

Real Tensor::item() const {
  if (data_.size() != 1) fail(ErrorCode::kShape, "item() on non-scalar tensor " + shape_string(shape_));
  return data_[0];
}

std::span<Real> Tensor::grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), Real(0));
  return grad_;
}

void Tensor::zero_grad() { grad_.assign(data_.size(), Real(0)); }

void Tensor::reshape(Shape shape) {
  if (shape_numel(shape) != data_.size()) {
    fail(ErrorCode::kShape, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

const Tensor& Var::value() const { return tape->value(id); }

// ---- tape ------------------------------------------------------------------

Var Tape::constant(Tensor value) {
  Node node;
  node.kind = OpKind::kConstant;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(Tensor& param) {
  Node node;
  node.kind = OpKind::kParameter;
  node.value = Tensor(param.shape(), std::vector<Real>(param.data().begin(), param.data().end()));
  node.bound = &param;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn fn) {
  Node node;
  node.kind = kind;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.tape != this) fail(ErrorCode::kInvalidArgument, "var belongs to a different tape");
    node.inputs.push_back(v.id);
    node.requires_grad = node.requires_grad || nodes_[v.id].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

std::span<Real> Tape::grad(std::size_t id) {
  Node& node = nodes_.at(id);
  if (node.grad.size() != node.value.numel()) node.grad.assign(node.value.numel(), Real(0));
  return node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) fail(ErrorCode::kInvalidArgument, "loss belongs to a different tape");
  if (value(loss.id).numel() != 1) {
    fail(ErrorCode::kShape, "backward() needs a scalar loss, got " + shape_string(value(loss.id).shape()));
  }
  for (Node& node : nodes_) node.grad.clear();
  grad(loss.id)[0] = Real(1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.requires_grad || node.grad.empty()) continue;
    if (node.backward) node.backward(*this, id);
    if (node.bound != nullptr) {
      auto dst = node.bound->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += node.grad[i];
    }
  }
}

std::vector<std::uint8_t> Tape::kink_signature() const {
  std::vector<std::uint8_t> sig;
  for (const Node& node : nodes_) {
    if (node.kind == OpKind::kLeakyRelu) {
      for (Real v : nodes_[node.inputs[0]].value.data()) sig.push_back(v > 0 ? 1 : 0);
    } else if (node.kind == OpKind::kSimilarity) {
      const auto x = nodes_[node.inputs[0]].value.data();
      const auto mu = nodes_[node.inputs[1]].value.data();
      for (Real xi : x)
        for (Real m : mu) sig.push_back(xi > m ? 2 : (xi < m ? 0 : 1));
    }
  }
  return sig;
}

// ---- operations --------------------------------------------------------------

namespace {

Tape& tape_of(Var a) {
  if (a.tape == nullptr) fail(ErrorCode::kInvalidArgument, "var is not attached to a tape");
  return *a.tape;
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) fail(ErrorCode::kInvalidArgument, "vars belong to different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShape, std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

// Four partial sums keep the reduction order fixed while letting the
// compiler pipeline the multiplies.
inline Real dot(const Real* a, const Real* b, std::size_t n) {
  Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(Real alpha, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

struct ConvGeometry {
  std::size_t c_in, c_out, kernel, length;
  std::ptrdiff_t pad;
  // Output range [t0, t1) where input index t + k - pad is in bounds.
  std::pair<std::size_t, std::size_t> range(std::size_t k) const {
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - pad;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(length);
    const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -off);
    const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(n, n - off);
    if (t1 <= t0) return {0, 0};
    return {static_cast<std::size_t>(t0), static_cast<std::size_t>(t1)};
  }
  std::ptrdiff_t offset(std::size_t k) const { return static_cast<std::ptrdiff_t>(k) - pad; }
};

}  // namespace

Var conv1d_same(Var input, Var weight, Var bias) {
  require_same_tape(input, weight);
  require_same_tape(input, bias);
  Tape& tape = tape_of(input);
  const Tensor& x = input.value();
  const Tensor& w = weight.value();
  const Tensor& b = bias.value();
  if (x.rank() != 2 || w.rank() != 3 || b.rank() != 1) {
    fail(ErrorCode::kShape, "conv1d_same: expected input [C_in x T], weight [C_out x C_in x K], bias [C_out]; got " +
                                shape_string(x.shape()) + ", " + shape_string(w.shape()) + ", " +
                                shape_string(b.shape()));
  }
  if (w.dim(1) != x.dim(0)) {
    fail(ErrorCode::kShape, "conv1d_same: input has " + std::to_string(x.dim(0)) + " channels, weight expects " +
                                std::to_string(w.dim(1)));
  }
  if (b.dim(0) != w.dim(0)) fail(ErrorCode::kShape, "conv1d_same: bias length does not match C_out");
  if (w.dim(2) % 2 == 0) fail(ErrorCode::kShape, "conv1d_same: kernel size must be odd");
  if (x.dim(1) == 0) fail(ErrorCode::kShape, "conv1d_same: empty input");

  const ConvGeometry g{x.dim(0), w.dim(0), w.dim(2), x.dim(1), static_cast<std::ptrdiff_t>(w.dim(2) / 2)};
  Tensor out({g.c_out, g.length});
  const Real* xp = x.data().data();
  const Real* wp = w.data().data();
  Real* op = out.data().data();
  for (std::size_t c = 0; c < g.c_out; ++c) {
    Real* oc = op + c * g.length;
    std::fill(oc, oc + g.length, b[c]);
    for (std::size_t i = 0; i < g.c_in; ++i) {
      const Real* xi = xp + i * g.length;
      const Real* wci = wp + (c * g.c_in + i) * g.kernel;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto [t0, t1] = g.range(k);
        if (t1 > t0) axpy(wci[k], xi + t0 + g.offset(k), oc + t0, t1 - t0);
      }
    }
  }

  return tape.record(OpKind::kConv1d, std::move(out), {input, weight, bias}, [g](Tape& t, std::size_t self) {
    const auto& in_ids = t.inputs(self);
    const std::size_t xid = in_ids[0], wid = in_ids[1], bid = in_ids[2];
    const Real* go = t.grad(self).data();
    const Real* xp = t.value(xid).data().data();
    const Real* wp = t.value(wid).data().data();
    if (t.requires_grad(bid)) {
      Real* gb = t.grad(bid).data();
      for (std::size_t c = 0; c < g.c_out; ++c) {
        Real s = 0;
        for (std::size_t n = 0; n < g.length; ++n) s += go[c * g.length + n];
        gb[c] += s;
      }
    }
    if (t.requires_grad(wid)) {
      Real* gw = t.grad(wid).data();
      for (std::size_t c = 0; c < g.c_out; ++c)
        for (std::size_t i = 0; i < g.c_in; ++i)
          for (std::size_t k = 0; k < g.kernel; ++k) {
            const auto [t0, t1] = g.range(k);
            if (t1 > t0)
              gw[(c * g.c_in + i) * g.kernel + k] +=
                  dot(go + c * g.length + t0, xp + i * g.length + t0 + g.offset(k), t1 - t0);
          }
    }
    if (t.requires_grad(xid)) {
      Real* gx = t.grad(xid).data();
      for (std::size_t c = 0; c < g.c_out; ++c)
        for (std::size_t i = 0; i < g.c_in; ++i)
          for (std::size_t k = 0; k < g.kernel; ++k) {
            const auto [t0, t1] = g.range(k);
            if (t1 > t0)
              axpy(wp[(c * g.c_in + i) * g.kernel + k], go + c * g.length + t0,
                   gx + i * g.length + t0 + g.offset(k), t1 - t0);
          }
    }
  });
}

Var tanh_act(Var x) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(in[i]);
  return tape.record(OpKind::kTanh, std::move(out), {x}, [](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const auto y = t.value(self).data();
    const auto go = t.grad(self);
    auto gx = t.grad(xid);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += go[i] * (Real(1) - y[i] * y[i]);
  });
}

Var leaky_relu(Var x, Real slope) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0 ? in[i] : slope * in[i];
  return tape.record(OpKind::kLeakyRelu, std::move(out), {x}, [slope](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const auto in = t.value(xid).data();
    const auto go = t.grad(self);
    auto gx = t.grad(xid);
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] += in[i] > 0 ? go[i] : slope * go[i];
  });
}

Var softmax_rows(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2) fail(ErrorCode::kShape, "softmax_rows: expected [N x J], got " + shape_string(v.shape()));
  const std::size_t rows = v.dim(0), cols = v.dim(1);
  Tensor out(v.shape());
  const Real* in = v.data().data();
  Real* o = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = in + r * cols;
    Real* orow = o + r * cols;
    const Real m = *std::max_element(row, row + cols);
    Real total = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      orow[j] = std::exp(row[j] - m);
      total += orow[j];
    }
    for (std::size_t j = 0; j < cols; ++j) orow[j] /= total;
  }
  return tape.record(OpKind::kSoftmaxRows, std::move(out), {x}, [rows, cols](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const Real* y = t.value(self).data().data();
    const Real* go = t.grad(self).data();
    Real* gx = t.grad(xid).data();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* yr = y + r * cols;
      const Real* gr = go + r * cols;
      const Real inner = dot(yr, gr, cols);
      for (std::size_t j = 0; j < cols; ++j) gx[r * cols + j] += yr[j] * (gr[j] - inner);
    }
  });
}

Var similarity(Var x, Var mu) {
  require_same_tape(x, mu);
  Tape& tape = tape_of(x);
  const auto xs = x.value().data();
  const auto ms = mu.value().data();
  const std::size_t n = xs.size(), bins = ms.size();
  Tensor out({n, bins});
  Real* o = out.data().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < bins; ++j) o[i * bins + j] = -std::abs(xs[i] - ms[j]);
  return tape.record(OpKind::kSimilarity, std::move(out), {x, mu}, [n, bins](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0], mid = t.inputs(self)[1];
    const Real* xs = t.value(xid).data().data();
    const Real* ms = t.value(mid).data().data();
    const Real* go = t.grad(self).data();
    const bool gx_on = t.requires_grad(xid), gm_on = t.requires_grad(mid);
    Real* gx = gx_on ? t.grad(xid).data() : nullptr;
    Real* gm = gm_on ? t.grad(mid).data() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < bins; ++j) {
        const Real d = xs[i] - ms[j];
        const Real sgn = d > 0 ? Real(1) : (d < 0 ? Real(-1) : Real(0));
        const Real g = go[i * bins + j];
        if (gx_on) gx[i] -= g * sgn;
        if (gm_on) gm[j] += g * sgn;
      }
  });
}

Var scale(Var x, Real factor) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] * factor;
  return tape.record(OpKind::kScale, std::move(out), {x}, [factor](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const auto go = t.grad(self);
    auto gx = t.grad(xid);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * factor;
  });
}

Var matvec(Var matrix, Var vec) {
  require_same_tape(matrix, vec);
  Tape& tape = tape_of(matrix);
  const Tensor& m = matrix.value();
  const Tensor& v = vec.value();
  if (m.rank() != 2 || m.dim(1) != v.numel()) {
    fail(ErrorCode::kShape, "matvec: " + shape_string(m.shape()) + " times " + shape_string(v.shape()));
  }
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot(m.data().data() + r * cols, v.data().data(), cols);
  return tape.record(OpKind::kMatVec, std::move(out), {matrix, vec}, [rows, cols](Tape& t, std::size_t self) {
    const std::size_t mid = t.inputs(self)[0], vid = t.inputs(self)[1];
    const Real* m = t.value(mid).data().data();
    const Real* v = t.value(vid).data().data();
    const Real* go = t.grad(self).data();
    if (t.requires_grad(mid)) {
      Real* gm = t.grad(mid).data();
      for (std::size_t r = 0; r < rows; ++r) axpy(go[r], v, gm + r * cols, cols);
    }
    if (t.requires_grad(vid)) {
      Real* gv = t.grad(vid).data();
      for (std::size_t r = 0; r < rows; ++r) axpy(go[r], m + r * cols, gv, cols);
    }
  });
}

Var column_mean(Var matrix) {
  Tape& tape = tape_of(matrix);
  const Tensor& m = matrix.value();
  if (m.rank() != 2 || m.dim(0) == 0) {
    fail(ErrorCode::kShape, "column_mean: expected non-empty [N x J], got " + shape_string(m.shape()));
  }
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out({cols});
  for (std::size_t r = 0; r < rows; ++r) axpy(Real(1), m.data().data() + r * cols, out.data().data(), cols);
  const Real inv = Real(1) / static_cast<Real>(rows);
  for (Real& v : out.data()) v *= inv;
  return tape.record(OpKind::kColumnMean, std::move(out), {matrix}, [rows, cols, inv](Tape& t, std::size_t self) {
    const std::size_t mid = t.inputs(self)[0];
    if (!t.requires_grad(mid)) return;
    const Real* go = t.grad(self).data();
    Real* gm = t.grad(mid).data();
    for (std::size_t r = 0; r < rows; ++r) axpy(inv, go, gm + r * cols, cols);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out(a.shape());
  const auto av = a.value().data();
  const auto bv = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  return tape.record(OpKind::kAdd, std::move(out), {a, b}, [](Tape& t, std::size_t self) {
    const auto go = t.grad(self);
    for (std::size_t id : t.inputs(self)) {
      if (!t.requires_grad(id)) continue;
      auto g = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
    }
  });
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  Real total = 0;
  for (Real v : x.value().data()) total += v;
  return tape.record(OpKind::kSum, Tensor::scalar(total), {x}, [](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const Real go = t.grad(self)[0];
    for (Real& g : t.grad(xid)) g += go;
  });
}

Var sum_squared_error(Var a, Var b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  require_same_shape(a.value(), b.value(), "sum_squared_error");
  const auto av = a.value().data();
  const auto bv = b.value().data();
  Real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const Real d = av[i] - bv[i];
    total += d * d;
  }
  return tape.record(OpKind::kSumSquaredError, Tensor::scalar(total), {a, b}, [](Tape& t, std::size_t self) {
    const std::size_t aid = t.inputs(self)[0], bid = t.inputs(self)[1];
    const auto av = t.value(aid).data();
    const auto bv = t.value(bid).data();
    const Real go = t.grad(self)[0];
    if (t.requires_grad(aid)) {
      auto ga = t.grad(aid);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += Real(2) * (av[i] - bv[i]) * go;
    }
    if (t.requires_grad(bid)) {
      auto gb = t.grad(bid);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= Real(2) * (av[i] - bv[i]) * go;
    }
  });
}

Var entropy_bits(Var p) {
  Tape& tape = tape_of(p);
  static const Real kInvLn2 = Real(1) / std::log(Real(2));
  Real h = 0;
  for (Real v : p.value().data())
    if (v > 0) h -= v * std::log2(v);
  return tape.record(OpKind::kEntropyBits, Tensor::scalar(h), {p}, [](Tape& t, std::size_t self) {
    const std::size_t pid = t.inputs(self)[0];
    if (!t.requires_grad(pid)) return;
    const auto pv = t.value(pid).data();
    const Real go = t.grad(self)[0];
    auto gp = t.grad(pid);
    for (std::size_t i = 0; i < pv.size(); ++i)
      if (pv[i] > 0) gp[i] -= go * (std::log2(pv[i]) + kInvLn2);
  });
}

Var concat_channels(Var a, Var b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(1)) {
    fail(ErrorCode::kShape, "concat_channels: " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  const std::size_t na = av.numel();
  Tensor out({av.dim(0) + bv.dim(0), av.dim(1)});
  std::copy(av.data().begin(), av.data().end(), out.data().begin());
  std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(na));
  return tape.record(OpKind::kConcatChannels, std::move(out), {a, b}, [na](Tape& t, std::size_t self) {
    const std::size_t aid = t.inputs(self)[0], bid = t.inputs(self)[1];
    const auto go = t.grad(self);
    if (t.requires_grad(aid)) {
      auto ga = t.grad(aid);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
    }
    if (t.requires_grad(bid)) {
      auto gb = t.grad(bid);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[na + i];
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tape& tape = tape_of(x);
  Tensor out(x.shape(), std::vector<Real>(x.value().data().begin(), x.value().data().end()));
  out.reshape(std::move(shape));
  return tape.record(OpKind::kReshape, std::move(out), {x}, [](Tape& t, std::size_t self) {
    const std::size_t xid = t.inputs(self)[0];
    if (!t.requires_grad(xid)) return;
    const auto go = t.grad(self);
    auto gx = t.grad(xid);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
  });
}

}  // namespace harpnet
