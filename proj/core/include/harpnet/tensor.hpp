#pragma once

// Dense tensors and a tape-based reverse-mode autodiff engine.
//
// A Tape records every operation of one forward pass. Vars are handles into
// the tape. Parameters live outside the tape as plain Tensors; Tape::param()
// binds one as a leaf so backward() accumulates into Tensor::grad().

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace harpnet {

#if defined(HARPNET_USE_FLOAT32)
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> data);

  static Tensor vector(std::vector<Real> data);
  static Tensor scalar(Real value) { return Tensor({1}, {value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t numel() const noexcept { return data_.size(); }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real item() const;

  // Gradient accumulator, allocated on first use.
  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<Real> grad();
  std::span<const Real> grad() const noexcept { return grad_; }
  void zero_grad();

  void reshape(Shape shape);

 private:
  Shape shape_;
  std::vector<Real> data_;
  std::vector<Real> grad_;
};

enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kConv1d,
  kTanh,
  kLeakyRelu,
  kSoftmaxRows,
  kSimilarity,
  kScale,
  kMatVec,
  kColumnMean,
  kAdd,
  kSum,
  kSumSquaredError,
  kEntropyBits,
  kConcatChannels,
  kReshape,
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Binds `param` as a differentiable leaf. The tensor must outlive the tape.
  Var param(Tensor& param);

  Var record(OpKind kind, Tensor value, std::vector<Var> inputs, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Gradient buffer of a node, allocated lazily at the value's size.
  std::span<Real> grad(std::size_t id);
  std::span<const Real> grad(std::size_t id) const { return nodes_.at(id).grad; }

  // Reverse sweep from a scalar loss. Every bound parameter receives
  // dLoss/dParam added onto its existing grad.
  void backward(Var loss);

  // Bitmask of the branch taken at every non-smooth point of the forward
  // pass (rectifier and absolute-value inputs). Two passes with equal
  // signatures lie on the same smooth piece of the function.
  std::vector<std::uint8_t> kink_signature() const;

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    Tensor value;
    std::vector<Real> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
};

// ---- differentiable operations ---------------------------------------------

// input [C_in x T], weight [C_out x C_in x K], bias [C_out] -> [C_out x T].
// K must be odd; zero padding keeps the temporal length.
Var conv1d_same(Var input, Var weight, Var bias);
Var tanh_act(Var x);
Var leaky_relu(Var x, Real slope);
// Row-wise softmax of an [N x J] tensor, stabilized by row-max subtraction.
Var softmax_rows(Var x);
// S[i, j] = -|x_i - mu_j| over the flattened x.
Var similarity(Var x, Var mu);
Var scale(Var x, Real factor);
// [N x J] times [J] -> [N].
Var matvec(Var matrix, Var vec);
// Mean over the rows of [N x J] -> [J].
Var column_mean(Var matrix);
Var add(Var a, Var b);
Var sum(Var x);
Var sum_squared_error(Var a, Var b);
// -sum p log2 p over a probability vector, with 0 log 0 := 0.
Var entropy_bits(Var p);
// Concatenate [Ca x T] and [Cb x T] along channels.
Var concat_channels(Var a, Var b);
Var reshape(Var x, Shape shape);

// ---- gradient checking -----------------------------------------------------

struct GradCheckResult {
  Real max_relative_error = 0;
  std::size_t checked = 0;
  // Coordinates whose +/- eps probes crossed a kink and were not compared.
  std::size_t skipped = 0;
};

// A scalar function of one tensor. It builds its graph on the tape it is
// handed, binding the point with Tape::param, and returns the loss var.
using ScalarGraphFn = std::function<Var(Tape&, Tensor&)>;

// Gradients below max(kGradFloor, kGradLossFloor * |loss|) are compared in
// absolute terms: the rounding noise of a central difference grows with the
// loss magnitude and swamps smaller gradients.
inline constexpr Real kGradFloor = Real(1e-6);
inline constexpr Real kGradLossFloor = Real(1e-5);

// Central-difference check of the analytic gradient at `point`. The error of
// each coordinate is |g_analytic - g_numeric| / max(|g_analytic|,
// |g_numeric|, floor) with the floor above; the maximum is returned. Coordinates listed in `coords` are checked (all when
// empty).
GradCheckResult finite_diff_check(const ScalarGraphFn& f, const Tensor& point, Real eps,
                                  std::span<const std::size_t> coords = {});

// Loss evaluator for compare_gradients: returns the loss at the current
// contents of the probed buffer and, when `signature` is non-null, the kink
// signature of that evaluation.
using LossProbe = std::function<Real(std::vector<std::uint8_t>* signature)>;

// Lower-level check over an arbitrary buffer (e.g. one model parameter). The
// buffer is perturbed in place and restored.
GradCheckResult compare_gradients(std::span<Real> values, std::span<const Real> analytic,
                                  const LossProbe& loss, Real eps,
                                  std::span<const std::size_t> coords = {});

}  // namespace harpnet
