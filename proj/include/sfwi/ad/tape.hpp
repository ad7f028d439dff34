#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfwi/core/errors.hpp"

namespace sfwi::ad {

using Shape = std::vector<int>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

/// Trainable array with its accumulated gradient.
struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter(std::string n, Shape s)
      : name(std::move(n)), shape(std::move(s)), value(shape_size(shape), 0.0),
        grad(value.size(), 0.0) {}
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape
/// is cleared.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr && id_ >= 0; }

  const Shape& shape() const;
  std::span<const double> values() const;
  /// Accumulated cotangent after Tape::backward.
  std::span<const double> grad() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Linear record of a forward computation. backward() replays it in reverse,
/// accumulating cotangents into nodes and into the Parameters used as leaves.
/// Single-threaded.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tensor constant(std::vector<double> values, Shape shape);
  /// Leaf bound to p. Gradients are added to p.grad on backward.
  Tensor parameter(Parameter& p);
  /// Records an op output. requires_grad is derived from the inputs.
  Tensor record(std::vector<double> values, Shape shape, std::initializer_list<Tensor> inputs,
                Backward backward);

  /// Seeds `output` with `cotangent` and propagates to every reachable node.
  /// Throws StateError when nothing has been recorded or `output` is foreign.
  void backward(const Tensor& output, std::span<const double> cotangent);

  void clear();
  std::size_t size() const noexcept { return nodes_.size(); }

  // Node access used by op implementations.
  const Shape& shape(int id) const { return nodes_[id].shape; }
  std::span<const double> value(int id) const { return nodes_[id].value; }
  std::span<const double> grad(int id) const { return nodes_[id].grad; }
  /// Gradient buffer of input `id`, or empty when it does not need one.
  std::span<double> grad_sink(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Backward backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sfwi::ad
