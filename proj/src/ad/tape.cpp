#include "sfwi/ad/tape.hpp"

#include <algorithm>

namespace sfwi::ad {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

const Shape& Tensor::shape() const { return tape_->shape(id_); }
std::span<const double> Tensor::values() const { return tape_->value(id_); }
std::span<const double> Tensor::grad() const { return tape_->grad(id_); }
bool Tensor::requires_grad() const { return tape_->requires_grad(id_); }

Tensor Tape::constant(std::vector<double> values, Shape shape) {
  if (values.size() != shape_size(shape))
    throw InvalidArgument("tensor value count does not match shape " + shape_str(shape));
  nodes_.push_back({std::move(shape), std::move(values), {}, nullptr, false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::parameter(Parameter& p) {
  nodes_.push_back({p.shape, p.value, {}, nullptr, true, &p});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor Tape::record(std::vector<double> values, Shape shape, std::initializer_list<Tensor> inputs,
                    Backward backward) {
  bool needs = false;
  for (const Tensor& t : inputs) {
    if (&t.tape() != this) throw StateError("tensor belongs to a different tape");
    needs = needs || nodes_[t.id()].requires_grad;
  }
  nodes_.push_back(
      {std::move(shape), std::move(values), {}, needs ? std::move(backward) : nullptr, needs,
       nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

std::span<double> Tape::grad_sink(int id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(const Tensor& output, std::span<const double> cotangent) {
  if (nodes_.empty()) throw StateError("backward called before any forward pass was recorded");
  if (!output.valid() || &output.tape() != this || output.id() >= static_cast<int>(nodes_.size()))
    throw StateError("backward output is not recorded on this tape");
  if (backward_done_) throw StateError("tape already consumed by a backward pass; clear it first");
  Node& out = nodes_[output.id()];
  if (cotangent.size() != out.value.size())
    throw InvalidArgument("cotangent size does not match output shape " + shape_str(out.shape));
  backward_done_ = true;
  if (!out.requires_grad) return;

  for (Node& n : nodes_) n.grad.clear();
  out.grad.assign(cotangent.begin(), cotangent.end());
  for (int id = output.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param) {
      auto& pg = n.param->grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += nodes_[id].grad[i];
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace sfwi::ad
