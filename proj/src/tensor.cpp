#include "gcsep/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gcsep {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

static void check_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("zero extent in shape " + shape_str(shape));
  }
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, 0.0, requires_grad);
}

Tensor Tensor::full(const Shape& shape, double value, bool requires_grad) {
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data.assign(shape_numel(shape), value);
  impl->requires_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (values.size() != shape_numel(shape)) {
    throw std::invalid_argument("data size " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::numel() const { return impl_->data.size(); }
std::size_t Tensor::ndim() const { return impl_->shape.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for " +
                                shape_str(impl_->shape));
  }
  return impl_->shape[axis];
}

const std::vector<double>& Tensor::data() const { return impl_->data; }
std::vector<double>& Tensor::mutable_data() { return impl_->data; }

bool Tensor::requires_grad() const { return impl_->requires_grad; }
bool Tensor::has_grad() const { return !impl_->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) {
    throw std::logic_error("tensor has no accumulated gradient");
  }
  return impl_->grad;
}

std::vector<double>& Tensor::grad_buffer() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

double Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got " + shape_str(shape()));
  }
  return impl_->data[0];
}

void Tensor::backward() const {
  if (!impl_) throw std::logic_error("backward() on undefined tensor");
  if (impl_->data.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, got " + shape_str(shape()));
  }
  // Iterative post-order DFS over the recorded graph.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  visited.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* parent = node->parents[next++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior grads are scratch space for this pass; only leaves accumulate
  // across repeated calls.
  for (TensorImpl* node : order) {
    if (node->backward_fn) node->grad.clear();
  }
  if (impl_->grad.empty()) impl_->grad.assign(1, 0.0);
  impl_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->backward_fn && !node->grad.empty()) {
      node->backward_fn(*node);
    }
  }
}

Tensor make_op_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      std::function<void(TensorImpl&)> backward_fn) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(values));
  bool needs_grad = false;
  for (const Tensor& p : parents) {
    if (p.defined() && p.requires_grad()) needs_grad = true;
  }
  if (needs_grad) {
    auto impl = out.impl();
    impl->requires_grad = true;
    for (const Tensor& p : parents) impl->parents.push_back(p.impl());
    impl->backward_fn = std::move(backward_fn);
  }
  return out;
}

}  // namespace gcsep
