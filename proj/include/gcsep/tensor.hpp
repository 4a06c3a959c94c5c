#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gcsep {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

// Dense n-dimensional tensor of doubles with reverse-mode autodiff.
//
// A Tensor is a cheap shared handle. Values are immutable after creation
// except for gradient accumulation; each op produces a fresh tensor and,
// when gradients are required, records its parents and a backward rule.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, double value, bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<double> values,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t ndim() const;

  const std::vector<double>& data() const;
  std::vector<double>& mutable_data();

  bool requires_grad() const;
  bool has_grad() const;
  const std::vector<double>& grad() const;
  std::vector<double>& grad_buffer();  // allocates zeros on first use
  void zero_grad();

  double item() const;  // scalar tensors only

  // Reverse-mode pass from a scalar loss. Seeds d(loss)/d(loss)=1 and runs
  // every recorded backward rule once in reverse topological order.
  // Gradients accumulate across repeated calls until zero_grad().
  void backward() const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

private:
  std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  // Graph record: parents this tensor was computed from and the rule that
  // pushes this tensor's grad into theirs. Only set when requires_grad.
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;
};

// Internal: builds an op result node. Records parents/backward only if some
// parent requires grad.
Tensor make_op_result(Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(TensorImpl&)> backward_fn);

}  // namespace gcsep
