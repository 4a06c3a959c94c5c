#include "gcsep/ops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace gcsep {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void accumulate(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// true if `small` equals a trailing suffix of `big`
bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
  }
  return true;
}

struct BinaryPlan {
  bool a_is_big = true;
  std::size_t big_n = 0;
  std::size_t small_n = 0;
  Shape out_shape;
};

BinaryPlan plan_binary(const char* op, const Tensor& a, const Tensor& b) {
  BinaryPlan plan;
  if (a.shape() == b.shape()) {
    plan.a_is_big = true;
    plan.big_n = a.numel();
    plan.small_n = b.numel();
    plan.out_shape = a.shape();
    return plan;
  }
  if (is_suffix(b.shape(), a.shape())) {
    plan.a_is_big = true;
    plan.big_n = a.numel();
    plan.small_n = b.numel();
    plan.out_shape = a.shape();
    return plan;
  }
  if (is_suffix(a.shape(), b.shape())) {
    plan.a_is_big = false;
    plan.big_n = b.numel();
    plan.small_n = a.numel();
    plan.out_shape = b.shape();
    return plan;
  }
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                              " and " + shape_str(b.shape()));
}

// sums grad g (shape of big) into the small operand's grad buffer
void reduce_into_small(const std::vector<double>& g, std::vector<double>& small_grad,
                       double sign = 1.0) {
  const std::size_t sn = small_grad.size();
  for (std::size_t i = 0; i < g.size(); ++i) small_grad[i % sn] += sign * g[i];
}

Tensor unary_op(const Tensor& t, double (*fwd)(double),
                std::function<double(double y, double x)> dfn) {
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(t.data()[i]);
  auto tin = t.impl();
  std::vector<double> saved = out;
  return make_op_result(t.shape(), std::move(out), {t},
                        [tin, saved = std::move(saved), dfn](TensorImpl& self) {
                          if (!tin->requires_grad) return;
                          if (tin->grad.empty()) tin->grad.assign(tin->data.size(), 0.0);
                          for (std::size_t i = 0; i < self.grad.size(); ++i) {
                            tin->grad[i] += self.grad[i] * dfn(saved[i], tin->data[i]);
                          }
                        });
}

std::vector<std::size_t> row_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

std::vector<double> permute_data(const std::vector<double>& src, const Shape& shape,
                                 const std::vector<std::size_t>& perm) {
  Shape out_shape(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = shape[perm[i]];
  auto in_strides = row_strides(shape);
  auto out_strides = row_strides(out_shape);
  std::vector<double> dst(src.size());
  std::vector<std::size_t> idx(perm.size(), 0);
  for (std::size_t o = 0; o < dst.size(); ++o) {
    std::size_t rem = o;
    std::size_t in_off = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      std::size_t coord = rem / out_strides[i];
      rem %= out_strides[i];
      in_off += coord * in_strides[perm[i]];
    }
    dst[o] = src[in_off];
  }
  return dst;
}

void ensure_grad(const std::shared_ptr<TensorImpl>& t) {
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  {
    ConstMatMap am(a.data().data(), m, k);
    ConstMatMap bm(b.data().data(), k, n);
    MatMap om(out.data(), m, n);
    om.noalias() = am * bm;
  }
  auto ai = a.impl(), bi = b.impl();
  return make_op_result({m, n}, std::move(out), {a, b}, [ai, bi, m, k, n](TensorImpl& self) {
    ConstMatMap g(self.grad.data(), m, n);
    if (ai->requires_grad) {
      ensure_grad(ai);
      MatMap ag(ai->grad.data(), m, k);
      ConstMatMap bm(bi->data.data(), k, n);
      ag.noalias() += g * bm.transpose();
    }
    if (bi->requires_grad) {
      ensure_grad(bi);
      MatMap bg(bi->grad.data(), k, n);
      ConstMatMap am(ai->data.data(), m, k);
      bg.noalias() += am.transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  BinaryPlan plan = plan_binary("add", a, b);
  const auto& big = plan.a_is_big ? a.data() : b.data();
  const auto& small = plan.a_is_big ? b.data() : a.data();
  std::vector<double> out(plan.big_n);
  for (std::size_t i = 0; i < plan.big_n; ++i) out[i] = big[i] + small[i % plan.small_n];
  auto ai = a.impl(), bi = b.impl();
  auto big_i = plan.a_is_big ? ai : bi;
  auto small_i = plan.a_is_big ? bi : ai;
  return make_op_result(plan.out_shape, std::move(out), {a, b},
                        [big_i, small_i](TensorImpl& self) {
                          if (big_i->requires_grad) {
                            ensure_grad(big_i);
                            accumulate(big_i->grad, self.grad);
                          }
                          if (small_i->requires_grad) {
                            ensure_grad(small_i);
                            reduce_into_small(self.grad, small_i->grad);
                          }
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  BinaryPlan plan = plan_binary("sub", a, b);
  std::vector<double> out(plan.big_n);
  const std::size_t sn = plan.small_n;
  if (plan.a_is_big) {
    for (std::size_t i = 0; i < plan.big_n; ++i) out[i] = a.data()[i] - b.data()[i % sn];
  } else {
    for (std::size_t i = 0; i < plan.big_n; ++i) out[i] = a.data()[i % sn] - b.data()[i];
  }
  auto ai = a.impl(), bi = b.impl();
  bool a_big = plan.a_is_big;
  return make_op_result(plan.out_shape, std::move(out), {a, b}, [ai, bi, a_big](TensorImpl& self) {
    if (ai->requires_grad) {
      ensure_grad(ai);
      if (a_big) accumulate(ai->grad, self.grad);
      else reduce_into_small(self.grad, ai->grad, 1.0);
    }
    if (bi->requires_grad) {
      ensure_grad(bi);
      if (a_big) reduce_into_small(self.grad, bi->grad, -1.0);
      else
        for (std::size_t i = 0; i < self.grad.size(); ++i) bi->grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  BinaryPlan plan = plan_binary("mul", a, b);
  const std::size_t sn = plan.small_n;
  std::vector<double> out(plan.big_n);
  const auto& big = plan.a_is_big ? a.data() : b.data();
  const auto& small = plan.a_is_big ? b.data() : a.data();
  for (std::size_t i = 0; i < plan.big_n; ++i) out[i] = big[i] * small[i % sn];
  auto ai = a.impl(), bi = b.impl();
  auto big_i = plan.a_is_big ? ai : bi;
  auto small_i = plan.a_is_big ? bi : ai;
  return make_op_result(plan.out_shape, std::move(out), {a, b},
                        [big_i, small_i, sn](TensorImpl& self) {
                          if (big_i->requires_grad) {
                            ensure_grad(big_i);
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              big_i->grad[i] += self.grad[i] * small_i->data[i % sn];
                            }
                          }
                          if (small_i->requires_grad) {
                            ensure_grad(small_i);
                            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                              small_i->grad[i % sn] += self.grad[i] * big_i->data[i];
                            }
                          }
                        });
}

Tensor scale(const Tensor& t, double factor) {
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.data()[i] * factor;
  auto ti = t.impl();
  return make_op_result(t.shape(), std::move(out), {t}, [ti, factor](TensorImpl& self) {
    if (!ti->requires_grad) return;
    ensure_grad(ti);
    for (std::size_t i = 0; i < self.grad.size(); ++i) ti->grad[i] += self.grad[i] * factor;
  });
}

Tensor add_scalar(const Tensor& t, double value) {
  std::vector<double> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.data()[i] + value;
  auto ti = t.impl();
  return make_op_result(t.shape(), std::move(out), {t}, [ti](TensorImpl& self) {
    if (!ti->requires_grad) return;
    ensure_grad(ti);
    accumulate(ti->grad, self.grad);
  });
}

Tensor neg(const Tensor& t) { return scale(t, -1.0); }

Tensor sigmoid(const Tensor& t) {
  return unary_op(
      t, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& t) {
  return unary_op(
      t, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& t) {
  // subgradient at 0 is 0
  return unary_op(
      t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double, double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor log_op(const Tensor& t) {
  for (double v : t.data()) {
    if (!(v > 0.0)) throw std::invalid_argument("log: non-positive input");
  }
  return unary_op(
      t, [](double x) { return std::log(x); }, [](double, double x) { return 1.0 / x; });
}

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.data()) acc += v;
  auto ti = t.impl();
  return make_op_result({1}, {acc}, {t}, [ti](TensorImpl& self) {
    if (!ti->requires_grad) return;
    ensure_grad(ti);
    for (double& g : ti->grad) g += self.grad[0];
  });
}

Tensor sum(const Tensor& t, std::size_t axis) {
  if (axis >= t.ndim()) {
    throw std::invalid_argument("sum: axis " + std::to_string(axis) + " out of range for " +
                                shape_str(t.shape()));
  }
  Shape out_shape;
  for (std::size_t i = 0; i < t.ndim(); ++i) {
    if (i != axis) out_shape.push_back(t.shape()[i]);
  }
  if (out_shape.empty()) out_shape = {1};
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.shape()[i];
  for (std::size_t i = axis + 1; i < t.ndim(); ++i) inner *= t.shape()[i];
  const std::size_t extent = t.shape()[axis];
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t e = 0; e < extent; ++e) {
      const double* src = t.data().data() + (o * extent + e) * inner;
      double* dst = out.data() + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  auto ti = t.impl();
  return make_op_result(out_shape, std::move(out), {t},
                        [ti, outer, extent, inner](TensorImpl& self) {
                          if (!ti->requires_grad) return;
                          ensure_grad(ti);
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t e = 0; e < extent; ++e) {
                              double* dst = ti->grad.data() + (o * extent + e) * inner;
                              const double* src = self.grad.data() + o * inner;
                              for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

Tensor mean(const Tensor& t) { return scale(sum(t), 1.0 / static_cast<double>(t.numel())); }

Tensor mean(const Tensor& t, std::size_t axis) {
  return scale(sum(t, axis), 1.0 / static_cast<double>(t.dim(axis)));
}

Tensor reshape(const Tensor& t, const Shape& shape) {
  if (shape_numel(shape) != t.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(t.shape()) + " as " +
                                shape_str(shape));
  }
  auto ti = t.impl();
  std::vector<double> out = t.data();
  return make_op_result(shape, std::move(out), {t}, [ti](TensorImpl& self) {
    if (!ti->requires_grad) return;
    ensure_grad(ti);
    accumulate(ti->grad, self.grad);
  });
}

Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm) {
  if (perm.size() != t.ndim()) {
    throw std::invalid_argument("permute: rank mismatch for " + shape_str(t.shape()));
  }
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) throw std::invalid_argument("permute: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out_shape[i] = t.shape()[perm[i]];
  std::vector<double> out = permute_data(t.data(), t.shape(), perm);
  // inverse permutation routes gradients back
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  auto ti = t.impl();
  return make_op_result(out_shape, std::move(out), {t},
                        [ti, inv, out_shape](TensorImpl& self) {
                          if (!ti->requires_grad) return;
                          ensure_grad(ti);
                          std::vector<double> g = permute_data(self.grad, out_shape, inv);
                          accumulate(ti->grad, g);
                        });
}

Tensor transpose(const Tensor& t) {
  if (t.ndim() != 2) {
    throw std::invalid_argument("transpose: expected 2-D tensor, got " + shape_str(t.shape()));
  }
  return permute(t, {1, 0});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& ref = parts[0].shape();
  if (axis >= ref.size()) throw std::invalid_argument("concat: axis out of range");
  std::size_t joined = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != ref.size()) {
      throw std::invalid_argument("concat: rank mismatch " + shape_str(p.shape()));
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (i != axis && p.shape()[i] != ref[i]) {
        throw std::invalid_argument("concat: extent mismatch " + shape_str(p.shape()) + " vs " +
                                    shape_str(ref));
      }
    }
    joined += p.shape()[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = joined;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  std::vector<double> out(outer * joined * inner);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const std::size_t ext = p.shape()[axis];
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = p.data().data() + o * ext * inner;
      double* dst = out.data() + (o * joined + offset) * inner;
      std::copy(src, src + ext * inner, dst);
    }
    offset += ext;
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  std::vector<std::size_t> extents;
  for (const Tensor& p : parts) {
    impls.push_back(p.impl());
    extents.push_back(p.shape()[axis]);
  }
  return make_op_result(out_shape, std::move(out), parts,
                        [impls, extents, outer, inner, joined](TensorImpl& self) {
                          std::size_t offset = 0;
                          for (std::size_t pi = 0; pi < impls.size(); ++pi) {
                            const std::size_t ext = extents[pi];
                            auto& p = impls[pi];
                            if (p->requires_grad) {
                              ensure_grad(p);
                              for (std::size_t o = 0; o < outer; ++o) {
                                const double* src =
                                    self.grad.data() + (o * joined + offset) * inner;
                                double* dst = p->grad.data() + o * ext * inner;
                                for (std::size_t i = 0; i < ext * inner; ++i) dst[i] += src[i];
                              }
                            }
                            offset += ext;
                          }
                        });
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= t.ndim()) throw std::invalid_argument("slice: axis out of range");
  if (length == 0 || start + length > t.shape()[axis]) {
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + length) + ") out of bounds for " +
                                shape_str(t.shape()));
  }
  Shape out_shape = t.shape();
  out_shape[axis] = length;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.shape()[i];
  for (std::size_t i = axis + 1; i < t.ndim(); ++i) inner *= t.shape()[i];
  const std::size_t ext = t.shape()[axis];
  std::vector<double> out(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = t.data().data() + (o * ext + start) * inner;
    std::copy(src, src + length * inner, out.data() + o * length * inner);
  }
  auto ti = t.impl();
  return make_op_result(out_shape, std::move(out), {t},
                        [ti, outer, inner, ext, start, length](TensorImpl& self) {
                          if (!ti->requires_grad) return;
                          ensure_grad(ti);
                          for (std::size_t o = 0; o < outer; ++o) {
                            const double* src = self.grad.data() + o * length * inner;
                            double* dst = ti->grad.data() + (o * ext + start) * inner;
                            for (std::size_t i = 0; i < length * inner; ++i) dst[i] += src[i];
                          }
                        });
}

Tensor flip(const Tensor& t, std::size_t axis) {
  if (axis >= t.ndim()) throw std::invalid_argument("flip: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= t.shape()[i];
  for (std::size_t i = axis + 1; i < t.ndim(); ++i) inner *= t.shape()[i];
  const std::size_t ext = t.shape()[axis];
  std::vector<double> out(t.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t e = 0; e < ext; ++e) {
      const double* src = t.data().data() + (o * ext + e) * inner;
      double* dst = out.data() + (o * ext + (ext - 1 - e)) * inner;
      std::copy(src, src + inner, dst);
    }
  }
  auto ti = t.impl();
  return make_op_result(t.shape(), std::move(out), {t},
                        [ti, outer, inner, ext](TensorImpl& self) {
                          if (!ti->requires_grad) return;
                          ensure_grad(ti);
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t e = 0; e < ext; ++e) {
                              const double* src = self.grad.data() + (o * ext + e) * inner;
                              double* dst = ti->grad.data() + (o * ext + (ext - 1 - e)) * inner;
                              for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

Tensor conv1d(const Tensor& input, const Tensor& kernels, std::size_t stride) {
  if (input.ndim() != 2 || kernels.ndim() != 3 || kernels.dim(1) != input.dim(0)) {
    throw std::invalid_argument("conv1d: incompatible shapes " + shape_str(input.shape()) +
                                " and " + shape_str(kernels.shape()));
  }
  if (stride == 0) throw std::invalid_argument("conv1d: stride must be positive");
  const std::size_t c_in = input.dim(0), len = input.dim(1);
  const std::size_t c_out = kernels.dim(0), width = kernels.dim(2);
  if (len < width) {
    throw std::invalid_argument("conv1d: input too short (" + std::to_string(len) +
                                " < kernel width " + std::to_string(width) + ")");
  }
  const std::size_t out_len = (len - width) / stride + 1;
  std::vector<double> out(c_out * out_len, 0.0);
  const double* in = input.data().data();
  const double* k = kernels.data().data();
  for (std::size_t co = 0; co < c_out; ++co) {
    for (std::size_t l = 0; l < out_len; ++l) {
      double acc = 0.0;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double* in_row = in + ci * len + l * stride;
        const double* k_row = k + (co * c_in + ci) * width;
        for (std::size_t w = 0; w < width; ++w) acc += in_row[w] * k_row[w];
      }
      out[co * out_len + l] = acc;
    }
  }
  auto ii = input.impl(), ki = kernels.impl();
  return make_op_result({c_out, out_len}, std::move(out), {input, kernels},
                        [ii, ki, c_in, c_out, len, width, stride, out_len](TensorImpl& self) {
                          const double* g = self.grad.data();
                          if (ii->requires_grad) ensure_grad(ii);
                          if (ki->requires_grad) ensure_grad(ki);
                          for (std::size_t co = 0; co < c_out; ++co) {
                            for (std::size_t l = 0; l < out_len; ++l) {
                              const double gv = g[co * out_len + l];
                              if (gv == 0.0) continue;
                              for (std::size_t ci = 0; ci < c_in; ++ci) {
                                const std::size_t in_base = ci * len + l * stride;
                                const std::size_t k_base = (co * c_in + ci) * width;
                                if (ii->requires_grad) {
                                  for (std::size_t w = 0; w < width; ++w) {
                                    ii->grad[in_base + w] += gv * ki->data[k_base + w];
                                  }
                                }
                                if (ki->requires_grad) {
                                  for (std::size_t w = 0; w < width; ++w) {
                                    ki->grad[k_base + w] += gv * ii->data[in_base + w];
                                  }
                                }
                              }
                            }
                          }
                        });
}

Tensor conv1d_transpose(const Tensor& input, const Tensor& kernels, std::size_t stride) {
  if (input.ndim() != 2 || kernels.ndim() != 3 || kernels.dim(0) != input.dim(0)) {
    throw std::invalid_argument("conv1d_transpose: incompatible shapes " +
                                shape_str(input.shape()) + " and " + shape_str(kernels.shape()));
  }
  if (stride == 0) throw std::invalid_argument("conv1d_transpose: stride must be positive");
  const std::size_t c_in = input.dim(0), len = input.dim(1);
  const std::size_t c_out = kernels.dim(1), width = kernels.dim(2);
  const std::size_t out_len = (len - 1) * stride + width;
  std::vector<double> out(c_out * out_len, 0.0);
  const double* in = input.data().data();
  const double* k = kernels.data().data();
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    for (std::size_t l = 0; l < len; ++l) {
      const double v = in[ci * len + l];
      if (v == 0.0) continue;
      for (std::size_t co = 0; co < c_out; ++co) {
        double* out_row = out.data() + co * out_len + l * stride;
        const double* k_row = k + (ci * c_out + co) * width;
        for (std::size_t w = 0; w < width; ++w) out_row[w] += v * k_row[w];
      }
    }
  }
  auto ii = input.impl(), ki = kernels.impl();
  return make_op_result({c_out, out_len}, std::move(out), {input, kernels},
                        [ii, ki, c_in, c_out, len, width, stride, out_len](TensorImpl& self) {
                          const double* g = self.grad.data();
                          if (ii->requires_grad) ensure_grad(ii);
                          if (ki->requires_grad) ensure_grad(ki);
                          for (std::size_t ci = 0; ci < c_in; ++ci) {
                            for (std::size_t l = 0; l < len; ++l) {
                              for (std::size_t co = 0; co < c_out; ++co) {
                                const double* g_row = g + co * out_len + l * stride;
                                const std::size_t k_base = (ci * c_out + co) * width;
                                if (ii->requires_grad) {
                                  double acc = 0.0;
                                  for (std::size_t w = 0; w < width; ++w) {
                                    acc += g_row[w] * ki->data[k_base + w];
                                  }
                                  ii->grad[ci * len + l] += acc;
                                }
                                if (ki->requires_grad) {
                                  const double v = ii->data[ci * len + l];
                                  for (std::size_t w = 0; w < width; ++w) {
                                    ki->grad[k_base + w] += g_row[w] * v;
                                  }
                                }
                              }
                            }
                          }
                        });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.ndim() < 1) throw std::invalid_argument("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.ndim() != 1 || bias.ndim() != 1 || gain.dim(0) != d || bias.dim(0) != d) {
    throw std::invalid_argument("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                                shape_str(bias.shape()) + " do not match feature dim " +
                                std::to_string(d));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<double> out(x.numel());
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  const double* xd = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd + r * d;
    double m = 0.0;
    for (std::size_t j = 0; j < d; ++j) m += row[j];
    m /= static_cast<double>(d);
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - m;
      v += c * c;
    }
    v /= static_cast<double>(d);  // biased variance
    const double is = 1.0 / std::sqrt(v + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (row[j] - m) * is;
      xhat[r * d + j] = xh;
      out[r * d + j] = xh * gain.data()[j] + bias.data()[j];
    }
  }
  auto xi = x.impl(), gi = gain.impl(), bi = bias.impl();
  return make_op_result(
      x.shape(), std::move(out), {x, gain, bias},
      [xi, gi, bi, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, d](TensorImpl& self) {
        const double* g = self.grad.data();
        if (gi->requires_grad) ensure_grad(gi);
        if (bi->requires_grad) ensure_grad(bi);
        if (xi->requires_grad) ensure_grad(xi);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gy = g + r * d;
          const double* xh = xhat.data() + r * d;
          if (gi->requires_grad || bi->requires_grad) {
            for (std::size_t j = 0; j < d; ++j) {
              if (gi->requires_grad) gi->grad[j] += gy[j] * xh[j];
              if (bi->requires_grad) bi->grad[j] += gy[j];
            }
          }
          if (xi->requires_grad) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dxh = gy[j] * gi->data[j];
              mean_dxhat += dxh;
              mean_dxhat_xhat += dxh * xh[j];
            }
            mean_dxhat /= static_cast<double>(d);
            mean_dxhat_xhat /= static_cast<double>(d);
            double* gx = xi->grad.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) {
              const double dxh = gy[j] * gi->data[j];
              gx[j] += inv_std[r] * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
            }
          }
        }
      });
}

std::size_t segment_count(std::size_t frames, std::size_t hop) {
  return (frames + hop - 1) / hop + 1;
}

Tensor segment_frames(const Tensor& frames, std::size_t hop) {
  if (frames.ndim() != 2) {
    throw std::invalid_argument("segment: expected [features x frames], got " +
                                shape_str(frames.shape()));
  }
  if (hop == 0) throw std::invalid_argument("segment: hop must be positive");
  const std::size_t feat = frames.dim(0), len = frames.dim(1);
  const std::size_t blocks = segment_count(len, hop);
  const std::size_t block_len = 2 * hop;
  std::vector<double> out(feat * block_len * blocks, 0.0);
  const double* src = frames.data().data();
  for (std::size_t f = 0; f < feat; ++f) {
    for (std::size_t s = 0; s < blocks; ++s) {
      for (std::size_t tau = 0; tau < block_len; ++tau) {
        // padded index s*hop + tau maps to original frame s*hop + tau - hop
        const std::ptrdiff_t orig =
            static_cast<std::ptrdiff_t>(s * hop + tau) - static_cast<std::ptrdiff_t>(hop);
        if (orig >= 0 && orig < static_cast<std::ptrdiff_t>(len)) {
          out[(f * block_len + tau) * blocks + s] = src[f * len + orig];
        }
      }
    }
  }
  auto fi = frames.impl();
  return make_op_result({feat, block_len, blocks}, std::move(out), {frames},
                        [fi, feat, len, hop, blocks, block_len](TensorImpl& self) {
                          if (!fi->requires_grad) return;
                          ensure_grad(fi);
                          for (std::size_t f = 0; f < feat; ++f) {
                            for (std::size_t s = 0; s < blocks; ++s) {
                              for (std::size_t tau = 0; tau < block_len; ++tau) {
                                const std::ptrdiff_t orig =
                                    static_cast<std::ptrdiff_t>(s * hop + tau) -
                                    static_cast<std::ptrdiff_t>(hop);
                                if (orig >= 0 && orig < static_cast<std::ptrdiff_t>(len)) {
                                  fi->grad[f * len + orig] +=
                                      self.grad[(f * block_len + tau) * blocks + s];
                                }
                              }
                            }
                          }
                        });
}

Tensor overlap_add(const Tensor& blocks_t, std::size_t hop, std::size_t orig_frames) {
  if (blocks_t.ndim() != 3) {
    throw std::invalid_argument("overlap_add: expected [features x 2T x S], got " +
                                shape_str(blocks_t.shape()));
  }
  const std::size_t feat = blocks_t.dim(0), block_len = blocks_t.dim(1), blocks = blocks_t.dim(2);
  if (hop == 0 || block_len != 2 * hop) {
    throw std::invalid_argument("overlap_add: block length " + std::to_string(block_len) +
                                " inconsistent with hop " + std::to_string(hop));
  }
  if (blocks != segment_count(orig_frames, hop)) {
    throw std::invalid_argument("overlap_add: block count " + std::to_string(blocks) +
                                " inconsistent with " + std::to_string(orig_frames) +
                                " frames at hop " + std::to_string(hop));
  }
  std::vector<double> out(feat * orig_frames, 0.0);
  const double* src = blocks_t.data().data();
  for (std::size_t f = 0; f < feat; ++f) {
    for (std::size_t s = 0; s < blocks; ++s) {
      for (std::size_t tau = 0; tau < block_len; ++tau) {
        const std::ptrdiff_t orig =
            static_cast<std::ptrdiff_t>(s * hop + tau) - static_cast<std::ptrdiff_t>(hop);
        if (orig >= 0 && orig < static_cast<std::ptrdiff_t>(orig_frames)) {
          out[f * orig_frames + orig] += src[(f * block_len + tau) * blocks + s];
        }
      }
    }
  }
  auto bi = blocks_t.impl();
  return make_op_result({feat, orig_frames}, std::move(out), {blocks_t},
                        [bi, feat, orig_frames, hop, blocks, block_len](TensorImpl& self) {
                          if (!bi->requires_grad) return;
                          ensure_grad(bi);
                          for (std::size_t f = 0; f < feat; ++f) {
                            for (std::size_t s = 0; s < blocks; ++s) {
                              for (std::size_t tau = 0; tau < block_len; ++tau) {
                                const std::ptrdiff_t orig =
                                    static_cast<std::ptrdiff_t>(s * hop + tau) -
                                    static_cast<std::ptrdiff_t>(hop);
                                if (orig >= 0 && orig < static_cast<std::ptrdiff_t>(orig_frames)) {
                                  bi->grad[(f * block_len + tau) * blocks + s] +=
                                      self.grad[f * orig_frames + orig];
                                }
                              }
                            }
                          }
                        });
}

}  // namespace gcsep
