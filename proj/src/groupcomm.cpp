#include "gcsep/groupcomm.hpp"

#include <stdexcept>

#include "gcsep/ops.hpp"

namespace gcsep {

GroupedTensor group_split(const Tensor& t, std::size_t group_count) {
  if (t.ndim() < 1 || group_count == 0) {
    throw std::invalid_argument("group_split: invalid input");
  }
  const std::size_t feat = t.dim(0);
  if (feat % group_count != 0) {
    throw std::invalid_argument("group_split: group count " + std::to_string(group_count) +
                                " does not divide feature dim " + std::to_string(feat));
  }
  const std::size_t m = feat / group_count;
  Shape out_shape{group_count, m};
  for (std::size_t i = 1; i < t.ndim(); ++i) out_shape.push_back(t.shape()[i]);
  GroupedTensor g;
  g.data = reshape(t, out_shape);  // contiguous feature rows split in index order
  g.group_count = group_count;
  g.group_size = m;
  return g;
}

Tensor group_merge(const GroupedTensor& g) {
  const Tensor& t = g.data;
  if (t.ndim() < 2 || t.dim(0) != g.group_count || t.dim(1) != g.group_size) {
    throw std::invalid_argument("group_merge: metadata inconsistent with " +
                                shape_str(t.shape()));
  }
  Shape out_shape{g.group_count * g.group_size};
  for (std::size_t i = 2; i < t.ndim(); ++i) out_shape.push_back(t.shape()[i]);
  return reshape(t, out_shape);
}

GroupComm::GroupComm(std::size_t group_size, std::size_t hidden_dim, ParamRng& rng)
    : unit(group_size, hidden_dim, rng) {}

GroupedTensor GroupComm::communicate(const GroupedTensor& g) const {
  const Tensor& t = g.data;
  if (t.ndim() != 4) {
    throw std::invalid_argument("group_communicate: expected [K x M x 2T x S], got " +
                                shape_str(t.shape()));
  }
  const std::size_t k = t.dim(0), m = t.dim(1), t2 = t.dim(2), s = t.dim(3);
  // one length-K sequence per (time step, block) position, natural group order
  Tensor seq = reshape(permute(t, {2, 3, 0, 1}), {t2 * s, k, m});
  Tensor out = unit.apply(seq);
  GroupedTensor result;
  result.data = permute(reshape(out, {t2, s, k, m}), {2, 3, 0, 1});
  result.group_count = g.group_count;
  result.group_size = g.group_size;
  return result;
}

void GroupComm::register_params(ParamRegistry& reg, const std::string& prefix) const {
  unit.register_params(reg, prefix);
}

}  // namespace gcsep
