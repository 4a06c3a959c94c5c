#pragma once

#include <cstddef>
#include <string>

#include "gcsep/dprnn.hpp"
#include "gcsep/layers.hpp"
#include "gcsep/tensor.hpp"

namespace gcsep {

// Feature vector split into K contiguous groups of size M (K*M == N_feat).
struct GroupedTensor {
  Tensor data;  // [K x M x 2T x S]
  std::size_t group_count = 0;
  std::size_t group_size = 0;
};

// [N x 2T x S] -> groups; group i holds feature rows [i*M, (i+1)*M).
GroupedTensor group_split(const Tensor& t, std::size_t group_count);
// Exact inverse of group_split.
Tensor group_merge(const GroupedTensor& g);

// The inter-group communication module: one BLSTM+FC+LN unit, shared across
// every (time step, block) position, run over the K group vectors as a
// length-K sequence, with a residual connection back to each group.
class GroupComm {
public:
  GroupComm() = default;
  GroupComm(std::size_t group_size, std::size_t hidden_dim, ParamRng& rng);

  GroupedTensor communicate(const GroupedTensor& g) const;
  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const { return unit.param_count(); }

  RnnResidualUnit unit;
};

}  // namespace gcsep
