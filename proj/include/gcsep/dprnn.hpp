#pragma once

#include <cstddef>
#include <string>

#include "gcsep/layers.hpp"
#include "gcsep/ops.hpp"
#include "gcsep/tensor.hpp"

namespace gcsep {

// Overlapped block view of a frame sequence. data is [feat x 2T x S] with
// hop T; every original frame appears in exactly 2 blocks.
struct SegmentedTensor {
  Tensor data;
  std::size_t hop = 0;           // T
  std::size_t orig_frames = 0;  // frame count before padding

  std::size_t block_len() const { return 2 * hop; }
  std::size_t block_count() const { return data.dim(data.ndim() - 1); }
};

SegmentedTensor segment(const Tensor& frames, std::size_t hop);
Tensor overlap_add(const SegmentedTensor& seg);

// BLSTM -> FC back to the input width -> per-frame LN -> residual add.
// The shared building block of the intra pass, the inter pass and GroupComm.
class RnnResidualUnit {
public:
  RnnResidualUnit() = default;
  RnnResidualUnit(std::size_t feat_dim, std::size_t hidden_dim, ParamRng& rng);

  // x: [B x len x feat] -> same shape
  Tensor apply(const Tensor& x) const;
  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const;

  Blstm blstm;
  Linear proj;
  LayerNorm norm;
};

// One dual-path block over a grouped segmented tensor [G x F x 2T x S]
// (G=1 for the ungrouped baseline). The intra pass runs the unit along the
// 2T axis per block, the inter pass along the S axis per intra position;
// both are residual and shape-preserving.
class DprnnBlock {
public:
  DprnnBlock() = default;
  DprnnBlock(std::size_t feat_dim, std::size_t hidden_dim, ParamRng& rng);

  Tensor intra_pass(const Tensor& grouped) const;
  Tensor inter_pass(const Tensor& grouped) const;
  Tensor forward(const Tensor& grouped) const { return inter_pass(intra_pass(grouped)); }

  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const { return intra.param_count() + inter.param_count(); }

  RnnResidualUnit intra;
  RnnResidualUnit inter;
};

}  // namespace gcsep
