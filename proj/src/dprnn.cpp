#include "gcsep/dprnn.hpp"

#include <stdexcept>

namespace gcsep {

SegmentedTensor segment(const Tensor& frames, std::size_t hop) {
  SegmentedTensor seg;
  seg.data = segment_frames(frames, hop);
  seg.hop = hop;
  seg.orig_frames = frames.dim(1);
  return seg;
}

Tensor overlap_add(const SegmentedTensor& seg) {
  return overlap_add(seg.data, seg.hop, seg.orig_frames);
}

RnnResidualUnit::RnnResidualUnit(std::size_t feat_dim, std::size_t hidden_dim, ParamRng& rng)
    : blstm(feat_dim, hidden_dim, rng), proj(2 * hidden_dim, feat_dim, rng), norm(feat_dim) {}

Tensor RnnResidualUnit::apply(const Tensor& x) const {
  return add(x, norm.forward(proj.forward(blstm.forward(x))));
}

void RnnResidualUnit::register_params(ParamRegistry& reg, const std::string& prefix) const {
  blstm.register_params(reg, prefix + ".blstm");
  proj.register_params(reg, prefix + ".proj");
  norm.register_params(reg, prefix + ".norm");
}

std::size_t RnnResidualUnit::param_count() const {
  return blstm.param_count() + proj.param_count() + norm.param_count();
}

DprnnBlock::DprnnBlock(std::size_t feat_dim, std::size_t hidden_dim, ParamRng& rng)
    : intra(feat_dim, hidden_dim, rng), inter(feat_dim, hidden_dim, rng) {}

namespace {

void check_grouped(const Tensor& grouped) {
  if (grouped.ndim() != 4) {
    throw std::invalid_argument("dprnn: expected [G x F x 2T x S], got " +
                                shape_str(grouped.shape()));
  }
}

}  // namespace

Tensor DprnnBlock::intra_pass(const Tensor& grouped) const {
  check_grouped(grouped);
  const std::size_t g = grouped.dim(0), f = grouped.dim(1);
  const std::size_t t2 = grouped.dim(2), s = grouped.dim(3);
  // sequences along 2T, one per (group, block)
  Tensor seq = reshape(permute(grouped, {0, 3, 2, 1}), {g * s, t2, f});
  Tensor out = intra.apply(seq);
  return permute(reshape(out, {g, s, t2, f}), {0, 3, 2, 1});
}

Tensor DprnnBlock::inter_pass(const Tensor& grouped) const {
  check_grouped(grouped);
  const std::size_t g = grouped.dim(0), f = grouped.dim(1);
  const std::size_t t2 = grouped.dim(2), s = grouped.dim(3);
  // sequences along S, one per (group, intra position)
  Tensor seq = reshape(permute(grouped, {0, 2, 3, 1}), {g * t2, s, f});
  Tensor out = inter.apply(seq);
  return permute(reshape(out, {g, t2, s, f}), {0, 3, 1, 2});
}

void DprnnBlock::register_params(ParamRegistry& reg, const std::string& prefix) const {
  intra.register_params(reg, prefix + ".intra");
  inter.register_params(reg, prefix + ".inter");
}

}  // namespace gcsep
