#include "intermulti/fusion.hpp"

#include <cmath>

namespace intermulti {

namespace {

void require_block_inputs(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1 || a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": inputs must be equal-length vectors, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  if (a.shape()[0] % 2 != 0) {
    throw ShapeError(std::string(op) + ": input width " +
                     std::to_string(a.shape()[0]) +
                     " must be even for 2x2 pooling");
  }
}

void require_fc(const char* op, const HighOrderBlockParams& p,
                std::size_t in_width, std::size_t out_width) {
  if (p.w.shape()[0] != out_width || p.w.shape()[1] != in_width) {
    throw ShapeError(std::string(op) + ": fc weight " + shape_str(p.w.shape()) +
                     " does not match expected [" + std::to_string(out_width) +
                     "x" + std::to_string(in_width) + "]");
  }
}

Tensor pooled_features(const Tensor& a, const Tensor& b) {
  return flatten(maxpool2x2(outer(a, b)));
}

}  // namespace

std::size_t block_input_width(std::size_t compact_dim, BlockCombine combine) {
  return combine == BlockCombine::outer_pool
             ? (compact_dim / 2) * (compact_dim / 2)
             : 2 * compact_dim;
}

HighOrderBlockParams make_block(std::size_t compact_dim, BlockCombine combine,
                                Rng& rng) {
  const std::size_t in = block_input_width(compact_dim, combine);
  const double bound = 1.0 / std::sqrt(double(in));
  HighOrderBlockParams p;
  p.w = uniform_tensor({compact_dim, in}, bound, rng);
  p.b = Tensor::zeros({compact_dim}, true);
  return p;
}

Tensor dominated_fusion(const Tensor& dominant, const Tensor& other,
                        const HighOrderBlockParams& params) {
  require_block_inputs("dominated_fusion", dominant, other);
  const std::size_t c = dominant.shape()[0];
  require_fc("dominated_fusion", params, (c / 2) * (c / 2), c);
  const Tensor gate = sigmoid(
      add(matvec(params.w, pooled_features(dominant, other)), params.b));
  return mul(dominant, gate);
}

Tensor flat_fusion(const Tensor& a, const Tensor& b,
                   const HighOrderBlockParams& params) {
  require_block_inputs("flat_fusion", a, b);
  const std::size_t c = a.shape()[0];
  require_fc("flat_fusion", params, (c / 2) * (c / 2), c);
  return add(matvec(params.w, pooled_features(a, b)), params.b);
}

Tensor dominated_fusion_concat(const Tensor& dominant, const Tensor& other,
                               const HighOrderBlockParams& params) {
  require_block_inputs("dominated_fusion_concat", dominant, other);
  const std::size_t c = dominant.shape()[0];
  require_fc("dominated_fusion_concat", params, 2 * c, c);
  const Tensor parts[2] = {dominant, other};
  const Tensor gate =
      sigmoid(add(matvec(params.w, concat(parts, 0)), params.b));
  return mul(dominant, gate);
}

Tensor flat_fusion_concat(const Tensor& a, const Tensor& b,
                          const HighOrderBlockParams& params) {
  require_block_inputs("flat_fusion_concat", a, b);
  const std::size_t c = a.shape()[0];
  require_fc("flat_fusion_concat", params, 2 * c, c);
  const Tensor parts[2] = {a, b};
  return add(matvec(params.w, concat(parts, 0)), params.b);
}

BranchParams make_branch(std::size_t compact_dim, BlockCombine combine,
                         Rng& rng) {
  BranchParams p;
  p.pair1 = make_block(compact_dim, combine, rng);
  p.pair2 = make_block(compact_dim, combine, rng);
  p.merge = make_block(compact_dim, combine, rng);
  return p;
}

ThhfParams make_thhf_params(std::size_t compact_dim, BlockCombine combine,
                            Rng& rng) {
  ThhfParams p;
  p.specific = make_branch(compact_dim, combine, rng);
  p.full = make_branch(compact_dim, combine, rng);
  return p;
}

BranchResult run_branch(const Tensor& c_t, const Tensor& c_v,
                        const Tensor& c_a, const BranchParams& params,
                        const FusionSettings& settings) {
  const Tensor* dom = nullptr;
  const Tensor* other1 = nullptr;
  const Tensor* other2 = nullptr;
  switch (settings.dominant) {
    case 't': dom = &c_t; other1 = &c_v; other2 = &c_a; break;
    case 'v': dom = &c_v; other1 = &c_t; other2 = &c_a; break;
    case 'a': dom = &c_a; other1 = &c_t; other2 = &c_v; break;
    default:
      throw ConfigError(std::string("run_branch: unknown dominant modality '") +
                        settings.dominant + "'");
  }

  const bool concat_route = settings.combine == BlockCombine::concat_fc;
  auto pair_block = [&](const Tensor& d, const Tensor& o,
                        const HighOrderBlockParams& p) {
    if (settings.gated) {
      return concat_route ? dominated_fusion_concat(d, o, p)
                          : dominated_fusion(d, o, p);
    }
    return concat_route ? flat_fusion_concat(d, o, p) : flat_fusion(d, o, p);
  };

  BranchResult out;
  out.fused1 = pair_block(*dom, *other1, params.pair1);
  out.fused2 = pair_block(*dom, *other2, params.pair2);
  out.merged = concat_route
                   ? flat_fusion_concat(out.fused2, out.fused1, params.merge)
                   : flat_fusion(out.fused2, out.fused1, params.merge);
  return out;
}

void collect_params(const BranchParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) {
  out.emplace_back(prefix + ".pair1.w", params.pair1.w);
  out.emplace_back(prefix + ".pair1.b", params.pair1.b);
  out.emplace_back(prefix + ".pair2.w", params.pair2.w);
  out.emplace_back(prefix + ".pair2.b", params.pair2.b);
  out.emplace_back(prefix + ".merge.w", params.merge.w);
  out.emplace_back(prefix + ".merge.b", params.merge.b);
}

void collect_params(const ThhfParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) {
  collect_params(params.specific, prefix + ".spec", out);
  collect_params(params.full, prefix + ".full", out);
}

}  // namespace intermulti
