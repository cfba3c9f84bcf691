#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intermulti/rng.hpp"
#include "intermulti/tensor.hpp"

namespace intermulti {

// How a fusion block combines its two input vectors before the FC:
// the high-order route (outer product, 2x2 max pool, flatten) or the
// concatenation route used by the no-outer-product ablation.
enum class BlockCombine { outer_pool, concat_fc };

// FC applied after the combine step. For outer_pool the input width is
// (c/2)^2 of the pooled grid, for concat_fc it is 2c; output width is c.
struct HighOrderBlockParams {
  Tensor w;
  Tensor b;
};

std::size_t block_input_width(std::size_t compact_dim, BlockCombine combine);

HighOrderBlockParams make_block(std::size_t compact_dim, BlockCombine combine,
                                Rng& rng);

// dominant * sigmoid(FC(Flatten(Pool(outer(dominant, other))))): the gate is an
// attention vector in (0,1)^c, so each output coordinate is bounded by the
// dominant input.
Tensor dominated_fusion(const Tensor& dominant, const Tensor& other,
                        const HighOrderBlockParams& params);

// FC(Flatten(Pool(outer(a, b)))): linear merge of two fused representations.
Tensor flat_fusion(const Tensor& a, const Tensor& b,
                   const HighOrderBlockParams& params);

// Concatenation-route variants with the same output widths.
Tensor dominated_fusion_concat(const Tensor& dominant, const Tensor& other,
                               const HighOrderBlockParams& params);
Tensor flat_fusion_concat(const Tensor& a, const Tensor& b,
                          const HighOrderBlockParams& params);

// One branch = two dominated blocks (dominant paired with each remaining
// modality) merged by one flat block. The specific and full branches are
// structurally identical with disjoint parameters.
struct BranchParams {
  HighOrderBlockParams pair1;  // dominant with the first other modality
  HighOrderBlockParams pair2;  // dominant with the second other modality
  HighOrderBlockParams merge;
};

struct ThhfParams {
  BranchParams specific;
  BranchParams full;
};

struct FusionSettings {
  char dominant = 't';  // 't' | 'v' | 'a'
  bool gated = true;    // false: every block runs the flat (ungated) form
  BlockCombine combine = BlockCombine::outer_pool;
};

BranchParams make_branch(std::size_t compact_dim, BlockCombine combine,
                         Rng& rng);
ThhfParams make_thhf_params(std::size_t compact_dim, BlockCombine combine,
                            Rng& rng);

struct BranchResult {
  Tensor fused1;  // dominant-other1 pair (i_tv / h_tv in the default wiring)
  Tensor fused2;  // dominant-other2 pair (i_ta / h_ta)
  Tensor merged;  // branch interaction representation (I or M)
};

// c_t/c_v/c_a are the branch's compacted inputs. The merge follows the
// (pair2, pair1) argument order of the block equations.
BranchResult run_branch(const Tensor& c_t, const Tensor& c_v,
                        const Tensor& c_a, const BranchParams& params,
                        const FusionSettings& settings);

void collect_params(const BranchParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out);
void collect_params(const ThhfParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out);

}  // namespace intermulti
