#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intermulti/rng.hpp"
#include "intermulti/tensor.hpp"

namespace intermulti {

// Instance-based split of the three unimodal representations into a shared
// part and per-modality residuals. Adds no trainable parameters:
//   shared   = (h_t + h_v + h_a) / 3
//   residual = h_m - shared          (residuals sum to zero per coordinate)
struct SelfDecoupled {
  Tensor shared;  // S
  Tensor i_t, i_v, i_a;
};

SelfDecoupled self_decouple(const Tensor& h_t, const Tensor& h_v,
                            const Tensor& h_a);

// tanh-activated compaction FC (rep_dim -> compact_dim). Six independent
// instances exist per model: one per modality for the residual stream and
// one per modality for the full stream.
struct CompactFc {
  Tensor w;  // [compact x rep]
  Tensor b;  // [compact]
};

CompactFc make_compact_fc(std::size_t rep_dim, std::size_t compact_dim,
                          Rng& rng);
Tensor compact(const CompactFc& fc, const Tensor& x);

struct DecoupleParams {
  CompactFc spec_t, spec_v, spec_a;  // residual stream
  CompactFc full_t, full_v, full_a;  // full stream
};

DecoupleParams make_decouple_params(std::size_t rep_dim,
                                    std::size_t compact_dim, Rng& rng);

void collect_params(const DecoupleParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out);

// Mean over samples of |dot(u_i, v_i)|; the entanglement score reported for
// each representation pair. Vectors in a pair must share a length.
double mean_abs_dot(const std::vector<std::vector<double>>& us,
                    const std::vector<std::vector<double>>& vs);

}  // namespace intermulti
