#pragma once

#include <cstddef>
#include <vector>

#include "intermulti/rng.hpp"
#include "intermulti/tensor.hpp"

namespace intermulti {

// One GRU cell: z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
// n = tanh(Wn x + Un (r*h) + bn), h' = (1-z)*n + z*h.
struct GruCellParams {
  Tensor w_z, w_r, w_n;  // [H x D_in]
  Tensor u_z, u_r, u_n;  // [H x H]
  Tensor b_z, b_r, b_n;  // [H]

  std::size_t hidden() const { return w_z.shape()[0]; }
  std::size_t input_dim() const { return w_z.shape()[1]; }
};

GruCellParams make_gru_cell(std::size_t input_dim, std::size_t hidden,
                            Rng& rng);
GruCellParams zero_gru_cell(std::size_t input_dim, std::size_t hidden);

Tensor gru_step(const GruCellParams& params, const Tensor& x,
                const Tensor& h_prev);

struct BiGruLayer {
  GruCellParams fwd;
  GruCellParams bwd;
};

// Two stacked bidirectional GRU layers followed by a tanh projection. The
// projection consumes the concatenated final forward/backward hidden states
// of layer 2 (width 2H) and emits the fixed-width unimodal representation.
struct UnimodalEncoder {
  BiGruLayer layer1;  // input D_m
  BiGruLayer layer2;  // input 2H
  Tensor proj_w;      // [rep x 2H]
  Tensor proj_b;      // [rep]
  char modality = '?';

  std::size_t input_dim() const { return layer1.fwd.input_dim(); }
  std::size_t hidden() const { return layer1.fwd.hidden(); }
  std::size_t rep_dim() const { return proj_w.shape()[0]; }
};

UnimodalEncoder make_encoder(char modality, std::size_t input_dim,
                             std::size_t hidden, std::size_t rep_dim, Rng& rng);

// Encodes a padded sequence [L x D]; only rows < mask_len participate, so
// the result is invariant to padding beyond mask_len.
Tensor encode(const UnimodalEncoder& enc, const Tensor& seq,
              std::size_t mask_len);

// Registry hooks: appends (name, tensor) pairs in a fixed order.
void collect_params(const GruCellParams& cell, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out);
void collect_params(const UnimodalEncoder& enc, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out);

}  // namespace intermulti
