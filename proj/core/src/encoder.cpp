#include "intermulti/encoder.hpp"

#include <cmath>
#include <string>

namespace intermulti {

namespace {

Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(cols));
  return uniform_tensor({rows, cols}, bound, rng);
}

}  // namespace

GruCellParams make_gru_cell(std::size_t input_dim, std::size_t hidden,
                            Rng& rng) {
  GruCellParams p;
  p.w_z = init_weight(hidden, input_dim, rng);
  p.w_r = init_weight(hidden, input_dim, rng);
  p.w_n = init_weight(hidden, input_dim, rng);
  p.u_z = init_weight(hidden, hidden, rng);
  p.u_r = init_weight(hidden, hidden, rng);
  p.u_n = init_weight(hidden, hidden, rng);
  p.b_z = Tensor::zeros({hidden}, true);
  p.b_r = Tensor::zeros({hidden}, true);
  p.b_n = Tensor::zeros({hidden}, true);
  return p;
}

GruCellParams zero_gru_cell(std::size_t input_dim, std::size_t hidden) {
  GruCellParams p;
  p.w_z = Tensor::zeros({hidden, input_dim}, true);
  p.w_r = Tensor::zeros({hidden, input_dim}, true);
  p.w_n = Tensor::zeros({hidden, input_dim}, true);
  p.u_z = Tensor::zeros({hidden, hidden}, true);
  p.u_r = Tensor::zeros({hidden, hidden}, true);
  p.u_n = Tensor::zeros({hidden, hidden}, true);
  p.b_z = Tensor::zeros({hidden}, true);
  p.b_r = Tensor::zeros({hidden}, true);
  p.b_n = Tensor::zeros({hidden}, true);
  return p;
}

Tensor gru_step(const GruCellParams& params, const Tensor& x,
                const Tensor& h_prev) {
  if (x.rank() != 1 || x.shape()[0] != params.input_dim()) {
    throw ShapeError("gru_step: input " + shape_str(x.shape()) +
                     " does not match cell input dim " +
                     std::to_string(params.input_dim()));
  }
  if (h_prev.rank() != 1 || h_prev.shape()[0] != params.hidden()) {
    throw ShapeError("gru_step: hidden state " + shape_str(h_prev.shape()) +
                     " does not match cell hidden dim " +
                     std::to_string(params.hidden()));
  }
  const Tensor z =
      sigmoid(add(add(matvec(params.w_z, x), matvec(params.u_z, h_prev)),
                  params.b_z));
  const Tensor r =
      sigmoid(add(add(matvec(params.w_r, x), matvec(params.u_r, h_prev)),
                  params.b_r));
  const Tensor n = tanh(add(
      add(matvec(params.w_n, x), matvec(params.u_n, mul(r, h_prev))),
      params.b_n));
  const Tensor one = Tensor::constant({params.hidden()}, 1.0);
  return add(mul(sub(one, z), n), mul(z, h_prev));
}

UnimodalEncoder make_encoder(char modality, std::size_t input_dim,
                             std::size_t hidden, std::size_t rep_dim,
                             Rng& rng) {
  UnimodalEncoder enc;
  enc.modality = modality;
  enc.layer1.fwd = make_gru_cell(input_dim, hidden, rng);
  enc.layer1.bwd = make_gru_cell(input_dim, hidden, rng);
  enc.layer2.fwd = make_gru_cell(2 * hidden, hidden, rng);
  enc.layer2.bwd = make_gru_cell(2 * hidden, hidden, rng);
  enc.proj_w = init_weight(rep_dim, 2 * hidden, rng);
  enc.proj_b = Tensor::zeros({rep_dim}, true);
  return enc;
}

namespace {

// Runs one bidirectional layer over steps [0, len); returns per-step
// concat(h_fwd[t], h_bwd[t]) plus the two final hidden states.
struct BiGruOut {
  std::vector<Tensor> steps;  // len tensors of width 2H
  Tensor last_fwd;            // hidden after scanning 0..len-1
  Tensor last_bwd;            // hidden after scanning len-1..0
};

BiGruOut run_bigru(const BiGruLayer& layer, const std::vector<Tensor>& xs) {
  const std::size_t len = xs.size();
  const std::size_t h = layer.fwd.hidden();

  std::vector<Tensor> fwd(len), bwd(len);
  Tensor state = Tensor::constant({h}, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    state = gru_step(layer.fwd, xs[t], state);
    fwd[t] = state;
  }
  Tensor last_fwd = state;

  state = Tensor::constant({h}, 0.0);
  for (std::size_t t = len; t-- > 0;) {
    state = gru_step(layer.bwd, xs[t], state);
    bwd[t] = state;
  }
  Tensor last_bwd = state;

  BiGruOut out;
  out.steps.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    const Tensor parts[2] = {fwd[t], bwd[t]};
    out.steps.push_back(concat(parts, 0));
  }
  out.last_fwd = std::move(last_fwd);
  out.last_bwd = std::move(last_bwd);
  return out;
}

}  // namespace

Tensor encode(const UnimodalEncoder& enc, const Tensor& seq,
              std::size_t mask_len) {
  if (seq.rank() != 2) {
    throw ShapeError("encode: expected [L x D] sequence, got " +
                     shape_str(seq.shape()));
  }
  const std::size_t length = seq.shape()[0];
  const std::size_t dim = seq.shape()[1];
  if (dim != enc.input_dim()) {
    throw ShapeError("encode: feature dim " + std::to_string(dim) +
                     " does not match encoder input dim " +
                     std::to_string(enc.input_dim()));
  }
  if (mask_len == 0 || mask_len > length) {
    throw ShapeError("encode: mask_len " + std::to_string(mask_len) +
                     " out of range for sequence length " +
                     std::to_string(length));
  }

  std::vector<Tensor> xs;
  xs.reserve(mask_len);
  for (std::size_t t = 0; t < mask_len; ++t) {
    xs.push_back(flatten(slice(seq, 0, t, 1)));
  }

  BiGruOut l1 = run_bigru(enc.layer1, xs);
  BiGruOut l2 = run_bigru(enc.layer2, l1.steps);

  const Tensor finals[2] = {l2.last_fwd, l2.last_bwd};
  const Tensor pooled = concat(finals, 0);
  return tanh(add(matvec(enc.proj_w, pooled), enc.proj_b));
}

void collect_params(const GruCellParams& cell, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) {
  out.emplace_back(prefix + ".w_z", cell.w_z);
  out.emplace_back(prefix + ".w_r", cell.w_r);
  out.emplace_back(prefix + ".w_n", cell.w_n);
  out.emplace_back(prefix + ".u_z", cell.u_z);
  out.emplace_back(prefix + ".u_r", cell.u_r);
  out.emplace_back(prefix + ".u_n", cell.u_n);
  out.emplace_back(prefix + ".b_z", cell.b_z);
  out.emplace_back(prefix + ".b_r", cell.b_r);
  out.emplace_back(prefix + ".b_n", cell.b_n);
}

void collect_params(const UnimodalEncoder& enc, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) {
  collect_params(enc.layer1.fwd, prefix + ".l1.fwd", out);
  collect_params(enc.layer1.bwd, prefix + ".l1.bwd", out);
  collect_params(enc.layer2.fwd, prefix + ".l2.fwd", out);
  collect_params(enc.layer2.bwd, prefix + ".l2.bwd", out);
  out.emplace_back(prefix + ".proj_w", enc.proj_w);
  out.emplace_back(prefix + ".proj_b", enc.proj_b);
}

}  // namespace intermulti
