#include "intermulti/decouple.hpp"

#include <cmath>

namespace intermulti {

SelfDecoupled self_decouple(const Tensor& h_t, const Tensor& h_v,
                            const Tensor& h_a) {
  if (h_t.rank() != 1 || h_t.shape() != h_v.shape() ||
      h_t.shape() != h_a.shape()) {
    throw ShapeError("self_decouple: inputs must be equal-length vectors, got " +
                     shape_str(h_t.shape()) + ", " + shape_str(h_v.shape()) +
                     ", " + shape_str(h_a.shape()));
  }
  SelfDecoupled out;
  out.shared = scale(add(add(h_t, h_v), h_a), 1.0 / 3.0);
  out.i_t = sub(h_t, out.shared);
  out.i_v = sub(h_v, out.shared);
  out.i_a = sub(h_a, out.shared);
  return out;
}

CompactFc make_compact_fc(std::size_t rep_dim, std::size_t compact_dim,
                          Rng& rng) {
  CompactFc fc;
  const double bound = 1.0 / std::sqrt(double(rep_dim));
  fc.w = uniform_tensor({compact_dim, rep_dim}, bound, rng);
  fc.b = Tensor::zeros({compact_dim}, true);
  return fc;
}

Tensor compact(const CompactFc& fc, const Tensor& x) {
  if (x.rank() != 1 || x.shape()[0] != fc.w.shape()[1]) {
    throw ShapeError("compact: input " + shape_str(x.shape()) +
                     " does not match fc weight " + shape_str(fc.w.shape()));
  }
  return tanh(add(matvec(fc.w, x), fc.b));
}

DecoupleParams make_decouple_params(std::size_t rep_dim,
                                    std::size_t compact_dim, Rng& rng) {
  DecoupleParams p;
  p.spec_t = make_compact_fc(rep_dim, compact_dim, rng);
  p.spec_v = make_compact_fc(rep_dim, compact_dim, rng);
  p.spec_a = make_compact_fc(rep_dim, compact_dim, rng);
  p.full_t = make_compact_fc(rep_dim, compact_dim, rng);
  p.full_v = make_compact_fc(rep_dim, compact_dim, rng);
  p.full_a = make_compact_fc(rep_dim, compact_dim, rng);
  return p;
}

void collect_params(const DecoupleParams& params, const std::string& prefix,
                    std::vector<std::pair<std::string, Tensor>>& out) {
  auto push = [&](const CompactFc& fc, const std::string& name) {
    out.emplace_back(prefix + "." + name + ".w", fc.w);
    out.emplace_back(prefix + "." + name + ".b", fc.b);
  };
  push(params.spec_t, "spec_t");
  push(params.spec_v, "spec_v");
  push(params.spec_a, "spec_a");
  push(params.full_t, "full_t");
  push(params.full_v, "full_v");
  push(params.full_a, "full_a");
}

double mean_abs_dot(const std::vector<std::vector<double>>& us,
                    const std::vector<std::vector<double>>& vs) {
  if (us.empty() || us.size() != vs.size()) {
    throw DataError("mean_abs_dot: empty or mismatched sample lists");
  }
  double acc = 0.0;
  for (std::size_t s = 0; s < us.size(); ++s) {
    if (us[s].size() != vs[s].size()) {
      throw DataError("mean_abs_dot: vector length mismatch within pair");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < us[s].size(); ++i) dot += us[s][i] * vs[s][i];
    acc += std::abs(dot);
  }
  return acc / double(us.size());
}

}  // namespace intermulti
