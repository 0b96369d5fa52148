#pragma once

#include <vector>

#include "symreg/policy.hpp"
#include "symreg/sampler.hpp"

namespace testutil {

using namespace symreg;

// Six-token vocabulary for gradient-oracle work: {+, *, sin, x1, c, 1}.
inline TokenLibrary tiny_lib() {
  return TokenLibrary::build(1, {"sin"}, {"add", "mul"}, true, true);
}

inline ModelConfig tiny_model_config(int vocab, int layers = 1, int heads = 1) {
  ModelConfig mc;
  mc.vocab = vocab;
  mc.embed_dim = 4;
  mc.layers = layers;
  mc.heads = heads;
  mc.ff_dim = 8;
  mc.dct_clip = 3;
  return mc;
}

inline SampleConfig tiny_sample_config(int batch, int max_nodes = 6) {
  SampleConfig sc;
  sc.batch = batch;
  sc.oversampling = 2.0;
  sc.max_nodes = max_nodes;
  return sc;
}

// Central finite difference of a scalar function at coordinate i.
template <typename Fn>
double central_diff(Fn&& f, Eigen::VectorXd theta, int i, double h) {
  double keep = theta[i];
  theta[i] = keep + h;
  double up = f(theta);
  theta[i] = keep - h;
  double dn = f(theta);
  return (up - dn) / (2.0 * h);
}

// Relative error with a floor for near-zero pairs.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

}  // namespace testutil
