#pragma once

#include <Eigen/Core>
#include <cmath>

#include "symreg/errors.hpp"

namespace symreg {

// Sinusoidal encoding of a node's depth d and horizontal position h.
// Layout: entries 0..D-1 are (sin, cos) pairs of d / 10000^(4i/D); entries
// D..2D-1 are (sin, cos) pairs of h / 10^(4j/D). D must be even.
inline Eigen::VectorXd dpe_encode(double d, double h, int D) {
  if (D < 2 || D % 2 != 0) throw UsageError("dpe_encode: D must be even and >= 2");
  Eigen::VectorXd v(2 * D);
  for (int i = 0; 2 * i + 1 < D; ++i) {
    double angle = d / std::pow(10000.0, 4.0 * i / D);
    v[2 * i] = std::sin(angle);
    v[2 * i + 1] = std::cos(angle);
  }
  for (int j = 0; 2 * j + 1 < D; ++j) {
    double angle = h / std::pow(10.0, 4.0 * j / D);
    v[D + 2 * j] = std::sin(angle);
    v[D + 2 * j + 1] = std::cos(angle);
  }
  return v;
}

// Width-r position row for the context embedding. For r divisible by 4 this
// is dpe_encode with 2D = r; otherwise an even-D encoding is computed and
// each half is truncated to r/2 entries. r must be even.
inline Eigen::VectorXd position_embedding(double d, double h, int r) {
  if (r < 2 || r % 2 != 0)
    throw UsageError("position_embedding: embedding width must be even");
  const int half = r / 2;
  const int D = half % 2 == 0 ? half : half + 1;
  Eigen::VectorXd full = dpe_encode(d, h, D);
  if (2 * D == r) return full;
  Eigen::VectorXd v(r);
  v.head(half) = full.head(half);
  v.tail(half) = full.segment(D, half);
  return v;
}

}  // namespace symreg
