#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "symreg/errors.hpp"

namespace symreg {

// Tabular regression data. Split indices are disjoint and cover all rows;
// sigma_y is the population standard deviation of the training targets.
struct Dataset {
  Eigen::MatrixXd X;  // S x V
  Eigen::VectorXd y;
  std::string name;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  double sigma_y = 0.0;

  int rows() const { return static_cast<int>(X.rows()); }
  int vars() const { return static_cast<int>(X.cols()); }

  Eigen::MatrixXd train_X() const;
  Eigen::VectorXd train_y() const;
  Eigen::MatrixXd test_X() const;
  Eigen::VectorXd test_y() const;

  void recompute_sigma();  // from the current training targets
};

// Loads a rectangular numeric CSV; last column is the target. An optional
// header row is auto-detected and skipped. All rows land in the training
// split. Non-numeric or non-finite cells raise ParseError naming the line.
Dataset load_csv(const std::string& path);

// Deterministic shuffled split; train_fraction of rows (at least 1 per side
// when possible) go to training.
void split_train_test(Dataset& ds, double train_fraction, std::uint64_t seed);

// Adds Gaussian noise with standard deviation level * sigma_y to the training
// targets only. level 0 returns the dataset bitwise unchanged.
Dataset add_noise(const Dataset& ds, double level, std::uint64_t seed);

// 1 - SSE/SST. Throws on fewer than 2 points or zero target variance.
double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

}  // namespace symreg
