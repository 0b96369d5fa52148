#include "symreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "symreg/rng.hpp"

namespace symreg {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, const std::vector<int>& idx) {
  Eigen::MatrixXd out(idx.size(), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& y, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = y[idx[i]];
  return out;
}

bool parse_cell(std::string_view cell, double& out) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
    --last;
  if (first == last) return false;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ';') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Eigen::MatrixXd Dataset::train_X() const { return gather_rows(X, train_idx); }
Eigen::VectorXd Dataset::train_y() const { return gather(y, train_idx); }
Eigen::MatrixXd Dataset::test_X() const { return gather_rows(X, test_idx); }
Eigen::VectorXd Dataset::test_y() const { return gather(y, test_idx); }

void Dataset::recompute_sigma() {
  Eigen::VectorXd ty = train_y();
  if (ty.size() == 0) {
    sigma_y = 0.0;
    return;
  }
  sigma_y = std::sqrt((ty.array() - ty.mean()).square().mean());
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_cell(fields[i], row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header row
      throw ParseError("non-numeric cell in '" + path + "' line " +
                           std::to_string(line_no),
                       0);
    }
    for (std::size_t i = 0; i < row.size(); ++i)
      if (!std::isfinite(row[i]))
        throw ParseError("non-finite value in '" + path + "' line " +
                             std::to_string(line_no) + ", column " +
                             std::to_string(i + 1),
                         0);
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ParseError("ragged row in '" + path + "' line " + std::to_string(line_no),
                       0);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows in '" + path + "'", 0);
  if (width < 2)
    throw ParseError("need at least one input column and one target column", 0);

  Dataset ds;
  ds.X.resize(rows.size(), width - 1);
  ds.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) ds.X(i, j) = rows[i][j];
    ds.y[i] = rows[i][width - 1];
  }
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos)
    stem = stem.substr(0, dot);
  ds.name = stem;
  ds.train_idx.resize(rows.size());
  std::iota(ds.train_idx.begin(), ds.train_idx.end(), 0);
  ds.recompute_sigma();
  return ds;
}

void split_train_test(Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0) || train_fraction > 1.0)
    throw UsageError("split_train_test: fraction must be in (0, 1]");
  const int n = ds.rows();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive(seed, 0x5117));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  int n_train = static_cast<int>(std::round(train_fraction * n));
  n_train = std::clamp(n_train, 1, n);
  if (n_train == n && train_fraction < 1.0 && n > 1) n_train = n - 1;
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.test_idx.assign(order.begin() + n_train, order.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  ds.recompute_sigma();
}

Dataset add_noise(const Dataset& ds, double level, std::uint64_t seed) {
  if (level < 0.0) throw UsageError("add_noise: level must be non-negative");
  if (level == 0.0) return ds;
  Dataset out = ds;
  Rng rng(Rng::derive(seed, 0xA015e));
  const double stddev = level * ds.sigma_y;
  for (int idx : out.train_idx) out.y[idx] += rng.next_normal(stddev);
  out.recompute_sigma();
  return out;
}

double r2_score(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw UsageError("r2_score: length mismatch");
  if (y.size() < 2) throw UsageError("r2_score: need at least two points");
  double sst = (y.array() - y.mean()).square().sum();
  if (!(sst > 0.0)) throw UsageError("r2_score: target variance is zero");
  double sse = (y - y_hat).squaredNorm();
  return 1.0 - sse / sst;
}

}  // namespace symreg
