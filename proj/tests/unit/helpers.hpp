#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/fit.hpp"

namespace testing {

using namespace modelscope;

inline std::string data_path(const std::string& file) { return std::string(MODELSCOPE_DATA_DIR) + "/" + file; }

inline Dataset artificial() { return load_csv(data_path("artificialeg.csv"), "y", kGaussian); }
inline Dataset diabetes() { return load_csv(data_path("diabetes.csv"), "y", kGaussian); }
inline Dataset birthwt() {
  return load_csv(data_path("birthwt.csv"), "low", kBinomial,
                  {FactorSpec::parse("race:white|black|other"), FactorSpec::parse("ftv:0|1|2+")});
}

inline std::vector<ColumnInfo> columns_named(int p) {
  std::vector<ColumnInfo> cols;
  for (int j = 0; j < p; ++j) cols.push_back({"v" + std::to_string(j + 1), "v" + std::to_string(j + 1), {}});
  return cols;
}

/// Correlated gaussian design: x_j = z_j + rho * z_0, with a sparse linear signal.
inline Eigen::MatrixXd random_design(int n, int p, std::mt19937_64& rng, double rho = 0.5) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    const double common = z(rng);
    for (int j = 0; j < p; ++j) x(i, j) = z(rng) + rho * common;
  }
  return x;
}

inline Eigen::VectorXd sparse_signal(const Eigen::MatrixXd& x, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); j += 2) beta[j] = u(rng);
  return x * beta;
}

inline Dataset random_gaussian(int n, int p, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x = random_design(n, p, rng);
  Eigen::VectorXd y = sparse_signal(x, rng);
  std::normal_distribution<double> e(0.0, noise);
  for (int i = 0; i < n; ++i) y[i] += e(rng);
  return Dataset("y", y, x, columns_named(p), kGaussian);
}

inline Dataset random_binomial(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x = random_design(n, p, rng, 0.3);
  Eigen::VectorXd eta = 0.6 * sparse_signal(x, rng);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::bernoulli_distribution(1.0 / (1.0 + std::exp(-eta[i])))(rng) ? 1.0 : 0.0;
  return Dataset("y", y, x, columns_named(p), kBinomial);
}

inline Dataset random_poisson(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd x = random_design(n, p, rng, 0.3);
  Eigen::VectorXd eta = (0.4 * sparse_signal(x, rng)).array() + 0.5;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<double>(std::poisson_distribution<int>(std::exp(eta[i]))(rng));
  return Dataset("y", y, x, columns_named(p), kPoisson);
}

inline Dataset random_of(FamilyKind kind, int n, int p, std::uint64_t seed) {
  switch (kind) {
    case FamilyKind::Gaussian: return random_gaussian(n, p, seed);
    case FamilyKind::Binomial: return random_binomial(n, p, seed);
    case FamilyKind::Poisson: return random_poisson(n, p, seed);
  }
  return random_gaussian(n, p, seed);
}

/// Coefficient estimate by name from a coefficient table.
inline double coef(const Dataset& d, const FitResult& f, const std::string& name) {
  for (const auto& r : coef_table(d, f))
    if (r.name == name) return r.estimate;
  throw std::runtime_error("no coefficient " + name);
}

inline const CoefRow& row(const std::vector<CoefRow>& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::runtime_error("no coefficient " + name);
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace testing
