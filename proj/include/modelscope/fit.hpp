#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "modelscope/dataset.hpp"
#include "modelscope/model_id.hpp"

namespace modelscope {

enum class FitStatus { Ok, NonConvergence, Separation };

struct FitResult {
  ModelId model;
  FamilyKind family = FamilyKind::Gaussian;
  Eigen::VectorXd beta;  // intercept first, then selected columns in order
  double loglik = 0.0;
  double q_hat = 0.0;  // -2 * loglik
  double deviance = 0.0;
  double rss = 0.0;         // weighted residual sum of squares (gaussian)
  double sigma2_hat = 0.0;  // ML variance rss / sum(w) (gaussian)
  double weight_sum = 0.0;
  int n_effective = 0;  // observations with positive weight
  Eigen::VectorXd se;
  Eigen::VectorXd fitted;             // mu-hat
  Eigen::VectorXd linear_predictor;   // eta-hat
  Eigen::VectorXd residuals;          // y - mu-hat
  Eigen::VectorXd working_residuals;  // (y - mu) / (dmu/deta); GLM only
  Eigen::VectorXd working_weights;    // final IRLS weights (gaussian: case weights)
  FitStatus status = FitStatus::Ok;
  int iterations = 0;

  bool converged() const { return status != FitStatus::NonConvergence; }
  int dimension() const { return static_cast<int>(beta.size()); }
};

struct FitOptions {
  bool standard_errors = true;
  int max_iterations = 50;
  double tolerance = 1e-8;
  /// Fitted probabilities closer than this to 0 or 1 flag separation.
  double separation_eps = 1e-10;
};

/// Fits model `m` on `d`. `weights`, when given, multiply the dataset's own
/// case weights and act as likelihood weights. Throws RankDeficient when the
/// selected columns plus intercept are not of full rank under the weights.
FitResult fit(const Dataset& d, ModelId m, const Eigen::VectorXd* weights = nullptr,
              const FitOptions& options = {});

/// Generalized information criterion q_hat + lambda * p_alpha.
constexpr double gic(double q_hat, int p_alpha, double lambda) {
  return q_hat + lambda * p_alpha;
}

/// Gaussian -2 log-likelihood with ML variance, as a function of the weighted
/// RSS and the weight total.
double gaussian_q_hat(double rss, double weight_sum);
/// Inverse of gaussian_q_hat.
double gaussian_rss_for(double q_hat, double weight_sum);

/// Weighted least-squares surrogate of a logistic fit: working response
/// z = eta + (y - pi) / (pi (1 - pi)) with weights pi (1 - pi).
Dataset glm_to_wls(const Dataset& d, const FitResult& full_fit);

struct CoefRow {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Gaussian: t statistics on n - p_alpha df with the unbiased variance.
/// Other families: z statistics.
std::vector<CoefRow> coef_table(const Dataset& d, const FitResult& f);

}  // namespace modelscope
