#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modelscope/family.hpp"
#include "modelscope/model_id.hpp"

namespace modelscope {

struct FitResult;

/// Provenance of one candidate column.
struct ColumnInfo {
  std::string name;
  std::string source;  // raw CSV column (or "RV", or "a.b" for products)
  std::optional<std::string> level;  // set for factor dummies
};

/// Response, candidate design columns and family. Immutable once built;
/// every constructor path validates the invariants (unique names, full
/// column rank with the intercept, n > p + 1, family-compatible response).
class Dataset {
 public:
  Dataset(std::string response, Eigen::VectorXd y, Eigen::MatrixXd x,
          std::vector<ColumnInfo> columns, ModelFamily family,
          std::optional<Eigen::VectorXd> case_weights = std::nullopt,
          std::optional<int> rv_index = std::nullopt);

  int n() const { return static_cast<int>(y_.size()); }
  int p() const { return static_cast<int>(x_.cols()); }
  const std::string& response() const { return response_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<ColumnInfo>& columns() const { return columns_; }
  const std::string& name(int j) const { return columns_[j].name; }
  std::vector<std::string> names() const;
  ModelFamily family() const { return family_; }
  const std::optional<Eigen::VectorXd>& case_weights() const { return case_weights_; }
  std::optional<int> rv_index() const { return rv_index_; }

  /// Index of the column called `name`; throws UnknownVariable.
  int index_of(const std::string& name) const;
  ModelId model_of(const std::vector<std::string>& names) const;

  /// `y~x1+x4` in column order, `y~1` for the null model.
  std::string formula(ModelId m) const;
  std::vector<std::string> variables(ModelId m) const;

  /// Copy with a different response (same design, family and weights).
  /// Only family constraints on the new response are re-checked.
  Dataset with_response(Eigen::VectorXd y) const;

  /// Case weights multiplied elementwise with `w` (or `w` if none are set).
  Eigen::VectorXd combined_weights(const Eigen::VectorXd* w) const;

 private:
  struct Unchecked {};
  Dataset(Unchecked, const Dataset& base, Eigen::VectorXd y);
  void check_response() const;

  std::string response_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd x_;
  std::vector<ColumnInfo> columns_;
  ModelFamily family_;
  std::optional<Eigen::VectorXd> case_weights_;
  std::optional<int> rv_index_;
};

/// A factor declaration: `col` (levels sorted) or `col:l1|l2|l3` (explicit
/// level order, first is the baseline).
struct FactorSpec {
  std::string column;
  std::vector<std::string> levels;

  static FactorSpec parse(const std::string& text);
};

Dataset load_csv(const std::string& path, const std::string& response,
                 ModelFamily family, const std::vector<FactorSpec>& factors = {});

/// Same as load_csv but from in-memory CSV text.
Dataset parse_csv(const std::string& text, const std::string& response,
                  ModelFamily family, const std::vector<FactorSpec>& factors = {});

/// Appends one standard-normal column named "RV".
Dataset add_redundant_variable(const Dataset& d, std::uint64_t seed);

/// Residuals of `fit` regressed on all pairwise products of the main-effect
/// columns, named `a.b`.
Dataset make_interaction_followup(const Dataset& d, ModelId mains, const FitResult& fit);

/// Ten jointly gaussian predictors with the given covariance and
/// y = 0.6 * x8 + N(0, 2^2).
Dataset generate_artificial(int n, std::uint64_t seed, const Eigen::MatrixXd& covariance);

}  // namespace modelscope
