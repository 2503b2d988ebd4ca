#pragma once

#include <string>
#include <string_view>

namespace modelscope {

enum class FamilyKind { Gaussian, Binomial, Poisson };

/// Mean/variance relations of a generalized linear model with canonical link.
class ModelFamily {
 public:
  constexpr ModelFamily() = default;
  constexpr explicit ModelFamily(FamilyKind kind) : kind_(kind) {}

  static ModelFamily parse(std::string_view name);

  constexpr FamilyKind kind() const { return kind_; }
  constexpr bool is_gaussian() const { return kind_ == FamilyKind::Gaussian; }
  /// Binomial and Poisson fix the dispersion at 1.
  constexpr bool dispersion_known() const { return kind_ != FamilyKind::Gaussian; }

  /// Inverse link h.
  double mean(double eta) const;
  double link(double mu) const;
  /// Variance function v.
  double variance(double mu) const;
  /// dmu/deta; equals variance(mu) for the canonical links used here.
  double mean_derivative(double mu) const;
  /// Log-likelihood contribution of one observation with dispersion 1.
  /// Not used for the gaussian family.
  double loglik_unit(double y, double mu) const;
  /// Unit deviance d(y, mu).
  double deviance_unit(double y, double mu) const;

  std::string name() const;

  friend constexpr bool operator==(ModelFamily, ModelFamily) = default;

 private:
  FamilyKind kind_ = FamilyKind::Gaussian;
};

inline constexpr ModelFamily kGaussian{FamilyKind::Gaussian};
inline constexpr ModelFamily kBinomial{FamilyKind::Binomial};
inline constexpr ModelFamily kPoisson{FamilyKind::Poisson};

}  // namespace modelscope
