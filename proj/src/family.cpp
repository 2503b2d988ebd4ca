#include "modelscope/family.hpp"

#include <cmath>

#include "modelscope/error.hpp"

namespace modelscope {

ModelFamily ModelFamily::parse(std::string_view name) {
  if (name == "gaussian" || name == "gaussian-identity") return kGaussian;
  if (name == "binomial" || name == "binomial-logit") return kBinomial;
  if (name == "poisson" || name == "poisson-log") return kPoisson;
  throw Error(ErrorCode::InvalidArgument, "unknown family '" + std::string(name) + "'");
}

double ModelFamily::mean(double eta) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return eta;
    case FamilyKind::Binomial:
      return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    case FamilyKind::Poisson: return std::exp(eta);
  }
  return eta;
}

double ModelFamily::link(double mu) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return mu;
    case FamilyKind::Binomial: return std::log(mu / (1.0 - mu));
    case FamilyKind::Poisson: return std::log(mu);
  }
  return mu;
}

double ModelFamily::variance(double mu) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return 1.0;
    case FamilyKind::Binomial: return mu * (1.0 - mu);
    case FamilyKind::Poisson: return mu;
  }
  return 1.0;
}

double ModelFamily::mean_derivative(double mu) const {
  return kind_ == FamilyKind::Gaussian ? 1.0 : variance(mu);
}

namespace {
double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }
}  // namespace

double ModelFamily::loglik_unit(double y, double mu) const {
  switch (kind_) {
    case FamilyKind::Binomial: return xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu);
    case FamilyKind::Poisson: return xlogy(y, mu) - mu - std::lgamma(y + 1.0);
    case FamilyKind::Gaussian: break;
  }
  return 0.0;
}

double ModelFamily::deviance_unit(double y, double mu) const {
  switch (kind_) {
    case FamilyKind::Gaussian: return (y - mu) * (y - mu);
    case FamilyKind::Binomial:
      return 2.0 * (xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu)));
    case FamilyKind::Poisson: return 2.0 * (xlogy(y, y / mu) - (y - mu));
  }
  return 0.0;
}

std::string ModelFamily::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Binomial: return "binomial";
    case FamilyKind::Poisson: return "poisson";
  }
  return "gaussian";
}

}  // namespace modelscope
