#include "modelscope/fit.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numbers>

#include "modelscope/error.hpp"

namespace modelscope {

namespace {

Eigen::MatrixXd model_matrix(const Dataset& d, ModelId m) {
  Eigen::MatrixXd a(d.n(), m.dimension());
  a.col(0).setOnes();
  int c = 1;
  for (int j = 0; j < d.p(); ++j)
    if (m.contains(j)) a.col(c++) = d.x().col(j);
  return a;
}

struct WlsSolution {
  Eigen::VectorXd beta;
  Eigen::MatrixXd r;  // upper-triangular factor of sqrt(W) A
};

WlsSolution solve_wls(const Dataset& d, ModelId m, const Eigen::MatrixXd& a,
                      const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd aw = sw.asDiagonal() * a;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(aw);
  const Eigen::Index k = a.cols();
  Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double scale = aw.col(j).norm();
    if (!(std::abs(r(j, j)) > 1e-10 * scale) || scale == 0.0) {
      std::string name = "(Intercept)";
      if (j > 0) {
        int c = 0;
        for (int v = 0; v < d.p(); ++v)
          if (m.contains(v) && ++c == j) name = d.name(v);
      }
      throw Error(ErrorCode::RankDeficient,
                  "model " + d.formula(m) + " is rank deficient under the given weights (column " +
                      name + ")");
    }
  }
  WlsSolution out;
  out.beta = qr.solve(sw.cwiseProduct(z));
  out.r = std::move(r);
  return out;
}

Eigen::VectorXd unscaled_variances(const Eigen::MatrixXd& r) {
  const Eigen::Index k = r.cols();
  const Eigen::MatrixXd rinv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  return rinv.rowwise().squaredNorm();
}

double deviance_of(ModelFamily fam, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                   const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) dev += w[i] * fam.deviance_unit(y[i], mu[i]);
  return dev;
}

FitResult fit_gaussian(const Dataset& d, ModelId m, const Eigen::VectorXd& w,
                       const FitOptions& options) {
  const Eigen::MatrixXd a = model_matrix(d, m);
  const auto sol = solve_wls(d, m, a, d.y(), w);
  FitResult f;
  f.model = m;
  f.family = FamilyKind::Gaussian;
  f.beta = sol.beta;
  f.fitted = a * sol.beta;
  f.linear_predictor = f.fitted;
  f.residuals = d.y() - f.fitted;
  f.working_weights = w;
  f.weight_sum = w.sum();
  f.n_effective = static_cast<int>((w.array() > 0).count());
  f.rss = (w.array() * f.residuals.array().square()).sum();
  f.deviance = f.rss;
  f.sigma2_hat = f.rss / f.weight_sum;
  f.q_hat = gaussian_q_hat(f.rss, f.weight_sum);
  f.loglik = -0.5 * f.q_hat;
  f.iterations = 1;
  if (options.standard_errors) {
    const int df = f.n_effective - f.dimension();
    const double s2 = df > 0 ? f.rss / df : std::numeric_limits<double>::quiet_NaN();
    f.se = (unscaled_variances(sol.r) * s2).cwiseSqrt();
  }
  return f;
}

FitResult fit_glm(const Dataset& d, ModelId m, const Eigen::VectorXd& w,
                  const FitOptions& options) {
  const ModelFamily fam = d.family();
  const Eigen::VectorXd& y = d.y();
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd a = model_matrix(d, m);

  const double ybar = w.dot(y) / w.sum();
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = 0.5 * (y[i] + ybar);
    if (fam.kind() == FamilyKind::Binomial && (ybar <= 0.0 || ybar >= 1.0)) mu[i] = 0.5 * (y[i] + 0.5);
    if (fam.kind() == FamilyKind::Poisson && mu[i] <= 0.0) mu[i] = 0.1;
  }
  Eigen::VectorXd eta = mu.unaryExpr([&](double v) { return fam.link(v); });
  double dev = deviance_of(fam, y, mu, w);

  auto mu_of = [&](const Eigen::VectorXd& e) {
    return e.unaryExpr([&](double v) { return fam.mean(v); }).eval();
  };
  auto irls_step = [&](const Eigen::VectorXd& mu_now, const Eigen::VectorXd& eta_now) {
    Eigen::VectorXd ww(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dmu = fam.mean_derivative(mu_now[i]);
      ww[i] = w[i] * dmu * dmu / fam.variance(mu_now[i]);
      z[i] = eta_now[i] + (y[i] - mu_now[i]) / dmu;
    }
    return solve_wls(d, m, a, z, ww);
  };

  Eigen::VectorXd beta;
  FitResult f;
  f.model = m;
  f.family = fam.kind();
  f.status = FitStatus::NonConvergence;
  int it = 0;
  auto near_boundary = [&](const Eigen::VectorXd& mu_now) {
    if (fam.kind() != FamilyKind::Binomial) return false;
    for (Eigen::Index i = 0; i < n; ++i)
      if (w[i] > 0 && (mu_now[i] < options.separation_eps || mu_now[i] > 1.0 - options.separation_eps))
        return true;
    return false;
  };
  bool separated = false;
  for (; it < options.max_iterations; ++it) {
    Eigen::VectorXd beta_new;
    try {
      beta_new = irls_step(mu, eta).beta;
    } catch (const Error& e) {
      // Working weights vanish as fitted probabilities reach 0 or 1.
      if (e.code() != ErrorCode::RankDeficient || beta.size() == 0 || !near_boundary(mu)) throw;
      separated = true;
      break;
    }
    Eigen::VectorXd eta_new = a * beta_new;
    Eigen::VectorXd mu_new = mu_of(eta_new);
    double dev_new = deviance_of(fam, y, mu_new, w);
    // Step-halving on divergence or deviance increase.
    for (int halving = 0; halving < 30 && beta.size() > 0 &&
                          (!std::isfinite(dev_new) || dev_new > dev * (1.0 + 1e-12) + 1e-12);
         ++halving) {
      beta_new = 0.5 * (beta_new + beta);
      eta_new = a * beta_new;
      mu_new = mu_of(eta_new);
      dev_new = deviance_of(fam, y, mu_new, w);
    }
    if (!std::isfinite(dev_new)) break;
    const bool done = std::abs(dev_new - dev) / (std::abs(dev_new) + 0.1) < options.tolerance;
    beta = std::move(beta_new);
    eta = std::move(eta_new);
    mu = std::move(mu_new);
    dev = dev_new;
    if (done) {
      f.status = FitStatus::Ok;
      ++it;
      break;
    }
  }
  if (beta.size() == 0)
    throw Error(ErrorCode::Internal, "IRLS produced no finite iterate for " + d.formula(m));
  if (separated) f.status = FitStatus::Separation;

  if (f.status == FitStatus::Ok) {
    // Newton polish: drive the score to round-off so the fixed point is sharp.
    for (int extra = 0; extra < 3; ++extra) {
      const Eigen::VectorXd score = a.transpose() * w.cwiseProduct(y - mu);
      if (score.cwiseAbs().maxCoeff() < 1e-11) break;
      Eigen::VectorXd beta_new = irls_step(mu, eta).beta;
      Eigen::VectorXd eta_new = a * beta_new;
      Eigen::VectorXd mu_new = mu_of(eta_new);
      const double dev_new = deviance_of(fam, y, mu_new, w);
      if (!std::isfinite(dev_new) || dev_new > dev + 1e-9 * (std::abs(dev) + 1.0)) break;
      beta = std::move(beta_new);
      eta = std::move(eta_new);
      mu = std::move(mu_new);
      dev = dev_new;
      ++it;
    }
  }

  f.iterations = it;
  f.beta = beta;
  f.linear_predictor = eta;
  f.fitted = mu;
  f.residuals = y - mu;
  f.working_residuals.resize(n);
  f.working_weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dmu = fam.mean_derivative(mu[i]);
    f.working_residuals[i] = (y[i] - mu[i]) / dmu;
    f.working_weights[i] = w[i] * dmu * dmu / fam.variance(mu[i]);
  }
  f.deviance = dev;
  f.weight_sum = w.sum();
  f.n_effective = static_cast<int>((w.array() > 0).count());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ll += w[i] * fam.loglik_unit(y[i], mu[i]);
  f.loglik = ll;
  f.q_hat = -2.0 * ll;
  if (fam.kind() == FamilyKind::Binomial && f.status == FitStatus::Ok) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (mu[i] < options.separation_eps || mu[i] > 1.0 - options.separation_eps) {
        f.status = FitStatus::Separation;
        break;
      }
  }
  if (options.standard_errors) {
    try {
      const auto sol = solve_wls(d, m, a, eta, f.working_weights);
      f.se = unscaled_variances(sol.r).cwiseSqrt();
    } catch (const Error&) {
      f.se = Eigen::VectorXd::Constant(f.dimension(), std::numeric_limits<double>::infinity());
    }
  }
  return f;
}

}  // namespace

double gaussian_q_hat(double rss, double weight_sum) {
  return weight_sum * (std::log(2.0 * std::numbers::pi * rss / weight_sum) + 1.0);
}

double gaussian_rss_for(double q_hat, double weight_sum) {
  return weight_sum / (2.0 * std::numbers::pi) * std::exp(q_hat / weight_sum - 1.0);
}

FitResult fit(const Dataset& d, ModelId m, const Eigen::VectorXd* weights,
              const FitOptions& options) {
  if (!m.subset_of(ModelId::full(d.p())))
    throw Error(ErrorCode::InvalidArgument, "model refers to columns beyond the design matrix");
  if (weights && weights->size() != d.n())
    throw Error(ErrorCode::InvalidArgument, "weight vector length does not match the data");
  const Eigen::VectorXd w = d.combined_weights(weights);
  if ((w.array() < 0).any() || !w.allFinite())
    throw Error(ErrorCode::InvalidArgument, "weights must be non-negative and finite");
  if (d.family().is_gaussian()) return fit_gaussian(d, m, w, options);
  return fit_glm(d, m, w, options);
}

Dataset glm_to_wls(const Dataset& d, const FitResult& full_fit) {
  if (d.family().kind() != FamilyKind::Binomial)
    throw Error(ErrorCode::InvalidArgument, "the least-squares surrogate needs a binomial model");
  if (full_fit.model != ModelId::full(d.p()) || full_fit.fitted.size() != d.n())
    throw Error(ErrorCode::InvalidArgument, "surrogate needs the full-model fit of this dataset");
  const Eigen::Index n = d.n();
  Eigen::VectorXd z(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = full_fit.fitted[i];
    if (pi < 1e-10 || pi > 1.0 - 1e-10)
      throw Error(ErrorCode::DegenerateProbability,
                  "fitted probability at row " + std::to_string(i + 1) + " is within 1e-10 of 0 or 1");
    const double var = pi * (1.0 - pi);
    z[i] = std::log(pi / (1.0 - pi)) + (d.y()[i] - pi) / var;
    v[i] = var;
  }
  if (d.case_weights()) v = v.cwiseProduct(*d.case_weights());
  return Dataset(d.response(), std::move(z), d.x(), d.columns(), kGaussian, std::move(v),
                 d.rv_index());
}

std::vector<CoefRow> coef_table(const Dataset& d, const FitResult& f) {
  std::vector<CoefRow> rows;
  std::vector<std::string> names{"(Intercept)"};
  for (const auto& v : d.variables(f.model)) names.push_back(v);
  const bool gaussian = f.family == FamilyKind::Gaussian;
  const int df = f.n_effective - f.dimension();
  for (int k = 0; k < f.dimension(); ++k) {
    CoefRow row;
    row.name = names[k];
    row.estimate = f.beta[k];
    row.std_error = f.se.size() == f.beta.size() ? f.se[k] : std::numeric_limits<double>::quiet_NaN();
    row.statistic = row.estimate / row.std_error;
    const double a = std::abs(row.statistic);
    if (!std::isfinite(a)) {
      row.p_value = std::numeric_limits<double>::quiet_NaN();
    } else if (gaussian && df > 0) {
      boost::math::students_t dist(df);
      row.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, a));
    } else {
      row.p_value = std::erfc(a / std::numbers::sqrt2);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace modelscope
