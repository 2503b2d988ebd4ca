#include "modelscope/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "modelscope/error.hpp"
#include "modelscope/fit.hpp"
#include "modelscope/rng.hpp"

namespace modelscope {

namespace {

// Indices of columns of [1 X] that are linearly dependent on earlier ones,
// excluding the intercept (index -1 denotes the intercept itself).
std::vector<int> dependent_columns(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd a(n, x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  // Scale columns so the rank threshold is relative to each column.
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double norm = a.col(j).norm();
    if (norm > 0) a.col(j) /= norm;
  }
  std::vector<int> dependent;
  // Greedy left-to-right: a column is dependent if its residual on the kept
  // columns is (numerically) zero.
  Eigen::MatrixXd kept(n, 0);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::VectorXd r = a.col(j);
    if (kept.cols() > 0) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(kept);
      r -= kept * qr.solve(r);
    }
    if (r.norm() < 1e-9) {
      dependent.push_back(static_cast<int>(j) - 1);
    } else {
      kept.conservativeResize(Eigen::NoChange, kept.cols() + 1);
      kept.col(kept.cols() - 1) = a.col(j);
    }
  }
  return dependent;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

std::optional<double> parse_number(const std::string& s) {
  std::string_view sv(s);
  while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
  while (!sv.empty() && sv.back() == ' ') sv.remove_suffix(1);
  if (sv.empty()) return std::nullopt;
  if (sv.front() == '+') sv.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
  if (ec != std::errc() || ptr != sv.data() + sv.size()) return std::nullopt;
  return value;
}

// RFC-4180 records: comma separated, optional double-quote quoting with ""
// escapes, LF or CRLF line ends.
std::vector<std::vector<std::string>> parse_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !record.empty()) {
          record.push_back(std::move(field));
          records.push_back(std::move(record));
        }
        record.clear();
        field.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidArgument, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<std::string> sorted_levels(std::vector<std::string> levels) {
  const bool numeric = std::all_of(levels.begin(), levels.end(),
                                   [](const std::string& s) { return parse_number(s).has_value(); });
  if (numeric) {
    std::sort(levels.begin(), levels.end(), [](const std::string& a, const std::string& b) {
      return *parse_number(a) < *parse_number(b);
    });
  } else {
    std::sort(levels.begin(), levels.end());
  }
  return levels;
}

}  // namespace

Dataset::Dataset(std::string response, Eigen::VectorXd y, Eigen::MatrixXd x,
                 std::vector<ColumnInfo> columns, ModelFamily family,
                 std::optional<Eigen::VectorXd> case_weights, std::optional<int> rv_index)
    : response_(std::move(response)),
      y_(std::move(y)),
      x_(std::move(x)),
      columns_(std::move(columns)),
      family_(family),
      case_weights_(std::move(case_weights)),
      rv_index_(rv_index) {
  const int n = static_cast<int>(y_.size());
  const int p = static_cast<int>(x_.cols());
  if (x_.rows() != n)
    throw Error(ErrorCode::InvalidArgument, "design matrix rows do not match response length");
  if (static_cast<int>(columns_.size()) != p)
    throw Error(ErrorCode::InvalidArgument, "column metadata does not match design matrix");
  if (p > ModelId::kMaxVariables)
    throw Error(ErrorCode::InvalidArgument, "at most 63 candidate variables are supported");
  if (n <= p + 1)
    throw Error(ErrorCode::InvalidArgument,
                "need more observations than parameters (n=" + std::to_string(n) +
                    ", p=" + std::to_string(p) + ")");
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw Error(ErrorCode::InvalidArgument, "empty column name");
    if (!seen.insert(c.name).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate column name '" + c.name + "'");
  }
  if (response_.empty()) throw Error(ErrorCode::InvalidArgument, "empty response name");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i]))
      throw Error(ErrorCode::NonFiniteValue, "non-finite response at row " + std::to_string(i + 1));
    for (int j = 0; j < p; ++j)
      if (!std::isfinite(x_(i, j)))
        throw Error(ErrorCode::NonFiniteValue, "non-finite value at row " + std::to_string(i + 1) +
                                                   ", column '" + columns_[j].name + "'");
  }
  if (case_weights_) {
    if (case_weights_->size() != n)
      throw Error(ErrorCode::InvalidArgument, "case weights length does not match response");
    for (int i = 0; i < n; ++i)
      if (!((*case_weights_)[i] > 0.0) || !std::isfinite((*case_weights_)[i]))
        throw Error(ErrorCode::InvalidArgument, "case weights must be positive and finite");
  }
  if (rv_index_ && (*rv_index_ < 0 || *rv_index_ >= p))
    throw Error(ErrorCode::InvalidArgument, "redundant variable index out of range");
  check_response();
  const auto dependent = dependent_columns(x_);
  if (!dependent.empty()) {
    std::string names;
    for (int j : dependent) {
      if (!names.empty()) names += ", ";
      names += j < 0 ? std::string("(Intercept)") : columns_[j].name;
    }
    throw Error(ErrorCode::RankDeficient, "design matrix is rank deficient; dependent columns: " + names);
  }
}

Dataset::Dataset(Unchecked, const Dataset& base, Eigen::VectorXd y) : Dataset(base) {
  y_ = std::move(y);
}

void Dataset::check_response() const {
  const int n = static_cast<int>(y_.size());
  for (int i = 0; i < n; ++i) {
    const double v = y_[i];
    if (!std::isfinite(v))
      throw Error(ErrorCode::NonFiniteValue, "non-finite response at row " + std::to_string(i + 1));
    if (family_.kind() == FamilyKind::Binomial && v != 0.0 && v != 1.0)
      throw Error(ErrorCode::InvalidArgument,
                  "binomial response must be 0/1 (row " + std::to_string(i + 1) + ")");
    if (family_.kind() == FamilyKind::Poisson && (!is_integer(v) || v < 0))
      throw Error(ErrorCode::InvalidArgument,
                  "poisson response must be a non-negative integer (row " + std::to_string(i + 1) + ")");
  }
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

int Dataset::index_of(const std::string& name) const {
  for (int j = 0; j < p(); ++j)
    if (columns_[j].name == name) return j;
  throw Error(ErrorCode::UnknownVariable, "unknown variable '" + name + "'");
}

ModelId Dataset::model_of(const std::vector<std::string>& names) const {
  ModelId m;
  for (const auto& nm : names) m = m.with(index_of(nm));
  return m;
}

std::string Dataset::formula(ModelId m) const {
  std::string out = response_ + "~";
  if (m.mask == 0) return out + "1";
  bool first = true;
  for (int j = 0; j < p(); ++j) {
    if (!m.contains(j)) continue;
    if (!first) out += "+";
    out += columns_[j].name;
    first = false;
  }
  return out;
}

std::vector<std::string> Dataset::variables(ModelId m) const {
  std::vector<std::string> out;
  for (int j = 0; j < p(); ++j)
    if (m.contains(j)) out.push_back(columns_[j].name);
  return out;
}

Dataset Dataset::with_response(Eigen::VectorXd y) const {
  if (y.size() != y_.size())
    throw Error(ErrorCode::InvalidArgument, "replacement response has the wrong length");
  Dataset out(Unchecked{}, *this, std::move(y));
  out.check_response();
  return out;
}

Eigen::VectorXd Dataset::combined_weights(const Eigen::VectorXd* w) const {
  if (w && case_weights_) return w->cwiseProduct(*case_weights_);
  if (w) return *w;
  if (case_weights_) return *case_weights_;
  return Eigen::VectorXd::Ones(n());
}

FactorSpec FactorSpec::parse(const std::string& text) {
  FactorSpec spec;
  const auto colon = text.find(':');
  spec.column = text.substr(0, colon);
  if (spec.column.empty()) throw Error(ErrorCode::InvalidArgument, "empty factor column name");
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string level;
    while (std::getline(ss, level, '|')) spec.levels.push_back(level);
    if (spec.levels.empty())
      throw Error(ErrorCode::InvalidArgument, "factor '" + spec.column + "' lists no levels");
  }
  return spec;
}

Dataset parse_csv(const std::string& text, const std::string& response, ModelFamily family,
                  const std::vector<FactorSpec>& factors) {
  auto records = parse_records(text);
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "CSV has no header row");
  const auto header = records.front();
  const std::size_t width = header.size();
  for (const auto& h : header) {
    if (h.empty()) throw Error(ErrorCode::InvalidArgument, "empty column name in CSV header");
    if (h.find('.') != std::string::npos)
      throw Error(ErrorCode::InvalidArgument,
                  "column name '" + h + "' contains '.', which is reserved for interactions");
  }
  auto column_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t response_col = column_index(response);
  std::map<std::size_t, const FactorSpec*> factor_of;
  for (const auto& f : factors) {
    const auto idx = column_index(f.column);
    if (idx == response_col)
      throw Error(ErrorCode::InvalidArgument, "response cannot be declared a factor");
    factor_of[idx] = &f;
  }

  const int n = static_cast<int>(records.size()) - 1;
  // Columns with no numeric cell at all (e.g. TRUE/FALSE, labels) become factors.
  std::vector<FactorSpec> implicit;
  implicit.reserve(width);
  for (std::size_t c = 0; c < width && n > 0; ++c) {
    if (c == response_col || factor_of.count(c)) continue;
    bool any_numeric = false;
    for (int r = 0; r < n && !any_numeric; ++r)
      any_numeric = c >= records[r + 1].size() || parse_number(records[r + 1][c]).has_value();
    if (!any_numeric) {
      implicit.push_back({header[c], {}});
      factor_of[c] = &implicit.back();
    }
  }
  for (int r = 0; r < n; ++r)
    if (records[r + 1].size() != width)
      throw Error(ErrorCode::InvalidArgument,
                  "CSV row " + std::to_string(r + 1) + " has " +
                      std::to_string(records[r + 1].size()) + " fields, expected " +
                      std::to_string(width));

  auto numeric = [&](int r, std::size_t c) {
    const auto& cell = records[r + 1][c];
    auto v = parse_number(cell);
    if (!v || !std::isfinite(*v))
      throw Error(ErrorCode::NonFiniteValue, "row " + std::to_string(r + 1) + ", column '" +
                                                 header[c] + "': '" + cell + "' is not a finite number");
    return *v;
  };

  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) y[r] = numeric(r, response_col);

  std::vector<Eigen::VectorXd> cols;
  std::vector<ColumnInfo> info;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == response_col) continue;
    auto fit_it = factor_of.find(c);
    if (fit_it == factor_of.end()) {
      Eigen::VectorXd v(n);
      for (int r = 0; r < n; ++r) v[r] = numeric(r, c);
      cols.push_back(std::move(v));
      info.push_back({header[c], header[c], std::nullopt});
      continue;
    }
    const FactorSpec& spec = *fit_it->second;
    std::vector<std::string> levels = spec.levels;
    std::set<std::string> present;
    for (int r = 0; r < n; ++r) present.insert(records[r + 1][c]);
    if (levels.empty()) {
      levels = sorted_levels({present.begin(), present.end()});
    } else {
      for (const auto& value : present)
        if (std::find(levels.begin(), levels.end(), value) == levels.end())
          throw Error(ErrorCode::InvalidArgument,
                      "factor '" + header[c] + "' has value '" + value + "' not among its levels");
    }
    if (levels.size() < 2 || present.size() < 2)
      throw Error(ErrorCode::RankDeficient,
                  "factor '" + header[c] + "' is constant; its dummy columns are collinear with the intercept");
    // Treatment contrasts: first level is the baseline.
    for (std::size_t l = 1; l < levels.size(); ++l) {
      Eigen::VectorXd v(n);
      for (int r = 0; r < n; ++r) v[r] = records[r + 1][c] == levels[l] ? 1.0 : 0.0;
      cols.push_back(std::move(v));
      info.push_back({header[c] + levels[l], header[c], levels[l]});
    }
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = cols[j];
  return Dataset(response, std::move(y), std::move(x), std::move(info), family);
}

Dataset load_csv(const std::string& path, const std::string& response, ModelFamily family,
                 const std::vector<FactorSpec>& factors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), response, family, factors);
}

Dataset add_redundant_variable(const Dataset& d, std::uint64_t seed) {
  if (d.rv_index()) throw Error(ErrorCode::AlreadyHasRV, "dataset already has a redundant variable");
  auto engine = stream(seed, purpose::kRedundant, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(d.n(), d.p() + 1);
  x.leftCols(d.p()) = d.x();
  for (int i = 0; i < d.n(); ++i) x(i, d.p()) = normal(engine);
  auto columns = d.columns();
  columns.push_back({"RV", "RV", std::nullopt});
  return Dataset(d.response(), d.y(), std::move(x), std::move(columns), d.family(),
                 d.case_weights(), d.p());
}

Dataset make_interaction_followup(const Dataset& d, ModelId mains, const FitResult& fit) {
  if (mains.size() < 2)
    throw Error(ErrorCode::TooFewMains, "interaction follow-up needs at least two main effects");
  if (fit.model != mains || fit.residuals.size() != d.n())
    throw Error(ErrorCode::InvalidArgument, "fit does not belong to the given main-effects model");
  std::vector<int> idx;
  for (int j = 0; j < d.p(); ++j)
    if (mains.contains(j)) idx.push_back(j);
  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd x(d.n(), m * (m - 1) / 2);
  std::vector<ColumnInfo> columns;
  int c = 0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      x.col(c++) = d.x().col(idx[a]).cwiseProduct(d.x().col(idx[b]));
      const auto name = d.name(idx[a]) + "." + d.name(idx[b]);
      columns.push_back({name, name, std::nullopt});
    }
  }
  return Dataset(d.response(), fit.residuals, std::move(x), std::move(columns), kGaussian);
}

Dataset generate_artificial(int n, std::uint64_t seed, const Eigen::MatrixXd& covariance) {
  constexpr int p = 10;
  if (covariance.rows() != p || covariance.cols() != p)
    throw Error(ErrorCode::InvalidArgument, "covariance must be 10x10");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite, "covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  auto engine = stream(seed, purpose::kArtificial, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = normal(engine);
    x.row(i) = (lower * z).transpose();
  }
  for (int i = 0; i < n; ++i) y[i] = 0.6 * x(i, 7) + 2.0 * normal(engine);
  std::vector<ColumnInfo> columns;
  for (int j = 0; j < p; ++j) {
    const auto name = "x" + std::to_string(j + 1);
    columns.push_back({name, name, std::nullopt});
  }
  return Dataset("y", std::move(y), std::move(x), std::move(columns), kGaussian);
}

}  // namespace modelscope
