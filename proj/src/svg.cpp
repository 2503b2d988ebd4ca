#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "modelscope/error.hpp"
#include "modelscope/service.hpp"

namespace modelscope::service {

using nlohmann::json;

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;

const char* const kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2df8a"};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

// Colour keyed by a stable hash of the model formula.
const char* colour_of(const std::string& key) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : key) h = (h ^ ch) * 1099511628211ull;
  return kPalette[h % std::size(kPalette)];
}

class Canvas {
 public:
  Canvas(double x0, double x1, double y0, double y1, std::string title, std::string xlab, std::string ylab)
      : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
         << escape(title) << "</text>\n";
    axes(xlab, ylab);
  }

  double x(double v) const { return kLeft + (v - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double y(double v) const { return kHeight - kBottom - (v - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

  void circle(double cx, double cy, double r, const std::string& fill, const std::string& tip,
              double opacity = 0.7) {
    out_ << "<circle cx=\"" << fmt(x(cx)) << "\" cy=\"" << fmt(y(cy)) << "\" r=\"" << fmt(r)
         << "\" fill=\"" << fill << "\" fill-opacity=\"" << opacity << "\" stroke=\"" << fill
         << "\"><title>" << escape(tip) << "</title></circle>\n";
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& colour,
                bool dashed, const std::string& tip) {
    out_ << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
         << (dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) out_ << fmt(x(xs[i])) << ',' << fmt(y(ys[i])) << ' ';
    out_ << "\"><title>" << escape(tip) << "</title></polyline>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double ly = kTop + 8;
    for (const auto& [label, colour] : entries) {
      out_ << "<rect x=\"" << kWidth - kRight - 150 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
           << colour << "\"/><text x=\"" << kWidth - kRight - 136 << "\" y=\"" << ly + 1 << "\">"
           << escape(label) << "</text>\n";
      ly += 15;
    }
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  void axes(const std::string& xlab, const std::string& ylab) {
    const double bx = kHeight - kBottom, lx = kLeft;
    out_ << "<line x1=\"" << lx << "\" y1=\"" << bx << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << bx
         << "\" stroke=\"black\"/>\n<line x1=\"" << lx << "\" y1=\"" << kTop << "\" x2=\"" << lx
         << "\" y2=\"" << bx << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
      const double vx = x0_ + (x1_ - x0_) * i / 5, vy = y0_ + (y1_ - y0_) * i / 5;
      out_ << "<text x=\"" << fmt(x(vx)) << "\" y=\"" << bx + 16 << "\" text-anchor=\"middle\">" << fmt(vx)
           << "</text>\n<text x=\"" << lx - 6 << "\" y=\"" << fmt(y(vy) + 4) << "\" text-anchor=\"end\">"
           << fmt(vy) << "</text>\n";
    }
    out_ << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
         << "\" text-anchor=\"middle\">" << escape(xlab) << "</text>\n<text transform=\"translate(16,"
         << (kTop + kHeight - kBottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylab)
         << "</text>\n";
  }

  double x0_, x1_, y0_, y1_;
  std::ostringstream out_;
};

void require_kind(const json& doc, const char* kind) {
  if (!doc.is_object() || doc.value("kind", "") != kind)
    throw Error(ErrorCode::InvalidArgument, std::string("plot needs a ") + kind + " result document");
}

std::pair<double, double> range_of(const json& rows, const char* key) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& r : rows) {
    lo = std::min(lo, r.at(key).get<double>());
    hi = std::max(hi, r.at(key).get<double>());
  }
  if (!std::isfinite(lo)) return {0, 1};
  const double pad = 0.05 * std::max(hi - lo, 1.0);
  return {lo - pad, hi + pad};
}

std::string lvk_plot(const json& doc, bool bootstrap) {
  require_kind(doc, "vis");
  const json& rows = bootstrap ? doc.at("stability") : doc.at("original_table");
  const auto [qlo, qhi] = range_of(rows, "q_hat");
  int dmax = 1;
  for (const auto& r : rows) dmax = std::max(dmax, r.at("dimension").get<int>());
  Canvas c(0.5, dmax + 0.5, qlo, qhi, bootstrap ? "Model stability" : "Loss against size",
           "Number of parameters", "-2*Log-likelihood");
  const bool any_highlight = !doc.at("highlight").is_null();
  for (const auto& r : rows) {
    const bool hl = r.at("highlighted").get<bool>();
    const std::string colour = !any_highlight ? "#1f78b4" : (hl ? "#e31a1c" : "#1f78b4");
    const double prob = r.at("probability").get<double>();
    std::string tip = r.at("model").get<std::string>() + "  loglik " + fmt(-0.5 * r.at("q_hat").get<double>());
    if (bootstrap) tip += "  prob " + fmt(prob);
    const double radius = bootstrap ? 2.0 + 14.0 * std::sqrt(prob) : 3.0;
    c.circle(r.at("dimension").get<int>(), r.at("q_hat").get<double>(), radius, colour, tip,
             bootstrap ? 0.5 : 0.8);
  }
  if (any_highlight)
    c.legend({{"with " + doc.at("highlight").get<std::string>(), "#e31a1c"},
              {"without " + doc.at("highlight").get<std::string>(), "#1f78b4"}});
  return c.finish();
}

std::string vip_plot(const json& doc) {
  require_kind(doc, "vis");
  const auto grid = doc.at("lambda_grid").get<std::vector<double>>();
  Canvas c(grid.empty() ? 0 : grid.front(), grid.empty() ? 1 : grid.back(), 0.0, 1.0,
           "Variable inclusion", "Penalty", "Bootstrapped probability");
  std::vector<std::pair<std::string, std::string>> legend;
  const auto rv = doc.at("redundant_variable");
  std::size_t i = 0;
  for (const auto& row : doc.at("inclusion")) {
    const auto name = row.at("variable").get<std::string>();
    const bool is_rv = !rv.is_null() && rv.get<std::string>() == name;
    const std::string colour = is_rv ? "#000000" : kPalette[i++ % std::size(kPalette)];
    const auto values = row.at("values").get<std::vector<double>>();
    const double mean = values.empty() ? 0.0 : std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    c.polyline(grid, values, colour, is_rv, name + "  mean inclusion " + fmt(mean));
    legend.emplace_back(name, colour);
  }
  c.legend(legend);
  return c.finish();
}

std::string af_plot(const json& doc) {
  require_kind(doc, "af");
  const bool best_only = doc.at("best_only").get<bool>();
  const char* key = best_only ? "best_only_true" : "best_only_false";
  const json& pts = doc.at("curves").at(key);
  const auto grid = doc.at("c_grid").get<std::vector<double>>();
  Canvas c(0.0, grid.empty() ? 1.0 : grid.back(), 0.0, 1.0,
           std::string("Adaptive fence (best.only = ") + (best_only ? "TRUE" : "FALSE") + ")", "c",
           "p*");
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& pt : pts) {
    const std::string model = pt.at("model").is_null() ? "none" : pt.at("model").get<std::string>();
    const char* colour = colour_of(model);
    if (std::none_of(legend.begin(), legend.end(), [&](const auto& e) { return e.first == model; }))
      legend.emplace_back(model, colour);
    c.circle(pt.at("c").get<double>(), pt.at("p_star").get<double>(), 4.0, colour,
             model + "  c " + fmt(pt.at("c").get<double>()) + "  p* " + fmt(pt.at("p_star").get<double>()),
             0.9);
  }
  c.legend(legend);
  return c.finish();
}

}  // namespace

std::string render_svg(const json& doc, const std::string& kind) {
  if (kind == "lvk") return lvk_plot(doc, false);
  if (kind == "boot") return lvk_plot(doc, true);
  if (kind == "vip") return vip_plot(doc);
  if (kind == "af") return af_plot(doc);
  throw Error(ErrorCode::InvalidArgument, "unknown plot kind '" + kind + "'");
}

}  // namespace modelscope::service
