#include "mlgom/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mlgom {

namespace {

struct Series {
  std::string method;
  std::vector<std::pair<double, double>> points;  // (x, mean y), x ascending
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const char* color_for(const std::string& method) {
  if (method == "dsog") return "#d62728";
  if (method == "sog") return "#1f77b4";
  if (method == "sum") return "#2ca02c";
  return "#7f7f7f";
}

std::string render(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                   const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, left = 70, right = 130, top = 40, bottom = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (std::isfinite(y)) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1.0;
  const bool single_x = xmax <= xmin;
  auto px = [&](double x) {
    return single_x ? left + (W - left - right) / 2 : left + (x - xmin) / (xmax - xmin) * (W - left - right);
  };
  auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
     << H - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = ymin + (ymax - ymin) * t / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << num(y)
       << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& s : series)
    for (const auto& p : s.points) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs)
    os << "<text x=\"" << px(x) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
       << num(x) << "</text>\n";
  os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 18
     << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text transform=\"translate(18," << (top + H - bottom) / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel << "</text>\n";

  int row = 0;
  for (const auto& s : series) {
    const char* color = color_for(s.method);
    std::ostringstream pts;
    for (const auto& [x, y] : s.points)
      if (std::isfinite(y)) pts << px(x) << ',' << py(y) << ' ';
    if (s.points.size() > 1)
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
         << pts.str() << "\"/>\n";
    for (const auto& [x, y] : s.points)
      if (std::isfinite(y))
        os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\"" << color
           << "\"/>\n";
    const double ly = top + 10 + 18 * row++;
    os << "<line x1=\"" << W - right + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 36
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - right + 42 << "\" y=\"" << ly + 4 << "\">" << s.method << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(const ExperimentResult& result,
                                              const std::filesystem::path& out_dir) {
  if (result.rows.empty()) throw DomainError("cannot plot an empty result");
  std::filesystem::create_directories(out_dir);

  // experiment -> method (first-seen order) -> x -> accumulated values
  struct Acc {
    double l1 = 0, l2 = 0, hit = 0;
    int n_err = 0, n_sel = 0;
  };
  std::vector<std::string> experiments;
  std::map<std::string, std::vector<std::string>> method_order;
  std::map<std::string, std::map<std::string, std::map<double, Acc>>> acc;
  std::map<std::string, std::string> xlabel;
  for (const auto& r : result.rows) {
    if (!acc.count(r.experiment)) experiments.push_back(r.experiment);
    auto& methods = method_order[r.experiment];
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
    xlabel[r.experiment] = r.point_param;
    auto& a = acc[r.experiment][r.method][r.point_value];
    if (!r.failed && std::isfinite(r.rel_l1)) {
      a.l1 += r.rel_l1;
      a.l2 += r.rel_l2;
      ++a.n_err;
    }
    a.hit += (r.k_selected == r.k_true) ? 1.0 : 0.0;
    ++a.n_sel;
  }

  std::vector<std::filesystem::path> written;
  const std::pair<const char*, const char*> metrics[] = {
      {"rel_l1", "Relative l1 error"}, {"rel_l2", "Relative l2 error"}, {"accuracy", "Accuracy rate"}};
  for (const auto& exp : experiments) {
    for (const auto& [key, label] : metrics) {
      std::vector<Series> series;
      for (const auto& m : method_order[exp]) {
        Series s{m, {}};
        for (const auto& [x, a] : acc[exp][m]) {
          double y = NAN;
          if (std::string(key) == "accuracy") y = a.hit / a.n_sel;
          else if (a.n_err > 0) y = (std::string(key) == "rel_l1" ? a.l1 : a.l2) / a.n_err;
          s.points.emplace_back(x, y);
        }
        series.push_back(std::move(s));
      }
      const auto path = out_dir / (exp + "_" + key + ".svg");
      std::ofstream out(path, std::ios::binary);
      if (!out) throw IoError("cannot write " + path.string());
      out << render(exp + ": " + label, xlabel[exp], label, series);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace mlgom
