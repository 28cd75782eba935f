#include "mlgom/bundle.hpp"

#include "mlgom/model.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mlgom {

namespace fs = std::filesystem;
using nlohmann::json;

IntMatrix read_int_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<int>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<int> row;
    std::size_t start = 0;
    for (std::size_t col = 1;; ++col) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      int v = 0;
      const char* b = line.data() + start;
      const char* e = line.data() + end;
      while (b < e && *b == ' ') ++b;
      const auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e)
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": field " +
                         std::to_string(col) + " is not an integer: '" +
                         line.substr(start, end - start) + "'");
      row.push_back(v);
      if (end == line.size()) break;
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, got " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");
  IntMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_int_csv(const fs::path& path, const IntMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

json matrix_to_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix<double> matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError("field '" + field + "': expected an array of rows");
  const Index n = static_cast<Index>(j.size());
  const Index k = n > 0 && j[0].is_array() ? static_cast<Index>(j[0].size()) : 0;
  Matrix<double> m(n, k);
  for (Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != k)
      throw ParseError("field '" + field + "': row " + std::to_string(i + 1) +
                       " has the wrong length");
    for (Index c = 0; c < k; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number())
        throw ParseError("field '" + field + "': entry (" + std::to_string(i + 1) + ", " +
                         std::to_string(c + 1) + ") is not a number");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_bundle(const fs::path& dir, const DatasetBundle& bundle) {
  bundle.responses.check();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  json m;
  m["format"] = "mlgom-bundle";
  m["version"] = 1;
  m["N"] = bundle.responses.rows();
  m["J"] = bundle.responses.cols();
  m["L"] = bundle.responses.num_layers();
  m["M"] = bundle.responses.M;
  m["meta"] = bundle.meta;
  json files = json::array();
  for (Index l = 0; l < bundle.responses.num_layers(); ++l) {
    const std::string name = "layer_" + std::to_string(l + 1) + ".csv";
    write_int_csv(dir / name, bundle.responses.layers[static_cast<std::size_t>(l)]);
    files.push_back(name);
  }
  m["layers"] = files;
  if (bundle.truth) {
    const auto& t = *bundle.truth;
    json truth;
    truth["K"] = t.K;
    truth["rho"] = t.rho;
    truth["Pi"] = matrix_to_json(t.Pi);
    json B = json::array();
    for (const auto& b : t.B) B.push_back(matrix_to_json(b));
    truth["B"] = B;
    truth["pure_index"] = t.pure_index;
    m["truth"] = truth;
  }
  write_json(dir / "manifest.json", m);
}

DatasetBundle read_bundle(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const json m = read_json(manifest_path);
  auto need = [&](const char* key) -> const json& {
    if (!m.contains(key)) throw ParseError(manifest_path.string() + ": missing field '" + key + "'");
    return m.at(key);
  };
  auto as_index = [&](const char* key) {
    const auto& v = need(key);
    if (!v.is_number_integer())
      throw ParseError(manifest_path.string() + ": field '" + key + "' must be an integer");
    return v.get<Index>();
  };
  DatasetBundle b;
  const Index N = as_index("N");
  const Index J = as_index("J");
  const Index L = as_index("L");
  b.responses.M = static_cast<int>(as_index("M"));
  if (m.contains("meta")) b.meta = m.at("meta");
  const auto& files = need("layers");
  if (!files.is_array() || static_cast<Index>(files.size()) != L)
    throw ParseError(manifest_path.string() + ": field 'layers' must list L files");
  for (const auto& f : files) {
    auto R = read_int_csv(dir / f.get<std::string>());
    if (R.rows() != N || R.cols() != J)
      throw ParseError((dir / f.get<std::string>()).string() + ": expected " + std::to_string(N) +
                       "x" + std::to_string(J) + " responses, got " + std::to_string(R.rows()) +
                       "x" + std::to_string(R.cols()));
    b.responses.layers.push_back(std::move(R));
  }
  try {
    b.responses.check();
  } catch (const ParameterError& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }

  if (m.contains("truth")) {
    const auto& t = m.at("truth");
    ModelParams<double> p;
    p.N = N;
    p.J = J;
    p.L = L;
    p.M = b.responses.M;
    try {
      p.K = t.at("K").get<Index>();
      p.rho = t.at("rho").get<double>();
      p.Pi = matrix_from_json(t.at("Pi"), "truth.Pi");
      for (std::size_t l = 0; l < t.at("B").size(); ++l)
        p.B.push_back(matrix_from_json(t.at("B")[l], "truth.B[" + std::to_string(l + 1) + "]"));
      if (t.contains("pure_index")) p.pure_index = t.at("pure_index").get<std::vector<Index>>();
    } catch (const json::exception& e) {
      throw ParseError(manifest_path.string() + ": field 'truth': " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(manifest_path.string() + ": " + e.what());
    }
    const auto rep = validate_model(p);
    if (!rep.ok())
      throw ParseError(manifest_path.string() + ": truth is not a valid model: " +
                       rep.violations.front());
    b.truth = std::move(p);
  }
  return b;
}

json to_json(const EstimationResult<double>& r, Method method) {
  json j;
  j["method"] = std::string(to_string(method));
  j["K"] = r.Pi_hat.cols();
  j["Pi_hat"] = matrix_to_json(r.Pi_hat);
  json th = json::array();
  for (const auto& t : r.Theta_hat) th.push_back(matrix_to_json(t));
  j["Theta_hat"] = th;
  j["vertices"] = r.vertices;
  j["spectrum"] = std::vector<double>(r.spectrum.data(), r.spectrum.data() + r.spectrum.size());
  j["diagnostics"] = {{"vertex_condition", r.diagnostics.vertex_condition},
                      {"clipped_rows", r.diagnostics.clipped_rows},
                      {"zero_rows", r.diagnostics.zero_rows},
                      {"rank_deficient", r.diagnostics.rank_deficient}};
  return j;
}

json to_json(const ModularityReport& r, Method method) {
  json j;
  j["method"] = std::string(to_string(method));
  j["selected_k"] = r.selected_k;
  json per_k = json::array();
  for (std::size_t i = 0; i < r.q.size(); ++i) {
    json e;
    e["k"] = i + 1;
    if (r.failed[i]) e["q"] = nullptr;
    else e["q"] = r.q[i];
    e["failed"] = static_cast<bool>(r.failed[i]);
    per_k.push_back(e);
  }
  j["per_k"] = per_k;
  j["per_layer_eta"] = r.eta;
  return j;
}

}  // namespace mlgom
