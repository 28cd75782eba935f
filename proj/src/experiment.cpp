#include "mlgom/experiment.hpp"

#include "mlgom/modularity.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace mlgom {

namespace {

Index as_count(double v, const std::string& name) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 0)
    throw ConfigError("swept value " + std::to_string(v) + " for " + name +
                      " is not a non-negative integer");
  return static_cast<Index>(r);
}

std::vector<double> grid_of(int first, int last, int step, double denom = 1.0) {
  std::vector<double> g;
  for (int i = first; i <= last; i += step) g.push_back(i / denom);
  return g;
}

std::string fmt_g(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MLGOM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

InstanceSpec resolve_point(const ExperimentConfig& cfg, std::size_t point) {
  if (point >= cfg.grid.size()) throw ConfigError("grid point index out of range");
  const double v = cfg.grid[point];
  InstanceSpec s;
  s.N = cfg.N;
  s.K = cfg.K;
  s.L = cfg.L;
  s.M = cfg.M;
  s.N0 = cfg.N0;
  s.rho = cfg.rho;
  if (cfg.sweep == "N") s.N = as_count(v, "N");
  else if (cfg.sweep == "L") s.L = as_count(v, "L");
  else if (cfg.sweep == "K") s.K = as_count(v, "K");
  else if (cfg.sweep == "N0") s.N0 = as_count(v, "N0");
  else if (cfg.sweep == "rho") s.rho = v;
  else throw ConfigError("unknown swept parameter '" + cfg.sweep + "'");

  if (cfg.subject_rule == SubjectRule::HundredPerClass) s.N = 100 * s.K;
  if (cfg.J > 0) {
    s.J = cfg.J;
  } else {
    if (s.N % 5 != 0)
      throw ConfigError("J = N/5 requires N divisible by 5 (N = " + std::to_string(s.N) + ")");
    s.J = s.N / 5;
  }
  switch (cfg.pure_rule) {
    case PureRule::Fixed: break;
    case PureRule::FifthOfN: s.N0 = s.N / 5; break;
    case PureRule::NOverK: s.N0 = s.K > 0 ? s.N / s.K : 0; break;
  }
  return s;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("grid is empty");
  if (cfg.reps < 1) throw ConfigError("reps must be at least 1");
  if (cfg.K_c < 1) throw ConfigError("kc must be at least 1");
  if (cfg.methods.empty()) throw ConfigError("no methods selected");
  for (std::size_t p = 0; p < cfg.grid.size(); ++p) {
    const auto s = resolve_point(cfg, p);
    if (s.N < 1 || s.J < 1 || s.K < 1 || s.L < 1 || s.M < 1)
      throw ConfigError("grid point " + std::to_string(p) + ": sizes must be positive");
    if (s.N0 < 1 || s.N0 * s.K > s.N)
      throw ConfigError("grid point " + std::to_string(p) + ": need 1 <= N0 and N0*K <= N");
    if (s.K > std::min(s.N, s.J))
      throw ConfigError("grid point " + std::to_string(p) + ": K exceeds min(N, J)");
    if (cfg.K_c > std::min(s.N, s.J))
      throw ConfigError("grid point " + std::to_string(p) + ": kc exceeds min(N, J)");
    if (!(s.rho > 0.0) || s.rho > s.M)
      throw ConfigError("grid point " + std::to_string(p) + ": rho outside (0, M]");
  }
}

SimulatedInstance<double> generate_experiment_instance(const ExperimentConfig& cfg,
                                                       std::size_t point, int rep) {
  return simulate_instance<double>(resolve_point(cfg, point),
                                   cfg.seed_base + static_cast<std::uint64_t>(rep));
}

namespace {

std::vector<MetricRecord> run_cell(const ExperimentConfig& cfg, std::size_t point, int rep) {
  const auto inst = generate_experiment_instance(cfg, point, rep);
  const auto truth = inst.params.theta();
  std::vector<MetricRecord> out;
  for (Method m : cfg.methods) {
    MetricRecord r;
    r.experiment = cfg.id;
    r.point_param = cfg.sweep;
    r.point_value = cfg.grid[point];
    r.rep = rep;
    r.method = std::string(to_string(m));
    r.k_true = inst.params.K;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto est = estimate<double>(inst.responses, inst.params.K, m);
      r.rel_l1 = relative_l1_error(est.Pi_hat, inst.params.Pi);
      r.rel_l2 = relative_l2_error(est.Theta_hat, truth);
    } catch (const Error&) {
      r.failed = true;
      r.rel_l1 = r.rel_l2 = std::nan("");
    }
    try {
      const auto sel = select_num_classes(inst.responses, cfg.K_c, m);
      r.k_selected = sel.selected_k;
      r.q_at_selected = sel.q_at(sel.selected_k);
    } catch (const Error&) {
      r.k_selected = 0;
      r.q_at_selected = std::nan("");
    }
    const auto t1 = std::chrono::steady_clock::now();
    r.wall_ms = cfg.record_timing
                    ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                    : 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::string csv_row(const MetricRecord& r) {
  std::string s;
  s += r.experiment + ',' + r.point_param + ',' + fmt_g(r.point_value, 12) + ',' +
       std::to_string(r.rep) + ',' + r.method + ',' + fmt_g(r.rel_l1, 17) + ',' +
       fmt_g(r.rel_l2, 17) + ',' + std::to_string(r.k_true) + ',' +
       std::to_string(r.k_selected) + ',' + fmt_g(r.q_at_selected, 17) + ',' +
       fmt_g(r.wall_ms, 6);
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  std::ofstream csv;
  if (!cfg.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    csv.open(cfg.out_dir / "results.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot write " + (cfg.out_dir / "results.csv").string());
    csv << kCsvHeader << '\n';
    csv.flush();
  }

  const std::size_t cells = cfg.grid.size() * static_cast<std::size_t>(cfg.reps);
  std::vector<std::optional<std::vector<MetricRecord>>> slots(cells);
  std::size_t flushed = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= cells) return;
      std::vector<MetricRecord> rows;
      try {
        rows = run_cell(cfg, c / static_cast<std::size_t>(cfg.reps),
                        static_cast<int>(c % static_cast<std::size_t>(cfg.reps)));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(cells);
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      slots[c] = std::move(rows);
      // Flush the completed prefix so the file grows in (point, rep, method) order.
      while (flushed < cells && slots[flushed]) {
        if (csv.is_open()) {
          for (const auto& r : *slots[flushed]) csv << csv_row(r) << '\n';
          csv.flush();
        }
        ++flushed;
      }
    }
  };

  const int nthreads =
      std::max(1, std::min(resolve_thread_count(cfg.threads), static_cast<int>(cells)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult res;
  for (auto& s : slots)
    for (auto& r : *s) res.rows.push_back(std::move(r));
  return res;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{
      "exp1-sparse", "exp1-dense", "exp2-sparse", "exp2-dense", "exp3-sparse",
      "exp3-dense",  "exp4-sparse", "exp4-dense", "exp5-sparse", "exp5-dense"};
  return names;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.id = name;
  c.M = 5;
  c.J = 0;
  c.reps = 50;
  const bool sparse = name.ends_with("-sparse");
  if (!sparse && !name.ends_with("-dense")) throw ConfigError("unknown preset '" + name + "'");
  const std::string exp = name.substr(0, name.find('-'));
  if (exp == "exp1") {
    c.sweep = "N";
    c.grid = grid_of(100, 1000, 100);
    c.L = 5;
    c.K = 3;
    c.pure_rule = PureRule::FifthOfN;
    c.rho = sparse ? 0.2 : 5.0;
  } else if (exp == "exp2") {
    c.sweep = "L";
    c.grid = grid_of(1, 10, 1);
    c.N = 500;
    c.N0 = 100;
    c.K = 3;
    c.rho = sparse ? 0.2 : 5.0;
  } else if (exp == "exp3") {
    c.sweep = "rho";
    c.grid = sparse ? grid_of(5, 50, 5, 100.0) : grid_of(5, 50, 5, 10.0);
    c.N = 500;
    c.L = 5;
    c.N0 = 100;
    c.K = 3;
    c.rho = c.grid.back();
  } else if (exp == "exp4") {
    c.sweep = "N0";
    c.grid = grid_of(20, 200, 20);
    c.N = 600;
    c.L = 10;
    c.K = 3;
    c.rho = sparse ? 0.2 : 5.0;
  } else if (exp == "exp5") {
    c.sweep = "K";
    c.grid = grid_of(1, 8, 1);
    c.subject_rule = SubjectRule::HundredPerClass;
    c.pure_rule = PureRule::NOverK;
    c.L = 5;
    c.rho = sparse ? 0.5 : 5.0;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return c;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: top level must be an object");

  ExperimentConfig c = j.contains("preset") ? preset(field<std::string>(j, "preset", "")) : ExperimentConfig{};
  c.id = field(j, "id", c.id);
  c.sweep = field(j, "sweep", c.sweep);
  c.grid = field(j, "grid", c.grid);
  c.N = field<Index>(j, "N", c.N);
  c.J = field<Index>(j, "J", c.J);
  c.K = field<Index>(j, "K", c.K);
  c.L = field<Index>(j, "L", c.L);
  c.M = field(j, "M", c.M);
  c.N0 = field<Index>(j, "N0", c.N0);
  c.rho = field(j, "rho", c.rho);
  c.reps = field(j, "reps", c.reps);
  c.K_c = field<Index>(j, "kc", c.K_c);
  c.seed_base = field<std::uint64_t>(j, "seed", c.seed_base);
  c.record_timing = field(j, "record_timing", c.record_timing);
  c.threads = field(j, "threads", c.threads);
  if (j.contains("out")) c.out_dir = field<std::string>(j, "out", "");
  if (j.contains("pure_rule")) {
    const auto r = field<std::string>(j, "pure_rule", "");
    if (r == "fixed") c.pure_rule = PureRule::Fixed;
    else if (r == "N/5") c.pure_rule = PureRule::FifthOfN;
    else if (r == "N/K") c.pure_rule = PureRule::NOverK;
    else throw ConfigError("config field 'pure_rule': expected fixed, N/5 or N/K");
  }
  if (j.contains("subject_rule")) {
    const auto r = field<std::string>(j, "subject_rule", "");
    if (r == "fixed") c.subject_rule = SubjectRule::Fixed;
    else if (r == "100K") c.subject_rule = SubjectRule::HundredPerClass;
    else throw ConfigError("config field 'subject_rule': expected fixed or 100K");
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : field<std::vector<std::string>>(j, "methods", {}))
      c.methods.push_back(parse_method(m));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_json_text(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<MetricRecord> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw ParseError(path.string() + ":1: unexpected header");
  static const char* names[] = {"experiment", "point_param", "point_value", "rep",
                                "method",     "rel_l1",      "rel_l2",      "k_true",
                                "k_selected", "q_at_selected", "wall_ms"};
  std::vector<MetricRecord> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 11)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 11 fields, got " +
                       std::to_string(f.size()));
    auto num = [&](std::size_t i) {
      try {
        std::size_t used = 0;
        const double v = std::stod(f[i], &used);
        if (used != f[i].size()) throw std::invalid_argument("trailing characters");
        return v;
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": field '" + names[i] +
                         "' is not numeric: '" + f[i] + "'");
      }
    };
    MetricRecord r;
    r.experiment = f[0];
    r.point_param = f[1];
    r.point_value = num(2);
    r.rep = static_cast<int>(num(3));
    r.method = f[4];
    r.rel_l1 = num(5);
    r.rel_l2 = num(6);
    r.k_true = static_cast<Index>(num(7));
    r.k_selected = static_cast<Index>(num(8));
    r.q_at_selected = num(9);
    r.wall_ms = num(10);
    r.failed = std::isnan(r.rel_l1);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace mlgom
