#pragma once

#include "mlgom/estimators.hpp"
#include "mlgom/metrics.hpp"
#include "mlgom/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mlgom {

// How the pure-subject count per class follows the other sizes.
enum class PureRule { Fixed, FifthOfN, NOverK };
// How N follows K (Experiment 5 scales N = 100 K).
enum class SubjectRule { Fixed, HundredPerClass };

/// Declarative Monte Carlo experiment. One parameter is swept over `grid`;
/// everything else is fixed or derived by the rules.
struct ExperimentConfig {
  std::string id = "custom";
  std::string sweep = "N";  // one of N, L, rho, N0, K
  std::vector<double> grid;

  Index N = 500;
  Index J = 0;  // 0 means N / 5
  Index K = 3;
  Index L = 5;
  int M = 5;
  Index N0 = 100;
  double rho = 5.0;
  PureRule pure_rule = PureRule::Fixed;
  SubjectRule subject_rule = SubjectRule::Fixed;

  int reps = 50;
  Index K_c = 8;
  std::uint64_t seed_base = 20240601;
  std::vector<Method> methods = all_methods();
  std::filesystem::path out_dir;
  bool record_timing = true;
  int threads = 0;  // 0: MLGOM_THREADS or hardware concurrency
};

/// Throws ConfigError describing the first problem found.
void validate_config(const ExperimentConfig& cfg);

/// Sizes of the instance at one grid point.
InstanceSpec resolve_point(const ExperimentConfig& cfg, std::size_t point);

/// Simulated data for (point, rep). The stream is seeded with seed_base + rep.
SimulatedInstance<double> generate_experiment_instance(const ExperimentConfig& cfg,
                                                       std::size_t point, int rep);

struct ExperimentResult {
  std::vector<MetricRecord> rows;  // (point, rep, method) order
};

/// Runs every (point, rep, method) cell. When cfg.out_dir is set the CSV is
/// written to out_dir/results.csv as cells complete, in deterministic order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Built-in settings of the five published experiments.
const std::vector<std::string>& preset_names();
ExperimentConfig preset(const std::string& name);

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);

// CSV with the fixed column order below.
inline constexpr const char* kCsvHeader =
    "experiment,point_param,point_value,rep,method,rel_l1,rel_l2,k_true,k_selected,"
    "q_at_selected,wall_ms";
std::string csv_row(const MetricRecord& r);
std::vector<MetricRecord> read_results_csv(const std::filesystem::path& path);

/// One SVG per metric (rel_l1, rel_l2, accuracy) per experiment id; returns the paths.
std::vector<std::filesystem::path> emit_plots(const ExperimentResult& result,
                                              const std::filesystem::path& out_dir);

int resolve_thread_count(int requested);

}  // namespace mlgom
