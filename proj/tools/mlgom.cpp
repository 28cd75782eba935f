// mlgom: simulate multi-layer GoM data, estimate memberships, select K,
// and run the Monte Carlo experiment presets.

#include "mlgom/bundle.hpp"
#include "mlgom/estimators.hpp"
#include "mlgom/experiment.hpp"
#include "mlgom/metrics.hpp"
#include "mlgom/modularity.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace mlgom;

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_method(item));
  if (out.empty()) throw ConfigError("--methods is empty");
  return out;
}

ExperimentConfig base_config(const std::string& config_path, const std::string& preset_name) {
  if (!config_path.empty() && !preset_name.empty())
    throw ConfigError("use either --config or --preset, not both");
  if (!config_path.empty()) return load_config(config_path);
  if (!preset_name.empty()) return preset(preset_name);
  throw ConfigError("one of --config or --preset is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-layer grade-of-membership simulation and spectral estimation"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out, bundle_dir, method_name = "dsog", methods_csv;
  int rep = 0, reps = 0, threads = 0;
  std::size_t point = 0;
  std::uint64_t seed = 0;
  Index k = 0, kc = 8;
  bool clip = false, no_timing = false, plots = false;

  const std::string preset_help = "built-in preset (exp1-sparse, exp1-dense, ..., exp5-dense)";

  auto* sim = app.add_subcommand("simulate", "write a simulated dataset bundle");
  sim->add_option("--config", config_path, "experiment config JSON");
  sim->add_option("--preset", preset_name, preset_help);
  sim->add_option("--point", point, "grid point index (0-based)");
  sim->add_option("--rep", rep, "replication index");
  auto* sim_seed = sim->add_option("--seed", seed, "override the config seed base");
  sim->add_option("--out", out, "bundle directory")->required();

  auto* est = app.add_subcommand("estimate", "estimate memberships and item parameters");
  est->add_option("--bundle", bundle_dir, "dataset bundle directory")->required();
  est->add_option("--method", method_name, "dsog, sog or sum");
  auto* est_k = est->add_option("--k", k, "number of latent classes (defaults to the true K)");
  est->add_flag("--clip-theta", clip, "clip item estimates to [0, M]");
  est->add_option("--out", out, "result JSON path");

  auto* sel = app.add_subcommand("select-k", "choose K by averaged fuzzy modularity");
  sel->add_option("--bundle", bundle_dir, "dataset bundle directory")->required();
  sel->add_option("--method", method_name, "dsog, sog or sum");
  sel->add_option("--kc", kc, "largest candidate K");
  sel->add_option("--out", out, "report JSON path");

  auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment and write results.csv");
  exp->add_option("--config", config_path, "experiment config JSON");
  exp->add_option("--preset", preset_name, preset_help);
  exp->add_option("--reps", reps, "replications per grid point");
  auto* exp_seed = exp->add_option("--seed", seed, "seed base");
  exp->add_option("--methods", methods_csv, "comma-separated subset of dsog,sog,sum");
  auto* exp_kc = exp->add_option("--kc", kc, "largest candidate K for selection");
  exp->add_option("--out", out, "output directory")->required();
  exp->add_option("--threads", threads, "worker threads (default MLGOM_THREADS or all cores)");
  exp->add_flag("--no-timing", no_timing, "write wall_ms as 0 so output is byte-reproducible");
  exp->add_flag("--plots", plots, "also write SVG charts");

  auto* plot = app.add_subcommand("plot", "render SVG charts from results.csv");
  std::string csv_in;
  plot->add_option("--in", csv_in, "results.csv")->required();
  plot->add_option("--out", out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      auto cfg = base_config(config_path, preset_name);
      if (*sim_seed) cfg.seed_base = seed;
      const auto inst = generate_experiment_instance(cfg, point, rep);
      DatasetBundle b;
      b.responses = inst.responses;
      b.truth = inst.params;
      b.meta = {{"experiment", cfg.id},
                {"point_param", cfg.sweep},
                {"point_value", cfg.grid.at(point)},
                {"rep", rep},
                {"seed", cfg.seed_base + static_cast<std::uint64_t>(rep)}};
      write_bundle(out, b);
      std::cout << "wrote " << out << " (N=" << b.responses.rows() << ", J=" << b.responses.cols()
                << ", L=" << b.responses.num_layers() << ", K=" << inst.params.K << ")\n";
    } else if (est->parsed()) {
      const auto b = read_bundle(bundle_dir);
      const Method m = parse_method(method_name);
      if (!*est_k) {
        if (!b.truth) throw ConfigError("--k is required when the bundle has no ground truth");
        k = b.truth->K;
      }
      const auto r = estimate<double>(b.responses, k, m, EstimateOptions{clip});
      auto j = to_json(r, m);
      if (b.truth && b.truth->K == k) {
        const double l1 = relative_l1_error(r.Pi_hat, b.truth->Pi);
        const double l2 = relative_l2_error(r.Theta_hat, b.truth->theta());
        j["metrics"] = {{"rel_l1", l1},
                        {"rel_l2", l2},
                        {"max_row_l1", max_row_l1_error(r.Pi_hat, b.truth->Pi)}};
        std::cout << "rel_l1=" << l1 << " rel_l2=" << l2 << '\n';
      }
      if (!out.empty()) write_json(out, j);
      else std::cout << j.dump(2) << '\n';
    } else if (sel->parsed()) {
      const auto b = read_bundle(bundle_dir);
      const Method m = parse_method(method_name);
      const auto r = select_num_classes(b.responses, kc, m);
      const auto j = to_json(r, m);
      std::cout << "selected_k=" << r.selected_k << '\n';
      if (!out.empty()) write_json(out, j);
    } else if (exp->parsed()) {
      auto cfg = base_config(config_path, preset_name);
      if (reps > 0) cfg.reps = reps;
      if (*exp_seed) cfg.seed_base = seed;
      if (!methods_csv.empty()) cfg.methods = parse_methods(methods_csv);
      if (*exp_kc) cfg.K_c = kc;
      if (threads > 0) cfg.threads = threads;
      if (no_timing) cfg.record_timing = false;
      cfg.out_dir = out;
      const auto res = run_experiment(cfg);
      std::cout << "wrote " << res.rows.size() << " rows to " << (cfg.out_dir / "results.csv").string()
                << '\n';
      if (plots)
        for (const auto& p : emit_plots(res, cfg.out_dir)) std::cout << "wrote " << p.string() << '\n';
    } else if (plot->parsed()) {
      ExperimentResult res{read_results_csv(csv_in)};
      for (const auto& p : emit_plots(res, out)) std::cout << "wrote " << p.string() << '\n';
    }
  } catch (const mlgom::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
