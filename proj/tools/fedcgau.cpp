// Command-line experiment runner.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedcgau/data/io.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/experiment/config.hpp"
#include "fedcgau/experiment/runner.hpp"
#include "fedcgau/nn/gradcheck.hpp"
#include "fedcgau/simd/kernels.hpp"
#include "fedcgau/text.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace fedcgau;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
  cmd->add_option("--config", c.config, "experiment configuration (JSON)");
  auto* out = cmd->add_option("--out", c.out, "output directory");
  if (needs_out) out->required();
  cmd->add_option("--seed", c.seed, "base seed, overrides the config");
  cmd->add_option("--threads", c.threads, "worker threads, overrides the config")->check(CLI::PositiveNumber);
}

experiment::ExperimentConfig resolve(const Common& c) {
  experiment::ExperimentConfig cfg = c.config.empty() ? experiment::ExperimentConfig{} : experiment::load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.federated.seed = *c.seed;
  }
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.output_dir = c.out;
  experiment::validate(cfg);
  return cfg;
}

fs::path out_dir(const experiment::ExperimentConfig& cfg) {
  if (cfg.output_dir.empty()) throw ConfigError("no output directory: pass --out or set output_dir");
  return cfg.output_dir;
}

bool has_ext(const std::string& path, const char* ext) { return fs::path(path).extension() == ext; }

int cmd_convert(const std::string& input, const std::string& output) {
  data::EmbeddingDataset ds;
  if (has_ext(input, ".csv")) {
    ds = data::load_csv(input);
  } else {
    ds = data::load_emb1(input);
  }
  if (has_ext(output, ".csv")) {
    data::save_csv(ds, output);
  } else {
    data::save_emb1(ds, output);
  }
  std::cout << "wrote " << ds.size() << " rows x " << ds.dim() << " features to " << output << '\n';
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, std::size_t count, const std::string& out) {
  const auto suite = nn::run_gradcheck_suite(seed, count);
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["cases"] = count;
  j["failures"] = suite.failures;
  j["max_rel_error"] = suite.max_rel_error;
  nlohmann::ordered_json failed = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < suite.results.size(); ++i) {
    const auto& r = suite.results[i];
    if (r.passed) continue;
    std::cout << "FAIL case " << i << " (" << suite.cases[i].description << ")\n";
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const auto& b : r.blocks) {
      std::cout << "  " << b.name << " max_rel_error=" << format_double(b.max_rel_error) << '\n';
      blocks.push_back({{"name", b.name}, {"max_rel_error", b.max_rel_error}});
    }
    failed.push_back({{"case", i}, {"description", suite.cases[i].description}, {"blocks", blocks}});
  }
  j["failed_cases"] = failed;
  std::cout << "gradcheck: " << count << " models, max relative error " << format_double(suite.max_rel_error) << ", "
            << suite.failures << " failing\n";
  if (!out.empty()) {
    experiment::prepare_output_dir(out);
    std::ofstream f(fs::path(out) / "gradcheck.json", std::ios::binary | std::ios::trunc);
    f << j.dump(2) << '\n';
  }
  return suite.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated training with client-conditioned gated units"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print the SIMD backend in use");

  Common sweep_opts, hetero_opts, sim_opts, xor_opts;
  auto* sweep = app.add_subcommand("sweep", "train CGAU and baseline models over shuffle proportions");
  add_common(sweep, sweep_opts, false);

  auto* het = app.add_subcommand("hetero", "client heterogeneity (mean Frechet distance) report");
  add_common(het, hetero_opts, false);
  std::string assignment_path;
  het->add_option("--assignment", assignment_path, "training assignment CSV (sample_index,client_id)");

  auto* sim = app.add_subcommand("simulate-clients", "write simulated client assignments and class histograms");
  add_common(sim, sim_opts, false);

  auto* xr = app.add_subcommand("xor", "two-client XOR demonstration");
  add_common(xr, xor_opts, false);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
  std::uint64_t gc_seed = 1;
  std::size_t gc_count = 100;
  std::string gc_out;
  gc->add_option("--seed", gc_seed, "seed for the random models");
  gc->add_option("--count", gc_count, "number of random models");
  gc->add_option("--out", gc_out, "directory for gradcheck.json");

  auto* conv = app.add_subcommand("convert", "convert between CSV and EMB1 (by file extension)");
  std::string conv_in, conv_out;
  conv->add_option("--input", conv_in, "source file (.csv or .emb1)")->required();
  conv->add_option("--out", conv_out, "destination file (.csv or .emb1)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (verbose) std::cerr << "simd backend: " << simd::backend_name(simd::active_backend()) << '\n';
    if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto out = out_dir(cfg);
      const auto result = experiment::run_sweep(cfg, out);
      for (std::size_t pi = 0; pi < cfg.proportions.size(); ++pi) {
        std::cout << "proportion " << format_double(cfg.proportions[pi]);
        for (auto kind : experiment::kModelKinds) {
          std::cout << "  " << experiment::model_kind_name(kind) << '='
                    << format_double(result.mean_metric(pi, kind));
        }
        std::cout << '\n';
      }
    } else if (*het) {
      const auto cfg = resolve(hetero_opts);
      std::optional<simclients::ClientAssignment> assignment;
      if (!assignment_path.empty()) {
        std::ifstream in(assignment_path);
        if (!in) throw ConfigError("cannot open assignment file " + assignment_path);
        assignment = simclients::read_assignment_csv(in, cfg.federated.num_clients);
      }
      const auto entries = experiment::run_hetero(cfg, cfg.output_dir, assignment);
      for (const auto& e : entries) {
        std::cout << "proportion " << format_double(e.proportion) << " repetition " << e.repetition << " gamma "
                  << format_double(e.report.gamma) << '\n';
      }
    } else if (*sim) {
      const auto cfg = resolve(sim_opts);
      experiment::run_simulate(cfg, out_dir(cfg));
    } else if (*xr) {
      const auto cfg = resolve(xor_opts);
      const auto r = experiment::run_xor(cfg, cfg.output_dir);
      std::cout << "mlp  train accuracy: client0=" << format_double(r.mlp_accuracy[0])
                << " client1=" << format_double(r.mlp_accuracy[1]) << '\n'
                << "cgau train accuracy: client0=" << format_double(r.cgau_accuracy[0])
                << " client1=" << format_double(r.cgau_accuracy[1]) << '\n'
                << "max logit change: filter zeroed=" << format_double(r.filter_ablation_change)
                << " gate zeroed=" << format_double(r.gate_ablation_change) << '\n';
    } else if (*gc) {
      return cmd_gradcheck(gc_seed, gc_count, gc_out);
    } else if (*conv) {
      return cmd_convert(conv_in, conv_out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
