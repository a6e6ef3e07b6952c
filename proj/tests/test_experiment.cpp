#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fedcgau/error.hpp"
#include "fedcgau/experiment/config.hpp"
#include "fedcgau/experiment/runner.hpp"

using namespace fedcgau;
using namespace fedcgau::experiment;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "seed": 5,
  "dataset": {"kind": "synthetic", "num_classes": 2, "blobs_per_class": 3, "samples_per_blob": 30,
              "dim": 4, "separation": 8.0, "spread": 1.0, "seed": 1},
  "model": {"hidden_units": [4]},
  "federated": {"num_clients": 3, "local_steps": 2, "batch_size": 16, "rounds": 4, "learning_rate": 0.05},
  "proportions": [0.0],
  "repetitions": 1
})";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fedcgau_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FEDCGAU_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kSmall);
  CHECK(c.seed == 5);
  CHECK(c.federated.num_clients == 3);
  CHECK(c.federated.clients_per_round == 3);
  CHECK(c.federated.seed == 5);
  CHECK(c.dataset.blobs.blobs_per_class == 3);
  CHECK(c.model.hidden_units == std::vector<std::size_t>{4});
  CHECK(parse_config(to_json(c)).federated.rounds == 4);
  CHECK(to_json(parse_config(to_json(c))) == to_json(c));

  const auto defaults = parse_config("{}");
  CHECK(defaults.proportions == std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  CHECK(defaults.federated.learning_rate == 0.01);
  CHECK_FALSE(defaults.federated.momentum.has_value());
  CHECK(defaults.val_fraction == 0.05);

  CHECK_THROWS_AS(parse_config(R"({"sede": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"hidden": [3]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"proportions": [0.5, 1.2]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"repetitions": 0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"seed": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"federated": {"num_clients": 2, "clients_per_round": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"dataset": {"kind": "emb1"}})"), ConfigError);
  try {
    parse_config("{\"seed\": 1,,}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 11);
  }
  CHECK(resolve_task(TaskChoice::kAuto, 2) == nn::Task::kBinary);
  CHECK(resolve_task(TaskChoice::kAuto, 5) == nn::Task::kMulticlass);
  CHECK_THROWS_AS(resolve_task(TaskChoice::kBinary, 3), ConfigError);
}

TEST_CASE("file dataset paths resolve against the config directory") {
  const auto c = parse_config(R"({"dataset": {"kind": "emb1", "train": "a.emb1", "test": "/abs/b.emb1"}})", "/cfg");
  CHECK(c.dataset.train_path == fs::path("/cfg/a.emb1"));
  CHECK(c.dataset.test_path == fs::path("/abs/b.emb1"));
}

TEST_CASE("sweep writes two rows per cell and is reproducible") {
  const auto c = parse_config(kSmall);
  const auto out1 = scratch("sweep1"), out2 = scratch("sweep2");
  const auto r = run_sweep(c, out1);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].model_kind == ModelKind::kCgau);
  CHECK(r.rows[1].model_kind == ModelKind::kBaseline);
  CHECK(r.rows[0].gamma == r.rows[1].gamma);
  const auto summary = slurp(out1 / "summary.csv");
  CHECK(count_lines(summary) == 3);
  CHECK(summary.rfind("proportion,repetition,model_kind,test_metric,gamma,best_round\n", 0) == 0);
  CHECK(fs::exists(out1 / "rounds" / "p0_r0_cgau.csv"));
  CHECK(fs::exists(out1 / "rounds" / "p0_r0_baseline.json"));
  CHECK(count_lines(slurp(out1 / "rounds" / "p0_r0_cgau.csv")) == 5);

  auto threaded = c;
  threaded.threads = 3;
  run_sweep(threaded, out2);
  for (const auto& entry : fs::recursive_directory_iterator(out1)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out1);
    CAPTURE(rel.string());
    CHECK(slurp(entry.path()) == slurp(out2 / rel));
  }
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("sweep refuses an unwritable output directory before computing") {
  const auto c = parse_config(kSmall);
  const auto blocker = scratch("blocker");
  std::ofstream(blocker) << "x";
  CHECK_THROWS_AS(run_sweep(c, blocker / "out"), Error);
  fs::remove(blocker);
}

TEST_CASE("hetero report") {
  auto c = parse_config(kSmall);
  c.proportions = {0.0, 1.0};
  c.repetitions = 2;
  const auto out = scratch("hetero");
  const auto entries = run_hetero(c, out);
  REQUIRE(entries.size() == 4);
  CHECK(entries[0].report.gamma > entries[2].report.gamma);
  CHECK(entries[1].report.gamma > entries[3].report.gamma);
  CHECK(entries[0].report.per_client.size() == 3);
  CHECK(fs::exists(out / "hetero.json"));

  auto one = c;
  one.federated.num_clients = 1;
  one.federated.clients_per_round = 1;
  CHECK_THROWS_AS(run_hetero(one, {}), ConfigError);

  auto full = c;
  full.simulation.hetero_space = HeteroSpace::kFull;
  CHECK(run_hetero(full, {})[0].report.gamma > 0.0);

  // explicit assignment
  const auto data = load_dataset(c);
  simclients::ClientAssignment a;
  a.num_clients = 3;
  for (std::size_t i = 0; i < data.train.size(); ++i) a.assignment.push_back(static_cast<std::uint32_t>(i % 3));
  CHECK(run_hetero(c, {}, a).size() == 1);
  a.assignment.pop_back();
  CHECK_THROWS_AS(run_hetero(c, {}, a), DimensionError);
  fs::remove_all(out);
}

TEST_CASE("simulate writes assignments and histograms") {
  auto c = parse_config(kSmall);
  c.proportions = {0.0, 0.5};
  const auto out = scratch("simulate");
  run_simulate(c, out);
  const auto data = load_dataset(c);
  CHECK(count_lines(slurp(out / "train_assignment_p1.csv")) == data.train.size() + 1);
  CHECK(count_lines(slurp(out / "test_assignment_p0.csv")) == data.test.size() + 1);
  CHECK(count_lines(slurp(out / "histogram.csv")) == 1 + 2 * 3 * 2);
  fs::remove_all(out);
}

TEST_CASE("xor demo") {
  auto c = parse_config(R"({"seed": 2, "xor": {"samples_per_cluster": 30, "spread": 0.0, "rounds": 300,
                                                "grid_size": 5}})");
  const auto out = scratch("xor");
  const auto r = run_xor(c, out);
  for (int k = 0; k < 2; ++k) {
    CHECK(r.cgau_accuracy[k] == 1.0);
    CHECK(r.mlp_accuracy[k] == 1.0);
  }
  CHECK(r.grid_rows == 4 * 2 * 25);
  CHECK(count_lines(slurp(out / "xor_grid.csv")) == 1 + 4 * 2 * 25);
  CHECK(fs::exists(out / "xor_report.json"));
  fs::remove_all(out);
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "good.json") << kSmall;
    std::ofstream(dir / "bad.json") << R"({"repetitions": 0})";
    std::ofstream(dir / "data.csv") << "label,f0,f1\n0,1,2\n1,3,4\n";
  }
  CHECK(run_cli("gradcheck --count 5") == 0);
  CHECK(run_cli("sweep --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()) == 1);
  CHECK(run_cli("sweep --config " + (dir / "missing.json").string() + " --out " + (dir / "o").string()) == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("convert --input " + (dir / "data.csv").string() + " --out " + (dir / "data.emb1").string()) == 0);
  CHECK(run_cli("convert --input " + (dir / "data.emb1").string() + " --out " + (dir / "back.csv").string()) == 0);
  CHECK(slurp(dir / "back.csv") == "label,f0,f1\n0,1,2\n1,3,4\n");
  std::ofstream(dir / "broken.emb1") << "EMB1";
  CHECK(run_cli("convert --input " + (dir / "broken.emb1").string() + " --out " + (dir / "x.csv").string()) == 1);
  CHECK(run_cli("simulate-clients --config " + (dir / "good.json").string() + " --out " + (dir / "sim").string()) == 0);
  CHECK(run_cli("hetero --config " + (dir / "good.json").string() + " --seed 9 --out " + (dir / "het").string()) == 0);
  CHECK(fs::exists(dir / "het" / "hetero.json"));
  fs::remove_all(dir);
}
