#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fedcgau/data/synth.hpp"
#include "fedcgau/error.hpp"
#include "fedcgau/fed/federated.hpp"
#include "fedcgau/fed/metrics.hpp"
#include "fedcgau/nn/checkpoint.hpp"
#include "fedcgau/nn/optimizer.hpp"

using namespace fedcgau;
using namespace fedcgau::fed;

namespace {

nn::ModelParams scalar_params(double v) {
  nn::ModelParams p;
  p.output.weight = Matrix{{v}};
  p.output.bias = {v};
  return p;
}

data::SynthBlobs small_blobs(std::uint64_t seed, std::size_t samples = 40) {
  data::BlobSpec s;
  s.num_classes = 3;
  s.blobs_per_class = 2;
  s.samples_per_blob = samples;
  s.dim = 4;
  s.separation = 6;
  s.spread = 1.5;
  s.seed = seed;
  return data::synth_blobs(s);
}

nn::ClassifierModel model_for(std::size_t clients, nn::UnitKind unit = nn::UnitKind::kCgau, std::uint64_t seed = 3) {
  nn::ModelSpec s;
  s.input_dim = 4;
  s.hidden_units = {6};
  s.unit = unit;
  s.num_classes = 3;
  s.num_clients = clients;
  return nn::make_model(s, seed);
}

std::vector<std::uint32_t> round_robin(std::size_t n, std::size_t k) {
  std::vector<std::uint32_t> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<std::uint32_t>(i % k);
  return a;
}

bool same_params(const nn::ModelParams& a, const nn::ModelParams& b) {
  return nn::encode_checkpoint({a, nn::Task::kMulticlass, 3, 1, 0.0}) ==
         nn::encode_checkpoint({b, nn::Task::kMulticlass, 3, 1, 0.0});
}

FederatedConfig config_for(std::size_t k) {
  FederatedConfig c;
  c.num_clients = k;
  c.clients_per_round = k;
  c.local_steps = 3;
  c.batch_size = 8;
  c.rounds = 15;
  c.learning_rate = 0.1;
  c.seed = 12;
  return c;
}

}  // namespace

TEST_CASE("one client, one full-batch step per round equals centralized gradient descent") {
  const auto b = small_blobs(1);
  const auto model = model_for(1);
  ClientState c;
  c.data.x_train = b.dataset.features;
  c.data.y_train = b.dataset.labels;
  c.conditioning.push_back({std::vector<double>(6, 0.0), std::vector<double>(6, 0.0)});
  auto cfg = config_for(1);
  cfg.local_steps = 1;
  cfg.batch_size = b.dataset.size();
  cfg.rounds = 50;
  const auto result = run_federated(model, {c}, cfg);

  auto central = model;
  std::mt19937_64 rng(0);
  const nn::ClientOneHot h(0, 1);
  for (int step = 0; step < 50; ++step) {
    const auto lg = nn::loss_and_gradients(central, b.dataset.features, b.dataset.labels, h, rng);
    CHECK(lg.loss == result.records[static_cast<std::size_t>(step)].mean_client_train_loss);
    nn::sgd_step(central.params, lg.gradients, cfg.learning_rate);
  }
  CHECK(same_params(central.params, result.final_model.params));
  CHECK(std::isnan(result.best_val_loss));
}

TEST_CASE("server averaging") {
  SUBCASE("uniform mean of two scalars") {
    auto target = scalar_params(0.0);
    const nn::ModelParams ps[] = {scalar_params(0.0), scalar_params(4.0)};
    const double w[] = {1.0, 1.0};
    average_shared(target, ps, w);
    CHECK(target.output.weight(0, 0) == 2.0);
  }
  SUBCASE("sample-weighted mean") {
    auto target = scalar_params(0.0);
    const nn::ModelParams ps[] = {scalar_params(0.0), scalar_params(4.0)};
    const double w[] = {1.0, 3.0};
    average_shared(target, ps, w);
    CHECK(target.output.weight(0, 0) == 3.0);
  }
  SUBCASE("identical inputs come back unchanged") {
    auto p = model_for(2).params;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    for (auto& blk : nn::param_blocks(p))
      for (double& v : blk.values) v = n(rng);
    const nn::ModelParams ps[] = {p, p, p};
    const double w[] = {0.1, 7.0, 2.3};
    auto target = model_for(2).params;
    average_shared(target, ps, w);
    const auto got = nn::param_blocks(target);
    const auto want = nn::param_blocks(p);
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].role != nn::BlockRole::kShared) continue;
      for (std::size_t j = 0; j < got[i].values.size(); ++j) CHECK(got[i].values[j] == want[i].values[j]);
    }
  }
  SUBCASE("weights (1, 0) and (1, 3)") {
    auto p = model_for(2, nn::UnitKind::kCgau, 1).params;
    auto q = model_for(2, nn::UnitKind::kCgau, 2).params;
    auto qb = nn::param_blocks(q);
    for (auto& blk : qb)
      for (double& v : blk.values) v += 0.5;  // conditioning blocks become nonzero too
    const nn::ModelParams ps[] = {p, q};
    auto first = model_for(2).params;
    const double w10[] = {1.0, 0.0};
    average_shared(first, ps, w10);
    auto target = model_for(2).params;
    const auto before = nn::param_blocks(std::as_const(target));
    std::vector<std::vector<double>> original;
    for (const auto& blk : before) original.emplace_back(blk.values.begin(), blk.values.end());
    const double w13[] = {1.0, 3.0};
    average_shared(target, ps, w13);
    const auto pb = nn::param_blocks(std::as_const(p));
    const auto fb = nn::param_blocks(std::as_const(first));
    const auto tb = nn::param_blocks(std::as_const(target));
    for (std::size_t i = 0; i < tb.size(); ++i) {
      CAPTURE(tb[i].name);
      for (std::size_t j = 0; j < tb[i].values.size(); ++j) {
        if (tb[i].role == nn::BlockRole::kConditioning) {
          CHECK(tb[i].values[j] == original[i][j]);
          continue;
        }
        CHECK(fb[i].values[j] == pb[i].values[j]);
        CHECK(tb[i].values[j] == doctest::Approx(0.25 * pb[i].values[j] + 0.75 * qb[i].values[j]).epsilon(1e-14));
      }
    }
  }
  SUBCASE("errors") {
    auto target = scalar_params(0.0);
    nn::ModelParams wide;
    wide.output.weight = Matrix(1, 2);
    wide.output.bias = {0, 0};
    const nn::ModelParams ps[] = {wide};
    const double w[] = {1.0};
    CHECK_THROWS_AS(average_shared(target, ps, w), DimensionError);
    const nn::ModelParams ok[] = {scalar_params(1)};
    const double zero[] = {0.0};
    CHECK_THROWS_AS(average_shared(target, ok, zero), RangeError);
  }
}

TEST_CASE("metrics") {
  const double perfect[] = {0.9, 0.8, 0.2, 0.1};
  const int y[] = {1, 1, 0, 0};
  CHECK(auc(perfect, y) == 1.0);
  const double mixed[] = {0.9, 0.4, 0.6, 0.1};
  CHECK(auc(mixed, y) == 0.75);
  const double tied[] = {0.5, 0.5, 0.5, 0.5};
  CHECK(auc(tied, y) == 0.5);
  const int one_class[] = {1, 1, 1, 1};
  CHECK_THROWS_AS(auc(perfect, one_class), UndefinedMetricError);

  const int labels[] = {0, 0, 0, 2, 1};
  CHECK(accuracy(nn::Task::kMulticlass, Matrix(5, 3), labels) == doctest::Approx(0.6));
  CHECK(accuracy(nn::Task::kBinary, Matrix{{1.0}, {-1.0}}, std::vector<int>{1, 1}) == 0.5);
  CHECK(metric_from_logits(Metric::kAuc, nn::Task::kBinary, Matrix{{2.0}, {-1.0}}, std::vector<int>{1, 0}) == 1.0);
  CHECK_THROWS_AS(metric_from_logits(Metric::kAuc, nn::Task::kMulticlass, Matrix(2, 3), std::vector<int>{1, 0}),
                  ConfigError);
  CHECK(metric_name(Metric::kAuc) == "auc");
}

TEST_CASE("per-client evaluation uses each row's own conditioning") {
  auto m = model_for(2);
  auto& layer = std::get<nn::CgauLayer>(m.params.hidden[0]);
  for (std::size_t j = 0; j < 6; ++j) layer.v_filter(1, j) = 1.0;
  const Matrix x{{0.5, 0.1, -0.3, 0.2}, {0.5, 0.1, -0.3, 0.2}};
  const std::uint32_t clients[] = {0, 1};
  const Matrix logits = predict_by_client(m, x, clients);
  const Matrix l0 = nn::predict_logits(m, x.select_rows(std::vector<std::size_t>{0}), nn::ClientOneHot(0, 2));
  const Matrix l1 = nn::predict_logits(m, x.select_rows(std::vector<std::size_t>{1}), nn::ClientOneHot(1, 2));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(logits(0, c) == l0(0, c));
    CHECK(logits(1, c) == l1(0, c));
  }
  CHECK(logits(0, 0) != logits(1, 0));
}

TEST_CASE("make_clients") {
  const auto b = small_blobs(2, 100);
  const auto model = model_for(3);
  const auto assignment = round_robin(b.dataset.size(), 3);
  const auto clients = make_clients(b.dataset, assignment, model, 0.05, 9);
  REQUIRE(clients.size() == 3);
  std::size_t total = 0;
  for (const auto& c : clients) {
    total += c.data.y_train.size() + c.data.y_val.size();
    CHECK(c.data.y_val.size() == 9);  // three classes, round(0.05 * ~66) each
    CHECK(c.conditioning.size() == 1);
    CHECK(c.conditioning[0].filter == std::vector<double>(6, 0.0));
  }
  CHECK(total == b.dataset.size());
  std::vector<std::uint32_t> bad = assignment;
  bad[0] = 3;
  CHECK_THROWS_AS(make_clients(b.dataset, bad, model, 0.05, 9), RangeError);
}

TEST_CASE("federated run") {
  const auto b = small_blobs(3, 60);
  const auto model = model_for(4);
  const auto clients = make_clients(b.dataset, round_robin(b.dataset.size(), 4), model, 0.1, 2);
  const auto cfg = config_for(4);

  SUBCASE("deterministic and thread-count independent") {
    const auto r1 = run_federated(model, clients, cfg);
    auto threaded = cfg;
    threaded.threads = 3;
    const auto r2 = run_federated(model, clients, threaded);
    CHECK(nn::encode_checkpoint(r1.best_model) == nn::encode_checkpoint(r2.best_model));
    CHECK(nn::encode_checkpoint(r1.final_model) == nn::encode_checkpoint(r2.final_model));
    std::ostringstream a, c;
    write_round_csv(r1.records, a);
    write_round_csv(r2.records, c);
    CHECK(a.str() == c.str());
    CHECK(a.str().rfind("round,mean_client_train_loss,val_loss,val_metric\n", 0) == 0);
  }
  SUBCASE("best snapshot has the lowest validation loss") {
    const auto r = run_federated(model, clients, cfg);
    REQUIRE(r.records.size() == cfg.rounds);
    double lowest = INFINITY;
    std::size_t at = 0;
    for (const auto& rec : r.records) {
      if (rec.val_loss < lowest) lowest = rec.val_loss, at = rec.round;
      CHECK(rec.participants.size() == 4);
    }
    CHECK(r.best_round == at);
    CHECK(r.best_val_loss == lowest);
    // the snapshot reproduces its own recorded loss
    std::vector<Matrix> xs;
    std::vector<int> ys;
    std::vector<std::uint32_t> ids;
    for (const auto& c : r.clients) {
      xs.push_back(c.data.x_val);
      ys.insert(ys.end(), c.data.y_val.begin(), c.data.y_val.end());
      ids.insert(ids.end(), c.data.y_val.size(), static_cast<std::uint32_t>(c.client_id));
    }
    CHECK(mean_cross_entropy(r.best_model, vstack(xs), ys, ids) == doctest::Approx(lowest).epsilon(1e-12));
    CHECK(r.records.back().val_loss < r.records.front().val_loss);
  }
  SUBCASE("conditioning rows stay with clients that trained") {
    auto partial = cfg;
    partial.clients_per_round = 1;
    partial.rounds = 2;
    const auto r = run_federated(model, clients, partial);
    std::size_t untouched = 0;
    for (const auto& c : r.clients) {
      const bool zero = c.conditioning[0].filter == std::vector<double>(6, 0.0) &&
                        c.conditioning[0].gate == std::vector<double>(6, 0.0);
      if (c.times_sampled == 0) {
        CHECK(zero);
        ++untouched;
      } else {
        CHECK_FALSE(zero);
      }
      const auto& v = std::get<nn::CgauLayer>(r.final_model.params.hidden[0]).v_filter;
      for (std::size_t j = 0; j < 6; ++j) CHECK(v(c.client_id, j) == c.conditioning[0].filter[j]);
    }
    CHECK(untouched >= 2);
  }
  SUBCASE("local training stops after one epoch") {
    auto one = cfg;
    one.batch_size = 1000;
    one.local_steps = 1;
    auto many = one;
    many.local_steps = 10;
    CHECK(nn::encode_checkpoint(run_federated(model, clients, one).final_model) ==
          nn::encode_checkpoint(run_federated(model, clients, many).final_model));
  }
  SUBCASE("momentum with and without per-round reset") {
    auto with = cfg;
    with.momentum = MomentumConfig{0.9, true};
    auto keep = with;
    keep.momentum->reset_each_round = false;
    const auto a = run_federated(model, clients, with);
    const auto c = run_federated(model, clients, keep);
    CHECK(nn::encode_checkpoint(a.final_model) != nn::encode_checkpoint(c.final_model));
    CHECK(nn::encode_checkpoint(a.final_model) != nn::encode_checkpoint(run_federated(model, clients, cfg).final_model));
  }
  SUBCASE("baseline model has no conditioning") {
    const auto relu = model_for(4, nn::UnitKind::kRelu);
    const auto rc = make_clients(b.dataset, round_robin(b.dataset.size(), 4), relu, 0.1, 2);
    const auto r = run_federated(relu, rc, cfg);
    CHECK(r.clients[0].conditioning.empty());
    CHECK(std::isfinite(r.best_val_loss));
  }
}

TEST_CASE("federated configuration errors") {
  const auto b = small_blobs(4);
  const auto model = model_for(2);
  auto clients = make_clients(b.dataset, round_robin(b.dataset.size(), 2), model, 0.05, 0);
  auto cfg = config_for(2);

  auto too_many = cfg;
  too_many.clients_per_round = 3;
  CHECK_THROWS_AS(run_federated(model, clients, too_many), ConfigError);
  auto no_steps = cfg;
  no_steps.local_steps = 0;
  CHECK_THROWS_AS(validate(no_steps), ConfigError);
  auto no_batch = cfg;
  no_batch.batch_size = 0;
  CHECK_THROWS_AS(validate(no_batch), ConfigError);
  auto wrong_k = cfg;
  wrong_k.num_clients = 3;
  wrong_k.clients_per_round = 3;
  CHECK_THROWS_AS(run_federated(model, clients, wrong_k), ConfigError);

  auto empty = clients;
  empty[1].data.x_train = Matrix(0, 4);
  empty[1].data.y_train.clear();
  CHECK_THROWS_AS(run_federated(model, empty, cfg), ConfigError);

  auto narrow = clients;
  narrow[0].data.x_train = Matrix(3, 2);
  narrow[0].data.y_train = {0, 1, 2};
  CHECK_THROWS_AS(run_federated(model, narrow, cfg), DimensionError);
}
