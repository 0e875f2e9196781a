#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "riskpipe/mlp.hpp"
#include "riskpipe/rng.hpp"

using namespace riskpipe;

namespace {

Dataset random_dataset(std::size_t rows, std::size_t n_features, std::uint64_t seed) {
  Dataset ds;
  ds.n_features = n_features;
  ds.window = 4;
  ds.stride = 2;
  Rng rng(seed);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(n_features);
    for (double& v : row) v = rng.uniform(-2, 2);
    ds.features.push_back(std::move(row));
    ds.labels.push_back(static_cast<SkillLabel>(static_cast<int>(rng.next_index(5))));
  }
  return ds;
}

// Central finite differences against the analytic gradient, every parameter.
void check_gradients(MlpModel model, const std::vector<std::vector<double>>& rows,
                     const std::vector<SkillLabel>& labels) {
  const double h = 1e-5;
  const MlpGradients g = mlp_gradients(model, rows, labels);
  double worst = 0;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    auto probe = [&](std::vector<double>& param, std::size_t i, double analytic) {
      const double keep = param[i];
      param[i] = keep + h;
      const double up = mlp_loss(model, rows, labels);
      param[i] = keep - h;
      const double down = mlp_loss(model, rows, labels);
      param[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double rel =
          std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
      worst = std::max(worst, rel);
    };
    for (std::size_t i = 0; i < model.layers[li].w.size(); ++i)
      probe(model.layers[li].w, i, g.w[li][i]);
    for (std::size_t i = 0; i < model.layers[li].b.size(); ++i)
      probe(model.layers[li].b, i, g.b[li][i]);
  }
  CHECK(worst < 1e-4);
}

}  // namespace

TEST_CASE("all-zero weights give uniform class probabilities") {
  MlpHyper hyper;
  hyper.h1 = 4;
  hyper.h2 = 3;
  MlpModel m = init_model(6, hyper);
  for (auto& l : m.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  const auto series = predict(m, {std::vector<double>(6, 1.5)});
  for (double p : series.probabilities[0]) CHECK(p == Catch::Approx(0.2).margin(1e-12));
  CHECK(series.labels[0] == SkillLabel::Idle);  // tie breaks to the lowest ordinal
}

TEST_CASE("probabilities are non-negative and sum to one") {
  MlpHyper hyper;
  hyper.seed = 5;
  MlpModel m = init_model(8, hyper);
  Rng rng(6);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row(8);
    for (double& v : row) v = rng.uniform(-3, 3);
    rows.push_back(std::move(row));
  }
  const auto series = predict(m, rows);
  for (const auto& p : series.probabilities) {
    double sum = 0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("argmax is invariant under constant logit shifts") {
  MlpHyper hyper;
  hyper.seed = 9;
  MlpModel m = init_model(5, hyper);
  Rng rng(10);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 30; ++i) {
    std::vector<double> row(5);
    for (double& v : row) v = rng.uniform(-1, 1);
    rows.push_back(std::move(row));
  }
  const auto base = predict(m, rows);
  MlpModel shifted = m;
  for (double& b : shifted.layers.back().b) b += 17.5;
  const auto out = predict(shifted, rows);
  CHECK(out.labels == base.labels);
}

TEST_CASE("feature dimension mismatch is rejected") {
  MlpHyper hyper;
  MlpModel m = init_model(4, hyper);
  CHECK_THROWS_AS(predict(m, {std::vector<double>(5, 0.0)}), ValidationError);
}

TEST_CASE("zero learning rate leaves the initialization untouched") {
  const Dataset ds = random_dataset(40, 6, 11);
  MlpHyper hyper;
  hyper.h1 = 5;
  hyper.h2 = 4;
  hyper.epochs = 1;
  hyper.learning_rate = 0.0;
  hyper.seed = 77;
  const MlpModel trained = train(ds, hyper);
  const MlpModel fresh = init_model(6, hyper);
  CHECK(trained.layers == fresh.layers);
}

TEST_CASE("training reduces the loss on the training set") {
  const Dataset ds = random_dataset(120, 6, 21);
  MlpHyper hyper;
  hyper.h1 = 8;
  hyper.h2 = 6;
  hyper.epochs = 30;
  hyper.seed = 3;

  MlpModel at_init = train(ds, [&] {
    MlpHyper h = hyper;
    h.epochs = 0;
    return h;
  }());
  const MlpModel trained = train(ds, hyper);
  const double before = mlp_loss(at_init, ds.features, ds.labels);
  const double after = mlp_loss(trained, ds.features, ds.labels);
  CHECK(after <= before);
}

TEST_CASE("backpropagation matches central finite differences") {
  Rng rng(2024);
  for (int batch_i = 0; batch_i < 3; ++batch_i) {
    MlpHyper hyper;
    hyper.h1 = 5;
    hyper.h2 = 4;
    hyper.seed = rng.fork(static_cast<std::uint64_t>(batch_i));
    MlpModel m = init_model(6, hyper);
    std::vector<std::vector<double>> rows;
    std::vector<SkillLabel> labels;
    for (int r = 0; r < 10; ++r) {
      std::vector<double> row(6);
      for (double& v : row) v = rng.uniform(-2, 2);
      rows.push_back(std::move(row));
      labels.push_back(static_cast<SkillLabel>(static_cast<int>(rng.next_index(5))));
    }
    check_gradients(std::move(m), rows, labels);
  }
}

TEST_CASE("training is deterministic in dataset, hyper and seed") {
  const Dataset ds = random_dataset(80, 5, 31);
  MlpHyper hyper;
  hyper.h1 = 6;
  hyper.h2 = 4;
  hyper.epochs = 5;
  hyper.seed = 123;
  const MlpModel a = train(ds, hyper);
  const MlpModel b = train(ds, hyper);
  CHECK(a == b);
  hyper.seed = 124;
  const MlpModel c = train(ds, hyper);
  CHECK_FALSE(a == c);
}

TEST_CASE("stored statistics normalize the training features") {
  const Dataset ds = random_dataset(200, 7, 41);
  MlpHyper hyper;
  hyper.epochs = 1;
  const MlpModel m = train(ds, hyper);
  for (std::size_t f = 0; f < ds.n_features; ++f) {
    double sum = 0, sq = 0;
    for (const auto& row : ds.features) {
      const double z = (row[f] - m.norm_mean[f]) / m.norm_std[f];
      sum += z;
      sq += z * z;
    }
    const double mean = sum / static_cast<double>(ds.size());
    const double stddev =
        std::sqrt(sq / static_cast<double>(ds.size()) - mean * mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(stddev - 1.0) < 1e-6);
  }
}

TEST_CASE("single-class data cannot be trained on") {
  Dataset ds = random_dataset(30, 4, 51);
  std::fill(ds.labels.begin(), ds.labels.end(), SkillLabel::Move);
  CHECK_THROWS_AS(train(ds, MlpHyper{}), ValidationError);
  CHECK_THROWS_AS(train(Dataset{}, MlpHyper{}), ValidationError);
}

TEST_CASE("checkpoint round-trip reproduces the model exactly") {
  Rng rng(61);
  for (int i = 0; i < 100; ++i) {
    MlpHyper hyper;
    hyper.h1 = 1 + rng.next_index(8);
    hyper.h2 = 1 + rng.next_index(6);
    hyper.seed = rng.fork(static_cast<std::uint64_t>(i));
    MlpModel m = init_model(1 + rng.next_index(10), hyper);
    m.window = 1 + rng.next_index(30);
    m.stride = 1 + rng.next_index(10);
    for (auto& l : m.layers) {
      for (double& b : l.b) b = rng.uniform(-1, 1);
    }
    for (double& v : m.norm_mean) v = rng.uniform(-5, 5);
    for (double& v : m.norm_std) v = rng.uniform(0.1, 3.0);
    CHECK(parse_model_checkpoint(serialize_model_checkpoint(m)) == m);
  }
}

TEST_CASE("checkpoint loading rejects unknown versions and bad shapes") {
  MlpModel m = init_model(3, MlpHyper{});
  std::string good = serialize_model_checkpoint(m);
  std::string bad = good;
  bad.replace(bad.find("\"version\":1"), 11, "\"version\":2");
  CHECK_THROWS_AS(parse_model_checkpoint(bad), FormatError);
  CHECK_THROWS_AS(parse_model_checkpoint("{}"), FormatError);
  CHECK_THROWS_AS(parse_model_checkpoint("not json"), ParseError);

  // break the layer chaining
  nlohmann::json j = nlohmann::json::parse(good);
  j["layers"][1]["in"] = 999;
  CHECK_THROWS_AS(parse_model_checkpoint(j.dump()), FormatError);
}
