#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opau/table10.hpp"
#include "opau/train.hpp"

using namespace opau;

namespace {

DatasetBatch xor_data() {
  DatasetBatch data;
  data.features.resize(4, 2);
  data.features << 0, 0, 0, 1, 1, 0, 1, 1;
  data.labels = {0, 1, 1, 0};
  data.num_classes = 2;
  return data;
}

DatasetBatch constant_label_data() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DatasetBatch data;
  data.features.resize(64, 8);
  for (Eigen::Index i = 0; i < data.features.size(); ++i)
    data.features.data()[i] = dist(rng);
  data.labels.assign(64, 1);
  data.num_classes = 3;
  return data;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("activation specs parse baselines, bases, and pau") {
  CHECK(activation_spec_from_string("relu").kind == ActivationSpec::Kind::Fixed);
  CHECK(activation_spec_from_string("swish").fixed == Baseline::Swish);
  const ActivationSpec opau = activation_spec_from_string("hp2");
  CHECK(opau.kind == ActivationSpec::Kind::Opau);
  CHECK(opau.basis == BasisKind::HP2);
  CHECK(activation_spec_from_string("pau").kind == ActivationSpec::Kind::Pau);
  CHECK_THROWS_WITH_AS(activation_spec_from_string("bogus"),
                       doctest::Contains("valid: relu, leaky_relu"),
                       std::invalid_argument);
}

TEST_CASE("build_mlp wires shapes, activations, and seeded weights") {
  TrainConfig config;
  config.seed = 5;
  const ActivationSpec spec = activation_spec_from_string("leg");
  const Network net = build_mlp({4, 5, 3}, spec, config);
  REQUIRE(net.layers.size() == 2);
  CHECK(net.in_dim() == 4);
  CHECK(net.out_dim() == 3);
  CHECK(std::holds_alternative<OpauParams>(net.layers[0].activation));
  CHECK(std::holds_alternative<Identity>(net.layers[1].activation));
  CHECK(net.layers[0].biases.cwiseAbs().maxCoeff() == 0.0);
  CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 4.0));
  CHECK(net.layers[1].weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));

  // bundled initialization by default
  const OpauParams& act = std::get<OpauParams>(net.layers[0].activation);
  const OpauParams bundle = bundled_table10(BasisKind::LEG);
  for (int i = 0; i <= 5; ++i) CHECK(act.c[i] == bundle.c[i]);

  const Network again = build_mlp({4, 5, 3}, spec, config);
  CHECK((again.layers[0].weights - net.layers[0].weights).cwiseAbs().maxCoeff() == 0.0);
  TrainConfig other = config;
  other.seed = 6;
  const Network different = build_mlp({4, 5, 3}, spec, other);
  CHECK((different.layers[0].weights - net.layers[0].weights).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(build_mlp({4}, spec, config), std::invalid_argument);
  CHECK_THROWS_AS(build_mlp({4, 0, 3}, spec, config), std::invalid_argument);
}

TEST_CASE("fresh initialization refits instead of using the bundle") {
  TrainConfig config;
  config.init = TrainConfig::Init::Fresh;
  const Network net = build_mlp({2, 3, 2}, activation_spec_from_string("cp1"), config);
  const OpauParams& act = std::get<OpauParams>(net.layers[0].activation);
  const OpauParams bundle = bundled_table10(BasisKind::CP1);
  CHECK((act.c - bundle.c).cwiseAbs().maxCoeff() > 0.0);  // refit lands elsewhere
  // but still approximates the same target decently
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double x = -3.0 + 6.0 * i / 199.0;
    worst = std::max(worst, std::abs(opau_forward(act, x) -
                                     baseline_forward(Baseline::LeakyReLU, x, 0.01)));
  }
  CHECK(worst < 0.2);
}

TEST_CASE("a linearly separable constant-label set is learned quickly") {
  DatasetBatch data = constant_label_data();
  TrainConfig config;
  config.optimizer = AdamSettings{0.05, 0.9, 0.999, 1e-8};
  config.batch_size = 8;
  config.epochs = 5;
  Network net = build_mlp({8, 3}, activation_spec_from_string("relu"), config);
  const TrainResult result = train(net, data, nullptr, config);
  REQUIRE(result.history.size() == 5);
  CHECK(result.history.back().test_acc == 1.0);
  CHECK(result.steps == 40);
  CHECK(evaluate(net, data).accuracy == 1.0);
}

TEST_CASE("xor is solved by a small trainable-activation net") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.optimizer = AdamSettings{0.01, 0.9, 0.999, 1e-8};
  config.batch_size = 4;
  config.epochs = 100;
  Network net = build_mlp({2, 8, 2}, activation_spec_from_string("hp1"), config);
  const TrainResult result = train(net, data, nullptr, config);
  CHECK(result.history.back().train_loss < 0.05);
  CHECK(result.history.back().train_acc == 1.0);
  CHECK(result.steps == 100);

  // activation parameters actually moved
  REQUIRE(result.activation_snapshots.size() == 100);
  REQUIRE(result.activation_snapshots.front().size() == 1);
  const OpauParams& first = result.activation_snapshots.front()[0];
  const OpauParams& last = result.activation_snapshots.back()[0];
  CHECK((first.c - last.c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("training is deterministic for a fixed config") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.batch_size = 2;
  config.epochs = 5;
  config.seed = 11;
  Network a = build_mlp({2, 4, 2}, activation_spec_from_string("cp2"), config);
  Network b = build_mlp({2, 4, 2}, activation_spec_from_string("cp2"), config);
  const TrainResult ra = train(a, data, nullptr, config);
  const TrainResult rb = train(b, data, nullptr, config);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t e = 0; e < ra.history.size(); ++e) {
    CHECK(ra.history[e].train_loss == rb.history[e].train_loss);
    CHECK(ra.history[e].test_acc == rb.history[e].test_acc);
  }
  CHECK((a.layers[0].weights - b.layers[0].weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metrics stream carries a header and one fixed-format row per epoch") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.epochs = 3;
  config.batch_size = 4;
  Network net = build_mlp({2, 4, 2}, activation_spec_from_string("relu"), config);
  std::ostringstream csv;
  const TrainResult result = train(net, data, &data, config, &csv);

  std::istringstream lines(csv.str());
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "epoch,train_loss,train_acc,test_loss,test_acc");
  for (int epoch = 1; epoch <= 3; ++epoch) {
    REQUIRE(std::getline(lines, line));
    char expected[160];
    std::snprintf(expected, sizeof(expected), "%d,%.6f,%.6f,%.6f,%.6f", epoch,
                  result.history[epoch - 1].train_loss,
                  result.history[epoch - 1].train_acc,
                  result.history[epoch - 1].test_loss,
                  result.history[epoch - 1].test_acc);
    CHECK(line == expected);
  }
  CHECK_FALSE(std::getline(lines, line));
}

TEST_CASE("held-out metrics come from the test split") {
  DatasetBatch data = xor_data();
  DatasetBatch test;  // single sample the net should classify after training
  test.features.resize(1, 2);
  test.features << 0, 1;
  test.labels = {1};
  test.num_classes = 2;

  TrainConfig config;
  config.optimizer = AdamSettings{0.01, 0.9, 0.999, 1e-8};
  config.epochs = 60;
  config.batch_size = 4;
  Network net = build_mlp({2, 8, 2}, activation_spec_from_string("hp1"), config);
  const TrainResult result = train(net, data, &test, config);
  CHECK(result.history.back().test_acc == evaluate(net, test).accuracy);
  CHECK(result.history.back().test_acc == 1.0);
}

TEST_CASE("zero epochs mean zero steps and an empty history") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.epochs = 0;
  Network net = build_mlp({2, 4, 2}, activation_spec_from_string("relu"), config);
  const Eigen::MatrixXd before = net.layers[0].weights;
  const TrainResult result = train(net, data, nullptr, config);
  CHECK(result.history.empty());
  CHECK(result.steps == 0);
  CHECK((net.layers[0].weights - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("activation-gradient clipping freezes activations under sgd") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.optimizer = SgdSettings{0.1, 0.0};
  config.epochs = 4;
  config.batch_size = 4;
  config.clip_activation_grads = true;
  config.activation_clip_norm = 1e-12;  // effectively zero activation motion
  Network net = build_mlp({2, 4, 2}, activation_spec_from_string("hp1"), config);
  const OpauParams before = std::get<OpauParams>(net.layers[0].activation);
  const Eigen::MatrixXd weights_before = net.layers[0].weights;
  train(net, data, nullptr, config);
  const OpauParams& after = std::get<OpauParams>(net.layers[0].activation);
  CHECK((after.c - before.c).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((after.d - before.d).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((net.layers[0].weights - weights_before).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("a diverging run aborts with a layer-by-layer diagnostic") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.optimizer = SgdSettings{1e300, 0.0};  // guaranteed overflow
  config.epochs = 5;
  config.batch_size = 4;
  Network net = build_mlp({2, 4, 2}, activation_spec_from_string("hp1"), config);
  CHECK_THROWS_WITH_AS(train(net, data, nullptr, config),
                       doctest::Contains("non-finite loss"), std::runtime_error);
}

TEST_CASE("config validation") {
  TrainConfig config;
  CHECK_NOTHROW(config.validate());
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.epochs = -1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.clip_activation_grads = true;
  config.activation_clip_norm = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = {};
  config.optimizer = SgdSettings{-1.0, 0.0};
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  DatasetBatch empty;
  empty.features.resize(0, 2);
  empty.num_classes = 2;
  TrainConfig ok;
  Network net = build_mlp({2, 4, 2}, activation_spec_from_string("relu"), ok);
  CHECK_THROWS_AS(train(net, empty, nullptr, ok), std::invalid_argument);
}

TEST_CASE("checkpoints restore the network bit-for-bit") {
  DatasetBatch data = xor_data();
  TrainConfig config;
  config.optimizer = AdamSettings{0.01, 0.9, 0.999, 1e-8};
  config.epochs = 20;
  config.batch_size = 2;
  config.seed = 9;
  Network net = build_mlp({2, 6, 2}, activation_spec_from_string("hp1"), config);
  train(net, data, nullptr, config);

  const std::string path = temp_path("opau_test_checkpoint.json");
  save_checkpoint(path, net, config);
  TrainConfig restored_config;
  Network restored = load_checkpoint(path, &restored_config);

  const Eigen::MatrixXd a = network_forward(net, data);
  const Eigen::MatrixXd b = network_forward(restored, data);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(restored.loss == net.loss);
  CHECK(restored_config.batch_size == 2);
  CHECK(restored_config.seed == 9);
  CHECK(std::get<AdamSettings>(restored_config.optimizer).lr == 0.01);
  CHECK(restored_config.init == TrainConfig::Init::Table10);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoints cover every activation alternative") {
  Network net;
  DenseLayer l0;
  l0.weights = Eigen::MatrixXd::Random(3, 2);
  l0.biases = Eigen::VectorXd::Random(3);
  l0.activation = Baseline::Softplus;
  DenseLayer l1;
  l1.weights = Eigen::MatrixXd::Random(3, 3);
  l1.biases = Eigen::VectorXd::Random(3);
  PauParams pau;
  pau.a = Eigen::VectorXd::Random(4);
  pau.b = Eigen::VectorXd::Random(2);
  pau.variant = PauVariant::F3;
  l1.activation = pau;
  DenseLayer l2;
  l2.weights = Eigen::MatrixXd::Random(2, 3);
  l2.biases = Eigen::VectorXd::Random(2);
  net.layers = {l0, l1, l2};
  net.loss = Loss::MeanSquaredError;

  const std::string path = temp_path("opau_test_checkpoint_mixed.json");
  save_checkpoint(path, net, TrainConfig{});
  const Network restored = load_checkpoint(path);
  CHECK(std::get<Baseline>(restored.layers[0].activation) == Baseline::Softplus);
  const PauParams& rp = std::get<PauParams>(restored.layers[1].activation);
  CHECK(rp.variant == PauVariant::F3);
  for (int i = 0; i < 4; ++i) CHECK(rp.a[i] == pau.a[i]);
  CHECK(std::holds_alternative<Identity>(restored.layers[2].activation));
  CHECK(restored.loss == Loss::MeanSquaredError);
  for (Eigen::Index i = 0; i < l1.weights.size(); ++i)
    CHECK(restored.layers[1].weights.data()[i] == l1.weights.data()[i]);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loading rejects wrong or damaged files") {
  CHECK_THROWS_AS(load_checkpoint(temp_path("opau_no_such_checkpoint.json")),
                  std::runtime_error);
  const std::string path = temp_path("opau_wrong_format.json");
  std::ofstream(path) << "{\"format\": \"something-else\"}\n";
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("not an opau checkpoint"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("evaluate reports mean loss and accuracy") {
  DatasetBatch data = constant_label_data();
  TrainConfig config;
  Network net = build_mlp({8, 3}, activation_spec_from_string("relu"), config);
  const EvalMetrics metrics = evaluate(net, data);
  CHECK(metrics.loss > 0.0);
  CHECK(metrics.loss < 10.0);
  CHECK(metrics.accuracy >= 0.0);
  CHECK(metrics.accuracy <= 1.0);

  DatasetBatch empty;
  empty.features.resize(0, 8);
  empty.num_classes = 3;
  const EvalMetrics zero = evaluate(net, empty);
  CHECK(zero.loss == 0.0);
  CHECK(zero.accuracy == 0.0);
}
