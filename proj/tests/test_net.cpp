#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numeric>

#include "gardner/actions.hpp"
#include "gardner/checkpoint.hpp"
#include "gardner/net.hpp"
#include "oracles.hpp"

using namespace gardner;

namespace {

// Scalar loss: fixed random projection of a few logits and the value outputs.
struct Probe {
  std::vector<float> planes;  // [batch][25]
  int batch = 0;
  std::vector<std::vector<Network<double>::LogitGrad>> logit_weights;
  std::vector<double> value_weights;
};

Probe make_probe(int batch, int actions, Rng& rng) {
  Probe p;
  p.batch = batch;
  p.planes.resize(static_cast<std::size_t>(batch) * kNumSquares);
  for (auto& v : p.planes) v = static_cast<float>((rng.next_double() - 0.5) * 4.0);
  p.logit_weights.resize(batch);
  p.value_weights.resize(batch);
  for (int b = 0; b < batch; ++b) {
    const int picks = 1 + rng.next_index(std::min(actions, 4));
    for (int i = 0; i < picks; ++i) {
      p.logit_weights[b].push_back({static_cast<std::uint16_t>(rng.next_index(actions)),
                                    rng.next_double() - 0.5});
    }
    p.value_weights[b] = rng.next_double() - 0.5;
  }
  return p;
}

double probe_loss(const Network<double>& net, const Probe& p, Network<double>::Mode mode) {
  Network<double>::Cache cache;
  std::vector<double> planes(p.planes.begin(), p.planes.end());
  net.forward(planes, p.batch, mode, nullptr, cache);
  double loss = 0.0;
  std::vector<std::uint16_t> ids(1);
  std::vector<double> logit(1);
  for (int b = 0; b < p.batch; ++b) {
    for (const auto& lw : p.logit_weights[b]) {
      ids[0] = lw.action;
      net.policy_logits(cache, b, ids, logit);
      loss += lw.grad * logit[0];
    }
    loss += p.value_weights[b] * net.value(cache, b);
  }
  return loss;
}

// Central finite differences against backward(), tensor by tensor.
void check_gradients(Network<double>& net, const Probe& p, Network<double>::Mode mode) {
  Network<double>::Cache cache;
  std::vector<double> planes(p.planes.begin(), p.planes.end());
  net.forward(planes, p.batch, mode, nullptr, cache);
  std::vector<double> grads;
  net.backward(cache, p.logit_weights, p.value_weights, grads);

  for (const auto& span : net.layout()) {
    double num2 = 0.0, an2 = 0.0, diff2 = 0.0;
    for (std::size_t i = span.offset; i < span.offset + span.size; ++i) {
      const double saved = net.trainable()[i];
      const double h = 1e-5 * std::max(1.0, std::abs(saved));
      net.trainable()[i] = saved + h;
      const double up = probe_loss(net, p, mode);
      net.trainable()[i] = saved - h;
      const double down = probe_loss(net, p, mode);
      net.trainable()[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      num2 += fd * fd;
      an2 += grads[i] * grads[i];
      diff2 += (fd - grads[i]) * (fd - grads[i]);
    }
    const double scale = std::max(std::sqrt(num2), std::sqrt(an2));
    INFO("tensor ", span.name);
    if (scale < 1e-6) {
      // Mathematically zero gradient (e.g. a bias absorbed by batch norm's
      // mean subtraction): compare absolutely.
      CHECK(std::sqrt(diff2) < 1e-6);
    } else {
      CHECK(std::sqrt(diff2) / scale < 1e-4);
    }
  }
}

}  // namespace

TEST_SUITE_BEGIN("net");

TEST_CASE("trainable count matches the closed form and the layout") {
  for (auto [c, h, a] : {std::tuple{4, 6, 10}, std::tuple{64, 128, 664}, std::tuple{3, 5, 7}}) {
    Network<float> net(c, h, a, 0.3);
    std::size_t total = 0;
    for (const auto& span : net.layout()) total += span.size;
    CHECK(net.trainable().size() == total);
    CHECK(net.trainable().size() == Network<float>::trainable_count(c, h, a));
    CHECK(net.running_stats().size() == Network<float>::running_count(c, h));
  }
}

TEST_CASE("zeroed heads give zero value and equal logits") {
  auto net = Network<float>::initialized(8, 12, 20, 0.0, 99);
  for (const char* name : {"policy.weight", "policy.bias", "value.weight", "value.bias"}) {
    auto t = net.tensor(name);
    std::fill(t.begin(), t.end(), 0.0f);
  }
  std::vector<float> plane(kNumSquares, 0.0f);
  Network<float>::Cache cache;
  net.forward(plane, 1, Network<float>::Mode::Eval, nullptr, cache);
  CHECK(net.value(cache, 0) == 0.0f);
  const auto logits = net.policy_logits_full(cache, 0);
  CHECK(logits.size() == 20);
  for (float l : logits) CHECK(l == logits[0]);
}

TEST_CASE("eval forward is deterministic and batch-size independent") {
  auto net = Network<float>::initialized(16, 24, 32, 0.5, 7);
  Rng rng(3);
  const int batch = 5;
  std::vector<float> planes(batch * kNumSquares);
  for (auto& v : planes) v = static_cast<float>(rng.next_double() - 0.5);

  Network<float>::Cache big, again, small;
  net.forward(planes, batch, Network<float>::Mode::Eval, nullptr, big);
  net.forward(planes, batch, Network<float>::Mode::Eval, nullptr, again);
  for (int b = 0; b < batch; ++b) {
    CHECK(net.value(big, b) == net.value(again, b));
    CHECK(net.policy_logits_full(big, b) == net.policy_logits_full(again, b));
  }
  // Single-sample forward reproduces the batched result bitwise.
  for (int b = 0; b < batch; ++b) {
    std::vector<float> one(planes.begin() + b * kNumSquares,
                           planes.begin() + (b + 1) * kNumSquares);
    net.forward(one, 1, Network<float>::Mode::Eval, nullptr, small);
    CHECK(net.value(small, 0) == net.value(big, b));
    CHECK(net.policy_logits_full(small, 0) == net.policy_logits_full(big, b));
  }
}

TEST_CASE("output dimensions are (actions) and (1)") {
  auto net = Network<float>::initialized(4, 6, 664, 0.0, 1);
  std::vector<float> plane(kNumSquares, 0.1f);
  Network<float>::Cache cache;
  net.forward(plane, 1, Network<float>::Mode::Eval, nullptr, cache);
  CHECK(net.policy_logits_full(cache, 0).size() == 664);
  CHECK(std::isfinite(net.value(cache, 0)));
}

TEST_CASE("same seed reproduces initialization, different seed does not") {
  const auto a = Network<float>::initialized(8, 12, 30, 0.3, 42);
  const auto b = Network<float>::initialized(8, 12, 30, 0.3, 42);
  const auto c = Network<float>::initialized(8, 12, 30, 0.3, 43);
  CHECK(a.trainable() == b.trainable());
  CHECK(a.trainable() != c.trainable());
  CHECK(a.running_stats() == b.running_stats());
}

TEST_CASE("fresh networks stay in a sane logit range on real positions") {
  // Default-size network over 100 seeds, evaluated on random playouts.
  Rng pos_rng(1234);
  for (int seed = 0; seed < 100; ++seed) {
    const auto net =
        Network<float>::initialized(64, 128, ActionTable::instance().size(), 0.3, seed);
    const Board b = oracle::random_playout_position(pos_rng, pos_rng.next_index(60));
    const Observation obs = observe(b, b.side_to_move());
    NetEvaluator eval(net);
    const auto out = eval.evaluate(obs.plane, obs.legal);
    CHECK(std::isfinite(out.value));
    for (float l : out.legal_logits) {
      CHECK(std::isfinite(l));
      CHECK(std::abs(l) < 100.0f);
    }
  }
}

TEST_CASE("finite differences confirm backward in eval mode") {
  Rng rng(2025);
  for (int draw = 0; draw < 5; ++draw) {
    auto net = Network<double>::initialized(4, 6, 10, 0.0, 100 + draw);
    // Perturb running stats away from identity so their path is exercised.
    for (auto& v : net.running_stats()) v += 0.05 * (rng.next_double() - 0.3);
    for (auto& v : net.tensor("fc1.bn.beta")) v = rng.next_double() - 0.5;
    for (auto& v : net.tensor("conv3.bn.beta")) v = rng.next_double() - 0.5;
    const Probe p = make_probe(3, 10, rng);
    check_gradients(net, p, Network<double>::Mode::Eval);
  }
}

TEST_CASE("finite differences confirm backward in train mode (batch statistics)") {
  Rng rng(77);
  for (int draw = 0; draw < 3; ++draw) {
    auto net = Network<double>::initialized(4, 6, 10, 0.0, 300 + draw);
    const Probe p = make_probe(4, 10, rng);
    check_gradients(net, p, Network<double>::Mode::Train);
  }
}

TEST_CASE("gradient is zero for heads the loss does not touch, and scales linearly") {
  auto net = Network<double>::initialized(4, 6, 10, 0.0, 5);
  Rng rng(6);
  Probe p = make_probe(3, 10, rng);
  // Value-only loss.
  for (auto& lw : p.logit_weights) lw.clear();
  Network<double>::Cache cache;
  std::vector<double> planes(p.planes.begin(), p.planes.end());
  net.forward(planes, p.batch, Network<double>::Mode::Eval, nullptr, cache);
  std::vector<double> grads;
  net.backward(cache, p.logit_weights, p.value_weights, grads);
  for (const auto& span : net.layout()) {
    if (span.name.rfind("policy.", 0) == 0) {
      for (std::size_t i = span.offset; i < span.offset + span.size; ++i) {
        CHECK(grads[i] == 0.0);
      }
    }
  }
  // Doubling the output gradient doubles every entry.
  std::vector<double> doubled_w = p.value_weights;
  for (auto& v : doubled_w) v *= 2.0;
  std::vector<double> grads2;
  net.backward(cache, p.logit_weights, doubled_w, grads2);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    CHECK(grads2[i] == doctest::Approx(2.0 * grads[i]).epsilon(1e-12));
  }
}

TEST_CASE("train-mode batch norm: normalized activations have mean 0 and variance 1") {
  auto net = Network<float>::initialized(8, 12, 16, 0.0, 11);
  Rng rng(8);
  const int batch = 6;
  std::vector<float> planes(batch * kNumSquares);
  for (auto& v : planes) v = static_cast<float>(rng.next_double() * 2.0 - 1.0);
  Network<float>::Cache cache;
  net.forward(planes, batch, Network<float>::Mode::Train, nullptr, cache);

  auto check_rows = [&](const std::vector<float>& xhat, int rows) {
    const std::size_t cols = xhat.size() / rows;
    for (int r = 0; r < rows; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t j = 0; j < cols; ++j) mean += xhat[r * cols + j];
      mean /= static_cast<double>(cols);
      for (std::size_t j = 0; j < cols; ++j) {
        const double d = xhat[r * cols + j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(cols);
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-5);
    }
  };
  for (int i = 0; i < 4; ++i) check_rows(cache.conv_xhat[i], 8);
  for (int i = 0; i < 2; ++i) check_rows(cache.fc_xhat[i], 12);
}

TEST_CASE("dropout: train mode zeroes units, eval mode applies none") {
  auto net = Network<float>::initialized(4, 64, 8, 0.5, 21);
  Rng rng(9), drop_rng(10);
  const int batch = 4;
  std::vector<float> planes(batch * kNumSquares);
  for (auto& v : planes) v = static_cast<float>(rng.next_double());
  Network<float>::Cache train_cache, eval_cache;
  net.forward(planes, batch, Network<float>::Mode::Train, &drop_rng, train_cache);
  int dropped = 0;
  for (std::size_t i = 0; i < train_cache.drop_mask[0].size(); ++i) {
    dropped += train_cache.drop_mask[0][i] == 0;
  }
  CHECK(dropped > 0);
  net.forward(planes, batch, Network<float>::Mode::Eval, nullptr, eval_cache);
  CHECK(eval_cache.drop_mask[0].empty());
}

TEST_CASE("running stats move toward batch statistics with momentum 0.99") {
  auto net = Network<float>::initialized(4, 6, 8, 0.0, 31);
  Rng rng(12);
  const int batch = 8;
  std::vector<float> planes(batch * kNumSquares);
  for (auto& v : planes) v = static_cast<float>(rng.next_double() * 3.0);
  Network<float>::Cache cache;
  net.forward(planes, batch, Network<float>::Mode::Train, nullptr, cache);
  const auto before = net.running_stats();
  net.commit_running_stats(cache);
  const auto& after = net.running_stats();
  CHECK(before != after);
  // conv1 channel 0 running mean: 0.99 * 0 + 0.01 * batch mean.
  const float expected = 0.99f * 0.0f + 0.01f * cache.conv_mean[0][0];
  CHECK(after[0] == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("checkpoint round-trip is bitwise and metadata survives") {
  auto net = Network<float>::initialized(6, 10, ActionTable::instance().size(), 0.25, 555);
  CheckpointMeta meta = meta_for(net);
  meta.train_steps = 123456;
  meta.color = Color::Black;
  meta.iteration = 7;
  meta.seed = 0xdeadbeefULL;
  meta.epsilon = 0.5;
  meta.phase = "train";
  meta.opponent = "checkpoints/white_006.ckpt";

  const auto dir = std::filesystem::temp_directory_path() / "gardner_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "roundtrip.ckpt";
  save_checkpoint(Checkpoint{meta, net}, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.meta == meta);
  CHECK(loaded.net.trainable() == net.trainable());
  CHECK(loaded.net.running_stats() == net.running_stats());
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading under a mismatched action space is an explicit shape error") {
  auto net = Network<float>::initialized(4, 6, 664, 0.0, 1);
  const auto dir = std::filesystem::temp_directory_path() / "gardner_ckpt_shape";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a664.ckpt";
  save_checkpoint(Checkpoint{meta_for(net), net}, path);
  CHECK_THROWS_WITH_AS(load_checkpoint_checked(path, 700, 4, 6),
                       doctest::Contains("A=664"), std::runtime_error);
  CHECK_NOTHROW(load_checkpoint_checked(path, 664, 4, 6));
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoint files are rejected") {
  const auto dir = std::filesystem::temp_directory_path() / "gardner_ckpt_corrupt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "bad.ckpt";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  // Truncating a valid file must also fail.
  auto net = Network<float>::initialized(4, 6, 10, 0.0, 2);
  save_checkpoint(Checkpoint{meta_for(net), net}, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("optimizers: lr 0 is a no-op, adam moves against the gradient") {
  auto net = Network<float>::initialized(4, 6, 10, 0.0, 71);
  const auto before = net.trainable();
  std::vector<float> grads(before.size(), 0.5f);
  SgdOptimizer sgd{0.0};
  sgd.step(net.trainable(), grads);
  CHECK(net.trainable() == before);
  AdamOptimizer adam;
  adam.lr = 0.0;
  adam.step(net.trainable(), grads);
  CHECK(net.trainable() == before);
  adam.lr = 0.01;
  adam.step(net.trainable(), grads);
  CHECK(net.trainable() != before);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.trainable()[i] < before[i]);
}

TEST_SUITE_END();
