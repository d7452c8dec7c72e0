#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gardner/board.hpp"
#include "gardner/rng.hpp"

namespace gardner {

// Policy/value network with a shared trunk:
//   conv 3x3 (pad 1) -> BN -> ReLU        1 -> C, 5x5 -> 5x5
//   conv 3x3 (pad 1) -> BN -> ReLU        C -> C, 5x5 -> 5x5
//   conv 3x3         -> BN -> ReLU        C -> C, 5x5 -> 3x3
//   conv 3x3         -> BN -> ReLU        C -> C, 3x3 -> 1x1
//   flatten -> FC -> BN -> ReLU -> dropout   C -> H
//              FC -> BN -> ReLU -> dropout   H -> H
//   policy head FC H -> A, value head FC H -> 1
//
// Train mode normalizes with batch statistics and applies dropout; eval mode
// uses running statistics and is a pure function of (params, input). Forward
// never mutates the network: running-stat updates are an explicit commit.
//
// float is the training scalar; the double instantiation exists for
// finite-difference gradient verification.
template <typename T>
class Network {
 public:
  enum class Mode { Train, Eval };

  struct TensorSpan {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  struct Cache {
    int batch = 0;
    Mode mode = Mode::Eval;
    std::vector<T> x0;
    std::array<std::vector<T>, 4> conv_xhat;
    std::array<std::vector<T>, 4> conv_y;
    std::array<std::vector<T>, 4> conv_mean;
    std::array<std::vector<T>, 4> conv_var;
    std::array<std::vector<T>, 2> fc_xhat;
    std::array<std::vector<T>, 2> fc_y;
    std::array<std::vector<T>, 2> fc_mean;
    std::array<std::vector<T>, 2> fc_var;
    std::array<std::vector<std::uint8_t>, 2> drop_mask;
  };

  struct LogitGrad {
    std::uint16_t action = 0;
    T grad = T(0);
  };

  Network(int channels, int hidden, int actions, double dropout);

  // Fan-in-scaled normal weights, identity batch norm, zero biases.
  static Network initialized(int channels, int hidden, int actions, double dropout,
                             std::uint64_t seed);

  int channels() const { return channels_; }
  int hidden() const { return hidden_; }
  int actions() const { return actions_; }
  double dropout_rate() const { return dropout_; }

  std::vector<T>& trainable() { return params_; }
  const std::vector<T>& trainable() const { return params_; }
  std::vector<T>& running_stats() { return running_; }
  const std::vector<T>& running_stats() const { return running_; }

  const std::vector<TensorSpan>& layout() const { return layout_; }
  std::span<T> tensor(const std::string& name);
  std::span<const T> tensor(const std::string& name) const;

  static std::size_t trainable_count(int channels, int hidden, int actions);
  static std::size_t running_count(int channels, int hidden);

  // planes: row-major [batch][25]. Train mode needs batch >= 2 and, when
  // dropout is active, an rng.
  void forward(std::span<const T> planes, int batch, Mode mode, Rng* rng, Cache& cache) const;

  T value(const Cache&, int sample) const;
  void policy_logits(const Cache&, int sample, std::span<const std::uint16_t> actions,
                     std::span<T> out) const;
  std::vector<T> policy_logits_full(const Cache&, int sample) const;

  // Exact gradients of sum_b(dvalue[b]*value_b + sum dlogits.grad*logit) with
  // respect to every trainable parameter; grads is resized and overwritten.
  void backward(const Cache&, std::span<const std::vector<LogitGrad>> dlogits,
                std::span<const T> dvalue, std::vector<T>& grads) const;

  // Folds the batch statistics of a train-mode forward into running stats.
  void commit_running_stats(const Cache&, T momentum = T(0.99));

  bool same_shape(const Network& other) const {
    return channels_ == other.channels_ && hidden_ == other.hidden_ && actions_ == other.actions_;
  }

 private:
  struct ConvDims {
    int in_ch, out_ch, in_w, out_w, pad;
  };

  void build_layout();
  std::span<const T> p(int tensor_index) const;

  int channels_, hidden_, actions_;
  double dropout_;
  std::array<ConvDims, 4> conv_;
  std::vector<T> params_;
  std::vector<T> running_;
  std::vector<TensorSpan> layout_;          // trainable tensors
  std::vector<TensorSpan> running_layout_;  // running-stat tensors
};

using NetworkF = Network<float>;
using NetworkD = Network<double>;

// Single-position evaluation helper that owns its forward cache.
class NetEvaluator {
 public:
  explicit NetEvaluator(const Network<float>& net) : net_(&net) {}

  struct Result {
    double value = 0.0;
    std::vector<float> legal_logits;
  };
  Result evaluate(std::span<const float> plane, std::span<const std::uint16_t> legal);

  const Network<float>& net() const { return *net_; }

 private:
  const Network<float>* net_;
  Network<float>::Cache cache_;
};

// Plain SGD: params -= lr * grads.
struct SgdOptimizer {
  double lr = 0.0;
  void step(std::vector<float>& params, const std::vector<float>& grads);
};

// Adam with bias correction; moments kept in double.
struct AdamOptimizer {
  double lr = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<double> m, v;
  void step(std::vector<float>& params, const std::vector<float>& grads);
};

}  // namespace gardner
