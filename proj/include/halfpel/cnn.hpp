#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halfpel/plane.hpp"
#include "halfpel/training_pair.hpp"

namespace halfpel {

enum class Activation : std::uint8_t { kRelu, kNone };

// Convolution with same-size output: every layer pads its input by
// replicating edge samples.
struct ConvLayer {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  std::vector<double> weights;  // [out][in][kh][kw], row-major
  std::vector<double> bias;     // [out]
  Activation activation = Activation::kRelu;

  static ConvLayer zeros(int out_channels, int in_channels, int kernel_h, int kernel_w, Activation activation);

  std::size_t taps_per_output() const { return static_cast<std::size_t>(in_channels) * kernel_h * kernel_w; }
  std::size_t weight_count() const { return static_cast<std::size_t>(out_channels) * taps_per_output(); }
  double& weight(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }
  double weight(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel_h + ky) * kernel_w + kx];
  }

  friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

// Layer geometry of the three-layer interpolation network. The standard
// model is 9x9 feature extraction into 64 maps, 1x1 mapping to 32 maps and a
// 5x5 reconstruction to a single output plane.
struct NetworkShape {
  int features1 = 64;
  int features2 = 32;
  int kernel1 = 9;
  int kernel2 = 1;
  int kernel3 = 5;

  static NetworkShape standard() { return {}; }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct Network {
  std::array<ConvLayer, 3> layers;
  Position position = Position::kH;
  int qp = 22;  // 0 for networks not tied to a QP (super-resolution anchors)

  NetworkShape shape() const;
  std::size_t parameter_count() const;
  friend bool operator==(const Network&, const Network&) = default;
};

// Throws ConfigError unless layers chain 1 -> f1 -> f2 -> 1 with odd kernels,
// ReLU on the first two layers and a linear last layer.
void validate_network(const Network& net);

// Weights ~ N(0, init_std^2), biases zero. Draw order: layer 1, 2, 3.
Network init_network(const NetworkShape& shape, Position position, int qp, double init_std, std::uint64_t seed);
Network zero_network(const NetworkShape& shape, Position position, int qp);

// Raw network evaluation on whatever scale the caller feeds. Output has the
// input's dimensions. Independent of `threads`: the row partition is fixed.
Plane forward(const Network& net, const Plane& input, unsigned threads = 1);

// Mean squared error over the samples of one item.
double loss(const Plane& output, const Plane& label);

// Same layout as the network's parameters.
struct Gradients {
  std::array<std::vector<double>, 3> weights;
  std::array<std::vector<double>, 3> bias;

  static Gradients zeros_like(const Network& net);
  void add_scaled(const Gradients& other, double scale);
};

// Analytic gradients of loss(forward(net, input), label).
Gradients backward(const Network& net, const Plane& input, const Plane& label, double* loss_out = nullptr);

struct Hyperparams {
  double lr_front = 1e-4;  // layers 1-2
  double lr_last = 1e-5;   // layer 3
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 100;
  std::uint64_t seed = 1;
  double init_std = 1e-3;

  void validate() const;
};

struct MomentumState {
  Gradients velocity;
  static MomentumState zeros_like(const Network& net) { return {Gradients::zeros_like(net)}; }
};

// v <- momentum * v - lr * g; theta <- theta + v.
void sgd_step(Network& net, const Gradients& grads, MomentumState& state, const Hyperparams& hp);

// Per-epoch mean losses on the 0..255 sample scale.
struct LossCurve {
  std::vector<double> train;
  std::vector<double> validation;
};

struct TrainResult {
  Network net;
  LossCurve curve;
};

struct TrainOptions {
  NetworkShape shape = NetworkShape::standard();
  unsigned threads = 1;
  bool log_progress = false;
  // Warm start from these parameters instead of a fresh init_network(); the
  // result is retagged with the training set's position and QP.
  std::optional<Network> initial{};
};

// Mini-batch SGD over `train_set`. Pairs are divided by 255 before entering
// the network. Every pair (training and validation) must carry the same
// position and QP tags. Shuffling depends only on hp.seed.
TrainResult train(std::span<const TrainingPair> train_set, std::span<const TrainingPair> validation_set,
                  const Hyperparams& hp, const TrainOptions& options = {});

// Mean loss of the network over a set of pairs, 0..255 scale.
double evaluate_loss(const Network& net, std::span<const TrainingPair> pairs, unsigned threads = 1);

// Applies a trained network to a 0..255 plane: normalize, forward, rescale,
// clip to [0, 255].
Plane apply_network(const Network& net, const Plane& plane, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Weight files
// ---------------------------------------------------------------------------
//
//   "CNIF"            4 bytes
//   version           u16 (currently 1)
//   position          u8  (0=h, 1=v, 2=d, 3=sr)
//   qp                u8
//   3 x layer:        out, in, kh, kw as u32, then weights, then biases as
//                     little-endian IEEE-754 doubles
//
// All integers little-endian.

inline constexpr std::uint16_t kWeightFormatVersion = 1;

struct LoadOptions {
  std::optional<Position> expected_position;
  std::optional<int> expected_qp;
  bool require_standard_shape = true;
};

std::string serialize_network(const Network& net);
Network deserialize_network(std::string_view bytes, const LoadOptions& options = {});
void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path, const LoadOptions& options = {});

}  // namespace halfpel
