#include "halfpel/cnn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "halfpel/util.hpp"

namespace halfpel {

namespace {

// Feature maps are channels x pixels, column-major, so one pixel's channel
// vector is contiguous.
using Mat = Eigen::MatrixXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeightMap = Eigen::Map<const RowMajorMat>;
using WeightMap = Eigen::Map<RowMajorMat>;

// Upper bound on doubles held by one im2col strip during inference.
constexpr std::size_t kStripBudget = std::size_t{1} << 21;

bool is_pointwise(const ConvLayer& l) { return l.kernel_h == 1 && l.kernel_w == 1; }

ConstWeightMap weight_matrix(const ConvLayer& l) {
  return ConstWeightMap(l.weights.data(), l.out_channels, static_cast<Eigen::Index>(l.taps_per_output()));
}

// Gathers the receptive fields of rows [row_begin, row_end) into columns.
// Row r of the result is tap (c, ky, kx) with r = (c * kh + ky) * kw + kx.
void im2col(const Mat& in, int width, int height, const ConvLayer& l, int row_begin, int row_end, Mat& col) {
  const int kh = l.kernel_h, kw = l.kernel_w, rh = kh / 2, rw = kw / 2;
  const int channels = l.in_channels;
  col.resize(static_cast<Eigen::Index>(l.taps_per_output()), static_cast<Eigen::Index>(row_end - row_begin) * width);
  const double* src = in.data();
  for (int y = row_begin; y < row_end; ++y) {
    for (int x = 0; x < width; ++x) {
      double* dst = col.col(static_cast<Eigen::Index>(y - row_begin) * width + x).data();
      for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
          const int yy = std::clamp(y + ky - rh, 0, height - 1);
          for (int kx = 0; kx < kw; ++kx) {
            const int xx = std::clamp(x + kx - rw, 0, width - 1);
            *dst++ = src[(static_cast<std::size_t>(yy) * width + xx) * channels + c];
          }
        }
      }
    }
  }
}

// Adjoint of im2col over the whole map.
Mat col2im(const Mat& col, int width, int height, const ConvLayer& l) {
  const int kh = l.kernel_h, kw = l.kernel_w, rh = kh / 2, rw = kw / 2;
  const int channels = l.in_channels;
  Mat out = Mat::Zero(channels, static_cast<Eigen::Index>(width) * height);
  double* dst = out.data();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double* src = col.col(static_cast<Eigen::Index>(y) * width + x).data();
      for (int c = 0; c < channels; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
          const int yy = std::clamp(y + ky - rh, 0, height - 1);
          for (int kx = 0; kx < kw; ++kx) {
            const int xx = std::clamp(x + kx - rw, 0, width - 1);
            dst[(static_cast<std::size_t>(yy) * width + xx) * channels + c] += *src++;
          }
        }
      }
    }
  }
  return out;
}

void apply_activation(Eigen::Ref<Mat> z, Activation a) {
  if (a == Activation::kRelu) z = z.cwiseMax(0.0);
}

Mat plane_to_row(const Plane& p, double scale = 1.0) {
  Mat m(1, static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = p.samples()[i] * scale;
  return m;
}

Plane row_to_plane(const Mat& m, int width, int height, double scale = 1.0) {
  Plane p(width, height);
  for (std::size_t i = 0; i < p.size(); ++i) p.samples()[i] = m(0, static_cast<Eigen::Index>(i)) * scale;
  return p;
}

Mat conv_layer_forward(const ConvLayer& l, const Mat& in, int width, int height, unsigned threads) {
  const Eigen::Index pixels = static_cast<Eigen::Index>(width) * height;
  Mat out(l.out_channels, pixels);
  const ConstWeightMap w = weight_matrix(l);
  const Eigen::Map<const Eigen::VectorXd> b(l.bias.data(), l.out_channels);
  const std::size_t per_row = l.taps_per_output() * static_cast<std::size_t>(width);
  const int rows_per_strip = static_cast<int>(std::max<std::size_t>(1, kStripBudget / std::max<std::size_t>(per_row, 1)));
  const int strips = (height + rows_per_strip - 1) / rows_per_strip;
  parallel_for(static_cast<std::size_t>(strips), threads, [&](std::size_t s) {
    const int r0 = static_cast<int>(s) * rows_per_strip;
    const int r1 = std::min(height, r0 + rows_per_strip);
    const Eigen::Index c0 = static_cast<Eigen::Index>(r0) * width;
    const Eigen::Index n = static_cast<Eigen::Index>(r1 - r0) * width;
    auto dst = out.middleCols(c0, n);
    if (is_pointwise(l)) {
      dst.noalias() = w * in.middleCols(c0, n);
    } else {
      Mat col;
      im2col(in, width, height, l, r0, r1, col);
      dst.noalias() = w * col;
    }
    dst.colwise() += b;
    apply_activation(dst, l.activation);
  });
  return out;
}

}  // namespace

ConvLayer ConvLayer::zeros(int out_channels, int in_channels, int kernel_h, int kernel_w, Activation activation) {
  ConvLayer l;
  l.out_channels = out_channels;
  l.in_channels = in_channels;
  l.kernel_h = kernel_h;
  l.kernel_w = kernel_w;
  l.activation = activation;
  if (out_channels < 1 || in_channels < 1 || kernel_h < 1 || kernel_w < 1) {
    throw ConfigError("conv layer dimensions must be positive");
  }
  l.weights.assign(l.weight_count(), 0.0);
  l.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  return l;
}

NetworkShape Network::shape() const {
  return {layers[0].out_channels, layers[1].out_channels, layers[0].kernel_h, layers[1].kernel_h, layers[2].kernel_h};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void validate_network(const Network& net) {
  static constexpr Activation kExpected[] = {Activation::kRelu, Activation::kRelu, Activation::kNone};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const ConvLayer& l = net.layers[i];
    const std::string name = "layer " + std::to_string(i + 1);
    if (l.out_channels < 1 || l.in_channels < 1 || l.kernel_h < 1 || l.kernel_w < 1) {
      throw ConfigError(name + ": dimensions must be positive");
    }
    if (l.kernel_h % 2 == 0 || l.kernel_w % 2 == 0) throw ConfigError(name + ": kernel extents must be odd");
    if (l.weights.size() != l.weight_count()) throw ConfigError(name + ": weight count does not match shape");
    if (l.bias.size() != static_cast<std::size_t>(l.out_channels)) throw ConfigError(name + ": bias length != out channels");
    if (l.activation != kExpected[i]) throw ConfigError(name + ": unexpected activation");
    const int expected_in = i == 0 ? 1 : net.layers[i - 1].out_channels;
    if (l.in_channels != expected_in) throw ConfigError(name + ": input channels do not chain");
  }
  if (net.layers[2].out_channels != 1) throw ConfigError("layer 3 must produce one output plane");
}

Network zero_network(const NetworkShape& s, Position position, int qp) {
  Network net;
  net.layers[0] = ConvLayer::zeros(s.features1, 1, s.kernel1, s.kernel1, Activation::kRelu);
  net.layers[1] = ConvLayer::zeros(s.features2, s.features1, s.kernel2, s.kernel2, Activation::kRelu);
  net.layers[2] = ConvLayer::zeros(1, s.features2, s.kernel3, s.kernel3, Activation::kNone);
  net.position = position;
  net.qp = qp;
  validate_network(net);
  return net;
}

Network init_network(const NetworkShape& shape, Position position, int qp, double init_std, std::uint64_t seed) {
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
  Network net = zero_network(shape, position, qp);
  Rng rng(seed);
  for (auto& l : net.layers) {
    for (double& w : l.weights) w = init_std * rng.normal();
  }
  return net;
}

Plane forward(const Network& net, const Plane& input, unsigned threads) {
  validate_network(net);
  int extent = 1;
  for (const auto& l : net.layers) extent = std::max({extent, l.kernel_h, l.kernel_w});
  if (input.width() < extent || input.height() < extent) {
    throw PreconditionError("forward: input " + std::to_string(input.width()) + "x" + std::to_string(input.height()) +
                            " smaller than kernel extent " + std::to_string(extent));
  }
  Mat act = plane_to_row(input);
  for (const auto& l : net.layers) act = conv_layer_forward(l, act, input.width(), input.height(), threads);
  return row_to_plane(act, input.width(), input.height());
}

double loss(const Plane& output, const Plane& label) {
  if (!output.same_shape(label)) throw PreconditionError("loss: dimension mismatch");
  double acc = 0.0;
  auto o = output.samples();
  auto l = label.samples();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double d = o[i] - l[i];
    acc += d * d;
  }
  return acc / static_cast<double>(o.size());
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (std::size_t i = 0; i < 3; ++i) {
    g.weights[i].assign(net.layers[i].weights.size(), 0.0);
    g.bias[i].assign(net.layers[i].bias.size(), 0.0);
  }
  return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < weights[i].size(); ++k) weights[i][k] += scale * other.weights[i][k];
    for (std::size_t k = 0; k < bias[i].size(); ++k) bias[i][k] += scale * other.bias[i][k];
  }
}

Gradients backward(const Network& net, const Plane& input, const Plane& label, double* loss_out) {
  validate_network(net);
  if (!input.same_shape(label)) throw PreconditionError("backward: input and label dimensions differ");
  const int width = input.width(), height = input.height();
  const Eigen::Index pixels = static_cast<Eigen::Index>(input.size());

  // Forward pass, keeping every layer input and its gathered columns.
  std::array<Mat, 4> acts;
  std::array<Mat, 3> cols;
  acts[0] = plane_to_row(input);
  for (std::size_t i = 0; i < 3; ++i) {
    const ConvLayer& l = net.layers[i];
    if (!is_pointwise(l)) im2col(acts[i], width, height, l, 0, height, cols[i]);
    const Mat& x = is_pointwise(l) ? acts[i] : cols[i];
    Mat z = weight_matrix(l) * x;
    z.colwise() += Eigen::Map<const Eigen::VectorXd>(l.bias.data(), l.out_channels);
    apply_activation(z, l.activation);
    acts[i + 1] = std::move(z);
  }

  const Mat residual = acts[3] - plane_to_row(label);
  if (loss_out != nullptr) *loss_out = residual.squaredNorm() / static_cast<double>(pixels);

  Gradients g = Gradients::zeros_like(net);
  Mat delta = residual * (2.0 / static_cast<double>(pixels));
  for (int i = 2; i >= 0; --i) {
    const ConvLayer& l = net.layers[static_cast<std::size_t>(i)];
    // ReLU'(z) is 1 for z > 0 and 0 otherwise, including z == 0.
    if (l.activation == Activation::kRelu) delta.array() *= (acts[static_cast<std::size_t>(i) + 1].array() > 0.0).cast<double>();
    const Mat& x = is_pointwise(l) ? acts[static_cast<std::size_t>(i)] : cols[static_cast<std::size_t>(i)];
    WeightMap(g.weights[static_cast<std::size_t>(i)].data(), l.out_channels, static_cast<Eigen::Index>(l.taps_per_output())).noalias() =
        delta * x.transpose();
    Eigen::Map<Eigen::VectorXd>(g.bias[static_cast<std::size_t>(i)].data(), l.out_channels) = delta.rowwise().sum();
    if (i == 0) break;
    Mat dcol = weight_matrix(l).transpose() * delta;
    delta = is_pointwise(l) ? std::move(dcol) : col2im(dcol, width, height, l);
  }
  return g;
}

void Hyperparams::validate() const {
  if (!(lr_front > 0.0) || !(lr_last > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

void sgd_step(Network& net, const Gradients& grads, MomentumState& state, const Hyperparams& hp) {
  for (std::size_t i = 0; i < 3; ++i) {
    const double lr = i == 2 ? hp.lr_last : hp.lr_front;
    auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& v) {
      if (theta.size() != g.size() || theta.size() != v.size()) throw PreconditionError("sgd_step: shape mismatch");
      for (std::size_t k = 0; k < theta.size(); ++k) {
        v[k] = hp.momentum * v[k] - lr * g[k];
        theta[k] += v[k];
      }
    };
    update(net.layers[i].weights, grads.weights[i], state.velocity.weights[i]);
    update(net.layers[i].bias, grads.bias[i], state.velocity.bias[i]);
  }
}

namespace {

constexpr double kSampleScale = Plane::kMaxValue;

Plane normalized(const Plane& p) {
  Plane out = p;
  for (double& v : out.samples()) v /= kSampleScale;
  return out;
}

void check_tags(std::span<const TrainingPair> pairs, Position position, int qp) {
  for (const auto& p : pairs) {
    if (p.position != position || p.qp != qp) {
      throw PreconditionError("training set mixes position/qp tags (" + std::string(to_string(p.position)) + "/" +
                              std::to_string(p.qp) + " vs " + std::string(to_string(position)) + "/" + std::to_string(qp) + ")");
    }
    if (!p.input.same_shape(p.label)) throw PreconditionError("training pair input/label dimensions differ");
  }
}

}  // namespace

double evaluate_loss(const Network& net, std::span<const TrainingPair> pairs, unsigned threads) {
  if (pairs.empty()) return 0.0;
  std::vector<double> losses(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    losses[i] = loss(forward(net, normalized(pairs[i].input)), normalized(pairs[i].label));
  });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(pairs.size()) * kSampleScale * kSampleScale;
}

TrainResult train(std::span<const TrainingPair> train_set, std::span<const TrainingPair> validation_set,
                  const Hyperparams& hp, const TrainOptions& options) {
  if (train_set.empty()) throw PreconditionError("train: empty dataset");
  hp.validate();
  const Position position = train_set.front().position;
  const int qp = train_set.front().qp;
  check_tags(train_set, position, qp);
  check_tags(validation_set, position, qp);

  std::vector<Plane> inputs, labels;
  inputs.reserve(train_set.size());
  labels.reserve(train_set.size());
  for (const auto& p : train_set) {
    inputs.push_back(normalized(p.input));
    labels.push_back(normalized(p.label));
  }

  TrainResult result{options.initial ? *options.initial : init_network(options.shape, position, qp, hp.init_std, hp.seed), {}};
  Network& net = result.net;
  if (options.initial) {
    validate_network(net);
    net.position = position;
    net.qp = qp;
  }
  MomentumState state = MomentumState::zeros_like(net);
  // Separate stream from initialization so changing epochs never alters init.
  Rng order_rng(hp.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(train_set.size());
  const std::size_t batch = static_cast<std::size_t>(hp.batch_size);
  std::vector<Gradients> item_grads(std::min(batch, order.size()));
  std::vector<double> item_loss(item_grads.size());

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t m = std::min(batch, order.size() - start);
      parallel_for(m, options.threads, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        item_grads[k] = backward(net, inputs[idx], labels[idx], &item_loss[k]);
      });
      // Reduce in item order so the sum is independent of thread count.
      Gradients total = Gradients::zeros_like(net);
      for (std::size_t k = 0; k < m; ++k) {
        total.add_scaled(item_grads[k], 1.0 / static_cast<double>(m));
        epoch_loss += item_loss[k];
      }
      sgd_step(net, total, state, hp);
    }
    const double train_loss = epoch_loss / static_cast<double>(order.size()) * kSampleScale * kSampleScale;
    result.curve.train.push_back(train_loss);
    if (!validation_set.empty()) result.curve.validation.push_back(evaluate_loss(net, validation_set, options.threads));
    if (options.log_progress) {
      log(LogLevel::kInfo, "epoch " + std::to_string(epoch + 1) + "/" + std::to_string(hp.epochs) + " train " +
                               std::to_string(train_loss) +
                               (validation_set.empty() ? "" : " val " + std::to_string(result.curve.validation.back())));
    }
  }
  return result;
}

Plane apply_network(const Network& net, const Plane& plane, unsigned threads) {
  Plane out = forward(net, normalized(plane), threads);
  for (double& v : out.samples()) v = clip_sample(v * kSampleScale);
  return out;
}

std::string serialize_network(const Network& net) {
  validate_network(net);
  ByteWriter w;
  w.raw("CNIF");
  w.u16(kWeightFormatVersion);
  w.u8(static_cast<std::uint8_t>(net.position));
  w.u8(static_cast<std::uint8_t>(net.qp));
  for (const auto& l : net.layers) {
    w.u32(static_cast<std::uint32_t>(l.out_channels));
    w.u32(static_cast<std::uint32_t>(l.in_channels));
    w.u32(static_cast<std::uint32_t>(l.kernel_h));
    w.u32(static_cast<std::uint32_t>(l.kernel_w));
    for (double v : l.weights) w.f64(v);
    for (double v : l.bias) w.f64(v);
  }
  return w.bytes();
}

Network deserialize_network(std::string_view bytes, const LoadOptions& options) {
  ByteReader r(bytes);
  if (!r.has(4) || r.raw(4) != "CNIF") throw FormatError(FormatErrorKind::kBadMagic, "weight file: bad magic (expected CNIF)");
  if (!r.has(4)) throw FormatError(FormatErrorKind::kPayloadSize, "weight file: truncated header");
  const std::uint16_t version = r.u16();
  if (version != kWeightFormatVersion) {
    throw FormatError(FormatErrorKind::kBadVersion, "weight file: unsupported version " + std::to_string(version));
  }
  const std::uint8_t tag = r.u8();
  if (tag > static_cast<std::uint8_t>(Position::kSr)) {
    throw FormatError(FormatErrorKind::kTagMismatch, "weight file: invalid position tag " + std::to_string(tag));
  }
  Network net;
  net.position = static_cast<Position>(tag);
  net.qp = r.u8();
  if (options.expected_position && *options.expected_position != net.position) {
    throw FormatError(FormatErrorKind::kTagMismatch, "weight file is for position " + std::string(to_string(net.position)) +
                                                         ", expected " + std::string(to_string(*options.expected_position)));
  }
  if (options.expected_qp && *options.expected_qp != net.qp) {
    throw FormatError(FormatErrorKind::kTagMismatch,
                      "weight file is for qp " + std::to_string(net.qp) + ", expected " + std::to_string(*options.expected_qp));
  }
  static constexpr Activation kActivations[] = {Activation::kRelu, Activation::kRelu, Activation::kNone};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!r.has(16)) throw FormatError(FormatErrorKind::kPayloadSize, "weight file: truncated layer header");
    std::uint32_t dims[4];
    for (auto& d : dims) d = r.u32();
    for (auto d : dims) {
      if (d == 0 || d > 4096) throw FormatError(FormatErrorKind::kShapeMismatch, "weight file: implausible layer dimension");
    }
    ConvLayer l = ConvLayer::zeros(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]),
                                   static_cast<int>(dims[3]), kActivations[i]);
    if (r.remaining() / 8 < l.weights.size() + l.bias.size()) {
      throw FormatError(FormatErrorKind::kPayloadSize, "weight file: truncated payload in layer " + std::to_string(i + 1));
    }
    for (double& v : l.weights) v = r.f64();
    for (double& v : l.bias) v = r.f64();
    net.layers[i] = std::move(l);
  }
  if (r.remaining() != 0) throw FormatError(FormatErrorKind::kPayloadSize, "weight file: trailing bytes after payload");
  try {
    validate_network(net);
  } catch (const ConfigError& e) {
    throw FormatError(FormatErrorKind::kShapeMismatch, std::string("weight file: ") + e.what());
  }
  if (options.require_standard_shape && (net.shape() != NetworkShape::standard() || net.layers[0].kernel_w != 9 ||
                                         net.layers[1].kernel_w != 1 || net.layers[2].kernel_w != 5)) {
    throw FormatError(FormatErrorKind::kShapeMismatch, "weight file: layer shapes differ from the 64x9x9 / 32x1x1 / 1x5x5 model");
  }
  return net;
}

void save_weights(const Network& net, const std::filesystem::path& path) { write_file_bytes(path, serialize_network(net)); }

Network load_weights(const std::filesystem::path& path, const LoadOptions& options) {
  return deserialize_network(read_file_bytes(path), options);
}

}  // namespace halfpel
