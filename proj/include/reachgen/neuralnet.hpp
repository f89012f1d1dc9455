#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reachgen/errors.hpp"
#include "reachgen/io_util.hpp"
#include "reachgen/rng.hpp"
#include "reachgen/types.hpp"

namespace reachgen {

// Dense feedforward net, sigmoid on every layer output. Rows of a data
// matrix are samples.
struct Layer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
};

struct Network {
  std::vector<Layer> layers;

  int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().W.rows()); }

  std::vector<int> dims() const {
    std::vector<int> d{input_dim()};
    for (const auto& l : layers) d.push_back(static_cast<int>(l.W.rows()));
    return d;
  }
};

struct TrainConfig {
  int batch_size = 100;
  int cg_iters_per_batch = 3;
  int epochs = 100;
  std::uint64_t seed = 0;
  double eps_clamp = 1e-12;

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    if (batch_size < 1) errs.push_back("batch_size must be >= 1");
    if (cg_iters_per_batch < 1)
      errs.push_back("cg_iters_per_batch must be >= 1");
    if (epochs < 0) errs.push_back("epochs must be >= 0");
    if (!(eps_clamp > 0.0 && eps_clamp <= 1e-6))
      errs.push_back("eps_clamp must be in (0, 1e-6]");
    return errs;
  }
};

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return 1.0 / (1.0 + (-z.array()).exp());
}

// Sigmoid-scaled uniform init, biases zero.
inline Network init_network(const std::vector<int>& dims, std::uint64_t seed) {
  Network net;
  RngStream rng(seed, 0x6e657477ULL);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    int in = dims[l], out = dims[l + 1];
    double bound = 4.0 * std::sqrt(6.0 / (in + out));
    layer.W.resize(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j)
        layer.W(i, j) = rng.uniform(-bound, bound);
    layer.b = Eigen::VectorXd::Zero(out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& X) {
  if (X.cols() != net.input_dim())
    throw DimensionMismatch("forward: input has " + std::to_string(X.cols()) +
                            " columns, net expects " +
                            std::to_string(net.input_dim()));
  Eigen::MatrixXd a = X;
  for (const auto& l : net.layers)
    a = sigmoid((a * l.W.transpose()).rowwise() + l.b.transpose());
  return a;
}

// Cross-entropy summed over dimensions, averaged over batch rows.
inline double cross_entropy(const Eigen::MatrixXd& pred,
                            const Eigen::MatrixXd& target,
                            double eps_clamp = 1e-12) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw DimensionMismatch("cross_entropy: shape mismatch");
  auto y = pred.array().max(eps_clamp).min(1.0 - eps_clamp);
  auto t = target.array();
  double sum = -(t * y.log() + (1.0 - t) * (1.0 - y).log()).sum();
  return sum / static_cast<double>(pred.rows());
}

// Exact backprop gradients of cross_entropy(forward(net, X), T).
inline std::vector<Layer> gradient(const Network& net, const Eigen::MatrixXd& X,
                                   const Eigen::MatrixXd& T) {
  if (T.cols() != net.output_dim() || T.rows() != X.rows())
    throw DimensionMismatch("gradient: target shape mismatch");
  std::size_t L = net.layers.size();
  std::vector<Eigen::MatrixXd> acts(L + 1);
  acts[0] = X;
  for (std::size_t l = 0; l < L; ++l)
    acts[l + 1] = sigmoid((acts[l] * net.layers[l].W.transpose()).rowwise() +
                          net.layers[l].b.transpose());

  std::vector<Layer> grads(L);
  double inv_n = 1.0 / static_cast<double>(X.rows());
  // sigmoid/cross-entropy cancellation at the output layer
  Eigen::MatrixXd delta = (acts[L] - T) * inv_n;
  for (std::size_t l = L; l-- > 0;) {
    grads[l].W = delta.transpose() * acts[l];
    grads[l].b = delta.colwise().sum().transpose();
    if (l > 0)
      delta = (delta * net.layers[l].W).array() *
              (acts[l].array() * (1.0 - acts[l].array()));
  }
  return grads;
}

namespace detail {

inline Eigen::VectorXd flatten_params(const Network& net) {
  std::ptrdiff_t n = 0;
  for (const auto& l : net.layers) n += l.W.size() + l.b.size();
  Eigen::VectorXd v(n);
  std::ptrdiff_t off = 0;
  for (const auto& l : net.layers) {
    std::memcpy(v.data() + off, l.W.data(), sizeof(double) * l.W.size());
    off += l.W.size();
    std::memcpy(v.data() + off, l.b.data(), sizeof(double) * l.b.size());
    off += l.b.size();
  }
  return v;
}

inline Eigen::VectorXd flatten_grads(const std::vector<Layer>& grads) {
  std::ptrdiff_t n = 0;
  for (const auto& l : grads) n += l.W.size() + l.b.size();
  Eigen::VectorXd v(n);
  std::ptrdiff_t off = 0;
  for (const auto& l : grads) {
    std::memcpy(v.data() + off, l.W.data(), sizeof(double) * l.W.size());
    off += l.W.size();
    std::memcpy(v.data() + off, l.b.data(), sizeof(double) * l.b.size());
    off += l.b.size();
  }
  return v;
}

inline void unflatten_params(const Eigen::VectorXd& v, Network& net) {
  std::ptrdiff_t off = 0;
  for (auto& l : net.layers) {
    std::memcpy(l.W.data(), v.data() + off, sizeof(double) * l.W.size());
    off += l.W.size();
    std::memcpy(l.b.data(), v.data() + off, sizeof(double) * l.b.size());
    off += l.b.size();
  }
}

}  // namespace detail

struct TrainResult {
  Network net;
  std::vector<double> loss_curve;  // full-dataset loss per epoch
};

// Mini-batch nonlinear conjugate gradient (Polak-Ribiere+ with periodic
// restarts, Armijo backtracking line search). The CG direction is reset at
// every batch boundary. Returns the parameters with the best full-dataset
// loss seen at epoch granularity, so the final loss never exceeds the
// initial one.
inline TrainResult cg_train(const Network& start, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& T, const TrainConfig& cfg) {
  if (X.rows() == 0) throw DimensionMismatch("cg_train: empty data");
  Network net = start;
  TrainResult result;
  result.net = start;

  double best_loss = cross_entropy(forward(net, X), T, cfg.eps_clamp);
  if (!std::isfinite(best_loss))
    throw NonFiniteLoss("cg_train: initial loss not finite");

  RngStream shuffle_rng(cfg.seed, 0x73687566ULL);
  std::vector<int> order(X.rows());
  std::iota(order.begin(), order.end(), 0);

  const int n = static_cast<int>(X.rows());
  const int bs = std::min(cfg.batch_size, n);
  double alpha_init = 1e-2;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own stream so shuffles are reproducible
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }

    for (int b0 = 0; b0 < n; b0 += bs) {
      int rows = std::min(bs, n - b0);
      Eigen::MatrixXd Xb(rows, X.cols()), Tb(rows, T.cols());
      for (int r = 0; r < rows; ++r) {
        Xb.row(r) = X.row(order[b0 + r]);
        Tb.row(r) = T.row(order[b0 + r]);
      }

      Eigen::VectorXd params = detail::flatten_params(net);
      Eigen::VectorXd g = detail::flatten_grads(gradient(net, Xb, Tb));
      Eigen::VectorXd d = -g;
      double fcur = cross_entropy(forward(net, Xb), Tb, cfg.eps_clamp);

      for (int it = 0; it < cfg.cg_iters_per_batch; ++it) {
        double gd = g.dot(d);
        if (gd >= 0.0) {  // not a descent direction, restart
          d = -g;
          gd = g.dot(d);
        }
        double alpha = alpha_init;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
          Eigen::VectorXd cand = params + alpha * d;
          detail::unflatten_params(cand, net);
          double f = cross_entropy(forward(net, Xb), Tb, cfg.eps_clamp);
          if (std::isfinite(f) && f <= fcur + 1e-4 * alpha * gd) {
            params = std::move(cand);
            fcur = f;
            alpha_init = std::min(1e2, alpha * 2.0);
            moved = true;
            break;
          }
        }
        if (!moved) {
          detail::unflatten_params(params, net);
          break;
        }
        if (it + 1 == cfg.cg_iters_per_batch) break;
        Eigen::VectorXd g_new = detail::flatten_grads(gradient(net, Xb, Tb));
        double beta = g_new.dot(g_new - g) / g.dot(g);
        if (beta <= 0.0 || (it + 1) % 10 == 0)
          d = -g_new;
        else
          d = -g_new + beta * d;
        g = std::move(g_new);
      }
      detail::unflatten_params(params, net);
    }

    double full = cross_entropy(forward(net, X), T, cfg.eps_clamp);
    if (!std::isfinite(full))
      throw NonFiniteLoss("cg_train: loss diverged at epoch " +
                          std::to_string(epoch));
    result.loss_curve.push_back(full);
    if (full < best_loss) {
      best_loss = full;
      result.net = net;
    }
  }
  return result;
}

struct PretrainConfig {
  TrainConfig stage;     // per-stage shallow autoencoder training
  TrainConfig finetune;  // full-stack reconstruction fine-tuning
};

// Greedy layer-wise autoencoder pretraining followed by full-stack
// fine-tuning. dims lists the encoder sizes, e.g. {300, 150, 50, 4}; the
// returned net mirrors them into a 300-150-50-4-50-150-300 stack.
inline Network pretrain_autoencoder(const Eigen::MatrixXd& trajs,
                                    const std::vector<int>& dims,
                                    const PretrainConfig& cfg) {
  if (trajs.rows() < 1) throw DimensionMismatch("pretrain: empty data");
  std::size_t stages = dims.size() - 1;
  std::vector<Layer> enc(stages), dec(stages);
  Eigen::MatrixXd codes = trajs;
  for (std::size_t k = 0; k < stages; ++k) {
    TrainConfig stage_cfg = cfg.stage;
    stage_cfg.seed = cfg.stage.seed + 1000 * (k + 1);
    Network shallow = init_network({dims[k], dims[k + 1], dims[k]},
                                   stage_cfg.seed);
    auto trained = cg_train(shallow, codes, codes, stage_cfg);
    enc[k] = trained.net.layers[0];
    dec[k] = trained.net.layers[1];
    codes = sigmoid((codes * enc[k].W.transpose()).rowwise() +
                    enc[k].b.transpose());
  }

  Network stacked;
  for (std::size_t k = 0; k < stages; ++k) stacked.layers.push_back(enc[k]);
  for (std::size_t k = stages; k-- > 0;) stacked.layers.push_back(dec[k]);

  return cg_train(stacked, trajs, trajs, cfg.finetune).net;
}

// Pulls the decoder half out of the pretrained stack and retrains it on
// normalized reach endpoints. The pretrained code->hidden layer is reused
// directly as the decoder's first layer.
inline TrainResult train_decoder(const Network& pretrained,
                                 const Eigen::MatrixXd& pairs,
                                 const Eigen::MatrixXd& trajs,
                                 const TrainConfig& cfg) {
  std::size_t L = pretrained.layers.size();
  if (L % 2 != 0 || L < 2)
    throw DimensionMismatch("train_decoder: pretrained net is not a "
                            "symmetric autoencoder stack");
  Network decoder;
  for (std::size_t l = L / 2; l < L; ++l)
    decoder.layers.push_back(pretrained.layers[l]);
  if (pairs.cols() != decoder.input_dim())
    throw DimensionMismatch("train_decoder: endpoint dimensionality does not "
                            "match decoder input");
  return cg_train(decoder, pairs, trajs, cfg);
}

// Affine map taking hand coordinates into [0,1] for the decoder input.
struct InputNorm {
  Vec2 lo{-0.35, 0.15};
  Vec2 hi{0.35, 0.55};

  Eigen::Vector4d encode(const ReachPair& pair) const {
    Eigen::Vector4d v;
    v(0) = (pair.start(0) - lo(0)) / (hi(0) - lo(0));
    v(1) = (pair.start(1) - lo(1)) / (hi(1) - lo(1));
    v(2) = (pair.end(0) - lo(0)) / (hi(0) - lo(0));
    v(3) = (pair.end(1) - lo(1)) / (hi(1) - lo(1));
    return v;
  }
};

inline ActivationTrajectory predict(const Network& decoder,
                                    const ReachPair& pair,
                                    const InputNorm& norm = {}) {
  if (decoder.input_dim() != 4 ||
      decoder.output_dim() != kNumSteps * kNumMuscles)
    throw DimensionMismatch("predict: decoder must map 4 -> 300");
  Eigen::MatrixXd out = forward(decoder, norm.encode(pair).transpose());
  ActivationTrajectory traj;
  for (int t = 0; t < kNumSteps; ++t)
    for (int m = 0; m < kNumMuscles; ++m)
      traj(t, m) = out(0, t * kNumMuscles + m);
  return traj;
}

// Versioned binary weights container: magic 'RGNN', u32 version, u32 layer
// count, per layer (u32 in, u32 out, row-major W, b), fnv1a64 trailer.
inline void save_weights(const Network& net, const std::filesystem::path& path) {
  std::string buf;
  auto put = [&](const void* p, std::size_t n) {
    buf.append(static_cast<const char*>(p), n);
  };
  buf.append("RGNN", 4);
  std::uint32_t version = 1;
  put(&version, 4);
  std::uint32_t nl = static_cast<std::uint32_t>(net.layers.size());
  put(&nl, 4);
  for (const auto& l : net.layers) {
    std::uint32_t in = static_cast<std::uint32_t>(l.W.cols());
    std::uint32_t out = static_cast<std::uint32_t>(l.W.rows());
    put(&in, 4);
    put(&out, 4);
    for (int i = 0; i < l.W.rows(); ++i)
      for (int j = 0; j < l.W.cols(); ++j) {
        double v = l.W(i, j);
        put(&v, 8);
      }
    put(l.b.data(), sizeof(double) * l.b.size());
  }
  std::uint64_t sum = fnv1a64(buf.data(), buf.size());
  put(&sum, 8);
  atomic_write(path, buf);
}

inline Network load_weights(const std::filesystem::path& path) {
  std::string buf = read_file(path);
  if (buf.size() < 20) throw FormatError("weights file truncated");
  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  if (fnv1a64(buf.data(), buf.size() - 8) != stored)
    throw ChecksumMismatch("weights file checksum mismatch");
  std::size_t off = 0;
  auto get = [&](void* p, std::size_t n) {
    if (off + n > buf.size() - 8) throw FormatError("weights file truncated");
    std::memcpy(p, buf.data() + off, n);
    off += n;
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, "RGNN", 4) != 0)
    throw FormatError("bad magic in weights file");
  std::uint32_t version, nl;
  get(&version, 4);
  if (version != 1)
    throw VersionMismatch("unsupported weights version " +
                          std::to_string(version));
  get(&nl, 4);
  Network net;
  int prev_out = -1;
  for (std::uint32_t l = 0; l < nl; ++l) {
    std::uint32_t in, out;
    get(&in, 4);
    get(&out, 4);
    if (in == 0 || out == 0 || in > 1u << 20 || out > 1u << 20)
      throw FormatError("implausible layer dimensions in weights file");
    if (prev_out >= 0 && static_cast<int>(in) != prev_out)
      throw FormatError("layer dimensions do not chain in weights file");
    prev_out = static_cast<int>(out);
    Layer layer;
    layer.W.resize(out, in);
    for (std::uint32_t i = 0; i < out; ++i)
      for (std::uint32_t j = 0; j < in; ++j) {
        double v;
        get(&v, 8);
        layer.W(i, j) = v;
      }
    layer.b.resize(out);
    get(layer.b.data(), sizeof(double) * out);
    net.layers.push_back(std::move(layer));
  }
  if (off != buf.size() - 8) throw FormatError("trailing bytes in weights file");
  return net;
}

}  // namespace reachgen
