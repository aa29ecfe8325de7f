/*
 * Copyright (C) 2026 The hiercat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hiercat/nnet.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hiercat/rng.hpp"

namespace hiercat {
namespace {

using json = nlohmann::ordered_json;

Eigen::ArrayXXd apply_activation(Activation act, const Eigen::ArrayXXd& a) {
  switch (act) {
    case Activation::relu: return a.max(0.0);
    case Activation::tanh_act: return a.tanh();
    case Activation::identity: return a;
  }
  return a;
}

Eigen::ArrayXXd activation_derivative(Activation act, const Eigen::ArrayXXd& a,
                                      const Eigen::ArrayXXd& z) {
  switch (act) {
    case Activation::relu: return (a > 0.0).cast<double>();
    case Activation::tanh_act: return 1.0 - z.square();
    case Activation::identity: return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
  }
  return Eigen::ArrayXXd::Ones(a.rows(), a.cols());
}

void check_config(const NetConfig& c, int n_leaves) {
  if (c.q_e < 1) throw Error(Errc::InvalidArgument, "q_e must be positive");
  if (c.q_e >= n_leaves)
    throw Error(Errc::InvalidArgument,
                "embedding dimension q_e=" + std::to_string(c.q_e) +
                    " must be smaller than the number of leaf classes n_R=" +
                    std::to_string(n_leaves));
  for (int q : c.hidden)
    if (q < 1) throw Error(Errc::InvalidArgument, "hidden layer width must be positive");
  if (c.batch_size < 1) throw Error(Errc::InvalidArgument, "batch_size must be positive");
  if (c.epochs < 1) throw Error(Errc::InvalidArgument, "epochs must be positive");
  if (!(c.learning_rate > 0)) throw Error(Errc::InvalidArgument, "learning_rate must be positive");
}

struct ForwardCache {
  Eigen::MatrixXd input;                 // (p + q_e) x B
  std::vector<Eigen::MatrixXd> pre;      // hidden pre-activations
  std::vector<Eigen::MatrixXd> post;     // hidden activations
  Eigen::RowVectorXd score;              // pre-output row
  Eigen::VectorXd yhat;
};

ForwardCache run_forward(const Network& net, const Eigen::MatrixXd& x_batch,
                         const std::vector<int>& leaves) {
  const int B = static_cast<int>(x_batch.cols());
  if (x_batch.rows() != net.n_covariates)
    throw Error(Errc::ShapeMismatch, "covariate width " + std::to_string(x_batch.rows()) +
                                         ", network expects " +
                                         std::to_string(net.n_covariates));
  if (static_cast<int>(leaves.size()) != B)
    throw Error(Errc::ShapeMismatch, "leaf count differs from batch size");

  ForwardCache cache;
  cache.input.resize(net.n_covariates + net.config.q_e, B);
  cache.input.topRows(net.n_covariates) = x_batch;
  for (int i = 0; i < B; ++i) {
    const int s = leaves[static_cast<std::size_t>(i)];
    if (s < 1 || s > net.n_leaves)
      throw Error(Errc::ShapeMismatch, "leaf index out of range: " + std::to_string(s));
    cache.input.bottomRows(net.config.q_e).col(i) = net.embedding.col(s - 1);
  }

  const int M = static_cast<int>(net.config.hidden.size());
  Eigen::MatrixXd z = cache.input;
  cache.pre.reserve(static_cast<std::size_t>(M));
  cache.post.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXd a = (net.weights[static_cast<std::size_t>(m)] * z).colwise() +
                        net.biases[static_cast<std::size_t>(m)];
    Eigen::MatrixXd zm = apply_activation(net.config.hidden_activation, a.array()).matrix();
    cache.pre.push_back(std::move(a));
    cache.post.push_back(zm);
    z = std::move(zm);
  }
  cache.score = (net.weights.back() * z).row(0).array() + net.biases.back()(0);
  if (net.config.output_activation == OutputActivation::exponential)
    cache.yhat = cache.score.transpose().array().exp();
  else
    cache.yhat = cache.score.transpose();
  return cache;
}

double per_obs_loss_sum(LossKind loss, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& yhat) {
  if (loss == LossKind::mse) return (y - yhat).squaredNorm();
  return poisson_deviance(y, yhat);
}

}  // namespace

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size())
    throw Error(Errc::ShapeMismatch, "y and yhat lengths differ");
  double total = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(yhat(i) > 0))
      throw Error(Errc::NonPositivePrediction,
                  "poisson deviance needs positive predictions, got " +
                      std::to_string(yhat(i)));
    const double yi = y(i);
    const double term = yi > 0 ? yi * std::log(yi / yhat(i)) : 0.0;
    total += term - (yi - yhat(i));
  }
  return 2.0 * total;
}

Network init_network(const NetConfig& config, int n_leaves, int n_covariates) {
  check_config(config, n_leaves);
  if (n_covariates < 0) throw Error(Errc::InvalidArgument, "negative covariate count");
  Network net;
  net.config = config;
  net.n_leaves = n_leaves;
  net.n_covariates = n_covariates;

  Rng rng = Rng(config.seed).fork({0x1717});
  net.embedding.resize(config.q_e, n_leaves);
  for (int s = 0; s < n_leaves; ++s)
    for (int u = 0; u < config.q_e; ++u)
      net.embedding(u, s) = rng.uniform(-config.embed_init_range, config.embed_init_range);

  std::vector<int> widths;
  widths.push_back(n_covariates + config.q_e);
  for (int q : config.hidden) widths.push_back(q);
  widths.push_back(1);
  for (std::size_t m = 0; m + 1 < widths.size(); ++m) {
    const int fan_in = widths[m];
    const int fan_out = widths[m + 1];
    const double a =
        config.dense_init_scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-a, a);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

double forward(const Network& net, const Eigen::VectorXd& x,
               const Eigen::VectorXd& leaf_onehot) {
  if (leaf_onehot.size() != net.n_leaves)
    throw Error(Errc::ShapeMismatch, "one-hot length " + std::to_string(leaf_onehot.size()) +
                                         ", network has n_R=" + std::to_string(net.n_leaves));
  if (x.size() != net.n_covariates)
    throw Error(Errc::ShapeMismatch, "covariate length mismatch");
  Eigen::VectorXd z(net.n_covariates + net.config.q_e);
  z.head(net.n_covariates) = x;
  z.tail(net.config.q_e) = net.embedding * leaf_onehot;
  const int M = static_cast<int>(net.config.hidden.size());
  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd a = net.weights[static_cast<std::size_t>(m)] * z +
                        net.biases[static_cast<std::size_t>(m)];
    z = apply_activation(net.config.hidden_activation, a.array()).matrix();
  }
  const double s = (net.weights.back() * z)(0) + net.biases.back()(0);
  return net.config.output_activation == OutputActivation::exponential ? std::exp(s) : s;
}

Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& x_batch,
                              const std::vector<int>& leaves) {
  return run_forward(net, x_batch, leaves).yhat;
}

double batch_loss(const Network& net, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& yhat) {
  return per_obs_loss_sum(net.config.loss, y, yhat) / static_cast<double>(y.size());
}

Gradients loss_gradients(const Network& net, const Eigen::MatrixXd& x_batch,
                         const std::vector<int>& leaves, const Eigen::VectorXd& y) {
  const int B = static_cast<int>(x_batch.cols());
  ForwardCache cache = run_forward(net, x_batch, leaves);
  Gradients g;
  g.loss = batch_loss(net, y, cache.yhat);

  // d(mean loss)/d(score), folding in the output activation.
  Eigen::RowVectorXd dscore(B);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (int i = 0; i < B; ++i) {
    const double yi = y(i);
    const double yh = cache.yhat(i);
    double dyhat;
    if (net.config.loss == LossKind::mse) {
      dyhat = 2.0 * (yh - yi);
    } else {
      if (!(yh > 0))
        throw Error(Errc::NonPositivePrediction,
                    "poisson deviance needs positive predictions during training");
      dyhat = 2.0 * (1.0 - yi / yh);
    }
    const double dact =
        net.config.output_activation == OutputActivation::exponential ? yh : 1.0;
    dscore(i) = dyhat * dact * inv_b;
  }

  const int M = static_cast<int>(net.config.hidden.size());
  g.weights.resize(net.weights.size());
  g.biases.resize(net.biases.size());

  const Eigen::MatrixXd& last_post = M > 0 ? cache.post.back() : cache.input;
  g.weights.back() = dscore * last_post.transpose();
  g.biases.back() = Eigen::VectorXd::Constant(1, dscore.sum());

  Eigen::MatrixXd upstream = net.weights.back().transpose() * dscore;  // q_M x B
  for (int m = M - 1; m >= 0; --m) {
    const Eigen::MatrixXd delta =
        (upstream.array() * activation_derivative(net.config.hidden_activation,
                                                  cache.pre[static_cast<std::size_t>(m)].array(),
                                                  cache.post[static_cast<std::size_t>(m)].array()))
            .matrix();
    const Eigen::MatrixXd& below = m > 0 ? cache.post[static_cast<std::size_t>(m - 1)] : cache.input;
    g.weights[static_cast<std::size_t>(m)] = delta * below.transpose();
    g.biases[static_cast<std::size_t>(m)] = delta.rowwise().sum();
    upstream = net.weights[static_cast<std::size_t>(m)].transpose() * delta;
  }

  g.embedding = Eigen::MatrixXd::Zero(net.config.q_e, net.n_leaves);
  const auto embed_rows = upstream.bottomRows(net.config.q_e);
  for (int i = 0; i < B; ++i)
    g.embedding.col(leaves[static_cast<std::size_t>(i)] - 1) += embed_rows.col(i);
  return g;
}

namespace {

struct AdamState {
  Eigen::MatrixXd m, v;
  explicit AdamState(Eigen::Index rows, Eigen::Index cols)
      : m(Eigen::MatrixXd::Zero(rows, cols)), v(Eigen::MatrixXd::Zero(rows, cols)) {}
};

void adam_update(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
                 AdamState& state, const NetConfig& c, long t, double lr) {
  state.m = c.adam_beta1 * state.m + (1.0 - c.adam_beta1) * grad;
  state.v = c.adam_beta2 * state.v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(t));
  param.array() -=
      lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.adam_epsilon);
}

}  // namespace

TrainResult train(const NetConfig& config, const Dataset& d, const Hierarchy& h) {
  validate_dataset(d, h);
  const int n = d.n();
  if (n < 1) throw Error(Errc::InvalidArgument, "empty dataset");

  Network net = init_network(config, h.num_leaves(), d.p());
  // Warm-start the output bias at the response mean (log mean under the
  // exponential output). Adam moves every parameter at most learning_rate
  // per step, so a distant intercept would otherwise be reached by growing
  // the output weights instead, which flattens the embedding geometry.
  const double y_mean = d.y.mean();
  net.biases.back()(0) = config.output_activation == OutputActivation::exponential
                             ? std::log(std::max(y_mean, 1e-8))
                             : y_mean;
  Rng rng = Rng(config.seed).fork({0x5e5e});

  AdamState embed_state(net.embedding.rows(), net.embedding.cols());
  std::vector<AdamState> w_states, b_states;
  for (const auto& w : net.weights) w_states.emplace_back(w.rows(), w.cols());
  for (const auto& b : net.biases) b_states.emplace_back(b.size(), 1);

  const Eigen::MatrixXd xt = d.x.transpose();  // p x n

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  long t = 0;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = rng.fork({0xa1, static_cast<std::uint64_t>(epoch)});
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int B = std::min(config.batch_size, n - start);
      Eigen::MatrixXd xb(d.p(), B);
      Eigen::VectorXd yb(B);
      std::vector<int> leaves(static_cast<std::size_t>(B));
      for (int i = 0; i < B; ++i) {
        const int row = order[static_cast<std::size_t>(start + i)];
        xb.col(i) = xt.col(row);
        yb(i) = d.y(row);
        leaves[static_cast<std::size_t>(i)] = d.leaf[static_cast<std::size_t>(row)];
      }
      Gradients g = loss_gradients(net, xb, leaves, yb);
      if (!std::isfinite(g.loss))
        throw Error(Errc::NonFiniteLoss,
                    "training diverged at epoch " + std::to_string(epoch) +
                        "; consider lowering learning_rate");
      loss_sum += g.loss * B;
      ++t;
      adam_update(net.embedding, g.embedding, embed_state, config, t, lr);
      for (std::size_t m = 0; m < net.weights.size(); ++m)
        adam_update(net.weights[m], g.weights[m], w_states[m], config, t, lr);
      for (std::size_t m = 0; m < net.biases.size(); ++m)
        adam_update(net.biases[m], g.biases[m], b_states[m], config, t, lr);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw Error(Errc::NonFiniteLoss,
                  "training diverged at epoch " + std::to_string(epoch) +
                      "; consider lowering learning_rate");
    result.epoch_loss.push_back(epoch_loss);
    if (epoch_loss < best - config.early_stop_tol) {
      best = epoch_loss;
      stall = 0;
    } else if (config.early_stop_patience > 0 && ++stall >= config.early_stop_patience) {
      break;
    }
    lr *= config.lr_decay;
  }
  result.net = std::move(net);
  return result;
}

EmbeddingTable leaf_embeddings(const Network& net, const Hierarchy& h) {
  if (net.n_leaves != h.num_leaves())
    throw Error(Errc::ShapeMismatch, "network was trained for a different leaf count");
  EmbeddingTable table(net.config.q_e, h);
  const int R = h.num_levels();
  for (int s = 1; s <= net.n_leaves; ++s)
    table.set(NodeId{R, s}, net.embedding.col(s - 1));
  return table;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh_act: return "tanh";
    case Activation::identity: return "identity";
  }
  return "relu";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh_act;
  if (s == "identity") return Activation::identity;
  throw Error(Errc::ParseError, "unknown activation: " + s);
}

}  // namespace

void save_network(const std::string& path, const Network& net) {
  json j;
  j["format"] = "hiercat-network";
  j["version"] = 1;
  json cfg;
  cfg["q_e"] = net.config.q_e;
  cfg["hidden"] = net.config.hidden;
  cfg["hidden_activation"] = activation_name(net.config.hidden_activation);
  cfg["output_activation"] =
      net.config.output_activation == OutputActivation::exponential ? "exponential"
                                                                    : "identity";
  cfg["loss"] = net.config.loss == LossKind::mse ? "mse" : "poisson_deviance";
  cfg["epochs"] = net.config.epochs;
  cfg["batch_size"] = net.config.batch_size;
  cfg["learning_rate"] = net.config.learning_rate;
  cfg["lr_decay"] = net.config.lr_decay;
  cfg["dense_init_scale"] = net.config.dense_init_scale;
  cfg["adam_beta1"] = net.config.adam_beta1;
  cfg["adam_beta2"] = net.config.adam_beta2;
  cfg["adam_epsilon"] = net.config.adam_epsilon;
  cfg["seed"] = net.config.seed;
  j["config"] = std::move(cfg);
  j["n_leaves"] = net.n_leaves;
  j["n_covariates"] = net.n_covariates;
  j["embedding"] = matrix_to_json(net.embedding);
  json layers = json::array();
  for (std::size_t m = 0; m < net.weights.size(); ++m) {
    json layer;
    layer["w"] = matrix_to_json(net.weights[m]);
    json b = json::array();
    for (Eigen::Index i = 0; i < net.biases[m].size(); ++i) b.push_back(net.biases[m](i));
    layer["b"] = std::move(b);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  json j = json::parse(in, nullptr, true);
  if (j.value("format", "") != "hiercat-network")
    throw Error(Errc::ParseError, path + ": not a network checkpoint");
  if (j.value("version", 0) != 1)
    throw Error(Errc::ParseError, path + ": unsupported checkpoint version");
  Network net;
  const json& cfg = j.at("config");
  net.config.q_e = cfg.at("q_e").get<int>();
  net.config.hidden = cfg.at("hidden").get<std::vector<int>>();
  net.config.hidden_activation = activation_from(cfg.at("hidden_activation").get<std::string>());
  net.config.output_activation =
      cfg.at("output_activation").get<std::string>() == "exponential"
          ? OutputActivation::exponential
          : OutputActivation::identity;
  net.config.loss = cfg.at("loss").get<std::string>() == "mse" ? LossKind::mse
                                                               : LossKind::poisson_deviance;
  net.config.epochs = cfg.at("epochs").get<int>();
  net.config.batch_size = cfg.at("batch_size").get<int>();
  net.config.learning_rate = cfg.at("learning_rate").get<double>();
  net.config.lr_decay = cfg.value("lr_decay", 1.0);
  net.config.dense_init_scale = cfg.value("dense_init_scale", 1.0);
  net.config.adam_beta1 = cfg.at("adam_beta1").get<double>();
  net.config.adam_beta2 = cfg.at("adam_beta2").get<double>();
  net.config.adam_epsilon = cfg.at("adam_epsilon").get<double>();
  net.config.seed = cfg.at("seed").get<std::uint64_t>();
  net.n_leaves = j.at("n_leaves").get<int>();
  net.n_covariates = j.at("n_covariates").get<int>();
  net.embedding = matrix_from_json(j.at("embedding"));
  for (const auto& layer : j.at("layers")) {
    net.weights.push_back(matrix_from_json(layer.at("w")));
    const auto& b = layer.at("b");
    Eigen::VectorXd bias(static_cast<Eigen::Index>(b.size()));
    for (Eigen::Index i = 0; i < bias.size(); ++i)
      bias(i) = b.at(static_cast<std::size_t>(i)).get<double>();
    net.biases.push_back(std::move(bias));
  }
  return net;
}

}  // namespace hiercat
