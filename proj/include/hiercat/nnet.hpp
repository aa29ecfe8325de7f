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

#ifndef HIERCAT_NNET_HPP_
#define HIERCAT_NNET_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hiercat/common.hpp"
#include "hiercat/dataset.hpp"
#include "hiercat/embedding_table.hpp"
#include "hiercat/hierarchy.hpp"

namespace hiercat {

enum class Activation { relu, tanh_act, identity };
enum class OutputActivation { identity, exponential };
enum class LossKind { mse, poisson_deviance };

// Feedforward network with an embedding layer over the leaf one-hot input:
// the embedding output is concatenated with the covariate vector, passed
// through dense hidden layers, and mapped to a scalar prediction.
struct NetConfig {
  int q_e = 2;                     // embedding dimension, must satisfy q_e < n_R
  std::vector<int> hidden = {2};   // q_1..q_M
  Activation hidden_activation = Activation::relu;
  OutputActivation output_activation = OutputActivation::identity;
  LossKind loss = LossKind::mse;
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_decay = 1.0;       // per-epoch multiplicative decay of the learning rate
  double dense_init_scale = 1.0;  // multiplier on the dense-layer init bound
  double embed_init_range = 0.05; // embedding weights start uniform(-range, range)
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Stop when the epoch-mean loss improves by less than early_stop_tol for
  // early_stop_patience consecutive epochs.
  double early_stop_tol = 1e-6;
  int early_stop_patience = 10;
};

struct Network {
  NetConfig config;
  int n_leaves = 0;
  int n_covariates = 0;
  Eigen::MatrixXd embedding;             // q_e x n_leaves, no bias
  std::vector<Eigen::MatrixXd> weights;  // hidden layers then the 1-row output
  std::vector<Eigen::VectorXd> biases;
};

// Validates shapes and draws initial weights: dense layers uniform(-a, a)
// with a = sqrt(6 / (fan_in + fan_out)), embedding uniform(-0.05, 0.05),
// biases zero. Rejects q_e >= n_leaves (the embedding must compress).
Network init_network(const NetConfig& config, int n_leaves, int n_covariates);

// Prediction for one observation; the embedding column is selected by the
// one-hot vector.
double forward(const Network& net, const Eigen::VectorXd& x,
               const Eigen::VectorXd& leaf_onehot);

// Batched prediction; x_batch holds one observation per column (p x B),
// leaves are 1-based leaf indices.
Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& x_batch,
                              const std::vector<int>& leaves);

// Sum form of the Poisson deviance, 2 * sum_i [y ln(y/yhat) - (y - yhat)],
// with the y ln(y/yhat) term zero when y = 0. Requires yhat > 0 elementwise.
double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

// Batch-mean loss value under the configured loss/output pair.
double batch_loss(const Network& net, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& yhat);

struct Gradients {
  double loss = 0;
  Eigen::MatrixXd embedding;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Analytic gradient of the batch-mean loss with respect to every parameter.
Gradients loss_gradients(const Network& net, const Eigen::MatrixXd& x_batch,
                         const std::vector<int>& leaves, const Eigen::VectorXd& y);

struct TrainResult {
  Network net;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

// Mini-batch Adam over the dataset. Deterministic given config.seed: fixed
// initialisation and a fixed shuffle order per epoch; single-threaded.
// NonFiniteLoss on divergence.
TrainResult train(const NetConfig& config, const Dataset& d, const Hierarchy& h);

// Leaf embedding table: the embedding of leaf s is column s of the
// embedding weight matrix.
EmbeddingTable leaf_embeddings(const Network& net, const Hierarchy& h);

void save_network(const std::string& path, const Network& net);
Network load_network(const std::string& path);

}  // namespace hiercat

#endif  // HIERCAT_NNET_HPP_
