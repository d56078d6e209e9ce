#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// Overcomplete linear autoencoder with ReLU latents:
//   a = relu(x W_E),  SAE(x) = a W_D
// trained on   L = |SAE(x) - x|^2 + lambda * |a|_1
// There are no bias terms by default, matching the reconstruction formula.
// An optional learned pre-encoder bias b (subtracted before encoding, added
// back after decoding) and a fixed centering vector are available as
// experimental flags.
struct SaeModel {
    MatrixXdRM w_enc;  // d x m
    MatrixXdRM w_dec;  // m x d
    double lambda = 3e-5;
    std::size_t expansion = 8;  // m = expansion * d
    std::uint64_t seed = 42;
    Eigen::VectorXd bias;    // size d when enabled, else empty
    Eigen::VectorXd center;  // size d when enabled, else empty

    std::size_t input_dim() const { return static_cast<std::size_t>(w_enc.rows()); }
    std::size_t latent_dim() const { return static_cast<std::size_t>(w_enc.cols()); }
};

struct SaeTrainConfig {
    double lambda = 3e-5;
    std::size_t expansion = 8;
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 4096;
    std::size_t epochs = 50;
    std::uint64_t seed = 42;
    bool use_bias = false;  // learned pre-encoder bias
    bool center = false;    // subtract the training mean (fixed)
};

// relu(x W_E); nonnegative n x m activations
MatrixXdRM sae_encode(const SaeModel& model, const MatrixXdRM& x);
MatrixXdRM sae_encode(const SaeModel& model, const EmbeddingMatrix& x);

// a W_D; n x d reconstruction
MatrixXdRM sae_decode(const SaeModel& model, const MatrixXdRM& a);

// decode(encode(x)), the full reconstruction pipeline
MatrixXdRM sae_reconstruct(const SaeModel& model, const MatrixXdRM& x);

struct SaeLossGrad {
    double loss = 0.0;  // mean per-sample loss over the batch
    MatrixXdRM grad_enc;
    MatrixXdRM grad_dec;
    Eigen::VectorXd grad_bias;  // when model.bias is enabled
};

// Batch loss and analytic gradients (ReLU subgradient 0 at the kink).
SaeLossGrad sae_loss_grad(const SaeModel& model, const MatrixXdRM& x_batch);

struct SaeTrainResult {
    SaeModel model;
    std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

// Adam training with per-epoch seeded shuffling; the last partial batch is
// kept. Deterministic per seed. Throws TrainingDiverged on NaN loss or if
// the final epoch loss exceeds 1.05x the best epoch observed.
SaeTrainResult sae_train(const EmbeddingMatrix& data, const SaeTrainConfig& cfg);

// Model container: magic "DFMZSAE1", u32 header length, JSON header, then
// the weight matrices (and optional bias/center rows) as float32 payloads
// in the embedding-file convention.
void save_sae(const SaeModel& model, const std::string& path);
SaeModel load_sae(const std::string& path);

}  // namespace embedlab
