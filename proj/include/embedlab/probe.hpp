#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// Multinomial logistic regression on frozen embeddings.
//
// Objective: sum_i cross_entropy_i + ||W||^2 / (2 * l2_strength), bias
// unpenalized. l2_strength follows the inverse-regularization convention
// (larger value = weaker penalty); auto mode sets it to M*C/100 for feature
// dimension M and class count C.
struct ProbeModel {
    MatrixXdRM weights;    // C x M
    Eigen::VectorXd bias;  // C
    double l2_strength = 0.0;
};

struct ProbeConfig {
    double l2_strength = 0.0;  // <= 0 selects auto M*C/100
    std::size_t max_iter = 1000;
    double grad_tol = 1e-6;
    bool normalize_features = false;  // probe consumes raw features by default
};

ProbeModel fit_probe(const EmbeddingMatrix& train, std::span<const int> labels,
                     std::size_t num_classes, const ProbeConfig& cfg = {});

struct ProbePrediction {
    MatrixXdRM probabilities;  // n x C
    std::vector<int> labels;
};

ProbePrediction predict_probe(const ProbeModel& model, const EmbeddingMatrix& x,
                              bool normalize_features = false, unsigned threads = 1);

// Regularized objective and gradient over packed parameters (W row-major,
// then bias); exposed for finite-difference verification.
double probe_objective(const Eigen::VectorXd& params, const MatrixXdRM& x,
                       std::span<const int> labels, std::size_t num_classes,
                       double l2_strength, Eigen::VectorXd& grad);

// Per-class subsample of round(fraction * class_count) rows (half-up),
// shuffled by a per-class stream forked from the seed. Returned indices are
// sorted. fraction in (0, 1].
std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction,
                                              std::uint64_t seed);

}  // namespace embedlab
