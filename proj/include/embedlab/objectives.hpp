#pragma once

#include "embedlab/types.hpp"

namespace embedlab {

// The two pretraining objectives, computed in double precision on toy
// batches together with their analytic gradients.

struct ContrastiveBatch {
    MatrixXdRM u;  // N x d image embeddings (unit-norm rows)
    MatrixXdRM v;  // N x d text embeddings (unit-norm rows)
    double tau = 0.07;
};

struct InfoNceResult {
    double loss = 0.0;
    MatrixXdRM grad_u;
    MatrixXdRM grad_v;
};

// Symmetric contrastive loss over matched pairs:
//   -(1/N) sum_i [ log softmax_j(u_i.v_j/tau)_i + log softmax_j(v_i.u_j/tau)_i ]
InfoNceResult infonce_loss(const ContrastiveBatch& batch);

struct MaskedBatch {
    MatrixXdRM student_visible;  // |V| x d
    MatrixXdRM student_masked;   // |M| x d
    MatrixXdRM teacher_visible;  // matching targets
    MatrixXdRM teacher_masked;
};

struct MimResult {
    double loss = 0.0;
    MatrixXdRM grad_visible;  // d loss / d student_visible
    MatrixXdRM grad_masked;
};

// Latent alignment loss: sum over visible and masked patches of the cosine
// distance D(a, b) = 1 - cos(a, b), range [0, 2] per patch. Teacher rows are
// targets; gradients flow to the student only.
MimResult mim_loss(const MaskedBatch& batch);

}  // namespace embedlab
