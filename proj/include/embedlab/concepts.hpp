#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embedlab/sae.hpp"
#include "embedlab/types.hpp"

namespace embedlab {

// Logistic classifier over SAE latents with exact L1 sparsity.
struct SparseLinearModel {
    Eigen::VectorXd weights;           // m, mostly zero
    double bias = 0.0;
    std::vector<std::size_t> support;  // indices with weight != 0, ascending
    double alpha = 0.001;
};

struct ConceptFilterConfig {
    double alpha = 0.001;        // L1 penalty strength
    double learning_rate = 1e-2; // decayed as lr / sqrt(epoch)
    std::size_t epochs = 200;
    std::uint64_t seed = 42;
};

// Proximal (soft-threshold) SGD on log loss + alpha*|w|_1, which drives
// uninformative weights to exactly zero; only nonzero-weight latents are
// retained as concepts. Labels must be binary {0, 1} with both present.
SparseLinearModel fit_concept_filter(const MatrixXdRM& latents, std::span<const int> labels,
                                     const ConceptFilterConfig& cfg = {});

// One filter per class (class c vs rest), sharing the SAE latents.
std::vector<SparseLinearModel> fit_concept_filter_ovr(const MatrixXdRM& latents,
                                                      std::span<const int> labels,
                                                      std::size_t num_classes,
                                                      const ConceptFilterConfig& cfg = {});

struct ConceptMatch {
    std::size_t concept_index;  // SAE latent id
    std::size_t term_index;     // vocabulary row
    double similarity;          // cosine between decoder row and term
};

struct ConceptAssignment {
    std::vector<ConceptMatch> matches;  // one per retained concept
    double total_similarity = 0.0;
};

// Names each retained latent by the vocabulary term assigned to it under the
// exact one-to-one assignment maximizing total cosine similarity between
// decoder rows and term embeddings.
ConceptAssignment name_concepts(const SaeModel& sae, std::span<const std::size_t> retained,
                                const Vocabulary& vocab);

// sigmoid(w . relu(x W_E) + b) per row; latents listed in suppress are
// zeroed before the linear head.
Eigen::VectorXd cbm_predict(const SaeModel& sae, const SparseLinearModel& clf,
                            const EmbeddingMatrix& x,
                            std::span<const std::size_t> suppress = {});

// The k latents with the highest mean activation over the artifact set
// (ties by index).
std::vector<std::size_t> find_artifact_neurons(const SaeModel& sae,
                                               const EmbeddingMatrix& artifact_set,
                                               std::size_t k = 5);

// decode(encode(x)) with the suppressed latent coordinates set to zero; the
// empty set reproduces the plain reconstruction pipeline exactly.
MatrixXdRM intervene(const SaeModel& sae, std::span<const std::size_t> suppress,
                     const EmbeddingMatrix& x);

}  // namespace embedlab
