#pragma once

#include <string>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

struct ClassPrototypeMatrix {
    EmbeddingMatrix prototypes;  // one row per class
    std::vector<std::string> class_names;
};

struct ZeroShotConfig {
    double temperature = 0.01;  // logits = cosine / tau
    unsigned threads = 1;
};

// Average each class's template embeddings into a single prototype row.
// With renormalize (default) the mean is rescaled to unit norm. Cosine
// scoring is scale-free, so classify() output does not depend on the flag;
// it only changes the stored prototype vectors.
ClassPrototypeMatrix build_prototypes(const std::vector<EmbeddingMatrix>& class_text_embeddings,
                                      const std::vector<std::string>& class_names,
                                      bool renormalize = true);

struct ZeroShotResult {
    MatrixXdRM probabilities;  // n x C, rows sum to 1
    std::vector<int> labels;   // argmax per row
    MatrixXdRM cosines;        // n x C raw cosine similarities
};

// Cosine similarity against each prototype, softmax(cos/tau) probabilities,
// argmax prediction. Image rows are expected unit-norm.
ZeroShotResult classify(const EmbeddingMatrix& images, const ClassPrototypeMatrix& protos,
                        const ZeroShotConfig& cfg = {});

}  // namespace embedlab
