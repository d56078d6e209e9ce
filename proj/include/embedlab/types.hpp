#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedlab/errors.hpp"

namespace embedlab {

using MatrixXdRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixXfRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense n x d row-major float32 matrix of image or text embeddings.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<float> data;  // rows * dim, row-major
    bool normalized = false;

    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t r, std::size_t d)
        : rows(r), dim(d), data(r * d, 0.0f) {}

    std::span<const float> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    std::span<float> row(std::size_t i) {
        return {data.data() + i * dim, dim};
    }

    Eigen::Map<const MatrixXfRM> map() const {
        return {data.data(), static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(dim)};
    }
    Eigen::Map<MatrixXfRM> map() {
        return {data.data(), static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(dim)};
    }

    MatrixXdRM as_double() const { return map().cast<double>(); }

    void require_dim(std::size_t d, const char* what) const {
        if (dim != d)
            throw ShapeError(std::string(what) + ": dim " + std::to_string(dim) +
                             " != expected " + std::to_string(d));
    }
};

// Per-row ids, labels and class table, optional split tags and pair ids.
struct DatasetManifest {
    std::vector<std::string> ids;
    std::vector<int> labels;  // each in [0, class_names.size())
    std::vector<std::string> class_names;
    std::optional<std::vector<std::string>> split;     // train/val/test per row
    std::optional<std::vector<std::string>> pair_ids;  // image row -> text row id

    std::size_t size() const { return ids.size(); }
    std::size_t num_classes() const { return class_names.size(); }
};

struct PromptTemplateSet {
    std::vector<std::string> templates;  // each contains "{disease}" exactly once

    std::vector<std::string> expand(const std::string& disease) const;
};

struct Vocabulary {
    std::vector<std::string> terms;
    EmbeddingMatrix term_embeddings;  // rows == terms.size(), normalized
};

}  // namespace embedlab
