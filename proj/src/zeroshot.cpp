#include "embedlab/zeroshot.hpp"

#include <cmath>

#include "embedlab/errors.hpp"
#include "embedlab/parallel.hpp"
#include "embedlab/store.hpp"

namespace embedlab {

ClassPrototypeMatrix build_prototypes(const std::vector<EmbeddingMatrix>& class_text_embeddings,
                                      const std::vector<std::string>& class_names,
                                      bool renormalize) {
    if (class_text_embeddings.empty())
        throw EmptyClass("no classes given");
    if (!class_names.empty() && class_names.size() != class_text_embeddings.size())
        throw ShapeError("class_names length != class count");

    const std::size_t dim = class_text_embeddings.front().dim;
    ClassPrototypeMatrix out;
    out.prototypes = EmbeddingMatrix(class_text_embeddings.size(), dim);
    out.class_names = class_names;

    for (std::size_t c = 0; c < class_text_embeddings.size(); ++c) {
        const auto& m = class_text_embeddings[c];
        if (m.rows == 0)
            throw EmptyClass("class " + std::to_string(c) + " has no template embeddings");
        if (m.dim != dim)
            throw ShapeError("class " + std::to_string(c) + " dim mismatch");
        Eigen::RowVectorXd mean =
            m.as_double().colwise().mean();
        if (renormalize) {
            const double norm = mean.norm();
            if (norm < 1e-12)
                throw DegenerateRow("class " + std::to_string(c) + " mean embedding is zero");
            mean /= norm;
        }
        auto r = out.prototypes.row(c);
        for (std::size_t j = 0; j < dim; ++j) r[j] = static_cast<float>(mean(static_cast<Eigen::Index>(j)));
    }
    out.prototypes.normalized = renormalize;
    return out;
}

ZeroShotResult classify(const EmbeddingMatrix& images, const ClassPrototypeMatrix& protos,
                        const ZeroShotConfig& cfg) {
    if (cfg.temperature <= 0.0)
        throw RangeError("temperature must be positive");
    if (images.dim != protos.prototypes.dim)
        throw ShapeError("image dim " + std::to_string(images.dim) + " != prototype dim " +
                         std::to_string(protos.prototypes.dim));
    const std::size_t n = images.rows;
    const auto c = protos.prototypes.rows;
    if (c == 0)
        throw EmptyClass("no prototypes");

    // cosine against possibly non-renormalized prototypes: divide by the
    // prototype norms (image rows are unit by precondition)
    const MatrixXdRM p = protos.prototypes.as_double();
    Eigen::VectorXd proto_norm(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double nr = p.row(static_cast<Eigen::Index>(k)).norm();
        if (nr < 1e-12)
            throw DegenerateRow("prototype " + std::to_string(k) + " is zero");
        proto_norm(static_cast<Eigen::Index>(k)) = nr;
    }

    ZeroShotResult out;
    out.cosines.resize(n, c);
    out.probabilities.resize(n, c);
    out.labels.assign(n, 0);

    const MatrixXdRM x = images.as_double();
    parallel_for(n, resolve_threads(cfg.threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            Eigen::RowVectorXd sims = x.row(ii) * p.transpose();
            sims.array() /= proto_norm.transpose().array();
            out.cosines.row(ii) = sims;

            Eigen::RowVectorXd logits = sims / cfg.temperature;
            const double mx = logits.maxCoeff();
            Eigen::RowVectorXd ex = (logits.array() - mx).exp();
            out.probabilities.row(ii) = ex / ex.sum();

            Eigen::Index best = 0;
            out.probabilities.row(ii).maxCoeff(&best);
            out.labels[i] = static_cast<int>(best);
        }
    });
    return out;
}

}  // namespace embedlab
