#include "embedlab/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "embedlab/errors.hpp"
#include "embedlab/hungarian.hpp"
#include "embedlab/rng.hpp"

namespace embedlab {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

SparseLinearModel fit_concept_filter(const MatrixXdRM& latents, std::span<const int> labels,
                                     const ConceptFilterConfig& cfg) {
    const auto n = static_cast<std::size_t>(latents.rows());
    const auto m = latents.cols();
    if (labels.size() != n)
        throw ShapeError("label count != latent rows");
    if (cfg.alpha < 0.0)
        throw RangeError("alpha must be >= 0");
    bool has0 = false, has1 = false;
    for (int l : labels) {
        if (l == 0) has0 = true;
        else if (l == 1) has1 = true;
        else throw RangeError("labels must be binary {0,1}");
    }
    if (!has0 || !has1)
        throw DegenerateLabels("both classes required");

    // Stochastic proximal descent with the cumulative L1 budget: each weight
    // owes the total penalty accrued so far; the outstanding amount is applied
    // whenever the weight is nonzero, clipping at zero. Zeroed weights stay
    // zero until a gradient kick outruns the accumulated budget, which is what
    // makes the support exactly sparse.
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd applied = Eigen::VectorXd::Zero(m);  // signed penalty already paid
    double budget = 0.0;
    double b = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
        Rng rng = Rng::fork(cfg.seed, epoch);
        const auto order = rng.permutation(n);
        for (const std::size_t i : order) {
            const auto row = latents.row(static_cast<Eigen::Index>(i));
            const double p = sigmoid(row.dot(w) + b);
            const double g = p - static_cast<double>(labels[i]);  // d logloss / d z
            if (g != 0.0) w -= (lr * g) * row.transpose();
            b -= lr * g;
            if (cfg.alpha > 0.0) {
                budget += lr * cfg.alpha;
                for (Eigen::Index j = 0; j < m; ++j) {
                    const double z = w(j);
                    if (z > 0.0)
                        w(j) = std::max(0.0, z - (budget + applied(j)));
                    else if (z < 0.0)
                        w(j) = std::min(0.0, z + (budget - applied(j)));
                    applied(j) += w(j) - z;
                }
            }
        }
    }

    SparseLinearModel model;
    model.weights = std::move(w);
    model.bias = b;
    model.alpha = cfg.alpha;
    for (Eigen::Index j = 0; j < m; ++j)
        if (model.weights(j) != 0.0) model.support.push_back(static_cast<std::size_t>(j));
    return model;
}

std::vector<SparseLinearModel> fit_concept_filter_ovr(const MatrixXdRM& latents,
                                                      std::span<const int> labels,
                                                      std::size_t num_classes,
                                                      const ConceptFilterConfig& cfg) {
    if (num_classes < 2)
        throw RangeError("need at least 2 classes");
    std::vector<SparseLinearModel> models;
    models.reserve(num_classes);
    std::vector<int> binary(labels.size());
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            binary[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
        models.push_back(fit_concept_filter(latents, binary, cfg));
    }
    return models;
}

ConceptAssignment name_concepts(const SaeModel& sae, std::span<const std::size_t> retained,
                                const Vocabulary& vocab) {
    const std::size_t m = sae.latent_dim();
    const std::size_t d = sae.input_dim();
    if (retained.empty())
        throw DataError("no retained concepts");
    if (retained.size() > vocab.terms.size())
        throw CapacityError(std::to_string(retained.size()) + " concepts but only " +
                            std::to_string(vocab.terms.size()) + " vocabulary terms");
    if (vocab.term_embeddings.dim != d)
        throw ShapeError("vocabulary embedding dim != SAE input dim");
    for (std::size_t c : retained)
        if (c >= m)
            throw RangeError("retained latent " + std::to_string(c) + " out of range");

    // cosine between (normalized) decoder rows and term embeddings
    const MatrixXdRM terms = vocab.term_embeddings.as_double();
    MatrixXdRM sim(static_cast<Eigen::Index>(retained.size()),
                   static_cast<Eigen::Index>(vocab.terms.size()));
    for (std::size_t r = 0; r < retained.size(); ++r) {
        Eigen::RowVectorXd p = sae.w_dec.row(static_cast<Eigen::Index>(retained[r]));
        const double norm = p.norm();
        if (norm > 1e-12) p /= norm;
        sim.row(static_cast<Eigen::Index>(r)) = p * terms.transpose();
    }

    const auto assignment = hungarian_max(sim);
    ConceptAssignment out;
    out.matches.reserve(retained.size());
    for (std::size_t r = 0; r < retained.size(); ++r) {
        ConceptMatch match;
        match.concept_index = retained[r];
        match.term_index = assignment[r];
        match.similarity = sim(static_cast<Eigen::Index>(r),
                               static_cast<Eigen::Index>(assignment[r]));
        out.total_similarity += match.similarity;
        out.matches.push_back(match);
    }
    return out;
}

Eigen::VectorXd cbm_predict(const SaeModel& sae, const SparseLinearModel& clf,
                            const EmbeddingMatrix& x,
                            std::span<const std::size_t> suppress) {
    if (clf.weights.size() != static_cast<Eigen::Index>(sae.latent_dim()))
        throw ShapeError("classifier weight length != SAE latent dim");
    for (std::size_t s : suppress)
        if (s >= sae.latent_dim())
            throw RangeError("suppressed latent out of range");
    MatrixXdRM a = sae_encode(sae, x);
    for (std::size_t s : suppress) a.col(static_cast<Eigen::Index>(s)).setZero();
    Eigen::VectorXd out(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        out(i) = sigmoid(a.row(i).dot(clf.weights) + clf.bias);
    return out;
}

std::vector<std::size_t> find_artifact_neurons(const SaeModel& sae,
                                               const EmbeddingMatrix& artifact_set,
                                               std::size_t k) {
    if (artifact_set.rows == 0)
        throw DataError("empty artifact set");
    const std::size_t m = sae.latent_dim();
    if (k > m)
        throw RangeError("k = " + std::to_string(k) + " exceeds latent count " +
                         std::to_string(m));
    const MatrixXdRM a = sae_encode(sae, artifact_set);
    const Eigen::RowVectorXd mean = a.colwise().mean();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const double mx = mean(static_cast<Eigen::Index>(x));
        const double my = mean(static_cast<Eigen::Index>(y));
        return mx != my ? mx > my : x < y;
    });
    order.resize(k);
    return order;
}

MatrixXdRM intervene(const SaeModel& sae, std::span<const std::size_t> suppress,
                     const EmbeddingMatrix& x) {
    for (std::size_t s : suppress)
        if (s >= sae.latent_dim())
            throw RangeError("suppressed latent " + std::to_string(s) + " out of range");
    MatrixXdRM a = sae_encode(sae, x);
    for (std::size_t s : suppress) a.col(static_cast<Eigen::Index>(s)).setZero();
    return sae_decode(sae, a);
}

}  // namespace embedlab
