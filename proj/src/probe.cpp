#include "embedlab/probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "embedlab/errors.hpp"
#include "embedlab/lbfgs.hpp"
#include "embedlab/parallel.hpp"
#include "embedlab/rng.hpp"
#include "embedlab/store.hpp"

namespace embedlab {

namespace {

// softmax cross-entropy over logits Z (n x C), labels y; returns summed loss
// and writes P - Y into Z in place
double ce_and_residual(MatrixXdRM& z, std::span<const int> labels) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        const double lse = mx + std::log((z.row(i).array() - mx).exp().sum());
        const int y = labels[static_cast<std::size_t>(i)];
        loss += lse - z(i, y);
        z.row(i) = (z.row(i).array() - lse).exp();  // now P
        z(i, y) -= 1.0;                             // now P - Y
    }
    return loss;
}

}  // namespace

double probe_objective(const Eigen::VectorXd& params, const MatrixXdRM& x,
                       std::span<const int> labels, std::size_t num_classes,
                       double l2_strength, Eigen::VectorXd& grad) {
    const auto n = x.rows();
    const auto m = x.cols();
    const auto c = static_cast<Eigen::Index>(num_classes);
    const Eigen::Map<const MatrixXdRM> w(params.data(), c, m);
    const Eigen::Map<const Eigen::VectorXd> b(params.data() + c * m, c);

    MatrixXdRM z = x * w.transpose();
    z.rowwise() += b.transpose();
    double loss = ce_and_residual(z, labels);  // z now holds P - Y

    grad.resize(params.size());
    Eigen::Map<MatrixXdRM> gw(grad.data(), c, m);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + c * m, c);
    gw = z.transpose() * x;
    gb = z.colwise().sum().transpose();

    if (l2_strength > 0.0) {
        loss += w.squaredNorm() / (2.0 * l2_strength);
        gw += w / l2_strength;
    }
    (void)n;
    return loss;
}

ProbeModel fit_probe(const EmbeddingMatrix& train, std::span<const int> labels,
                     std::size_t num_classes, const ProbeConfig& cfg) {
    if (labels.size() != train.rows)
        throw ShapeError("label count != training rows");
    if (train.rows == 0)
        throw DataError("empty training set");
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2)
        throw DegenerateLabels("training labels contain a single class");
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
            throw RangeError("label out of range");
    for (float v : train.data)
        if (std::isnan(v))
            throw DataError("NaN in training features");

    const EmbeddingMatrix* features = &train;
    EmbeddingMatrix normalized;
    if (cfg.normalize_features) {
        normalized = normalize_rows(train);
        features = &normalized;
    }
    const MatrixXdRM x = features->as_double();
    const auto m = static_cast<std::size_t>(x.cols());

    double l2 = cfg.l2_strength;
    if (l2 <= 0.0)
        l2 = static_cast<double>(m) * static_cast<double>(num_classes) / 100.0;

    const auto c = static_cast<Eigen::Index>(num_classes);
    Eigen::VectorXd params = Eigen::VectorXd::Zero(c * x.cols() + c);
    auto fg = [&](const Eigen::VectorXd& p, Eigen::VectorXd& g) {
        return probe_objective(p, x, labels, num_classes, l2, g);
    };
    const LbfgsResult res = lbfgs_minimize(fg, std::move(params), cfg.max_iter, cfg.grad_tol);

    ProbeModel model;
    model.weights = Eigen::Map<const MatrixXdRM>(res.x.data(), c, x.cols());
    model.bias = res.x.tail(c);
    model.l2_strength = l2;
    return model;
}

ProbePrediction predict_probe(const ProbeModel& model, const EmbeddingMatrix& x,
                              bool normalize_features, unsigned threads) {
    if (static_cast<Eigen::Index>(x.dim) != model.weights.cols())
        throw ShapeError("feature dim " + std::to_string(x.dim) + " != model dim " +
                         std::to_string(model.weights.cols()));
    const EmbeddingMatrix* features = &x;
    EmbeddingMatrix normalized;
    if (normalize_features) {
        normalized = normalize_rows(x);
        features = &normalized;
    }
    const MatrixXdRM xd = features->as_double();
    const auto n = x.rows;
    const auto c = model.weights.rows();

    ProbePrediction out;
    out.probabilities.resize(static_cast<Eigen::Index>(n), c);
    out.labels.assign(n, 0);
    parallel_for(n, resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            Eigen::RowVectorXd z =
                xd.row(ii) * model.weights.transpose() + model.bias.transpose();
            const double mx = z.maxCoeff();
            Eigen::RowVectorXd ex = (z.array() - mx).exp();
            out.probabilities.row(ii) = ex / ex.sum();
            Eigen::Index best = 0;
            out.probabilities.row(ii).maxCoeff(&best);
            out.labels[i] = static_cast<int>(best);
        }
    });
    return out;
}

std::vector<std::size_t> stratified_subsample(std::span<const int> labels, double fraction,
                                              std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0)
        throw RangeError("fraction must be in (0, 1]");
    int max_label = 0;
    for (int l : labels) max_label = std::max(max_label, l);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label) + 1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    std::vector<std::size_t> out;
    for (std::size_t cls = 0; cls < by_class.size(); ++cls) {
        auto& idx = by_class[cls];
        if (idx.empty()) continue;
        Rng rng = Rng::fork(seed, cls);
        rng.shuffle(idx);
        const auto take = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(idx.size()) + 0.5));
        out.insert(out.end(), idx.begin(),
                   idx.begin() + static_cast<std::ptrdiff_t>(std::min(take, idx.size())));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace embedlab
