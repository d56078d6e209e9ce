// Acceptance suite: runs each release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include "embedlab/concepts.hpp"
#include "embedlab/hungarian.hpp"
#include "embedlab/metrics.hpp"
#include "embedlab/objectives.hpp"
#include "embedlab/probe.hpp"
#include "embedlab/rng.hpp"
#include "embedlab/sae.hpp"
#include "embedlab/store.hpp"
#include "embedlab/survival.hpp"
#include "embedlab/zeroshot.hpp"

namespace fs = std::filesystem;
using namespace embedlab;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- shared generators ----

MatrixXdRM random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    MatrixXdRM m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_normal();
    return m;
}

MatrixXdRM unit_rows(MatrixXdRM m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
    return m;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        xp(i) = x(i) + h;
        const double fp = f(xp);
        xp(i) = x(i) - h;
        const double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
}

// error relative to the gradient scale (per-component normalization would
// amplify finite-difference noise on near-zero entries)
double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

// ---- criterion bodies ----

void criterion_auroc_oracle() {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next_below(48);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.next_below(10)) / 5.0;  // ties guaranteed
            labels[i] = static_cast<int>(rng.next_below(2));
            (labels[i] ? has1 : has0) = true;
        }
        if (!has0) labels[0] = 0;
        if (!has1) labels[n - 1] = 1;

        double pair_sum = 0.0;
        std::size_t n_pos = 0, n_neg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == 0) continue;
            ++n_pos;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                if (scores[i] > scores[j]) pair_sum += 1.0;
                else if (scores[i] == scores[j]) pair_sum += 0.5;
            }
        }
        n_neg = n - n_pos;
        const double brute = pair_sum / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        const double fast = auroc(scores, labels);
        require(std::abs(fast - brute) <= 1e-12,
                "trial " + std::to_string(trial) + ": |" + fmt(fast) + " - " + fmt(brute) +
                    "| > 1e-12");
    }
}

void criterion_hungarian() {
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng.next_below(7);   // <= 7 concepts
        const std::size_t cols = rows + rng.next_below(static_cast<std::uint64_t>(10 - rows));
        MatrixXdRM w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = 2.0 * rng.next_double() - 1.0;

        const auto assignment = hungarian_max(w);
        double total = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            total += w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));

        // exhaustive enumeration over injective assignments
        std::vector<std::size_t> cols_idx(cols);
        std::iota(cols_idx.begin(), cols_idx.end(), std::size_t{0});
        double best = -1e300;
        std::vector<std::size_t> pick(rows);
        std::function<void(std::size_t, std::vector<std::size_t>&)> rec =
            [&](std::size_t depth, std::vector<std::size_t>& avail) {
                if (depth == rows) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < rows; ++i)
                        s += w(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(pick[i]));
                    best = std::max(best, s);
                    return;
                }
                for (std::size_t k = 0; k < avail.size(); ++k) {
                    pick[depth] = avail[k];
                    std::vector<std::size_t> rest = avail;
                    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
                    rec(depth + 1, rest);
                }
            };
        rec(0, cols_idx);
        require(total == best, "trial " + std::to_string(trial) + ": solver " + fmt(total) +
                                   " != enumeration " + fmt(best));
    }
}

void criterion_gradients() {
    // 20 points each for the four objectives, rel err < 1e-5
    for (int trial = 0; trial < 20; ++trial) {
        // InfoNCE
        {
            const Eigen::Index n = 3 + trial % 3, d = 4 + trial % 3;
            ContrastiveBatch b;
            b.u = unit_rows(random_matrix(n, d, 100 + trial));
            b.v = unit_rows(random_matrix(n, d, 200 + trial));
            b.tau = 0.2 + 0.1 * (trial % 4);
            const auto r = infonce_loss(b);
            Eigen::VectorXd analytic(2 * n * d), x0(2 * n * d);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(i * d + j) = r.grad_u(i, j);
                    analytic(n * d + i * d + j) = r.grad_v(i, j);
                    x0(i * d + j) = b.u(i, j);
                    x0(n * d + i * d + j) = b.v(i, j);
                }
            auto f = [&](const Eigen::VectorXd& p) {
                ContrastiveBatch pb = b;
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < d; ++j) {
                        pb.u(i, j) = p(i * d + j);
                        pb.v(i, j) = p(n * d + i * d + j);
                    }
                return infonce_loss(pb).loss;
            };
            const double err = max_rel_err(analytic, central_difference(f, x0));
            require(err < 1e-5, "infonce point " + std::to_string(trial) + ": rel err " + fmt(err));
        }
        // masked latent loss
        {
            MaskedBatch b;
            const Eigen::Index nv = 2 + trial % 2, nm = 2, d = 5;
            b.student_visible = random_matrix(nv, d, 300 + trial);
            b.teacher_visible = random_matrix(nv, d, 400 + trial);
            b.student_masked = random_matrix(nm, d, 500 + trial);
            b.teacher_masked = random_matrix(nm, d, 600 + trial);
            const auto r = mim_loss(b);
            Eigen::VectorXd analytic((nv + nm) * d), x0((nv + nm) * d);
            for (Eigen::Index i = 0; i < nv; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(i * d + j) = r.grad_visible(i, j);
                    x0(i * d + j) = b.student_visible(i, j);
                }
            for (Eigen::Index i = 0; i < nm; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(nv * d + i * d + j) = r.grad_masked(i, j);
                    x0(nv * d + i * d + j) = b.student_masked(i, j);
                }
            auto f = [&](const Eigen::VectorXd& p) {
                MaskedBatch pb = b;
                for (Eigen::Index i = 0; i < nv; ++i)
                    for (Eigen::Index j = 0; j < d; ++j)
                        pb.student_visible(i, j) = p(i * d + j);
                for (Eigen::Index i = 0; i < nm; ++i)
                    for (Eigen::Index j = 0; j < d; ++j)
                        pb.student_masked(i, j) = p(nv * d + i * d + j);
                return mim_loss(pb).loss;
            };
            const double err = max_rel_err(analytic, central_difference(f, x0));
            require(err < 1e-5, "mim point " + std::to_string(trial) + ": rel err " + fmt(err));
        }
        // SAE loss (skip draws near the ReLU kink)
        {
            SaeModel model;
            model.lambda = 1e-3;
            model.expansion = 2;
            std::uint64_t seed = 700 + trial;
            MatrixXdRM x;
            do {
                model.w_enc = random_matrix(4, 8, seed);
                model.w_dec = random_matrix(8, 4, seed + 50);
                x = random_matrix(3, 4, seed + 100);
                seed += 1000;
            } while (((x * model.w_enc).array().abs() < 1e-4).any());

            const auto lg = sae_loss_grad(model, x);
            const Eigen::Index ne = 4 * 8;
            Eigen::VectorXd analytic(2 * ne), x0(2 * ne);
            for (Eigen::Index i = 0; i < 4; ++i)
                for (Eigen::Index j = 0; j < 8; ++j) {
                    analytic(i * 8 + j) = lg.grad_enc(i, j);
                    x0(i * 8 + j) = model.w_enc(i, j);
                }
            for (Eigen::Index i = 0; i < 8; ++i)
                for (Eigen::Index j = 0; j < 4; ++j) {
                    analytic(ne + i * 4 + j) = lg.grad_dec(i, j);
                    x0(ne + i * 4 + j) = model.w_dec(i, j);
                }
            auto f = [&](const Eigen::VectorXd& p) {
                SaeModel pm = model;
                for (Eigen::Index i = 0; i < 4; ++i)
                    for (Eigen::Index j = 0; j < 8; ++j) pm.w_enc(i, j) = p(i * 8 + j);
                for (Eigen::Index i = 0; i < 8; ++i)
                    for (Eigen::Index j = 0; j < 4; ++j) pm.w_dec(i, j) = p(ne + i * 4 + j);
                return sae_loss_grad(pm, x).loss;
            };
            const double err = max_rel_err(analytic, central_difference(f, x0));
            require(err < 1e-5, "sae point " + std::to_string(trial) + ": rel err " + fmt(err));
        }
        // regularized logistic objective
        {
            const std::size_t n = 25, m = 4, c = 3;
            const MatrixXdRM x = random_matrix(n, m, 800 + trial);
            std::vector<int> y(n);
            Rng rng(900 + trial);
            for (auto& v : y) v = static_cast<int>(rng.next_below(c));
            y[0] = 0;
            y[1] = 1;
            y[2] = 2;
            const double l2 = static_cast<double>(m * c) / 100.0;
            Eigen::VectorXd params = 0.3 * random_matrix(c * m + c, 1, 950 + trial).col(0);
            Eigen::VectorXd analytic;
            probe_objective(params, x, y, c, l2, analytic);
            auto f = [&](const Eigen::VectorXd& p) {
                Eigen::VectorXd g;
                return probe_objective(p, x, y, c, l2, g);
            };
            const double err = max_rel_err(analytic, central_difference(f, params));
            require(err < 1e-5,
                    "logistic point " + std::to_string(trial) + ": rel err " + fmt(err));
        }
    }
}

EmbeddingMatrix rank2_samples(std::size_t n, std::size_t d, std::uint64_t seed,
                              bool one_sided = false) {
    Rng rng(seed);
    Eigen::RowVectorXd b1(static_cast<Eigen::Index>(d)), b2(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < b1.size(); ++j) {
        b1(j) = rng.next_normal();
        b2(j) = rng.next_normal();
    }
    b1.normalize();
    b2 -= b2.dot(b1) * b1;
    b2.normalize();
    EmbeddingMatrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double a = rng.next_normal(), b = rng.next_normal();
        if (one_sided) {
            a = std::abs(a);
            b = std::abs(b);
        }
        for (std::size_t j = 0; j < d; ++j)
            x.row(i)[j] = static_cast<float>(a * b1(static_cast<Eigen::Index>(j)) +
                                             b * b2(static_cast<Eigen::Index>(j)));
    }
    return x;
}

void criterion_sae_recovery() {
    const auto data = rank2_samples(20000, 8, 4242);
    SaeTrainConfig cfg;
    cfg.lambda = 0.0;
    cfg.expansion = 8;
    cfg.learning_rate = 2e-3;
    cfg.batch_size = 512;
    cfg.epochs = 50;
    cfg.seed = 7;
    const auto result = sae_train(data, cfg);
    const MatrixXdRM x = data.as_double();
    const MatrixXdRM recon = sae_reconstruct(result.model, x);
    const double mse = (recon - x).squaredNorm() / static_cast<double>(x.rows());
    require(mse < 1e-3, "reconstruction MSE " + fmt(mse) + " >= 1e-3");

    // sparsity monotone in lambda on a fixed seed/data grid; one-sided
    // coefficients let the penalty silence latents outright
    const auto grid_data = rank2_samples(4000, 8, 4343, /*one_sided=*/true);
    double prev = -1.0;
    for (const double lambda : {0.0, 1e-4, 1e-2}) {
        SaeTrainConfig gcfg = cfg;
        gcfg.lambda = lambda;
        gcfg.epochs = 25;
        gcfg.seed = 9;
        const auto r = sae_train(grid_data, gcfg);
        const MatrixXdRM a = sae_encode(r.model, grid_data.as_double());
        const double zero_fraction =
            (a.array() == 0.0).cast<double>().sum() / static_cast<double>(a.size());
        require(zero_fraction >= prev, "zero fraction " + fmt(zero_fraction) +
                                           " decreased from " + fmt(prev) + " at lambda " +
                                           fmt(lambda));
        prev = zero_fraction;
    }
}

void criterion_zeroshot_geometry() {
    const std::size_t classes = 5, d = 64, per_class = 200;
    Rng rng(555);
    std::vector<Eigen::RowVectorXd> means;
    for (std::size_t c = 0; c < classes; ++c) {
        Eigen::RowVectorXd m(static_cast<Eigen::Index>(d));
        for (Eigen::Index j = 0; j < m.size(); ++j) m(j) = rng.next_normal();
        m.normalize();
        means.push_back(m);
    }
    // cluster sigma 0.08: noise norm ~0.64 against inter-mean distance ~1.41,
    // comfortably past 95% separability
    EmbeddingMatrix images(classes * per_class, d);
    std::vector<int> labels(classes * per_class);
    std::vector<EmbeddingMatrix> protos;
    for (std::size_t c = 0; c < classes; ++c) {
        EmbeddingMatrix proto(1, d);
        for (std::size_t j = 0; j < d; ++j)
            proto.row(0)[j] = static_cast<float>(means[c](static_cast<Eigen::Index>(j)));
        protos.push_back(normalize_rows(proto));
        for (std::size_t i = 0; i < per_class; ++i) {
            Eigen::RowVectorXd x = means[c];
            for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.08 * rng.next_normal();
            x.normalize();
            const std::size_t row = c * per_class + i;
            for (std::size_t j = 0; j < d; ++j)
                images.row(row)[j] = static_cast<float>(x(static_cast<Eigen::Index>(j)));
            labels[row] = static_cast<int>(c);
        }
    }
    images.normalized = true;

    const auto prototypes = build_prototypes(protos, {"a", "b", "c", "d", "e"});
    const auto result = classify(images, prototypes);

    const double bacc = balanced_accuracy(labels, result.labels);
    require(bacc >= 0.95, "BACC " + fmt(bacc) + " < 0.95");

    // nearest-cosine brute force must agree on every row
    const MatrixXdRM x = images.as_double();
    const MatrixXdRM p = prototypes.prototypes.as_double();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int best = 0;
        double best_sim = -2.0;
        for (Eigen::Index c = 0; c < p.rows(); ++c) {
            const double sim = x.row(i).dot(p.row(c));
            if (sim > best_sim) {
                best_sim = sim;
                best = static_cast<int>(c);
            }
        }
        require(result.labels[static_cast<std::size_t>(i)] == best,
                "row " + std::to_string(i) + ": classify disagrees with brute force");
    }
}

void criterion_intervention() {
    // label-correlated artifact at train time, anti-correlated at test time
    const std::size_t d = 16;
    Rng rng(666);
    Eigen::RowVectorXd signal(static_cast<Eigen::Index>(d)), artifact(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < signal.size(); ++j) {
        signal(j) = rng.next_normal();
        artifact(j) = rng.next_normal();
    }
    signal.normalize();
    artifact -= artifact.dot(signal) * signal;
    artifact.normalize();

    // artifact presence adds a direction; absence adds nothing
    auto sample = [&](int label, bool with_artifact) {
        Eigen::RowVectorXd x = (label == 1 ? 1.0 : -1.0) * signal;
        if (with_artifact) x += 2.0 * artifact;
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.3 * rng.next_normal();
        return x;
    };
    const std::size_t n_train = 2000, n_test = 1000, n_artifact = 100;
    EmbeddingMatrix train(n_train, d), test(n_test, d), artifacts(n_artifact, d);
    std::vector<int> y_train(n_train), y_test(n_test);
    for (std::size_t i = 0; i < n_train; ++i) {
        y_train[i] = static_cast<int>(rng.next_below(2));
        const auto x = sample(y_train[i], y_train[i] == 1);
        for (std::size_t j = 0; j < d; ++j)
            train.row(i)[j] = static_cast<float>(x(static_cast<Eigen::Index>(j)));
    }
    for (std::size_t i = 0; i < n_test; ++i) {
        y_test[i] = static_cast<int>(rng.next_below(2));
        const auto x = sample(y_test[i], y_test[i] == 0);  // reversed correlation
        for (std::size_t j = 0; j < d; ++j)
            test.row(i)[j] = static_cast<float>(x(static_cast<Eigen::Index>(j)));
    }
    for (std::size_t i = 0; i < n_artifact; ++i) {
        Eigen::RowVectorXd x = 2.0 * artifact;
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.2 * rng.next_normal();
        for (std::size_t j = 0; j < d; ++j)
            artifacts.row(i)[j] = static_cast<float>(x(static_cast<Eigen::Index>(j)));
    }

    SaeTrainConfig cfg;
    cfg.lambda = 1e-3;
    cfg.expansion = 8;
    cfg.learning_rate = 2e-3;
    cfg.batch_size = 256;
    cfg.epochs = 30;
    cfg.seed = 17;
    const auto sae = sae_train(train, cfg).model;

    const MatrixXdRM train_latents = sae_encode(sae, train);
    ConceptFilterConfig fcfg;  // alpha 0.001
    fcfg.seed = 18;
    const auto clf = fit_concept_filter(train_latents, y_train, fcfg);

    auto test_auroc = [&](std::span<const std::size_t> suppress) {
        const Eigen::VectorXd prob = cbm_predict(sae, clf, test, suppress);
        std::vector<double> scores(prob.data(), prob.data() + prob.size());
        return auroc(scores, y_test);
    };
    const double baseline = test_auroc({});
    const auto neurons = find_artifact_neurons(sae, artifacts, 5);
    const double suppressed = test_auroc(neurons);
    require(suppressed - baseline >= 0.10, "AUROC gain " + fmt(suppressed - baseline) +
                                               " < 0.10 (base " + fmt(baseline) + ", fixed " +
                                               fmt(suppressed) + ")");
}

void criterion_cox_recovery() {
    const double beta_true = std::log(2.0);
    std::size_t joint_hits = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        Rng rng = Rng::fork(2026, rep);
        const std::size_t n = 2000;
        std::vector<double> time(n);
        std::vector<int> event(n);
        MatrixXdRM x(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double cov = static_cast<double>(rng.next_below(2));
            x(static_cast<Eigen::Index>(i), 0) = cov;
            const double t = -std::log(1.0 - rng.next_double()) / std::exp(beta_true * cov);
            // ~20% uniform censoring
            const double c = rng.next_double() < 0.2
                                 ? t * rng.next_double()
                                 : std::numeric_limits<double>::infinity();
            time[i] = std::max(std::min(t, c), 1e-12);
            event[i] = t <= c ? 1 : 0;
        }
        const auto fit = cox_fit(x, time, event);
        const bool close = std::abs(fit.beta(0) - beta_true) <= 0.15;
        const bool covered =
            fit.ci_lo(0) <= std::exp(beta_true) && std::exp(beta_true) <= fit.ci_hi(0);
        if (close && covered) ++joint_hits;
    }
    require(joint_hits >= 90, "only " + std::to_string(joint_hits) +
                                  "/100 replications recovered beta within 0.15 with CI coverage");
}

void criterion_tdroc_reduction() {
    Rng rng(777);
    const std::size_t n = 500;
    std::vector<double> time(n), risk(n);
    std::vector<int> event(n, 1);  // fully uncensored
    for (std::size_t i = 0; i < n; ++i) {
        risk[i] = rng.next_normal();
        time[i] = 0.05 - std::log(1.0 - rng.next_double()) * std::exp(-risk[i]);
    }
    for (const double horizon : {0.3, 0.8, 1.5}) {
        std::vector<int> label(n);
        for (std::size_t i = 0; i < n; ++i) label[i] = time[i] <= horizon ? 1 : 0;
        const double statics = auroc(risk, label);
        const double dynamic = time_dependent_roc(time, event, risk, horizon);
        require(std::abs(dynamic - statics) <= 1e-9,
                "horizon " + fmt(horizon) + ": |" + fmt(dynamic) + " - " + fmt(statics) +
                    "| > 1e-9");
    }
}

void criterion_statistical_exactness() {
    // Wilcoxon one-sided exact: five positive differences
    const std::vector<double> a{2, 3, 4, 5, 6}, b{1, 2, 3, 4, 5};
    const auto w = wilcoxon_signed_rank(a, b, Alternative::greater);
    require(w.p_value == 1.0 / 32.0, "wilcoxon p " + fmt(w.p_value) + " != 1/32");

    // identical-sample t-tests
    const std::vector<double> s{1.2, 3.4, 2.2, 5.0};
    const auto welch = welch_t_test(s, s);
    require(welch.statistic == 0.0 && welch.p_value == 1.0,
            "welch on identical samples: t " + fmt(welch.statistic) + ", p " +
                fmt(welch.p_value));
    const auto paired = paired_t_test(s, s);
    require(paired.statistic == 0.0 && paired.p_value == 1.0,
            "paired on identical samples: t " + fmt(paired.statistic) + ", p " +
                fmt(paired.p_value));

    // log-rank on duplicated groups
    const std::vector<double> t{1, 2, 3, 4, 5};
    const std::vector<int> e{1, 0, 1, 1, 0};
    const auto lr = log_rank(t, e, t, e);
    require(lr.chi2 == 0.0, "log-rank chi2 " + fmt(lr.chi2) + " != 0");
}

void criterion_cli_determinism() {
#ifndef EMBEDLAB_BIN
    throw Failure("CLI path not configured");
#else
    const fs::path tmp =
        fs::temp_directory_path() / ("embedlab-acc-" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{tmp};

    auto sh = [](const std::string& cmd) {
        const int status = std::system(cmd.c_str());
        return status < 0 ? -1 : WEXITSTATUS(status);
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const std::string data = (tmp / "demo").string();
    require(sh(std::string(DEMO_DATA_BIN) + " --out '" + data + "' --seed 3 > /dev/null") == 0,
            "demo data generation failed");
    const std::string base = std::string(EMBEDLAB_BIN) + " zeroshot --images '" + data +
                             "/zeroshot/images.emb' --class-emb-dir '" + data +
                             "/zeroshot/class_emb' --manifest '" + data +
                             "/zeroshot/manifest.json' --bootstrap 300 --seed 42 --no-timestamp";
    require(sh(base + " --threads 1 --out '" + (tmp / "a.json").string() + "' > /dev/null") == 0,
            "first run failed");
    require(sh(base + " --threads 1 --out '" + (tmp / "b.json").string() + "' > /dev/null") == 0,
            "second run failed");
    require(sh(base + " --threads 4 --out '" + (tmp / "c.json").string() + "' > /dev/null") == 0,
            "threaded run failed");
    const std::string ja = slurp(tmp / "a.json");
    require(!ja.empty(), "empty report");
    require(ja == slurp(tmp / "b.json"), "rerun differs byte for byte");
    require(ja == slurp(tmp / "c.json"), "thread count changed the report bytes");
#endif
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "AUROC oracle equivalence (200 instances, 1e-12)", 5.0, criterion_auroc_oracle},
        {2, "Hungarian optimality (100 rectangular instances)", 5.0, criterion_hungarian},
        {3, "gradient verification (4 objectives x 20 points, rel < 1e-5)", 10.0,
         criterion_gradients},
        {4, "SAE recovery (rank-2, MSE < 1e-3; sparsity monotone in lambda)", 60.0,
         criterion_sae_recovery},
        {5, "zero-shot geometry (BACC >= 0.95, matches brute force)", 5.0,
         criterion_zeroshot_geometry},
        {6, "intervention efficacy (top-5 suppression, AUROC +0.10)", 120.0,
         criterion_intervention},
        {7, "Cox recovery (beta within 0.15 + CI coverage, >= 90/100)", 60.0,
         criterion_cox_recovery},
        {8, "time-dependent ROC reduction (uncensored, 1e-9)", 5.0, criterion_tdroc_reduction},
        {9, "statistical exactness (Wilcoxon 1/32, t-test guards, log-rank null)", 5.0,
         criterion_statistical_exactness},
        {10, "CLI determinism (rerun + thread-count byte identity)", 60.0,
         criterion_cli_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && elapsed > criterion.budget_seconds)
            error = "runtime " + fmt(elapsed) + "s exceeds budget " +
                    fmt(criterion.budget_seconds) + "s";
        if (error.empty()) {
            std::printf("[PASS] criterion %2d: %s (%.2fs)\n", criterion.id,
                        criterion.name.c_str(), elapsed);
        } else {
            std::printf("[FAIL] criterion %2d: %s (%.2fs): %s\n", criterion.id,
                        criterion.name.c_str(), elapsed, error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
