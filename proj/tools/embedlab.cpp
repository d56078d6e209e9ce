// embedlab: batch evaluation toolkit over precomputed embedding matrices.
//
// Verbs: convert, validate, zeroshot, retrieve, probe, objectives, sae,
// concepts, stats, survival. Every verb writes a JSON report carrying the
// tool version, the config echo, and the seed; reruns with identical config
// and seed are byte-identical (pass --no-timestamp to strip wall-clock
// fields).
//
// Exit codes: 0 success, 1 domain error (bad data, missing file), 2 usage.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_common.hpp"
#include "embedlab/concepts.hpp"
#include "embedlab/errors.hpp"
#include "embedlab/metrics.hpp"
#include "embedlab/objectives.hpp"
#include "embedlab/parallel.hpp"
#include "embedlab/probe.hpp"
#include "embedlab/report.hpp"
#include "embedlab/retrieval.hpp"
#include "embedlab/sae.hpp"
#include "embedlab/store.hpp"
#include "embedlab/survival.hpp"
#include "embedlab/version.hpp"
#include "embedlab/zeroshot.hpp"

namespace {

using namespace embedlab;
using namespace embedlab::cli;
using nlohmann::json;

void add_common(CLI::App* cmd, CommonOpts& o, bool with_boot = true) {
    cmd->add_option("--seed", o.seed, "master RNG seed")->capture_default_str();
    if (with_boot)
        cmd->add_option("--bootstrap", o.n_boot, "bootstrap replicates (0 disables)")
            ->capture_default_str();
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto)")->capture_default_str();
    cmd->add_flag("--no-timestamp", o.no_timestamp, "omit timestamp and wall time from reports");
    cmd->add_option("--out", o.out, "output report path")->required();
}

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

MatrixXdRM json_to_matrix(const json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw DataError(std::string(what) + " must be a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().size();
    MatrixXdRM m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols)
            throw ShapeError(std::string(what) + " has ragged rows");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
    return m;
}

EmbeddingMatrix matrix_to_embedding(const MatrixXdRM& m) {
    EmbeddingMatrix e(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            e.row(static_cast<std::size_t>(i))[static_cast<std::size_t>(j)] =
                static_cast<float>(m(i, j));
    return e;
}

// classification metric battery with bootstrap CIs; auroc uses the binary
// positive-class score when C == 2, else macro one-vs-rest on the matrix
void add_classification_metrics(ReportBuilder& report, std::span<const int> y_true,
                                std::span<const int> y_pred, const MatrixXdRM& probs,
                                std::size_t num_classes, const CommonOpts& opts) {
    const unsigned threads = resolve_threads(opts.threads);
    report.add_metric("bacc", bootstrap_label_metric(
                                  [](auto yt, auto yp) { return balanced_accuracy(yt, yp); },
                                  y_true, y_pred, opts));
    report.add_metric("w_f1",
                      bootstrap_label_metric(
                          [num_classes](auto yt, auto yp) {
                              return f1_scores(yt, yp, num_classes).weighted;
                          },
                          y_true, y_pred, opts));
    report.add_metric("m_f1",
                      bootstrap_label_metric(
                          [num_classes](auto yt, auto yp) {
                              return f1_scores(yt, yp, num_classes).macro;
                          },
                          y_true, y_pred, opts));
    if (probs.size() == 0) return;

    if (num_classes == 2) {
        // positive class is the second manifest entry
        std::vector<double> score(y_true.size());
        for (std::size_t i = 0; i < score.size(); ++i)
            score[i] = probs(static_cast<Eigen::Index>(i), 1);
        auto stat = [&](std::span<const std::size_t> idx) {
            std::vector<double> s(idx.size());
            std::vector<int> l(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                s[i] = score[idx[i]];
                l[i] = y_true[idx[i]];
            }
            return auroc(s, l);
        };
        report.add_metric("auroc",
                          bootstrap_ci(stat, y_true.size(), opts.n_boot, opts.seed, threads));
        report.add_metric("sens",
                          bootstrap_label_metric(
                              [](auto yt, auto yp) {
                                  const auto recall = per_class_recall(yt, yp, 2);
                                  return recall[1];
                              },
                              y_true, y_pred, opts));
    } else {
        auto stat = [&](std::span<const std::size_t> idx) {
            MatrixXdRM p(static_cast<Eigen::Index>(idx.size()), probs.cols());
            std::vector<int> l(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                p.row(static_cast<Eigen::Index>(i)) = probs.row(static_cast<Eigen::Index>(idx[i]));
                l[i] = y_true[idx[i]];
            }
            return multiclass_auroc(p, l);
        };
        report.add_metric("auroc",
                          bootstrap_ci(stat, y_true.size(), opts.n_boot, opts.seed, threads));
    }
}

void write_predictions_csv(const std::string& path, std::span<const std::string> ids,
                           std::span<const int> y_true, std::span<const int> y_pred,
                           const MatrixXdRM& probs) {
    std::ofstream os(path);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os << "id,y_true,y_pred";
    for (Eigen::Index c = 0; c < probs.cols(); ++c) os << ",prob_" << c;
    if (probs.cols() == 2) os << ",score";
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        os << (i < ids.size() ? ids[i] : "row" + std::to_string(i)) << ',' << y_true[i] << ','
           << y_pred[i];
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", probs(static_cast<Eigen::Index>(i), c));
            os << ',' << buf;
        }
        if (probs.cols() == 2) {
            std::snprintf(buf, sizeof(buf), "%.17g",
                          probs(static_cast<Eigen::Index>(i), 1));
            os << ',' << buf;
        }
        os << "\n";
    }
}

// ---------------------------------------------------------------- convert

struct ConvertOpts {
    std::string in, out, manifest;
};

void run_convert(const ConvertOpts& o) {
    const auto ext = std::filesystem::path(o.in).extension();
    if (ext == ".csv") {
        const auto [ids, m] = load_csv(o.in);
        save_embeddings(m, o.out);
        std::cout << "wrote " << m.rows << " x " << m.dim << " -> " << o.out << "\n";
    } else {
        const auto m = load_embeddings(o.in);
        std::vector<std::string> ids;
        if (!o.manifest.empty()) {
            ids = load_manifest(o.manifest).ids;
            if (ids.size() != m.rows)
                throw ManifestError("manifest rows != matrix rows");
        } else {
            for (std::size_t i = 0; i < m.rows; ++i) ids.push_back("row" + std::to_string(i));
        }
        save_csv(m, ids, o.out);
        std::cout << "wrote " << m.rows << " x " << m.dim << " -> " << o.out << "\n";
    }
}

// ---------------------------------------------------------------- validate

struct ValidateOpts {
    std::string emb, manifest;
    bool normalized = false;
};

void run_validate(const ValidateOpts& o) {
    const auto m = load_embeddings(o.emb);
    validate_matrix(m, o.normalized);
    if (!o.manifest.empty()) {
        const auto manifest = load_manifest(o.manifest);
        if (manifest.size() != m.rows)
            throw ManifestError("manifest has " + std::to_string(manifest.size()) +
                                " rows, matrix has " + std::to_string(m.rows));
    }
    std::cout << "OK: " << m.rows << " x " << m.dim << "\n";
}

// ---------------------------------------------------------------- zeroshot

struct ZeroShotOpts {
    CommonOpts common;
    std::string images, class_emb_dir, manifest, pred_out;
    double tau = 0.01;
    bool renorm_proto = true;
    bool normalize_images = false;
};

void run_zeroshot(const ZeroShotOpts& o) {
    Stopwatch clock;
    auto images = load_embeddings(o.images);
    const auto manifest = load_manifest(o.manifest);
    if (manifest.size() != images.rows)
        throw ManifestError("manifest rows != image rows");
    if (o.normalize_images)
        images = normalize_rows(images);
    else
        validate_matrix(images, /*require_normalized=*/true);

    std::vector<EmbeddingMatrix> class_embeddings;
    for (const auto& name : manifest.class_names) {
        const auto path = std::filesystem::path(o.class_emb_dir) /
                          (sanitize_class_filename(name) + ".emb");
        class_embeddings.push_back(load_embeddings(path.string()));
    }
    const auto protos =
        build_prototypes(class_embeddings, manifest.class_names, o.renorm_proto);

    ZeroShotConfig cfg;
    cfg.temperature = o.tau;
    cfg.threads = resolve_threads(o.common.threads);
    const auto result = classify(images, protos, cfg);

    ReportBuilder report("zeroshot", o.common.seed, o.common.n_boot);
    report.set_config({{"images", o.images},
                       {"class_emb_dir", o.class_emb_dir},
                       {"manifest", o.manifest},
                       {"tau", o.tau},
                       {"renorm_proto", o.renorm_proto},
                       {"normalize_images", o.normalize_images}});
    add_classification_metrics(report, manifest.labels, result.labels, result.probabilities,
                               manifest.num_classes(), o.common);
    report.add_result("num_images", images.rows);
    report.add_result("num_classes", manifest.num_classes());
    if (!o.pred_out.empty())
        write_predictions_csv(o.pred_out, manifest.ids, manifest.labels, result.labels,
                              result.probabilities);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

// ---------------------------------------------------------------- retrieve

struct RetrieveOpts {
    CommonOpts common;
    std::string queries, candidates, pairs;
    std::string ks = "1,5,10";
    bool normalize = false;
};

void run_retrieve(const RetrieveOpts& o) {
    Stopwatch clock;
    auto queries = load_embeddings(o.queries);
    auto candidates = load_embeddings(o.candidates);
    if (o.normalize) {
        queries = normalize_rows(queries);
        candidates = normalize_rows(candidates);
    } else {
        validate_matrix(queries, true);
        validate_matrix(candidates, true);
    }
    const auto ks = parse_size_list(o.ks);
    const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
    if (k_max > candidates.rows)
        throw RangeError("k exceeds candidate count");

    // pairing: manifest ids are the candidate ids (candidate row order) and
    // pair_ids give each query's matched candidate id; default is row-aligned
    std::vector<std::size_t> matches;
    if (!o.pairs.empty()) {
        const auto m = load_manifest(o.pairs);
        if (!m.pair_ids)
            throw ManifestError("pairs manifest needs pair_ids");
        if (m.ids.size() != candidates.rows)
            throw ManifestError("pairs manifest ids must cover candidate rows");
        if (m.pair_ids->size() != queries.rows)
            throw ManifestError("pair_ids must cover query rows");
        matches = resolve_matches(*m.pair_ids, m.ids);
    } else {
        if (queries.rows != candidates.rows)
            throw ManifestError("row-aligned pairing needs equal query/candidate counts");
        matches.resize(queries.rows);
        for (std::size_t i = 0; i < matches.size(); ++i) matches[i] = i;
    }

    const auto results =
        retrieve(queries, candidates, k_max, &matches, resolve_threads(o.common.threads));

    ReportBuilder report("retrieve", o.common.seed, o.common.n_boot);
    report.set_config({{"queries", o.queries},
                       {"candidates", o.candidates},
                       {"pairs", o.pairs},
                       {"k", o.ks}});
    double mean_recall = 0.0;
    for (const std::size_t k : ks) {
        auto stat = [&](std::span<const std::size_t> idx) {
            std::size_t hits = 0;
            for (const auto qi : idx)
                if (*results[qi].rank_of_match <= k) ++hits;
            return static_cast<double>(hits) / static_cast<double>(idx.size());
        };
        const auto entry = bootstrap_ci(stat, results.size(), o.common.n_boot, o.common.seed,
                                        resolve_threads(o.common.threads));
        report.add_metric("recall@" + std::to_string(k), entry);
        mean_recall += entry.point;
    }
    report.add_result("mean_recall", mean_recall / static_cast<double>(ks.size()));
    report.add_result("num_queries", queries.rows);
    report.add_result("num_candidates", candidates.rows);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

// ---------------------------------------------------------------- probe

struct ProbeOpts {
    CommonOpts common;
    std::string train, test, manifest, curve, pred_out;
    std::string fractions = "1.0";
    double l2 = 0.0;
    bool normalize = false;
};

void run_probe(const ProbeOpts& o) {
    Stopwatch clock;
    const auto train = load_embeddings(o.train);
    const auto test = load_embeddings(o.test);
    const auto manifest = load_manifest(o.manifest);
    if (manifest.size() != train.rows + test.rows)
        throw ManifestError("manifest must cover train rows followed by test rows");
    std::vector<int> y_train(manifest.labels.begin(),
                             manifest.labels.begin() + static_cast<std::ptrdiff_t>(train.rows));
    std::vector<int> y_test(manifest.labels.begin() + static_cast<std::ptrdiff_t>(train.rows),
                            manifest.labels.end());
    if (manifest.split) {
        for (std::size_t i = 0; i < train.rows; ++i)
            if ((*manifest.split)[i] != "train")
                throw ManifestError("split tag mismatch at train row " + std::to_string(i));
        for (std::size_t i = train.rows; i < manifest.size(); ++i)
            if ((*manifest.split)[i] != "test")
                throw ManifestError("split tag mismatch at test row " + std::to_string(i));
    }

    const auto fractions = parse_double_list(o.fractions);
    ReportBuilder report("probe", o.common.seed, o.common.n_boot);
    report.set_config({{"train", o.train},
                       {"test", o.test},
                       {"manifest", o.manifest},
                       {"fractions", o.fractions},
                       {"l2", o.l2},
                       {"normalize", o.normalize}});

    std::vector<CurvePoint> curve;
    json per_fraction = json::object();
    MatrixXdRM full_probs;
    std::vector<int> full_pred;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double fraction = fractions[fi];
        const auto subset = stratified_subsample(y_train, fraction, o.common.seed + fi);
        EmbeddingMatrix sub(subset.size(), train.dim);
        std::vector<int> sub_labels(subset.size());
        for (std::size_t i = 0; i < subset.size(); ++i) {
            std::copy(train.row(subset[i]).begin(), train.row(subset[i]).end(),
                      sub.row(i).begin());
            sub_labels[i] = y_train[subset[i]];
        }
        ProbeConfig cfg;
        cfg.l2_strength = o.l2;
        cfg.normalize_features = o.normalize;
        const auto model = fit_probe(sub, sub_labels, manifest.num_classes(), cfg);
        const auto pred =
            predict_probe(model, test, o.normalize, resolve_threads(o.common.threads));

        CommonOpts frac_opts = o.common;
        ReportBuilder frac_report("probe", o.common.seed, o.common.n_boot);
        add_classification_metrics(frac_report, y_test, pred.labels, pred.probabilities,
                                   manifest.num_classes(), frac_opts);
        const auto key = std::to_string(fraction);
        per_fraction[key] = frac_report.json()["results"]["metrics"];
        per_fraction[key]["train_rows"] = subset.size();
        per_fraction[key]["l2_strength"] = model.l2_strength;
        const auto& bacc = per_fraction[key]["bacc"];
        curve.push_back({"bacc", fraction, bacc["point"].get<double>(),
                         bacc["ci_lo"].get<double>(), bacc["ci_hi"].get<double>()});
        if (fraction == fractions.back()) {
            full_probs = pred.probabilities;
            full_pred = pred.labels;
        }
    }
    report.add_result("per_fraction", per_fraction);
    if (!o.curve.empty()) write_curve_csv(o.curve, curve);
    if (!o.pred_out.empty()) {
        std::vector<std::string> test_ids(manifest.ids.begin() +
                                              static_cast<std::ptrdiff_t>(train.rows),
                                          manifest.ids.end());
        write_predictions_csv(o.pred_out, test_ids, y_test, full_pred, full_probs);
    }
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

// ---------------------------------------------------------------- objectives

struct ObjectivesOpts {
    CommonOpts common;
    std::string kind, batch;
    bool grad_check = false;
};

void run_objectives(const ObjectivesOpts& o) {
    Stopwatch clock;
    if (!std::filesystem::exists(o.batch))
        throw FileNotFound(o.batch);
    std::ifstream is(o.batch);
    json jb;
    try {
        is >> jb;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad batch JSON: ") + e.what());
    }

    ReportBuilder report("objectives", o.common.seed, o.common.n_boot);
    report.set_config({{"kind", o.kind}, {"batch", o.batch}, {"grad_check", o.grad_check}});

    auto grad_check_result = [&](const Eigen::VectorXd& analytic,
                                 const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0) {
        Eigen::VectorXd numeric(x0.size());
        Eigen::VectorXd xp = x0;
        for (Eigen::Index i = 0; i < x0.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x0(i)));
            xp(i) = x0(i) + h;
            const double fp = f(xp);
            xp(i) = x0(i) - h;
            const double fm = f(xp);
            xp(i) = x0(i);
            numeric(i) = (fp - fm) / (2.0 * h);
        }
        const double scale =
            std::max({analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-8});
        return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
    };

    if (o.kind == "infonce") {
        ContrastiveBatch batch;
        batch.u = json_to_matrix(jb.at("u"), "u");
        batch.v = json_to_matrix(jb.at("v"), "v");
        batch.tau = jb.value("tau", 0.07);
        const auto r = infonce_loss(batch);
        report.add_result("loss", r.loss);
        report.add_result("grad_u_norm", r.grad_u.norm());
        report.add_result("grad_v_norm", r.grad_v.norm());
        if (o.grad_check) {
            const auto n = batch.u.rows(), d = batch.u.cols();
            Eigen::VectorXd analytic(2 * n * d), x0(2 * n * d);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(i * d + j) = r.grad_u(i, j);
                    analytic(n * d + i * d + j) = r.grad_v(i, j);
                    x0(i * d + j) = batch.u(i, j);
                    x0(n * d + i * d + j) = batch.v(i, j);
                }
            auto f = [&](const Eigen::VectorXd& p) {
                ContrastiveBatch pb = batch;
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < d; ++j) {
                        pb.u(i, j) = p(i * d + j);
                        pb.v(i, j) = p(n * d + i * d + j);
                    }
                return infonce_loss(pb).loss;
            };
            report.add_result("grad_check_max_rel_err", grad_check_result(analytic, f, x0));
        }
    } else if (o.kind == "mim") {
        MaskedBatch batch;
        batch.student_visible = json_to_matrix(jb.at("student_visible"), "student_visible");
        batch.teacher_visible = json_to_matrix(jb.at("teacher_visible"), "teacher_visible");
        batch.student_masked = json_to_matrix(jb.at("student_masked"), "student_masked");
        batch.teacher_masked = json_to_matrix(jb.at("teacher_masked"), "teacher_masked");
        const auto r = mim_loss(batch);
        report.add_result("loss", r.loss);
        report.add_result("grad_visible_norm", r.grad_visible.norm());
        report.add_result("grad_masked_norm", r.grad_masked.norm());
        if (o.grad_check) {
            const auto nv = batch.student_visible.rows(), nm = batch.student_masked.rows(),
                       d = batch.student_visible.cols();
            Eigen::VectorXd analytic((nv + nm) * d), x0((nv + nm) * d);
            for (Eigen::Index i = 0; i < nv; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(i * d + j) = r.grad_visible(i, j);
                    x0(i * d + j) = batch.student_visible(i, j);
                }
            for (Eigen::Index i = 0; i < nm; ++i)
                for (Eigen::Index j = 0; j < d; ++j) {
                    analytic(nv * d + i * d + j) = r.grad_masked(i, j);
                    x0(nv * d + i * d + j) = batch.student_masked(i, j);
                }
            auto f = [&](const Eigen::VectorXd& p) {
                MaskedBatch pb = batch;
                for (Eigen::Index i = 0; i < nv; ++i)
                    for (Eigen::Index j = 0; j < d; ++j)
                        pb.student_visible(i, j) = p(i * d + j);
                for (Eigen::Index i = 0; i < nm; ++i)
                    for (Eigen::Index j = 0; j < d; ++j)
                        pb.student_masked(i, j) = p(nv * d + i * d + j);
                return mim_loss(pb).loss;
            };
            report.add_result("grad_check_max_rel_err", grad_check_result(analytic, f, x0));
        }
    } else {
        throw RangeError("--kind must be infonce or mim");
    }
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

// ---------------------------------------------------------------- sae

struct SaeTrainOpts {
    CommonOpts common;
    std::string data, model_out, curve;
    SaeTrainConfig cfg;
};

void run_sae_train(const SaeTrainOpts& o) {
    Stopwatch clock;
    const auto data = load_embeddings(o.data);
    SaeTrainConfig cfg = o.cfg;
    cfg.seed = o.common.seed;
    const auto result = sae_train(data, cfg);
    save_sae(result.model, o.model_out);

    ReportBuilder report("sae-train", o.common.seed, o.common.n_boot);
    report.set_config({{"data", o.data},
                       {"model_out", o.model_out},
                       {"lambda", cfg.lambda},
                       {"expansion", cfg.expansion},
                       {"learning_rate", cfg.learning_rate},
                       {"batch_size", cfg.batch_size},
                       {"epochs", cfg.epochs},
                       {"bias", cfg.use_bias},
                       {"center", cfg.center}});
    report.add_result("epoch_loss", result.epoch_loss);
    report.add_result("final_loss", result.epoch_loss.back());
    report.add_result("input_dim", result.model.input_dim());
    report.add_result("latent_dim", result.model.latent_dim());
    if (!o.curve.empty()) {
        std::vector<CurvePoint> curve;
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
            curve.push_back({"train_loss", static_cast<double>(e + 1), result.epoch_loss[e],
                             result.epoch_loss[e], result.epoch_loss[e]});
        write_curve_csv(o.curve, curve);
    }
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct SaeApplyOpts {
    std::string model, data, out;
};

void run_sae_encode(const SaeApplyOpts& o) {
    const auto model = load_sae(o.model);
    const auto data = load_embeddings(o.data);
    save_embeddings(matrix_to_embedding(sae_encode(model, data)), o.out);
    std::cout << "wrote latents " << data.rows << " x " << model.latent_dim() << "\n";
}

void run_sae_decode(const SaeApplyOpts& o) {
    const auto model = load_sae(o.model);
    const auto latents = load_embeddings(o.data);
    save_embeddings(matrix_to_embedding(sae_decode(model, latents.as_double())), o.out);
    std::cout << "wrote reconstruction " << latents.rows << " x " << model.input_dim() << "\n";
}

// ---------------------------------------------------------------- concepts

json sparse_model_to_json(const SparseLinearModel& m, int positive_class) {
    std::vector<double> weights(m.weights.data(), m.weights.data() + m.weights.size());
    return {{"alpha", m.alpha},
            {"bias", m.bias},
            {"weights", weights},
            {"support", m.support},
            {"positive_class", positive_class}};
}

SparseLinearModel sparse_model_from_json(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw FileNotFound(path);
    std::ifstream is(path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad classifier JSON: ") + e.what());
    }
    SparseLinearModel m;
    const auto weights = j.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                  static_cast<Eigen::Index>(weights.size()));
    m.bias = j.at("bias").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.support = j.at("support").get<std::vector<std::size_t>>();
    return m;
}

struct ConceptFilterOpts {
    CommonOpts common;
    std::string latents, manifest, clf_out;
    double alpha = 0.001;
    double lr = 1e-2;
    std::size_t epochs = 200;
    int positive_class = -1;
};

void run_concepts_filter(const ConceptFilterOpts& o) {
    Stopwatch clock;
    const auto latents = load_embeddings(o.latents);
    const auto manifest = load_manifest(o.manifest);
    if (manifest.size() != latents.rows)
        throw ManifestError("manifest rows != latent rows");

    int positive = o.positive_class;
    std::vector<int> binary(manifest.labels.size());
    if (positive < 0) {
        if (manifest.num_classes() != 2)
            throw RangeError("--class is required for non-binary manifests");
        positive = 1;
    }
    for (std::size_t i = 0; i < binary.size(); ++i)
        binary[i] = manifest.labels[i] == positive ? 1 : 0;

    ConceptFilterConfig cfg;
    cfg.alpha = o.alpha;
    cfg.learning_rate = o.lr;
    cfg.epochs = o.epochs;
    cfg.seed = o.common.seed;
    const auto model = fit_concept_filter(latents.as_double(), binary, cfg);

    std::ofstream os(o.clf_out);
    if (!os)
        throw DataError("cannot open for writing: " + o.clf_out);
    os << sparse_model_to_json(model, positive).dump(2) << "\n";

    ReportBuilder report("concepts-filter", o.common.seed, o.common.n_boot);
    report.set_config({{"latents", o.latents},
                       {"manifest", o.manifest},
                       {"alpha", o.alpha},
                       {"lr", o.lr},
                       {"epochs", o.epochs},
                       {"positive_class", positive},
                       {"clf_out", o.clf_out}});
    report.add_result("support_size", model.support.size());
    report.add_result("support", model.support);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct ConceptNameOpts {
    CommonOpts common;
    std::string model, clf, vocab_terms, vocab_emb, assignment_out;
};

void run_concepts_name(const ConceptNameOpts& o) {
    Stopwatch clock;
    const auto sae = load_sae(o.model);
    const auto clf = sparse_model_from_json(o.clf);
    const auto vocab = load_vocabulary(o.vocab_terms, o.vocab_emb);
    const auto assignment = name_concepts(sae, clf.support, vocab);

    json arr = json::array();
    for (const auto& match : assignment.matches)
        arr.push_back({{"concept", match.concept_index},
                       {"term", vocab.terms[match.term_index]},
                       {"sim", match.similarity}});
    if (!o.assignment_out.empty()) {
        std::ofstream os(o.assignment_out);
        if (!os)
            throw DataError("cannot open for writing: " + o.assignment_out);
        os << arr.dump(2) << "\n";
    }

    ReportBuilder report("concepts-name", o.common.seed, o.common.n_boot);
    report.set_config({{"model", o.model},
                       {"clf", o.clf},
                       {"vocab_terms", o.vocab_terms},
                       {"vocab_emb", o.vocab_emb}});
    report.add_result("assignment", arr);
    report.add_result("total_similarity", assignment.total_similarity);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct CbmOpts {
    CommonOpts common;
    std::string model, clf, images, manifest, suppress, pred_out;
};

void run_concepts_cbm(const CbmOpts& o) {
    Stopwatch clock;
    const auto sae = load_sae(o.model);
    const auto clf = sparse_model_from_json(o.clf);
    const auto images = load_embeddings(o.images);
    const auto manifest = load_manifest(o.manifest);
    if (manifest.size() != images.rows)
        throw ManifestError("manifest rows != image rows");
    std::vector<std::size_t> suppress;
    if (!o.suppress.empty()) suppress = parse_size_list(o.suppress);

    const Eigen::VectorXd prob = cbm_predict(sae, clf, images, suppress);
    std::vector<int> y_pred(images.rows);
    MatrixXdRM probs(static_cast<Eigen::Index>(images.rows), 2);
    for (std::size_t i = 0; i < images.rows; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        probs(ii, 1) = prob(ii);
        probs(ii, 0) = 1.0 - prob(ii);
        y_pred[i] = prob(ii) >= 0.5 ? 1 : 0;
    }

    ReportBuilder report("concepts-cbm", o.common.seed, o.common.n_boot);
    report.set_config({{"model", o.model},
                       {"clf", o.clf},
                       {"images", o.images},
                       {"manifest", o.manifest},
                       {"suppress", o.suppress}});
    add_classification_metrics(report, manifest.labels, y_pred, probs, 2, o.common);
    report.add_result("suppressed", suppress);
    if (!o.pred_out.empty())
        write_predictions_csv(o.pred_out, manifest.ids, manifest.labels, y_pred, probs);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct ArtifactOpts {
    CommonOpts common;
    std::string model, artifacts;
    std::size_t k = 5;
};

void run_concepts_artifacts(const ArtifactOpts& o) {
    Stopwatch clock;
    const auto sae = load_sae(o.model);
    const auto artifacts = load_embeddings(o.artifacts);
    const auto neurons = find_artifact_neurons(sae, artifacts, o.k);
    const MatrixXdRM act = sae_encode(sae, artifacts);
    const Eigen::RowVectorXd mean = act.colwise().mean();

    ReportBuilder report("concepts-artifact-neurons", o.common.seed, o.common.n_boot);
    report.set_config({{"model", o.model}, {"artifacts", o.artifacts}, {"k", o.k}});
    json arr = json::array();
    for (const auto n : neurons)
        arr.push_back({{"neuron", n}, {"mean_activation", mean(static_cast<Eigen::Index>(n))}});
    report.add_result("neurons", arr);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct InterveneOpts {
    std::string model, images, suppress, out;
};

void run_concepts_intervene(const InterveneOpts& o) {
    const auto sae = load_sae(o.model);
    const auto images = load_embeddings(o.images);
    std::vector<std::size_t> suppress;
    if (!o.suppress.empty()) suppress = parse_size_list(o.suppress);
    save_embeddings(matrix_to_embedding(intervene(sae, suppress, images)), o.out);
    std::cout << "wrote edited features " << images.rows << " x " << sae.input_dim() << "\n";
}

// ---------------------------------------------------------------- stats

struct StatsOpts {
    CommonOpts common;
    std::string pred, compare, metrics = "bacc,wf1,auroc";
};

void run_stats(const StatsOpts& o) {
    Stopwatch clock;
    const auto preds = read_predictions(o.pred);
    const unsigned threads = resolve_threads(o.common.threads);

    ReportBuilder report("stats", o.common.seed, o.common.n_boot);
    report.set_config({{"pred", o.pred}, {"metrics", o.metrics}, {"compare", o.compare}});

    std::optional<Predictions> other;
    if (!o.compare.empty()) other = read_predictions(o.compare);

    std::stringstream ss(o.metrics);
    std::string name;
    json comparisons = json::object();
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        // per-metric statistic over a resample of rows
        auto make_stat = [&](const Predictions& p) {
            return [&p, &name](std::span<const std::size_t> idx) -> double {
                std::vector<int> yt(idx.size()), yp(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    yt[i] = p.y_true[idx[i]];
                    yp[i] = p.y_pred[idx[i]];
                }
                if (name == "bacc") return balanced_accuracy(yt, yp);
                if (name == "wf1") return f1_scores(yt, yp, p.num_classes).weighted;
                if (name == "mf1") return f1_scores(yt, yp, p.num_classes).macro;
                if (name == "acc") {
                    std::size_t hits = 0;
                    for (std::size_t i = 0; i < yt.size(); ++i)
                        if (yt[i] == yp[i]) ++hits;
                    return static_cast<double>(hits) / static_cast<double>(yt.size());
                }
                if (name == "sens") {
                    const auto recall = per_class_recall(yt, yp, p.num_classes);
                    return recall.back();
                }
                if (name == "auroc") {
                    if (!p.score.empty()) {
                        std::vector<double> s(idx.size());
                        for (std::size_t i = 0; i < idx.size(); ++i) s[i] = p.score[idx[i]];
                        return auroc(s, yt);
                    }
                    if (p.probs.size() > 0) {
                        MatrixXdRM probs(static_cast<Eigen::Index>(idx.size()), p.probs.cols());
                        for (std::size_t i = 0; i < idx.size(); ++i)
                            probs.row(static_cast<Eigen::Index>(i)) =
                                p.probs.row(static_cast<Eigen::Index>(idx[i]));
                        return multiclass_auroc(probs, yt);
                    }
                    throw DataError("auroc needs a score or prob_* columns");
                }
                throw RangeError("unknown metric '" + name + "'");
            };
        };
        report.add_metric(name, bootstrap_ci(make_stat(preds), preds.y_true.size(),
                                             o.common.n_boot, o.common.seed, threads));
        if (other) {
            // two-sided t-test on the bootstrap distributions of both models
            const auto reps_a = bootstrap_replicates(make_stat(preds), preds.y_true.size(),
                                                     o.common.n_boot, o.common.seed, threads);
            const auto reps_b = bootstrap_replicates(make_stat(*other), other->y_true.size(),
                                                     o.common.n_boot, o.common.seed, threads);
            const auto t = welch_t_test(reps_a, reps_b);
            comparisons[name] = {{"t", t.statistic}, {"p", t.p_value}, {"df", t.df}};
        }
    }
    if (other) report.add_result("comparison", comparisons);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

struct PairedOpts {
    CommonOpts common;
    std::string pre, post, test = "wilcoxon", alternative = "greater";
};

void run_stats_paired(const PairedOpts& o) {
    Stopwatch clock;
    const auto pre = read_csv_table(o.pre).numeric("value");
    const auto post = read_csv_table(o.post).numeric("value");
    if (pre.size() != post.size())
        throw ShapeError("pre and post must pair row by row");

    Alternative alt = Alternative::two_sided;
    if (o.alternative == "greater") alt = Alternative::greater;
    else if (o.alternative == "less") alt = Alternative::less;
    else if (o.alternative != "two-sided") throw RangeError("bad --alternative");

    ReportBuilder report("stats-paired", o.common.seed, o.common.n_boot);
    report.set_config({{"pre", o.pre},
                       {"post", o.post},
                       {"test", o.test},
                       {"alternative", o.alternative}});
    if (o.test == "wilcoxon") {
        const auto r = wilcoxon_signed_rank(post, pre, alt);
        report.add_result("test", "wilcoxon_signed_rank");
        report.add_result("statistic", r.statistic);
        report.add_result("p_value", r.p_value);
    } else if (o.test == "ttest") {
        const auto r = paired_t_test(post, pre);
        report.add_result("test", "paired_t");
        report.add_result("statistic", r.statistic);
        double p = r.p_value;
        // one-sided p from the two-sided statistic
        if (alt == Alternative::greater) p = r.statistic > 0 ? p / 2.0 : 1.0 - p / 2.0;
        if (alt == Alternative::less) p = r.statistic < 0 ? p / 2.0 : 1.0 - p / 2.0;
        report.add_result("p_value", p);
        report.add_result("df", r.df);
    } else {
        throw RangeError("--test must be wilcoxon or ttest");
    }
    const double mean_diff = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < pre.size(); ++i) s += post[i] - pre[i];
        return s / static_cast<double>(pre.size());
    }();
    report.add_result("mean_difference", mean_diff);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

// ---------------------------------------------------------------- survival

struct SurvivalOpts {
    CommonOpts common;
    std::string data, curve, horizons = "3,5,7";
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool include_risk = false;
};

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_groups(
    const SurvivalTable& t, double threshold) {
    std::vector<std::size_t> a, b;
    if (!t.group.empty()) {
        std::set<std::string> names(t.group.begin(), t.group.end());
        if (names.size() != 2)
            throw DataError("need exactly two groups, got " + std::to_string(names.size()));
        const std::string first = *names.begin();
        for (std::size_t i = 0; i < t.group.size(); ++i)
            (t.group[i] == first ? a : b).push_back(i);
        return {a, b};
    }
    if (t.risk.empty())
        throw DataError("grouping needs a group column or a risk column");
    double cut = threshold;
    if (std::isnan(cut)) {
        std::vector<double> sorted = t.risk;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        cut = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    for (std::size_t i = 0; i < t.risk.size(); ++i)
        (t.risk[i] > cut ? a : b).push_back(i);
    if (a.empty() || b.empty())
        throw DataError("risk threshold produced an empty group");
    return {a, b};
}

void run_survival_km(const SurvivalOpts& o) {
    Stopwatch clock;
    const auto t = read_survival(o.data);
    ReportBuilder report("survival-km", o.common.seed, o.common.n_boot);
    report.set_config({{"data", o.data}});

    auto curve_json = [](const KmCurve& km) {
        json j = json::object();
        j["times"] = km.times;
        j["survival"] = km.survival;
        j["at_risk"] = km.at_risk;
        j["events"] = km.events;
        return j;
    };
    std::vector<CurvePoint> curve_rows;
    auto emit = [&](const std::string& series, const KmCurve& km) {
        curve_rows.push_back({series, 0.0, 1.0, 1.0, 1.0});
        for (std::size_t i = 0; i < km.times.size(); ++i) {
            const double se = std::sqrt(std::max(0.0, km.variance[i]));
            curve_rows.push_back({series, km.times[i], km.survival[i],
                                  std::max(0.0, km.survival[i] - 1.96 * se),
                                  std::min(1.0, km.survival[i] + 1.96 * se)});
        }
    };

    if (!t.group.empty() || !t.risk.empty()) {
        const auto [ia, ib] = split_groups(t, o.threshold);
        auto subset = [&](const std::vector<std::size_t>& idx) {
            std::vector<double> tt(idx.size());
            std::vector<int> ee(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                tt[i] = t.time[idx[i]];
                ee[i] = t.event[idx[i]];
            }
            return std::make_pair(tt, ee);
        };
        const auto [ta, ea] = subset(ia);
        const auto [tb, eb] = subset(ib);
        const auto km_a = kaplan_meier(ta, ea);
        const auto km_b = kaplan_meier(tb, eb);
        const std::string name_a = t.group.empty() ? "high_risk" : t.group[ia.front()];
        const std::string name_b = t.group.empty() ? "low_risk" : t.group[ib.front()];
        report.add_result("curves", json{{name_a, curve_json(km_a)}, {name_b, curve_json(km_b)}});
        emit(name_a, km_a);
        emit(name_b, km_b);
    } else {
        const auto km = kaplan_meier(t.time, t.event);
        report.add_result("curves", json{{"all", curve_json(km)}});
        emit("all", km);
    }
    if (!o.curve.empty()) write_curve_csv(o.curve, curve_rows);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

void run_survival_logrank(const SurvivalOpts& o) {
    Stopwatch clock;
    const auto t = read_survival(o.data);
    const auto [ia, ib] = split_groups(t, o.threshold);
    std::vector<double> ta, tb;
    std::vector<int> ea, eb;
    for (const auto i : ia) {
        ta.push_back(t.time[i]);
        ea.push_back(t.event[i]);
    }
    for (const auto i : ib) {
        tb.push_back(t.time[i]);
        eb.push_back(t.event[i]);
    }
    const auto r = log_rank(ta, ea, tb, eb);
    ReportBuilder report("survival-logrank", o.common.seed, o.common.n_boot);
    report.set_config({{"data", o.data}});
    report.add_result("chi2", r.chi2);
    report.add_result("p_value", r.p_value);
    report.add_result("n_group_a", ia.size());
    report.add_result("n_group_b", ib.size());
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

void run_survival_cox(const SurvivalOpts& o) {
    Stopwatch clock;
    const auto t = read_survival(o.data);
    std::vector<std::string> names = t.cov_names;
    MatrixXdRM x = t.covariates;
    if (o.include_risk) {
        if (t.risk.empty())
            throw DataError("--include-risk needs a risk column");
        MatrixXdRM with_risk(static_cast<Eigen::Index>(t.time.size()),
                             x.size() > 0 ? x.cols() + 1 : 1);
        for (Eigen::Index i = 0; i < with_risk.rows(); ++i) {
            with_risk(i, 0) = t.risk[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; x.size() > 0 && j < x.cols(); ++j)
                with_risk(i, j + 1) = x(i, j);
        }
        x = std::move(with_risk);
        names.insert(names.begin(), "risk");
    }
    if (x.size() == 0)
        throw DataError("no covariates: provide cov_* columns or --include-risk");

    const auto fit = cox_fit(x, t.time, t.event);
    ReportBuilder report("survival-cox", o.common.seed, o.common.n_boot);
    report.set_config({{"data", o.data}, {"include_risk", o.include_risk}});
    json covariates = json::object();
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        covariates[names[static_cast<std::size_t>(j)]] = {
            {"beta", fit.beta(j)},       {"hazard_ratio", fit.hazard_ratio(j)},
            {"se", fit.se(j)},           {"hr_ci_lo", fit.ci_lo(j)},
            {"hr_ci_hi", fit.ci_hi(j)},
        };
    }
    report.add_result("covariates", covariates);
    report.add_result("log_likelihood", fit.log_likelihood);
    report.add_result("converged", fit.converged);
    report.add_result("iterations", fit.iterations);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

void run_survival_tdroc(const SurvivalOpts& o) {
    Stopwatch clock;
    const auto t = read_survival(o.data);
    if (t.risk.empty())
        throw DataError("tdroc needs a risk column");
    const auto horizons = parse_double_list(o.horizons);
    ReportBuilder report("survival-tdroc", o.common.seed, o.common.n_boot);
    report.set_config({{"data", o.data}, {"horizons", o.horizons}});
    json aucs = json::object();
    for (const double h : horizons) {
        char key[32];
        std::snprintf(key, sizeof(key), "%g", h);
        aucs[key] = time_dependent_roc(t.time, t.event, t.risk, h);
    }
    report.add_result("auc", aucs);
    report.write(o.common.out, !o.common.no_timestamp, clock.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding evaluation toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    // convert
    ConvertOpts convert_opts;
    auto* convert = app.add_subcommand("convert", "convert between CSV and binary embeddings");
    convert->add_option("--in", convert_opts.in, "input .csv or .emb")->required();
    convert->add_option("--out", convert_opts.out, "output path")->required();
    convert->add_option("--manifest", convert_opts.manifest, "manifest supplying row ids");
    convert->callback([&] { run_convert(convert_opts); });

    // validate
    ValidateOpts validate_opts;
    auto* validate = app.add_subcommand("validate", "validate an embedding file");
    validate->add_option("--emb", validate_opts.emb, "embedding file")->required();
    validate->add_option("--manifest", validate_opts.manifest, "manifest to cross-check rows");
    validate->add_flag("--normalized", validate_opts.normalized, "require unit-norm rows");
    validate->callback([&] { run_validate(validate_opts); });

    // zeroshot
    ZeroShotOpts zs;
    auto* zeroshot = app.add_subcommand("zeroshot", "prompt-ensemble zero-shot classification");
    zeroshot->add_option("--images", zs.images, "image embeddings")->required();
    zeroshot->add_option("--class-emb-dir", zs.class_emb_dir,
                         "directory of per-class template embeddings")->required();
    zeroshot->add_option("--manifest", zs.manifest, "dataset manifest")->required();
    zeroshot->add_option("--tau", zs.tau, "softmax temperature")->capture_default_str();
    zeroshot->add_flag("--renorm-proto,!--no-renorm-proto", zs.renorm_proto,
                       "renormalize averaged prototypes (cosine scoring is unaffected)");
    zeroshot->add_flag("--normalize-images", zs.normalize_images, "normalize image rows first");
    zeroshot->add_option("--pred-out", zs.pred_out, "write per-row predictions CSV");
    add_common(zeroshot, zs.common);
    zeroshot->callback([&] { run_zeroshot(zs); });

    // retrieve
    RetrieveOpts rt;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "cross-modal retrieval recall@k");
    retrieve_cmd->add_option("--queries", rt.queries, "query embeddings")->required();
    retrieve_cmd->add_option("--candidates", rt.candidates, "candidate embeddings")->required();
    retrieve_cmd->add_option("--pairs", rt.pairs,
                             "manifest: ids = candidate ids, pair_ids = per-query match");
    retrieve_cmd->add_option("--k", rt.ks, "comma-separated k values")->capture_default_str();
    retrieve_cmd->add_flag("--normalize", rt.normalize, "normalize rows first");
    add_common(retrieve_cmd, rt.common);
    retrieve_cmd->callback([&] { run_retrieve(rt); });

    // probe
    ProbeOpts pr;
    auto* probe = app.add_subcommand("probe", "linear probe on frozen embeddings");
    probe->add_option("--train", pr.train, "training embeddings")->required();
    probe->add_option("--test", pr.test, "test embeddings")->required();
    probe->add_option("--manifest", pr.manifest, "manifest over train rows then test rows")
        ->required();
    probe->add_option("--fractions", pr.fractions, "label-efficiency fractions")
        ->capture_default_str();
    probe->add_option("--l2", pr.l2,
                      "inverse regularization strength (0 = auto M*C/100)")
        ->capture_default_str();
    probe->add_flag("--normalize", pr.normalize, "L2-normalize features");
    probe->add_option("--curve", pr.curve, "write label-efficiency curve CSV");
    probe->add_option("--pred-out", pr.pred_out, "write test predictions CSV");
    add_common(probe, pr.common);
    probe->callback([&] { run_probe(pr); });

    // objectives
    ObjectivesOpts ob;
    auto* objectives = app.add_subcommand("objectives", "pretraining loss computations");
    objectives->add_option("--kind", ob.kind, "infonce or mim")->required();
    objectives->add_option("--batch", ob.batch, "batch JSON file")->required();
    objectives->add_flag("--grad-check", ob.grad_check, "verify analytic gradients");
    add_common(objectives, ob.common);
    objectives->callback([&] { run_objectives(ob); });

    // sae
    auto* sae = app.add_subcommand("sae", "sparse autoencoder");
    sae->require_subcommand(1);
    SaeTrainOpts st;
    auto* sae_train_cmd = sae->add_subcommand("train", "train on embedding rows");
    sae_train_cmd->add_option("--data", st.data, "training embeddings")->required();
    sae_train_cmd->add_option("--model-out", st.model_out, "model output path")->required();
    sae_train_cmd->add_option("--lambda", st.cfg.lambda, "L1 sparsity coefficient")
        ->capture_default_str();
    sae_train_cmd->add_option("--expansion", st.cfg.expansion, "latent dim / input dim")
        ->capture_default_str();
    sae_train_cmd->add_option("--lr", st.cfg.learning_rate, "Adam learning rate")
        ->capture_default_str();
    sae_train_cmd->add_option("--batch-size", st.cfg.batch_size, "minibatch size")
        ->capture_default_str();
    sae_train_cmd->add_option("--epochs", st.cfg.epochs, "training epochs")
        ->capture_default_str();
    sae_train_cmd->add_flag("--bias", st.cfg.use_bias, "learn a pre-encoder bias");
    sae_train_cmd->add_flag("--center", st.cfg.center, "subtract the training mean");
    sae_train_cmd->add_option("--curve", st.curve, "write loss curve CSV");
    add_common(sae_train_cmd, st.common);
    sae_train_cmd->callback([&] { run_sae_train(st); });

    SaeApplyOpts se, sd;
    auto* sae_encode_cmd = sae->add_subcommand("encode", "emit latent activations");
    sae_encode_cmd->add_option("--model", se.model)->required();
    sae_encode_cmd->add_option("--data", se.data)->required();
    sae_encode_cmd->add_option("--out", se.out)->required();
    sae_encode_cmd->callback([&] { run_sae_encode(se); });
    auto* sae_decode_cmd = sae->add_subcommand("decode", "reconstruct from latents");
    sae_decode_cmd->add_option("--model", sd.model)->required();
    sae_decode_cmd->add_option("--latents", sd.data)->required();
    sae_decode_cmd->add_option("--out", sd.out)->required();
    sae_decode_cmd->callback([&] { run_sae_decode(sd); });

    // concepts
    auto* concepts = app.add_subcommand("concepts", "discover-then-name pipeline");
    concepts->require_subcommand(1);
    ConceptFilterOpts cf;
    auto* filter = concepts->add_subcommand("filter", "L1-logistic concept filter");
    filter->add_option("--latents", cf.latents, "latent activations (.emb)")->required();
    filter->add_option("--manifest", cf.manifest)->required();
    filter->add_option("--alpha", cf.alpha, "L1 penalty strength")->capture_default_str();
    filter->add_option("--lr", cf.lr, "SGD learning rate")->capture_default_str();
    filter->add_option("--epochs", cf.epochs)->capture_default_str();
    filter->add_option("--class", cf.positive_class,
                       "positive class (one-vs-rest); default 1 on binary manifests");
    filter->add_option("--clf-out", cf.clf_out, "classifier JSON output")->required();
    add_common(filter, cf.common);
    filter->callback([&] { run_concepts_filter(cf); });

    ConceptNameOpts cn;
    auto* name_cmd = concepts->add_subcommand("name", "Hungarian concept naming");
    name_cmd->add_option("--model", cn.model, "SAE model")->required();
    name_cmd->add_option("--clf", cn.clf, "concept filter JSON (defines retained set)")
        ->required();
    name_cmd->add_option("--vocab-terms", cn.vocab_terms)->required();
    name_cmd->add_option("--vocab-emb", cn.vocab_emb)->required();
    name_cmd->add_option("--assignment-out", cn.assignment_out, "bare assignment array JSON");
    add_common(name_cmd, cn.common);
    name_cmd->callback([&] { run_concepts_name(cn); });

    CbmOpts cb;
    auto* cbm = concepts->add_subcommand("cbm", "concept bottleneck prediction");
    cbm->add_option("--model", cb.model)->required();
    cbm->add_option("--clf", cb.clf)->required();
    cbm->add_option("--images", cb.images)->required();
    cbm->add_option("--manifest", cb.manifest)->required();
    cbm->add_option("--suppress", cb.suppress, "comma-separated latents to zero");
    cbm->add_option("--pred-out", cb.pred_out, "write predictions CSV");
    add_common(cbm, cb.common);
    cbm->callback([&] { run_concepts_cbm(cb); });

    ArtifactOpts an;
    auto* artifact = concepts->add_subcommand("artifact-neurons",
                                              "latents most activated by an artifact set");
    artifact->add_option("--model", an.model)->required();
    artifact->add_option("--artifacts", an.artifacts, "artifact exemplar embeddings")->required();
    artifact->add_option("--k", an.k)->capture_default_str();
    add_common(artifact, an.common);
    artifact->callback([&] { run_concepts_artifacts(an); });

    InterveneOpts iv;
    auto* intervene_cmd = concepts->add_subcommand("intervene",
                                                   "suppress latents and reconstruct");
    intervene_cmd->add_option("--model", iv.model)->required();
    intervene_cmd->add_option("--images", iv.images)->required();
    intervene_cmd->add_option("--suppress", iv.suppress, "comma-separated latents to zero");
    intervene_cmd->add_option("--out", iv.out, "edited feature output (.emb)")->required();
    intervene_cmd->callback([&] { run_concepts_intervene(iv); });

    // stats
    StatsOpts so;
    PairedOpts po;
    auto* stats = app.add_subcommand("stats", "metrics, bootstrap CIs and tests");
    stats->add_option("--pred", so.pred, "predictions CSV");
    stats->add_option("--metrics", so.metrics, "comma-separated metric names")
        ->capture_default_str();
    stats->add_option("--compare", so.compare,
                      "second predictions CSV; adds t-tests on bootstrap distributions");
    stats->add_option("--seed", so.common.seed)->capture_default_str();
    stats->add_option("--bootstrap", so.common.n_boot)->capture_default_str();
    stats->add_option("--threads", so.common.threads)->capture_default_str();
    stats->add_flag("--no-timestamp", so.common.no_timestamp);
    stats->add_option("--out", so.common.out);
    auto* paired = stats->add_subcommand("paired", "paired pre/post reader comparison");
    paired->add_option("--pre", po.pre)->required();
    paired->add_option("--post", po.post)->required();
    paired->add_option("--test", po.test, "wilcoxon or ttest")->capture_default_str();
    paired->add_option("--alternative", po.alternative, "greater, less or two-sided")
        ->capture_default_str();
    add_common(paired, po.common, /*with_boot=*/false);
    paired->callback([&] { run_stats_paired(po); });
    stats->callback([&] {
        if (stats->get_subcommands().empty()) {
            if (so.pred.empty())
                throw CLI::RequiredError("--pred");
            if (so.common.out.empty())
                throw CLI::RequiredError("--out");
            run_stats(so);
        }
    });

    // survival
    auto* survival = app.add_subcommand("survival", "survival analysis");
    survival->require_subcommand(1);
    SurvivalOpts km_opts, lr_opts, cox_opts, roc_opts;
    auto* km = survival->add_subcommand("km", "Kaplan-Meier curves");
    km->add_option("--data", km_opts.data, "records CSV")->required();
    km->add_option("--curve", km_opts.curve, "tidy curve CSV output");
    km->add_option("--threshold", km_opts.threshold, "risk cut (default median)");
    add_common(km, km_opts.common);
    km->callback([&] { run_survival_km(km_opts); });

    auto* logrank = survival->add_subcommand("logrank", "two-group log-rank test");
    logrank->add_option("--data", lr_opts.data)->required();
    logrank->add_option("--threshold", lr_opts.threshold, "risk cut (default median)");
    add_common(logrank, lr_opts.common);
    logrank->callback([&] { run_survival_logrank(lr_opts); });

    auto* cox = survival->add_subcommand("cox", "proportional hazards regression");
    cox->add_option("--data", cox_opts.data)->required();
    cox->add_flag("--include-risk", cox_opts.include_risk, "use the risk column as a covariate");
    add_common(cox, cox_opts.common);
    cox->callback([&] { run_survival_cox(cox_opts); });

    auto* tdroc = survival->add_subcommand("tdroc", "time-dependent ROC");
    tdroc->add_option("--data", roc_opts.data)->required();
    tdroc->add_option("--horizons", roc_opts.horizons, "comma-separated horizons")
        ->capture_default_str();
    add_common(tdroc, roc_opts.common);
    tdroc->callback([&] { run_survival_tdroc(roc_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const embedlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
