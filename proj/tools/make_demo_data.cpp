// Generates the synthetic dataset bundle used by the demo pipeline and the
// CLI integration tests: clustered image/text embeddings with a manifest,
// retrieval pairs, toy objective batches, a confounded concept-discovery
// setup, survival records, and reader-study tables. Deterministic per seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embedlab/rng.hpp"
#include "embedlab/store.hpp"
#include "embedlab/types.hpp"

namespace fs = std::filesystem;
using namespace embedlab;
using nlohmann::json;

namespace {

const std::vector<std::string> kClassNames = {
    "nevus", "melanoma", "basal cell carcinoma", "seborrheic keratosis", "dermatofibroma"};

const std::vector<std::string> kTemplates = {
    "This is a skin image of {disease}.",
    "A skin image of {disease}.",
    "An image of {disease}, a skin condition.",
    "{disease}, a skin disorder, is shown in this image.",
    "The skin lesion depicted is {disease}.",
    "The skin cancer in this image is {disease}.",
    "This image depicts {disease}, a type of skin cancer.",
};

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return out;
}

Eigen::RowVectorXd random_unit(Rng& rng, std::size_t d) {
    Eigen::RowVectorXd v(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.next_normal();
    v.normalize();
    return v;
}

EmbeddingMatrix to_embedding(const std::vector<Eigen::RowVectorXd>& rows, bool normalize) {
    EmbeddingMatrix m(rows.size(), static_cast<std::size_t>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::RowVectorXd r = rows[i];
        if (normalize) r.normalize();
        for (std::size_t j = 0; j < m.dim; ++j)
            m.row(i)[j] = static_cast<float>(r(static_cast<Eigen::Index>(j)));
    }
    m.normalized = normalize;
    return m;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream os(path);
    os << content;
}

// clustered zero-shot set: class means on the sphere, per-class template
// embeddings jittered around the mean, images jittered more
void make_zeroshot(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir / "class_emb");
    Rng rng = Rng::fork(seed, 1);
    const std::size_t d = 32, per_class = 40;
    std::vector<Eigen::RowVectorXd> means;
    for (std::size_t c = 0; c < kClassNames.size(); ++c) means.push_back(random_unit(rng, d));

    DatasetManifest manifest;
    std::vector<Eigen::RowVectorXd> images;
    for (std::size_t c = 0; c < kClassNames.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            Eigen::RowVectorXd x = means[c];
            for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.22 * rng.next_normal();
            images.push_back(x);
            manifest.ids.push_back("img_" + std::to_string(c) + "_" + std::to_string(i));
            manifest.labels.push_back(static_cast<int>(c));
        }
        std::vector<Eigen::RowVectorXd> templates;
        for (std::size_t t = 0; t < kTemplates.size(); ++t) {
            Eigen::RowVectorXd v = means[c];
            for (Eigen::Index j = 0; j < v.size(); ++j) v(j) += 0.05 * rng.next_normal();
            templates.push_back(v);
        }
        save_embeddings(to_embedding(templates, true),
                        (dir / "class_emb" / (sanitize(kClassNames[c]) + ".emb")).string());
    }
    manifest.class_names = kClassNames;
    save_embeddings(to_embedding(images, true), (dir / "images.emb").string());
    save_manifest(manifest, (dir / "manifest.json").string());

    std::string templates_txt;
    for (const auto& t : kTemplates) templates_txt += t + "\n";
    write_text(dir / "templates.txt", templates_txt);
}

// paired image/text embeddings; candidate file shuffled against query order
void make_retrieval(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 2);
    const std::size_t n = 80, d = 32;
    std::vector<Eigen::RowVectorXd> queries, pair_targets;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::RowVectorXd base = random_unit(rng, d);
        Eigen::RowVectorXd text = base;
        for (Eigen::Index j = 0; j < text.size(); ++j) text(j) += 0.35 * rng.next_normal();
        queries.push_back(base);
        pair_targets.push_back(text);
    }
    const auto order = Rng::fork(seed, 3).permutation(n);

    DatasetManifest pairs;
    pairs.class_names = {"pair"};
    std::vector<Eigen::RowVectorXd> candidates(n);
    std::vector<std::string> cand_ids(n);
    for (std::size_t slot = 0; slot < n; ++slot) {
        const std::size_t q = order[slot];
        candidates[slot] = pair_targets[q];
        cand_ids[slot] = "txt" + std::to_string(q);
    }
    pairs.ids = cand_ids;                 // candidate ids, candidate row order
    pairs.labels.assign(n, 0);
    std::vector<std::string> pair_ids(n);  // per query row: its candidate id
    for (std::size_t q = 0; q < n; ++q) pair_ids[q] = "txt" + std::to_string(q);
    pairs.pair_ids = pair_ids;

    save_embeddings(to_embedding(queries, true), (dir / "queries.emb").string());
    save_embeddings(to_embedding(candidates, true), (dir / "candidates.emb").string());
    save_manifest(pairs, (dir / "pairs.json").string());
}

void make_probe(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 4);
    const std::size_t d = 24, n_train_per = 30, n_test_per = 15, classes = 3;
    std::vector<Eigen::RowVectorXd> means;
    for (std::size_t c = 0; c < classes; ++c) means.push_back(random_unit(rng, d) * 2.0);

    DatasetManifest manifest;
    std::vector<Eigen::RowVectorXd> train, test;
    auto sample = [&](std::size_t c) {
        Eigen::RowVectorXd x = means[c];
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.8 * rng.next_normal();
        return x;
    };
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < n_train_per; ++i) {
            train.push_back(sample(c));
            manifest.ids.push_back("tr_" + std::to_string(c) + "_" + std::to_string(i));
            manifest.labels.push_back(static_cast<int>(c));
        }
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t i = 0; i < n_test_per; ++i) {
            test.push_back(sample(c));
            manifest.ids.push_back("te_" + std::to_string(c) + "_" + std::to_string(i));
            manifest.labels.push_back(static_cast<int>(c));
        }
    manifest.class_names = {"inflammatory", "malignant", "benign"};
    std::vector<std::string> split(train.size(), "train");
    split.insert(split.end(), test.size(), "test");
    manifest.split = split;
    save_embeddings(to_embedding(train, false), (dir / "train.emb").string());
    save_embeddings(to_embedding(test, false), (dir / "test.emb").string());
    save_manifest(manifest, (dir / "manifest.json").string());
}

void make_objectives(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 5);
    const std::size_t n = 6, d = 8;
    auto matrix_json = [&](bool unit) {
        json rows = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::RowVectorXd v(static_cast<Eigen::Index>(d));
            for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.next_normal();
            if (unit) v.normalize();
            json row = json::array();
            for (Eigen::Index j = 0; j < v.size(); ++j) row.push_back(v(j));
            rows.push_back(row);
        }
        return rows;
    };
    json infonce = {{"tau", 0.1}, {"u", matrix_json(true)}, {"v", matrix_json(true)}};
    write_text(dir / "infonce_batch.json", infonce.dump(2) + "\n");
    json mim = {{"student_visible", matrix_json(false)},
                {"teacher_visible", matrix_json(false)},
                {"student_masked", matrix_json(false)},
                {"teacher_masked", matrix_json(false)}};
    write_text(dir / "mim_batch.json", mim.dump(2) + "\n");
}

// confounded concept-discovery setup: the artifact direction correlates with
// the label at train time and anti-correlates at test time
void make_concepts(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 6);
    const std::size_t d = 16, n_train = 600, n_test = 300, n_artifact = 60;
    const Eigen::RowVectorXd signal = random_unit(rng, d);
    Eigen::RowVectorXd artifact = random_unit(rng, d);
    artifact -= artifact.dot(signal) * signal;
    artifact.normalize();

    // artifact presence adds a direction; absence adds nothing (an image
    // either contains a ruler or it does not)
    auto sample = [&](int label, bool with_artifact) {
        Eigen::RowVectorXd x = (label == 1 ? 1.0 : -1.0) * signal;
        if (with_artifact) x += 2.0 * artifact;
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.3 * rng.next_normal();
        return x;
    };

    DatasetManifest train_manifest, test_manifest;
    train_manifest.class_names = {"benign", "melanoma"};
    test_manifest.class_names = train_manifest.class_names;
    std::vector<Eigen::RowVectorXd> train, test, artifacts;
    for (std::size_t i = 0; i < n_train; ++i) {
        const int y = static_cast<int>(rng.next_below(2));
        train.push_back(sample(y, /*with_artifact=*/y == 1));
        train_manifest.ids.push_back("tr" + std::to_string(i));
        train_manifest.labels.push_back(y);
    }
    for (std::size_t i = 0; i < n_test; ++i) {
        const int y = static_cast<int>(rng.next_below(2));
        test.push_back(sample(y, /*with_artifact=*/y == 0));  // reversed correlation
        test_manifest.ids.push_back("te" + std::to_string(i));
        test_manifest.labels.push_back(y);
    }
    for (std::size_t i = 0; i < n_artifact; ++i) {
        Eigen::RowVectorXd x = 2.0 * artifact;
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += 0.2 * rng.next_normal();
        artifacts.push_back(x);
    }
    save_embeddings(to_embedding(train, false), (dir / "train.emb").string());
    save_embeddings(to_embedding(test, false), (dir / "test.emb").string());
    save_embeddings(to_embedding(artifacts, false), (dir / "artifacts.emb").string());
    save_manifest(train_manifest, (dir / "train_manifest.json").string());
    save_manifest(test_manifest, (dir / "test_manifest.json").string());

    // demo vocabulary: concept-like terms with embeddings anchored on the
    // generating directions so naming is meaningful; sized to cover a
    // moderately sparse filter support
    const std::vector<std::string> terms = {
        "irregular pigmentation", "ruler marking",    "pigment network",
        "erosion",                "hair occlusion",   "regular border",
        "blue globules",          "streaks",          "dots and globules",
        "black",                  "color variation",  "tiny",
        "scale",                  "crust",            "ulceration",
        "telangiectasia",         "papule",           "nodule",
        "plaque",                 "atrophy",          "induration",
        "blue-whitish veil",      "regression areas", "vascular structures",
    };
    std::vector<Eigen::RowVectorXd> term_vecs;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        Eigen::RowVectorXd v;
        if (t == 0) v = signal;
        else if (t == 1) v = artifact;
        else v = random_unit(rng, d);
        Eigen::RowVectorXd jittered = v;
        for (Eigen::Index j = 0; j < jittered.size(); ++j)
            jittered(j) += 0.05 * rng.next_normal();
        term_vecs.push_back(jittered);
    }
    std::string terms_txt;
    for (const auto& t : terms) terms_txt += t + "\n";
    write_text(dir / "vocab_terms.txt", terms_txt);
    save_embeddings(to_embedding(term_vecs, true), (dir / "vocab_emb.emb").string());
}

void make_survival(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 7);
    const std::size_t n = 400;
    std::ofstream os(dir / "records.csv");
    os << "id,time,event,risk,cov_age,cov_thickness\n";
    char buf[160];
    for (std::size_t i = 0; i < n; ++i) {
        const double age = 40.0 + 20.0 * rng.next_normal();
        const double thickness = std::abs(1.0 + rng.next_normal());
        const double risk = 0.03 * (age - 40.0) + 0.8 * thickness + 0.3 * rng.next_normal();
        const double hazard = std::exp(0.9 * risk - 1.5);
        const double t = -std::log(1.0 - rng.next_double()) / hazard;
        const double censor = 1.0 + 9.0 * rng.next_double();
        const double time = std::max(1e-3, std::min(t, censor));
        const int event = t <= censor ? 1 : 0;
        std::snprintf(buf, sizeof(buf), "p%zu,%.6f,%d,%.6f,%.4f,%.4f\n", i, time, event, risk,
                      age, thickness);
        os << buf;
    }
}

void make_stats(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    Rng rng = Rng::fork(seed, 8);
    // two binary classifiers of different quality on the same task
    auto write_preds = [&](const fs::path& path, double separation) {
        std::ofstream os(path);
        os << "id,y_true,y_pred,score\n";
        char buf[96];
        for (int i = 0; i < 250; ++i) {
            const int y = static_cast<int>(rng.next_below(2));
            const double score =
                1.0 / (1.0 + std::exp(-(separation * (y == 1 ? 1.0 : -1.0) + rng.next_normal())));
            const int pred = score >= 0.5 ? 1 : 0;
            std::snprintf(buf, sizeof(buf), "s%d,%d,%d,%.6f\n", i, y, pred, score);
            os << buf;
        }
    };
    write_preds(dir / "preds_model_a.csv", 1.8);
    write_preds(dir / "preds_model_b.csv", 0.9);

    // paired reader scores, post shifted upward
    std::ofstream pre(dir / "pre.csv"), post(dir / "post.csv");
    pre << "id,value\n";
    post << "id,value\n";
    char buf[64];
    for (int r = 0; r < 24; ++r) {
        const double base = 2.5 + 0.8 * rng.next_normal();
        const double gain = 0.5 + 0.4 * rng.next_normal();
        std::snprintf(buf, sizeof(buf), "r%d,%.4f\n", r, base);
        pre << buf;
        std::snprintf(buf, sizeof(buf), "r%d,%.4f\n", r, base + gain);
        post << buf;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic demo dataset bundle"};
    std::string out = "demo_data";
    std::uint64_t seed = 42;
    app.add_option("--out", out, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "generator seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path root(out);
        make_zeroshot(root / "zeroshot", seed);
        make_retrieval(root / "retrieval", seed);
        make_probe(root / "probe", seed);
        make_objectives(root / "objectives", seed);
        make_concepts(root / "concepts", seed);
        make_survival(root / "survival", seed);
        make_stats(root / "stats", seed);
        std::cout << "demo data written to " << fs::absolute(root).string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
