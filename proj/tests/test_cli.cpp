#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <set>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

json read_json(const fs::path& p) {
    std::ifstream is(p);
    REQUIRE(is.good());
    json j;
    is >> j;
    return j;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// minimal JSON-schema subset interpreter: type / const / required /
// properties / additionalProperties; enough to enforce the shipped schema
bool validate_schema(const json& schema, const json& value, std::string& error,
                     const std::string& path = "$") {
    if (schema.contains("const") && value != schema["const"]) {
        error = path + ": const mismatch";
        return false;
    }
    if (schema.contains("type")) {
        const std::string t = schema["type"];
        const bool ok = (t == "object" && value.is_object()) ||
                        (t == "string" && value.is_string()) ||
                        (t == "integer" && value.is_number_integer()) ||
                        (t == "number" && value.is_number()) ||
                        (t == "array" && value.is_array()) ||
                        (t == "boolean" && value.is_boolean());
        if (!ok) {
            error = path + ": expected type " + t;
            return false;
        }
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>())) {
                    error = path + ": missing required key " + key.get<std::string>();
                    return false;
                }
        const json props =
            schema.contains("properties") ? schema["properties"] : json::object();
        for (const auto& [key, child] : value.items()) {
            if (props.contains(key)) {
                if (!validate_schema(props[key], child, error, path + "." + key)) return false;
            } else if (schema.contains("additionalProperties")) {
                const auto& ap = schema["additionalProperties"];
                if (ap.is_boolean() && !ap.get<bool>()) {
                    error = path + ": unexpected key " + key;
                    return false;
                }
                if (ap.is_object() &&
                    !validate_schema(ap, child, error, path + "." + key))
                    return false;
            }
        }
    }
    return true;
}

struct Fixture {
    testutil::TempDir tmp{"cli"};
    fs::path data;

    Fixture() {
        data = tmp.path() / "demo";
        REQUIRE(run(std::string(DEMO_DATA_BIN) + " --out " + q(data) + " --seed 7") == 0);
    }
    std::string bin() const { return EMBEDLAB_BIN; }
};

void check_report_schema(const fs::path& report_path) {
    const json schema = read_json(SCHEMA_PATH);
    const json report = read_json(report_path);
    std::string error;
    const bool ok = validate_schema(schema, report, error);
    INFO(error);
    CHECK(ok);
}

}  // namespace

TEST_CASE("help exits zero, unknown flag exits two") {
    CHECK(run(std::string(EMBEDLAB_BIN) + " zeroshot --help > /dev/null") == 0);
    CHECK(run(std::string(EMBEDLAB_BIN) + " --help > /dev/null") == 0);
    CHECK(run(std::string(EMBEDLAB_BIN) + " zeroshot --definitely-not-a-flag 2> /dev/null") == 2);
    CHECK(run(std::string(EMBEDLAB_BIN) + " no-such-verb 2> /dev/null") == 2);
}

TEST_CASE("missing input file exits one with FileNotFound") {
    testutil::TempDir tmp("cli-missing");
    const auto err = tmp.file("err.txt");
    const int code = run(std::string(EMBEDLAB_BIN) + " validate --emb /nonexistent.emb 2> " + err);
    CHECK(code == 1);
    CHECK(read_file(err).find("FileNotFound") != std::string::npos);
}

TEST_CASE("zeroshot pipeline: report, schema, golden file") {
    Fixture fx;
    // run with relative paths from inside the fixture so the config echo (and
    // therefore the report bytes) is machine-independent
    const auto report_path = fx.data / "zeroshot_report.json";
    const std::string cmd =
        "cd " + q(fx.data) + " && " + fx.bin() +
        " zeroshot --images zeroshot/images.emb --class-emb-dir zeroshot/class_emb"
        " --manifest zeroshot/manifest.json"
        " --tau 0.01 --bootstrap 200 --seed 42 --no-timestamp --out zeroshot_report.json";
    REQUIRE(run(cmd + " > /dev/null") == 0);

    const json report = read_json(report_path);
    CHECK(report["tool"] == "embedlab");
    CHECK(report["command"] == "zeroshot");
    CHECK(report["seed"] == 42);
    CHECK(report["results"]["metrics"].contains("bacc"));
    CHECK(report["results"]["metrics"].contains("auroc"));
    const double bacc = report["results"]["metrics"]["bacc"]["point"];
    CHECK(bacc > 0.9);  // well-separated synthetic clusters
    check_report_schema(report_path);

    // golden-file comparison: frozen on first generation
    const fs::path golden = fs::path(GOLDEN_DIR) / "zeroshot_report.json";
    if (!fs::exists(golden)) {
        fs::create_directories(golden.parent_path());
        fs::copy_file(report_path, golden);
        MESSAGE("golden file created; rerun to compare");
    }
    CHECK(read_file(report_path) == read_file(golden));
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
    Fixture fx;
    const auto r1 = fx.tmp.path() / "r1.json";
    const auto r2 = fx.tmp.path() / "r2.json";
    const auto r4 = fx.tmp.path() / "r4.json";
    const std::string base =
        fx.bin() + " retrieve --queries " + q(fx.data / "retrieval/queries.emb") +
        " --candidates " + q(fx.data / "retrieval/candidates.emb") + " --pairs " +
        q(fx.data / "retrieval/pairs.json") +
        " --k 1,5,10 --bootstrap 300 --seed 42 --no-timestamp";
    REQUIRE(run(base + " --threads 1 --out " + q(r1) + " > /dev/null") == 0);
    REQUIRE(run(base + " --threads 1 --out " + q(r2) + " > /dev/null") == 0);
    REQUIRE(run(base + " --threads 4 --out " + q(r4) + " > /dev/null") == 0);
    const auto s1 = read_file(r1);
    CHECK(s1 == read_file(r2));
    CHECK(s1 == read_file(r4));
    CHECK(!s1.empty());
    check_report_schema(r1);
}

TEST_CASE("convert and validate round trip") {
    Fixture fx;
    const auto csv = fx.tmp.path() / "x.csv";
    const auto emb = fx.tmp.path() / "x.emb";
    REQUIRE(run(fx.bin() + " convert --in " + q(fx.data / "zeroshot/images.emb") + " --out " +
                q(csv) + " > /dev/null") == 0);
    REQUIRE(run(fx.bin() + " convert --in " + q(csv) + " --out " + q(emb) + " > /dev/null") == 0);
    CHECK(run(fx.bin() + " validate --emb " + q(emb) + " --normalized > /dev/null") == 0);
    CHECK(read_file(fx.data / "zeroshot/images.emb") == read_file(emb));
}

TEST_CASE("probe over fractions emits per-fraction metrics and curve") {
    Fixture fx;
    const auto report_path = fx.tmp.path() / "probe.json";
    const auto curve_path = fx.tmp.path() / "curve.csv";
    const std::string cmd =
        fx.bin() + " probe --train " + q(fx.data / "probe/train.emb") + " --test " +
        q(fx.data / "probe/test.emb") + " --manifest " + q(fx.data / "probe/manifest.json") +
        " --fractions 0.3,1.0 --bootstrap 100 --seed 42 --no-timestamp --curve " +
        q(curve_path) + " --out " + q(report_path);
    REQUIRE(run(cmd + " > /dev/null") == 0);
    const json report = read_json(report_path);
    CHECK(report["results"]["per_fraction"].contains("0.300000"));
    CHECK(report["results"]["per_fraction"].contains("1.000000"));
    const double bacc_full =
        report["results"]["per_fraction"]["1.000000"]["bacc"]["point"];
    CHECK(bacc_full > 0.8);
    const std::string curve = read_file(curve_path);
    CHECK(curve.rfind("series,x,y,lo,hi", 0) == 0);
    check_report_schema(report_path);
}

TEST_CASE("objectives grad check via CLI") {
    Fixture fx;
    for (const std::string kind : {"infonce", "mim"}) {
        const auto report_path = fx.tmp.path() / (kind + ".json");
        const std::string cmd = fx.bin() + " objectives --kind " + kind + " --batch " +
                                q(fx.data / ("objectives/" + kind + "_batch.json")) +
                                " --grad-check --no-timestamp --out " + q(report_path);
        REQUIRE(run(cmd + " > /dev/null") == 0);
        const json report = read_json(report_path);
        CHECK(report["results"]["grad_check_max_rel_err"].get<double>() < 1e-5);
        check_report_schema(report_path);
    }
}

TEST_CASE("sae + concepts pipeline end to end") {
    Fixture fx;
    const auto model = fx.tmp.path() / "model.sae";
    const auto train_report = fx.tmp.path() / "sae_train.json";
    REQUIRE(run(fx.bin() + " sae train --data " + q(fx.data / "concepts/train.emb") +
                " --model-out " + q(model) +
                " --lambda 0.001 --expansion 8 --lr 2e-3 --batch-size 128 --epochs 25"
                " --seed 42 --no-timestamp --out " + q(train_report) + " > /dev/null") == 0);
    check_report_schema(train_report);

    // encode/decode round trip through files
    const auto latents = fx.tmp.path() / "latents.emb";
    REQUIRE(run(fx.bin() + " sae encode --model " + q(model) + " --data " +
                q(fx.data / "concepts/train.emb") + " --out " + q(latents) + " > /dev/null") == 0);
    const auto recon = fx.tmp.path() / "recon.emb";
    REQUIRE(run(fx.bin() + " sae decode --model " + q(model) + " --latents " + q(latents) +
                " --out " + q(recon) + " > /dev/null") == 0);

    // concept filter on the latents
    const auto clf = fx.tmp.path() / "clf.json";
    const auto filter_report = fx.tmp.path() / "filter.json";
    REQUIRE(run(fx.bin() + " concepts filter --latents " + q(latents) + " --manifest " +
                q(fx.data / "concepts/train_manifest.json") +
                " --alpha 0.001 --seed 42 --no-timestamp --clf-out " + q(clf) + " --out " +
                q(filter_report) + " > /dev/null") == 0);
    const json fr = read_json(filter_report);
    CHECK(fr["results"]["support_size"].get<std::size_t>() > 0);

    // naming against the demo vocabulary (sparser filter keeps the retained
    // set within the vocabulary)
    const auto sparse_clf = fx.tmp.path() / "clf_sparse.json";
    REQUIRE(run(fx.bin() + " concepts filter --latents " + q(latents) + " --manifest " +
                q(fx.data / "concepts/train_manifest.json") +
                " --alpha 0.01 --seed 42 --no-timestamp --clf-out " + q(sparse_clf) + " --out " +
                q(fx.tmp.path() / "filter_sparse.json") + " > /dev/null") == 0);
    const auto name_report = fx.tmp.path() / "name.json";
    const auto assignment = fx.tmp.path() / "assignment.json";
    REQUIRE(run(fx.bin() + " concepts name --model " + q(model) + " --clf " + q(sparse_clf) +
                " --vocab-terms " + q(fx.data / "concepts/vocab_terms.txt") + " --vocab-emb " +
                q(fx.data / "concepts/vocab_emb.emb") + " --assignment-out " + q(assignment) +
                " --no-timestamp --out " + q(name_report) + " > /dev/null") == 0);
    {
        const json arr = read_json(assignment);
        REQUIRE(arr.is_array());
        REQUIRE(!arr.empty());
        CHECK(arr[0].contains("concept"));
        CHECK(arr[0].contains("term"));
        CHECK(arr[0].contains("sim"));
        // assigned terms are unique (one-to-one)
        std::set<std::string> seen;
        for (const auto& entry : arr) CHECK(seen.insert(entry["term"].get<std::string>()).second);
    }

    // artifact neurons + cbm with and without suppression
    const auto art_report = fx.tmp.path() / "artifacts.json";
    REQUIRE(run(fx.bin() + " concepts artifact-neurons --model " + q(model) + " --artifacts " +
                q(fx.data / "concepts/artifacts.emb") + " --k 5 --no-timestamp --out " +
                q(art_report) + " > /dev/null") == 0);
    const json ar = read_json(art_report);
    REQUIRE(ar["results"]["neurons"].size() == 5);
    std::string suppress;
    for (const auto& entry : ar["results"]["neurons"]) {
        if (!suppress.empty()) suppress += ",";
        suppress += std::to_string(entry["neuron"].get<std::size_t>());
    }

    const auto cbm_plain = fx.tmp.path() / "cbm_plain.json";
    const auto cbm_fixed = fx.tmp.path() / "cbm_fixed.json";
    const std::string cbm_base = fx.bin() + " concepts cbm --model " + q(model) + " --clf " +
                                 q(clf) + " --images " + q(fx.data / "concepts/test.emb") +
                                 " --manifest " + q(fx.data / "concepts/test_manifest.json") +
                                 " --bootstrap 50 --seed 42 --no-timestamp";
    REQUIRE(run(cbm_base + " --out " + q(cbm_plain) + " > /dev/null") == 0);
    REQUIRE(run(cbm_base + " --suppress " + suppress + " --out " + q(cbm_fixed) +
                " > /dev/null") == 0);
    const double auroc_plain = read_json(cbm_plain)["results"]["metrics"]["auroc"]["point"];
    const double auroc_fixed = read_json(cbm_fixed)["results"]["metrics"]["auroc"]["point"];
    CHECK(auroc_fixed > auroc_plain);  // suppression counteracts the confound

    // intervention in feature space: empty suppression reproduces the
    // reconstruction pipeline (the decode path went through a float32 latents
    // file, so compare at float precision rather than byte-for-byte)
    const auto edited = fx.tmp.path() / "edited.emb";
    REQUIRE(run(fx.bin() + " concepts intervene --model " + q(model) + " --images " +
                q(fx.data / "concepts/train.emb") + " --out " + q(edited) + " > /dev/null") == 0);
    {
        const std::string a = read_file(edited), b = read_file(recon);
        REQUIRE(a.size() == b.size());
        const std::size_t header = 8 + 4 + 8 + 4 + 1;
        std::size_t mismatched = 0;
        for (std::size_t off = header; off + 4 <= a.size(); off += 4) {
            float va, vb;
            std::memcpy(&va, a.data() + off, 4);
            std::memcpy(&vb, b.data() + off, 4);
            if (std::abs(va - vb) > 1e-5f * std::max(1.0f, std::abs(vb))) ++mismatched;
        }
        CHECK(mismatched == 0);
    }
}

TEST_CASE("stats and stats paired") {
    Fixture fx;
    const auto report_path = fx.tmp.path() / "stats.json";
    REQUIRE(run(fx.bin() + " stats --pred " + q(fx.data / "stats/preds_model_a.csv") +
                " --metrics bacc,wf1,auroc,acc --bootstrap 200 --seed 42 --no-timestamp" +
                " --compare " + q(fx.data / "stats/preds_model_b.csv") + " --out " +
                q(report_path) + " > /dev/null") == 0);
    const json report = read_json(report_path);
    CHECK(report["results"]["metrics"].contains("auroc"));
    CHECK(report["results"]["comparison"].contains("auroc"));
    // model a separates better than model b; the bootstrap t-test must see it
    CHECK(report["results"]["comparison"]["auroc"]["p"].get<double>() < 0.01);
    check_report_schema(report_path);

    const auto paired_path = fx.tmp.path() / "paired.json";
    REQUIRE(run(fx.bin() + " stats paired --pre " + q(fx.data / "stats/pre.csv") + " --post " +
                q(fx.data / "stats/post.csv") +
                " --test wilcoxon --alternative greater --no-timestamp --out " + q(paired_path) +
                " > /dev/null") == 0);
    const json paired = read_json(paired_path);
    CHECK(paired["results"]["p_value"].get<double>() < 0.05);
    check_report_schema(paired_path);

    // missing --pred is a usage error
    CHECK(run(fx.bin() + " stats --out /tmp/x.json 2> /dev/null") == 2);
}

TEST_CASE("survival verbs") {
    Fixture fx;
    const auto km_path = fx.tmp.path() / "km.json";
    const auto curve_path = fx.tmp.path() / "km_curve.csv";
    REQUIRE(run(fx.bin() + " survival km --data " + q(fx.data / "survival/records.csv") +
                " --curve " + q(curve_path) + " --no-timestamp --out " + q(km_path) +
                " > /dev/null") == 0);
    const json km = read_json(km_path);
    CHECK(km["results"]["curves"].contains("high_risk"));
    CHECK(km["results"]["curves"].contains("low_risk"));
    CHECK(read_file(curve_path).rfind("series,x,y,lo,hi", 0) == 0);
    check_report_schema(km_path);

    const auto lr_path = fx.tmp.path() / "logrank.json";
    REQUIRE(run(fx.bin() + " survival logrank --data " + q(fx.data / "survival/records.csv") +
                " --no-timestamp --out " + q(lr_path) + " > /dev/null") == 0);
    // risk is genuinely prognostic in the generator, so the split separates
    CHECK(read_json(lr_path)["results"]["p_value"].get<double>() < 0.01);

    const auto cox_path = fx.tmp.path() / "cox.json";
    REQUIRE(run(fx.bin() + " survival cox --data " + q(fx.data / "survival/records.csv") +
                " --include-risk --no-timestamp --out " + q(cox_path) + " > /dev/null") == 0);
    const json cox = read_json(cox_path);
    CHECK(cox["results"]["converged"].get<bool>());
    CHECK(cox["results"]["covariates"]["risk"]["hazard_ratio"].get<double>() > 1.0);

    const auto roc_path = fx.tmp.path() / "tdroc.json";
    REQUIRE(run(fx.bin() + " survival tdroc --data " + q(fx.data / "survival/records.csv") +
                " --horizons 2,4,6 --no-timestamp --out " + q(roc_path) + " > /dev/null") == 0);
    const json roc = read_json(roc_path);
    CHECK(roc["results"]["auc"]["2"].get<double>() > 0.6);
    check_report_schema(roc_path);
}
