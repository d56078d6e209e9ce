#include "embedlab/store.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace embedlab {

namespace {

constexpr char kMagic[8] = {'D', 'F', 'M', 'Z', 'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 1;

void write_le_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_le_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_le_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_le_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
    if (!std::filesystem::exists(path))
        throw FileNotFound(path);
    std::ifstream is(path, mode);
    if (!is)
        throw FileNotFound(path);
    return is;
}

}  // namespace

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
    if (m.data.size() != m.rows * m.dim)
        throw FormatError("payload size does not match rows*dim");
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_le_u32(os, kVersion);
    write_le_u64(os, m.rows);
    write_le_u32(os, static_cast<std::uint32_t>(m.dim));
    const std::uint8_t dtype = kDtypeFloat32;
    os.write(reinterpret_cast<const char*>(&dtype), 1);
    // float32 payload is written verbatim; this library targets
    // little-endian hosts, matching the on-disk convention.
    os.write(reinterpret_cast<const char*>(m.data.data()),
             static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    if (!os)
        throw DataError("short write: " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream is = open_input(path, std::ios::binary);
    char magic[8];
    is.read(magic, 8);
    if (is.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("bad magic in " + path);
    const std::uint32_t version = read_le_u32(is);
    if (version != kVersion)
        throw FormatError("unsupported version " + std::to_string(version));
    const std::uint64_t rows = read_le_u64(is);
    const std::uint32_t dim = read_le_u32(is);
    std::uint8_t dtype = 0;
    is.read(reinterpret_cast<char*>(&dtype), 1);
    if (!is)
        throw FormatError("truncated header in " + path);
    if (dtype != kDtypeFloat32)
        throw UnsupportedDtype("dtype code " + std::to_string(dtype));

    EmbeddingMatrix m;
    m.rows = rows;
    m.dim = dim;
    m.data.resize(rows * dim);
    const std::streamsize want =
        static_cast<std::streamsize>(m.data.size() * sizeof(float));
    is.read(reinterpret_cast<char*>(m.data.data()), want);
    if (is.gcount() != want)
        throw FormatError("truncated payload in " + path + ": expected " +
                          std::to_string(want) + " bytes, got " +
                          std::to_string(is.gcount()));
    // trailing bytes mean the header lied about the shape
    is.peek();
    if (!is.eof())
        throw FormatError("trailing bytes after payload in " + path);
    return m;
}

void save_csv(const EmbeddingMatrix& m, const std::vector<std::string>& ids,
              const std::string& path) {
    if (ids.size() != m.rows)
        throw ShapeError("ids length != rows");
    std::ofstream os(path);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os << "id";
    for (std::size_t j = 0; j < m.dim; ++j) os << ",f" << j;
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < m.rows; ++i) {
        os << ids[i];
        for (std::size_t j = 0; j < m.dim; ++j) {
            // %.9g round-trips any float32 exactly through from_chars
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(m.data[i * m.dim + j]));
            os << ',' << buf;
        }
        os << "\n";
    }
}

std::pair<std::vector<std::string>, EmbeddingMatrix> load_csv(const std::string& path) {
    std::ifstream is = open_input(path);
    std::string line;
    if (!std::getline(is, line))
        throw FormatError("empty CSV: " + path);
    // header: id,f0,...,f{d-1}
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        bool first = true;
        while (std::getline(ss, tok, ',')) {
            if (first) {
                if (tok != "id")
                    throw FormatError("CSV header must start with 'id', got '" + tok + "'");
                first = false;
            } else {
                ++dim;
            }
        }
        if (first)
            throw FormatError("empty CSV header");
    }

    std::vector<std::string> ids;
    std::vector<float> values;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t pos = line.find(',');
        if (pos == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": no fields");
        ids.push_back(line.substr(0, pos));
        std::size_t count = 0;
        const char* end = line.data() + line.size();
        const char* p = line.data() + pos + 1;
        while (p <= end) {
            const char* q = static_cast<const char*>(std::memchr(p, ',', static_cast<std::size_t>(end - p)));
            if (q == nullptr) q = end;
            float v = 0.0f;
            const auto res = std::from_chars(p, q, v);
            if (res.ec != std::errc{} || res.ptr != q)
                throw FormatError("line " + std::to_string(lineno) + ": bad float '" +
                                  std::string(p, q) + "'");
            values.push_back(v);
            ++count;
            p = q + 1;
        }
        if (count != dim)
            throw FormatError("line " + std::to_string(lineno) + ": expected " +
                              std::to_string(dim) + " values, got " + std::to_string(count));
    }

    EmbeddingMatrix m;
    m.rows = ids.size();
    m.dim = dim;
    m.data = std::move(values);
    return {std::move(ids), std::move(m)};
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
    EmbeddingMatrix out = m;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sq = 0.0;
        const auto r = m.row(i);
        for (float v : r) sq += static_cast<double>(v) * static_cast<double>(v);
        const double norm = std::sqrt(sq);
        if (norm < 1e-12)
            throw DegenerateRow("row " + std::to_string(i) + " has near-zero norm");
        auto w = out.row(i);
        for (std::size_t j = 0; j < m.dim; ++j)
            w[j] = static_cast<float>(static_cast<double>(r[j]) / norm);
    }
    out.normalized = true;
    return out;
}

void validate_matrix(const EmbeddingMatrix& m, bool require_normalized) {
    if (m.data.size() != m.rows * m.dim)
        throw FormatError("payload size does not match rows*dim");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sq = 0.0;
        for (float v : m.row(i)) {
            if (!std::isfinite(v))
                throw DataError("non-finite value in row " + std::to_string(i));
            sq += static_cast<double>(v) * static_cast<double>(v);
        }
        if (require_normalized && std::abs(std::sqrt(sq) - 1.0) > 1e-4)
            throw DataError("row " + std::to_string(i) + " is not unit-norm (|n-1| = " +
                            std::to_string(std::abs(std::sqrt(sq) - 1.0)) + ")");
    }
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream is = open_input(path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("invalid JSON: ") + e.what());
    }

    DatasetManifest m;
    try {
        m.ids = j.at("ids").get<std::vector<std::string>>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        if (j.contains("split"))
            m.split = j.at("split").get<std::vector<std::string>>();
        if (j.contains("pair_ids"))
            m.pair_ids = j.at("pair_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError(std::string("missing or mistyped field: ") + e.what());
    }

    if (m.labels.size() != m.ids.size())
        throw ManifestError("labels length != ids length");
    const int c = static_cast<int>(m.class_names.size());
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        if (m.labels[i] < 0 || m.labels[i] >= c)
            throw ManifestError("label " + std::to_string(m.labels[i]) + " at row " +
                                std::to_string(i) + " out of range [0, " +
                                std::to_string(c) + ")");
    if (m.split && m.split->size() != m.ids.size())
        throw ManifestError("split length != ids length");
    if (m.pair_ids) {
        if (m.pair_ids->size() != m.ids.size())
            throw ManifestError("pair_ids length != ids length");
        std::set<std::string> seen;
        for (const auto& p : *m.pair_ids)
            if (!seen.insert(p).second)
                throw ManifestError("pair id '" + p + "' mapped by more than one row");
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["ids"] = m.ids;
    j["labels"] = m.labels;
    j["class_names"] = m.class_names;
    if (m.split) j["split"] = *m.split;
    if (m.pair_ids) j["pair_ids"] = *m.pair_ids;
    std::ofstream os(path);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

Vocabulary load_vocabulary(const std::string& terms_path, const std::string& emb_path) {
    std::ifstream is = open_input(terms_path);
    Vocabulary v;
    std::string line;
    std::set<std::string> seen;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!seen.insert(line).second)
            throw VocabError("duplicate term '" + line + "'");
        v.terms.push_back(line);
    }
    if (v.terms.empty())
        throw VocabError("no terms in " + terms_path);
    v.term_embeddings = load_embeddings(emb_path);
    if (v.term_embeddings.rows != v.terms.size())
        throw VocabError("term count " + std::to_string(v.terms.size()) +
                         " != embedding rows " + std::to_string(v.term_embeddings.rows));
    validate_matrix(v.term_embeddings, /*require_normalized=*/true);
    v.term_embeddings.normalized = true;
    return v;
}

PromptTemplateSet load_templates(const std::string& path) {
    std::ifstream is = open_input(path);
    PromptTemplateSet t;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.templates.push_back(line);
    }
    if (t.templates.empty())
        throw TemplateError("no templates in " + path);
    constexpr const char* kPlaceholder = "{disease}";
    for (const auto& tpl : t.templates) {
        const std::size_t first = tpl.find(kPlaceholder);
        if (first == std::string::npos)
            throw TemplateError("template missing {disease}: '" + tpl + "'");
        if (tpl.find(kPlaceholder, first + 1) != std::string::npos)
            throw TemplateError("template has multiple {disease}: '" + tpl + "'");
    }
    return t;
}

std::vector<std::string> PromptTemplateSet::expand(const std::string& disease) const {
    std::vector<std::string> out;
    out.reserve(templates.size());
    for (const auto& tpl : templates) {
        std::string s = tpl;
        const std::size_t pos = s.find("{disease}");
        s.replace(pos, 9, disease);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace embedlab
