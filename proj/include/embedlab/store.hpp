#pragma once

#include <string>
#include <utility>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

// Binary embedding container:
//   magic "DFMZEMB1" | u32 version=1 | u64 rows | u32 dim | u8 dtype | payload
// All integers little-endian; dtype 1 = float32 row-major payload.
// The fixed header makes shape validation O(1).

void save_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

// CSV interop: header row "id,f0,...,f{d-1}", one row per embedding.
// Values are written with enough digits to round-trip float32 exactly.
void save_csv(const EmbeddingMatrix& m, const std::vector<std::string>& ids,
              const std::string& path);
std::pair<std::vector<std::string>, EmbeddingMatrix> load_csv(const std::string& path);

// Returns a copy with every row scaled to unit L2 norm and the normalized
// flag set. Idempotent. Rows with norm below 1e-12 raise DegenerateRow.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

// Throws DataError on non-finite entries; when require_normalized is set,
// additionally checks every row norm is within 1e-4 of 1.
void validate_matrix(const EmbeddingMatrix& m, bool require_normalized);

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// terms: newline-delimited file; embeddings: DFMZEMB1 file with one row per
// term. Embeddings must be unit-norm and terms unique.
Vocabulary load_vocabulary(const std::string& terms_path, const std::string& emb_path);

// Newline-delimited templates, each containing "{disease}" exactly once.
PromptTemplateSet load_templates(const std::string& path);

}  // namespace embedlab
