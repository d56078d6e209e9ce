#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedlab/types.hpp"

namespace embedlab {

struct RetrievalResult {
    std::vector<std::size_t> top;                // top-k candidate indices
    std::optional<std::size_t> rank_of_match;    // 1-based rank of ground truth
};

// Exact brute-force cosine retrieval over unit-norm rows. Ties are broken by
// candidate index (lower first). When match_index is given, rank_of_match is
// the ground-truth candidate's position in the full ranking.
std::vector<RetrievalResult> retrieve(const EmbeddingMatrix& queries,
                                      const EmbeddingMatrix& candidates, std::size_t k,
                                      const std::vector<std::size_t>* match_index = nullptr,
                                      unsigned threads = 1);

// Map each query's pair id to the candidate index carrying that id.
// Missing or ambiguous ids raise ManifestError.
std::vector<std::size_t> resolve_matches(std::span<const std::string> query_pair_ids,
                                         std::span<const std::string> candidate_ids);

// Fraction of queries whose match ranks within the top k.
double recall_at_k(std::span<const RetrievalResult> results, std::size_t k);

// Fraction of the k highest-activation rows that are positive (concept
// retrieval precision). Ties by index.
double precision_at_k(std::span<const double> activations, std::span<const int> positives,
                      std::size_t k);

}  // namespace embedlab
