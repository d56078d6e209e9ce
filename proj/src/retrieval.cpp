#include "embedlab/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "embedlab/errors.hpp"
#include "embedlab/parallel.hpp"

namespace embedlab {

std::vector<RetrievalResult> retrieve(const EmbeddingMatrix& queries,
                                      const EmbeddingMatrix& candidates, std::size_t k,
                                      const std::vector<std::size_t>* match_index,
                                      unsigned threads) {
    if (queries.dim != candidates.dim)
        throw ShapeError("query dim != candidate dim");
    if (k > candidates.rows)
        throw RangeError("k = " + std::to_string(k) + " exceeds candidate count " +
                         std::to_string(candidates.rows));
    if (match_index) {
        if (match_index->size() != queries.rows)
            throw ShapeError("match_index length != query count");
        for (std::size_t m : *match_index)
            if (m >= candidates.rows)
                throw RangeError("match index out of range");
    }

    const std::size_t nq = queries.rows;
    const std::size_t nc = candidates.rows;
    const MatrixXdRM q = queries.as_double();
    const MatrixXdRM c = candidates.as_double();

    std::vector<RetrievalResult> results(nq);
    parallel_for(nq, resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
        std::vector<std::size_t> order(nc);
        for (std::size_t i = lo; i < hi; ++i) {
            const Eigen::VectorXd sims = c * q.row(static_cast<Eigen::Index>(i)).transpose();
            std::iota(order.begin(), order.end(), std::size_t{0});
            auto better = [&](std::size_t a, std::size_t b) {
                const double sa = sims(static_cast<Eigen::Index>(a));
                const double sb = sims(static_cast<Eigen::Index>(b));
                return sa != sb ? sa > sb : a < b;
            };
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                              order.end(), better);
            results[i].top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

            if (match_index) {
                const std::size_t m = (*match_index)[i];
                const double sm = sims(static_cast<Eigen::Index>(m));
                std::size_t rank = 1;
                for (std::size_t j = 0; j < nc; ++j) {
                    const double sj = sims(static_cast<Eigen::Index>(j));
                    if (sj > sm || (sj == sm && j < m)) ++rank;
                }
                results[i].rank_of_match = rank;
            }
        }
    });
    return results;
}

std::vector<std::size_t> resolve_matches(std::span<const std::string> query_pair_ids,
                                         std::span<const std::string> candidate_ids) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(candidate_ids.size());
    for (std::size_t j = 0; j < candidate_ids.size(); ++j)
        if (!index.emplace(candidate_ids[j], j).second)
            throw ManifestError("duplicate candidate id '" + candidate_ids[j] + "'");
    std::vector<std::size_t> matches(query_pair_ids.size());
    for (std::size_t i = 0; i < query_pair_ids.size(); ++i) {
        const auto it = index.find(query_pair_ids[i]);
        if (it == index.end())
            throw ManifestError("query " + std::to_string(i) + " pair id '" +
                                query_pair_ids[i] + "' not among candidates");
        matches[i] = it->second;
    }
    return matches;
}

double recall_at_k(std::span<const RetrievalResult> results, std::size_t k) {
    if (results.empty())
        throw DataError("no retrieval results");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i].rank_of_match)
            throw ManifestError("query " + std::to_string(i) + " has no ground-truth match");
        if (*results[i].rank_of_match <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double precision_at_k(std::span<const double> activations, std::span<const int> positives,
                      std::size_t k) {
    if (activations.size() != positives.size())
        throw ShapeError("activations and positives length mismatch");
    if (k == 0 || k > activations.size())
        throw RangeError("k out of range");
    std::vector<std::size_t> order(activations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return activations[a] != activations[b]
                                     ? activations[a] > activations[b]
                                     : a < b;
                      });
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (positives[order[i]] != 0) ++hits;
    return static_cast<double>(hits) / static_cast<double>(k);
}

}  // namespace embedlab
