#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "multihop/index.hpp"

namespace multihop {

// How a document title relates to the search query, on asciifolded,
// lowercased, whitespace-normalized forms.
enum class TitleMatchClass : std::uint8_t {
    EXACT = 0,           // title == query
    TITLE_IN_QUERY = 1,  // title is a contiguous substring of the query
    QUERY_IN_TITLE = 2,  // query is a contiguous substring of the title
    NONE = 3,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RankingParams {
    double k1 = 1.2;
    double b = 0.75;
    double title_field_boost = 1.25;   // applied to TITLE and TITLE_BIGRAM
    std::uint32_t rerank_pool = 50;    // candidates fetched before reranking

    // Indexed by TitleMatchClass; must be non-increasing and within
    // [1.0, 1.5]. NONE stays at 1.0.
    std::array<double, 4> tier_multipliers{1.5, 1.25, 1.10, 1.0};

    double tier(TitleMatchClass c) const {
        return tier_multipliers[static_cast<std::size_t>(c)];
    }
    void validate() const;  // throws ConfigError

    RankingParams with_title_boost(double boost) const;
    RankingParams with_reranking(bool enabled) const;  // disabled = all tiers 1.0
};

struct SearchHit {
    DocId doc_id = 0;
    double raw_score = 0.0;      // best-field BM25 x field boost
    double boosted_score = 0.0;  // raw_score x rerank tier
    FieldId best_field = FieldId::TITLE;
    TitleMatchClass match_class = TitleMatchClass::NONE;
    double rerank_tier = 1.0;
};

// Okapi BM25 for a single (term, document, field), using the index corpus
// statistics:
//   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
// with idf(t) = ln(1 + (N - n_t + 0.5) / (n_t + 0.5)). Returns 0 when the
// term is absent from the document's field.
double bm25(const Index& index, FieldId field, std::string_view term, DocId doc,
            const RankingParams& params);

double bm25_idf(std::uint64_t doc_count, std::uint64_t doc_frequency);

// Best-field multi-match over all four fields: per document the raw score is
// the max over fields of (sum of per-term BM25) x field boost. Hits sorted
// by descending raw score, ties by ascending doc_id; zero-score documents
// are never returned, so the result may be shorter than `limit`.
std::vector<SearchHit> search(const Index& index, std::string_view query, std::size_t limit,
                              const RankingParams& params);

TitleMatchClass title_match_class(std::string_view title, std::string_view query,
                                  const FoldTable& folds);

// The tier multiplier for `title` against `query` under `params`.
double title_match_tier(std::string_view title, std::string_view query,
                        const RankingParams& params, const FoldTable& folds);

// Applies title-match tiers to the top-of-pool hits and re-sorts by
// descending boosted score (ties by ascending doc_id). Permutation only.
std::vector<SearchHit> rerank(const Index& index, std::string_view query,
                              std::vector<SearchHit> hits, const RankingParams& params);

// search(limit = rerank_pool) followed by rerank.
std::vector<SearchHit> ranked_pool(const Index& index, std::string_view query,
                                   const RankingParams& params);

// IR_n: the top n documents of the reranked pool. Requires 1 <= n <= rerank_pool.
std::vector<Document> retrieve(const Index& index, std::string_view query, std::size_t n,
                               const RankingParams& params);

}  // namespace multihop
