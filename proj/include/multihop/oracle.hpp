#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multihop/index.hpp"
#include "multihop/ranking.hpp"

namespace multihop {

enum class OverlapHeuristic : std::uint8_t { LCS = 0, LCSUBSTR = 1, OVERLAP_MERGE = 2 };
enum class ContextVariant : std::uint8_t { CLEANED = 0, CLEANED_NOPUNCT = 1 };
enum class TargetVariant : std::uint8_t { TITLE = 0, PARAGRAPH = 1 };

std::string_view heuristic_name(OverlapHeuristic h);
std::string_view context_variant_name(ContextVariant v);
std::string_view target_variant_name(TargetVariant v);

// A contiguous character span of the retrieval context proposed as a hop
// query. `text` is the verbatim substring: context[char_start..char_end)
// in code points.
struct SpanCandidate {
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    OverlapHeuristic heuristic = OverlapHeuristic::LCS;
    ContextVariant context_variant = ContextVariant::CLEANED;
    TargetVariant target_variant = TargetVariant::TITLE;
    // |simple_analyze(text)| with markup masked; the length tie-break metric.
    std::size_t token_count = 0;
};

struct OracleParams {
    double min_ratio = 0.6;              // overlap-merge qualification threshold
    std::size_t max_target_tokens = 512; // DP cost cap on cleaned target length
    void validate() const;               // throws ConfigError
};

inline constexpr std::uint32_t kGoldRankNotFound = std::numeric_limits<std::uint32_t>::max();

// The selected query for one (question, hop) plus how well it retrieves the
// intended document.
struct OracleQuery {
    std::string question_id;
    std::uint32_t hop = 1;  // 1-based
    SpanCandidate span;
    std::uint32_t gold_rank = kGoldRankNotFound;  // 1-based within the rerank pool
    double gold_score = 0.0;                      // boosted score of the gold doc, 0 if absent

    bool gold_in_pool() const { return gold_rank != kGoldRankNotFound; }
};

// Longest common subsequence of token texts; returns the contiguous context
// span from the first to the last matched context token. Token lists must
// come from clean_for_overlap (or an offset-remapped equivalent).
std::optional<SpanCandidate> lcs_span(std::string_view context,
                                      const std::vector<Token>& context_tokens,
                                      const std::vector<Token>& target_tokens);

// Longest contiguous common token run; ties broken by earliest context
// position.
std::optional<SpanCandidate> lcsubstr_span(std::string_view context,
                                           const std::vector<Token>& context_tokens,
                                           const std::vector<Token>& target_tokens);

// Longest contiguous context window whose overlap ratio (window tokens
// present in the target / window length) reaches min_ratio; ties by higher
// ratio, then earliest position.
std::optional<SpanCandidate> overlap_merge_span(std::string_view context,
                                                const std::vector<Token>& context_tokens,
                                                const std::vector<Token>& target_tokens,
                                                double min_ratio);

// Replaces every "<t>" / "</t>" occurrence with spaces of equal length so
// the title delimiters never tokenize, while all offsets stay valid.
std::string mask_markup(std::string_view context);

// Runs all three heuristics over {cleaned, cleaned without punctuation}
// context variants x {title, paragraph} targets, deduplicating identical
// spans. Offsets always index the original context text.
std::vector<SpanCandidate> candidate_queries(std::string_view context_text, const Document& gold,
                                             const StopList& stops, const FoldTable& folds,
                                             const OracleParams& params = {});

class NoOracleError : public std::runtime_error {
public:
    NoOracleError(std::string question_id, std::uint32_t hop);
    const std::string question_id;
    const std::uint32_t hop;
};

// Executes every candidate against the index and keeps the one that ranks
// the gold document best. Tie-break chain: ascending gold rank, higher
// boosted gold score, fewer tokens, earlier char_start, earlier char_end.
// Throws NoOracleError on an empty candidate list.
OracleQuery select_oracle(std::string_view question_id, std::uint32_t hop,
                          const std::vector<SpanCandidate>& candidates, DocId gold_doc,
                          const Index& index, const RankingParams& ranking,
                          const OracleParams& params = {});

}  // namespace multihop
