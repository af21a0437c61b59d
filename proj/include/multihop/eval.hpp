#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "multihop/index.hpp"
#include "multihop/ranking.hpp"

namespace multihop {

inline constexpr std::uint32_t kRankInf = std::numeric_limits<std::uint32_t>::max();

// The two gold supporting documents of one question.
struct GoldPair {
    std::string question_id;
    std::string gold_title_a;
    std::string gold_title_b;
    std::string question_type;  // "bridge" | "comparison"
    std::string level;
};

// Ranked titles produced by the queries under evaluation: one list per
// query (single-hop has one, the iterative pipeline one per hop).
struct QuestionRanking {
    std::string question_id;
    std::vector<std::vector<std::string>> ranked_titles;
};

// d_1 is the gold document with the better (lower) best rank across the
// evaluated lists; absent documents rank infinitely; cross-list ties break
// lexicographically by title.
struct GoldAssignment {
    std::string d1_title;
    std::string d2_title;
    std::uint32_t d1_rank = kRankInf;  // best 1-based rank across lists
    std::uint32_t d2_rank = kRankInf;
};

GoldAssignment assign_gold_order(const QuestionRanking& ranking, const GoldPair& gold);

struct RecallCurve {
    // parallel to RecallReport::ks, percentages in [0, 100]
    std::vector<double> values;
};

struct RecallStats {
    std::size_t question_count = 0;
    RecallCurve d1;
    RecallCurve d2;
    std::optional<double> both_gold_pct;
};

struct RecallReport {
    std::vector<std::uint32_t> ks;  // default {1, 2, 5, 10, 20, 50}
    RecallStats overall;
    std::map<std::string, RecallStats> by_type;  // bridge / comparison facet
    std::uint64_t question_set_hash = 0;         // FNV over sorted question ids

    double d1_at(std::uint32_t k) const;
    double d2_at(std::uint32_t k) const;
};

inline const std::vector<std::uint32_t> kDefaultKs = {1, 2, 5, 10, 20, 50};

class EvalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// recall@k for d_i = percentage of questions whose d_i appears in the top k
// of any evaluated list (best rank across lists). Questions missing from
// `rankings` count as misses.
RecallReport recall_curves(const std::vector<QuestionRanking>& rankings,
                           const std::vector<GoldPair>& golds,
                           const std::vector<std::uint32_t>& ks = kDefaultKs);

// Titles of the final retrieval context per question, aligned with `golds`
// by question_id.
struct FinalContext {
    std::string question_id;
    std::vector<std::string> titles;
};

// Percentage of questions whose final context contains BOTH gold titles.
double both_gold_pct(const std::vector<FinalContext>& contexts,
                     const std::vector<GoldPair>& golds);

// Same, faceted by question type.
std::map<std::string, double> both_gold_pct_by_type(const std::vector<FinalContext>& contexts,
                                                    const std::vector<GoldPair>& golds);

struct AblationRow {
    std::string name;
    double d1_r10 = 0.0;
    double d2_r10 = 0.0;
};

// Single-hop retrieval is re-run under four parameterizations: final,
// w/o title boosting, w/o reranking, w/o both.
std::vector<AblationRow> run_ablation(const Index& index, const std::vector<GoldPair>& golds,
                                      const std::vector<std::string>& questions,
                                      const RankingParams& base, std::size_t threads = 0);

struct RecallDelta {
    double d1 = 0.0;  // oracle d1 R@5 - single-hop d1 R@10
    double d2 = 0.0;
};

// Throws EvalError when the two reports cover different question sets.
RecallDelta oracle_vs_singlehop_delta(const RecallReport& oracle_report,
                                      const RecallReport& singlehop_report);

// Human-readable TSV (metric, k, value rows per facet).
std::string report_tsv(const RecallReport& report);
// Plot-ready CSV: k,series,value
std::string curves_csv(const RecallReport& report);
std::string ablation_tsv(const std::vector<AblationRow>& rows);

}  // namespace multihop
