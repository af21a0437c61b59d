#include "multihop/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "multihop/hash.hpp"
#include "parallel.hpp"

namespace multihop {

namespace {

using detail::parallel_for_index;

std::string format2(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << v;
    return out.str();
}

double pct(std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

struct RecallAccumulator {
    std::size_t question_count = 0;
    std::vector<std::size_t> d1_hits, d2_hits;  // parallel to ks

    explicit RecallAccumulator(std::size_t k_count = 0)
        : d1_hits(k_count, 0), d2_hits(k_count, 0) {}

    void add(const GoldAssignment& assignment, const std::vector<std::uint32_t>& ks) {
        ++question_count;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            if (assignment.d1_rank <= ks[i]) ++d1_hits[i];
            if (assignment.d2_rank <= ks[i]) ++d2_hits[i];
        }
    }

    RecallStats stats(std::size_t k_count) const {
        RecallStats out;
        out.question_count = question_count;
        out.d1.values.resize(k_count);
        out.d2.values.resize(k_count);
        for (std::size_t i = 0; i < k_count; ++i) {
            out.d1.values[i] = pct(d1_hits[i], question_count);
            out.d2.values[i] = pct(d2_hits[i], question_count);
        }
        return out;
    }
};

}  // namespace

GoldAssignment assign_gold_order(const QuestionRanking& ranking, const GoldPair& gold) {
    auto best_rank = [&](const std::string& title) {
        std::uint32_t best = kRankInf;
        for (const auto& list : ranking.ranked_titles) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                if (list[i] == title) {
                    best = std::min<std::uint32_t>(best, static_cast<std::uint32_t>(i + 1));
                    break;
                }
            }
        }
        return best;
    };

    const std::uint32_t rank_a = best_rank(gold.gold_title_a);
    const std::uint32_t rank_b = best_rank(gold.gold_title_b);

    GoldAssignment out;
    const bool a_first =
        rank_a < rank_b || (rank_a == rank_b && gold.gold_title_a <= gold.gold_title_b);
    if (a_first) {
        out = {gold.gold_title_a, gold.gold_title_b, rank_a, rank_b};
    } else {
        out = {gold.gold_title_b, gold.gold_title_a, rank_b, rank_a};
    }
    return out;
}

double RecallReport::d1_at(std::uint32_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] == k) return overall.d1.values[i];
    }
    throw EvalError("recall@" + std::to_string(k) + " was not evaluated");
}

double RecallReport::d2_at(std::uint32_t k) const {
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] == k) return overall.d2.values[i];
    }
    throw EvalError("recall@" + std::to_string(k) + " was not evaluated");
}

RecallReport recall_curves(const std::vector<QuestionRanking>& rankings,
                           const std::vector<GoldPair>& golds,
                           const std::vector<std::uint32_t>& ks) {
    if (golds.empty()) throw EvalError("no questions to evaluate");
    if (ks.empty()) throw EvalError("no cutoffs to evaluate");

    RecallReport report;
    report.ks = ks;
    std::sort(report.ks.begin(), report.ks.end());
    report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
    const std::size_t k_count = report.ks.size();

    std::unordered_map<std::string_view, const QuestionRanking*> by_id;
    by_id.reserve(rankings.size());
    for (const auto& r : rankings) by_id.emplace(r.question_id, &r);

    RecallAccumulator overall(k_count);
    std::map<std::string, RecallAccumulator> by_type;
    std::vector<std::string> ids;
    ids.reserve(golds.size());

    static const QuestionRanking kEmptyRanking;
    for (const auto& gold : golds) {
        ids.push_back(gold.question_id);
        auto it = by_id.find(gold.question_id);
        const QuestionRanking* ranking = &kEmptyRanking;
        if (it == by_id.end()) {
            std::cerr << "eval: no ranked results for question " << gold.question_id
                      << "; counting as a miss\n";
        } else {
            ranking = it->second;
        }
        const GoldAssignment assignment = assign_gold_order(*ranking, gold);
        overall.add(assignment, report.ks);
        auto [type_it, inserted] =
            by_type.try_emplace(gold.question_type, RecallAccumulator(k_count));
        type_it->second.add(assignment, report.ks);
    }

    report.overall = overall.stats(k_count);
    for (const auto& [type, acc] : by_type) report.by_type.emplace(type, acc.stats(k_count));

    std::sort(ids.begin(), ids.end());
    Fnv1a h;
    for (const auto& id : ids) {
        h.update(id);
        h.update("\n", 1);
    }
    report.question_set_hash = h.digest();
    return report;
}

double both_gold_pct(const std::vector<FinalContext>& contexts,
                     const std::vector<GoldPair>& golds) {
    std::unordered_map<std::string_view, const FinalContext*> by_id;
    by_id.reserve(contexts.size());
    for (const auto& c : contexts) by_id.emplace(c.question_id, &c);

    std::size_t covered = 0;
    for (const auto& gold : golds) {
        auto it = by_id.find(gold.question_id);
        if (it == by_id.end()) continue;
        const auto& titles = it->second->titles;
        const bool has_a = std::find(titles.begin(), titles.end(), gold.gold_title_a) !=
                           titles.end();
        const bool has_b = std::find(titles.begin(), titles.end(), gold.gold_title_b) !=
                           titles.end();
        if (has_a && has_b) ++covered;
    }
    return pct(covered, golds.size());
}

std::map<std::string, double> both_gold_pct_by_type(const std::vector<FinalContext>& contexts,
                                                    const std::vector<GoldPair>& golds) {
    std::map<std::string, std::vector<GoldPair>> grouped;
    for (const auto& gold : golds) grouped[gold.question_type].push_back(gold);
    std::map<std::string, double> out;
    for (const auto& [type, group] : grouped) out[type] = both_gold_pct(contexts, group);
    return out;
}

std::vector<AblationRow> run_ablation(const Index& index, const std::vector<GoldPair>& golds,
                                      const std::vector<std::string>& questions,
                                      const RankingParams& base, std::size_t threads) {
    if (questions.size() != golds.size()) {
        throw EvalError("questions and gold pairs must align one-to-one");
    }

    const std::vector<std::pair<std::string, RankingParams>> configs = {
        {"final", base},
        {"w/o title boosting", base.with_title_boost(1.0)},
        {"w/o reranking", base.with_reranking(false)},
        {"w/o both", base.with_title_boost(1.0).with_reranking(false)},
    };

    std::vector<AblationRow> rows;
    rows.reserve(configs.size());
    for (const auto& [name, params] : configs) {
        std::vector<QuestionRanking> rankings(golds.size());
        parallel_for_index(golds.size(), threads, [&, &params = params](std::size_t i) {
            auto pool = ranked_pool(index, questions[i], params);
            QuestionRanking ranking;
            ranking.question_id = golds[i].question_id;
            ranking.ranked_titles.emplace_back();
            auto& titles = ranking.ranked_titles.back();
            titles.reserve(pool.size());
            for (const auto& hit : pool) titles.push_back(index.doc(hit.doc_id).title);
            rankings[i] = std::move(ranking);
        });
        auto report = recall_curves(rankings, golds, {10});
        rows.push_back({name, report.d1_at(10), report.d2_at(10)});
    }
    return rows;
}

RecallDelta oracle_vs_singlehop_delta(const RecallReport& oracle_report,
                                      const RecallReport& singlehop_report) {
    if (oracle_report.question_set_hash != singlehop_report.question_set_hash ||
        oracle_report.overall.question_count != singlehop_report.overall.question_count) {
        throw EvalError("reports cover different question sets");
    }
    RecallDelta delta;
    delta.d1 = oracle_report.d1_at(5) - singlehop_report.d1_at(10);
    delta.d2 = oracle_report.d2_at(5) - singlehop_report.d2_at(10);
    return delta;
}

namespace {

void append_facet_tsv(std::string& out, const std::string& facet, const RecallReport& report,
                      const RecallStats& stats) {
    for (std::size_t i = 0; i < report.ks.size(); ++i) {
        out += facet + "\td1_recall\t" + std::to_string(report.ks[i]) + "\t" +
               format2(stats.d1.values[i]) + "\n";
        out += facet + "\td2_recall\t" + std::to_string(report.ks[i]) + "\t" +
               format2(stats.d2.values[i]) + "\n";
    }
    if (stats.both_gold_pct) {
        out += facet + "\tboth_gold_pct\t-\t" + format2(*stats.both_gold_pct) + "\n";
    }
    out += facet + "\tquestions\t-\t" + std::to_string(stats.question_count) + "\n";
}

}  // namespace

std::string report_tsv(const RecallReport& report) {
    std::string out = "facet\tmetric\tk\tvalue\n";
    append_facet_tsv(out, "overall", report, report.overall);
    for (const auto& [type, stats] : report.by_type) append_facet_tsv(out, type, report, stats);
    out += "meta\tquestion_set_hash\t-\t" + to_hex(report.question_set_hash) + "\n";
    return out;
}

std::string curves_csv(const RecallReport& report) {
    std::string out = "k,series,value\n";
    auto emit = [&](const std::string& facet, const RecallStats& stats) {
        for (std::size_t i = 0; i < report.ks.size(); ++i) {
            out += std::to_string(report.ks[i]) + "," + facet + ".d1," +
                   format2(stats.d1.values[i]) + "\n";
            out += std::to_string(report.ks[i]) + "," + facet + ".d2," +
                   format2(stats.d2.values[i]) + "\n";
        }
    };
    emit("overall", report.overall);
    for (const auto& [type, stats] : report.by_type) emit(type, stats);
    return out;
}

std::string ablation_tsv(const std::vector<AblationRow>& rows) {
    std::string out = "setup\td1_r10\td2_r10\n";
    for (const auto& row : rows) {
        out += row.name + "\t" + format2(row.d1_r10) + "\t" + format2(row.d2_r10) + "\n";
    }
    return out;
}

}  // namespace multihop
