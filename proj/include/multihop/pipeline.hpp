#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "multihop/index.hpp"
#include "multihop/oracle.hpp"
#include "multihop/ranking.hpp"

namespace multihop {

struct PipelineConfig {
    std::uint32_t hop_count = 2;     // S
    std::uint32_t docs_per_hop = 5;  // n
    RankingParams ranking;

    void validate() const;  // throws ConfigError
};

// One retrieve step. `retrieved` preserves rerank order; when a gold
// document was injected it replaced the lowest-ranked slot.
struct Hop {
    std::uint32_t hop_index = 1;  // k, 1-based
    std::string query;
    std::vector<Document> retrieved;
    std::optional<DocId> injected_gold;
    bool empty_query = false;  // generator produced a blank query
};

// C_k: the question plus all documents retrieved in hops 1..k-1. Titles are
// duplicate-free across hops.
struct RetrievalContext {
    std::string question_id;
    std::string question;
    std::vector<Hop> hops;

    std::size_t document_count() const;
    bool contains_title(std::string_view title) const;
    std::vector<std::string> titles() const;  // hop-then-rank order
};

// Behavior contract for hop-query generation: pure given its inputs, and
// the returned string is used verbatim as the search query.
class QueryGenerator {
public:
    virtual ~QueryGenerator() = default;
    virtual std::string generate(const std::string& question, const std::string& context,
                                 std::uint32_t hop) const = 0;
};

// The single-hop baseline: the question is the query at every hop.
class QuestionAsQueryGenerator final : public QueryGenerator {
public:
    std::string generate(const std::string& question, const std::string&,
                         std::uint32_t) const override {
        return question;
    }
};

// Derives the hop query from the gold document for that hop via the overlap
// heuristics. Returns an empty query when the context shares nothing with
// the gold document (the pipeline records a warning hop).
class OracleQueryGenerator final : public QueryGenerator {
public:
    OracleQueryGenerator(const Index& index, std::string question_id,
                         std::vector<DocId> gold_by_hop, RankingParams ranking,
                         OracleParams params = {});
    std::string generate(const std::string& question, const std::string& context,
                         std::uint32_t hop) const override;

private:
    const Index* index_;
    std::string question_id_;
    std::vector<DocId> gold_by_hop_;
    RankingParams ranking_;
    OracleParams params_;
};

// Adapter for externally trained generators: queries precomputed per
// (question_id, hop), loaded from a JSON-lines file with fields
// question_id, hop, query.
class ExternalQueryTable {
public:
    static ExternalQueryTable load(const std::filesystem::path& file);

    std::optional<std::string> lookup(std::string_view question_id, std::uint32_t hop) const;
    std::unique_ptr<QueryGenerator> generator_for(std::string question_id) const;
    std::size_t size() const { return queries_.size(); }

private:
    std::unordered_map<std::string, std::string> queries_;  // "id\x1Fhop" -> query
};

// Serialized C_k: the question, then every retrieved document in hop-then-
// rank order as "<t>" + title + "</t>" + a space + the paragraph text, all
// space-joined.
std::string serialize_context(const RetrievalContext& context);

struct ParsedContext {
    std::string question;
    std::vector<std::pair<std::string, std::string>> documents;  // (title, text)
};

// Inverse of serialize_context; exact as long as the question, titles and
// texts do not themselves contain the delimiter strings.
ParsedContext parse_context(std::string_view serialized);

// Everything the hop did, for interpretability and debugging.
struct TraceHit {
    DocId doc_id = 0;
    std::string title;
    double raw_score = 0.0;
    double boosted_score = 0.0;
    double rerank_tier = 1.0;
    bool kept = false;
    std::string drop_reason;  // "duplicate" | "beyond_budget" | ""
};

struct HopTrace {
    std::uint32_t hop_index = 1;
    std::string query;
    bool empty_query = false;
    std::vector<TraceHit> pool;
    std::optional<DocId> injected_gold;
};

// One retrieve step: q_k = G_k(q, serialize(C_k)), then the top n documents
// of the reranked pool whose titles are not already in the context are
// appended as hop k.
RetrievalContext run_hop(const Index& index, RetrievalContext context,
                         const QueryGenerator& generator, const PipelineConfig& config,
                         HopTrace* trace = nullptr);

struct RunResult {
    RetrievalContext context;
    std::vector<HopTrace> trace;
};

// Runs all S hops in order. generators.size() must equal config.hop_count.
RunResult run(const Index& index, std::string question_id, std::string question,
              const std::vector<const QueryGenerator*>& generators,
              const PipelineConfig& config);

// The supervision record for G_k: the serialized context the generator will
// see and the span it should predict.
struct HopSupervision {
    std::uint32_t hop_index = 1;
    std::string serialized_context;  // C_k; span offsets index this string
    OracleQuery oracle;
    bool injected = false;  // d_k was absent from the hop's results
};

struct TrainingContexts {
    RetrievalContext context;  // final context, gold-complete
    std::vector<HopSupervision> hops;
    std::vector<HopTrace> trace;
};

// Builds training contexts hop by hop with oracle queries, injecting gold
// document d_k into hop k's last slot whenever retrieval missed it, so that
// C_{k+1} always contains d_1..d_k. gold_by_hop lists the gold document for
// each hop in hop order.
TrainingContexts training_context(const Index& index, std::string question_id,
                                  std::string question, const std::vector<DocId>& gold_by_hop,
                                  const PipelineConfig& config, const OracleParams& params = {});

// Decides which gold document hop 1 should target: the one whose best
// hop-1 oracle candidate retrieves it at the better rank (ties: higher
// boosted score, then lexicographically smaller title). Returns the ids in
// hop order.
std::vector<DocId> order_golds_for_hops(const Index& index, std::string_view question_id,
                                        const std::string& question,
                                        const std::vector<DocId>& golds,
                                        const RankingParams& ranking,
                                        const OracleParams& params = {});

struct QaParagraph {
    std::string title;
    std::vector<std::string> sentences;
};

// QA-ready record in the dataset's distractor-setting input schema.
struct QaRecord {
    std::string question_id;
    std::string question;
    std::string answer;
    std::string question_type;
    std::string level;
    std::vector<QaParagraph> paragraphs;  // hop-then-rank order, <= S*n
    std::vector<std::pair<std::string, int>> supporting_facts;  // carried through
};

QaRecord export_qa_input(const RetrievalContext& context);

}  // namespace multihop
