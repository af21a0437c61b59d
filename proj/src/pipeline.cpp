#include "multihop/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace multihop {

namespace {

bool blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

class FixedQueryGenerator final : public QueryGenerator {
public:
    explicit FixedQueryGenerator(std::string query) : query_(std::move(query)) {}
    std::string generate(const std::string&, const std::string&, std::uint32_t) const override {
        return query_;
    }

private:
    std::string query_;
};

class TableQueryGenerator final : public QueryGenerator {
public:
    TableQueryGenerator(const ExternalQueryTable* table, std::string question_id)
        : table_(table), question_id_(std::move(question_id)) {}
    std::string generate(const std::string&, const std::string&, std::uint32_t hop) const override {
        return table_->lookup(question_id_, hop).value_or("");
    }

private:
    const ExternalQueryTable* table_;
    std::string question_id_;
};

}  // namespace

void PipelineConfig::validate() const {
    if (hop_count < 1) throw ConfigError("hop_count must be >= 1");
    if (docs_per_hop < 1) throw ConfigError("docs_per_hop must be >= 1");
    if (docs_per_hop > ranking.rerank_pool) {
        throw ConfigError("docs_per_hop cannot exceed rerank_pool");
    }
    ranking.validate();
}

std::size_t RetrievalContext::document_count() const {
    std::size_t n = 0;
    for (const auto& hop : hops) n += hop.retrieved.size();
    return n;
}

bool RetrievalContext::contains_title(std::string_view title) const {
    for (const auto& hop : hops) {
        for (const auto& doc : hop.retrieved) {
            if (doc.title == title) return true;
        }
    }
    return false;
}

std::vector<std::string> RetrievalContext::titles() const {
    std::vector<std::string> out;
    out.reserve(document_count());
    for (const auto& hop : hops) {
        for (const auto& doc : hop.retrieved) out.push_back(doc.title);
    }
    return out;
}

OracleQueryGenerator::OracleQueryGenerator(const Index& index, std::string question_id,
                                           std::vector<DocId> gold_by_hop, RankingParams ranking,
                                           OracleParams params)
    : index_(&index),
      question_id_(std::move(question_id)),
      gold_by_hop_(std::move(gold_by_hop)),
      ranking_(std::move(ranking)),
      params_(params) {}

std::string OracleQueryGenerator::generate(const std::string&, const std::string& context,
                                           std::uint32_t hop) const {
    if (hop < 1 || hop > gold_by_hop_.size()) {
        throw ConfigError("no gold document assigned to hop " + std::to_string(hop));
    }
    const Document& gold = index_->doc(gold_by_hop_[hop - 1]);
    auto candidates =
        candidate_queries(context, gold, index_->stop_list(), index_->fold_table(), params_);
    if (candidates.empty()) return "";
    return select_oracle(question_id_, hop, candidates, gold.doc_id, *index_, ranking_, params_)
        .span.text;
}

ExternalQueryTable ExternalQueryTable::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open query table " + file.string());
    ExternalQueryTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        try {
            auto record = nlohmann::json::parse(line);
            std::string id = record.at("question_id").get<std::string>();
            auto hop = record.at("hop").get<std::uint32_t>();
            std::string query = record.at("query").get<std::string>();
            table.queries_[id + '\x1F' + std::to_string(hop)] = std::move(query);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad query record at " + file.string() + ":" +
                              std::to_string(lineno) + ": " + e.what());
        }
    }
    return table;
}

std::optional<std::string> ExternalQueryTable::lookup(std::string_view question_id,
                                                      std::uint32_t hop) const {
    auto it = queries_.find(std::string(question_id) + '\x1F' + std::to_string(hop));
    if (it == queries_.end()) return std::nullopt;
    return it->second;
}

// The table must outlive the returned generator.
std::unique_ptr<QueryGenerator> ExternalQueryTable::generator_for(std::string question_id) const {
    return std::make_unique<TableQueryGenerator>(this, std::move(question_id));
}

std::string serialize_context(const RetrievalContext& context) {
    std::string out = context.question;
    for (const auto& hop : context.hops) {
        for (const auto& doc : hop.retrieved) {
            out += " <t>";
            out += doc.title;
            out += "</t>";
            const std::string text = doc.text();
            if (!text.empty()) {
                out += ' ';
                out += text;
            }
        }
    }
    return out;
}

ParsedContext parse_context(std::string_view serialized) {
    ParsedContext out;
    std::size_t pos = serialized.find("<t>");
    if (pos == std::string_view::npos) {
        out.question = std::string(serialized);
        return out;
    }
    // The serializer writes " <t>", so drop the joining space from the question.
    std::size_t question_end = pos;
    if (question_end > 0 && serialized[question_end - 1] == ' ') --question_end;
    out.question = std::string(serialized.substr(0, question_end));

    while (pos != std::string_view::npos) {
        pos += 3;
        std::size_t title_end = serialized.find("</t>", pos);
        if (title_end == std::string_view::npos) break;  // malformed tail: ignore
        std::string title(serialized.substr(pos, title_end - pos));

        std::size_t text_start = title_end + 4;
        std::size_t next = serialized.find("<t>", text_start);
        std::size_t text_end = next == std::string_view::npos ? serialized.size() : next;
        std::string_view text = serialized.substr(text_start, text_end - text_start);
        if (!text.empty() && text.front() == ' ') text.remove_prefix(1);
        if (next != std::string_view::npos && !text.empty() && text.back() == ' ') {
            text.remove_suffix(1);
        }
        out.documents.emplace_back(std::move(title), std::string(text));
        pos = next;
    }
    return out;
}

RetrievalContext run_hop(const Index& index, RetrievalContext context,
                         const QueryGenerator& generator, const PipelineConfig& config,
                         HopTrace* trace) {
    config.validate();
    const auto hop_index = static_cast<std::uint32_t>(context.hops.size() + 1);
    if (hop_index > config.hop_count) {
        throw ConfigError("hop " + std::to_string(hop_index) + " exceeds the configured " +
                          std::to_string(config.hop_count) + " hops");
    }

    const std::string serialized = serialize_context(context);
    std::string query = generator.generate(context.question, serialized, hop_index);

    Hop hop;
    hop.hop_index = hop_index;
    hop.query = query;
    hop.empty_query = blank(query);

    if (trace) {
        *trace = HopTrace{};
        trace->hop_index = hop_index;
        trace->query = query;
        trace->empty_query = hop.empty_query;
    }

    if (!hop.empty_query) {
        auto pool = ranked_pool(index, mask_markup(query), config.ranking);
        auto in_hop = [&](std::string_view title) {
            return std::any_of(hop.retrieved.begin(), hop.retrieved.end(),
                               [&](const Document& d) { return d.title == title; });
        };
        for (const auto& hit : pool) {
            const Document& doc = index.doc(hit.doc_id);
            const bool duplicate = context.contains_title(doc.title) || in_hop(doc.title);
            const bool keep = !duplicate && hop.retrieved.size() < config.docs_per_hop;
            if (keep) hop.retrieved.push_back(doc);
            if (trace) {
                trace->pool.push_back({hit.doc_id, doc.title, hit.raw_score, hit.boosted_score,
                                       hit.rerank_tier, keep,
                                       keep ? "" : (duplicate ? "duplicate" : "beyond_budget")});
            } else if (hop.retrieved.size() == config.docs_per_hop) {
                break;
            }
        }
    }

    context.hops.push_back(std::move(hop));
    return context;
}

RunResult run(const Index& index, std::string question_id, std::string question,
              const std::vector<const QueryGenerator*>& generators,
              const PipelineConfig& config) {
    config.validate();
    if (generators.size() != config.hop_count) {
        throw ConfigError("need exactly one query generator per hop");
    }
    RunResult result;
    result.context.question_id = std::move(question_id);
    result.context.question = std::move(question);
    result.trace.reserve(generators.size());
    for (const QueryGenerator* generator : generators) {
        HopTrace trace;
        result.context = run_hop(index, std::move(result.context), *generator, config, &trace);
        result.trace.push_back(std::move(trace));
    }
    return result;
}

TrainingContexts training_context(const Index& index, std::string question_id,
                                  std::string question, const std::vector<DocId>& gold_by_hop,
                                  const PipelineConfig& config, const OracleParams& params) {
    config.validate();
    params.validate();
    if (gold_by_hop.size() != config.hop_count) {
        throw ConfigError("need exactly one gold document per hop");
    }

    TrainingContexts out;
    out.context.question_id = question_id;
    out.context.question = std::move(question);

    for (std::uint32_t k = 1; k <= config.hop_count; ++k) {
        const Document& gold = index.doc(gold_by_hop[k - 1]);
        const std::string serialized = serialize_context(out.context);

        auto candidates = candidate_queries(serialized, gold, index.stop_list(),
                                            index.fold_table(), params);
        OracleQuery oracle = select_oracle(question_id, k, candidates, gold.doc_id, index,
                                           config.ranking, params);

        FixedQueryGenerator generator(oracle.span.text);
        HopTrace trace;
        out.context = run_hop(index, std::move(out.context), generator, config, &trace);

        bool injected = false;
        if (!out.context.contains_title(gold.title)) {
            // d_k must reach C_{k+1}: replace the lowest-ranked slot (or fill
            // an open one) with the gold document.
            Hop& hop = out.context.hops.back();
            if (hop.retrieved.size() >= config.docs_per_hop) {
                hop.retrieved.back() = gold;
            } else {
                hop.retrieved.push_back(gold);
            }
            hop.injected_gold = gold.doc_id;
            trace.injected_gold = gold.doc_id;
            injected = true;
        }

        out.hops.push_back({k, serialized, std::move(oracle), injected});
        out.trace.push_back(std::move(trace));
    }
    return out;
}

std::vector<DocId> order_golds_for_hops(const Index& index, std::string_view question_id,
                                        const std::string& question,
                                        const std::vector<DocId>& golds,
                                        const RankingParams& ranking,
                                        const OracleParams& params) {
    struct Entry {
        DocId id;
        std::uint32_t rank = kGoldRankNotFound;
        double score = 0.0;
        std::string title;
    };
    std::vector<Entry> entries;
    entries.reserve(golds.size());
    for (DocId id : golds) {
        Entry entry;
        entry.id = id;
        entry.title = index.doc(id).title;
        auto candidates = candidate_queries(question, index.doc(id), index.stop_list(),
                                            index.fold_table(), params);
        if (!candidates.empty()) {
            auto oracle = select_oracle(question_id, 1, candidates, id, index, ranking, params);
            entry.rank = oracle.gold_rank;
            entry.score = oracle.gold_score;
        }
        entries.push_back(std::move(entry));
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.rank != b.rank) return a.rank < b.rank;
        if (a.score != b.score) return a.score > b.score;
        return a.title < b.title;
    });
    std::vector<DocId> out;
    out.reserve(entries.size());
    for (const auto& entry : entries) out.push_back(entry.id);
    return out;
}

QaRecord export_qa_input(const RetrievalContext& context) {
    QaRecord record;
    record.question_id = context.question_id;
    record.question = context.question;
    for (const auto& hop : context.hops) {
        for (const auto& doc : hop.retrieved) {
            record.paragraphs.push_back({doc.title, doc.sentences});
        }
    }
    return record;
}

}  // namespace multihop
