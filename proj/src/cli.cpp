#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "multihop/corpus_io.hpp"
#include "multihop/eval.hpp"
#include "multihop/hash.hpp"
#include "multihop/pipeline.hpp"
#include "parallel.hpp"

namespace multihop {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

struct RankingFlags {
    RankingParams params;
    bool no_rerank = false;

    RankingParams resolve() const {
        return no_rerank ? params.with_reranking(false) : params;
    }
};

void add_ranking_flags(CLI::App* cmd, RankingFlags& flags) {
    cmd->add_option("--k1", flags.params.k1, "BM25 k1")->capture_default_str();
    cmd->add_option("--b", flags.params.b, "BM25 length normalization b")->capture_default_str();
    cmd->add_option("--title-boost", flags.params.title_field_boost,
                    "score boost for the title fields")
        ->capture_default_str();
    cmd->add_option("--rerank-pool", flags.params.rerank_pool,
                    "candidates fetched before title-match reranking")
        ->capture_default_str();
    cmd->add_flag("--no-rerank", flags.no_rerank, "disable title-match reranking");
}

json ranking_json(const RankingParams& params) {
    return {
        {"k1", params.k1},
        {"b", params.b},
        {"title_field_boost", params.title_field_boost},
        {"rerank_pool", params.rerank_pool},
        {"tier_multipliers", params.tier_multipliers},
    };
}

std::ofstream open_output(const std::filesystem::path& file) {
    std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw CorpusError("cannot write " + file.string());
    return out;
}

StopList load_stops(const std::string& path) {
    return path.empty() ? StopList::builtin() : StopList::load(path);
}

FoldTable load_folds(const std::string& path) {
    return path.empty() ? FoldTable::builtin() : FoldTable::load(path);
}

std::vector<DocId> resolve_golds(const Index& index, const DatasetQuestion& question) {
    std::vector<DocId> ids;
    ids.reserve(question.gold_titles.size());
    for (const auto& title : question.gold_titles) {
        auto id = index.find_title(title);
        if (!id) throw CorpusError("gold title not found in corpus: " + title);
        ids.push_back(*id);
    }
    return ids;
}

// Hop golds for an S-hop run: hop-1 gets the more retrievable gold document.
std::vector<DocId> golds_for_hops(const Index& index, const DatasetQuestion& question,
                                  std::uint32_t hops, const RankingParams& ranking,
                                  const OracleParams& oracle_params) {
    auto ordered = order_golds_for_hops(index, question.question_id, question.question,
                                        resolve_golds(index, question), ranking, oracle_params);
    if (ordered.size() < hops) {
        throw CorpusError("question " + question.question_id + " has " +
                          std::to_string(ordered.size()) + " gold documents but the run needs " +
                          std::to_string(hops));
    }
    ordered.resize(hops);
    return ordered;
}

QaRecord qa_record_for(const RetrievalContext& context, const DatasetQuestion& question) {
    QaRecord record = export_qa_input(context);
    record.answer = question.answer;
    record.question_type = question.question_type;
    record.level = question.level;
    record.supporting_facts = question.supporting_facts;
    return record;
}

std::string ranking_line(const std::string& question_id, const std::vector<HopTrace>& trace) {
    json lists = json::array();
    for (const auto& hop : trace) {
        json titles = json::array();
        for (const auto& hit : hop.pool) titles.push_back(hit.title);
        lists.push_back(std::move(titles));
    }
    return json{{"question_id", question_id}, {"ranked_titles", std::move(lists)}}.dump() + "\n";
}

std::vector<QuestionRanking> load_rankings(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw CorpusError("cannot open rankings " + file.string());
    std::vector<QuestionRanking> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto record = json::parse(line);
            QuestionRanking ranking;
            ranking.question_id = record.at("question_id").get<std::string>();
            for (const auto& list : record.at("ranked_titles")) {
                ranking.ranked_titles.push_back(list.get<std::vector<std::string>>());
            }
            out.push_back(std::move(ranking));
        } catch (const json::exception& e) {
            throw CorpusError("bad ranking record at " + file.string() + ":" +
                              std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<FinalContext> contexts_from_qa_records(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw CorpusError("cannot open QA records " + file.string());
    json records;
    try {
        records = json::parse(in);
    } catch (const json::exception& e) {
        throw CorpusError("cannot parse QA records " + file.string() + ": " + e.what());
    }
    std::vector<FinalContext> out;
    for (const auto& record : records) {
        FinalContext context;
        context.question_id = record.at("_id").get<std::string>();
        for (const auto& paragraph : record.at("context")) {
            context.titles.push_back(paragraph.at(0).get<std::string>());
        }
        out.push_back(std::move(context));
    }
    return out;
}

int finish_batch(const std::filesystem::path& out_dir, const std::vector<std::string>& errors) {
    std::size_t failures = 0;
    for (const auto& e : errors) {
        if (!e.empty()) ++failures;
    }
    if (failures == 0) return 0;
    auto out = open_output(out_dir / "errors.jsonl");
    for (const auto& e : errors) {
        if (!e.empty()) out << e;
    }
    std::cerr << failures << " question(s) failed; see " << (out_dir / "errors.jsonl").string()
              << "\n";
    return 2;
}

std::string error_line(const std::string& question_id, const std::exception& e) {
    return json{{"question_id", question_id}, {"error", e.what()}}.dump() + "\n";
}

// ---------------------------------------------------------------- build-index

struct BuildIndexOpts {
    std::string dump, out, stopwords, foldtable;
    std::uint64_t limit = 0;
};

int cmd_build_index(const BuildIndexOpts& opts) {
    const StopList stops = load_stops(opts.stopwords);
    const FoldTable folds = load_folds(opts.foldtable);

    std::vector<Document> docs = load_wiki_dump(opts.dump, opts.limit);
    std::cerr << "loaded " << docs.size() << " documents\n";
    Index index = Index::build(std::move(docs), stops, folds);
    index.save(opts.out);

    const auto& stats = index.stats();
    std::cout << "documents\t" << stats.doc_count << "\n";
    for (FieldId field : kAllFields) {
        std::cout << field_name(field) << ".terms\t" << stats.field(field).term_count << "\n"
                  << field_name(field) << ".avgdl\t" << stats.field(field).avg_field_length
                  << "\n";
    }
    if (index.duplicate_title_count() > 0) {
        std::cerr << "note: " << index.duplicate_title_count()
                  << " duplicate titles (first occurrence wins for title lookup)\n";
    }

    json config = {{"dump", opts.dump},
                   {"out", opts.out},
                   {"limit", opts.limit},
                   {"stopwords", opts.stopwords.empty() ? "<builtin>" : opts.stopwords},
                   {"foldtable", opts.foldtable.empty() ? "<builtin>" : opts.foldtable}};
    std::vector<std::filesystem::path> inputs = {opts.dump};
    if (!opts.stopwords.empty()) inputs.push_back(opts.stopwords);
    if (!opts.foldtable.empty()) inputs.push_back(opts.foldtable);
    write_run_manifest(opts.out, "build-index", config.dump(), inputs);
    return 0;
}

// --------------------------------------------------------------------- search

struct SearchOpts {
    std::string index, query, out;
    std::size_t k = 10;
    RankingFlags ranking;
};

int cmd_search(const SearchOpts& opts) {
    Index index = Index::open(opts.index);
    RankingParams params = opts.ranking.resolve();
    if (params.rerank_pool < opts.k) params.rerank_pool = static_cast<std::uint32_t>(opts.k);

    auto pool = ranked_pool(index, opts.query, params);
    std::ostringstream tsv;
    tsv << "rank\ttitle\traw_score\tboosted_score\n";
    for (std::size_t i = 0; i < pool.size() && i < opts.k; ++i) {
        tsv << (i + 1) << "\t" << index.doc(pool[i].doc_id).title << "\t" << pool[i].raw_score
            << "\t" << pool[i].boosted_score << "\n";
    }

    if (opts.out.empty()) {
        std::cout << tsv.str();
    } else {
        open_output(std::filesystem::path(opts.out) / "hits.tsv") << tsv.str();
        json config = {{"index", opts.index},
                       {"query", opts.query},
                       {"k", opts.k},
                       {"ranking", ranking_json(params)}};
        write_run_manifest(opts.out, "search", config.dump(), {opts.index});
    }
    return 0;
}

// ----------------------------------------------------------------- oracle-gen

struct OracleGenOpts {
    std::string index, dataset, out;
    std::uint64_t limit = 0;
    std::uint32_t hops = 2, docs_per_hop = 5;
    std::size_t threads = 0;
    OracleParams oracle;
    RankingFlags ranking;
};

int cmd_oracle_gen(const OracleGenOpts& opts) {
    Index index = Index::open(opts.index);
    auto dataset = load_dataset(opts.dataset, opts.limit);

    PipelineConfig config;
    config.hop_count = opts.hops;
    config.docs_per_hop = opts.docs_per_hop;
    config.ranking = opts.ranking.resolve();
    config.validate();
    opts.oracle.validate();

    std::vector<std::string> records(dataset.questions.size());
    std::vector<std::string> errors(dataset.questions.size());
    detail::parallel_for_index(dataset.questions.size(), opts.threads, [&](std::size_t i) {
        const auto& question = dataset.questions[i];
        try {
            auto golds = golds_for_hops(index, question, opts.hops, config.ranking, opts.oracle);
            auto contexts = training_context(index, question.question_id, question.question,
                                             golds, config, opts.oracle);
            std::ostringstream lines;
            for (const auto& hop : contexts.hops) write_oracle_record(lines, hop.oracle);
            records[i] = lines.str();
        } catch (const std::exception& e) {
            errors[i] = error_line(question.question_id, e);
        }
    });

    auto out = open_output(std::filesystem::path(opts.out) / "oracle_queries.jsonl");
    for (const auto& r : records) out << r;

    json config_json = {{"index", opts.index},       {"dataset", opts.dataset},
                        {"limit", opts.limit},       {"hops", opts.hops},
                        {"n", opts.docs_per_hop},    {"min_ratio", opts.oracle.min_ratio},
                        {"max_target_tokens", opts.oracle.max_target_tokens},
                        {"ranking", ranking_json(config.ranking)}};
    write_run_manifest(opts.out, "oracle-gen", config_json.dump(), {opts.index, opts.dataset});
    std::cerr << "wrote oracle queries for " << dataset.questions.size() << " questions ("
              << dataset.skipped << " skipped at load)\n";
    return finish_batch(opts.out, errors);
}

// --------------------------------------------------------------- run-pipeline

struct RunPipelineOpts {
    std::string index, dataset, out, external;
    std::vector<std::string> generators = {"oracle", "oracle"};
    std::uint64_t limit = 0;
    std::uint32_t hops = 2, docs_per_hop = 5;
    std::size_t threads = 0;
    OracleParams oracle;
    RankingFlags ranking;
};

int cmd_run_pipeline(const RunPipelineOpts& opts) {
    Index index = Index::open(opts.index);
    auto dataset = load_dataset(opts.dataset, opts.limit);

    PipelineConfig config;
    config.hop_count = opts.hops;
    config.docs_per_hop = opts.docs_per_hop;
    config.ranking = opts.ranking.resolve();
    config.validate();
    opts.oracle.validate();

    if (opts.generators.size() != opts.hops) {
        throw CorpusError("--generators needs exactly one mode per hop");
    }
    bool wants_external = false;
    bool wants_oracle = false;
    for (const auto& mode : opts.generators) {
        if (mode == "external") {
            wants_external = true;
        } else if (mode == "oracle") {
            wants_oracle = true;
        } else if (mode != "question") {
            throw CorpusError("unknown generator mode: " + mode +
                              " (expected oracle, question, or external)");
        }
    }
    std::optional<ExternalQueryTable> table;
    if (wants_external) {
        if (opts.external.empty()) {
            throw CorpusError("--external FILE is required for external generators");
        }
        table = ExternalQueryTable::load(opts.external);
    }

    const QuestionAsQueryGenerator question_generator;
    struct Output {
        std::string trace, ranking;
        std::optional<QaRecord> qa;
    };
    std::vector<Output> outputs(dataset.questions.size());
    std::vector<std::string> errors(dataset.questions.size());

    detail::parallel_for_index(dataset.questions.size(), opts.threads, [&](std::size_t i) {
        const auto& question = dataset.questions[i];
        try {
            std::optional<OracleQueryGenerator> oracle_generator;
            if (wants_oracle) {
                auto golds =
                    golds_for_hops(index, question, opts.hops, config.ranking, opts.oracle);
                oracle_generator.emplace(index, question.question_id, std::move(golds),
                                         config.ranking, opts.oracle);
            }
            std::unique_ptr<QueryGenerator> external_generator;
            if (wants_external) external_generator = table->generator_for(question.question_id);

            std::vector<const QueryGenerator*> generators;
            generators.reserve(opts.generators.size());
            for (const auto& mode : opts.generators) {
                if (mode == "oracle") {
                    generators.push_back(&*oracle_generator);
                } else if (mode == "question") {
                    generators.push_back(&question_generator);
                } else {
                    generators.push_back(external_generator.get());
                }
            }

            auto result = run(index, question.question_id, question.question, generators, config);
            std::ostringstream trace;
            write_trace_records(trace, question.question_id, result.trace);
            outputs[i].trace = trace.str();
            outputs[i].ranking = ranking_line(question.question_id, result.trace);
            outputs[i].qa = qa_record_for(result.context, question);
        } catch (const std::exception& e) {
            errors[i] = error_line(question.question_id, e);
        }
    });

    auto trace_out = open_output(std::filesystem::path(opts.out) / "trace.jsonl");
    auto rankings_out = open_output(std::filesystem::path(opts.out) / "rankings.jsonl");
    std::vector<QaRecord> qa_records;
    for (const auto& output : outputs) {
        trace_out << output.trace;
        rankings_out << output.ranking;
        if (output.qa) qa_records.push_back(*output.qa);
    }
    open_output(std::filesystem::path(opts.out) / "qa_records.json")
        << qa_records_to_json(qa_records);

    json config_json = {{"index", opts.index},
                        {"dataset", opts.dataset},
                        {"generators", opts.generators},
                        {"limit", opts.limit},
                        {"hops", opts.hops},
                        {"n", opts.docs_per_hop},
                        {"min_ratio", opts.oracle.min_ratio},
                        {"ranking", ranking_json(config.ranking)}};
    std::vector<std::filesystem::path> inputs = {opts.index, opts.dataset};
    if (!opts.external.empty()) inputs.push_back(opts.external);
    write_run_manifest(opts.out, "run-pipeline", config_json.dump(), inputs);
    return finish_batch(opts.out, errors);
}

// ----------------------------------------------------------------------- eval

struct EvalOpts {
    std::string dataset, rankings, index, mode, qa_records, baseline, out;
    std::vector<std::uint32_t> ks = kDefaultKs;
    std::uint64_t limit = 0;
    std::size_t threads = 0;
    RankingFlags ranking;
};

std::vector<QuestionRanking> single_hop_rankings(const Index& index,
                                                 const std::vector<DatasetQuestion>& questions,
                                                 const RankingParams& params,
                                                 std::size_t threads) {
    std::vector<QuestionRanking> out(questions.size());
    detail::parallel_for_index(questions.size(), threads, [&](std::size_t i) {
        auto pool = ranked_pool(index, questions[i].question, params);
        QuestionRanking ranking;
        ranking.question_id = questions[i].question_id;
        ranking.ranked_titles.emplace_back();
        for (const auto& hit : pool) {
            ranking.ranked_titles.back().push_back(index.doc(hit.doc_id).title);
        }
        out[i] = std::move(ranking);
    });
    return out;
}

int cmd_eval(const EvalOpts& opts) {
    auto dataset = load_dataset(opts.dataset, opts.limit);
    std::vector<GoldPair> golds;
    golds.reserve(dataset.questions.size());
    for (const auto& q : dataset.questions) golds.push_back(q.gold_pair());

    std::vector<QuestionRanking> rankings;
    if (!opts.rankings.empty()) {
        rankings = load_rankings(opts.rankings);
    } else if (opts.mode == "single-hop") {
        if (opts.index.empty()) throw CorpusError("--mode single-hop requires --index");
        Index index = Index::open(opts.index);
        rankings = single_hop_rankings(index, dataset.questions, opts.ranking.resolve(),
                                       opts.threads);
    } else {
        throw CorpusError("provide --rankings FILE or --mode single-hop with --index");
    }

    RecallReport report = recall_curves(rankings, golds, opts.ks);
    if (!opts.qa_records.empty()) {
        auto contexts = contexts_from_qa_records(opts.qa_records);
        report.overall.both_gold_pct = both_gold_pct(contexts, golds);
        for (auto& [type, pct] : both_gold_pct_by_type(contexts, golds)) {
            if (auto it = report.by_type.find(type); it != report.by_type.end()) {
                it->second.both_gold_pct = pct;
            }
        }
    }

    std::string tsv = report_tsv(report);
    std::cout << tsv;
    if (!opts.out.empty()) {
        open_output(std::filesystem::path(opts.out) / "report.tsv") << tsv;
        open_output(std::filesystem::path(opts.out) / "curves.csv") << curves_csv(report);
        if (opts.rankings.empty()) {
            // Persist internally computed rankings so a later eval can take
            // them as --baseline.
            auto out = open_output(std::filesystem::path(opts.out) / "rankings.jsonl");
            for (const auto& r : rankings) {
                json lists = json::array();
                for (const auto& titles : r.ranked_titles) lists.push_back(titles);
                out << json{{"question_id", r.question_id},
                            {"ranked_titles", std::move(lists)}}
                           .dump()
                    << "\n";
            }
        }
    }

    if (!opts.baseline.empty()) {
        auto baseline_report = recall_curves(load_rankings(opts.baseline), golds, opts.ks);
        RecallDelta delta = oracle_vs_singlehop_delta(report, baseline_report);
        std::ostringstream delta_tsv;
        delta_tsv << std::fixed << std::setprecision(2) << "metric\tvalue\n"
                  << "d1_r5_minus_baseline_r10\t" << delta.d1 << "\n"
                  << "d2_r5_minus_baseline_r10\t" << delta.d2 << "\n";
        std::cout << delta_tsv.str();
        if (!opts.out.empty()) {
            open_output(std::filesystem::path(opts.out) / "delta.tsv") << delta_tsv.str();
        }
    }

    if (!opts.out.empty()) {
        json config = {{"dataset", opts.dataset},
                       {"rankings", opts.rankings},
                       {"mode", opts.mode},
                       {"qa_records", opts.qa_records},
                       {"baseline", opts.baseline},
                       {"ks", report.ks},
                       {"limit", opts.limit}};
        std::vector<std::filesystem::path> inputs = {opts.dataset};
        if (!opts.rankings.empty()) inputs.push_back(opts.rankings);
        if (!opts.qa_records.empty()) inputs.push_back(opts.qa_records);
        if (!opts.baseline.empty()) inputs.push_back(opts.baseline);
        write_run_manifest(opts.out, "eval", config.dump(), inputs);
    }
    return 0;
}

// ------------------------------------------------------------------- ablation

struct AblationOpts {
    std::string index, dataset, out;
    std::uint64_t limit = 0;
    std::size_t threads = 0;
    RankingFlags ranking;
};

int cmd_ablation(const AblationOpts& opts) {
    Index index = Index::open(opts.index);
    auto dataset = load_dataset(opts.dataset, opts.limit);
    std::vector<GoldPair> golds;
    std::vector<std::string> questions;
    for (const auto& q : dataset.questions) {
        golds.push_back(q.gold_pair());
        questions.push_back(q.question);
    }

    auto rows = run_ablation(index, golds, questions, opts.ranking.resolve(), opts.threads);
    std::string tsv = ablation_tsv(rows);
    std::cout << tsv;
    if (!opts.out.empty()) {
        open_output(std::filesystem::path(opts.out) / "ablation.tsv") << tsv;
        json config = {{"index", opts.index},
                       {"dataset", opts.dataset},
                       {"limit", opts.limit},
                       {"ranking", ranking_json(opts.ranking.resolve())}};
        write_run_manifest(opts.out, "ablation", config.dump(), {opts.index, opts.dataset});
    }
    return 0;
}

// ------------------------------------------------------- export-training-data

struct ExportTrainingOpts {
    std::string index, dataset, out;
    std::uint64_t limit = 0;
    std::uint32_t hops = 2, docs_per_hop = 5;
    std::size_t threads = 0;
    OracleParams oracle;
    RankingFlags ranking;
};

int cmd_export_training(const ExportTrainingOpts& opts) {
    Index index = Index::open(opts.index);
    auto dataset = load_dataset(opts.dataset, opts.limit);

    PipelineConfig config;
    config.hop_count = opts.hops;
    config.docs_per_hop = opts.docs_per_hop;
    config.ranking = opts.ranking.resolve();
    config.validate();
    opts.oracle.validate();

    struct Output {
        std::string training;
        std::optional<QaRecord> qa;
    };
    std::vector<Output> outputs(dataset.questions.size());
    std::vector<std::string> errors(dataset.questions.size());

    detail::parallel_for_index(dataset.questions.size(), opts.threads, [&](std::size_t i) {
        const auto& question = dataset.questions[i];
        try {
            auto golds = golds_for_hops(index, question, opts.hops, config.ranking, opts.oracle);
            auto contexts = training_context(index, question.question_id, question.question,
                                             golds, config, opts.oracle);
            std::ostringstream lines;
            for (const auto& hop : contexts.hops) {
                write_training_record(lines, question.question_id, hop);
            }
            outputs[i].training = lines.str();
            outputs[i].qa = qa_record_for(contexts.context, question);
        } catch (const std::exception& e) {
            errors[i] = error_line(question.question_id, e);
        }
    });

    auto training_out = open_output(std::filesystem::path(opts.out) / "training_records.jsonl");
    std::vector<QaRecord> qa_records;
    for (const auto& output : outputs) {
        training_out << output.training;
        if (output.qa) qa_records.push_back(*output.qa);
    }
    open_output(std::filesystem::path(opts.out) / "qa_train.json")
        << qa_records_to_json(qa_records);

    json config_json = {{"index", opts.index},
                        {"dataset", opts.dataset},
                        {"limit", opts.limit},
                        {"hops", opts.hops},
                        {"n", opts.docs_per_hop},
                        {"min_ratio", opts.oracle.min_ratio},
                        {"ranking", ranking_json(config.ranking)}};
    write_run_manifest(opts.out, "export-training-data", config_json.dump(),
                       {opts.index, opts.dataset});
    return finish_batch(opts.out, errors);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"multi-hop retrieval engine and evaluation harness"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "read options from a TOML config file");
    app.require_subcommand(1);

    std::function<int()> runner;

    BuildIndexOpts build_opts;
    auto* build = app.add_subcommand("build-index", "index a processed wiki dump");
    build->add_option("--dump", build_opts.dump, "dump directory of JSON-lines shards")
        ->required()
        ->check(CLI::ExistingDirectory);
    build->add_option("--out", build_opts.out, "index output directory")->required();
    build->add_option("--limit", build_opts.limit, "index only the first N documents");
    build->add_option("--stopwords", build_opts.stopwords, "stop list file (default: builtin)")
        ->check(CLI::ExistingFile);
    build->add_option("--foldtable", build_opts.foldtable,
                      "character folding file (default: builtin)")
        ->check(CLI::ExistingFile);
    build->callback([&] { runner = [&] { return cmd_build_index(build_opts); }; });

    SearchOpts search_opts;
    auto* search_cmd = app.add_subcommand("search", "query an index");
    search_cmd->add_option("--index", search_opts.index, "index directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    search_cmd->add_option("--query", search_opts.query, "query text")->required();
    search_cmd->add_option("--k", search_opts.k, "results to print")->capture_default_str();
    search_cmd->add_option("--out", search_opts.out, "write hits.tsv here instead of stdout");
    add_ranking_flags(search_cmd, search_opts.ranking);
    search_cmd->callback([&] { runner = [&] { return cmd_search(search_opts); }; });

    OracleGenOpts oracle_opts;
    auto* oracle_cmd =
        app.add_subcommand("oracle-gen", "derive per-hop oracle queries from gold documents");
    oracle_cmd->add_option("--index", oracle_opts.index, "index directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    oracle_cmd->add_option("--dataset", oracle_opts.dataset, "dataset JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    oracle_cmd->add_option("--out", oracle_opts.out, "output directory")->required();
    oracle_cmd->add_option("--limit", oracle_opts.limit, "process only the first N questions");
    oracle_cmd->add_option("--hops", oracle_opts.hops, "retrieval steps")->capture_default_str();
    oracle_cmd->add_option("--n", oracle_opts.docs_per_hop, "documents added per hop")
        ->capture_default_str();
    oracle_cmd->add_option("--min-ratio", oracle_opts.oracle.min_ratio,
                           "overlap-merge qualification threshold")
        ->capture_default_str();
    oracle_cmd
        ->add_option("--max-target-tokens", oracle_opts.oracle.max_target_tokens,
                     "cap on cleaned target length")
        ->capture_default_str();
    oracle_cmd->add_option("--threads", oracle_opts.threads, "worker threads (0 = all cores)");
    add_ranking_flags(oracle_cmd, oracle_opts.ranking);
    oracle_cmd->callback([&] { runner = [&] { return cmd_oracle_gen(oracle_opts); }; });

    RunPipelineOpts pipeline_opts;
    auto* pipeline_cmd =
        app.add_subcommand("run-pipeline", "run iterative retrieval over a dataset");
    pipeline_cmd->add_option("--index", pipeline_opts.index, "index directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    pipeline_cmd->add_option("--dataset", pipeline_opts.dataset, "dataset JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    pipeline_cmd->add_option("--out", pipeline_opts.out, "output directory")->required();
    pipeline_cmd
        ->add_option("--generators", pipeline_opts.generators,
                     "per-hop query generators: oracle, question, or external")
        ->delimiter(',')
        ->capture_default_str();
    pipeline_cmd->add_option("--external", pipeline_opts.external,
                             "precomputed query table (JSON lines) for external generators")
        ->check(CLI::ExistingFile);
    pipeline_cmd->add_option("--limit", pipeline_opts.limit,
                             "process only the first N questions");
    pipeline_cmd->add_option("--hops", pipeline_opts.hops, "retrieval steps")
        ->capture_default_str();
    pipeline_cmd->add_option("--n", pipeline_opts.docs_per_hop, "documents added per hop")
        ->capture_default_str();
    pipeline_cmd
        ->add_option("--min-ratio", pipeline_opts.oracle.min_ratio,
                     "overlap-merge qualification threshold")
        ->capture_default_str();
    pipeline_cmd->add_option("--threads", pipeline_opts.threads,
                             "worker threads (0 = all cores)");
    add_ranking_flags(pipeline_cmd, pipeline_opts.ranking);
    pipeline_cmd->callback([&] { runner = [&] { return cmd_run_pipeline(pipeline_opts); }; });

    EvalOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "compute recall curves for ranked results");
    eval_cmd->add_option("--dataset", eval_opts.dataset, "dataset JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--rankings", eval_opts.rankings,
                         "rankings.jsonl from run-pipeline")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--mode", eval_opts.mode,
                         "single-hop: rank question-as-query directly (needs --index)");
    eval_cmd->add_option("--index", eval_opts.index, "index directory for --mode single-hop")
        ->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--qa-records", eval_opts.qa_records,
                         "qa_records.json for both-gold coverage")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--baseline", eval_opts.baseline,
                         "baseline rankings.jsonl for the oracle-vs-single-hop delta")
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--k", eval_opts.ks, "cutoffs to evaluate")
        ->delimiter(',')
        ->capture_default_str();
    eval_cmd->add_option("--out", eval_opts.out, "output directory");
    eval_cmd->add_option("--limit", eval_opts.limit, "evaluate only the first N questions");
    eval_cmd->add_option("--threads", eval_opts.threads, "worker threads (0 = all cores)");
    add_ranking_flags(eval_cmd, eval_opts.ranking);
    eval_cmd->callback([&] { runner = [&] { return cmd_eval(eval_opts); }; });

    AblationOpts ablation_opts;
    auto* ablation_cmd =
        app.add_subcommand("ablation", "single-hop recall under the four ranking setups");
    ablation_cmd->add_option("--index", ablation_opts.index, "index directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    ablation_cmd->add_option("--dataset", ablation_opts.dataset, "dataset JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    ablation_cmd->add_option("--out", ablation_opts.out, "output directory");
    ablation_cmd->add_option("--limit", ablation_opts.limit,
                             "process only the first N questions");
    ablation_cmd->add_option("--threads", ablation_opts.threads,
                             "worker threads (0 = all cores)");
    add_ranking_flags(ablation_cmd, ablation_opts.ranking);
    ablation_cmd->callback([&] { runner = [&] { return cmd_ablation(ablation_opts); }; });

    ExportTrainingOpts export_opts;
    auto* export_cmd = app.add_subcommand(
        "export-training-data", "emit per-hop supervision records and gold-complete QA input");
    export_cmd->add_option("--index", export_opts.index, "index directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    export_cmd->add_option("--dataset", export_opts.dataset, "dataset JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    export_cmd->add_option("--out", export_opts.out, "output directory")->required();
    export_cmd->add_option("--limit", export_opts.limit, "process only the first N questions");
    export_cmd->add_option("--hops", export_opts.hops, "retrieval steps")->capture_default_str();
    export_cmd->add_option("--n", export_opts.docs_per_hop, "documents added per hop")
        ->capture_default_str();
    export_cmd
        ->add_option("--min-ratio", export_opts.oracle.min_ratio,
                     "overlap-merge qualification threshold")
        ->capture_default_str();
    export_cmd->add_option("--threads", export_opts.threads, "worker threads (0 = all cores)");
    add_ranking_flags(export_cmd, export_opts.ranking);
    export_cmd->callback([&] { runner = [&] { return cmd_export_training(export_opts); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return runner();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace multihop
