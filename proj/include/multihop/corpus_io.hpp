#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "multihop/eval.hpp"
#include "multihop/index.hpp"
#include "multihop/oracle.hpp"
#include "multihop/pipeline.hpp"

namespace multihop {

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One dataset question with its gold supporting titles (deduplicated from
// the supporting-facts list; always exactly two).
struct DatasetQuestion {
    std::string question_id;
    std::string question;
    std::string answer;
    std::string question_type;
    std::string level;
    std::vector<std::string> gold_titles;
    std::vector<std::pair<std::string, int>> supporting_facts;

    GoldPair gold_pair() const;
};

struct DumpStats {
    std::uint64_t documents = 0;
    std::uint64_t lines = 0;
    std::uint64_t malformed = 0;
    std::uint64_t shards = 0;
};

// Streams a processed Wikipedia dump: a directory tree of JSON-lines shards
// (plain, .gz, or .bz2 when built with bzip2 support), one object per page
// with fields title and text (a sentence list). doc_ids are assigned densely
// in shard-path-lexicographic then line order. Malformed lines are skipped
// and counted; more than 0.1% malformed aborts the load.
DumpStats load_wiki_dump(const std::filesystem::path& dir,
                         const std::function<void(Document&&)>& sink, std::uint64_t limit = 0);

std::vector<Document> load_wiki_dump(const std::filesystem::path& dir, std::uint64_t limit = 0);

struct DatasetLoadResult {
    std::vector<DatasetQuestion> questions;
    std::uint64_t skipped = 0;
};

// Loads a dataset JSON file (fullwiki/distractor train or dev format):
// records with _id, question, answer, supporting_facts, type, level.
// Records without exactly two distinct gold titles are skipped and logged.
DatasetLoadResult load_dataset(const std::filesystem::path& file, std::uint64_t limit = 0);

// --- structured output writers ---------------------------------------------

void write_oracle_record(std::ostream& out, const OracleQuery& oracle);
void write_training_record(std::ostream& out, std::string_view question_id,
                           const HopSupervision& hop);
void write_trace_records(std::ostream& out, std::string_view question_id,
                         const std::vector<HopTrace>& trace);
// The distractor-setting input schema: [{_id, question, answer, type, level,
// supporting_facts, context: [[title, [sentences...]], ...]}, ...]
std::string qa_records_to_json(const std::vector<QaRecord>& records);

// Manifest written alongside every CLI run's outputs: subcommand, effective
// configuration and its hash, and per-input size/checksum records.
void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const std::string& config_json,
                        const std::vector<std::filesystem::path>& inputs);

// The CLI entry point (subcommands: build-index, search, oracle-gen,
// run-pipeline, eval, ablation, export-training-data).
int run_cli(int argc, const char* const* argv);

}  // namespace multihop
