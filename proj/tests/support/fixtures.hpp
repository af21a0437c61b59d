#pragma once

// Test support: brute-force reference implementations kept deliberately
// independent of the engine's data structures, plus deterministic fixture
// generators.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "multihop/corpus_io.hpp"
#include "multihop/index.hpp"
#include "multihop/ranking.hpp"

namespace testsup {

// Self-deleting temp directory.
class TmpDir {
public:
    explicit TmpDir(const std::string& tag);
    ~TmpDir();
    TmpDir(const TmpDir&) = delete;
    TmpDir& operator=(const TmpDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Best-field BM25 evaluated naively: term vectors recounted per call, the
// formula written straight from its definition. No posting lists, no
// accumulators.
class BruteScorer {
public:
    explicit BruteScorer(const std::vector<multihop::Document>& docs);

    // Raw best-field score (field boost applied, no rerank tier); 0 when the
    // document matches nowhere.
    double score(const std::string& query, multihop::DocId doc,
                 const multihop::RankingParams& params) const;

private:
    std::size_t doc_count_;
    // [field][doc] -> analyzed term sequence
    std::array<std::vector<std::vector<std::string>>, multihop::kFieldCount> terms_;
};

// Classic full-table prefix DP references for the overlap heuristics.
std::size_t brute_lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b);
// (length, earliest start index in `a`); length 0 when nothing is common.
std::pair<std::size_t, std::size_t> brute_lcsubstr(const std::vector<std::string>& a,
                                                   const std::vector<std::string>& b);

// Stop-free, fold-free vocabulary for random corpora and token lists.
const std::vector<std::string>& test_vocab();

std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len,
                                       std::size_t vocab_size);

// Random small corpus: 1..max_docs documents of 1-2 title words and 1-3
// sentences over the test vocabulary.
std::vector<multihop::Document> random_corpus(std::mt19937& rng, std::size_t max_docs,
                                              std::size_t vocab_size);

// A two-hop-question dataset shaped like the real thing, written through the
// real on-disk formats (dump shards, one gzip-compressed; dataset JSON).
// Bridge questions name the hop-1 document only; the hop-2 document is
// reachable through a mention in the hop-1 paragraph. Comparison questions
// name both.
struct SyntheticFixture {
    std::filesystem::path dump_dir;
    std::filesystem::path dataset_file;
    std::vector<multihop::Document> documents;  // doc_id order, = loader output
    std::vector<multihop::DatasetQuestion> questions;
};

SyntheticFixture make_synthetic_fixture(const std::filesystem::path& base_dir,
                                        std::size_t question_count = 500,
                                        std::size_t distractor_count = 5000,
                                        std::uint32_t seed = 20230817);

}  // namespace testsup
