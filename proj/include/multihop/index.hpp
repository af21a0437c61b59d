#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "multihop/textproc.hpp"

namespace multihop {

using DocId = std::uint32_t;

// One Wikipedia-style introductory paragraph.
struct Document {
    DocId doc_id = 0;
    std::string title;
    std::vector<std::string> sentences;
    std::string source_url;  // may be empty

    // The indexed/searchable body: sentences joined with a single space.
    std::string text() const;
};

enum class FieldId : std::uint8_t {
    TITLE = 0,         // simple analysis (stop words kept)
    TITLE_BIGRAM = 1,  // shingles over TITLE tokens
    TEXT = 2,          // standard analysis (stop words removed)
    TEXT_BIGRAM = 3,   // shingles over TEXT tokens
};
inline constexpr std::size_t kFieldCount = 4;
inline constexpr std::array<FieldId, kFieldCount> kAllFields = {
    FieldId::TITLE, FieldId::TITLE_BIGRAM, FieldId::TEXT, FieldId::TEXT_BIGRAM};

std::string_view field_name(FieldId field);
bool is_title_field(FieldId field);

struct Posting {
    DocId doc_id;
    std::uint32_t term_frequency;

    bool operator==(const Posting&) const = default;
};

struct PostingList {
    std::string term;
    std::vector<Posting> entries;  // ascending doc_id, no duplicates
};

struct TermStats {
    std::uint64_t doc_frequency = 0;  // n_t
    PostingList postings;
};

struct FieldStats {
    std::uint64_t total_tokens = 0;
    std::uint64_t term_count = 0;
    double avg_field_length = 0.0;  // avgdl
};

struct IndexStats {
    std::uint64_t doc_count = 0;  // N
    std::array<FieldStats, kFieldCount> fields{};

    const FieldStats& field(FieldId f) const { return fields[static_cast<std::size_t>(f)]; }
};

class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Version mismatch, checksum failure, truncation.
class IndexLoadError : public IndexError {
public:
    using IndexError::IndexError;
};

// Yields documents until empty. doc_ids must be dense 0..N-1 but may arrive
// in any order.
using DocumentSource = std::function<std::optional<Document>()>;

namespace detail {

// Delta-encoded (doc_id, tf) pairs; doc ids appended in ascending order.
struct CompressedPostings {
    std::uint32_t count = 0;
    DocId last_doc = 0;
    std::vector<std::uint8_t> bytes;

    void append(DocId doc, std::uint32_t tf);
};

}  // namespace detail

// Decodes one compressed posting list without materializing it.
class PostingCursor {
public:
    PostingCursor(const std::uint8_t* begin, const std::uint8_t* end, std::uint32_t count);

    bool done() const { return remaining_ == 0; }
    DocId doc() const { return doc_; }
    std::uint32_t tf() const { return tf_; }
    std::uint32_t remaining() const { return remaining_; }
    void next();

private:
    const std::uint8_t* p_;
    const std::uint8_t* end_;
    std::uint32_t remaining_;
    DocId doc_ = 0;
    std::uint32_t tf_ = 0;
};

// Inverted index over the four analyzed fields plus the corpus statistics
// BM25 needs. Immutable once built or opened; safe for unrestricted
// concurrent readers.
class Index {
public:
    Index(const Index&) = delete;
    Index& operator=(const Index&) = delete;
    Index(Index&&) = default;
    Index& operator=(Index&&) = default;

    // Drains the source, then indexes in doc_id order, so the result is
    // insensitive to arrival order. Throws IndexError on duplicate or
    // non-dense doc_ids and on an empty corpus.
    static Index build(DocumentSource source, const StopList& stops, const FoldTable& folds);
    static Index build(std::vector<Document> docs, const StopList& stops, const FoldTable& folds);

    // Single-directory layout: manifest.json + docs.bin + postings.bin plus
    // verbatim copies of the analyzer data files (see docs in README).
    void save(const std::filesystem::path& dir) const;
    static Index open(const std::filesystem::path& dir);

    const IndexStats& stats() const { return stats_; }
    std::uint64_t doc_count() const { return stats_.doc_count; }

    const Document& doc(DocId id) const;
    // Exact title match; first occurrence wins when titles collide.
    std::optional<DocId> find_title(std::string_view title) const;
    std::uint64_t duplicate_title_count() const { return duplicate_titles_; }

    // Exact counts; unknown term -> (0, empty list).
    TermStats term_stats(FieldId field, std::string_view term) const;
    std::optional<PostingCursor> postings(FieldId field, std::string_view term) const;

    // Token count of the field for one document (0 if absent).
    std::uint32_t field_length(FieldId field, DocId id) const;

    const StopList& stop_list() const { return stops_; }
    const FoldTable& fold_table() const { return folds_; }

private:
    Index() = default;

    void index_documents();

    StopList stops_;
    FoldTable folds_;
    std::vector<Document> docs_;
    std::unordered_map<std::string, DocId> title_to_doc_;
    std::uint64_t duplicate_titles_ = 0;

    std::array<std::unordered_map<std::string, detail::CompressedPostings>, kFieldCount> fields_;
    std::array<std::vector<std::uint32_t>, kFieldCount> field_lengths_;
    IndexStats stats_;
};

}  // namespace multihop
