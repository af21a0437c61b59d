#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace multihop {

// One analyzed token. Offsets are counted in code points of the source
// string (not bytes) so spans can be quoted back verbatim.
struct Token {
    std::string text;         // analyzed form: folded + lowercased
    std::size_t char_start;   // inclusive
    std::size_t char_end;     // exclusive

    bool operator==(const Token&) const = default;
};

// Immutable after load. The same list must be used at index and query time;
// index manifests pin it by content hash.
class StopList {
public:
    StopList() = default;
    explicit StopList(std::vector<std::string> words);

    // The 33-word classic English function-word list shipped in
    // data/stopwords.txt.
    static const StopList& builtin();
    // One lowercase word per line, UTF-8.
    static StopList load(const std::filesystem::path& file);

    bool contains(std::string_view word) const {
        return words_.find(std::string(word)) != words_.end();
    }
    std::size_t size() const { return words_.size(); }
    std::vector<std::string> sorted_words() const;
    std::uint64_t content_hash() const;

private:
    std::unordered_set<std::string> words_;
};

// Maps accented/variant code points to ASCII replacement strings. A code
// point is a token character iff it is ASCII alphanumeric or folds to a
// (necessarily alphanumeric) replacement; everything else separates tokens.
class FoldTable {
public:
    // Latin-1 Supplement + Latin Extended-A, shipped in data/asciifold.tsv.
    static const FoldTable& builtin();
    // Tab-separated "source<TAB>replacement" pairs, UTF-8.
    static FoldTable load(const std::filesystem::path& file);

    const std::string* find(char32_t cp) const {
        auto it = map_.find(cp);
        return it == map_.end() ? nullptr : &it->second;
    }
    std::size_t size() const { return map_.size(); }
    // Sorted by code point; canonical order for hashing and persistence.
    std::vector<std::pair<char32_t, std::string>> entries() const;
    std::uint64_t content_hash() const;

private:
    friend FoldTable make_fold_table(std::vector<std::pair<char32_t, std::string>>);
    std::unordered_map<char32_t, std::string> map_;
};

FoldTable make_fold_table(std::vector<std::pair<char32_t, std::string>> entries);

// Applies the folding table only; case and unmapped characters are left
// untouched. Idempotent because all replacements are ASCII.
std::string asciifold(std::string_view text, const FoldTable& folds);

// Split on non-alphanumeric boundaries, fold, lowercase. Keeps stop words.
std::vector<Token> simple_analyze(std::string_view text, const FoldTable& folds);

// simple_analyze with stop-list entries removed. Offsets still index the
// original string.
std::vector<Token> standard_analyze(std::string_view text, const StopList& stops,
                                    const FoldTable& folds);

// Cleaning pass for overlap heuristics: lowercased, stop-word-free tokens
// with original-character offsets. Under the unified split rule this is the
// standard analysis; kept as its own entry point because callers depend on
// the span-recovery contract rather than on indexing behavior.
std::vector<Token> clean_for_overlap(std::string_view text, const StopList& stops,
                                     const FoldTable& folds);

// Adjacent-pair bigrams rendered "a b". |result| = max(0, |tokens| - 1).
std::vector<std::string> shingle2(const std::vector<Token>& tokens);

bool is_token_char(char32_t cp, const FoldTable& folds);

}  // namespace multihop
