#include "multihop/textproc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "multihop/hash.hpp"
#include "multihop/utf8.hpp"

namespace multihop {

namespace {

constexpr std::array<const char*, 33> kBuiltinStops = {
    "a",    "an",    "and",   "are",  "as",    "at",   "be",   "but", "by",
    "for",  "if",    "in",    "into", "is",    "it",   "no",   "not", "of",
    "on",   "or",    "such",  "that", "the",   "their", "then", "there",
    "these", "they", "this",  "to",   "was",   "will", "with"};

struct FoldEntry {
    char32_t cp;
    const char* replacement;
};

constexpr FoldEntry kBuiltinFolds[] = {
#include "foldtable_builtin.inc"
};

bool ascii_alnum(char32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

StopList::StopList(std::vector<std::string> words) {
    for (auto& w : words) {
        if (w.empty()) continue;
        words_.insert(std::move(w));
    }
    if (words_.empty()) throw std::invalid_argument("stop list must not be empty");
}

const StopList& StopList::builtin() {
    static const StopList list{
        std::vector<std::string>(kBuiltinStops.begin(), kBuiltinStops.end())};
    return list;
}

StopList StopList::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open stop list: " + file.string());
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.push_back(line);
    }
    return StopList(std::move(words));
}

std::vector<std::string> StopList::sorted_words() const {
    std::vector<std::string> out(words_.begin(), words_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t StopList::content_hash() const {
    Fnv1a h;
    for (const auto& w : sorted_words()) {
        h.update(w);
        h.update("\n", 1);
    }
    return h.digest();
}

FoldTable make_fold_table(std::vector<std::pair<char32_t, std::string>> entries) {
    FoldTable table;
    for (auto& [cp, repl] : entries) table.map_[cp] = std::move(repl);
    return table;
}

const FoldTable& FoldTable::builtin() {
    static const FoldTable table = [] {
        std::vector<std::pair<char32_t, std::string>> entries;
        for (const auto& e : kBuiltinFolds) entries.emplace_back(e.cp, e.replacement);
        return make_fold_table(std::move(entries));
    }();
    return table;
}

FoldTable FoldTable::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open folding table: " + file.string());
    std::vector<std::pair<char32_t, std::string>> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw std::runtime_error("malformed folding table line " + std::to_string(lineno) +
                                     " in " + file.string());
        }
        std::string_view src(line.data(), tab);
        std::size_t i = 0;
        char32_t cp = utf8::decode(src, i);
        if (i != src.size()) {
            throw std::runtime_error("folding table source must be a single character, line " +
                                     std::to_string(lineno));
        }
        entries.emplace_back(cp, line.substr(tab + 1));
    }
    return make_fold_table(std::move(entries));
}

std::vector<std::pair<char32_t, std::string>> FoldTable::entries() const {
    std::vector<std::pair<char32_t, std::string>> out(map_.begin(), map_.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t FoldTable::content_hash() const {
    Fnv1a h;
    for (const auto& [cp, repl] : entries()) {
        std::uint32_t v = cp;
        h.update(&v, sizeof(v));
        h.update(repl);
        h.update("\n", 1);
    }
    return h.digest();
}

bool is_token_char(char32_t cp, const FoldTable& folds) {
    if (cp < 0x80) return ascii_alnum(cp);
    return folds.find(cp) != nullptr;
}

std::string asciifold(std::string_view text, const FoldTable& folds) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t before = i;
        char32_t cp = utf8::decode(text, i);
        if (const std::string* repl = folds.find(cp)) {
            out += *repl;
        } else {
            out.append(text.substr(before, i - before));
        }
    }
    return out;
}

std::vector<Token> simple_analyze(std::string_view text, const FoldTable& folds) {
    std::vector<Token> tokens;
    Token cur;
    bool open = false;
    std::size_t ci = 0;  // code point index
    std::size_t i = 0;   // byte index
    const auto flush = [&] {
        if (open) {
            tokens.push_back(std::move(cur));
            cur = Token{};
            open = false;
        }
    };
    while (i < text.size()) {
        char32_t cp = utf8::decode(text, i);
        const std::string* repl = cp < 0x80 ? nullptr : folds.find(cp);
        bool token_char = cp < 0x80 ? ascii_alnum(cp) : repl != nullptr;
        if (token_char) {
            if (!open) {
                cur.char_start = ci;
                open = true;
            }
            if (repl) {
                for (char c : *repl) cur.text.push_back(ascii_lower(c));
            } else {
                cur.text.push_back(ascii_lower(static_cast<char>(cp)));
            }
            cur.char_end = ci + 1;
        } else {
            flush();
        }
        ++ci;
    }
    flush();
    return tokens;
}

std::vector<Token> standard_analyze(std::string_view text, const StopList& stops,
                                    const FoldTable& folds) {
    std::vector<Token> tokens = simple_analyze(text, folds);
    std::erase_if(tokens, [&](const Token& t) { return stops.contains(t.text); });
    return tokens;
}

std::vector<Token> clean_for_overlap(std::string_view text, const StopList& stops,
                                     const FoldTable& folds) {
    return standard_analyze(text, stops, folds);
}

std::vector<std::string> shingle2(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    if (tokens.size() < 2) return out;
    out.reserve(tokens.size() - 1);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        out.push_back(tokens[i].text + " " + tokens[i + 1].text);
    }
    return out;
}

}  // namespace multihop
