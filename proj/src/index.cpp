#include "multihop/index.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "multihop/hash.hpp"
#include "multihop/utf8.hpp"
#include "serial.hpp"

namespace multihop {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr const char* kFormatName = "multihop-index";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kDocsFile = "docs.bin";
constexpr const char* kPostingsFile = "postings.bin";
constexpr const char* kStopwordsFile = "stopwords.txt";
constexpr const char* kFoldsFile = "asciifold.tsv";

std::uint64_t read_list_varint(const std::uint8_t*& p, const std::uint8_t* end) {
    std::uint64_t v = 0;
    int shift = 0;
    while (true) {
        if (p == end) throw IndexLoadError("posting list is truncated");
        std::uint8_t b = *p++;
        v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
        if (!(b & 0x80)) return v;
        shift += 7;
        if (shift > 63) throw IndexLoadError("posting list varint overflow");
    }
}

void append_list_varint(std::vector<std::uint8_t>& bytes, std::uint64_t v) {
    while (v >= 0x80) {
        bytes.push_back(static_cast<std::uint8_t>(v) | 0x80);
        v >>= 7;
    }
    bytes.push_back(static_cast<std::uint8_t>(v));
}

std::string write_text_file(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IndexError("cannot write " + file.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IndexError("write failure on " + file.string());
    return content;
}

std::string read_whole_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IndexLoadError("cannot open " + file.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

}  // namespace

std::string Document::text() const {
    std::string out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (i > 0) out += ' ';
        out += sentences[i];
    }
    return out;
}

std::string_view field_name(FieldId field) {
    switch (field) {
        case FieldId::TITLE: return "title";
        case FieldId::TITLE_BIGRAM: return "title.bigram";
        case FieldId::TEXT: return "text";
        case FieldId::TEXT_BIGRAM: return "text.bigram";
    }
    throw IndexError("unknown field id " + std::to_string(static_cast<int>(field)));
}

bool is_title_field(FieldId field) {
    return field == FieldId::TITLE || field == FieldId::TITLE_BIGRAM;
}

namespace detail {

void CompressedPostings::append(DocId doc, std::uint32_t tf) {
    if (count > 0 && doc <= last_doc) {
        throw IndexError("postings must be appended in ascending doc_id order");
    }
    if (tf == 0) throw IndexError("zero term frequency in posting");
    std::uint64_t gap = count == 0 ? doc : doc - last_doc;
    append_list_varint(bytes, gap);
    append_list_varint(bytes, tf);
    last_doc = doc;
    ++count;
}

}  // namespace detail

PostingCursor::PostingCursor(const std::uint8_t* begin, const std::uint8_t* end,
                             std::uint32_t count)
    : p_(begin), end_(end), remaining_(count) {
    if (remaining_ > 0) {
        doc_ = static_cast<DocId>(read_list_varint(p_, end_));
        tf_ = static_cast<std::uint32_t>(read_list_varint(p_, end_));
    }
}

void PostingCursor::next() {
    --remaining_;
    if (remaining_ > 0) {
        doc_ += static_cast<DocId>(read_list_varint(p_, end_));
        tf_ = static_cast<std::uint32_t>(read_list_varint(p_, end_));
    }
}

Index Index::build(DocumentSource source, const StopList& stops, const FoldTable& folds) {
    std::vector<Document> docs;
    while (auto doc = source()) docs.push_back(std::move(*doc));
    return build(std::move(docs), stops, folds);
}

Index Index::build(std::vector<Document> docs, const StopList& stops, const FoldTable& folds) {
    if (docs.empty()) throw IndexError("cannot build an index over an empty corpus");

    const std::size_t n = docs.size();
    std::vector<Document> by_id(n);
    std::vector<bool> seen(n, false);
    for (auto& doc : docs) {
        if (doc.doc_id >= n) {
            throw IndexError("doc_id " + std::to_string(doc.doc_id) +
                             " out of range for a corpus of " + std::to_string(n) +
                             " documents; ids must be dense 0..N-1");
        }
        if (seen[doc.doc_id]) {
            throw IndexError("duplicate doc_id " + std::to_string(doc.doc_id));
        }
        seen[doc.doc_id] = true;
        by_id[doc.doc_id] = std::move(doc);
    }

    Index index;
    index.stops_ = stops;
    index.folds_ = folds;
    index.docs_ = std::move(by_id);
    index.index_documents();
    return index;
}

void Index::index_documents() {
    const std::size_t n = docs_.size();
    stats_ = IndexStats{};
    stats_.doc_count = n;
    for (auto& lengths : field_lengths_) lengths.assign(n, 0);
    title_to_doc_.clear();
    title_to_doc_.reserve(n);
    duplicate_titles_ = 0;

    std::unordered_map<std::string, std::uint32_t> tf;
    auto index_terms = [&](FieldId field, DocId id, auto&& terms, std::size_t term_total) {
        const auto f = static_cast<std::size_t>(field);
        tf.clear();
        for (auto&& term : terms) ++tf[term];
        // Per-term lists stay independent, so unordered iteration here does
        // not affect the built index.
        for (auto& [term, freq] : tf) fields_[f][term].append(id, freq);
        field_lengths_[f][id] = static_cast<std::uint32_t>(term_total);
        stats_.fields[f].total_tokens += term_total;
    };

    for (DocId id = 0; id < n; ++id) {
        const Document& doc = docs_[id];

        auto title_tokens = simple_analyze(doc.title, folds_);
        auto text_tokens = standard_analyze(doc.text(), stops_, folds_);
        auto title_bigrams = shingle2(title_tokens);
        auto text_bigrams = shingle2(text_tokens);

        auto term_texts = [](const std::vector<Token>& tokens) {
            std::vector<std::string> out;
            out.reserve(tokens.size());
            for (const auto& t : tokens) out.push_back(t.text);
            return out;
        };

        index_terms(FieldId::TITLE, id, term_texts(title_tokens), title_tokens.size());
        index_terms(FieldId::TITLE_BIGRAM, id, title_bigrams, title_bigrams.size());
        index_terms(FieldId::TEXT, id, term_texts(text_tokens), text_tokens.size());
        index_terms(FieldId::TEXT_BIGRAM, id, text_bigrams, text_bigrams.size());

        if (!title_to_doc_.emplace(doc.title, id).second) ++duplicate_titles_;
    }

    for (std::size_t f = 0; f < kFieldCount; ++f) {
        auto& fs = stats_.fields[f];
        fs.term_count = fields_[f].size();
        fs.avg_field_length = n == 0 ? 0.0 : static_cast<double>(fs.total_tokens) / n;
    }
}

const Document& Index::doc(DocId id) const {
    if (id >= docs_.size()) {
        throw IndexError("doc_id " + std::to_string(id) + " out of range");
    }
    return docs_[id];
}

std::optional<DocId> Index::find_title(std::string_view title) const {
    auto it = title_to_doc_.find(std::string(title));
    if (it == title_to_doc_.end()) return std::nullopt;
    return it->second;
}

TermStats Index::term_stats(FieldId field, std::string_view term) const {
    TermStats stats;
    stats.postings.term = std::string(term);
    const auto& field_map = fields_[static_cast<std::size_t>(field)];
    auto it = field_map.find(stats.postings.term);
    if (it == field_map.end()) return stats;

    const auto& list = it->second;
    stats.doc_frequency = list.count;
    stats.postings.entries.reserve(list.count);
    for (PostingCursor cur(list.bytes.data(), list.bytes.data() + list.bytes.size(), list.count);
         !cur.done(); cur.next()) {
        stats.postings.entries.push_back({cur.doc(), cur.tf()});
    }
    return stats;
}

std::optional<PostingCursor> Index::postings(FieldId field, std::string_view term) const {
    const auto& field_map = fields_[static_cast<std::size_t>(field)];
    auto it = field_map.find(std::string(term));
    if (it == field_map.end()) return std::nullopt;
    const auto& list = it->second;
    return PostingCursor(list.bytes.data(), list.bytes.data() + list.bytes.size(), list.count);
}

std::uint32_t Index::field_length(FieldId field, DocId id) const {
    const auto& lengths = field_lengths_[static_cast<std::size_t>(field)];
    return id < lengths.size() ? lengths[id] : 0;
}

void Index::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json files = nlohmann::json::object();

    {
        detail::HashingWriter out(dir / kDocsFile);
        out.varint(docs_.size());
        for (const auto& doc : docs_) {
            out.str(doc.title);
            out.varint(doc.sentences.size());
            for (const auto& s : doc.sentences) out.str(s);
            out.str(doc.source_url);
        }
        files[kDocsFile] = {{"bytes", out.bytes()}, {"fnv1a64", to_hex(out.digest())}};
        out.close();
    }

    {
        detail::HashingWriter out(dir / kPostingsFile);
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            std::vector<const std::pair<const std::string, detail::CompressedPostings>*> terms;
            terms.reserve(fields_[f].size());
            for (const auto& entry : fields_[f]) terms.push_back(&entry);
            std::sort(terms.begin(), terms.end(),
                      [](const auto* a, const auto* b) { return a->first < b->first; });

            out.varint(terms.size());
            for (const auto* entry : terms) {
                out.str(entry->first);
                out.varint(entry->second.count);
                out.varint(entry->second.bytes.size());
                out.write(entry->second.bytes.data(), entry->second.bytes.size());
            }
            out.varint(field_lengths_[f].size());
            for (auto len : field_lengths_[f]) out.varint(len);
        }
        files[kPostingsFile] = {{"bytes", out.bytes()}, {"fnv1a64", to_hex(out.digest())}};
        out.close();
    }

    {
        std::string content;
        for (const auto& w : stops_.sorted_words()) {
            content += w;
            content += '\n';
        }
        write_text_file(dir / kStopwordsFile, content);
        files[kStopwordsFile] = {{"bytes", content.size()}, {"fnv1a64", to_hex(fnv1a64(content))}};
    }

    {
        std::string content;
        for (const auto& [cp, repl] : folds_.entries()) {
            utf8::append(content, cp);
            content += '\t';
            content += repl;
            content += '\n';
        }
        write_text_file(dir / kFoldsFile, content);
        files[kFoldsFile] = {{"bytes", content.size()}, {"fnv1a64", to_hex(fnv1a64(content))}};
    }

    nlohmann::json fields = nlohmann::json::array();
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        fields.push_back({
            {"name", field_name(static_cast<FieldId>(f))},
            {"total_tokens", stats_.fields[f].total_tokens},
            {"term_count", stats_.fields[f].term_count},
        });
    }

    nlohmann::json manifest = {
        {"format", kFormatName},
        {"version", kFormatVersion},
        {"doc_count", stats_.doc_count},
        {"duplicate_titles", duplicate_titles_},
        {"stoplist_hash", to_hex(stops_.content_hash())},
        {"foldtable_hash", to_hex(folds_.content_hash())},
        {"fields", fields},
        {"files", files},
    };
    write_text_file(dir / kManifestFile, manifest.dump(2) + "\n");
}

Index Index::open(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        std::ifstream in(dir / kManifestFile);
        if (!in) throw IndexLoadError("cannot open " + (dir / kManifestFile).string());
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IndexLoadError("bad index manifest: " + std::string(e.what()));
    }

    if (manifest.value("format", "") != kFormatName) {
        throw IndexLoadError("not a recognized index directory: " + dir.string());
    }
    if (manifest.value("version", 0u) != kFormatVersion) {
        throw IndexLoadError("unsupported index format version " +
                             manifest["version"].dump() + " (expected " +
                             std::to_string(kFormatVersion) + ")");
    }

    auto expect_file = [&](const char* name) -> std::pair<std::uint64_t, std::string> {
        if (!manifest["files"].contains(name)) {
            throw IndexLoadError(std::string("manifest is missing entry for ") + name);
        }
        const auto& entry = manifest["files"][name];
        std::uint64_t bytes = entry.at("bytes").get<std::uint64_t>();
        std::string digest = entry.at("fnv1a64").get<std::string>();
        std::error_code ec;
        auto actual = std::filesystem::file_size(dir / name, ec);
        if (ec) throw IndexLoadError(std::string("missing index file ") + name);
        if (actual != bytes) {
            throw IndexLoadError(std::string(name) + " size mismatch (expected " +
                                 std::to_string(bytes) + " bytes, found " +
                                 std::to_string(actual) + ")");
        }
        return {bytes, digest};
    };
    auto check_digest = [](const char* name, std::uint64_t digest, const std::string& expected) {
        if (to_hex(digest) != expected) {
            throw IndexLoadError(std::string("checksum mismatch in ") + name);
        }
    };

    Index index;

    {
        auto [bytes, expected] = expect_file(kStopwordsFile);
        (void)bytes;
        std::string content = read_whole_file(dir / kStopwordsFile);
        check_digest(kStopwordsFile, fnv1a64(content), expected);
        index.stops_ = StopList::load(dir / kStopwordsFile);
        if (to_hex(index.stops_.content_hash()) != manifest.value("stoplist_hash", "")) {
            throw IndexLoadError("stop list does not match the manifest hash");
        }
    }
    {
        auto [bytes, expected] = expect_file(kFoldsFile);
        (void)bytes;
        std::string content = read_whole_file(dir / kFoldsFile);
        check_digest(kFoldsFile, fnv1a64(content), expected);
        index.folds_ = FoldTable::load(dir / kFoldsFile);
        if (to_hex(index.folds_.content_hash()) != manifest.value("foldtable_hash", "")) {
            throw IndexLoadError("folding table does not match the manifest hash");
        }
    }

    const auto doc_count = manifest.value("doc_count", std::uint64_t{0});
    {
        auto [bytes, expected] = expect_file(kDocsFile);
        (void)bytes;
        detail::HashingReader in(dir / kDocsFile);
        std::uint64_t n = in.varint();
        if (n != doc_count) {
            throw IndexLoadError("docs.bin document count disagrees with the manifest");
        }
        index.docs_.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            Document doc;
            doc.doc_id = static_cast<DocId>(i);
            doc.title = in.str();
            std::uint64_t sentence_count = in.varint();
            doc.sentences.reserve(sentence_count);
            for (std::uint64_t s = 0; s < sentence_count; ++s) doc.sentences.push_back(in.str());
            doc.source_url = in.str();
            index.docs_.push_back(std::move(doc));
        }
        if (in.remaining() != 0) throw IndexLoadError("trailing bytes in docs.bin");
        check_digest(kDocsFile, in.digest(), expected);
    }

    {
        auto [bytes, expected] = expect_file(kPostingsFile);
        (void)bytes;
        detail::HashingReader in(dir / kPostingsFile);
        for (std::size_t f = 0; f < kFieldCount; ++f) {
            std::uint64_t term_count = in.varint();
            index.fields_[f].reserve(term_count);
            for (std::uint64_t t = 0; t < term_count; ++t) {
                std::string term = in.str();
                detail::CompressedPostings list;
                list.count = static_cast<std::uint32_t>(in.varint());
                std::uint64_t byte_count = in.varint();
                list.bytes.resize(byte_count);
                if (byte_count > 0) in.read(list.bytes.data(), byte_count);
                index.fields_[f].emplace(std::move(term), std::move(list));
            }
            std::uint64_t n = in.varint();
            if (n != doc_count) {
                throw IndexLoadError("field length table disagrees with the manifest doc count");
            }
            auto& lengths = index.field_lengths_[f];
            lengths.resize(n);
            std::uint64_t total = 0;
            for (std::uint64_t i = 0; i < n; ++i) {
                lengths[i] = static_cast<std::uint32_t>(in.varint());
                total += lengths[i];
            }
            auto& fs = index.stats_.fields[f];
            fs.total_tokens = total;
            fs.term_count = index.fields_[f].size();
            fs.avg_field_length = n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
            const auto& declared = manifest["fields"][f];
            if (declared.value("total_tokens", std::uint64_t{0}) != fs.total_tokens ||
                declared.value("term_count", std::uint64_t{0}) != fs.term_count) {
                throw IndexLoadError("field statistics disagree with the manifest");
            }
        }
        if (in.remaining() != 0) throw IndexLoadError("trailing bytes in postings.bin");
        check_digest(kPostingsFile, in.digest(), expected);
    }

    index.stats_.doc_count = doc_count;
    index.title_to_doc_.reserve(index.docs_.size());
    for (const auto& doc : index.docs_) {
        if (!index.title_to_doc_.emplace(doc.title, doc.doc_id).second) {
            ++index.duplicate_titles_;
        }
    }
    return index;
}

}  // namespace multihop
