#include "multihop/corpus_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>
#include <zlib.h>
#if defined(MULTIHOP_HAVE_BZIP2)
#include <bzlib.h>
#endif

#include "multihop/hash.hpp"

namespace multihop {

namespace {

using nlohmann::json;

// Reads one shard line by line regardless of its compression.
class ShardLineReader {
public:
    virtual ~ShardLineReader() = default;
    // false at end of shard; throws CorpusError on a stream error.
    virtual bool next_line(std::string& line) = 0;
};

// zlib reads gzip shards and passes plain files through unchanged, so this
// reader covers both.
class GzLineReader final : public ShardLineReader {
public:
    explicit GzLineReader(const std::filesystem::path& file) : name_(file.string()) {
        file_ = gzopen(file.string().c_str(), "rb");
        if (!file_) throw CorpusError("cannot open shard " + name_);
        gzbuffer(file_, 1 << 17);
    }
    ~GzLineReader() override {
        if (file_) gzclose(file_);
    }

    bool next_line(std::string& line) override {
        line.clear();
        char buf[1 << 16];
        while (true) {
            if (gzgets(file_, buf, sizeof(buf)) == nullptr) {
                int errnum = Z_OK;
                gzerror(file_, &errnum);
                if (errnum != Z_OK && errnum != Z_STREAM_END) {
                    throw CorpusError("decompression failure in shard " + name_);
                }
                return !line.empty();
            }
            line += buf;
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
        }
    }

private:
    std::string name_;
    gzFile file_ = nullptr;
};

#if defined(MULTIHOP_HAVE_BZIP2)
class Bz2LineReader final : public ShardLineReader {
public:
    explicit Bz2LineReader(const std::filesystem::path& file) : name_(file.string()) {
        raw_ = std::fopen(file.string().c_str(), "rb");
        if (!raw_) throw CorpusError("cannot open shard " + name_);
        open_stream();
    }
    ~Bz2LineReader() override {
        if (bz_) BZ2_bzReadClose(&bzerr_, bz_);
        if (raw_) std::fclose(raw_);
    }

    bool next_line(std::string& line) override {
        line.clear();
        while (true) {
            auto nl = pending_.find('\n');
            if (nl != std::string::npos) {
                line.assign(pending_, 0, nl);
                pending_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
            if (!fill()) {
                if (pending_.empty()) return false;
                line.swap(pending_);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
        }
    }

private:
    void open_stream() {
        bz_ = BZ2_bzReadOpen(&bzerr_, raw_, 0, 0, unused_, unused_len_);
        if (bzerr_ != BZ_OK) throw CorpusError("decompression failure in shard " + name_);
        unused_len_ = 0;
    }

    // Appends the next decompressed chunk to pending_; handles multi-stream
    // archives (pbzip2 output) by reopening on each stream end.
    bool fill() {
        if (!bz_) return false;
        char buf[1 << 16];
        int n = BZ2_bzRead(&bzerr_, bz_, buf, sizeof(buf));
        if (bzerr_ == BZ_OK || (bzerr_ == BZ_STREAM_END && n > 0)) {
            pending_.append(buf, static_cast<std::size_t>(n));
        }
        if (bzerr_ == BZ_OK) return true;
        if (bzerr_ != BZ_STREAM_END) {
            throw CorpusError("decompression failure in shard " + name_);
        }
        void* unused = nullptr;
        int unused_len = 0;
        BZ2_bzReadGetUnused(&bzerr_, bz_, &unused, &unused_len);
        if (bzerr_ != BZ_OK) throw CorpusError("decompression failure in shard " + name_);
        std::memcpy(unused_, unused, static_cast<std::size_t>(unused_len));
        unused_len_ = unused_len;
        BZ2_bzReadClose(&bzerr_, bz_);
        bz_ = nullptr;
        if (unused_len_ > 0 || std::feof(raw_) == 0) {
            if (unused_len_ == 0 && std::feof(raw_) != 0) return n > 0;
            open_stream();
        }
        return true;
    }

    std::string name_;
    std::FILE* raw_ = nullptr;
    BZFILE* bz_ = nullptr;
    int bzerr_ = BZ_OK;
    char unused_[BZ_MAX_UNUSED];
    int unused_len_ = 0;
    std::string pending_;
};
#endif

std::unique_ptr<ShardLineReader> open_shard(const std::filesystem::path& file) {
    if (file.extension() == ".bz2") {
#if defined(MULTIHOP_HAVE_BZIP2)
        return std::make_unique<Bz2LineReader>(file);
#else
        throw CorpusError("shard " + file.string() +
                          " is bzip2-compressed but this build has no bzip2 support");
#endif
    }
    return std::make_unique<GzLineReader>(file);
}

std::vector<std::filesystem::path> shard_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw CorpusError("dump path is not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (auto it = std::filesystem::recursive_directory_iterator(dir, ec);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        if (it->path().filename().string().starts_with('.')) continue;
        files.push_back(it->path());
    }
    if (ec) throw CorpusError("cannot walk dump directory " + dir.string());
    if (files.empty()) throw CorpusError("no shards found under " + dir.string());
    // doc_id order is defined by the relative shard path, not directory
    // enumeration order.
    std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) {
        return a.lexically_relative(dir).generic_string() <
               b.lexically_relative(dir).generic_string();
    });
    return files;
}

// One dump page: {"id": ..., "url": ..., "title": ..., "text": [sentences]};
// "text" may also be a plain string. Returns false when the line does not
// carry a usable page.
bool parse_dump_line(const std::string& line, Document& doc) {
    json record = json::parse(line, nullptr, false);
    if (!record.is_object()) return false;
    auto title_it = record.find("title");
    if (title_it == record.end() || !title_it->is_string()) return false;
    doc.title = title_it->get<std::string>();
    if (doc.title.empty()) return false;

    doc.sentences.clear();
    auto text_it = record.find("text");
    if (text_it == record.end()) return false;
    if (text_it->is_string()) {
        doc.sentences.push_back(text_it->get<std::string>());
    } else if (text_it->is_array()) {
        for (const auto& s : *text_it) {
            if (!s.is_string()) return false;
            doc.sentences.push_back(s.get<std::string>());
        }
    } else {
        return false;
    }

    doc.source_url.clear();
    if (auto url_it = record.find("url"); url_it != record.end() && url_it->is_string()) {
        doc.source_url = url_it->get<std::string>();
    }
    return true;
}

std::string json_line(const json& record) { return record.dump() + "\n"; }

}  // namespace

GoldPair DatasetQuestion::gold_pair() const {
    GoldPair pair;
    pair.question_id = question_id;
    if (gold_titles.size() >= 1) pair.gold_title_a = gold_titles[0];
    if (gold_titles.size() >= 2) pair.gold_title_b = gold_titles[1];
    pair.question_type = question_type;
    pair.level = level;
    return pair;
}

DumpStats load_wiki_dump(const std::filesystem::path& dir,
                         const std::function<void(Document&&)>& sink, std::uint64_t limit) {
    DumpStats stats;
    DocId next_id = 0;
    std::string line;

    for (const auto& file : shard_files(dir)) {
        ++stats.shards;
        auto reader = open_shard(file);
        while (reader->next_line(line)) {
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            ++stats.lines;
            Document doc;
            if (!parse_dump_line(line, doc)) {
                ++stats.malformed;
                continue;
            }
            doc.doc_id = next_id++;
            ++stats.documents;
            sink(std::move(doc));
            if (limit > 0 && stats.documents >= limit) {
                return stats;
            }
        }
    }

    if (stats.malformed * 1000 > stats.lines) {
        throw CorpusError("dump under " + dir.string() + " has " +
                          std::to_string(stats.malformed) + " malformed lines out of " +
                          std::to_string(stats.lines) + " (over the 0.1% budget)");
    }
    if (stats.malformed > 0) {
        std::cerr << "dump: skipped " << stats.malformed << " malformed lines of "
                  << stats.lines << "\n";
    }
    return stats;
}

std::vector<Document> load_wiki_dump(const std::filesystem::path& dir, std::uint64_t limit) {
    std::vector<Document> docs;
    load_wiki_dump(dir, [&](Document&& doc) { docs.push_back(std::move(doc)); }, limit);
    return docs;
}

DatasetLoadResult load_dataset(const std::filesystem::path& file, std::uint64_t limit) {
    std::ifstream in(file);
    if (!in) throw CorpusError("cannot open dataset " + file.string());
    json records;
    try {
        records = json::parse(in);
    } catch (const json::exception& e) {
        throw CorpusError("cannot parse dataset " + file.string() + ": " + e.what());
    }
    if (!records.is_array()) {
        throw CorpusError("dataset " + file.string() + " is not a JSON array");
    }

    DatasetLoadResult result;
    for (const auto& record : records) {
        if (limit > 0 && result.questions.size() >= limit) break;
        DatasetQuestion q;
        try {
            q.question_id = record.at("_id").get<std::string>();
            q.question = record.at("question").get<std::string>();
            q.answer = record.value("answer", "");
            q.question_type = record.value("type", "");
            q.level = record.value("level", "");
            for (const auto& fact : record.at("supporting_facts")) {
                std::string title = fact.at(0).get<std::string>();
                int sentence = fact.at(1).get<int>();
                q.supporting_facts.emplace_back(title, sentence);
                if (std::find(q.gold_titles.begin(), q.gold_titles.end(), title) ==
                    q.gold_titles.end()) {
                    q.gold_titles.push_back(title);
                }
            }
        } catch (const json::exception& e) {
            ++result.skipped;
            std::cerr << "dataset: skipping malformed record: " << e.what() << "\n";
            continue;
        }
        if (q.gold_titles.size() != 2) {
            ++result.skipped;
            std::cerr << "dataset: skipping question " << q.question_id << ": "
                      << q.gold_titles.size() << " distinct gold titles (need 2)\n";
            continue;
        }
        result.questions.push_back(std::move(q));
    }
    return result;
}

void write_oracle_record(std::ostream& out, const OracleQuery& oracle) {
    json record = {
        {"question_id", oracle.question_id},
        {"hop", oracle.hop},
        {"query", oracle.span.text},
        {"char_start", oracle.span.char_start},
        {"char_end", oracle.span.char_end},
        {"heuristic", heuristic_name(oracle.span.heuristic)},
        {"context_variant", context_variant_name(oracle.span.context_variant)},
        {"target_variant", target_variant_name(oracle.span.target_variant)},
        {"token_count", oracle.span.token_count},
        {"gold_in_pool", oracle.gold_in_pool()},
        {"gold_score", oracle.gold_score},
    };
    if (oracle.gold_in_pool()) {
        record["gold_rank"] = oracle.gold_rank;
    } else {
        record["gold_rank"] = nullptr;
    }
    out << json_line(record);
}

void write_training_record(std::ostream& out, std::string_view question_id,
                           const HopSupervision& hop) {
    json record = {
        {"question_id", std::string(question_id)},
        {"hop", hop.hop_index},
        {"context", hop.serialized_context},
        {"query", hop.oracle.span.text},
        {"char_start", hop.oracle.span.char_start},
        {"char_end", hop.oracle.span.char_end},
        {"heuristic", heuristic_name(hop.oracle.span.heuristic)},
        {"gold_in_pool", hop.oracle.gold_in_pool()},
        {"injected", hop.injected},
    };
    if (hop.oracle.gold_in_pool()) {
        record["gold_rank"] = hop.oracle.gold_rank;
    } else {
        record["gold_rank"] = nullptr;
    }
    out << json_line(record);
}

void write_trace_records(std::ostream& out, std::string_view question_id,
                         const std::vector<HopTrace>& trace) {
    for (const auto& hop : trace) {
        json pool = json::array();
        for (std::size_t i = 0; i < hop.pool.size(); ++i) {
            const auto& hit = hop.pool[i];
            pool.push_back({
                {"rank", i + 1},
                {"doc_id", hit.doc_id},
                {"title", hit.title},
                {"raw_score", hit.raw_score},
                {"boosted_score", hit.boosted_score},
                {"tier", hit.rerank_tier},
                {"kept", hit.kept},
                {"drop_reason", hit.drop_reason},
            });
        }
        json record = {
            {"question_id", std::string(question_id)},
            {"hop", hop.hop_index},
            {"query", hop.query},
            {"empty_query", hop.empty_query},
            {"pool", std::move(pool)},
        };
        if (hop.injected_gold) {
            record["injected_gold"] = *hop.injected_gold;
        } else {
            record["injected_gold"] = nullptr;
        }
        out << json_line(record);
    }
}

std::string qa_records_to_json(const std::vector<QaRecord>& records) {
    json out = json::array();
    for (const auto& record : records) {
        json context = json::array();
        for (const auto& paragraph : record.paragraphs) {
            context.push_back(json::array({paragraph.title, paragraph.sentences}));
        }
        json facts = json::array();
        for (const auto& [title, sentence] : record.supporting_facts) {
            facts.push_back(json::array({title, sentence}));
        }
        out.push_back({
            {"_id", record.question_id},
            {"question", record.question},
            {"answer", record.answer},
            {"type", record.question_type},
            {"level", record.level},
            {"supporting_facts", std::move(facts)},
            {"context", std::move(context)},
        });
    }
    return out.dump();
}

void write_run_manifest(const std::filesystem::path& out_dir, const std::string& subcommand,
                        const std::string& config_json,
                        const std::vector<std::filesystem::path>& inputs) {
    json input_records = json::array();
    for (const auto& input : inputs) {
        json entry;
        entry["path"] = input.string();
        std::error_code ec;
        if (std::filesystem::is_directory(input, ec)) {
            // Directories get a structural fingerprint (sorted relative
            // paths + sizes); hashing multi-GB dump content here would cost
            // more than the runs themselves.
            std::vector<std::pair<std::string, std::uint64_t>> listing;
            std::uint64_t total = 0;
            for (auto it = std::filesystem::recursive_directory_iterator(input, ec);
                 it != std::filesystem::recursive_directory_iterator(); ++it) {
                if (!it->is_regular_file()) continue;
                auto size = it->file_size(ec);
                listing.emplace_back(it->path().lexically_relative(input).generic_string(),
                                     size);
                total += size;
            }
            std::sort(listing.begin(), listing.end());
            Fnv1a h;
            for (const auto& [rel, size] : listing) {
                h.update(rel);
                h.update("\0", 1);
                h.update(&size, sizeof(size));
            }
            entry["kind"] = "directory";
            entry["files"] = listing.size();
            entry["bytes"] = total;
            entry["listing_fnv1a64"] = to_hex(h.digest());
        } else {
            std::ifstream in(input, std::ios::binary);
            if (!in) throw CorpusError("cannot read input " + input.string());
            Fnv1a h;
            char buf[1 << 16];
            std::uint64_t total = 0;
            while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
                h.update(buf, static_cast<std::size_t>(in.gcount()));
                total += static_cast<std::uint64_t>(in.gcount());
            }
            entry["kind"] = "file";
            entry["bytes"] = total;
            entry["fnv1a64"] = to_hex(h.digest());
        }
        input_records.push_back(std::move(entry));
    }

    json config;
    try {
        config = json::parse(config_json);
    } catch (const json::exception&) {
        config = config_json;  // keep it verbatim if the caller passed plain text
    }
    json manifest = {
        {"subcommand", subcommand},
        {"config", std::move(config)},
        {"config_fnv1a64", to_hex(fnv1a64(config_json))},
        {"inputs", std::move(input_records)},
    };

    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "run_manifest.json", std::ios::binary);
    if (!out) throw CorpusError("cannot write run manifest under " + out_dir.string());
    out << manifest.dump(2) << "\n";
}

}  // namespace multihop
