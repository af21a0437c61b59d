#include "multihop/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "multihop/utf8.hpp"

namespace multihop {

namespace {

bool ascii_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
           cp == U'\v';
}

// Asciifold + ASCII-lowercase + collapse whitespace runs to single spaces,
// trimmed. The comparison form for title-match classification.
std::string normalize_for_match(std::string_view text, const FoldTable& folds) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = utf8::decode(text, i);
        if (ascii_space(cp)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        if (const std::string* repl = folds.find(cp)) {
            for (char c : *repl) {
                out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
            }
        } else if (cp < 0x80) {
            char c = static_cast<char>(cp);
            out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else {
            utf8::append(out, cp);
        }
    }
    return out;
}

// Per-thread scoring scratch. Epoch tags make reuse O(touched) instead of
// O(corpus) per query; the index itself stays immutable, so concurrent
// searches over the same index never contend.
struct SearchScratch {
    std::vector<std::uint64_t> field_tag, best_tag;
    std::vector<double> field_score, best_score;
    std::vector<FieldId> best_field;
    std::vector<DocId> field_touched, best_touched;
    std::uint64_t epoch = 0;

    void ensure(std::size_t n) {
        if (field_tag.size() < n) {
            field_tag.resize(n, 0);
            best_tag.resize(n, 0);
            field_score.resize(n, 0.0);
            best_score.resize(n, 0.0);
            best_field.resize(n, FieldId::TITLE);
        }
    }
};

thread_local SearchScratch tl_scratch;

std::vector<std::string> query_terms(const Index& index, FieldId field, std::string_view query) {
    switch (field) {
        case FieldId::TITLE: {
            auto tokens = simple_analyze(query, index.fold_table());
            std::vector<std::string> out;
            out.reserve(tokens.size());
            for (auto& t : tokens) out.push_back(std::move(t.text));
            return out;
        }
        case FieldId::TITLE_BIGRAM:
            return shingle2(simple_analyze(query, index.fold_table()));
        case FieldId::TEXT: {
            auto tokens = standard_analyze(query, index.stop_list(), index.fold_table());
            std::vector<std::string> out;
            out.reserve(tokens.size());
            for (auto& t : tokens) out.push_back(std::move(t.text));
            return out;
        }
        case FieldId::TEXT_BIGRAM:
            return shingle2(standard_analyze(query, index.stop_list(), index.fold_table()));
    }
    return {};
}

}  // namespace

void RankingParams::validate() const {
    if (!(k1 > 0.0)) throw ConfigError("k1 must be positive");
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("b must lie in [0, 1]");
    if (!(title_field_boost >= 1.0)) throw ConfigError("title_field_boost must be >= 1");
    if (rerank_pool < 1) throw ConfigError("rerank_pool must be >= 1");
    for (double m : tier_multipliers) {
        if (!(m >= 1.0 && m <= 1.5)) {
            throw ConfigError("tier multipliers must lie in [1.0, 1.5]");
        }
    }
    for (std::size_t i = 1; i < tier_multipliers.size(); ++i) {
        if (tier_multipliers[i] > tier_multipliers[i - 1]) {
            throw ConfigError("tier multipliers must be non-increasing from EXACT to NONE");
        }
    }
    if (tier_multipliers.back() != 1.0) {
        throw ConfigError("the NONE tier multiplier must be exactly 1.0");
    }
}

RankingParams RankingParams::with_title_boost(double boost) const {
    RankingParams out = *this;
    out.title_field_boost = boost;
    return out;
}

RankingParams RankingParams::with_reranking(bool enabled) const {
    RankingParams out = *this;
    if (!enabled) out.tier_multipliers = {1.0, 1.0, 1.0, 1.0};
    return out;
}

double bm25_idf(std::uint64_t doc_count, std::uint64_t doc_frequency) {
    const double n = static_cast<double>(doc_count);
    const double n_t = static_cast<double>(doc_frequency);
    return std::log(1.0 + (n - n_t + 0.5) / (n_t + 0.5));
}

double bm25(const Index& index, FieldId field, std::string_view term, DocId doc,
            const RankingParams& params) {
    auto cursor = index.postings(field, term);
    if (!cursor) return 0.0;
    std::uint32_t tf = 0;
    for (; !cursor->done(); cursor->next()) {
        if (cursor->doc() == doc) {
            tf = cursor->tf();
            break;
        }
        if (cursor->doc() > doc) break;
    }
    if (tf == 0) return 0.0;

    const auto& fs = index.stats().field(field);
    const double dl = index.field_length(field, doc);
    const double norm_ratio = fs.avg_field_length > 0.0 ? dl / fs.avg_field_length : 0.0;
    const double idf =
        bm25_idf(index.doc_count(), index.term_stats(field, term).doc_frequency);
    return idf * (tf * (params.k1 + 1.0)) /
           (tf + params.k1 * (1.0 - params.b + params.b * norm_ratio));
}

std::vector<SearchHit> search(const Index& index, std::string_view query, std::size_t limit,
                              const RankingParams& params) {
    params.validate();
    if (limit == 0) return {};

    SearchScratch& scratch = tl_scratch;
    scratch.ensure(index.doc_count());
    const std::uint64_t query_epoch = ++scratch.epoch;
    scratch.best_touched.clear();

    for (FieldId field : kAllFields) {
        auto terms = query_terms(index, field, query);
        if (terms.empty()) continue;

        const auto& fs = index.stats().field(field);
        const double boost = is_title_field(field) ? params.title_field_boost : 1.0;

        const std::uint64_t field_epoch = ++scratch.epoch;
        scratch.field_touched.clear();

        for (const auto& term : terms) {
            auto cursor = index.postings(field, term);
            if (!cursor) continue;
            const double idf = bm25_idf(index.doc_count(), cursor->remaining());
            for (; !cursor->done(); cursor->next()) {
                const DocId doc = cursor->doc();
                const double dl = index.field_length(field, doc);
                const double norm_ratio =
                    fs.avg_field_length > 0.0 ? dl / fs.avg_field_length : 0.0;
                const double tf = cursor->tf();
                const double contribution =
                    idf * (tf * (params.k1 + 1.0)) /
                    (tf + params.k1 * (1.0 - params.b + params.b * norm_ratio));
                if (scratch.field_tag[doc] != field_epoch) {
                    scratch.field_tag[doc] = field_epoch;
                    scratch.field_score[doc] = contribution;
                    scratch.field_touched.push_back(doc);
                } else {
                    scratch.field_score[doc] += contribution;
                }
            }
        }

        for (DocId doc : scratch.field_touched) {
            const double score = scratch.field_score[doc] * boost;
            if (scratch.best_tag[doc] != query_epoch) {
                scratch.best_tag[doc] = query_epoch;
                scratch.best_score[doc] = score;
                scratch.best_field[doc] = field;
                scratch.best_touched.push_back(doc);
            } else if (score > scratch.best_score[doc]) {
                scratch.best_score[doc] = score;
                scratch.best_field[doc] = field;
            }
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(scratch.best_touched.size());
    for (DocId doc : scratch.best_touched) {
        const double score = scratch.best_score[doc];
        if (score <= 0.0) continue;
        SearchHit hit;
        hit.doc_id = doc;
        hit.raw_score = score;
        hit.boosted_score = score;
        hit.best_field = scratch.best_field[doc];
        hits.push_back(hit);
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
        return a.doc_id < b.doc_id;
    });
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

TitleMatchClass title_match_class(std::string_view title, std::string_view query,
                                  const FoldTable& folds) {
    const std::string t = normalize_for_match(title, folds);
    const std::string q = normalize_for_match(query, folds);
    if (t == q) return TitleMatchClass::EXACT;
    // Degenerate empties never upgrade a tier even though "" is a substring
    // of everything.
    if (t.empty() || q.empty()) return TitleMatchClass::NONE;
    if (q.find(t) != std::string::npos) return TitleMatchClass::TITLE_IN_QUERY;
    if (t.find(q) != std::string::npos) return TitleMatchClass::QUERY_IN_TITLE;
    return TitleMatchClass::NONE;
}

double title_match_tier(std::string_view title, std::string_view query,
                        const RankingParams& params, const FoldTable& folds) {
    return params.tier(title_match_class(title, query, folds));
}

std::vector<SearchHit> rerank(const Index& index, std::string_view query,
                              std::vector<SearchHit> hits, const RankingParams& params) {
    params.validate();
    const std::size_t window = std::min<std::size_t>(hits.size(), params.rerank_pool);
    for (std::size_t i = 0; i < window; ++i) {
        SearchHit& hit = hits[i];
        hit.match_class = title_match_class(index.doc(hit.doc_id).title, query,
                                            index.fold_table());
        hit.rerank_tier = params.tier(hit.match_class);
        hit.boosted_score = hit.raw_score * hit.rerank_tier;
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.boosted_score != b.boosted_score) return a.boosted_score > b.boosted_score;
        return a.doc_id < b.doc_id;
    });
    return hits;
}

std::vector<SearchHit> ranked_pool(const Index& index, std::string_view query,
                                   const RankingParams& params) {
    return rerank(index, query, search(index, query, params.rerank_pool, params), params);
}

std::vector<Document> retrieve(const Index& index, std::string_view query, std::size_t n,
                               const RankingParams& params) {
    if (n < 1 || n > params.rerank_pool) {
        throw ConfigError("retrieval size must lie in [1, rerank_pool]");
    }
    auto pool = ranked_pool(index, query, params);
    std::vector<Document> docs;
    docs.reserve(std::min(n, pool.size()));
    for (std::size_t i = 0; i < pool.size() && i < n; ++i) {
        docs.push_back(index.doc(pool[i].doc_id));
    }
    return docs;
}

}  // namespace multihop
