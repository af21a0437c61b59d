#include "multihop/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_set>

#include "multihop/utf8.hpp"

namespace multihop {

namespace {

bool ascii_punct(char32_t cp) {
    if (cp >= 0x80) return false;
    const char c = static_cast<char>(cp);
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
           (c >= '{' && c <= '~');
}

// Span over token indices [first, last] of the context token list, rendered
// back as the verbatim substring of the original context.
SpanCandidate make_span(std::string_view context, const std::vector<Token>& context_tokens,
                        std::size_t first, std::size_t last) {
    SpanCandidate span;
    span.char_start = context_tokens[first].char_start;
    span.char_end = context_tokens[last].char_end;
    span.text = utf8::substr(context, span.char_start, span.char_end);
    return span;
}

}  // namespace

std::string_view heuristic_name(OverlapHeuristic h) {
    switch (h) {
        case OverlapHeuristic::LCS: return "lcs";
        case OverlapHeuristic::LCSUBSTR: return "lcsubstr";
        case OverlapHeuristic::OVERLAP_MERGE: return "overlap_merge";
    }
    return "unknown";
}

std::string_view context_variant_name(ContextVariant v) {
    switch (v) {
        case ContextVariant::CLEANED: return "cleaned";
        case ContextVariant::CLEANED_NOPUNCT: return "cleaned_nopunct";
    }
    return "unknown";
}

std::string_view target_variant_name(TargetVariant v) {
    switch (v) {
        case TargetVariant::TITLE: return "title";
        case TargetVariant::PARAGRAPH: return "paragraph";
    }
    return "unknown";
}

void OracleParams::validate() const {
    if (!(min_ratio > 0.0 && min_ratio <= 1.0)) {
        throw ConfigError("min_ratio must lie in (0, 1]");
    }
    if (max_target_tokens < 1) throw ConfigError("max_target_tokens must be >= 1");
}

std::optional<SpanCandidate> lcs_span(std::string_view context,
                                      const std::vector<Token>& context_tokens,
                                      const std::vector<Token>& target_tokens) {
    const std::size_t m = context_tokens.size();
    const std::size_t n = target_tokens.size();
    if (m == 0 || n == 0) return std::nullopt;

    // Suffix DP: dp[i][j] = LCS length of context[i..] vs target[j..].
    std::vector<std::uint16_t> dp((m + 1) * (n + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint16_t& { return dp[i * (n + 1) + j]; };
    for (std::size_t i = m; i-- > 0;) {
        for (std::size_t j = n; j-- > 0;) {
            if (context_tokens[i].text == target_tokens[j].text) {
                at(i, j) = static_cast<std::uint16_t>(at(i + 1, j + 1) + 1);
            } else {
                at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
            }
        }
    }
    if (at(0, 0) == 0) return std::nullopt;

    // Deterministic forward backtrack; take a match whenever it lies on an
    // optimal path, otherwise advance on the context side first.
    std::size_t i = 0, j = 0;
    std::size_t first = 0, last = 0;
    bool matched = false;
    while (i < m && j < n && at(i, j) > 0) {
        if (context_tokens[i].text == target_tokens[j].text && at(i, j) == at(i + 1, j + 1) + 1) {
            if (!matched) first = i;
            last = i;
            matched = true;
            ++i;
            ++j;
        } else if (at(i + 1, j) >= at(i, j + 1)) {
            ++i;
        } else {
            ++j;
        }
    }
    auto span = make_span(context, context_tokens, first, last);
    span.heuristic = OverlapHeuristic::LCS;
    return span;
}

std::optional<SpanCandidate> lcsubstr_span(std::string_view context,
                                           const std::vector<Token>& context_tokens,
                                           const std::vector<Token>& target_tokens) {
    const std::size_t m = context_tokens.size();
    const std::size_t n = target_tokens.size();
    if (m == 0 || n == 0) return std::nullopt;

    // Row-rolling DP over common suffixes ending at (i, j).
    std::vector<std::uint32_t> prev(n + 1, 0), cur(n + 1, 0);
    std::size_t best_len = 0, best_start = 0;
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (context_tokens[i - 1].text == target_tokens[j - 1].text) {
                cur[j] = prev[j - 1] + 1;
                const std::size_t len = cur[j];
                const std::size_t start = i - len;
                if (len > best_len || (len == best_len && start < best_start)) {
                    best_len = len;
                    best_start = start;
                }
            } else {
                cur[j] = 0;
            }
        }
        std::swap(prev, cur);
    }
    if (best_len == 0) return std::nullopt;

    auto span = make_span(context, context_tokens, best_start, best_start + best_len - 1);
    span.heuristic = OverlapHeuristic::LCSUBSTR;
    return span;
}

std::optional<SpanCandidate> overlap_merge_span(std::string_view context,
                                                const std::vector<Token>& context_tokens,
                                                const std::vector<Token>& target_tokens,
                                                double min_ratio) {
    if (!(min_ratio > 0.0 && min_ratio <= 1.0)) {
        throw ConfigError("min_ratio must lie in (0, 1]");
    }
    const std::size_t m = context_tokens.size();
    if (m == 0 || target_tokens.empty()) return std::nullopt;

    std::unordered_set<std::string_view> target_set;
    target_set.reserve(target_tokens.size());
    for (const auto& t : target_tokens) target_set.insert(t.text);

    // prefix[i] = overlapping tokens among context_tokens[0..i).
    std::vector<std::uint32_t> prefix(m + 1, 0);
    for (std::size_t i = 0; i < m; ++i) {
        prefix[i + 1] = prefix[i] + (target_set.count(context_tokens[i].text) ? 1 : 0);
    }

    std::size_t best_start = 0, best_len = 0;
    double best_ratio = 0.0;
    for (std::size_t start = 0; start < m; ++start) {
        for (std::size_t len = 1; start + len <= m; ++len) {
            const std::uint32_t overlap = prefix[start + len] - prefix[start];
            const double ratio = static_cast<double>(overlap) / static_cast<double>(len);
            if (ratio < min_ratio) continue;
            if (len > best_len || (len == best_len && ratio > best_ratio)) {
                best_len = len;
                best_start = start;
                best_ratio = ratio;
            }
        }
    }
    if (best_len == 0) return std::nullopt;

    auto span = make_span(context, context_tokens, best_start, best_start + best_len - 1);
    span.heuristic = OverlapHeuristic::OVERLAP_MERGE;
    return span;
}

std::string mask_markup(std::string_view context) {
    std::string out(context);
    for (std::size_t i = 0; i + 2 < out.size();) {
        if (out.compare(i, 4, "</t>") == 0) {
            out.replace(i, 4, "    ");
            i += 4;
        } else if (out.compare(i, 3, "<t>") == 0) {
            out.replace(i, 3, "   ");
            i += 3;
        } else {
            ++i;
        }
    }
    return out;
}

std::vector<SpanCandidate> candidate_queries(std::string_view context_text, const Document& gold,
                                             const StopList& stops, const FoldTable& folds,
                                             const OracleParams& params) {
    params.validate();
    const std::string masked = mask_markup(context_text);

    struct ContextForm {
        ContextVariant tag;
        std::vector<Token> tokens;  // offsets remapped to the original context
    };
    std::vector<ContextForm> contexts;
    contexts.push_back({ContextVariant::CLEANED, clean_for_overlap(masked, stops, folds)});

    {
        // Delete ASCII punctuation so tokens split only by punctuation merge
        // (e.g. "U.S." -> "us"), recording per code point where each survivor
        // came from so offsets can be mapped back.
        std::string nopunct;
        nopunct.reserve(masked.size());
        std::vector<std::size_t> source_cp;
        std::size_t cp_index = 0;
        std::size_t i = 0;
        while (i < masked.size()) {
            char32_t cp = utf8::decode(masked, i);
            if (!ascii_punct(cp)) {
                utf8::append(nopunct, cp);
                source_cp.push_back(cp_index);
            }
            ++cp_index;
        }
        auto tokens = clean_for_overlap(nopunct, stops, folds);
        for (auto& t : tokens) {
            const std::size_t start = source_cp[t.char_start];
            const std::size_t end = source_cp[t.char_end - 1] + 1;
            t.char_start = start;
            t.char_end = end;
        }
        contexts.push_back({ContextVariant::CLEANED_NOPUNCT, std::move(tokens)});
    }

    struct TargetForm {
        TargetVariant tag;
        std::vector<Token> tokens;
    };
    std::vector<TargetForm> targets;
    if (!gold.title.empty()) {
        targets.push_back({TargetVariant::TITLE, clean_for_overlap(gold.title, stops, folds)});
    }
    {
        auto tokens = clean_for_overlap(gold.text(), stops, folds);
        if (tokens.size() > params.max_target_tokens) tokens.resize(params.max_target_tokens);
        targets.push_back({TargetVariant::PARAGRAPH, std::move(tokens)});
    }

    std::vector<SpanCandidate> out;
    std::unordered_set<std::uint64_t> seen;  // (char_start, char_end) packed
    auto add = [&](std::optional<SpanCandidate> span, ContextVariant cv, TargetVariant tv) {
        if (!span) return;
        const std::uint64_t key =
            (static_cast<std::uint64_t>(span->char_start) << 32) | span->char_end;
        if (!seen.insert(key).second) return;
        span->context_variant = cv;
        span->target_variant = tv;
        span->token_count = simple_analyze(mask_markup(span->text), folds).size();
        out.push_back(std::move(*span));
    };

    for (const auto& ctx : contexts) {
        for (const auto& target : targets) {
            add(lcs_span(context_text, ctx.tokens, target.tokens), ctx.tag, target.tag);
            add(lcsubstr_span(context_text, ctx.tokens, target.tokens), ctx.tag, target.tag);
            add(overlap_merge_span(context_text, ctx.tokens, target.tokens, params.min_ratio),
                ctx.tag, target.tag);
        }
    }
    return out;
}

NoOracleError::NoOracleError(std::string qid, std::uint32_t hop_index)
    : std::runtime_error("no oracle query candidates for question " + qid + " hop " +
                         std::to_string(hop_index)),
      question_id(std::move(qid)),
      hop(hop_index) {}

OracleQuery select_oracle(std::string_view question_id, std::uint32_t hop,
                          const std::vector<SpanCandidate>& candidates, DocId gold_doc,
                          const Index& index, const RankingParams& ranking,
                          const OracleParams& params) {
    params.validate();
    if (candidates.empty()) throw NoOracleError(std::string(question_id), hop);

    OracleQuery best;
    bool have_best = false;
    for (const auto& candidate : candidates) {
        // Markup delimiters are context structure, never query content.
        auto pool = ranked_pool(index, mask_markup(candidate.text), ranking);
        std::uint32_t rank = kGoldRankNotFound;
        double score = 0.0;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].doc_id == gold_doc) {
                rank = static_cast<std::uint32_t>(i + 1);
                score = pool[i].boosted_score;
                break;
            }
        }

        auto better = [&]() {
            if (rank != best.gold_rank) return rank < best.gold_rank;
            if (score != best.gold_score) return score > best.gold_score;
            if (candidate.token_count != best.span.token_count) {
                return candidate.token_count < best.span.token_count;
            }
            if (candidate.char_start != best.span.char_start) {
                return candidate.char_start < best.span.char_start;
            }
            return candidate.char_end < best.span.char_end;
        };
        if (!have_best || better()) {
            best.span = candidate;
            best.gold_rank = rank;
            best.gold_score = score;
            have_best = true;
        }
    }
    best.question_id = std::string(question_id);
    best.hop = hop;
    return best;
}

}  // namespace multihop
