#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "multihop/oracle.hpp"
#include "multihop/utf8.hpp"
#include "support/fixtures.hpp"

using namespace multihop;

namespace {

std::vector<Token> clean(std::string_view text) {
    return clean_for_overlap(text, StopList::builtin(), FoldTable::builtin());
}

std::vector<std::string> texts(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
}

Index build_docs(std::vector<Document> docs) {
    return Index::build(std::move(docs), StopList::builtin(), FoldTable::builtin());
}

Document make_doc(DocId id, std::string title, std::string body) {
    Document d;
    d.doc_id = id;
    d.title = std::move(title);
    d.sentences = {std::move(body)};
    return d;
}

SpanCandidate make_span(std::string text, std::size_t start, std::size_t token_count) {
    SpanCandidate s;
    s.text = std::move(text);
    s.char_start = start;
    s.char_end = start + utf8::length(s.text);
    s.token_count = token_count;
    return s;
}

// Token lists for the DP fuzz tests, joined into a synthetic "context"
// string so spans can be checked against it.
std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

}  // namespace

TEST_CASE("lcs_span covers first to last matched token") {
    const std::string context = "the Silver Falcon probe on Ganymede";
    const std::string target = "Silver Falcon on the Ganymede mission";
    auto span = lcs_span(context, clean(context), clean(target));
    REQUIRE(span.has_value());
    // "probe" is not in the target but sits between matched tokens, and the
    // stop word "on" rides along inside the contiguous span.
    CHECK(span->text == "Silver Falcon probe on Ganymede");
    CHECK(utf8::substr(context, span->char_start, span->char_end) == span->text);
    CHECK(span->heuristic == OverlapHeuristic::LCS);
}

TEST_CASE("lcs_span trivial cases") {
    CHECK_FALSE(lcs_span("amber basalt", clean("amber basalt"), clean("kelp reef")).has_value());
    CHECK_FALSE(lcs_span("", clean(""), clean("kelp")).has_value());

    const std::string context = "quartz reef summit";
    auto span = lcs_span(context, clean(context), clean(context));
    REQUIRE(span.has_value());
    CHECK(span->text == "quartz reef summit");
    CHECK(span->char_start == 0);
}

TEST_CASE("lcsubstr_span finds the longest common token run") {
    const std::string question = "Are Antonio Vivaldi and Gustav Holst both baroque composers?";
    auto span = lcsubstr_span(question, clean(question), clean("Antonio Vivaldi"));
    REQUIRE(span.has_value());
    CHECK(span->text == "Antonio Vivaldi");
    CHECK(span->heuristic == OverlapHeuristic::LCSUBSTR);
    CHECK(utf8::substr(question, span->char_start, span->char_end) == span->text);

    auto single = lcsubstr_span("amber basalt cobalt", clean("amber basalt cobalt"),
                                clean("dune basalt kelp"));
    REQUIRE(single.has_value());
    CHECK(single->text == "basalt");

    CHECK_FALSE(
        lcsubstr_span("amber basalt", clean("amber basalt"), clean("kelp reef")).has_value());
}

TEST_CASE("lcsubstr_span breaks run-length ties by earliest position") {
    const std::string context = "dune kelp reef dune kelp";
    auto span = lcsubstr_span(context, clean(context), clean("dune kelp"));
    REQUIRE(span.has_value());
    CHECK(span->char_start == 0);
    CHECK(span->text == "dune kelp");
}

TEST_CASE("overlap_merge_span selects the longest qualifying window") {
    // Window tokens: amber basalt zephyr cobalt; 3 of 4 are in the target, so
    // the full window qualifies at 0.75 and beats the shorter pure runs.
    const std::string context = "amber basalt zephyr cobalt";
    auto span = overlap_merge_span(context, clean(context), clean("amber basalt cobalt dune"),
                                   0.6);
    REQUIRE(span.has_value());
    CHECK(span->text == "amber basalt zephyr cobalt");
    CHECK(span->heuristic == OverlapHeuristic::OVERLAP_MERGE);

    // With min_ratio = 1 only fully contained runs qualify.
    auto strict = overlap_merge_span(context, clean(context),
                                     clean("amber basalt cobalt dune"), 1.0);
    REQUIRE(strict.has_value());
    CHECK(strict->text == "amber basalt");
    for (const auto& t : clean(strict->text)) {
        auto target = texts(clean("amber basalt cobalt dune"));
        CHECK(std::find(target.begin(), target.end(), t.text) != target.end());
    }
}

TEST_CASE("overlap_merge_span edge cases") {
    CHECK_FALSE(overlap_merge_span("amber", clean("amber"), clean(""), 0.6).has_value());
    CHECK_FALSE(overlap_merge_span("amber", clean("amber"), clean("kelp"), 0.6).has_value());
    CHECK_THROWS_AS(overlap_merge_span("amber", clean("amber"), clean("amber"), 0.0),
                    ConfigError);
    CHECK_THROWS_AS(overlap_merge_span("amber", clean("amber"), clean("amber"), 1.5),
                    ConfigError);
}

TEST_CASE("heuristic spans agree with brute-force DP oracles") {
    std::mt19937 rng(61);
    for (int round = 0; round < 300; ++round) {
        auto a = testsup::random_tokens(rng, 12, 8);
        auto b = testsup::random_tokens(rng, 12, 8);
        const std::string context = join(a);
        const std::string target = join(b);
        const auto context_tokens = clean(context);
        const auto target_tokens = clean(target);
        REQUIRE(context_tokens.size() == a.size());

        const std::size_t lcs_len = testsup::brute_lcs_len(a, b);
        auto lcs = lcs_span(context, context_tokens, target_tokens);
        CHECK(lcs.has_value() == (lcs_len > 0));
        if (lcs) {
            CHECK(utf8::substr(context, lcs->char_start, lcs->char_end) == lcs->text);
            // A substring's LCS cannot exceed the whole string's, and the
            // returned window contains one maximal subsequence, so equality
            // must hold.
            CHECK(testsup::brute_lcs_len(texts(clean(lcs->text)), b) == lcs_len);
            const auto window = texts(clean(lcs->text));
            REQUIRE(!window.empty());
            CHECK(std::find(b.begin(), b.end(), window.front()) != b.end());
            CHECK(std::find(b.begin(), b.end(), window.back()) != b.end());
        }

        const auto [run_len, run_start] = testsup::brute_lcsubstr(a, b);
        auto run = lcsubstr_span(context, context_tokens, target_tokens);
        CHECK(run.has_value() == (run_len > 0));
        if (run) {
            const auto window = texts(clean(run->text));
            CHECK(window.size() == run_len);
            CHECK(std::equal(window.begin(), window.end(), a.begin() + run_start));
            CHECK(run->char_start == context_tokens[run_start].char_start);
        }
    }
}

TEST_CASE("mask_markup blanks delimiters and preserves length") {
    CHECK(mask_markup("<t>Dune</t>") == "   Dune    ");
    CHECK(mask_markup("a <t>b</t> c") == "a    b     c");
    CHECK(mask_markup("no markup") == "no markup");
    CHECK(mask_markup("<t") == "<t");
    CHECK(mask_markup("</t") == "</t");
    CHECK(mask_markup("") == "");
    const std::string context = "q <t>Dune</t> body";
    CHECK(mask_markup(context).size() == context.size());
}

TEST_CASE("candidate_queries finds title spans inside the question") {
    const std::string context =
        "Alice Hargrove has been a fierce critic of Consolidated Mining practices";
    auto gold = make_doc(0, "Alice Hargrove", "Alice Hargrove is an environmental activist.");
    auto candidates = candidate_queries(context, gold, StopList::builtin(),
                                        FoldTable::builtin());
    REQUIRE(!candidates.empty());
    bool found = false;
    for (const auto& c : candidates) {
        CHECK(utf8::substr(context, c.char_start, c.char_end) == c.text);
        if (c.text == "Alice Hargrove") found = true;
    }
    CHECK(found);
}

TEST_CASE("candidate_queries finds hop-2 spans in serialized context paragraphs") {
    const std::string context =
        "Which film featured her? <t>Film Corner</t> The film starred Shirley Temple as the "
        "lead.";
    auto gold = make_doc(1, "Shirley Temple", "Shirley Temple was an American actress.");
    auto candidates = candidate_queries(context, gold, StopList::builtin(),
                                        FoldTable::builtin());
    bool found = false;
    for (const auto& c : candidates) {
        CHECK(utf8::substr(context, c.char_start, c.char_end) == c.text);
        if (c.text == "Shirley Temple") found = true;
    }
    CHECK(found);
}

TEST_CASE("candidate_queries variants and degenerate inputs") {
    SUBCASE("no overlap yields an empty list") {
        auto gold = make_doc(0, "Quartz", "quartz tundra");
        CHECK(candidate_queries("amber basalt", gold, StopList::builtin(), FoldTable::builtin())
                  .empty());
    }
    SUBCASE("empty title skips title combos but paragraph combos proceed") {
        auto gold = make_doc(0, "", "amber basalt cobalt");
        auto candidates = candidate_queries("amber basalt", gold, StopList::builtin(),
                                            FoldTable::builtin());
        REQUIRE(!candidates.empty());
        for (const auto& c : candidates) CHECK(c.target_variant == TargetVariant::PARAGRAPH);
    }
    SUBCASE("punctuation-stripped variant matches joined tokens") {
        // "Exxon-Mobil" only matches the single-token title once the hyphen
        // is deleted; the span still quotes the original hyphenated text.
        const std::string context = "a critic of Exxon-Mobil policies";
        auto gold = make_doc(0, "ExxonMobil", "An oil company.");
        auto candidates = candidate_queries(context, gold, StopList::builtin(),
                                            FoldTable::builtin());
        REQUIRE(!candidates.empty());
        bool found = false;
        for (const auto& c : candidates) {
            CHECK(utf8::substr(context, c.char_start, c.char_end) == c.text);
            if (c.text == "Exxon-Mobil") {
                found = true;
                CHECK(c.context_variant == ContextVariant::CLEANED_NOPUNCT);
            }
        }
        CHECK(found);
    }
    SUBCASE("identical spans from different combos are deduplicated") {
        const std::string context = "Scott Parkin";
        auto gold = make_doc(0, "Scott Parkin", "Scott Parkin is an activist.");
        auto candidates = candidate_queries(context, gold, StopList::builtin(),
                                            FoldTable::builtin());
        REQUIRE(candidates.size() == 1);
        CHECK(candidates[0].text == "Scott Parkin");
        CHECK(candidates[0].token_count == 2);
    }
    SUBCASE("paragraph targets are capped at max_target_tokens") {
        OracleParams tiny;
        tiny.max_target_tokens = 2;
        auto gold = make_doc(0, "Unrelated", "amber basalt cobalt dune ember");
        // Only the first two cleaned paragraph tokens survive the cap, so a
        // context matching later tokens finds nothing.
        CHECK(candidate_queries("dune ember", gold, StopList::builtin(), FoldTable::builtin(),
                                tiny)
                  .empty());
        CHECK(!candidate_queries("amber basalt", gold, StopList::builtin(),
                                 FoldTable::builtin(), tiny)
                   .empty());
        OracleParams bad;
        bad.max_target_tokens = 0;
        CHECK_THROWS_AS(candidate_queries("amber", gold, StopList::builtin(),
                                          FoldTable::builtin(), bad),
                        ConfigError);
    }
    SUBCASE("spans may cross masked markup and keep it verbatim") {
        const std::string context = "dune <t>kelp</t> reef";
        auto gold = make_doc(0, "kelp", "dune kelp reef");
        auto candidates = candidate_queries(context, gold, StopList::builtin(),
                                            FoldTable::builtin());
        bool crossing = false;
        for (const auto& c : candidates) {
            CHECK(utf8::substr(context, c.char_start, c.char_end) == c.text);
            if (c.text == "dune <t>kelp</t> reef") {
                crossing = true;
                CHECK(c.token_count == 3);  // delimiters are masked, not counted
            }
        }
        CHECK(crossing);
    }
}

TEST_CASE("candidate offsets stay verbatim under fuzzing") {
    std::mt19937 rng(67);
    const std::vector<std::string> glue = {" ", ", ", " <t>", "</t> ", "-", ". ", "'s "};
    for (int round = 0; round < 200; ++round) {
        auto words = testsup::random_tokens(rng, 10, 10);
        std::string context;
        std::uniform_int_distribution<std::size_t> pick(0, glue.size() - 1);
        for (const auto& w : words) {
            context += w;
            context += glue[pick(rng)];
        }
        auto gold_words = testsup::random_tokens(rng, 8, 10);
        auto gold = make_doc(0, join(gold_words), join(gold_words));
        for (const auto& c :
             candidate_queries(context, gold, StopList::builtin(), FoldTable::builtin())) {
            CHECK(utf8::substr(context, c.char_start, c.char_end) == c.text);
            CHECK(c.token_count > 0);
        }
    }
}

TEST_CASE("select_oracle picks the candidate that ranks the gold best") {
    Index index = build_docs({make_doc(0, "Dune", "dune tundra kelp"),
                              make_doc(1, "Kelp Farming", "kelp kelp kelp harbor"),
                              make_doc(2, "Harbor", "harbor reef")});
    const RankingParams params;

    auto oracle = select_oracle("q1", 1,
                                {make_span("kelp", 0, 1), make_span("dune", 5, 1)}, 0, index,
                                params);
    CHECK(oracle.span.text == "dune");
    CHECK(oracle.gold_rank == 1);
    CHECK(oracle.gold_in_pool());
    CHECK(oracle.question_id == "q1");
    CHECK(oracle.hop == 1);
    CHECK(oracle.gold_score > 0.0);
}

TEST_CASE("select_oracle tie-breaks on tokens then position and flags missing golds") {
    Index index = build_docs({make_doc(0, "Dune", "dune tundra"),
                              make_doc(1, "Kelp", "kelp reef")});
    const RankingParams params;

    SUBCASE("fewer tokens win when rank and score tie") {
        auto long_span = make_span("dune", 0, 3);
        auto short_span = make_span("dune", 0, 1);
        auto oracle = select_oracle("q", 1, {long_span, short_span}, 0, index, params);
        CHECK(oracle.span.token_count == 1);
    }
    SUBCASE("earlier char_start wins when everything else ties") {
        auto late = make_span("dune", 9, 1);
        auto early = make_span("dune", 2, 1);
        auto oracle = select_oracle("q", 1, {late, early}, 0, index, params);
        CHECK(oracle.span.char_start == 2);
    }
    SUBCASE("all candidates missing the gold fall back to fewest tokens") {
        auto a = make_span("kelp reef", 0, 2);
        auto b = make_span("kelp", 0, 1);
        auto oracle = select_oracle("q", 2, {a, b}, 0, index, params);
        CHECK_FALSE(oracle.gold_in_pool());
        CHECK(oracle.gold_rank == kGoldRankNotFound);
        CHECK(oracle.gold_score == 0.0);
        CHECK(oracle.span.token_count == 1);
        CHECK(oracle.hop == 2);
    }
    SUBCASE("markup in a span is masked before searching") {
        auto oracle =
            select_oracle("q", 1, {make_span("<t>dune</t>", 0, 1)}, 0, index, params);
        CHECK(oracle.gold_rank == 1);
    }
}

TEST_CASE("select_oracle throws a descriptive error on empty candidates") {
    Index index = build_docs({make_doc(0, "Dune", "dune")});
    try {
        select_oracle("question-17", 2, {}, 0, index, RankingParams{});
        FAIL("expected NoOracleError");
    } catch (const NoOracleError& e) {
        CHECK(e.question_id == "question-17");
        CHECK(e.hop == 2);
        CHECK(std::string(e.what()).find("question-17") != std::string::npos);
    }
}

TEST_CASE("select_oracle keeps rank <= 5 whenever any candidate achieves it") {
    std::mt19937 rng(71);
    const RankingParams params;
    for (int round = 0; round < 30; ++round) {
        auto docs = testsup::random_corpus(rng, 10, 10);
        Index index = build_docs(docs);
        std::uniform_int_distribution<std::size_t> pick_doc(0, docs.size() - 1);
        const DocId gold = static_cast<DocId>(pick_doc(rng));

        std::vector<SpanCandidate> candidates;
        for (int c = 0; c < 5; ++c) {
            auto words = testsup::random_tokens(rng, 4, 10);
            if (words.empty()) words.push_back("amber");
            candidates.push_back(make_span(join(words), 0, words.size()));
        }
        auto oracle = select_oracle("q", 1, candidates, gold, index, params);

        std::uint32_t best = kGoldRankNotFound;
        for (const auto& c : candidates) {
            auto pool = ranked_pool(index, mask_markup(c.text), params);
            for (std::size_t r = 0; r < pool.size(); ++r) {
                if (pool[r].doc_id == gold) {
                    best = std::min(best, static_cast<std::uint32_t>(r + 1));
                    break;
                }
            }
        }
        if (best <= 5) CHECK(oracle.gold_rank <= 5);
        CHECK(oracle.gold_rank == best);

        auto again = select_oracle("q", 1, candidates, gold, index, params);
        CHECK(again.span.text == oracle.span.text);
        CHECK(again.span.char_start == oracle.span.char_start);
        CHECK(again.gold_rank == oracle.gold_rank);
    }
}

TEST_CASE("name tables cover the enums") {
    CHECK(heuristic_name(OverlapHeuristic::LCS) == "lcs");
    CHECK(heuristic_name(OverlapHeuristic::LCSUBSTR) == "lcsubstr");
    CHECK(heuristic_name(OverlapHeuristic::OVERLAP_MERGE) == "overlap_merge");
    CHECK(context_variant_name(ContextVariant::CLEANED) == "cleaned");
    CHECK(context_variant_name(ContextVariant::CLEANED_NOPUNCT) == "cleaned_nopunct");
    CHECK(target_variant_name(TargetVariant::TITLE) == "title");
    CHECK(target_variant_name(TargetVariant::PARAGRAPH) == "paragraph");
}
