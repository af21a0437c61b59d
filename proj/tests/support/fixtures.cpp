#include "support/fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "multihop/textproc.hpp"

namespace testsup {

namespace {

using multihop::Document;
using multihop::FieldId;
using multihop::kAllFields;
using nlohmann::json;

std::filesystem::path unique_tmp_path(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto base = std::filesystem::temp_directory_path();
    return base / ("multihop-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                   std::to_string(counter.fetch_add(1)));
}

}  // namespace

TmpDir::TmpDir(const std::string& tag) : path_(unique_tmp_path(tag)) {
    std::filesystem::create_directories(path_);
}

TmpDir::~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

BruteScorer::BruteScorer(const std::vector<Document>& docs) : doc_count_(docs.size()) {
    const auto& stops = multihop::StopList::builtin();
    const auto& folds = multihop::FoldTable::builtin();
    auto texts = [](const std::vector<multihop::Token>& tokens) {
        std::vector<std::string> out;
        for (const auto& t : tokens) out.push_back(t.text);
        return out;
    };
    for (auto& per_field : terms_) per_field.resize(docs.size());
    for (const auto& doc : docs) {
        auto title = multihop::simple_analyze(doc.title, folds);
        auto body = multihop::standard_analyze(doc.text(), stops, folds);
        terms_[0][doc.doc_id] = texts(title);
        terms_[1][doc.doc_id] = multihop::shingle2(title);
        terms_[2][doc.doc_id] = texts(body);
        terms_[3][doc.doc_id] = multihop::shingle2(body);
    }
}

double BruteScorer::score(const std::string& query, multihop::DocId doc,
                          const multihop::RankingParams& params) const {
    const auto& stops = multihop::StopList::builtin();
    const auto& folds = multihop::FoldTable::builtin();
    auto texts = [](const std::vector<multihop::Token>& tokens) {
        std::vector<std::string> out;
        for (const auto& t : tokens) out.push_back(t.text);
        return out;
    };

    double best = 0.0;
    for (FieldId field : kAllFields) {
        const auto f = static_cast<std::size_t>(field);
        std::vector<std::string> query_terms;
        switch (field) {
            case FieldId::TITLE: query_terms = texts(multihop::simple_analyze(query, folds)); break;
            case FieldId::TITLE_BIGRAM:
                query_terms = multihop::shingle2(multihop::simple_analyze(query, folds));
                break;
            case FieldId::TEXT:
                query_terms = texts(multihop::standard_analyze(query, stops, folds));
                break;
            case FieldId::TEXT_BIGRAM:
                query_terms = multihop::shingle2(multihop::standard_analyze(query, stops, folds));
                break;
        }
        if (query_terms.empty()) continue;

        std::uint64_t total_tokens = 0;
        for (const auto& terms : terms_[f]) total_tokens += terms.size();
        const double avgdl =
            doc_count_ == 0 ? 0.0 : static_cast<double>(total_tokens) / doc_count_;
        const double dl = static_cast<double>(terms_[f][doc].size());

        double sum = 0.0;
        for (const auto& term : query_terms) {
            const auto tf = static_cast<double>(
                std::count(terms_[f][doc].begin(), terms_[f][doc].end(), term));
            if (tf == 0) continue;
            std::size_t df = 0;
            for (const auto& terms : terms_[f]) {
                if (std::find(terms.begin(), terms.end(), term) != terms.end()) ++df;
            }
            const double idf =
                std::log(1.0 + (static_cast<double>(doc_count_) - df + 0.5) / (df + 0.5));
            const double norm = avgdl > 0.0 ? dl / avgdl : 0.0;
            sum += idf * (tf * (params.k1 + 1.0)) /
                   (tf + params.k1 * (1.0 - params.b + params.b * norm));
        }
        if (multihop::is_title_field(field)) sum *= params.title_field_boost;
        best = std::max(best, sum);
    }
    return best;
}

std::size_t brute_lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                             std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                dp[i][j] = dp[i - 1][j - 1] + 1;
            } else {
                dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
            }
        }
    }
    return dp[a.size()][b.size()];
}

std::pair<std::size_t, std::size_t> brute_lcsubstr(const std::vector<std::string>& a,
                                                   const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                             std::vector<std::size_t>(b.size() + 1, 0));
    std::size_t best_len = 0, best_start = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                dp[i][j] = dp[i - 1][j - 1] + 1;
                const std::size_t start = i - dp[i][j];
                if (dp[i][j] > best_len || (dp[i][j] == best_len && start < best_start)) {
                    best_len = dp[i][j];
                    best_start = start;
                }
            }
        }
    }
    return {best_len, best_start};
}

const std::vector<std::string>& test_vocab() {
    static const std::vector<std::string> vocab = {
        "amber",  "basalt", "cobalt", "dune",   "ember",  "fjord",  "granite", "harbor",
        "island", "juniper", "kelp",  "lagoon", "meadow", "nickel", "onyx",    "pine",
        "quartz", "reef",   "summit", "tundra", "umber",  "valley", "willow",  "zephyr"};
    return vocab;
}

std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len,
                                       std::size_t vocab_size) {
    vocab_size = std::min(vocab_size, test_vocab().size());
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<std::size_t> word_dist(0, vocab_size - 1);
    std::vector<std::string> out(len_dist(rng));
    for (auto& w : out) w = test_vocab()[word_dist(rng)];
    return out;
}

std::vector<Document> random_corpus(std::mt19937& rng, std::size_t max_docs,
                                    std::size_t vocab_size) {
    vocab_size = std::min(vocab_size, test_vocab().size());
    std::uniform_int_distribution<std::size_t> doc_dist(1, max_docs);
    std::uniform_int_distribution<std::size_t> title_dist(1, 2);
    std::uniform_int_distribution<std::size_t> sentence_dist(1, 3);
    std::uniform_int_distribution<std::size_t> word_count_dist(3, 8);
    std::uniform_int_distribution<std::size_t> word_dist(0, vocab_size - 1);

    auto words = [&](std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) out += ' ';
            out += test_vocab()[word_dist(rng)];
        }
        return out;
    };

    std::vector<Document> docs(doc_dist(rng));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].doc_id = static_cast<multihop::DocId>(i);
        docs[i].title = words(title_dist(rng));
        docs[i].sentences.resize(sentence_dist(rng));
        for (auto& s : docs[i].sentences) s = words(word_count_dist(rng)) + ".";
    }
    return docs;
}

namespace {

const char* kFirstNames[] = {
    "Alard",   "Bellamy", "Corwin",  "Delphine", "Eamon",   "Fenella", "Garnet",  "Hollis",
    "Isolde",  "Jorund",  "Keturah", "Lazlo",    "Mireille", "Nestor", "Odalys",  "Petrus",
    "Quilla",  "Rosalind", "Sverre", "Tamsin",   "Ulric",   "Verena",  "Wendel",  "Xiomara",
    "Yngve",   "Zelda",   "Ansgar",  "Brigitta", "Caspian", "Dorothea", "Elouan", "Fritjof",
    "Gisela",  "Hakon",   "Ingrid",  "Jephta",   "Klara",   "Leopold", "Maren",   "Nikolaus",
    "Ottilie", "Pascal",  "Quirin",  "Ragnhild", "Soren",   "Thora",   "Udo",     "Vigdis",
    "Walther", "Ylva",    "Zacharias", "Amalric", "Beatrix", "Cosimo", "Dagny",   "Edvard",
    "Fausta",  "Gunnar",  "Hedvig",  "Iver",     "Jutta",   "Kolbein", "Livia",   "Magnus",
    "Nerina",  "Oskar",   "Perrine", "Quentin",  "Runa",    "Sigrid",  "Tormod",  "Urszula",
    "Vittoria", "Wilhelmina", "Xavier", "Yrsa",   "Zoltan",  "Anselm",  "Birgitta", "Corneli"};

const char* kLastNames[] = {
    "Aldersea",  "Brackwell", "Caulfield", "Dunmore",  "Eastgard", "Fairhurst", "Gladwyn",
    "Hale",      "Ingewood",  "Jessop",    "Kirkbride", "Lindqvist", "Marchbank", "Northway",
    "Ormsby",    "Pellander", "Quistorp",  "Ravensworth", "Stenmark", "Thornquist", "Underhill",
    "Vasterling", "Wexford",  "Yarborough", "Zetterlund", "Ashdown", "Birkeland", "Cromarty",
    "Drystan",   "Elverum",   "Fenwick",   "Grimsdale", "Hartvig",  "Iversen",   "Jarlsberg",
    "Kestevan",  "Lofgren",   "Mossgrove", "Nylander",  "Oakhurst", "Pemberton", "Quennell",
    "Rosenvald", "Solheim",   "Tregarth",  "Ulfsson",   "Vinterberg", "Whitlock", "Yttervik",
    "Zachrisson", "Applegard", "Bondevik", "Carraway",  "Dalgaard", "Ellsworth", "Fossberg",
    "Gunnarson", "Holmsted",  "Ibsenholt", "Juteland",  "Klovstad", "Lysander",  "Myrvold",
    "Nordgren",  "Ostergard", "Penhallow", "Quarrington", "Roskilde", "Sandvik",  "Tidemand",
    "Ursula",    "Vangsnes",  "Westerby",  "Yoxall",    "Zierfeld", "Arnesen",   "Bergfalk",
    "Cavendish", "Dunstable", "Ekelund",   "Farrowdale"};

const char* kWorkAdjectives[] = {
    "Silent",   "Iron",     "Golden",  "Crimson", "Hollow",  "Winter",  "Amber",   "Broken",
    "Distant",  "Emerald",  "Frozen",  "Gilded",  "Hidden",  "Ivory",   "Jagged",  "Lonely",
    "Midnight", "Northern", "Obsidian", "Pale",   "Quiet",   "Restless", "Scarlet", "Twilight",
    "Umber",    "Velvet",   "Wandering", "Yellow", "Ancient", "Bitter",  "Copper",  "Drifting",
    "Endless",  "Fading",   "Glass",   "Harvest", "Inland",  "Jade",    "Kindred", "Lunar",
    "Marble",   "Nameless", "Opal",    "Painted", "Quicksilver", "Rising", "Stained", "Thornless",
    "Unbound",  "Vivid",    "Wayward", "Yearning", "Azure",  "Burnished", "Cinder", "Dappled",
    "Ebony",    "Feathered", "Gossamer", "Harrowed", "Ashen", "Brindled", "Clouded", "Dusky",
    "Errant",   "Fallow",   "Gleaming", "Hushed",  "Iridescent", "Keen", "Lambent", "Mottled",
    "Nimble",   "Oaken",    "Pallid",  "Ragged",  "Sable",   "Tangled", "Veiled",  "Wistful"};

const char* kWorkNouns[] = {
    "Harbor",   "Meadow",  "Voyage",  "Lantern", "Orchard", "Citadel",  "Causeway", "Tides",
    "Garden",   "Compass", "Archive", "Ballad",  "Current", "Daughter", "Estuary",  "Furrow",
    "Gallery",  "Horizon", "Isthmus", "Journey", "Kingdom", "Ledger",   "Mirror",   "Nocturne",
    "Outpost",  "Passage", "Quarry",  "River",   "Sonata",  "Threshold", "Union",   "Vessel",
    "Waltz",    "Yield",   "Anthem",  "Bridge",  "Chronicle", "Descent", "Echo",    "Fable",
    "Glacier",  "Harvest", "Interval", "Jetty",  "Knoll",   "Labyrinth", "Meridian", "Narrows",
    "Overture", "Parallel", "Quay",   "Requiem", "Summit",  "Tapestry", "Undertow", "Vigil",
    "Windmill", "Yearbook", "Zenith",  "Crossing", "Almanac", "Beacon",  "Cloister", "Delta",
    "Ember",    "Foundry", "Grove",   "Haven",   "Inlet",    "Junction", "Keep",    "Lagoon",
    "Mill",     "Nook",    "Orchestra", "Prairie", "Ridge",  "Spire",    "Terrace", "Wharf"};

const char* kGenres[] = {"drama",     "thriller", "documentary", "comedy",
                         "adventure", "mystery",  "western",     "animated"};

const char* kProfessions[] = {"novelist",  "architect", "composer",    "historian",
                              "botanist",  "sculptor",  "journalist",  "photographer",
                              "conductor", "linguist"};

const char* kNationalities[] = {"Danish",  "Peruvian", "Canadian",   "Finnish", "Austrian",
                                "Welsh",   "Kenyan",   "Portuguese", "Estonian", "Uruguayan"};

const char* kRegions[] = {"Cumbria",  "Patagonia", "Bavaria",  "Tasmania", "Galicia",
                          "Normandy", "Dalmatia",  "Lapland",  "Carinthia", "Gotland"};

const char* kTopics[] = {"coastal erosion",   "medieval trade",    "orchestral music",
                         "glacial geology",   "silk weaving",      "harbor engineering",
                         "alpine botany",     "radio astronomy",   "railway signalling",
                         "baroque sculpture"};

template <std::size_t N>
const char* pick(std::mt19937& rng, const char* (&pool)[N]) {
    std::uniform_int_distribution<std::size_t> dist(0, N - 1);
    return pool[dist(rng)];
}

int pick_year(std::mt19937& rng) {
    return std::uniform_int_distribution<int>(1902, 1999)(rng);
}

// Unique two-part names dealt from a shuffled cross product.
class NameDealer {
public:
    NameDealer(const char* const* a, std::size_t a_count, const char* const* b,
               std::size_t b_count, std::mt19937& rng)
        : a_(a), b_(b), b_count_(b_count) {
        order_.resize(a_count * b_count);
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        std::shuffle(order_.begin(), order_.end(), rng);
    }

    std::string deal() {
        if (next_ >= order_.size()) throw std::runtime_error("name pool exhausted");
        const std::size_t combo = order_[next_++];
        return std::string(a_[combo / b_count_]) + " " + b_[combo % b_count_];
    }

private:
    const char* const* a_;
    const char* const* b_;
    std::size_t b_count_;
    std::vector<std::size_t> order_;
    std::size_t next_ = 0;
};

Document person_page(std::string title, std::mt19937& rng) {
    Document doc;
    doc.title = title;
    doc.sentences.push_back(title + " is a " + pick(rng, kNationalities) + " " +
                            pick(rng, kProfessions) + " born in " +
                            std::to_string(pick_year(rng)) + ".");
    doc.sentences.push_back("Early studies of " + std::string(pick(rng, kTopics)) +
                            " shaped much of this work.");
    return doc;
}

Document person_page_with_profession(std::string title, const std::string& profession,
                                     std::mt19937& rng) {
    Document doc;
    doc.title = title;
    doc.sentences.push_back(title + " is a " + pick(rng, kNationalities) + " " + profession +
                            " born in " + std::to_string(pick_year(rng)) + ".");
    doc.sentences.push_back("Early studies of " + std::string(pick(rng, kTopics)) +
                            " shaped much of this work.");
    return doc;
}

Document work_page(std::string title, const std::string& director, int year,
                   const std::string& genre, std::mt19937& rng) {
    Document doc;
    doc.title = title;
    doc.sentences.push_back(title + " is a " + std::to_string(year) + " " + genre +
                            " film directed by " + director + ".");
    doc.sentences.push_back("It premiered at a festival in " + std::string(pick(rng, kRegions)) +
                            ".");
    return doc;
}

Document place_page(std::string title, std::mt19937& rng) {
    Document doc;
    doc.title = title;
    doc.sentences.push_back(title + " is a small town in " + pick(rng, kRegions) + ".");
    doc.sentences.push_back("The local economy is known for " + std::string(pick(rng, kTopics)) +
                            ".");
    return doc;
}

void write_shard_plain(const std::filesystem::path& file, const std::vector<std::string>& lines) {
    std::ofstream out(file, std::ios::binary);
    for (const auto& line : lines) out << line << "\n";
}

void write_shard_gz(const std::filesystem::path& file, const std::vector<std::string>& lines) {
    gzFile out = gzopen(file.string().c_str(), "wb");
    if (!out) throw std::runtime_error("cannot write " + file.string());
    for (const auto& line : lines) {
        gzwrite(out, line.data(), static_cast<unsigned>(line.size()));
        gzwrite(out, "\n", 1);
    }
    gzclose(out);
}

}  // namespace

SyntheticFixture make_synthetic_fixture(const std::filesystem::path& base_dir,
                                        std::size_t question_count,
                                        std::size_t distractor_count, std::uint32_t seed) {
    std::mt19937 rng(seed);
    NameDealer people(kFirstNames, std::size(kFirstNames), kLastNames, std::size(kLastNames),
                      rng);
    NameDealer works(kWorkAdjectives, std::size(kWorkAdjectives), kWorkNouns,
                     std::size(kWorkNouns), rng);

    SyntheticFixture fixture;
    std::vector<Document> docs;

    const std::size_t bridge_count = question_count * 4 / 5;
    for (std::size_t i = 0; i < question_count; ++i) {
        multihop::DatasetQuestion q;
        q.question_id = "synth-" + std::to_string(1000 + i);
        q.level = (i % 3 == 0) ? "easy" : (i % 3 == 1 ? "medium" : "hard");

        if (i < bridge_count) {
            // Bridge: the question names the film; the director's page is
            // reachable only through the film paragraph.
            const std::string director = people.deal();
            const std::string film = works.deal();
            const int year = pick_year(rng);
            const std::string genre = pick(rng, kGenres);

            docs.push_back(work_page(film, director, year, genre, rng));
            docs.push_back(person_page(director, rng));

            q.question = "Who directed the " + std::to_string(year) + " " + genre + " film " +
                         film + "?";
            q.answer = director;
            q.question_type = "bridge";
            q.gold_titles = {film, director};
        } else {
            // Comparison: both people are named outright.
            const std::string left = people.deal();
            const std::string right = people.deal();
            const std::string prof_left = pick(rng, kProfessions);
            const bool same = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
            const std::string prof_right = same ? prof_left : pick(rng, kProfessions);

            docs.push_back(person_page_with_profession(left, prof_left, rng));
            docs.push_back(person_page_with_profession(right, prof_right, rng));

            q.question = "Are " + left + " and " + right + " both known as a " + prof_left +
                         "?";
            q.answer = prof_left == prof_right ? "yes" : "no";
            q.question_type = "comparison";
            q.gold_titles = {left, right};
        }
        q.supporting_facts = {{q.gold_titles[0], 0}, {q.gold_titles[1], 0}};
        fixture.questions.push_back(std::move(q));
    }

    for (std::size_t i = 0; i < distractor_count; ++i) {
        switch (i % 3) {
            case 0: docs.push_back(person_page(people.deal(), rng)); break;
            case 1: {
                const std::string director = people.deal();
                docs.push_back(
                    work_page(works.deal(), director, pick_year(rng), pick(rng, kGenres), rng));
                break;
            }
            default: docs.push_back(place_page(works.deal(), rng)); break;
        }
    }

    // Scatter gold pages through the corpus before ids are assigned.
    std::shuffle(docs.begin(), docs.end(), rng);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i].doc_id = static_cast<multihop::DocId>(i);
        docs[i].source_url = "https://example.org/wiki/" + docs[i].title;
    }

    // Through the real formats: four shards across two directories, half of
    // them gzip-compressed, plus the dataset JSON file.
    fixture.dump_dir = base_dir / "dump";
    fixture.dataset_file = base_dir / "dataset.json";
    std::filesystem::create_directories(fixture.dump_dir / "AA");
    std::filesystem::create_directories(fixture.dump_dir / "AB");

    std::vector<std::string> lines;
    lines.reserve(docs.size());
    for (const auto& doc : docs) {
        lines.push_back(json{{"id", doc.doc_id},
                             {"url", doc.source_url},
                             {"title", doc.title},
                             {"text", doc.sentences}}
                            .dump());
    }
    const std::size_t quarter = (lines.size() + 3) / 4;
    auto slice = [&](std::size_t part) {
        const std::size_t begin = std::min(part * quarter, lines.size());
        const std::size_t end = std::min(begin + quarter, lines.size());
        return std::vector<std::string>(lines.begin() + begin, lines.begin() + end);
    };
    write_shard_plain(fixture.dump_dir / "AA" / "wiki_00", slice(0));
    write_shard_gz(fixture.dump_dir / "AA" / "wiki_01.gz", slice(1));
    write_shard_plain(fixture.dump_dir / "AB" / "wiki_02", slice(2));
    write_shard_gz(fixture.dump_dir / "AB" / "wiki_03.gz", slice(3));

    json dataset = json::array();
    for (const auto& q : fixture.questions) {
        json facts = json::array();
        for (const auto& [title, sentence] : q.supporting_facts) {
            facts.push_back(json::array({title, sentence}));
        }
        dataset.push_back({{"_id", q.question_id},
                           {"question", q.question},
                           {"answer", q.answer},
                           {"type", q.question_type},
                           {"level", q.level},
                           {"supporting_facts", std::move(facts)}});
    }
    std::ofstream(fixture.dataset_file, std::ios::binary) << dataset.dump();

    fixture.documents = std::move(docs);
    return fixture;
}

}  // namespace testsup
