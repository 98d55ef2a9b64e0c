#include "ctaes/synth.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "ctaes/rng.hpp"

namespace ctaes::synth {

namespace {

// Invented quality-marker words: absent from the sentiment lexicon, so the
// score signal must flow through the encoder representation rather than
// shortcut through the handcrafted sentiment counts.
const std::vector<std::string> kHighMarkers = {"zorvian", "flumic",  "crenth",
                                               "vasmir",  "quolent", "drivane"};
const std::vector<std::string> kLowMarkers = {"murnok",  "blarvit", "squeith",
                                              "grondul", "plimset", "varkle"};

// Both source topics draw filler from one pool, the target from another, so
// the domain shift is a pool-mean difference that stays stable across
// embedding seeds. Every topic writes ~100 tokens (handcrafted features stay
// comparable); the encoder-side length contrast comes from the per-topic
// max_len budget: sources truncate to 20 positions while the target keeps
// its full sequence, leaving the topic-shared prompt a strong, constant
// per-topic 1/L coefficient.
const std::vector<std::string> kFillerSource = {
    "galaxy",  "orbit",   "ship",    "comet",   "crew",    "signal",  "module",  "harbor",
    "reef",    "tide",    "vessel",  "sonar",   "buoy",    "trawler", "lagoon",  "anchorage"};
const std::vector<std::string> kFillerTarget = {
    "avenue",  "district", "tram",     "plaza",   "facade",   "transit",  "skyline",  "borough",
    "bazaar",  "terrace",  "subway",   "kiosk",   "rooftop",  "alley",    "courtyard", "metro"};
constexpr double kMarkerShare = 0.5;

struct TopicPlan {
    int topic_id;
    corpus::ScoreRange range;
    int min_tokens, max_tokens;
    int encoder_budget;
    bool is_target;
    // Constant offset between how good the essays read and how they are
    // scored; a source-fit scorer misreads such a topic until its
    // topic-specific prompt (or an equivalent correction) absorbs the bias.
    double marker_bias;
    // Raw holistic values per grade; chosen so quantization keeps the grade.
    std::vector<std::vector<int>> grade_raws;
};

std::vector<TopicPlan> plans() {
    return {
        {kSynthSourceA, {2, 12}, 98, 102, 20, false, 0.0, {{3, 4, 5}, {7}, {9}, {11, 12}}},
        {kSynthSourceB, {0, 10}, 98, 102, 20, false, 0.0, {{1, 2, 3}, {5}, {7}, {9, 10}}},
        {kSynthTarget, {1, 6}, 90, 150, 256, true, 0.10, {{1, 2}, {3}, {4}, {5, 6}}},
    };
}

// A share of source essays stays short of the truncation budget, so encoder
// lengths vary within every topic and token counts overlap across topics.
constexpr double kShortEssayShare = 0.3;
constexpr int kShortMin = 15, kShortMax = 19;

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& gen) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(gen)];
}

} // namespace

corpus::TopicRegistry synth_registry() {
    std::vector<corpus::TopicSpec> topics;
    for (const auto& plan : plans()) {
        corpus::TopicSpec t;
        t.topic_id = plan.topic_id;
        t.genre = corpus::Genre::argumentative;
        t.max_len = plan.encoder_budget;
        t.trait_set[corpus::trait_index("Holistic")] = true;
        t.trait_set[corpus::trait_index("Content")] = true;
        t.trait_set[corpus::trait_index("Organization")] = true;
        for (int j = 0; j < corpus::kNumTraits; ++j) t.ranges[j] = plan.range;
        topics.push_back(t);
    }
    return corpus::TopicRegistry(std::move(topics));
}

std::string synth_dataset_tsv(const SynthSpec& spec) {
    auto gen = seed_stream(spec.seed, "synth");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> grade_pick(0, corpus::kNumGrades - 1);

    std::ostringstream out;
    out << "essay_id\ttopic_id\tessay";
    for (int j = 0; j < corpus::kNumTraits; ++j) out << '\t' << corpus::trait_names()[j];
    out << '\n';

    const int content_j = corpus::trait_index("Content");
    const int org_j = corpus::trait_index("Organization");
    for (const auto& plan : plans()) {
        for (int e = 0; e < spec.essays_per_topic; ++e) {
            int grade = grade_pick(gen);
            int raw_h = pick(plan.grade_raws[grade], gen);
            double y = corpus::normalize_score(raw_h, plan.range);

            std::uniform_int_distribution<int> len_d(plan.min_tokens, plan.max_tokens);
            int len = len_d(gen);
            if (!plan.is_target && unit(gen) < kShortEssayShare) {
                std::uniform_int_distribution<int> short_d(kShortMin, kShortMax);
                len = short_d(gen);
            }
            double hi_share = std::clamp(0.12 + 0.76 * y + plan.marker_bias, 0.02, 0.98);
            std::ostringstream text;
            const auto& filler = plan.is_target ? kFillerTarget : kFillerSource;
            for (int t = 0; t < len; ++t) {
                std::string word;
                if (unit(gen) < kMarkerShare) {
                    word = unit(gen) < hi_share ? pick(kHighMarkers, gen) : pick(kLowMarkers, gen);
                } else {
                    word = pick(filler, gen);
                }
                if (unit(gen) < 0.10) word += '.';
                if (t) text << ' ';
                text << word;
            }

            auto jitter = [&](int raw) {
                std::uniform_int_distribution<int> j(-1, 1);
                int v = unit(gen) < 0.4 ? raw + j(gen) : raw;
                return std::clamp(v, plan.range.min_raw, plan.range.max_raw);
            };
            int raw_content = jitter(raw_h);
            int raw_org = jitter(raw_h);

            out << 't' << plan.topic_id << "_e" << e << '\t' << plan.topic_id << '\t' << text.str();
            for (int j = 0; j < corpus::kNumTraits; ++j) {
                out << '\t';
                if (j == 0) out << raw_h;
                else if (j == content_j) out << raw_content;
                else if (j == org_j) out << raw_org;
            }
            out << '\n';
        }
    }
    return out.str();
}

} // namespace ctaes::synth
