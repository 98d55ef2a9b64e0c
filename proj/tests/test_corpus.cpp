#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "ctaes/corpus.hpp"
#include "ctaes/synth.hpp"
#include "testutil.hpp"

using namespace ctaes;
using namespace ctaes::corpus;

TEST_CASE("normalize_score") {
    CHECK(normalize_score(12, {2, 12}) == doctest::Approx(1.0));
    CHECK(normalize_score(2, {2, 12}) == doctest::Approx(0.0));
    CHECK(normalize_score(7, {2, 12}) == doctest::Approx(0.5));
    CHECK(normalize_score(8, {2, 12}) == doctest::Approx(0.6));
    CHECK_THROWS_AS(normalize_score(13, {2, 12}), RangeError);
    CHECK_THROWS_AS(normalize_score(1, {2, 12}), RangeError);
}

TEST_CASE("denormalize_score rounds half away from zero and clamps") {
    CHECK(denormalize_score(1.0, {2, 12}) == 12);
    CHECK(denormalize_score(0.5, {2, 12}) == 7);
    CHECK(denormalize_score(0.649, {0, 3}) == 2); // 1.947 rounds to 2
    CHECK(denormalize_score(0.0, {2, 12}) == 2);
    CHECK(denormalize_score(0.25, {0, 2}) == 1); // 0.5 rounds away from zero
}

TEST_CASE("normalize/denormalize round-trips every raw value of the eight registered ranges") {
    auto registry = builtin_asap_registry();
    for (const auto& spec : registry.topics()) {
        for (int j = 0; j < kNumTraits; ++j) {
            if (!spec.trait_set[j]) continue;
            for (int raw = spec.ranges[j].min_raw; raw <= spec.ranges[j].max_raw; ++raw)
                CHECK(denormalize_score(normalize_score(raw, spec.ranges[j]), spec.ranges[j]) == raw);
        }
    }
}

TEST_CASE("score_to_class bins") {
    CHECK(score_to_class(0.5) == 1);
    CHECK(score_to_class(0.0) == 0);
    CHECK(score_to_class(0.8) == 3);
    CHECK(score_to_class(0.4) == 1);
    CHECK(score_to_class(0.6) == 2);
    CHECK(score_to_class(1.0) == 3);
    CHECK_THROWS_AS(score_to_class(1.5), RangeError);
}

TEST_CASE("score_to_class is monotone with exactly four classes over a dense sweep") {
    int prev = 0;
    std::set<int> seen;
    for (int i = 0; i <= 10000; ++i) {
        int c = score_to_class(i / 10000.0);
        CHECK(c >= prev);
        prev = c;
        seen.insert(c);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("trait masks match the registered topic table") {
    auto registry = builtin_asap_registry();
    auto names = [&](int id) {
        std::set<std::string> out;
        for (int j = 0; j < kNumTraits; ++j)
            if (registry.by_id(id).trait_set[j]) out.insert(trait_names()[j]);
        return out;
    };
    std::set<std::string> arg = {"Holistic", "Content", "Organization", "WordChoice",
                                 "SentenceFluency", "Conventions"};
    std::set<std::string> src = {"Holistic", "Content", "TopicAdherence", "Language", "Narrativity"};
    CHECK(names(1) == arg);
    CHECK(names(2) == arg);
    for (int id : {3, 4, 5, 6}) CHECK(names(id) == src);
    CHECK(names(7) == std::set<std::string>{"Holistic", "Content", "Organization", "Conventions"});
    CHECK(names(8) == arg);
    CHECK(registry.by_id(1).ranges[0].min_raw == 2);
    CHECK(registry.by_id(1).ranges[0].max_raw == 12);
    CHECK(registry.by_id(8).ranges[0].max_raw == 60);
}

TEST_CASE("dataset parsing populates masks, units and grades") {
    auto registry = builtin_asap_registry();
    std::string tsv =
        "essay_id\ttopic_id\tessay\tHolistic\tContent\tOrganization\tWordChoice\tSentenceFluency\t"
        "Conventions\tTopicAdherence\tLanguage\tNarrativity\n"
        "e1\t1\tThe clear essay.\t8\t9\t7\t8\t8\t9\t\t\t\n"
        "e2\t3\tshort one\t2\t2\t\t\t\t\t1\t2\t3\n";
    auto recs = parse_dataset(tsv, registry);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].unit_scores[0] == doctest::Approx(0.6));
    CHECK(recs[0].grade_class == 2);
    CHECK(recs[0].tokens.size() == 3);
    // topic 3 masks: holistic, content, TA, language, narrativity
    std::array<bool, kNumTraits> expect{true, true, false, false, false, false, true, true, true};
    CHECK(recs[1].trait_mask == expect);
    CHECK(recs[1].grade_class == score_to_class(recs[1].unit_scores[0]));
}

TEST_CASE("dataset parse errors carry line numbers") {
    auto registry = builtin_asap_registry();
    std::string header =
        "essay_id\ttopic_id\tessay\tHolistic\tContent\tOrganization\tWordChoice\tSentenceFluency\t"
        "Conventions\tTopicAdherence\tLanguage\tNarrativity\n";

    SUBCASE("missing column") {
        try {
            parse_dataset(header + "e1\t1\tno scores here\n", registry);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("unknown topic") {
        CHECK_THROWS_AS(
            parse_dataset(header + "e1\t99\ttext\t5\t\t\t\t\t\t\t\t\n", registry),
            RegistryError);
    }
    SUBCASE("score out of range") {
        CHECK_THROWS_AS(
            parse_dataset(header + "e1\t1\ttext\t13\t\t\t\t\t\t\t\t\n", registry),
            RangeError);
    }
    SUBCASE("score for undeclared trait") {
        CHECK_THROWS_AS(
            parse_dataset(header + "e1\t3\ttext\t2\t\t2\t\t\t\t1\t2\t3\n", registry),
            ParseError);
    }
    SUBCASE("duplicate essay id") {
        CHECK_THROWS_AS(parse_dataset(header + "e1\t1\ttext\t8\t8\t8\t8\t8\t8\t\t\t\n" +
                                          "e1\t1\ttext\t8\t8\t8\t8\t8\t8\t\t\t\n",
                                      registry),
                        ParseError);
    }
}

TEST_CASE("cross-topic split seals target labels") {
    synth::SynthSpec spec;
    spec.essays_per_topic = 12;
    auto registry = synth::synth_registry();
    auto records = parse_dataset(synth::synth_dataset_tsv(spec), registry);
    auto split = make_cross_topic_split(records, synth::kSynthTarget, registry);

    CHECK(split.num_sources() == 2);
    CHECK(split.target.size() == 12);
    CHECK(split.gold.size() == 12);
    for (const auto& rec : split.target) {
        CHECK(rec.grade_class == -1);
        for (int j = 0; j < kNumTraits; ++j) CHECK_FALSE(rec.trait_mask[j]);
    }
    // partition property: every essay lands exactly once
    std::set<std::string> ids;
    std::size_t total = 0;
    for (const auto& bucket : split.sources) {
        total += bucket.size();
        for (const auto& r : bucket) CHECK(ids.insert(r.essay_id).second);
    }
    total += split.target.size();
    for (const auto& r : split.target) CHECK(ids.insert(r.essay_id).second);
    CHECK(total == records.size());

    CHECK_THROWS_AS(make_cross_topic_split(records, 999, registry), RegistryError);
}

TEST_CASE("single-topic corpus cannot form a split") {
    auto registry = synth::synth_registry();
    synth::SynthSpec spec;
    spec.essays_per_topic = 4;
    auto records = parse_dataset(synth::synth_dataset_tsv(spec), registry);
    std::vector<EssayRecord> only_target;
    for (const auto& r : records)
        if (r.topic_id == synth::kSynthTarget) only_target.push_back(r);
    CHECK_THROWS_AS(make_cross_topic_split(only_target, synth::kSynthTarget, registry), ConfigError);
}

TEST_CASE("records file round-trips") {
    auto registry = synth::synth_registry();
    synth::SynthSpec spec;
    spec.essays_per_topic = 6;
    auto records = parse_dataset(synth::synth_dataset_tsv(spec), registry);
    std::string path = "/tmp/ctaes_test_records.tsv";
    save_records(path, records);
    auto loaded = load_records(path, registry);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].essay_id == records[i].essay_id);
        CHECK(loaded[i].grade_class == records[i].grade_class);
        CHECK(loaded[i].trait_mask == records[i].trait_mask);
        CHECK(loaded[i].tokens == records[i].tokens);
        for (int j = 0; j < kNumTraits; ++j)
            if (records[i].trait_mask[j]) {
                CHECK(loaded[i].raw_scores[j] == records[i].raw_scores[j]);
                CHECK(loaded[i].unit_scores[j] == records[i].unit_scores[j]); // bit-exact via %.17g
            }
    }
}

TEST_CASE("registry JSON round-trips and rejects bad input") {
    auto registry = builtin_asap_registry();
    auto again = TopicRegistry::from_json(registry.to_json());
    CHECK(again.to_json() == registry.to_json());
    CHECK_THROWS_AS(TopicRegistry::from_json("{\"schema_version\":\"nope\",\"topics\":[]}"),
                    RegistryError);
    CHECK_THROWS_AS(
        TopicRegistry::from_json(
            R"({"schema_version":"ctaes-registry-1","topics":[{"topic_id":1,"genre":"argumentative",
                "traits":["Content"],"score_min":2,"score_max":12,"max_len":10,"whoops":1}]})"),
        RegistryError);
    // max_raw must exceed min_raw
    CHECK_THROWS_AS(
        TopicRegistry::from_json(
            R"({"schema_version":"ctaes-registry-1","topics":[{"topic_id":1,"genre":"argumentative",
                "traits":["Content"],"score_min":5,"score_max":5,"max_len":10}]})"),
        RegistryError);
}

TEST_CASE("shipped registry file matches the built-in table") {
    std::string src = testutil::env_or("CTAES_SOURCE_DIR", ".");
    std::ifstream in(src + "/data/asap_registry.json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    auto from_file = TopicRegistry::from_json(ss.str());
    CHECK(from_file.to_json() == builtin_asap_registry().to_json());
}
