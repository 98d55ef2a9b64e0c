#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ctaes/errors.hpp"

namespace ctaes::metrics {
class Evaluator;
}

namespace ctaes::corpus {

// Global trait vocabulary, fixed order, holistic at index 0. Topics lacking
// a trait contribute masked entries.
inline constexpr int kNumTraits = 9;
inline constexpr int kNumGrades = 4;

const std::array<std::string, kNumTraits>& trait_names();
int trait_index(const std::string& name); // -1 if unknown

enum class Genre { argumentative, source_dependent, narrative };

std::string genre_name(Genre g);
Genre genre_from_name(const std::string& s);

struct ScoreRange {
    int min_raw = 0;
    int max_raw = 0;
};

struct TopicSpec {
    int topic_id = 0;
    Genre genre = Genre::argumentative;
    std::array<bool, kNumTraits> trait_set{};   // always includes holistic
    std::array<ScoreRange, kNumTraits> ranges{}; // one per trait; usually uniform
    int max_len = 0;                             // essay-token budget before prompts

    bool has_trait(int j) const { return trait_set[j]; }
    std::vector<int> present_traits() const;
};

class TopicRegistry {
public:
    explicit TopicRegistry(std::vector<TopicSpec> topics);

    static TopicRegistry load_json(const std::string& path);
    void save_json(const std::string& path) const;
    std::string to_json() const;
    static TopicRegistry from_json(const std::string& text);

    const std::vector<TopicSpec>& topics() const { return topics_; }
    const TopicSpec& by_id(int topic_id) const;       // RegistryError if unknown
    int slot_of(int topic_id) const;                  // dense index, RegistryError if unknown
    bool contains(int topic_id) const;
    int num_topics() const { return static_cast<int>(topics_.size()); }

private:
    std::vector<TopicSpec> topics_;
};

// The eight ASAP++ topics: genre, trait sets, per-topic score range and
// essay length budget.
TopicRegistry builtin_asap_registry();

struct EssayRecord {
    std::string essay_id;
    int topic_id = 0;
    std::vector<std::string> tokens;
    std::array<int, kNumTraits> raw_scores{};    // valid iff trait_mask[j]
    std::array<double, kNumTraits> unit_scores{}; // valid iff trait_mask[j]
    std::array<bool, kNumTraits> trait_mask{};
    int grade_class = -1; // -1 = absent (unlabeled target essays)

    bool labeled() const { return grade_class >= 0; }
};

// ---- score transforms ----

// (raw - min) / (max - min). RangeError outside [min, max].
double normalize_score(int raw, ScoreRange range);

// round(unit * (max-min) + min), half away from zero, clamped to the range.
int denormalize_score(double unit, ScoreRange range);

// [0,0.4) poor, [0.4,0.6) moderate, [0.6,0.8) good, [0.8,1.0] excellent.
int score_to_class(double unit);

// ---- ingesting ----

// Tab-separated input: header, then essay_id, topic_id, essay text, one raw
// score column per global trait (empty cell = trait absent for this essay).
std::vector<EssayRecord> load_dataset(const std::string& path, const TopicRegistry& registry);
std::vector<EssayRecord> parse_dataset(const std::string& text, const TopicRegistry& registry,
                                       const std::string& origin = "<memory>");

// Prepared-records file: normalized scores and grade classes, reloadable
// without the raw dataset. Text column last.
void save_records(const std::string& path, const std::vector<EssayRecord>& records);
std::vector<EssayRecord> load_records(const std::string& path, const TopicRegistry& registry);

// ---- splits ----

// Gold labels for the target topic, readable only through the metrics
// module; everything else sees the target as unlabeled.
class SealedGold {
public:
    SealedGold() = default;
    int size() const { return static_cast<int>(records_.size()); }

    void save_tsv(const std::string& path) const;
    static SealedGold load_tsv(const std::string& path, const TopicRegistry& registry);

private:
    friend class ctaes::metrics::Evaluator;
    friend SealedGold seal_records(std::vector<EssayRecord>);
    std::vector<EssayRecord> records_;
};

SealedGold seal_records(std::vector<EssayRecord> recs);

struct CrossTopicSplit {
    std::vector<std::vector<EssayRecord>> sources; // registry order, target excluded
    std::vector<int> source_topic_ids;
    std::vector<EssayRecord> target;               // labels stripped
    int target_topic_id = 0;
    SealedGold gold;

    int num_sources() const { return static_cast<int>(sources.size()); }
};

// Leave-one-topic-out: the target collection loses grade_class and scores;
// gold labels move into the sealed sidecar.
CrossTopicSplit make_cross_topic_split(const std::vector<EssayRecord>& records, int target_topic_id,
                                       const TopicRegistry& registry);

// Split manifest: essay_id, partition (source|target), topic_id.
void save_split_manifest(const std::string& path, const CrossTopicSplit& split);

} // namespace ctaes::corpus
