#include "ctaes/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace ctaes::corpus {

using nlohmann::json;

const std::array<std::string, kNumTraits>& trait_names() {
    static const std::array<std::string, kNumTraits> names = {
        "Holistic",        "Content",  "Organization", "WordChoice", "SentenceFluency",
        "Conventions",     "TopicAdherence", "Language", "Narrativity"};
    return names;
}

int trait_index(const std::string& name) {
    const auto& names = trait_names();
    for (int i = 0; i < kNumTraits; ++i)
        if (names[i] == name) return i;
    return -1;
}

std::string genre_name(Genre g) {
    switch (g) {
    case Genre::argumentative: return "argumentative";
    case Genre::source_dependent: return "source-dependent";
    case Genre::narrative: return "narrative";
    }
    return "argumentative";
}

Genre genre_from_name(const std::string& s) {
    if (s == "argumentative") return Genre::argumentative;
    if (s == "source-dependent") return Genre::source_dependent;
    if (s == "narrative") return Genre::narrative;
    throw RegistryError("unknown genre '" + s + "'");
}

std::vector<int> TopicSpec::present_traits() const {
    std::vector<int> out;
    for (int j = 0; j < kNumTraits; ++j)
        if (trait_set[j]) out.push_back(j);
    return out;
}

// ---- registry ----

TopicRegistry::TopicRegistry(std::vector<TopicSpec> topics) : topics_(std::move(topics)) {
    std::unordered_set<int> seen;
    for (const auto& t : topics_) {
        if (!seen.insert(t.topic_id).second)
            throw RegistryError("duplicate topic_id " + std::to_string(t.topic_id));
        if (!t.trait_set[0]) throw RegistryError("topic " + std::to_string(t.topic_id) + " lacks Holistic");
        for (int j = 0; j < kNumTraits; ++j) {
            if (!t.trait_set[j]) continue;
            if (t.ranges[j].max_raw <= t.ranges[j].min_raw)
                throw RegistryError("topic " + std::to_string(t.topic_id) + " trait " + trait_names()[j] +
                                    ": max_raw must exceed min_raw");
        }
        if (t.max_len <= 0)
            throw RegistryError("topic " + std::to_string(t.topic_id) + ": max_len must be positive");
    }
    if (topics_.empty()) throw RegistryError("registry has no topics");
}

const TopicSpec& TopicRegistry::by_id(int topic_id) const {
    for (const auto& t : topics_)
        if (t.topic_id == topic_id) return t;
    throw RegistryError("unknown topic_id " + std::to_string(topic_id));
}

int TopicRegistry::slot_of(int topic_id) const {
    for (int i = 0; i < num_topics(); ++i)
        if (topics_[i].topic_id == topic_id) return i;
    throw RegistryError("unknown topic_id " + std::to_string(topic_id));
}

bool TopicRegistry::contains(int topic_id) const {
    for (const auto& t : topics_)
        if (t.topic_id == topic_id) return true;
    return false;
}

std::string TopicRegistry::to_json() const {
    json out;
    out["schema_version"] = "ctaes-registry-1";
    out["topics"] = json::array();
    for (const auto& t : topics_) {
        json jt;
        jt["topic_id"] = t.topic_id;
        jt["genre"] = genre_name(t.genre);
        jt["max_len"] = t.max_len;
        jt["score_min"] = t.ranges[0].min_raw;
        jt["score_max"] = t.ranges[0].max_raw;
        json traits = json::array();
        for (int j = 1; j < kNumTraits; ++j)
            if (t.trait_set[j]) traits.push_back(trait_names()[j]);
        jt["traits"] = traits;
        json overrides = json::object();
        for (int j = 0; j < kNumTraits; ++j) {
            if (!t.trait_set[j]) continue;
            if (t.ranges[j].min_raw != t.ranges[0].min_raw || t.ranges[j].max_raw != t.ranges[0].max_raw)
                overrides[trait_names()[j]] = {t.ranges[j].min_raw, t.ranges[j].max_raw};
        }
        if (!overrides.empty()) jt["trait_ranges"] = overrides;
        out["topics"].push_back(jt);
    }
    return out.dump(2);
}

TopicRegistry TopicRegistry::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw RegistryError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.contains("schema_version") || doc["schema_version"] != "ctaes-registry-1")
        throw RegistryError("missing or unsupported schema_version (expected ctaes-registry-1)");
    if (!doc.contains("topics") || !doc["topics"].is_array())
        throw RegistryError("missing topics array");

    static const std::set<std::string> known_keys = {"topic_id", "genre",     "traits",
                                                     "score_min", "score_max", "max_len",
                                                     "trait_ranges"};
    std::vector<TopicSpec> topics;
    for (const auto& jt : doc["topics"]) {
        for (auto it = jt.begin(); it != jt.end(); ++it)
            if (!known_keys.count(it.key()))
                throw RegistryError("unknown topic key '" + it.key() + "'");
        TopicSpec t;
        t.topic_id = jt.at("topic_id").get<int>();
        t.genre = genre_from_name(jt.at("genre").get<std::string>());
        t.max_len = jt.value("max_len", 512);
        ScoreRange base{jt.at("score_min").get<int>(), jt.at("score_max").get<int>()};
        t.trait_set[0] = true;
        for (const auto& name : jt.at("traits")) {
            int j = trait_index(name.get<std::string>());
            if (j < 0) throw RegistryError("unknown trait '" + name.get<std::string>() + "'");
            t.trait_set[j] = true;
        }
        // One range per topic unless a per-trait override is supplied. The
        // source material gives a single range per topic; overrides exist
        // for datasets that score traits on their own scales.
        for (int j = 0; j < kNumTraits; ++j) t.ranges[j] = base;
        if (jt.contains("trait_ranges")) {
            for (auto it = jt["trait_ranges"].begin(); it != jt["trait_ranges"].end(); ++it) {
                int j = trait_index(it.key());
                if (j < 0) throw RegistryError("unknown trait '" + it.key() + "' in trait_ranges");
                t.ranges[j] = ScoreRange{it.value()[0].get<int>(), it.value()[1].get<int>()};
            }
        }
        topics.push_back(t);
    }
    return TopicRegistry(std::move(topics));
}

TopicRegistry TopicRegistry::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open registry file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void TopicRegistry::save_json(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write registry file " + path);
    out << to_json() << "\n";
}

TopicRegistry builtin_asap_registry() {
    struct Row {
        int id;
        Genre genre;
        std::vector<std::string> traits;
        int len;
        int lo, hi;
    };
    static const std::vector<Row> rows = {
        {1, Genre::argumentative, {"Content", "Organization", "WordChoice", "SentenceFluency", "Conventions"}, 350, 2, 12},
        {2, Genre::argumentative, {"Content", "Organization", "WordChoice", "SentenceFluency", "Conventions"}, 350, 1, 6},
        {3, Genre::source_dependent, {"Content", "TopicAdherence", "Language", "Narrativity"}, 150, 0, 3},
        {4, Genre::source_dependent, {"Content", "TopicAdherence", "Language", "Narrativity"}, 150, 0, 3},
        {5, Genre::source_dependent, {"Content", "TopicAdherence", "Language", "Narrativity"}, 150, 0, 4},
        {6, Genre::source_dependent, {"Content", "TopicAdherence", "Language", "Narrativity"}, 150, 0, 4},
        {7, Genre::narrative, {"Content", "Organization", "Conventions"}, 250, 0, 30},
        {8, Genre::narrative, {"Content", "Organization", "WordChoice", "SentenceFluency", "Conventions"}, 650, 0, 60},
    };
    std::vector<TopicSpec> topics;
    for (const auto& r : rows) {
        TopicSpec t;
        t.topic_id = r.id;
        t.genre = r.genre;
        t.max_len = r.len;
        t.trait_set[0] = true;
        for (const auto& name : r.traits) t.trait_set[trait_index(name)] = true;
        for (int j = 0; j < kNumTraits; ++j) t.ranges[j] = ScoreRange{r.lo, r.hi};
        topics.push_back(t);
    }
    return TopicRegistry(std::move(topics));
}

// ---- score transforms ----

double normalize_score(int raw, ScoreRange range) {
    if (range.max_raw <= range.min_raw) throw RangeError("degenerate score range");
    if (raw < range.min_raw || raw > range.max_raw)
        throw RangeError("raw score " + std::to_string(raw) + " outside [" + std::to_string(range.min_raw) +
                         ", " + std::to_string(range.max_raw) + "]");
    return static_cast<double>(raw - range.min_raw) / (range.max_raw - range.min_raw);
}

int denormalize_score(double unit, ScoreRange range) {
    if (range.max_raw <= range.min_raw) throw RangeError("degenerate score range");
    double raw = unit * (range.max_raw - range.min_raw) + range.min_raw;
    int rounded = static_cast<int>(std::llround(raw)); // half away from zero
    return std::clamp(rounded, range.min_raw, range.max_raw);
}

int score_to_class(double unit) {
    if (unit < 0.0 || unit > 1.0) throw RangeError("unit score outside [0, 1]");
    if (unit < 0.4) return 0;
    if (unit < 0.6) return 1;
    if (unit < 0.8) return 2;
    return 3;
}

// ---- TSV parsing ----

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
    return cells;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    return tokens;
}

int parse_int(const std::string& s, int line_no, const std::string& what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" + s + "'");
    }
}

std::vector<std::string> read_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t pos = text.find('\n', start);
        if (pos == std::string::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return lines;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::vector<EssayRecord> parse_dataset(const std::string& text, const TopicRegistry& registry,
                                       const std::string& origin) {
    auto lines = read_lines(text);
    if (lines.empty()) throw ParseError(origin + ": empty dataset");

    auto header = split_tabs(lines[0]);
    const int expected_cols = 3 + kNumTraits;
    if (static_cast<int>(header.size()) != expected_cols)
        throw ParseError(origin + " line 1: header must have " + std::to_string(expected_cols) +
                         " columns (essay_id, topic_id, essay, traits...), found " +
                         std::to_string(header.size()));
    for (int j = 0; j < kNumTraits; ++j)
        if (header[3 + j] != trait_names()[j])
            throw ParseError(origin + " line 1: trait column " + std::to_string(3 + j + 1) + " must be '" +
                             trait_names()[j] + "', found '" + header[3 + j] + "'");

    std::vector<EssayRecord> records;
    std::unordered_set<std::string> seen_ids;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li] == "\r") continue;
        int line_no = static_cast<int>(li) + 1;
        auto cells = split_tabs(lines[li]);
        if (static_cast<int>(cells.size()) != expected_cols)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected_cols) + " columns, found " + std::to_string(cells.size()));

        EssayRecord rec;
        rec.essay_id = cells[0];
        if (rec.essay_id.empty())
            throw ParseError(origin + " line " + std::to_string(line_no) + ": empty essay_id");
        if (!seen_ids.insert(rec.essay_id).second)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": duplicate essay_id '" +
                             rec.essay_id + "'");
        rec.topic_id = parse_int(cells[1], line_no, "topic_id");
        if (!registry.contains(rec.topic_id))
            throw RegistryError("line " + std::to_string(line_no) + ": unknown topic_id " +
                                std::to_string(rec.topic_id));
        const TopicSpec& spec = registry.by_id(rec.topic_id);
        rec.tokens = tokenize(cells[2]);

        for (int j = 0; j < kNumTraits; ++j) {
            const std::string& cell = cells[3 + j];
            if (cell.empty()) continue;
            if (!spec.trait_set[j])
                throw ParseError(origin + " line " + std::to_string(line_no) + ": score given for trait " +
                                 trait_names()[j] + " which topic " + std::to_string(rec.topic_id) +
                                 " does not declare");
            int raw = parse_int(cell, line_no, "score for " + trait_names()[j]);
            try {
                rec.unit_scores[j] = normalize_score(raw, spec.ranges[j]);
            } catch (const RangeError& e) {
                throw RangeError("line " + std::to_string(line_no) + ": " + e.what());
            }
            rec.raw_scores[j] = raw;
            rec.trait_mask[j] = true;
        }
        if (rec.trait_mask[0]) rec.grade_class = score_to_class(rec.unit_scores[0]);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<EssayRecord> load_dataset(const std::string& path, const TopicRegistry& registry) {
    return parse_dataset(read_file(path), registry, path);
}

// ---- prepared records ----

void save_records(const std::string& path, const std::vector<EssayRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    out << "essay_id\ttopic_id\tgrade_class";
    for (int j = 0; j < kNumTraits; ++j) out << "\traw_" << trait_names()[j];
    for (int j = 0; j < kNumTraits; ++j) out << "\tunit_" << trait_names()[j];
    out << "\ttext\n";
    char buf[64];
    for (const auto& r : records) {
        out << r.essay_id << '\t' << r.topic_id << '\t';
        if (r.grade_class >= 0) out << r.grade_class;
        for (int j = 0; j < kNumTraits; ++j) {
            out << '\t';
            if (r.trait_mask[j]) out << r.raw_scores[j];
        }
        for (int j = 0; j < kNumTraits; ++j) {
            out << '\t';
            if (r.trait_mask[j]) {
                std::snprintf(buf, sizeof buf, "%.17g", r.unit_scores[j]);
                out << buf;
            }
        }
        out << '\t';
        for (std::size_t i = 0; i < r.tokens.size(); ++i) {
            if (i) out << ' ';
            out << r.tokens[i];
        }
        out << '\n';
    }
}

std::vector<EssayRecord> load_records(const std::string& path, const TopicRegistry& registry) {
    std::string text = read_file(path);
    auto lines = read_lines(text);
    if (lines.empty()) throw ParseError(path + ": empty records file");
    const int expected_cols = 3 + 2 * kNumTraits + 1;
    std::vector<EssayRecord> records;
    std::unordered_set<std::string> seen_ids;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty() || lines[li] == "\r") continue;
        int line_no = static_cast<int>(li) + 1;
        auto cells = split_tabs(lines[li]);
        if (static_cast<int>(cells.size()) != expected_cols)
            throw ParseError(path + " line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected_cols) + " columns, found " + std::to_string(cells.size()));
        EssayRecord rec;
        rec.essay_id = cells[0];
        if (!seen_ids.insert(rec.essay_id).second)
            throw ParseError(path + " line " + std::to_string(line_no) + ": duplicate essay_id '" +
                             rec.essay_id + "'");
        rec.topic_id = parse_int(cells[1], line_no, "topic_id");
        if (!registry.contains(rec.topic_id))
            throw RegistryError("line " + std::to_string(line_no) + ": unknown topic_id " +
                                std::to_string(rec.topic_id));
        rec.grade_class = cells[2].empty() ? -1 : parse_int(cells[2], line_no, "grade_class");
        for (int j = 0; j < kNumTraits; ++j) {
            const std::string& raw_cell = cells[3 + j];
            const std::string& unit_cell = cells[3 + kNumTraits + j];
            if (raw_cell.empty() != unit_cell.empty())
                throw ParseError(path + " line " + std::to_string(line_no) +
                                 ": raw/unit presence mismatch for " + trait_names()[j]);
            if (raw_cell.empty()) continue;
            rec.raw_scores[j] = parse_int(raw_cell, line_no, "raw score");
            rec.unit_scores[j] = std::stod(unit_cell);
            rec.trait_mask[j] = true;
        }
        rec.tokens = tokenize(cells.back());
        records.push_back(std::move(rec));
    }
    return records;
}

// ---- splits ----

SealedGold seal_records(std::vector<EssayRecord> recs) {
    SealedGold g;
    g.records_ = std::move(recs);
    return g;
}

void SealedGold::save_tsv(const std::string& path) const { save_records(path, records_); }

SealedGold SealedGold::load_tsv(const std::string& path, const TopicRegistry& registry) {
    return seal_records(load_records(path, registry));
}

CrossTopicSplit make_cross_topic_split(const std::vector<EssayRecord>& records, int target_topic_id,
                                       const TopicRegistry& registry) {
    if (!registry.contains(target_topic_id))
        throw RegistryError("unknown target topic_id " + std::to_string(target_topic_id));
    bool target_present = false;
    for (const auto& r : records)
        if (r.topic_id == target_topic_id) {
            target_present = true;
            break;
        }
    if (!target_present)
        throw RegistryError("target topic " + std::to_string(target_topic_id) + " has no essays");

    CrossTopicSplit split;
    split.target_topic_id = target_topic_id;
    std::vector<EssayRecord> gold_records;
    for (const auto& spec : registry.topics()) {
        std::vector<EssayRecord> bucket;
        for (const auto& r : records)
            if (r.topic_id == spec.topic_id) bucket.push_back(r);
        if (bucket.empty()) continue;
        if (spec.topic_id == target_topic_id) {
            for (auto rec : bucket) {
                gold_records.push_back(rec);
                rec.grade_class = -1;
                rec.trait_mask = {};
                rec.raw_scores = {};
                rec.unit_scores = {};
                split.target.push_back(std::move(rec));
            }
        } else {
            split.source_topic_ids.push_back(spec.topic_id);
            split.sources.push_back(std::move(bucket));
        }
    }
    if (split.sources.empty())
        throw ConfigError("cross-topic split needs at least one source topic besides target " +
                          std::to_string(target_topic_id));
    split.gold = seal_records(std::move(gold_records));
    return split;
}

void save_split_manifest(const std::string& path, const CrossTopicSplit& split) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    out << "essay_id\tpartition\ttopic_id\n";
    for (const auto& bucket : split.sources)
        for (const auto& r : bucket) out << r.essay_id << "\tsource\t" << r.topic_id << "\n";
    for (const auto& r : split.target) out << r.essay_id << "\ttarget\t" << r.topic_id << "\n";
}

} // namespace ctaes::corpus
