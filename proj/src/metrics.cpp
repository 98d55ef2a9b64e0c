#include "ctaes/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ctaes/errors.hpp"

namespace ctaes::metrics {

double qwk(const std::vector<int>& pred, const std::vector<int>& gold, int min_rating, int max_rating) {
    if (pred.size() != gold.size() || pred.empty())
        throw ContractError("qwk: vectors must be non-empty and of equal length");
    if (max_rating < min_rating) throw ContractError("qwk: bad rating range");
    const int R = max_rating - min_rating + 1;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < min_rating || pred[i] > max_rating || gold[i] < min_rating || gold[i] > max_rating)
            throw ContractError("qwk: rating outside declared range");
    }
    if (R == 1) return 1.0; // single possible rating: total agreement

    std::vector<double> O(static_cast<std::size_t>(R) * R, 0.0);
    std::vector<double> pred_marg(R, 0.0), gold_marg(R, 0.0);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        int i = pred[t] - min_rating;
        int j = gold[t] - min_rating;
        O[static_cast<std::size_t>(i) * R + j] += 1.0;
        pred_marg[i] += 1.0;
        gold_marg[j] += 1.0;
    }
    const double total = static_cast<double>(pred.size());
    const double denom_w = static_cast<double>(R - 1) * (R - 1);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < R; ++j) {
            double w = static_cast<double>(i - j) * (i - j) / denom_w;
            num += w * O[static_cast<std::size_t>(i) * R + j];
            den += w * pred_marg[i] * gold_marg[j] / total;
        }
    }
    if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
    return 1.0 - num / den;
}

double TopicReport::trait_qwk(int trait) const {
    for (const auto& c : cells)
        if (c.trait == trait) return c.qwk;
    return std::numeric_limits<double>::quiet_NaN();
}

void Report::finalize() {
    trait_avg.fill(0.0);
    trait_topic_count.fill(0);
    grand_avg = 0.0;
    for (const auto& t : topics) {
        grand_avg += t.avg_qwk;
        for (const auto& c : t.cells) {
            trait_avg[c.trait] += c.qwk;
            trait_topic_count[c.trait] += 1;
        }
    }
    if (!topics.empty()) grand_avg /= static_cast<double>(topics.size());
    int occupied = 0;
    grand_trait_avg = 0.0;
    for (int j = 0; j < corpus::kNumTraits; ++j) {
        if (trait_topic_count[j] > 0) {
            trait_avg[j] /= trait_topic_count[j];
            grand_trait_avg += trait_avg[j];
            ++occupied;
        }
    }
    if (occupied > 0) grand_trait_avg /= occupied;
}

namespace {

std::vector<std::vector<std::string>> report_cells(const Report& r) {
    char buf[32];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header = {"topic"};
    for (int j = 0; j < corpus::kNumTraits; ++j) header.push_back(corpus::trait_names()[j]);
    header.insert(header.end(), {"avg", "clf_acc", "clf_qwk"});
    rows.push_back(std::move(header));
    for (const auto& t : r.topics) {
        std::vector<std::string> row = {std::to_string(t.topic_id)};
        for (int j = 0; j < corpus::kNumTraits; ++j) {
            double v = t.trait_qwk(j);
            row.push_back(std::isnan(v) ? std::string("-") : fmt(v));
        }
        row.push_back(fmt(t.avg_qwk));
        row.push_back(fmt(t.classification_accuracy));
        row.push_back(fmt(t.class_qwk));
        rows.push_back(std::move(row));
    }
    if (r.topics.size() > 1) {
        std::vector<std::string> row = {"avg"};
        for (int j = 0; j < corpus::kNumTraits; ++j)
            row.push_back(r.trait_topic_count[j] > 0 ? fmt(r.trait_avg[j]) : std::string("-"));
        row.push_back(fmt(r.grand_avg));
        row.push_back("-");
        row.push_back("-");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::string Report::to_text() const {
    auto rows = report_cells(*this);
    std::vector<std::size_t> width(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            out << row[c] << std::string(width[c] - row[c].size(), ' ');
        }
        out << '\n';
    }
    return out.str();
}

std::string Report::to_tsv() const {
    auto rows = report_cells(*this);
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << '\t';
            out << row[c];
        }
        out << '\n';
    }
    return out.str();
}

namespace {

struct TargetPredictions {
    std::vector<std::string> essay_ids;
    std::vector<std::array<double, corpus::kNumTraits>> unit_preds;
    std::vector<int> class_preds;
};

TargetPredictions predict_target(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                                 const corpus::TopicRegistry& registry) {
    const auto& spec = registry.by_id(split.target_topic_id);
    int slot = registry.slot_of(split.target_topic_id);
    TargetPredictions out;
    for (const auto& rec : split.target) {
        auto pred = model::predict_record(bundle, rec, slot, spec.max_len);
        out.essay_ids.push_back(rec.essay_id);
        out.unit_preds.push_back(pred.unit_scores);
        int cls = 0;
        for (std::size_t c = 1; c < pred.class_probs.size(); ++c)
            if (pred.class_probs[c] > pred.class_probs[cls]) cls = static_cast<int>(c);
        out.class_preds.push_back(cls);
    }
    return out;
}

TopicReport report_from_predictions(const TargetPredictions& preds,
                                    const std::vector<corpus::EssayRecord>& gold,
                                    const corpus::TopicSpec& spec) {
    std::unordered_map<std::string, const corpus::EssayRecord*> gold_by_id;
    for (const auto& r : gold) gold_by_id[r.essay_id] = &r;

    TopicReport report;
    report.topic_id = spec.topic_id;
    report.num_essays = static_cast<int>(preds.essay_ids.size());

    std::vector<int> class_pred, class_gold;
    for (std::size_t i = 0; i < preds.essay_ids.size(); ++i) {
        auto it = gold_by_id.find(preds.essay_ids[i]);
        if (it == gold_by_id.end())
            throw VersionError("gold sidecar missing essay " + preds.essay_ids[i]);
        if (it->second->grade_class >= 0) {
            class_pred.push_back(preds.class_preds[i]);
            class_gold.push_back(it->second->grade_class);
        }
    }

    for (int j = 0; j < corpus::kNumTraits; ++j) {
        if (!spec.trait_set[j]) continue;
        std::vector<int> p, t;
        for (std::size_t i = 0; i < preds.essay_ids.size(); ++i) {
            const auto* g = gold_by_id.at(preds.essay_ids[i]);
            if (!g->trait_mask[j]) continue;
            p.push_back(corpus::denormalize_score(preds.unit_preds[i][j], spec.ranges[j]));
            t.push_back(g->raw_scores[j]);
        }
        if (p.empty()) continue;
        TraitCell cell;
        cell.trait = j;
        cell.count = static_cast<int>(p.size());
        cell.qwk = qwk(p, t, spec.ranges[j].min_raw, spec.ranges[j].max_raw);
        report.cells.push_back(cell);
    }
    if (report.cells.empty()) throw ContractError("evaluate: gold sidecar has no scored traits");
    double s = 0.0;
    for (const auto& c : report.cells) s += c.qwk;
    report.avg_qwk = s / report.cells.size();

    if (!class_gold.empty()) {
        int correct = 0;
        for (std::size_t i = 0; i < class_gold.size(); ++i)
            if (class_gold[i] == class_pred[i]) ++correct;
        report.classification_accuracy = static_cast<double>(correct) / class_gold.size();
        report.class_qwk = qwk(class_pred, class_gold, 0, corpus::kNumGrades - 1);
    }
    return report;
}

} // namespace

TopicReport Evaluator::evaluate(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                                const corpus::TopicRegistry& registry) {
    if (split.gold.size() == 0)
        throw FileError("evaluation unavailable: sealed gold sidecar is empty or missing");
    auto preds = predict_target(bundle, split, registry);
    return report_from_predictions(preds, split.gold.records_, registry.by_id(split.target_topic_id));
}

double Evaluator::average_target_qwk(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                                     const corpus::TopicRegistry& registry) {
    return evaluate(bundle, split, registry).avg_qwk;
}

double Evaluator::average_source_qwk(const model::ModelBundle& bundle,
                                     const std::vector<corpus::EssayRecord>& held_out,
                                     const corpus::TopicRegistry& registry) {
    if (held_out.empty()) throw ContractError("average_source_qwk: empty validation set");
    // Group by topic, score each group against its own labels.
    std::unordered_map<int, std::vector<const corpus::EssayRecord*>> by_topic;
    for (const auto& r : held_out) by_topic[r.topic_id].push_back(&r);
    double total = 0.0;
    int groups = 0;
    for (const auto& [topic_id, recs] : by_topic) {
        const auto& spec = registry.by_id(topic_id);
        int slot = registry.slot_of(topic_id);
        std::vector<std::vector<int>> pred(corpus::kNumTraits), gold(corpus::kNumTraits);
        for (const auto* rec : recs) {
            auto p = model::predict_record(bundle, *rec, slot, spec.max_len);
            for (int j = 0; j < corpus::kNumTraits; ++j) {
                if (!rec->trait_mask[j]) continue;
                pred[j].push_back(corpus::denormalize_score(p.unit_scores[j], spec.ranges[j]));
                gold[j].push_back(rec->raw_scores[j]);
            }
        }
        double s = 0.0;
        int cells = 0;
        for (int j = 0; j < corpus::kNumTraits; ++j) {
            if (pred[j].empty()) continue;
            s += qwk(pred[j], gold[j], spec.ranges[j].min_raw, spec.ranges[j].max_raw);
            ++cells;
        }
        if (cells > 0) {
            total += s / cells;
            ++groups;
        }
    }
    if (groups == 0) throw ContractError("average_source_qwk: no scored traits in validation set");
    return total / groups;
}

void dump_embeddings(const model::ModelBundle& bundle, const corpus::CrossTopicSplit& split,
                     const corpus::TopicRegistry& registry, const std::string& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw FileError("cannot write " + out_path);
    const int width = bundle.params.dims.h_width();
    out << "essay_id\ttopic_id\tis_target";
    for (int j = 0; j < width; ++j) out << "\tf" << j;
    out << '\n';
    char buf[64];
    auto write_rec = [&](const corpus::EssayRecord& rec, bool is_target) {
        const auto& spec = registry.by_id(rec.topic_id);
        auto pred = model::predict_record(bundle, rec, registry.slot_of(rec.topic_id), spec.max_len);
        out << rec.essay_id << '\t' << rec.topic_id << '\t' << (is_target ? 1 : 0);
        for (int j = 0; j < width; ++j) {
            std::snprintf(buf, sizeof buf, "%.10g", pred.h.a[j]);
            out << '\t' << buf;
        }
        out << '\n';
    };
    for (const auto& bucket : split.sources)
        for (const auto& rec : bucket) write_rec(rec, false);
    for (const auto& rec : split.target) write_rec(rec, true);
}

} // namespace ctaes::metrics
