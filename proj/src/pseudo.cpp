#include "ctaes/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ctaes/errors.hpp"

namespace ctaes::pseudo {

std::vector<double> sharpen(const std::vector<double>& p, double tau) {
    if (tau <= 0.0) throw ContractError("sharpen: temperature must be positive");
    double z = 0.0;
    std::vector<double> out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] < 0.0) throw ContractError("sharpen: negative probability");
        out[k] = std::pow(p[k], tau);
        z += out[k];
    }
    if (z <= 0.0) throw ContractError("sharpen: all-zero probability vector");
    for (auto& x : out) x /= z;
    return out;
}

namespace {

Mat sharpen_row(const Mat& p, double tau) {
    std::vector<double> v(p.a.begin(), p.a.end());
    return Mat::row(sharpen(v, tau));
}

} // namespace

MemoryBank MemoryBank::init(const std::vector<std::string>& essay_ids, const std::vector<Mat>& features,
                            const std::vector<Mat>& class_probs, double lambda, double tau) {
    if (essay_ids.empty()) throw ConfigError("memory bank init: empty target set");
    if (essay_ids.size() != features.size() || essay_ids.size() != class_probs.size())
        throw ContractError("memory bank init: id/feature/probability count mismatch");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("memory bank: lambda must be in [0, 1]");

    MemoryBank bank(lambda, tau);
    bank.entries_.reserve(essay_ids.size());
    for (std::size_t i = 0; i < essay_ids.size(); ++i)
        bank.entries_.push_back({essay_ids[i], features[i], sharpen_row(class_probs[i], tau)});
    std::sort(bank.entries_.begin(), bank.entries_.end(),
              [](const BankEntry& a, const BankEntry& b) { return a.essay_id < b.essay_id; });
    for (std::size_t i = 1; i < bank.entries_.size(); ++i)
        if (bank.entries_[i].essay_id == bank.entries_[i - 1].essay_id)
            throw ContractError("memory bank init: duplicate essay_id " + bank.entries_[i].essay_id);
    return bank;
}

MemoryBank MemoryBank::restore(std::vector<BankEntry> entries, double lambda, double tau) {
    MemoryBank bank(lambda, tau);
    bank.entries_ = std::move(entries);
    return bank;
}

int MemoryBank::index_of(const std::string& essay_id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), essay_id,
                               [](const BankEntry& e, const std::string& k) { return e.essay_id < k; });
    if (it == entries_.end() || it->essay_id != essay_id) return -1;
    return static_cast<int>(it - entries_.begin());
}

void MemoryBank::update(const std::string& essay_id, const Mat& f_new, const Mat& p_new) {
    int idx = index_of(essay_id);
    if (idx < 0) throw ContractError("memory bank update: unknown essay_id " + essay_id);
    BankEntry& e = entries_[idx];
    if (!e.feature.same_shape(f_new) || !e.soft.same_shape(p_new))
        throw ContractError("memory bank update: shape mismatch");
    Mat sharpened = sharpen_row(p_new, tau_);
    for (int i = 0; i < e.feature.size(); ++i)
        e.feature.a[i] = lambda_ * e.feature.a[i] + (1.0 - lambda_) * f_new.a[i];
    for (int i = 0; i < e.soft.size(); ++i)
        e.soft.a[i] = lambda_ * e.soft.a[i] + (1.0 - lambda_) * sharpened.a[i];
}

PseudoLabel MemoryBank::knn_pseudo_label(const Mat& h, const std::string& query_id, int k) const {
    if (k < 1) throw ContractError("knn_pseudo_label: k must be >= 1");
    int own = index_of(query_id);
    int available = size() - (own >= 0 ? 1 : 0);
    if (available < k)
        throw ContractError("knn_pseudo_label: k=" + std::to_string(k) + " exceeds " +
                            std::to_string(available) + " available neighbors");

    // (similarity, entry index); exact ties resolve to the lower index,
    // i.e. the lexicographically smaller essay_id.
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(entries_.size());
    for (int i = 0; i < size(); ++i) {
        if (i == own) continue;
        ranked.emplace_back(cosine_similarity(h, entries_[i].feature), i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const int num_classes = entries_.front().soft.cols;
    PseudoLabel out;
    out.soft.assign(num_classes, 0.0);
    for (int r = 0; r < k; ++r) {
        const BankEntry& e = entries_[ranked[r].second];
        out.neighbor_ids.push_back(e.essay_id);
        for (int c = 0; c < num_classes; ++c) out.soft[c] += e.soft.a[c];
    }
    for (auto& x : out.soft) x /= k;
    out.grade = 0;
    for (int c = 1; c < num_classes; ++c)
        if (out.soft[c] > out.soft[out.grade]) out.grade = c; // ties keep the lower class
    return out;
}

void dump_bank_tsv(const MemoryBank& bank, int k, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    const int num_classes = bank.size() > 0 ? bank.entries().front().soft.cols : 0;
    out << "essay_id\tpseudo_class";
    for (int c = 0; c < num_classes; ++c) out << "\tsoft_" << c;
    out << "\tneighbors\n";
    char buf[64];
    for (const auto& e : bank.entries()) {
        auto pl = bank.knn_pseudo_label(e.feature, e.essay_id, k);
        out << e.essay_id << '\t' << pl.grade;
        for (double v : pl.soft) {
            std::snprintf(buf, sizeof buf, "%.10g", v);
            out << '\t' << buf;
        }
        out << '\t';
        for (std::size_t i = 0; i < pl.neighbor_ids.size(); ++i) {
            if (i) out << ',';
            out << pl.neighbor_ids[i];
        }
        out << '\n';
    }
}

Graph::NodeId target_ce_loss(Graph& g, const std::vector<Graph::NodeId>& prob_rows,
                             const std::vector<int>& pseudo_labels, int total_target_count) {
    if (prob_rows.size() != pseudo_labels.size())
        throw ContractError("target_ce_loss: batch/label size mismatch");
    if (total_target_count < 1) throw ContractError("target_ce_loss: empty target set");
    std::vector<Graph::NodeId> nlls;
    nlls.reserve(prob_rows.size());
    for (std::size_t i = 0; i < prob_rows.size(); ++i) {
        const Mat& probs = g.value(prob_rows[i]);
        if (pseudo_labels[i] < 0 || pseudo_labels[i] >= probs.cols)
            throw ContractError("target_ce_loss: pseudo label outside class range");
        Graph::NodeId p = g.entry(prob_rows[i], 0, pseudo_labels[i]);
        nlls.push_back(g.scale(g.log_clamped(p), -1.0));
    }
    if (nlls.empty()) return g.constant(Mat(1, 1));
    return g.scale(g.sum(g.concat_cols_many(nlls)), 1.0 / total_target_count);
}

} // namespace ctaes::pseudo
