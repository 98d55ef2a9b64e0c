#pragma once

#include <string>
#include <vector>

#include "ctaes/graph.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::pseudo {

// p_k^tau / sum_k p_k^tau. Uniform vectors are fixed points for every tau.
std::vector<double> sharpen(const std::vector<double>& p, double tau);

struct BankEntry {
    std::string essay_id;
    Mat feature; // 1 x width, EMA of h
    Mat soft;    // 1 x num_classes, EMA of sharpened classifier output
};

struct PseudoLabel {
    int grade = -1;
    std::vector<double> soft;
    std::vector<std::string> neighbor_ids; // top-k, nearest first
};

// Per-target-essay EMA feature and EMA soft label. Entries are created once
// at initialization and never added or removed during training; entry order
// is ascending essay_id, which also breaks exact similarity ties.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(double lambda, double tau) : lambda_(lambda), tau_(tau) {}

    // One entry per target essay from an initial forward pass; the sharpened
    // soft label is what gets stored.
    static MemoryBank init(const std::vector<std::string>& essay_ids, const std::vector<Mat>& features,
                           const std::vector<Mat>& class_probs, double lambda, double tau);

    // f <- lambda f + (1-lambda) f_new; p <- lambda p + (1-lambda) sharpen(p_new).
    void update(const std::string& essay_id, const Mat& f_new, const Mat& p_new);

    // Ranks the other entries by cosine similarity to h, averages the top-k
    // stored soft labels, argmax with ties toward the lower class index.
    PseudoLabel knn_pseudo_label(const Mat& h, const std::string& query_id, int k) const;

    int size() const { return static_cast<int>(entries_.size()); }
    const std::vector<BankEntry>& entries() const { return entries_; }
    double lambda() const { return lambda_; }
    double tau() const { return tau_; }

    // Checkpoint restore path; entries must already be in ascending id order.
    static MemoryBank restore(std::vector<BankEntry> entries, double lambda, double tau);

private:
    int index_of(const std::string& essay_id) const; // -1 if absent
    std::vector<BankEntry> entries_;
    double lambda_ = 0.9;
    double tau_ = 2.0;
};

// Batch sum of clamped negative log-probabilities at the pseudo classes,
// scaled by 1/total_target_count (full-set normalization, accumulated over
// the epoch batch by batch).
Graph::NodeId target_ce_loss(Graph& g, const std::vector<Graph::NodeId>& prob_rows,
                             const std::vector<int>& pseudo_labels, int total_target_count);

// Diagnostic dump: essay_id, pseudo class, soft label, top-k neighbor ids,
// one bank entry per row, tab separated.
void dump_bank_tsv(const MemoryBank& bank, int k, const std::string& path);

} // namespace ctaes::pseudo
