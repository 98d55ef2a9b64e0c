#pragma once

#include <string>
#include <vector>

#include "ctaes/corpus.hpp"
#include "ctaes/mat.hpp"

namespace ctaes::feats {

// Downstream dimensions assume exactly this feature width.
inline constexpr int kFeatureDim = 86;
inline constexpr const char* kSchemaVersion = "ctaes-feats-1";

struct FeatureSpec {
    std::string name;
    std::string group; // length | complexity | sentiment | variation | padding
    int index;
};

// Documented feature layout: real features first, zero padding up to 86.
const std::vector<FeatureSpec>& feature_schema();
std::string feature_schema_json();

// Word -> +1 / -1 polarity, matched case-insensitively.
class Lexicon {
public:
    static Lexicon load(const std::string& path);
    static const Lexicon& builtin(); // same content as the shipped file
    static Lexicon from_text(const std::string& text, const std::string& origin = "<memory>");

    int polarity(const std::string& lowercase_word) const; // +1, -1, or 0
    int size() const { return static_cast<int>(entries_.size()); }
    std::string to_text() const;

private:
    std::vector<std::pair<std::string, int>> entries_;
};

// Pure function of the token sequence: length statistics, readability
// indices, lexicon sentiment counts, lexical variation ratios.
class Extractor {
public:
    explicit Extractor(const Lexicon& lexicon) : lexicon_(&lexicon) {}
    Mat extract(const std::vector<std::string>& tokens) const; // 1 x 86

private:
    const Lexicon* lexicon_;
};

// Per-dimension z-scoring fit on source-topic essays only; std floored at
// 1e-8 so constant dimensions map to zero.
struct Standardizer {
    Mat mean; // 1 x 86
    Mat std;  // 1 x 86
    bool enabled = true;

    static constexpr double kStdFloor = 1e-8;

    static Standardizer fit(const std::vector<Mat>& source_features);
    static Standardizer disabled();
    Mat apply(const Mat& raw) const;
};

} // namespace ctaes::feats
