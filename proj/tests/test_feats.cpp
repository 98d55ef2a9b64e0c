#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ctaes/feats.hpp"
#include "testutil.hpp"

using namespace ctaes;
using namespace ctaes::feats;

namespace {
std::vector<std::string> toks(const std::string& text) {
    std::istringstream ss(text);
    std::vector<std::string> out;
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}
} // namespace

TEST_CASE("empty text yields the all-defaults vector") {
    Extractor ex(Lexicon::builtin());
    Mat f = ex.extract({});
    CHECK(f.cols == kFeatureDim);
    for (double v : f.a) CHECK(v == 0.0);
}

TEST_CASE("extraction is deterministic and finite") {
    Extractor ex(Lexicon::builtin());
    auto t = toks("The clear essay was excellent , but the ending felt abrupt .");
    Mat a = ex.extract(t);
    Mat b = ex.extract(t);
    CHECK(a.a == b.a);
    CHECK(a.all_finite());
    CHECK(a.cols == kFeatureDim);
}

TEST_CASE("sentiment counts come from the lexicon") {
    Extractor ex(Lexicon::builtin());
    Mat f = ex.extract(toks("excellent excellent poor"));
    CHECK(f.a[22] == doctest::Approx(2.0)); // positive_count
    CHECK(f.a[23] == doctest::Approx(1.0)); // negative_count
    CHECK(f.a[28] == doctest::Approx(1.0)); // unique_positive
}

// Regression fixture: a fixed 10-token sentence, values computed once by
// this extractor and frozen. Catches silent feature reorderings.
TEST_CASE("golden vector for the reference sentence") {
    Extractor ex(Lexicon::builtin());
    auto t = toks("The vivid story was clear and the ending felt awkward.");
    REQUIRE(t.size() == 10);
    Mat f = ex.extract(t);
    CHECK(f.a[0] == doctest::Approx(10).epsilon(1e-12));
    CHECK(f.a[1] == doctest::Approx(45).epsilon(1e-12));
    CHECK(f.a[2] == doctest::Approx(4.4000000000000004).epsilon(1e-12));
    CHECK(f.a[3] == doctest::Approx(1.3564659966250536).epsilon(1e-12));
    CHECK(f.a[4] == doctest::Approx(7).epsilon(1e-12));
    CHECK(f.a[5] == doctest::Approx(0.10000000000000001).epsilon(1e-12));
    CHECK(f.a[6] == doctest::Approx(0.40000000000000002).epsilon(1e-12));
    CHECK(f.a[7] == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.a[8] == doctest::Approx(10).epsilon(1e-12));
    CHECK(f.a[9] == doctest::Approx(2.3978952727983707).epsilon(1e-12));
    CHECK(f.a[10] == doctest::Approx(0).epsilon(1e-12));
    CHECK(f.a[11] == doctest::Approx(0.10000000000000001).epsilon(1e-12));
    CHECK(f.a[12] == doctest::Approx(14).epsilon(1e-12));
    CHECK(f.a[13] == doctest::Approx(1.3999999999999999).epsilon(1e-12));
    CHECK(f.a[14] == doctest::Approx(0).epsilon(1e-12));
    CHECK(f.a[15] == doctest::Approx(78.245000000000019).epsilon(1e-12));
    CHECK(f.a[16] == doctest::Approx(4.8300000000000018).epsilon(1e-12));
    CHECK(f.a[17] == doctest::Approx(4.7650000000000006).epsilon(1e-12));
    CHECK(f.a[18] == doctest::Approx(7.6999999999999993).epsilon(1e-12));
    CHECK(f.a[19] == doctest::Approx(45).epsilon(1e-12));
    CHECK(f.a[20] == doctest::Approx(0).epsilon(1e-12));
    CHECK(f.a[21] == doctest::Approx(0.59999999999999998).epsilon(1e-12));
    CHECK(f.a[22] == doctest::Approx(2).epsilon(1e-12));
    CHECK(f.a[23] == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.a[24] == doctest::Approx(0.20000000000000001).epsilon(1e-12));
    CHECK(f.a[25] == doctest::Approx(0.10000000000000001).epsilon(1e-12));
    CHECK(f.a[26] == doctest::Approx(0.10000000000000001).epsilon(1e-12));
    CHECK(f.a[27] == doctest::Approx(0.29999999999999999).epsilon(1e-12));
    CHECK(f.a[28] == doctest::Approx(2).epsilon(1e-12));
    CHECK(f.a[29] == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.a[30] == doctest::Approx(0.90000000000000002).epsilon(1e-12));
    CHECK(f.a[31] == doctest::Approx(2.8460498941515411).epsilon(1e-12));
    CHECK(f.a[32] == doctest::Approx(0.95424250943932487).epsilon(1e-12));
    CHECK(f.a[33] == doctest::Approx(2.0124611797498106).epsilon(1e-12));
    CHECK(f.a[34] == doctest::Approx(0.88888888888888884).epsilon(1e-12));
    CHECK(f.a[35] == doctest::Approx(0.1111111111111111).epsilon(1e-12));
    CHECK(f.a[36] == doctest::Approx(0.20000000000000001).epsilon(1e-12));
    CHECK(f.a[37] == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.a[38] == doctest::Approx(1).epsilon(1e-12));
    CHECK(f.a[39] == doctest::Approx(1.1111111111111112).epsilon(1e-12));
    CHECK(f.a[40] == doctest::Approx(200).epsilon(1e-12));
    CHECK(f.a[41] == doctest::Approx(2.1639556568820564).epsilon(1e-12));
    for (int i = 42; i < kFeatureDim; ++i) CHECK(f.a[i] == 0.0);
}

TEST_CASE("standardizer floors zero variance and centers the fit set") {
    Extractor ex(Lexicon::builtin());
    std::vector<Mat> same = {ex.extract(toks("one two three")), ex.extract(toks("one two three"))};
    auto s = Standardizer::fit(same);
    for (int j = 0; j < kFeatureDim; ++j) CHECK(s.std.a[j] == doctest::Approx(Standardizer::kStdFloor));

    // constant shift moves the mean, keeps the std
    std::vector<Mat> base, shifted;
    for (int i = 0; i < 5; ++i) {
        Mat m(1, kFeatureDim);
        for (int j = 0; j < kFeatureDim; ++j) m.a[j] = i * 0.5 + j * 0.01;
        base.push_back(m);
        for (auto& x : m.a) x += 3.0;
        shifted.push_back(m);
    }
    auto sb = Standardizer::fit(base);
    auto ss = Standardizer::fit(shifted);
    for (int j = 0; j < kFeatureDim; ++j) {
        CHECK(ss.mean.a[j] == doctest::Approx(sb.mean.a[j] + 3.0));
        CHECK(ss.std.a[j] == doctest::Approx(sb.std.a[j]));
    }

    // per-dimension mean of the standardized fit set is ~0, std ~1
    std::vector<Mat> varied;
    auto gen = seed_stream(5, "feats-test");
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 40; ++i) {
        Mat m(1, kFeatureDim);
        for (auto& x : m.a) x = u(gen);
        varied.push_back(m);
    }
    auto sv = Standardizer::fit(varied);
    std::vector<double> mean(kFeatureDim, 0.0), var(kFeatureDim, 0.0);
    for (const auto& m : varied) {
        Mat z = sv.apply(m);
        for (int j = 0; j < kFeatureDim; ++j) mean[j] += z.a[j];
    }
    for (auto& x : mean) x /= varied.size();
    for (const auto& m : varied) {
        Mat z = sv.apply(m);
        for (int j = 0; j < kFeatureDim; ++j) var[j] += (z.a[j] - mean[j]) * (z.a[j] - mean[j]);
    }
    for (int j = 0; j < kFeatureDim; ++j) {
        CHECK(std::fabs(mean[j]) < 1e-6);
        CHECK(std::fabs(std::sqrt(var[j] / varied.size()) - 1.0) < 1e-3);
    }
}

TEST_CASE("standardizer requires two essays") {
    CHECK_THROWS_AS(Standardizer::fit({}), ConfigError);
    CHECK_THROWS_AS(Standardizer::fit({Mat(1, kFeatureDim)}), ConfigError);
}

TEST_CASE("schema covers all 86 indices and matches the shipped manifest") {
    const auto& schema = feature_schema();
    REQUIRE(static_cast<int>(schema.size()) == kFeatureDim);
    for (int i = 0; i < kFeatureDim; ++i) CHECK(schema[i].index == i);
    CHECK(schema[0].name == "token_count");
    CHECK(schema[85].group == "padding");

    std::string src = testutil::env_or("CTAES_SOURCE_DIR", ".");
    std::ifstream in(src + "/data/feature_schema.json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    std::string file_text = ss.str();
    while (!file_text.empty() && (file_text.back() == '\n' || file_text.back() == '\r'))
        file_text.pop_back();
    CHECK(file_text == feature_schema_json());
}

TEST_CASE("shipped lexicon matches the builtin table") {
    std::string src = testutil::env_or("CTAES_SOURCE_DIR", ".");
    auto from_file = Lexicon::load(src + "/data/sentiment_lexicon.txt");
    CHECK(from_file.to_text() == Lexicon::builtin().to_text());
    CHECK(Lexicon::builtin().polarity("excellent") == 1);
    CHECK(Lexicon::builtin().polarity("awkward") == -1);
    CHECK(Lexicon::builtin().polarity("asteroid") == 0);
}
