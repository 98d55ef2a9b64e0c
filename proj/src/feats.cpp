#include "ctaes/feats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctaes/errors.hpp"

namespace ctaes::feats {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string clean_word(const std::string& token) {
    std::size_t b = 0, e = token.size();
    while (b < e && !is_word_char(token[b])) ++b;
    while (e > b && !is_word_char(token[e - 1])) --e;
    std::string out = token.substr(b, e - b);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}


bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; }

// Vowel-group heuristic; every word with letters counts at least one.
int syllables(const std::string& clean) {
    int n = 0;
    bool in_group = false;
    for (char c : clean) {
        if (is_vowel(c)) {
            if (!in_group) ++n;
            in_group = true;
        } else {
            in_group = false;
        }
    }
    if (n == 0 && !clean.empty()) n = 1;
    return n;
}

bool ends_sentence(const std::string& token) {
    if (token.empty()) return false;
    char c = token.back();
    return c == '.' || c == '!' || c == '?';
}

const char* kBuiltinLexicon =
    "good\t1\ngreat\t1\nexcellent\t1\nclear\t1\ncoherent\t1\nvivid\t1\nprecise\t1\nengaging\t1\n"
    "strong\t1\neffective\t1\ncompelling\t1\nthoughtful\t1\ninsightful\t1\nfluent\t1\nelegant\t1\n"
    "organized\t1\npersuasive\t1\neloquent\t1\npolished\t1\ncreative\t1\nskillful\t1\narticulate\t1\n"
    "convincing\t1\nfocused\t1\nrich\t1\nlively\t1\naccurate\t1\ngraceful\t1\ncrisp\t1\nmasterful\t1\n"
    "bad\t-1\npoor\t-1\nunclear\t-1\nawkward\t-1\nrepetitive\t-1\nvague\t-1\nclumsy\t-1\nweak\t-1\n"
    "confusing\t-1\ndisorganized\t-1\ndull\t-1\nchoppy\t-1\nsloppy\t-1\nrambling\t-1\nincoherent\t-1\n"
    "flawed\t-1\nboring\t-1\nmessy\t-1\nshallow\t-1\nwordy\t-1\nstilted\t-1\nerratic\t-1\nmuddled\t-1\n"
    "simplistic\t-1\ncareless\t-1\ntedious\t-1\njumbled\t-1\nabrupt\t-1\nfaulty\t-1\nbland\t-1\n";

std::vector<FeatureSpec> build_schema() {
    std::vector<FeatureSpec> s;
    auto put = [&s](const char* name, const char* group) {
        s.push_back({name, group, static_cast<int>(s.size())});
    };
    // length statistics
    put("token_count", "length");
    put("char_count", "length");
    put("mean_word_len", "length");
    put("std_word_len", "length");
    put("max_word_len", "length");
    put("long_word_ratio", "length");
    put("short_word_ratio", "length");
    put("sentence_count", "length");
    put("mean_sentence_len", "length");
    put("log_token_count", "length");
    put("comma_count", "length");
    put("punct_token_ratio", "length");
    // readability / complexity
    put("syllable_count", "complexity");
    put("mean_syllables_per_word", "complexity");
    put("polysyllable_ratio", "complexity");
    put("flesch_reading_ease", "complexity");
    put("flesch_kincaid_grade", "complexity");
    put("automated_readability_index", "complexity");
    put("coleman_liau_index", "complexity");
    put("mean_chars_per_sentence", "complexity");
    put("complex_word_count", "complexity");
    put("single_syllable_ratio", "complexity");
    // lexicon sentiment
    put("positive_count", "sentiment");
    put("negative_count", "sentiment");
    put("positive_ratio", "sentiment");
    put("negative_ratio", "sentiment");
    put("net_sentiment", "sentiment");
    put("abs_sentiment", "sentiment");
    put("unique_positive", "sentiment");
    put("unique_negative", "sentiment");
    // lexical variation
    put("type_token_ratio", "variation");
    put("guiraud_index", "variation");
    put("herdan_c", "variation");
    put("corrected_ttr", "variation");
    put("hapax_ratio", "variation");
    put("dis_legomena_ratio", "variation");
    put("max_word_freq_ratio", "variation");
    put("bigram_diversity", "variation");
    put("trigram_diversity", "variation");
    put("mean_token_freq", "variation");
    put("yule_k", "variation");
    put("token_entropy", "variation");
    while (static_cast<int>(s.size()) < kFeatureDim)
        put(("reserved_" + std::to_string(s.size())).c_str(), "padding");
    return s;
}

} // namespace

const std::vector<FeatureSpec>& feature_schema() {
    static const std::vector<FeatureSpec> schema = build_schema();
    return schema;
}

std::string feature_schema_json() {
    nlohmann::json out;
    out["schema_version"] = kSchemaVersion;
    out["dim"] = kFeatureDim;
    out["features"] = nlohmann::json::array();
    for (const auto& f : feature_schema())
        out["features"].push_back({{"index", f.index}, {"name", f.name}, {"group", f.group}});
    return out.dump(2);
}

// ---- lexicon ----

Lexicon Lexicon::from_text(const std::string& text, const std::string& origin) {
    Lexicon lex;
    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": expected word<TAB>polarity");
        std::string word = clean_word(line.substr(0, tab));
        int pol = std::stoi(line.substr(tab + 1));
        if (pol != 1 && pol != -1)
            throw ParseError(origin + " line " + std::to_string(line_no) + ": polarity must be 1 or -1");
        lex.entries_.emplace_back(std::move(word), pol);
    }
    std::sort(lex.entries_.begin(), lex.entries_.end());
    return lex;
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open lexicon " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), path);
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = from_text(kBuiltinLexicon, "<builtin>");
    return lex;
}

int Lexicon::polarity(const std::string& w) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), w,
                               [](const auto& e, const std::string& k) { return e.first < k; });
    if (it != entries_.end() && it->first == w) return it->second;
    return 0;
}

std::string Lexicon::to_text() const {
    std::string out;
    for (const auto& [w, p] : entries_) out += w + "\t" + std::to_string(p) + "\n";
    return out;
}

// ---- extractor ----

Mat Extractor::extract(const std::vector<std::string>& tokens) const {
    Mat f(1, kFeatureDim);
    const int n_tok = static_cast<int>(tokens.size());
    if (n_tok == 0) return f; // all-defaults vector for empty text

    std::vector<std::string> words;
    words.reserve(tokens.size());
    int chars = 0, commas = 0, punct_tokens = 0, sentences = 0;
    for (const auto& t : tokens) {
        chars += static_cast<int>(t.size());
        bool has_punct = false;
        for (char c : t)
            if (!is_word_char(c)) has_punct = true;
        if (has_punct) ++punct_tokens;
        if (t.find(',') != std::string::npos) ++commas;
        if (ends_sentence(t)) ++sentences;
        std::string w = clean_word(t);
        if (!w.empty()) words.push_back(std::move(w));
    }
    if (sentences == 0) sentences = 1;
    const int n_words = static_cast<int>(words.size());

    double mean_len = 0, max_len = 0;
    int long_words = 0, short_words = 0;
    for (const auto& w : words) {
        mean_len += static_cast<double>(w.size());
        max_len = std::max(max_len, static_cast<double>(w.size()));
        if (w.size() >= 7) ++long_words;
        if (w.size() <= 3) ++short_words;
    }
    if (n_words > 0) mean_len /= n_words;
    double var_len = 0;
    for (const auto& w : words) var_len += (w.size() - mean_len) * (w.size() - mean_len);
    double std_len = n_words > 0 ? std::sqrt(var_len / n_words) : 0.0;

    int syl_total = 0, poly = 0, mono = 0;
    for (const auto& w : words) {
        int s = syllables(w);
        syl_total += s;
        if (s >= 3) ++poly;
        if (s == 1) ++mono;
    }

    int pos = 0, neg = 0;
    std::set<std::string> pos_set, neg_set;
    for (const auto& w : words) {
        int p = lexicon_->polarity(w);
        if (p > 0) {
            ++pos;
            pos_set.insert(w);
        } else if (p < 0) {
            ++neg;
            neg_set.insert(w);
        }
    }

    std::map<std::string, int> freq;
    for (const auto& w : words) ++freq[w];
    const int n_types = static_cast<int>(freq.size());
    int hapax = 0, dis = 0, max_freq = 0;
    double yule_sum = 0, entropy = 0;
    for (const auto& [w, c] : freq) {
        if (c == 1) ++hapax;
        if (c == 2) ++dis;
        max_freq = std::max(max_freq, c);
        yule_sum += static_cast<double>(c) * c;
        double p = static_cast<double>(c) / n_words;
        entropy -= p * std::log(p);
    }
    std::set<std::string> bigrams, trigrams;
    for (int i = 0; i + 1 < n_words; ++i) bigrams.insert(words[i] + " " + words[i + 1]);
    for (int i = 0; i + 2 < n_words; ++i) trigrams.insert(words[i] + " " + words[i + 1] + " " + words[i + 2]);

    const double wn = std::max(n_words, 1);
    const double wps = wn / sentences;             // words per sentence
    const double spw = syl_total / wn;             // syllables per word
    const double cpw = static_cast<double>(chars) / n_tok; // chars per token

    int i = 0;
    auto put = [&f, &i](double v) { f.a[i++] = v; };
    // length
    put(n_tok);
    put(chars);
    put(mean_len);
    put(std_len);
    put(max_len);
    put(n_words > 0 ? static_cast<double>(long_words) / n_words : 0.0);
    put(n_words > 0 ? static_cast<double>(short_words) / n_words : 0.0);
    put(sentences);
    put(static_cast<double>(n_tok) / sentences);
    put(std::log(1.0 + n_tok));
    put(commas);
    put(static_cast<double>(punct_tokens) / n_tok);
    // complexity
    put(syl_total);
    put(spw);
    put(n_words > 0 ? static_cast<double>(poly) / n_words : 0.0);
    put(206.835 - 1.015 * wps - 84.6 * spw);
    put(0.39 * wps + 11.8 * spw - 15.59);
    put(4.71 * cpw + 0.5 * wps - 21.43);
    put(0.0588 * (100.0 * cpw) - 0.296 * (100.0 / wps) - 15.8);
    put(static_cast<double>(chars) / sentences);
    put(poly);
    put(n_words > 0 ? static_cast<double>(mono) / n_words : 0.0);
    // sentiment
    put(pos);
    put(neg);
    put(n_words > 0 ? static_cast<double>(pos) / n_words : 0.0);
    put(n_words > 0 ? static_cast<double>(neg) / n_words : 0.0);
    put(n_words > 0 ? static_cast<double>(pos - neg) / n_words : 0.0);
    put(n_words > 0 ? static_cast<double>(pos + neg) / n_words : 0.0);
    put(static_cast<double>(pos_set.size()));
    put(static_cast<double>(neg_set.size()));
    // variation
    put(n_words > 0 ? static_cast<double>(n_types) / n_words : 0.0);
    put(n_words > 0 ? n_types / std::sqrt(wn) : 0.0);
    put(n_words > 1 && n_types > 0 ? std::log(static_cast<double>(n_types)) / std::log(wn) : 0.0);
    put(n_words > 0 ? n_types / std::sqrt(2.0 * wn) : 0.0);
    put(n_types > 0 ? static_cast<double>(hapax) / n_types : 0.0);
    put(n_types > 0 ? static_cast<double>(dis) / n_types : 0.0);
    put(n_words > 0 ? static_cast<double>(max_freq) / n_words : 0.0);
    put(n_words > 1 ? static_cast<double>(bigrams.size()) / (n_words - 1) : 0.0);
    put(n_words > 2 ? static_cast<double>(trigrams.size()) / (n_words - 2) : 0.0);
    put(n_types > 0 ? wn / n_types : 0.0);
    put(n_words > 0 ? 1e4 * (yule_sum - n_words) / (wn * wn) : 0.0);
    put(entropy);
    // remaining entries stay zero (padding group)
    return f;
}

// ---- standardizer ----

Standardizer Standardizer::fit(const std::vector<Mat>& source_features) {
    if (source_features.size() < 2)
        throw ConfigError("feature standardizer needs at least 2 source essays, got " +
                          std::to_string(source_features.size()));
    Standardizer s;
    s.mean = Mat(1, kFeatureDim);
    s.std = Mat(1, kFeatureDim);
    const double n = static_cast<double>(source_features.size());
    for (const auto& f : source_features)
        for (int j = 0; j < kFeatureDim; ++j) s.mean.a[j] += f.a[j];
    for (int j = 0; j < kFeatureDim; ++j) s.mean.a[j] /= n;
    for (const auto& f : source_features)
        for (int j = 0; j < kFeatureDim; ++j) {
            double d = f.a[j] - s.mean.a[j];
            s.std.a[j] += d * d;
        }
    for (int j = 0; j < kFeatureDim; ++j) s.std.a[j] = std::max(std::sqrt(s.std.a[j] / n), kStdFloor);
    return s;
}

Standardizer Standardizer::disabled() {
    Standardizer s;
    s.mean = Mat(1, kFeatureDim);
    s.std = Mat::fill(1, kFeatureDim, 1.0);
    s.enabled = false;
    return s;
}

Mat Standardizer::apply(const Mat& raw) const {
    if (raw.rows != 1 || raw.cols != kFeatureDim) throw ContractError("standardizer: bad feature shape");
    if (!enabled) return raw;
    Mat out = raw;
    for (int j = 0; j < kFeatureDim; ++j) out.a[j] = (out.a[j] - mean.a[j]) / std.a[j];
    return out;
}

} // namespace ctaes::feats
