#include "spamlab/textfeat.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "spamlab/error.hpp"

namespace spamlab {

namespace {

using nlohmann::json;

bool is_ascii_alnum(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_upper(unsigned char c) noexcept { return c >= 'A' && c <= 'Z'; }
bool is_lower(unsigned char c) noexcept { return c >= 'a' && c <= 'z'; }

bool is_token_char(unsigned char c) noexcept { return is_ascii_alnum(c) || c >= 0x80; }

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (is_upper(static_cast<unsigned char>(c))) c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

void require_identifier(const std::string& name) {
    if (!is_valid_identifier(name)) {
        throw Error(ErrorCode::BadFeatureDef, "feature name \"" + name + "\" must match [a-z][a-z0-9_]*");
    }
}

bool token_in(const std::vector<std::string>& tokens, const std::string& word) {
    return std::find(tokens.begin(), tokens.end(), word) != tokens.end();
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string bag_feature_name(const std::string& word) {
    if (is_valid_identifier(word)) return word;
    bool plain = std::all_of(word.begin(), word.end(), [](char c) { return is_ascii_alnum(static_cast<unsigned char>(c)); });
    if (plain) return "w_" + word;
    static constexpr char hex[] = "0123456789abcdef";
    std::string name = "w_";
    for (unsigned char c : word) {
        if (is_ascii_alnum(c)) {
            name += static_cast<char>(c);
        } else {
            name += 'x';
            name += hex[c >> 4];
            name += hex[c & 0xF];
        }
    }
    return name;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureDef
// ---------------------------------------------------------------------------

FeatureDef::FeatureDef(std::string name, FeatureKind kind) : name_(std::move(name)), kind_(std::move(kind)) {
    require_identifier(name_);
}

std::string_view FeatureDef::kind_name() const noexcept {
    return std::visit(overloaded{
                          [](const feature::WordList&) { return std::string_view("word_list"); },
                          [](const feature::Substring&) { return std::string_view("substring"); },
                          [](const feature::Regex&) { return std::string_view("regex"); },
                          [](const feature::AllCaps&) { return std::string_view("all_caps"); },
                          [](const feature::ContainsDollar&) { return std::string_view("contains_dollar"); },
                          [](const feature::MultiPunct&) { return std::string_view("multi_punct"); },
                          [](const feature::BagWord&) { return std::string_view("bag_word"); },
                          [](const feature::CapsMajority&) { return std::string_view("caps_majority"); },
                      },
                      kind_);
}

FeatureDef FeatureDef::word_list(std::string name, std::set<std::string> words) {
    if (words.empty()) throw Error(ErrorCode::BadFeatureDef, "word list \"" + name + "\" is empty");
    std::set<std::string> lowered;
    for (const auto& w : words) {
        auto tokens = tokenize(w);
        if (tokens.size() != 1) {
            throw Error(ErrorCode::BadFeatureDef, "word list \"" + name + "\" entry \"" + w + "\" is not a single token");
        }
        lowered.insert(tokens.front());
    }
    return FeatureDef(std::move(name), feature::WordList{std::move(lowered)});
}

FeatureDef FeatureDef::substring(std::string name, std::string pattern, bool case_sensitive) {
    if (pattern.empty()) throw Error(ErrorCode::BadFeatureDef, "substring \"" + name + "\" has an empty pattern");
    return FeatureDef(std::move(name), feature::Substring{std::move(pattern), case_sensitive});
}

FeatureDef FeatureDef::regex(std::string name, std::string pattern) {
    std::shared_ptr<const std::regex> compiled;
    try {
        compiled = std::make_shared<const std::regex>(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw Error(ErrorCode::BadRegex, "bad regex \"" + pattern + "\": " + e.what());
    }
    return FeatureDef(std::move(name), feature::Regex{std::move(pattern), std::move(compiled)});
}

FeatureDef FeatureDef::all_caps(std::string name) { return FeatureDef(std::move(name), feature::AllCaps{}); }

FeatureDef FeatureDef::contains_dollar(std::string name) {
    return FeatureDef(std::move(name), feature::ContainsDollar{});
}

FeatureDef FeatureDef::multi_punct(std::string name, int min_count) {
    if (min_count < 1) throw Error(ErrorCode::BadFeatureDef, "multi_punct min_count must be positive");
    return FeatureDef(std::move(name), feature::MultiPunct{min_count});
}

FeatureDef FeatureDef::bag_word(std::string word) {
    std::string name = bag_feature_name(word);
    return bag_word(std::move(name), std::move(word));
}

FeatureDef FeatureDef::bag_word(std::string name, std::string word) {
    auto tokens = tokenize(word);
    if (tokens.size() != 1) throw Error(ErrorCode::BadFeatureDef, "bag word \"" + word + "\" is not a single token");
    return FeatureDef(std::move(name), feature::BagWord{tokens.front()});
}

FeatureDef FeatureDef::caps_majority(std::string name) {
    return FeatureDef(std::move(name), feature::CapsMajority{});
}

bool operator==(const FeatureDef& a, const FeatureDef& b) {
    if (a.name_ != b.name_ || a.kind_.index() != b.kind_.index()) return false;
    return std::visit(overloaded{
                          [&](const feature::WordList& x) { return x.words == std::get<feature::WordList>(b.kind_).words; },
                          [&](const feature::Substring& x) {
                              const auto& y = std::get<feature::Substring>(b.kind_);
                              return x.pattern == y.pattern && x.case_sensitive == y.case_sensitive;
                          },
                          [&](const feature::Regex& x) { return x.pattern == std::get<feature::Regex>(b.kind_).pattern; },
                          [&](const feature::MultiPunct& x) {
                              return x.min_count == std::get<feature::MultiPunct>(b.kind_).min_count;
                          },
                          [&](const feature::BagWord& x) { return x.word == std::get<feature::BagWord>(b.kind_).word; },
                          [](const auto&) { return true; },
                      },
                      a.kind_);
}

bool is_valid_identifier(std::string_view name) noexcept {
    if (name.empty() || !is_lower(static_cast<unsigned char>(name.front()))) return false;
    return std::all_of(name.begin(), name.end(), [](char ch) {
        auto c = static_cast<unsigned char>(ch);
        return is_lower(c) || (c >= '0' && c <= '9') || c == '_';
    });
}

void check_unique_names(const FeatureSet& defs) {
    std::unordered_set<std::string> seen;
    for (const auto& def : defs) {
        if (!seen.insert(def.name()).second) {
            throw Error(ErrorCode::DuplicateFeatureName, "duplicate feature name \"" + def.name() + "\"");
        }
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

json feature_to_json(const FeatureDef& def) {
    json j = {{"name", def.name()}, {"kind", std::string(def.kind_name())}};
    std::visit(overloaded{
                   [&](const feature::WordList& k) { j["words"] = k.words; },
                   [&](const feature::Substring& k) {
                       j["pattern"] = k.pattern;
                       j["case_sensitive"] = k.case_sensitive;
                   },
                   [&](const feature::Regex& k) { j["pattern"] = k.pattern; },
                   [&](const feature::MultiPunct& k) { j["min_count"] = k.min_count; },
                   [&](const feature::BagWord& k) { j["word"] = k.word; },
                   [](const auto&) {},
               },
               def.kind());
    return j;
}

FeatureDef feature_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadFeatureDef, "feature definition must be a JSON object");
    auto field = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) throw Error(ErrorCode::BadFeatureDef, std::string("feature definition lacks \"") + key + "\"");
        return *it;
    };
    try {
        std::string name = field("name").get<std::string>();
        const std::string kind = field("kind").get<std::string>();
        if (kind == "word_list") return FeatureDef::word_list(name, field("words").get<std::set<std::string>>());
        if (kind == "substring") {
            return FeatureDef::substring(name, field("pattern").get<std::string>(), j.value("case_sensitive", true));
        }
        if (kind == "regex") return FeatureDef::regex(name, field("pattern").get<std::string>());
        if (kind == "all_caps") return FeatureDef::all_caps(name);
        if (kind == "contains_dollar") return FeatureDef::contains_dollar(name);
        if (kind == "multi_punct") return FeatureDef::multi_punct(name, j.value("min_count", 2));
        if (kind == "bag_word") return FeatureDef::bag_word(name, field("word").get<std::string>());
        if (kind == "caps_majority") return FeatureDef::caps_majority(name);
        throw Error(ErrorCode::BadFeatureDef, "unknown feature kind \"" + kind + "\"");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BadFeatureDef, std::string("malformed feature definition: ") + e.what());
    }
}

json feature_set_to_json(const FeatureSet& defs) {
    json arr = json::array();
    for (const auto& def : defs) arr.push_back(feature_to_json(def));
    return arr;
}

FeatureSet feature_set_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::BadFeatureDef, "feature set must be a JSON array");
    FeatureSet defs;
    defs.reserve(j.size());
    for (const auto& item : j) defs.push_back(feature_from_json(item));
    check_unique_names(defs);
    return defs;
}

FeatureSet load_feature_set_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open feature file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::BadFeatureDef, "feature file is not valid JSON: " + path);
    return feature_set_from_json(j);
}

const std::map<std::string, FeatureDef>& preset_features() {
    static const std::map<std::string, FeatureDef> presets = [] {
        std::map<std::string, FeatureDef> m;
        auto add = [&](FeatureDef def) { m.emplace(def.name(), std::move(def)); };
        add(FeatureDef::word_list("dear_or_bless", {"dear", "bless", "almighty", "urgent"}));
        add(FeatureDef::substring("contains_re", "Re", true));
        add(FeatureDef::all_caps("all_caps"));
        add(FeatureDef::contains_dollar("dollar"));
        add(FeatureDef::multi_punct("multi_punct", 2));
        add(FeatureDef::word_list("dear_or_mister", {"dear", "mister"}));
        add(FeatureDef::word_list("religious", {"bless", "blessed", "almighty", "pray", "god", "faith"}));
        add(FeatureDef::caps_majority("caps_ratio_gt_half"));
        return m;
    }();
    return presets;
}

FeatureSet interactive_preset() {
    const auto& p = preset_features();
    FeatureSet out;
    for (const char* name : {"all_caps", "dollar", "multi_punct", "dear_or_mister", "religious"}) out.push_back(p.at(name));
    return out;
}

// ---------------------------------------------------------------------------
// Text primitives
// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_char(c)) {
            current.push_back(is_upper(c) ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t punctuation_count(std::string_view text) noexcept {
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char ch) {
        auto c = static_cast<unsigned char>(ch);
        return c > 0x20 && c < 0x7F && !is_ascii_alnum(c);
    }));
}

std::size_t char_length(std::string_view text) noexcept {
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char ch) {
        return (static_cast<unsigned char>(ch) & 0xC0) != 0x80;
    }));
}

bool eval_feature(const FeatureDef& def, std::string_view text) {
    return std::visit(
        overloaded{
            [&](const feature::WordList& k) {
                for (const auto& token : tokenize(text)) {
                    if (k.words.count(token)) return true;
                }
                return false;
            },
            [&](const feature::Substring& k) {
                if (k.case_sensitive) return text.find(k.pattern) != std::string_view::npos;
                return lower_ascii(text).find(lower_ascii(k.pattern)) != std::string::npos;
            },
            [&](const feature::Regex& k) { return std::regex_search(text.begin(), text.end(), *k.compiled); },
            [&](const feature::AllCaps&) {
                bool any_letter = false;
                for (char ch : text) {
                    auto c = static_cast<unsigned char>(ch);
                    if (is_lower(c)) return false;
                    if (is_upper(c)) any_letter = true;
                }
                return any_letter;
            },
            [&](const feature::ContainsDollar&) { return text.find('$') != std::string_view::npos; },
            [&](const feature::MultiPunct& k) {
                return punctuation_count(text) >= static_cast<std::size_t>(k.min_count);
            },
            [&](const feature::BagWord& k) { return token_in(tokenize(text), k.word); },
            [&](const feature::CapsMajority&) {
                std::size_t upper = 0;
                std::size_t letters = 0;
                for (char ch : text) {
                    auto c = static_cast<unsigned char>(ch);
                    if (is_upper(c)) ++upper;
                    if (is_upper(c) || is_lower(c)) ++letters;
                }
                return 2 * upper > letters;
            },
        },
        def.kind());
}

// ---------------------------------------------------------------------------
// Vocabulary and matrices
// ---------------------------------------------------------------------------

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_freq, CountMode mode) {
    if (min_freq == 0) throw Error(ErrorCode::BadHyperparameter, "min_freq must be positive");
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "vocabulary of an empty corpus");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& item : corpus.items) {
        auto tokens = tokenize(item.text);
        if (mode == CountMode::DocumentFrequency) {
            std::sort(tokens.begin(), tokens.end());
            tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        }
        for (auto& t : tokens) ++counts[std::move(t)];
    }
    Vocabulary vocab;
    vocab.min_freq = min_freq;
    vocab.mode = mode;
    for (auto& [word, count] : counts) {
        if (count >= min_freq) vocab.entries.push_back({word, count});
    }
    std::sort(vocab.entries.begin(), vocab.entries.end(), [](const VocabularyEntry& a, const VocabularyEntry& b) {
        return a.count != b.count ? a.count > b.count : a.word < b.word;
    });
    return vocab;
}

FeatureSet bag_of_words_features(const Vocabulary& vocab) {
    FeatureSet defs;
    defs.reserve(vocab.entries.size());
    for (const auto& e : vocab.entries) defs.push_back(FeatureDef::bag_word(e.word));
    return defs;
}

FeatureVector featurize_text(const FeatureSet& defs, std::string_view text) {
    FeatureVector v(defs.size(), 0);
    for (std::size_t j = 0; j < defs.size(); ++j) v[j] = eval_feature(defs[j], text) ? 1 : 0;
    return v;
}

FeatureMatrix featurize(const Corpus& corpus, const FeatureSet& defs) {
    check_unique_names(defs);
    FeatureMatrix m;
    m.feature_names.reserve(defs.size());
    for (const auto& def : defs) m.feature_names.push_back(def.name());
    m.rows.reserve(corpus.size());
    for (const auto& item : corpus.items) {
        m.rows.push_back(featurize_text(defs, item.text));
        m.labels.push_back(item.label);
    }
    return m;
}

std::string feature_matrix_to_csv(const Corpus& corpus, const FeatureMatrix& matrix) {
    std::string out = "subject,label";
    for (const auto& name : matrix.feature_names) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
        out += csv_escape(corpus.items[i].text);
        out += ',';
        out += label_name(matrix.labels[i]);
        for (auto v : matrix.rows[i]) out += v ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

}  // namespace spamlab
