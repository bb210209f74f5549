#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "spamlab/corpus.hpp"

namespace spamlab {

// ---------------------------------------------------------------------------
// Feature definitions
// ---------------------------------------------------------------------------

namespace feature {

struct WordList {
    std::set<std::string> words;  // lowercase tokens
};
struct Substring {
    std::string pattern;
    bool case_sensitive = true;
};
struct Regex {
    std::string pattern;
    std::shared_ptr<const std::regex> compiled;
};
struct AllCaps {};
struct ContainsDollar {};
struct MultiPunct {
    int min_count = 2;
};
struct BagWord {
    std::string word;
};
/// More than half of the ASCII letters are uppercase.
struct CapsMajority {};

}  // namespace feature

using FeatureKind = std::variant<feature::WordList, feature::Substring, feature::Regex, feature::AllCaps,
                                 feature::ContainsDollar, feature::MultiPunct, feature::BagWord,
                                 feature::CapsMajority>;

/// A named, validated feature. Construct through the static factories or
/// feature_from_json; they enforce naming rules and compile regexes up front
/// so evaluation never fails.
class FeatureDef {
public:
    const std::string& name() const noexcept { return name_; }
    const FeatureKind& kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept;

    static FeatureDef word_list(std::string name, std::set<std::string> words);
    static FeatureDef substring(std::string name, std::string pattern, bool case_sensitive = true);
    static FeatureDef regex(std::string name, std::string pattern);
    static FeatureDef all_caps(std::string name);
    static FeatureDef contains_dollar(std::string name);
    static FeatureDef multi_punct(std::string name, int min_count = 2);
    static FeatureDef bag_word(std::string word);
    static FeatureDef bag_word(std::string name, std::string word);
    static FeatureDef caps_majority(std::string name);

    friend bool operator==(const FeatureDef& a, const FeatureDef& b);

private:
    FeatureDef(std::string name, FeatureKind kind);

    std::string name_;
    FeatureKind kind_;
};

using FeatureSet = std::vector<FeatureDef>;

bool is_valid_identifier(std::string_view name) noexcept;

/// Throws DuplicateFeatureName when two definitions share a name.
void check_unique_names(const FeatureSet& defs);

// JSON: [{"name":..., "kind":..., ...kind-specific fields}]
nlohmann::json feature_to_json(const FeatureDef& def);
FeatureDef feature_from_json(const nlohmann::json& j);
nlohmann::json feature_set_to_json(const FeatureSet& defs);
FeatureSet feature_set_from_json(const nlohmann::json& j);
FeatureSet load_feature_set_file(const std::string& path);

/// Built-in named features (dear_or_bless, contains_re, all_caps, dollar,
/// multi_punct, dear_or_mister, religious, caps_ratio_gt_half).
const std::map<std::string, FeatureDef>& preset_features();
/// The five features offered by the interactive app.
FeatureSet interactive_preset();

// ---------------------------------------------------------------------------
// Text primitives
// ---------------------------------------------------------------------------

/// Lowercase ASCII letters, split on maximal runs of ASCII characters that
/// are not letters or digits. Bytes >= 0x80 are kept as token characters.
std::vector<std::string> tokenize(std::string_view text);

/// Printable ASCII that is neither alphanumeric nor whitespace.
std::size_t punctuation_count(std::string_view text) noexcept;
/// Unicode scalar count of UTF-8 text.
std::size_t char_length(std::string_view text) noexcept;

bool eval_feature(const FeatureDef& def, std::string_view text);

// ---------------------------------------------------------------------------
// Vocabulary and feature matrices
// ---------------------------------------------------------------------------

enum class CountMode { DocumentFrequency, TotalOccurrences };

struct VocabularyEntry {
    std::string word;
    std::size_t count = 0;
    friend bool operator==(const VocabularyEntry&, const VocabularyEntry&) = default;
};

struct Vocabulary {
    std::vector<VocabularyEntry> entries;  // count descending, then word ascending
    std::size_t min_freq = 4;
    CountMode mode = CountMode::DocumentFrequency;
};

Vocabulary build_vocabulary(const Corpus& corpus, std::size_t min_freq = 4,
                            CountMode mode = CountMode::DocumentFrequency);

/// One BagWord per entry, named after the word (prefixed with "w_" when the
/// token is not a valid identifier on its own, e.g. starts with a digit).
FeatureSet bag_of_words_features(const Vocabulary& vocab);

using FeatureVector = std::vector<std::uint8_t>;  // 0/1 per feature, declaration order

struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<FeatureVector> rows;
    std::vector<Label> labels;

    std::size_t num_rows() const noexcept { return rows.size(); }
    std::size_t num_features() const noexcept { return feature_names.size(); }
};

FeatureVector featurize_text(const FeatureSet& defs, std::string_view text);
FeatureMatrix featurize(const Corpus& corpus, const FeatureSet& defs);

/// CSV export: `subject,label,<feature names...>` with 0/1 cells.
std::string feature_matrix_to_csv(const Corpus& corpus, const FeatureMatrix& matrix);

}  // namespace spamlab
