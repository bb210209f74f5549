#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spamlab/rational.hpp"

namespace spamlab {

enum class Label { NonSpam, Spam };

/// "spam" / "non-spam"
std::string_view label_name(Label label) noexcept;
/// Case-insensitive inverse of label_name; throws Error(BadLabel).
Label parse_label(std::string_view text, long long row = 0);

struct LabeledSubject {
    std::string text;
    Label label = Label::NonSpam;

    friend bool operator==(const LabeledSubject&, const LabeledSubject&) = default;
};

struct Corpus {
    std::string name;
    std::vector<LabeledSubject> items;

    std::size_t size() const noexcept { return items.size(); }
    bool empty() const noexcept { return items.empty(); }
    std::vector<Label> labels() const;
    std::size_t count(Label label) const noexcept;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct SplitSpec {
    double train_fraction = 0.5;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct SplitResult {
    Corpus train;
    Corpus test;
    std::vector<std::size_t> train_indices;  // ascending, into the source corpus
    std::vector<std::size_t> test_indices;
};

/// Parses a `subject,label` CSV (RFC 4180 quoting, LF or CRLF). Extra
/// columns are ignored. Errors carry the 1-based data row number.
Corpus load_csv(std::istream& source, std::string name = "corpus");
Corpus load_csv_text(std::string_view text, std::string name = "corpus");
Corpus load_csv_file(const std::string& path);

/// Quotes a CSV field when it holds a comma, quote, line break or edge space.
std::string csv_escape(std::string_view field);

/// Writes the canonical `subject,label` form; load_csv inverts it.
std::string to_csv(const Corpus& corpus);

/// Drops repeated subject lines (same text and label), keeping first occurrences.
Corpus deduplicate(const Corpus& corpus);

/// Seeded Fisher-Yates shuffle (per class when stratified) followed by a
/// prefix cut of round(train_fraction * n). Both sides keep source order.
SplitResult split(const Corpus& corpus, const SplitSpec& spec);

/// Exact proportion of Spam items.
Rational class_balance(const Corpus& corpus);

}  // namespace spamlab
