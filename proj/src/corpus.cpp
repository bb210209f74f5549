#include "spamlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "spamlab/error.hpp"
#include "spamlab/rng.hpp"

namespace spamlab {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string_view trim_spaces(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// One CSV record; `row` is the 0-based record index (0 = header).
struct Record {
    std::vector<std::string> fields;
    bool blank = false;
};

class CsvReader {
public:
    explicit CsvReader(std::string_view text) : text_(text) {
        if (text_.substr(0, 3) == "\xEF\xBB\xBF") text_.remove_prefix(3);
    }

    bool done() const noexcept { return pos_ >= text_.size(); }

    Record next(long long row) {
        Record rec;
        std::string field;
        bool quoted_field = false;
        while (true) {
            if (pos_ >= text_.size()) {
                finish(rec, field, quoted_field);
                return rec;
            }
            char c = text_[pos_];
            if (c == '"' && field.empty() && !quoted_field) {
                quoted_field = true;
                ++pos_;
                read_quoted(field, row);
                if (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '\n' && text_[pos_] != '\r') {
                    throw Error(ErrorCode::MalformedCsv,
                                "malformed quoting in row " + std::to_string(row) + ": text after closing quote", row);
                }
                continue;
            }
            if (c == '"') {
                throw Error(ErrorCode::MalformedCsv,
                            "malformed quoting in row " + std::to_string(row) + ": stray quote", row);
            }
            if (c == ',') {
                rec.fields.push_back(std::move(field));
                field.clear();
                quoted_field = false;
                ++pos_;
                continue;
            }
            if (c == '\r' || c == '\n') {
                ++pos_;
                if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
                finish(rec, field, quoted_field);
                return rec;
            }
            field.push_back(c);
            ++pos_;
        }
    }

private:
    void read_quoted(std::string& field, long long row) {
        while (true) {
            if (pos_ >= text_.size()) {
                throw Error(ErrorCode::MalformedCsv,
                            "malformed quoting in row " + std::to_string(row) + ": unterminated quoted field", row);
            }
            char c = text_[pos_++];
            if (c == '"') {
                if (pos_ < text_.size() && text_[pos_] == '"') {
                    field.push_back('"');
                    ++pos_;
                } else {
                    return;
                }
            } else {
                field.push_back(c);
            }
        }
    }

    static void finish(Record& rec, std::string& field, bool quoted_field) {
        if (rec.fields.empty() && field.empty() && !quoted_field) {
            rec.blank = true;
            return;
        }
        rec.fields.push_back(std::move(field));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

bool needs_quoting(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

}  // namespace

std::string csv_escape(std::string_view s) {
    if (!needs_quoting(s)) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

std::size_t round_count(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

void shuffle(std::vector<std::size_t>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

std::string_view label_name(Label label) noexcept {
    return label == Label::Spam ? "spam" : "non-spam";
}

Label parse_label(std::string_view text, long long row) {
    const std::string lowered = lower_ascii(trim_spaces(text));
    if (lowered == "spam") return Label::Spam;
    if (lowered == "non-spam") return Label::NonSpam;
    throw Error(ErrorCode::BadLabel,
                "bad label in row " + std::to_string(row) + ": \"" + std::string(text) + "\"", row);
}

std::vector<Label> Corpus::labels() const {
    std::vector<Label> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(item.label);
    return out;
}

std::size_t Corpus::count(Label label) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(items.begin(), items.end(), [label](const LabeledSubject& s) { return s.label == label; }));
}

Corpus load_csv_text(std::string_view text, std::string name) {
    CsvReader reader(text);
    Record header;
    do {
        if (reader.done()) throw Error(ErrorCode::MissingColumn, "CSV has no header row");
        header = reader.next(0);
    } while (header.blank);

    std::ptrdiff_t subject_col = -1;
    std::ptrdiff_t label_col = -1;
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        const std::string col = lower_ascii(trim_spaces(header.fields[i]));
        if (col == "subject" && subject_col < 0) subject_col = static_cast<std::ptrdiff_t>(i);
        if (col == "label" && label_col < 0) label_col = static_cast<std::ptrdiff_t>(i);
    }
    if (subject_col < 0 || label_col < 0) {
        throw Error(ErrorCode::MissingColumn,
                    std::string("CSV header lacks required column \"") + (subject_col < 0 ? "subject" : "label") + "\"");
    }
    const auto needed = static_cast<std::size_t>(std::max(subject_col, label_col)) + 1;

    Corpus corpus;
    corpus.name = std::move(name);
    long long row = 0;
    while (!reader.done()) {
        ++row;
        Record rec = reader.next(row);
        if (rec.blank) {
            --row;
            continue;
        }
        if (rec.fields.size() < needed) {
            throw Error(ErrorCode::MalformedCsv,
                        "row " + std::to_string(row) + " has " + std::to_string(rec.fields.size()) +
                            " fields, expected at least " + std::to_string(needed),
                        row);
        }
        LabeledSubject item;
        item.text = std::move(rec.fields[static_cast<std::size_t>(subject_col)]);
        item.label = parse_label(rec.fields[static_cast<std::size_t>(label_col)], row);
        if (item.text.empty()) {
            throw Error(ErrorCode::MalformedCsv, "empty subject in row " + std::to_string(row), row);
        }
        corpus.items.push_back(std::move(item));
    }
    if (corpus.items.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no data rows");
    return corpus;
}

Corpus load_csv(std::istream& source, std::string name) {
    std::string text{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
    return load_csv_text(text, std::move(name));
}

Corpus load_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open corpus file: " + path);
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    return load_csv(in, name);
}

std::string to_csv(const Corpus& corpus) {
    std::string out = "subject,label\n";
    for (const auto& item : corpus.items) {
        out += csv_escape(item.text);
        out += ',';
        out += label_name(item.label);
        out += '\n';
    }
    return out;
}

Corpus deduplicate(const Corpus& corpus) {
    Corpus out;
    out.name = corpus.name;
    std::set<std::pair<std::string, Label>> seen;
    for (const auto& item : corpus.items) {
        if (seen.emplace(item.text, item.label).second) out.items.push_back(item);
    }
    return out;
}

SplitResult split(const Corpus& corpus, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidFraction, "train fraction must lie in (0, 1]");
    }
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot split an empty corpus");

    SplitMix64 rng(spec.seed);
    std::vector<std::size_t> chosen;
    auto take_prefix = [&](std::vector<std::size_t> pool) {
        shuffle(pool, rng);
        pool.resize(std::min(pool.size(), round_count(spec.train_fraction, pool.size())));
        chosen.insert(chosen.end(), pool.begin(), pool.end());
    };

    if (spec.stratified) {
        for (Label cls : {Label::Spam, Label::NonSpam}) {
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                if (corpus.items[i].label == cls) pool.push_back(i);
            }
            take_prefix(std::move(pool));
        }
    } else {
        std::vector<std::size_t> pool(corpus.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        take_prefix(std::move(pool));
    }

    std::vector<bool> in_train(corpus.size(), false);
    for (std::size_t i : chosen) in_train[i] = true;

    SplitResult result;
    result.train.name = corpus.name + ":train";
    result.test.name = corpus.name + ":test";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (in_train[i]) {
            result.train_indices.push_back(i);
            result.train.items.push_back(corpus.items[i]);
        } else {
            result.test_indices.push_back(i);
            result.test.items.push_back(corpus.items[i]);
        }
    }
    return result;
}

Rational class_balance(const Corpus& corpus) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "class balance of an empty corpus");
    return Rational(static_cast<std::int64_t>(corpus.count(Label::Spam)), static_cast<std::int64_t>(corpus.size()));
}

}  // namespace spamlab
