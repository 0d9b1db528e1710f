#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace expressive::linguistic {

struct Transcript {
    std::string participant_id;
    std::vector<std::string> utterances;
};

/// Lowercases, splits on anything that is not a letter, digit or an interior
/// apostrophe. UTF-8 bytes >= 0x80 count as letters; U+2019 is read as an
/// apostrophe.
std::vector<std::string> tokenize(std::string_view text);

/// Category -> patterns. A pattern is a literal word or a prefix ending in '*'.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::map<std::string, std::vector<std::string>> categories);

    const std::map<std::string, std::vector<std::string>>& categories() const { return categories_; }
    std::size_t size() const { return categories_.size(); }
    bool matches(const std::string& category, std::string_view token) const;

    friend bool operator==(const Lexicon&, const Lexicon&) = default;

private:
    std::map<std::string, std::vector<std::string>> categories_;
};

Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(std::string_view json_text, const std::string& source = "<memory>");
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

/// 100 * matching tokens / total tokens, per category. A token may count
/// toward several categories.
std::map<std::string, double> category_percentages(const std::vector<std::string>& tokens, const Lexicon& lexicon);

/// Externally supplied summary dimensions.
inline constexpr std::string_view kExternalDimensions[] = {"Analytical Thinking", "Clout", "Authentic",
                                                           "Emotional Tone"};

struct LinguisticFeatureRow {
    double word_count = 0.0;
    double words_over_six_letters = 0.0;
    std::map<std::string, double> categories;
    std::map<std::string, double> external;

    /// Word Count, the external dimensions present, Words > 6 Letters, then
    /// categories in lexicon order.
    std::vector<std::pair<std::string, double>> named_values() const;
};

LinguisticFeatureRow linguistic_signals(const Transcript& transcript, const Lexicon& lexicon,
                                        const std::map<std::string, double>& external_dims = {});

/// `participant_id,utterance` rows, order preserved per participant.
std::vector<Transcript> read_transcripts_csv(const std::filesystem::path& path);
/// One participant per file; each non-empty line is an utterance. The id is the file stem.
Transcript read_transcript_text(const std::filesystem::path& path);

/// `participant_id,analytic,clout,authentic,tone` mapped to the display names.
std::map<std::string, std::map<std::string, double>> read_external_dims_csv(const std::filesystem::path& path);

}  // namespace expressive::linguistic
