#include "expressive/linguistic.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "expressive/csv.hpp"
#include "expressive/error.hpp"

namespace expressive::linguistic {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::size_t letter_count(std::string_view token) {
    std::size_t n = 0;
    for (unsigned char c : token)
        if (c != '\'' && (c & 0xC0) != 0x80) ++n;  // skip apostrophes and UTF-8 continuation bytes
    return n;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::string norm;
    norm.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
            static_cast<unsigned char>(text[i + 2]) == 0x99) {
            norm.push_back('\'');
            i += 2;
        } else {
            norm.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        }
    }

    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && cur.back() == '\'') cur.pop_back();
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < norm.size(); ++i) {
        auto c = static_cast<unsigned char>(norm[i]);
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(c));
        } else if (c == '\'' && !cur.empty() && i + 1 < norm.size() &&
                   is_word_byte(static_cast<unsigned char>(norm[i + 1]))) {
            cur.push_back('\'');
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

Lexicon::Lexicon(std::map<std::string, std::vector<std::string>> categories) : categories_(std::move(categories)) {
    for (auto& [name, patterns] : categories_) {
        if (name.empty()) throw Error(ErrorKind::InvalidPattern, "empty category name");
        for (const auto& p : patterns) {
            if (p.empty() || p == "*") throw Error(ErrorKind::InvalidPattern, "empty pattern in category " + name);
            const auto star = p.find('*');
            if (star != std::string::npos && star != p.size() - 1)
                throw Error(ErrorKind::InvalidPattern, "'" + p + "' in category " + name + ": '*' only allowed at the end");
            for (unsigned char c : p)
                if (c < 0x80 && std::isupper(c))
                    throw Error(ErrorKind::InvalidPattern, "'" + p + "' in category " + name + " is not lowercase");
        }
    }
}

bool Lexicon::matches(const std::string& category, std::string_view token) const {
    auto it = categories_.find(category);
    if (it == categories_.end()) return false;
    for (const auto& p : it->second) {
        if (p.back() == '*') {
            const std::string_view prefix(p.data(), p.size() - 1);
            if (token.substr(0, prefix.size()) == prefix) return true;
        } else if (token == p) {
            return true;
        }
    }
    return false;
}

Lexicon parse_lexicon(std::string_view json_text, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, source + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ParseError, source + ": lexicon must be a JSON object");
    std::map<std::string, std::vector<std::string>> cats;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_array()) throw Error(ErrorKind::ParseError, source + ": category " + it.key() + " is not an array");
        std::vector<std::string> patterns;
        for (const auto& p : it.value()) {
            if (!p.is_string()) throw Error(ErrorKind::ParseError, source + ": non-string pattern in " + it.key());
            patterns.push_back(p.get<std::string>());
        }
        cats.emplace(it.key(), std::move(patterns));
    }
    return Lexicon(std::move(cats));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_lexicon(buf.str(), path.string());
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, patterns] : lexicon.categories()) j[name] = patterns;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::map<std::string, double> category_percentages(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
    if (tokens.empty()) throw Error(ErrorKind::EmptyTokenList, "category percentages of an empty token list");
    std::map<std::string, double> out;
    const double total = static_cast<double>(tokens.size());
    for (const auto& [name, patterns] : lexicon.categories()) {
        std::size_t hits = 0;
        for (const auto& t : tokens)
            if (lexicon.matches(name, t)) ++hits;
        out[name] = 100.0 * static_cast<double>(hits) / total;
    }
    return out;
}

std::vector<std::pair<std::string, double>> LinguisticFeatureRow::named_values() const {
    std::vector<std::pair<std::string, double>> out{{"Word Count", word_count}};
    for (auto dim : kExternalDimensions) {
        auto it = external.find(std::string(dim));
        if (it != external.end()) out.emplace_back(it->first, it->second);
    }
    out.emplace_back("Words > 6 Letters", words_over_six_letters);
    for (const auto& [name, v] : categories) out.emplace_back(name, v);
    return out;
}

LinguisticFeatureRow linguistic_signals(const Transcript& transcript, const Lexicon& lexicon,
                                        const std::map<std::string, double>& external_dims) {
    std::vector<std::string> tokens;
    for (const auto& u : transcript.utterances) {
        auto t = tokenize(u);
        tokens.insert(tokens.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
    }
    if (tokens.empty())
        throw Error(ErrorKind::EmptyTranscript, "participant " + transcript.participant_id + " has no words");
    for (const auto& [k, v] : external_dims) {
        bool known = std::any_of(std::begin(kExternalDimensions), std::end(kExternalDimensions),
                                 [&](std::string_view d) { return d == k; });
        if (!known) throw Error(ErrorKind::InvalidArgument, "unknown external dimension '" + k + "'");
    }
    LinguisticFeatureRow row;
    row.word_count = static_cast<double>(tokens.size());
    const auto long_words = std::count_if(tokens.begin(), tokens.end(), [](const std::string& t) { return letter_count(t) > 6; });
    row.words_over_six_letters = 100.0 * static_cast<double>(long_words) / row.word_count;
    row.categories = category_percentages(tokens, lexicon);
    row.external = external_dims;
    return row;
}

std::vector<Transcript> read_transcripts_csv(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const auto pc = t.require_column("participant_id");
    const auto uc = t.require_column("utterance");
    std::vector<Transcript> out;
    std::map<std::string, std::size_t> index;
    for (const auto& row : t.rows) {
        const auto& id = row.cells[pc];
        if (csv::trim(row.cells[uc]).empty())
            throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(row.line) + ": empty utterance");
        auto [it, fresh] = index.emplace(id, out.size());
        if (fresh) out.push_back(Transcript{id, {}});
        out[it->second].utterances.push_back(row.cells[uc]);
    }
    return out;
}

Transcript read_transcript_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    Transcript tr{path.stem().string(), {}};
    std::string line;
    while (std::getline(in, line)) {
        auto s = csv::trim(line);
        if (!s.empty()) tr.utterances.push_back(s);
    }
    return tr;
}

std::map<std::string, std::map<std::string, double>> read_external_dims_csv(const std::filesystem::path& path) {
    auto t = csv::read(path);
    const auto pc = t.require_column("participant_id");
    const std::pair<const char*, std::string_view> cols[] = {{"analytic", kExternalDimensions[0]},
                                                             {"clout", kExternalDimensions[1]},
                                                             {"authentic", kExternalDimensions[2]},
                                                             {"tone", kExternalDimensions[3]}};
    std::map<std::string, std::map<std::string, double>> out;
    for (const auto& row : t.rows) {
        auto& dims = out[row.cells[pc]];
        for (const auto& [col, name] : cols)
            if (auto c = t.column(col)) dims[std::string(name)] = csv::to_double(t, row, *c);
    }
    return out;
}

}  // namespace expressive::linguistic
