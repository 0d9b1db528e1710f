#include "expressive/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "expressive/csv.hpp"
#include "expressive/error.hpp"

namespace expressive {

namespace fs = std::filesystem;

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::MissingParticipant: return "MissingParticipant";
        case ErrorKind::NonFiniteValue: return "NonFiniteValue";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::DegenerateRatings: return "DegenerateRatings";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
        case ErrorKind::SingularCovariance: return "SingularCovariance";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::EmptyTokenList: return "EmptyTokenList";
        case ErrorKind::EmptyTranscript: return "EmptyTranscript";
        case ErrorKind::InvalidPattern: return "InvalidPattern";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::Diverged: return "Diverged";
        case ErrorKind::TooFewGroups: return "TooFewGroups";
        case ErrorKind::UnpairedRecords: return "UnpairedRecords";
        case ErrorKind::MixedFeatureSets: return "MixedFeatureSets";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Error";
}

std::string to_string(Modality m) { return m == Modality::Visual ? "visual" : "linguistic"; }

Modality modality_from_string(const std::string& s) {
    if (s == "visual") return Modality::Visual;
    if (s == "linguistic") return Modality::Linguistic;
    throw Error(ErrorKind::InvalidArgument, "unknown modality '" + s + "'");
}

RatingMatrix::RatingMatrix(std::string question_id, std::vector<std::string> subject_ids,
                           std::vector<std::string> rater_ids, Eigen::MatrixXd scores, double score_min,
                           double score_max)
    : question_id_(std::move(question_id)),
      subject_ids_(std::move(subject_ids)),
      rater_ids_(std::move(rater_ids)),
      scores_(std::move(scores)),
      score_min_(score_min),
      score_max_(score_max) {
    if (scores_.rows() < 2 || scores_.cols() < 2)
        throw Error(ErrorKind::TooShort, "rating matrix needs at least 2 subjects and 2 raters");
    if (subject_ids_.size() != static_cast<std::size_t>(scores_.rows()) ||
        rater_ids_.size() != static_cast<std::size_t>(scores_.cols()))
        throw Error(ErrorKind::DimensionMismatch, "rating matrix id lists do not match score dimensions");
    if (!(score_min_ < score_max_)) throw Error(ErrorKind::InvalidArgument, "empty score range");
    for (Eigen::Index i = 0; i < scores_.rows(); ++i)
        for (Eigen::Index j = 0; j < scores_.cols(); ++j) {
            const double v = scores_(i, j);
            if (!std::isfinite(v))
                throw Error(ErrorKind::NonFiniteValue, "rating for subject " + subject_ids_[i] + ", rater " +
                                                           rater_ids_[j]);
            if (v < score_min_ || v > score_max_)
                throw Error(ErrorKind::OutOfRange, "rating " + csv::format_double(v) + " for subject " +
                                                       subject_ids_[i] + ", rater " + rater_ids_[j]);
        }
}

FeatureTable::FeatureTable(std::vector<std::string> participant_ids, std::vector<FeatureColumn> columns,
                           Eigen::MatrixXd values)
    : participant_ids_(std::move(participant_ids)), columns_(std::move(columns)), values_(std::move(values)) {
    if (participant_ids_.size() != static_cast<std::size_t>(values_.rows()) ||
        columns_.size() != static_cast<std::size_t>(values_.cols()))
        throw Error(ErrorKind::DimensionMismatch, "feature table shape does not match ids/columns");
    std::set<std::string> names;
    for (const auto& c : columns_)
        if (!names.insert(c.name).second) throw Error(ErrorKind::InvalidArgument, "duplicate feature '" + c.name + "'");
    std::set<std::string> ids(participant_ids_.begin(), participant_ids_.end());
    if (ids.size() != participant_ids_.size())
        throw Error(ErrorKind::InvalidArgument, "duplicate participant id in feature table");
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j)
            if (!std::isfinite(values_(i, j)))
                throw Error(ErrorKind::NonFiniteValue,
                            "feature '" + columns_[j].name + "' for participant " + participant_ids_[i]);
}

std::vector<std::string> FeatureTable::feature_names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

std::vector<Eigen::Index> FeatureTable::select(std::optional<Modality> modality) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (!modality || columns_[j].modality == *modality) idx.push_back(static_cast<Eigen::Index>(j));
    return idx;
}

FeatureTable FeatureTable::reordered(const std::vector<std::string>& order) const {
    std::map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < participant_ids_.size(); ++i) row_of[participant_ids_[i]] = static_cast<Eigen::Index>(i);
    Eigen::MatrixXd v(static_cast<Eigen::Index>(order.size()), values_.cols());
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto it = row_of.find(order[i]);
        if (it == row_of.end()) throw Error(ErrorKind::MissingParticipant, order[i] + " has no feature row");
        v.row(static_cast<Eigen::Index>(i)) = values_.row(it->second);
    }
    return FeatureTable(order, columns_, std::move(v));
}

FeatureTable FeatureTable::concat(const FeatureTable& a, const FeatureTable& b) {
    if (a.participant_ids_.empty()) return b;
    if (b.participant_ids_.empty()) return a;
    FeatureTable br = b.reordered(a.participant_ids_);
    if (br.n_rows() != static_cast<Eigen::Index>(b.participant_ids_.size()) ||
        a.participant_ids_.size() != b.participant_ids_.size())
        throw Error(ErrorKind::MissingParticipant, "feature tables cover different participants");
    Eigen::MatrixXd v(a.n_rows(), a.n_features() + b.n_features());
    v << a.values_, br.values_;
    auto cols = a.columns_;
    cols.insert(cols.end(), b.columns_.begin(), b.columns_.end());
    return FeatureTable(a.participant_ids_, std::move(cols), std::move(v));
}

void validate(const GroupAssignment& groups) {
    if (groups.group_size == 0) throw Error(ErrorKind::InvalidArgument, "group size must be positive");
    std::map<std::string, std::size_t> sizes;
    for (const auto& [p, g] : groups.group_of) ++sizes[g];
    for (const auto& [g, n] : sizes)
        if (n != groups.group_size)
            throw Error(ErrorKind::InvalidArgument, "group " + g + " has " + std::to_string(n) + " members, expected " +
                                                        std::to_string(groups.group_size));
}

void validate(const Dataset& d) {
    const auto& ids = d.labels.participant_ids;
    if (ids.size() != d.labels.values.size())
        throw Error(ErrorKind::DimensionMismatch, "label ids and values differ in length");
    std::set<std::string> idset(ids.begin(), ids.end());
    if (idset.size() != ids.size()) throw Error(ErrorKind::InvalidArgument, "duplicate participant in labels");
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (!std::isfinite(d.labels.values[i]))
            throw Error(ErrorKind::NonFiniteValue, "label for participant " + ids[i]);

    auto check_same = [&](const std::vector<std::string>& other, const std::string& what) {
        std::set<std::string> o(other.begin(), other.end());
        for (const auto& p : idset)
            if (!o.count(p)) throw Error(ErrorKind::MissingParticipant, p + " missing from " + what);
        for (const auto& p : o)
            if (!idset.count(p)) throw Error(ErrorKind::MissingParticipant, p + " missing from labels (present in " + what + ")");
    };
    check_same(d.features.participant_ids(), "features");
    std::vector<std::string> gids;
    for (const auto& [p, g] : d.groups.group_of) gids.push_back(p);
    check_same(gids, "groups");
    validate(d.groups);
    if (d.traits) {
        check_same(d.traits->participant_ids, "traits");
        for (Eigen::Index i = 0; i < d.traits->values.rows(); ++i)
            for (Eigen::Index j = 0; j < d.traits->values.cols(); ++j)
                if (!std::isfinite(d.traits->values(i, j)))
                    throw Error(ErrorKind::NonFiniteValue, "trait " + d.traits->trait_names[j]);
    }
}

std::vector<double> zscore(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorKind::TooShort, "zscore needs at least 2 values");
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(values.size()));
    if (!(sd > 0.0)) throw Error(ErrorKind::ZeroVariance, "zscore of a constant vector");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - m) / sd;
    return out;
}

namespace {

QuartileBins bins_from_order(std::span<const double> labels, std::vector<std::size_t> order) {
    const std::size_t n = labels.size();
    QuartileBins out;
    out.bins.assign(n, 0);
    if (std::all_of(labels.begin(), labels.end(), [&](double v) { return v == labels[0]; })) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t r = 0; r < n; ++r) out.bins[order[r]] = static_cast<int>((4 * r) / n);
    return out;
}

}  // namespace

QuartileBins quartile_bins(std::span<const double> labels) {
    if (labels.size() < 4) throw Error(ErrorKind::TooShort, "quartile binning needs at least 4 labels");
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    return bins_from_order(labels, std::move(order));
}

QuartileBins quartile_bins(const LabelVector& labels) {
    const auto& v = labels.values;
    if (v.size() < 4) throw Error(ErrorKind::TooShort, "quartile binning needs at least 4 labels");
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] < v[b];
        return labels.participant_ids[a] < labels.participant_ids[b];
    });
    return bins_from_order(v, std::move(order));
}

// ---------------------------------------------------------------- file I/O

namespace {

void check_unique(const std::vector<std::string>& ids, const std::string& source) {
    std::set<std::string> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second) throw Error(ErrorKind::ParseError, source + ": duplicate participant " + id);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return out;
}

}  // namespace

FeatureTable read_feature_csv(const fs::path& path, Modality modality) {
    auto t = csv::read(path);
    if (t.header.empty() || t.header[0] != "participant_id")
        throw Error(ErrorKind::ParseError, path.string() + ": first column must be participant_id");
    std::vector<std::string> ids;
    std::vector<FeatureColumn> cols;
    for (std::size_t j = 1; j < t.header.size(); ++j) cols.push_back({t.header[j], modality});
    Eigen::MatrixXd v(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        ids.push_back(t.rows[i].cells[0]);
        for (std::size_t j = 1; j < t.header.size(); ++j)
            v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = csv::to_double(t, t.rows[i], j);
    }
    check_unique(ids, path.string());
    return FeatureTable(std::move(ids), std::move(cols), std::move(v));
}

void write_feature_csv(const FeatureTable& table, const fs::path& path) {
    auto out = open_out(path);
    std::vector<std::string> header{"participant_id"};
    for (const auto& c : table.columns()) header.push_back(c.name);
    csv::write_row(out, header);
    for (Eigen::Index i = 0; i < table.n_rows(); ++i) {
        std::vector<std::string> cells{table.participant_ids()[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < table.n_features(); ++j) cells.push_back(csv::format_double(table.values()(i, j)));
        csv::write_row(out, cells);
    }
}

LabelVector read_labels_csv(const fs::path& path) {
    auto t = csv::read(path);
    const auto pc = t.require_column("participant_id");
    const auto lc = t.require_column("label");
    LabelVector out;
    for (const auto& row : t.rows) {
        out.participant_ids.push_back(row.cells[pc]);
        out.values.push_back(csv::to_double(t, row, lc));
    }
    check_unique(out.participant_ids, path.string());
    return out;
}

void write_labels_csv(const LabelVector& labels, const fs::path& path) {
    auto out = open_out(path);
    csv::write_row(out, {"participant_id", "label"});
    for (std::size_t i = 0; i < labels.values.size(); ++i)
        csv::write_row(out, {labels.participant_ids[i], csv::format_double(labels.values[i])});
}

GroupAssignment read_groups_csv(const fs::path& path, std::size_t group_size) {
    auto t = csv::read(path);
    const auto pc = t.require_column("participant_id");
    const auto gc = t.require_column("group_id");
    GroupAssignment out;
    out.group_size = group_size;
    for (const auto& row : t.rows)
        if (!out.group_of.emplace(row.cells[pc], row.cells[gc]).second)
            throw Error(ErrorKind::ParseError,
                        path.string() + ":" + std::to_string(row.line) + ": duplicate participant " + row.cells[pc]);
    return out;
}

void write_groups_csv(const GroupAssignment& groups, const fs::path& path) {
    auto out = open_out(path);
    csv::write_row(out, {"participant_id", "group_id"});
    for (const auto& [p, g] : groups.group_of) csv::write_row(out, {p, g});
}

TraitTable read_traits_csv(const fs::path& path) {
    auto t = csv::read(path);
    if (t.header.empty() || t.header[0] != "participant_id")
        throw Error(ErrorKind::ParseError, path.string() + ": first column must be participant_id");
    TraitTable out;
    out.trait_names.assign(t.header.begin() + 1, t.header.end());
    out.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(out.trait_names.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.participant_ids.push_back(t.rows[i].cells[0]);
        for (std::size_t j = 1; j < t.header.size(); ++j)
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = csv::to_double(t, t.rows[i], j);
    }
    check_unique(out.participant_ids, path.string());
    return out;
}

void write_traits_csv(const TraitTable& traits, const fs::path& path) {
    auto out = open_out(path);
    std::vector<std::string> header{"participant_id"};
    header.insert(header.end(), traits.trait_names.begin(), traits.trait_names.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < traits.participant_ids.size(); ++i) {
        std::vector<std::string> cells{traits.participant_ids[i]};
        for (Eigen::Index j = 0; j < traits.values.cols(); ++j)
            cells.push_back(csv::format_double(traits.values(static_cast<Eigen::Index>(i), j)));
        csv::write_row(out, cells);
    }
}

Dataset load_dataset(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open manifest " + manifest_path.string());
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
    }
    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    Dataset d;
    try {
        const auto& feats = m.at("features");
        if (!feats.is_array() || feats.empty())
            throw Error(ErrorKind::ParseError, manifest_path.string() + ": 'features' must be a non-empty array");
        d.labels = read_labels_csv(resolve(m.at("labels").get<std::string>()));
        FeatureTable all;
        for (const auto& f : feats) {
            auto t = read_feature_csv(resolve(f.at("path").get<std::string>()),
                                      modality_from_string(f.at("modality").get<std::string>()));
            {
                std::set<std::string> lab(d.labels.participant_ids.begin(), d.labels.participant_ids.end());
                for (const auto& p : t.participant_ids())
                    if (!lab.count(p)) throw Error(ErrorKind::MissingParticipant, p + " missing from labels");
            }
            all = FeatureTable::concat(all, t.reordered(d.labels.participant_ids));
        }
        d.features = std::move(all);
        d.groups = read_groups_csv(resolve(m.at("groups").get<std::string>()), m.value("group_size", std::size_t{3}));
        if (m.contains("traits") && !m.at("traits").is_null())
            d.traits = read_traits_csv(resolve(m.at("traits").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
    }
    validate(d);
    if (d.traits) {
        // Align trait rows with label order.
        std::map<std::string, Eigen::Index> row_of;
        for (std::size_t i = 0; i < d.traits->participant_ids.size(); ++i)
            row_of[d.traits->participant_ids[i]] = static_cast<Eigen::Index>(i);
        Eigen::MatrixXd v(d.traits->values.rows(), d.traits->values.cols());
        for (std::size_t i = 0; i < d.labels.participant_ids.size(); ++i)
            v.row(static_cast<Eigen::Index>(i)) = d.traits->values.row(row_of.at(d.labels.participant_ids[i]));
        d.traits->values = std::move(v);
        d.traits->participant_ids = d.labels.participant_ids;
    }
    return d;
}

void save_dataset(const Dataset& d, const fs::path& dir) {
    validate(d);
    fs::create_directories(dir);
    nlohmann::json m;
    m["features"] = nlohmann::json::array();
    // One CSV per run of consecutive same-modality columns, so column order survives a reload.
    const auto& all_cols = d.features.columns();
    std::size_t start = 0;
    std::map<Modality, int> file_count;
    while (start < all_cols.size()) {
        const Modality mod = all_cols[start].modality;
        std::size_t stop = start;
        while (stop < all_cols.size() && all_cols[stop].modality == mod) ++stop;
        std::vector<FeatureColumn> cols(all_cols.begin() + static_cast<std::ptrdiff_t>(start),
                                        all_cols.begin() + static_cast<std::ptrdiff_t>(stop));
        Eigen::MatrixXd v = d.features.values().middleCols(static_cast<Eigen::Index>(start),
                                                          static_cast<Eigen::Index>(stop - start));
        const int file_index = file_count[mod]++;
        const std::string name = to_string(mod) + "_features" + (file_index ? "_" + std::to_string(file_index) : "") + ".csv";
        write_feature_csv(FeatureTable(d.features.participant_ids(), std::move(cols), std::move(v)), dir / name);
        m["features"].push_back({{"path", name}, {"modality", to_string(mod)}});
        start = stop;
    }
    write_labels_csv(d.labels, dir / "labels.csv");
    write_groups_csv(d.groups, dir / "groups.csv");
    m["labels"] = "labels.csv";
    m["groups"] = "groups.csv";
    m["group_size"] = d.groups.group_size;
    if (d.traits) {
        write_traits_csv(*d.traits, dir / "traits.csv");
        m["traits"] = "traits.csv";
    }
    auto out = open_out(dir / "manifest.json");
    out << m.dump(2) << '\n';
}

}  // namespace expressive
