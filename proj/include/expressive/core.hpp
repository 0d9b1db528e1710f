#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace expressive {

enum class Modality { Visual, Linguistic };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

/// Subjects x raters scores for one question. Cells are ordinal scores within
/// [score_min, score_max] (0..4 for the five-option scale).
class RatingMatrix {
public:
    RatingMatrix(std::string question_id, std::vector<std::string> subject_ids, std::vector<std::string> rater_ids,
                 Eigen::MatrixXd scores, double score_min = 0.0, double score_max = 4.0);

    const std::string& question_id() const { return question_id_; }
    const std::vector<std::string>& subject_ids() const { return subject_ids_; }
    const std::vector<std::string>& rater_ids() const { return rater_ids_; }
    const Eigen::MatrixXd& scores() const { return scores_; }
    Eigen::Index n_subjects() const { return scores_.rows(); }
    Eigen::Index n_raters() const { return scores_.cols(); }
    double score_min() const { return score_min_; }
    double score_max() const { return score_max_; }

private:
    std::string question_id_;
    std::vector<std::string> subject_ids_;
    std::vector<std::string> rater_ids_;
    Eigen::MatrixXd scores_;
    double score_min_;
    double score_max_;
};

struct FeatureColumn {
    std::string name;
    Modality modality;
    friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

class FeatureTable {
public:
    FeatureTable() = default;
    FeatureTable(std::vector<std::string> participant_ids, std::vector<FeatureColumn> columns, Eigen::MatrixXd values);

    const std::vector<std::string>& participant_ids() const { return participant_ids_; }
    const std::vector<FeatureColumn>& columns() const { return columns_; }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::Index n_rows() const { return values_.rows(); }
    Eigen::Index n_features() const { return values_.cols(); }

    std::vector<std::string> feature_names() const;
    /// Column indices carrying the modality tag; nullopt selects every column.
    std::vector<Eigen::Index> select(std::optional<Modality> modality) const;
    /// Rows reordered to `order` (participant ids); throws MissingParticipant.
    FeatureTable reordered(const std::vector<std::string>& order) const;
    /// Column-wise concatenation over the same participants.
    static FeatureTable concat(const FeatureTable& a, const FeatureTable& b);

    friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
        return a.participant_ids_ == b.participant_ids_ && a.columns_ == b.columns_ && a.values_ == b.values_;
    }

private:
    std::vector<std::string> participant_ids_;
    std::vector<FeatureColumn> columns_;
    Eigen::MatrixXd values_;
};

struct LabelVector {
    std::vector<std::string> participant_ids;
    std::vector<double> values;
    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

struct GroupAssignment {
    std::map<std::string, std::string> group_of;  // participant -> group
    std::size_t group_size = 3;
    friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

/// Per-participant named scores (e.g. the five personality traits).
struct TraitTable {
    std::vector<std::string> participant_ids;
    std::vector<std::string> trait_names;
    Eigen::MatrixXd values;
    friend bool operator==(const TraitTable& a, const TraitTable& b) {
        return a.participant_ids == b.participant_ids && a.trait_names == b.trait_names && a.values == b.values;
    }
};

struct Dataset {
    FeatureTable features;
    LabelVector labels;
    GroupAssignment groups;
    std::optional<TraitTable> traits;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks every cross-member and per-member invariant; throws on violation.
void validate(const Dataset& dataset);
void validate(const GroupAssignment& groups);

/// Population-SD standardization.
std::vector<double> zscore(std::span<const double> values);

struct QuartileBins {
    std::vector<int> bins;
    bool degenerate = false;  // all labels equal: everything placed in bin 0
};

/// Rank-based quartile bins; ties are broken by input position.
QuartileBins quartile_bins(std::span<const double> labels);
/// Ties broken by (value, participant id).
QuartileBins quartile_bins(const LabelVector& labels);

Dataset load_dataset(const std::filesystem::path& manifest_path);
/// Writes manifest.json plus one CSV per member (one features CSV per modality).
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

FeatureTable read_feature_csv(const std::filesystem::path& path, Modality modality);
void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
LabelVector read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const LabelVector& labels, const std::filesystem::path& path);
GroupAssignment read_groups_csv(const std::filesystem::path& path, std::size_t group_size);
void write_groups_csv(const GroupAssignment& groups, const std::filesystem::path& path);
TraitTable read_traits_csv(const std::filesystem::path& path);
void write_traits_csv(const TraitTable& traits, const std::filesystem::path& path);

}  // namespace expressive
