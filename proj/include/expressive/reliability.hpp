#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "expressive/core.hpp"

namespace expressive::reliability {

struct IccEstimate {
    double icc = 0.0;
    long n_subjects = 0;
    long n_raters = 0;
    double msr = 0.0;  // between subjects (rows)
    double msc = 0.0;  // between raters (columns)
    double mse = 0.0;  // residual
    double ci_low = 0.0;
    double ci_high = 0.0;
    double confidence = 0.95;
};

/// Two-way random-effects, absolute-agreement ICC for the mean of k raters,
/// ICC(A,k) = (MSR - MSE) / (MSR + (MSC - MSE) / n), with the McGraw & Wong
/// F-distribution interval. Throws DegenerateRatings when MSR = 0.
IccEstimate icc_average_raters(const RatingMatrix& ratings, double confidence = 0.95);

enum class Band { Poor, Moderate, Good, Excellent };

std::string_view to_string(Band band);

/// Lower edges are exclusive: 0.90 is "good", anything above it "excellent".
Band interpret_icc(double value);

std::vector<double> mean_across_raters(const RatingMatrix& ratings);

/// Long-format ratings (`video_id,rater_id,question_id,score`).
struct RatingRecord {
    std::string video_id;
    std::string rater_id;
    std::string question_id;
    double score = 0.0;
};

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(const std::vector<RatingRecord>& records, const std::filesystem::path& path);

/// Videos rated by the same rater panel, as discovered from the records.
struct RaterSet {
    std::vector<std::string> video_ids;
    std::vector<std::string> rater_ids;  // sorted
};

/// Partitions videos into disjoint rater panels (connected components of the
/// video/rater graph). Throws if a panel's matrix is incomplete.
std::vector<RaterSet> discover_rater_sets(const std::vector<RatingRecord>& records);

/// Complete matrix for one question restricted to one rater set.
RatingMatrix build_matrix(const std::vector<RatingRecord>& records, const std::string& question_id,
                          const RaterSet& set);

/// Stacks every set, aligning raters by their position within their panel.
/// All panels must have the same size.
RatingMatrix build_pooled_matrix(const std::vector<RatingRecord>& records, const std::string& question_id,
                                 const std::vector<RaterSet>& sets);

std::vector<std::string> question_ids(const std::vector<RatingRecord>& records);

}  // namespace expressive::reliability
