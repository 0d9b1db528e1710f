#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace expressive::visual {

inline constexpr int kLandmarks = 68;
inline constexpr double kIntervalRateHz = 6.0;

/// Face-tracking channels, one row per sample. Used both for raw frames and
/// for 5-frame interval averages.
struct TrackChannels {
    Eigen::VectorXd frame;
    Eigen::VectorXd timestamp;
    Eigen::VectorXd confidence;
    Eigen::VectorXd success;        // 1/0 per frame; fraction for intervals
    Eigen::MatrixXd landmarks_x;    // samples x 68
    Eigen::MatrixXd landmarks_y;    // samples x 68
    Eigen::MatrixXd head_translation;  // samples x 3 (Tx, Ty, Tz), mm
    Eigen::MatrixXd head_rotation;     // samples x 3 (pitch Rx, yaw Ry, roll Rz), rad
    Eigen::MatrixXd gaze_angle;        // samples x 2, rad
    std::vector<std::string> au_intensity_names;  // e.g. AU01_r
    Eigen::MatrixXd au_intensity;                 // samples x channels
    std::vector<std::string> au_occurrence_names;  // e.g. AU01_c
    Eigen::MatrixXd au_occurrence;

    Eigen::Index size() const { return timestamp.size(); }
    /// Rows `keep` only, in order.
    TrackChannels select_rows(const std::vector<Eigen::Index>& keep) const;

    friend bool operator==(const TrackChannels& a, const TrackChannels& b);
};

struct FrameTrack {
    TrackChannels channels;
    std::vector<Eigen::Index> failed_frames() const;
    FrameTrack without_failed_frames() const;
};

struct IntervalTrack {
    TrackChannels channels;
};

/// Parses an OpenFace 2.0 CSV (extra columns ignored). Throws MissingColumn
/// naming the first absent required column, ParseError with line numbers.
FrameTrack parse_track(const std::filesystem::path& csv_path);
FrameTrack parse_track_text(std::string_view text, std::string source = "<memory>");
void write_track(const FrameTrack& track, const std::filesystem::path& csv_path);

/// Non-overlapping window means; trailing frames that do not fill a window are dropped.
IntervalTrack downsample(const FrameTrack& track, int window = 5);

struct Landmarks {
    Eigen::Matrix<double, kLandmarks, 1> x;
    Eigen::Matrix<double, kLandmarks, 1> y;
};

/// Per-point mean over every interval of every track.
Landmarks reference_face(std::span<const IntervalTrack> tracks);

/// Least-squares 2-D affine map (6 parameters) of each interval's landmarks
/// onto the reference, applied to that interval. Other channels unchanged.
IntervalTrack align_landmarks(const IntervalTrack& track, const Landmarks& reference);

struct Kinematics {
    double displacement = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;
};

/// Rows are samples of a d-dimensional point. d_t = |x_t - x_{t-1}|,
/// v_t = (x_t - x_{t-1}) * rate, a_t = (v_{t+1} - v_t) * rate; returns the
/// means of d_t, |v_t| and |a_t|.
Kinematics kinematics(const Eigen::Ref<const Eigen::MatrixXd>& series, double rate_hz = kIntervalRateHz);
Kinematics kinematics(std::span<const double> series, double rate_hz = kIntervalRateHz);

/// The 20 visual signal names, in output order.
const std::array<std::string, 20>& signal_names();

using VisualFeatureRow = std::array<double, 20>;

VisualFeatureRow visual_signals(const IntervalTrack& raw, const IntervalTrack& aligned);

}  // namespace expressive::visual
