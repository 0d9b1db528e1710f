#include "expressive/visual.hpp"

#include <cmath>
#include <fstream>
#include <regex>

#include "expressive/csv.hpp"
#include "expressive/error.hpp"

namespace expressive::visual {

namespace {

template <class M>
M take_rows(const M& m, const std::vector<Eigen::Index>& keep) {
    M out(static_cast<Eigen::Index>(keep.size()), m.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(keep[i]);
    return out;
}

}  // namespace

TrackChannels TrackChannels::select_rows(const std::vector<Eigen::Index>& keep) const {
    TrackChannels out;
    out.frame = take_rows(frame, keep);
    out.timestamp = take_rows(timestamp, keep);
    out.confidence = take_rows(confidence, keep);
    out.success = take_rows(success, keep);
    out.landmarks_x = take_rows(landmarks_x, keep);
    out.landmarks_y = take_rows(landmarks_y, keep);
    out.head_translation = take_rows(head_translation, keep);
    out.head_rotation = take_rows(head_rotation, keep);
    out.gaze_angle = take_rows(gaze_angle, keep);
    out.au_intensity_names = au_intensity_names;
    out.au_intensity = take_rows(au_intensity, keep);
    out.au_occurrence_names = au_occurrence_names;
    out.au_occurrence = take_rows(au_occurrence, keep);
    return out;
}

bool operator==(const TrackChannels& a, const TrackChannels& b) {
    return a.frame == b.frame && a.timestamp == b.timestamp && a.confidence == b.confidence && a.success == b.success &&
           a.landmarks_x == b.landmarks_x && a.landmarks_y == b.landmarks_y &&
           a.head_translation == b.head_translation && a.head_rotation == b.head_rotation &&
           a.gaze_angle == b.gaze_angle && a.au_intensity_names == b.au_intensity_names &&
           a.au_intensity == b.au_intensity && a.au_occurrence_names == b.au_occurrence_names &&
           a.au_occurrence == b.au_occurrence;
}

std::vector<Eigen::Index> FrameTrack::failed_frames() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < channels.size(); ++i)
        if (channels.success(i) == 0.0) out.push_back(i);
    return out;
}

FrameTrack FrameTrack::without_failed_frames() const {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < channels.size(); ++i)
        if (channels.success(i) != 0.0) keep.push_back(i);
    return FrameTrack{channels.select_rows(keep)};
}

FrameTrack parse_track_text(std::string_view text, std::string source) {
    const auto t = csv::parse(text, std::move(source));
    const auto n = static_cast<Eigen::Index>(t.rows.size());

    const auto c_frame = t.require_column("frame");
    const auto c_time = t.require_column("timestamp");
    const auto c_conf = t.require_column("confidence");
    const auto c_success = t.require_column("success");
    std::vector<std::size_t> c_x, c_y;
    for (int k = 0; k < kLandmarks; ++k) c_x.push_back(t.require_column("x_" + std::to_string(k)));
    for (int k = 0; k < kLandmarks; ++k) c_y.push_back(t.require_column("y_" + std::to_string(k)));
    const std::array<std::size_t, 3> c_trans{t.require_column("pose_Tx"), t.require_column("pose_Ty"),
                                             t.require_column("pose_Tz")};
    const std::array<std::size_t, 3> c_rot{t.require_column("pose_Rx"), t.require_column("pose_Ry"),
                                           t.require_column("pose_Rz")};
    const std::array<std::size_t, 2> c_gaze{t.require_column("gaze_angle_x"), t.require_column("gaze_angle_y")};

    static const std::regex au_r(R"(AU\d+_r)");
    static const std::regex au_c(R"(AU\d+_c)");
    std::vector<std::size_t> c_aur, c_auc;
    FrameTrack track;
    auto& ch = track.channels;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (std::regex_match(t.header[j], au_r)) {
            c_aur.push_back(j);
            ch.au_intensity_names.push_back(t.header[j]);
        } else if (std::regex_match(t.header[j], au_c)) {
            c_auc.push_back(j);
            ch.au_occurrence_names.push_back(t.header[j]);
        }
    }

    ch.frame.resize(n);
    ch.timestamp.resize(n);
    ch.confidence.resize(n);
    ch.success.resize(n);
    ch.landmarks_x.resize(n, kLandmarks);
    ch.landmarks_y.resize(n, kLandmarks);
    ch.head_translation.resize(n, 3);
    ch.head_rotation.resize(n, 3);
    ch.gaze_angle.resize(n, 2);
    ch.au_intensity.resize(n, static_cast<Eigen::Index>(c_aur.size()));
    ch.au_occurrence.resize(n, static_cast<Eigen::Index>(c_auc.size()));

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        auto num = [&](std::size_t c) { return csv::to_double(t, row, c); };
        ch.frame(i) = num(c_frame);
        ch.timestamp(i) = num(c_time);
        ch.confidence(i) = num(c_conf);
        ch.success(i) = num(c_success);
        for (int k = 0; k < kLandmarks; ++k) {
            ch.landmarks_x(i, k) = num(c_x[static_cast<std::size_t>(k)]);
            ch.landmarks_y(i, k) = num(c_y[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k < 3; ++k) {
            ch.head_translation(i, k) = num(c_trans[static_cast<std::size_t>(k)]);
            ch.head_rotation(i, k) = num(c_rot[static_cast<std::size_t>(k)]);
        }
        for (int k = 0; k < 2; ++k) ch.gaze_angle(i, k) = num(c_gaze[static_cast<std::size_t>(k)]);
        for (std::size_t k = 0; k < c_aur.size(); ++k) ch.au_intensity(i, static_cast<Eigen::Index>(k)) = num(c_aur[k]);
        for (std::size_t k = 0; k < c_auc.size(); ++k) ch.au_occurrence(i, static_cast<Eigen::Index>(k)) = num(c_auc[k]);
        if (i > 0 && !(ch.timestamp(i) > ch.timestamp(i - 1)))
            throw Error(ErrorKind::ParseError,
                        t.source + ":" + std::to_string(row.line) + ": timestamps must be strictly increasing");
    }
    return track;
}

FrameTrack parse_track(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + csv_path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_track_text(text, csv_path.string());
}

void write_track(const FrameTrack& track, const std::filesystem::path& csv_path) {
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + csv_path.string());
    const auto& ch = track.channels;
    std::vector<std::string> header{"frame", "timestamp", "confidence", "success", "gaze_angle_x", "gaze_angle_y"};
    for (int k = 0; k < kLandmarks; ++k) header.push_back("x_" + std::to_string(k));
    for (int k = 0; k < kLandmarks; ++k) header.push_back("y_" + std::to_string(k));
    for (const char* p : {"pose_Tx", "pose_Ty", "pose_Tz", "pose_Rx", "pose_Ry", "pose_Rz"}) header.push_back(p);
    header.insert(header.end(), ch.au_intensity_names.begin(), ch.au_intensity_names.end());
    header.insert(header.end(), ch.au_occurrence_names.begin(), ch.au_occurrence_names.end());
    csv::write_row(out, header);
    using csv::format_double;
    for (Eigen::Index i = 0; i < ch.size(); ++i) {
        std::vector<std::string> cells{format_double(ch.frame(i)), format_double(ch.timestamp(i)),
                                       format_double(ch.confidence(i)), format_double(ch.success(i)),
                                       format_double(ch.gaze_angle(i, 0)), format_double(ch.gaze_angle(i, 1))};
        for (int k = 0; k < kLandmarks; ++k) cells.push_back(format_double(ch.landmarks_x(i, k)));
        for (int k = 0; k < kLandmarks; ++k) cells.push_back(format_double(ch.landmarks_y(i, k)));
        for (int k = 0; k < 3; ++k) cells.push_back(format_double(ch.head_translation(i, k)));
        for (int k = 0; k < 3; ++k) cells.push_back(format_double(ch.head_rotation(i, k)));
        for (Eigen::Index k = 0; k < ch.au_intensity.cols(); ++k) cells.push_back(format_double(ch.au_intensity(i, k)));
        for (Eigen::Index k = 0; k < ch.au_occurrence.cols(); ++k) cells.push_back(format_double(ch.au_occurrence(i, k)));
        csv::write_row(out, cells);
    }
}

namespace {

template <class M>
M window_means(const M& m, Eigen::Index windows, int window) {
    M out(windows, m.cols());
    for (Eigen::Index w = 0; w < windows; ++w) out.row(w) = m.middleRows(w * window, window).colwise().mean();
    return out;
}

}  // namespace

IntervalTrack downsample(const FrameTrack& track, int window) {
    if (window < 1) throw Error(ErrorKind::InvalidArgument, "window must be >= 1");
    const auto& ch = track.channels;
    if (ch.size() < window)
        throw Error(ErrorKind::TooShort, "track has " + std::to_string(ch.size()) + " frames, fewer than one window of " +
                                             std::to_string(window));
    const Eigen::Index w = ch.size() / window;
    IntervalTrack out;
    auto& o = out.channels;
    o.frame = window_means(ch.frame, w, window);
    o.timestamp = window_means(ch.timestamp, w, window);
    o.confidence = window_means(ch.confidence, w, window);
    o.success = window_means(ch.success, w, window);
    o.landmarks_x = window_means(ch.landmarks_x, w, window);
    o.landmarks_y = window_means(ch.landmarks_y, w, window);
    o.head_translation = window_means(ch.head_translation, w, window);
    o.head_rotation = window_means(ch.head_rotation, w, window);
    o.gaze_angle = window_means(ch.gaze_angle, w, window);
    o.au_intensity_names = ch.au_intensity_names;
    o.au_intensity = window_means(ch.au_intensity, w, window);
    o.au_occurrence_names = ch.au_occurrence_names;
    o.au_occurrence = window_means(ch.au_occurrence, w, window);
    return out;
}

Landmarks reference_face(std::span<const IntervalTrack> tracks) {
    if (tracks.empty()) throw Error(ErrorKind::EmptyInput, "reference face needs at least one track");
    Landmarks ref;
    ref.x.setZero();
    ref.y.setZero();
    Eigen::Index count = 0;
    for (const auto& t : tracks) {
        ref.x += t.channels.landmarks_x.colwise().sum().transpose();
        ref.y += t.channels.landmarks_y.colwise().sum().transpose();
        count += t.channels.size();
    }
    if (count == 0) throw Error(ErrorKind::EmptyInput, "reference face: tracks contain no intervals");
    ref.x /= static_cast<double>(count);
    ref.y /= static_cast<double>(count);
    return ref;
}

IntervalTrack align_landmarks(const IntervalTrack& track, const Landmarks& reference) {
    IntervalTrack out = track;
    const double rx_mean = reference.x.mean();
    const double ry_mean = reference.y.mean();
    const Eigen::VectorXd rx = reference.x.array() - rx_mean;
    const Eigen::VectorXd ry = reference.y.array() - ry_mean;
    for (Eigen::Index t = 0; t < track.channels.size(); ++t) {
        const Eigen::VectorXd px_raw = track.channels.landmarks_x.row(t).transpose();
        const Eigen::VectorXd py_raw = track.channels.landmarks_y.row(t).transpose();
        const double px_mean = px_raw.mean();
        const double py_mean = py_raw.mean();
        const Eigen::VectorXd px = px_raw.array() - px_mean;
        const Eigen::VectorXd py = py_raw.array() - py_mean;

        Eigen::Matrix2d scatter;
        scatter << px.dot(px), px.dot(py), px.dot(py), py.dot(py);
        const double tr = scatter.trace();
        if (!(tr > 0.0) || scatter.determinant() <= 1e-12 * tr * tr)
            throw Error(ErrorKind::DegenerateConfiguration,
                        "landmarks of interval " + std::to_string(t) + " are collinear or coincident");
        Eigen::Matrix2d cross;  // reference x source
        cross << rx.dot(px), rx.dot(py), ry.dot(px), ry.dot(py);
        const Eigen::Matrix2d a = cross * scatter.inverse();
        const Eigen::Vector2d shift = Eigen::Vector2d(rx_mean, ry_mean) - a * Eigen::Vector2d(px_mean, py_mean);
        for (int k = 0; k < kLandmarks; ++k) {
            const Eigen::Vector2d q = a * Eigen::Vector2d(px_raw(k), py_raw(k)) + shift;
            out.channels.landmarks_x(t, k) = q.x();
            out.channels.landmarks_y(t, k) = q.y();
        }
    }
    return out;
}

Kinematics kinematics(const Eigen::Ref<const Eigen::MatrixXd>& series, double rate_hz) {
    const Eigen::Index n = series.rows();
    if (n < 3) throw Error(ErrorKind::TooShort, "kinematics needs at least 3 samples");
    if (!(rate_hz > 0.0)) throw Error(ErrorKind::InvalidArgument, "rate must be positive");
    const Eigen::MatrixXd step = series.bottomRows(n - 1) - series.topRows(n - 1);
    const Eigen::MatrixXd velocity = step * rate_hz;
    const Eigen::MatrixXd accel = (velocity.bottomRows(n - 2) - velocity.topRows(n - 2)) * rate_hz;
    Kinematics k;
    k.displacement = step.rowwise().norm().mean();
    k.velocity = velocity.rowwise().norm().mean();
    k.acceleration = accel.rowwise().norm().mean();
    return k;
}

Kinematics kinematics(std::span<const double> series, double rate_hz) {
    Eigen::Map<const Eigen::VectorXd> m(series.data(), static_cast<Eigen::Index>(series.size()));
    return kinematics(Eigen::MatrixXd(m), rate_hz);
}

const std::array<std::string, 20>& signal_names() {
    static const std::array<std::string, 20> names{
        "Mean Number of Action Units",   "Mean Action Unit Intensity",   "Mean Landmark Displacement",
        "Mean Landmark Velocity",        "Mean Landmark Acceleration",   "Head Translation Displacement",
        "Head Translation Velocity",     "Head Translation Acceleration", "Head Pitch Displacement",
        "Head Pitch Velocity",           "Head Pitch Acceleration",      "Head Yaw Displacement",
        "Head Yaw Velocity",             "Head Yaw Acceleration",        "Head Roll Displacement",
        "Head Roll Velocity",            "Head Roll Acceleration",       "Gaze Angle Displacement",
        "Gaze Angle Velocity",           "Gaze Angle Acceleration",
    };
    return names;
}

VisualFeatureRow visual_signals(const IntervalTrack& raw, const IntervalTrack& aligned) {
    const auto& r = raw.channels;
    const auto& a = aligned.channels;
    if (r.size() != a.size()) throw Error(ErrorKind::DimensionMismatch, "raw and aligned tracks differ in length");
    if (r.size() < 3) throw Error(ErrorKind::TooShort, "need at least 3 intervals for kinematic signals");

    VisualFeatureRow row{};
    row[0] = r.au_occurrence.cols() > 0 ? r.au_occurrence.rowwise().sum().mean() : 0.0;
    row[1] = r.au_intensity.cols() > 0 ? r.au_intensity.mean() : 0.0;

    Kinematics lm;
    for (int k = 0; k < kLandmarks; ++k) {
        Eigen::MatrixXd pt(a.size(), 2);
        pt.col(0) = a.landmarks_x.col(k);
        pt.col(1) = a.landmarks_y.col(k);
        const auto kk = kinematics(pt);
        lm.displacement += kk.displacement;
        lm.velocity += kk.velocity;
        lm.acceleration += kk.acceleration;
    }
    auto put = [&](std::size_t at, const Kinematics& k) {
        row[at] = k.displacement;
        row[at + 1] = k.velocity;
        row[at + 2] = k.acceleration;
    };
    put(2, lm);
    put(5, kinematics(r.head_translation));
    put(8, kinematics(Eigen::MatrixXd(r.head_rotation.col(0))));
    put(11, kinematics(Eigen::MatrixXd(r.head_rotation.col(1))));
    put(14, kinematics(Eigen::MatrixXd(r.head_rotation.col(2))));
    put(17, kinematics(r.gaze_angle));
    return row;
}

}  // namespace expressive::visual
