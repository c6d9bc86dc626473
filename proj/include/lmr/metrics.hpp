#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lmr {

// Similarity alignment of `pred` onto `gt` (rotation + uniform scale +
// translation, closed form via SVD of the centered cross-covariance).
// Degenerate inputs (covariance rank < 2) fall back to translation only.
struct AlignResult {
    std::vector<double> aligned; // K*3
    double rotation[9];          // row-major
    double scaling = 1.0;
    double translation[3];
    bool degenerate = false;
};

AlignResult procrustes_align(std::span<const double> pred, std::span<const double> gt);

// All joint/vertex arrays below are frame-major [t][point][coord], in meters;
// results are reported in millimeters (mm/s^2 for acceleration).
double mpjpe_mm(std::span<const double> pred, std::span<const double> gt,
                std::size_t frames, std::size_t points);
// MPJPE after per-frame alignment; the identity alignment is always a
// candidate, so this never exceeds mpjpe_mm.
double pa_mpjpe_mm(std::span<const double> pred, std::span<const double> gt,
                   std::size_t frames, std::size_t points);
double pve_mm(std::span<const double> pred, std::span<const double> gt,
              std::size_t frames, std::size_t points);
// Second central difference scaled by fps^2; needs at least 3 frames.
double accel_error_mm_s2(std::span<const double> pred, std::span<const double> gt,
                         std::size_t frames, std::size_t points, double fps);

struct MetricsRow {
    std::string variant;
    std::string dataset;
    double mpjpe = 0.0;
    double pa_mpjpe = 0.0;
    double pve = 0.0;
    double accel = 0.0;
};

struct MetricsReport {
    MetricsRow summary;                // mean over sequences
    std::vector<MetricsRow> sequences; // per-sequence breakdown

    std::string to_csv() const;
    void write_csv(const std::filesystem::path& path) const;
};

} // namespace lmr
