#include "lmr/metrics.hpp"

#include "lmr/errors.hpp"
#include "lmr/serialize.hpp"

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lmr {

namespace {

void check_points(std::span<const double> pred, std::span<const double> gt,
                  std::size_t frames, std::size_t points, std::size_t coords,
                  const char* what) {
    const std::size_t n = frames * points * coords;
    if (pred.size() != n || gt.size() != n)
        throw NumericError(std::string(what) + ": shape mismatch, got " +
                           std::to_string(pred.size()) + " and " + std::to_string(gt.size()) +
                           " values, expected " + std::to_string(n));
}

double mean_point_dist_mm(const double* pred, const double* gt, std::size_t points) {
    double acc = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        double ss = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = pred[k * 3 + c] - gt[k * 3 + c];
            ss += d * d;
        }
        acc += std::sqrt(ss);
    }
    return 1000.0 * acc / static_cast<double>(points);
}

} // namespace

AlignResult procrustes_align(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size() || pred.size() % 3 != 0 || pred.size() < 9)
        throw NumericError("procrustes_align: need matching (K,3) sets with K >= 3, got " +
                           std::to_string(pred.size()) + " and " + std::to_string(gt.size()) +
                           " values");
    const std::size_t k = pred.size() / 3;
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
    Eigen::Map<const Mat> p(pred.data(), k, 3);
    Eigen::Map<const Mat> g(gt.data(), k, 3);

    const Eigen::RowVector3d mu_p = p.colwise().mean();
    const Eigen::RowVector3d mu_g = g.colwise().mean();
    const Mat pc = p.rowwise() - mu_p;
    const Mat gc = g.rowwise() - mu_g;

    const double var_p = pc.squaredNorm() / static_cast<double>(k);
    const Eigen::Matrix3d cov = gc.transpose() * pc / static_cast<double>(k);

    AlignResult out;
    out.aligned.resize(pred.size());

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv(0));
    const int rank = (sv(0) > tol) + (sv(1) > tol) + (sv(2) > tol);

    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
    double s = 1.0;
    Eigen::RowVector3d t;
    if (rank < 2 || var_p <= 0.0) {
        out.degenerate = true;
        t = mu_g - mu_p;
    } else {
        Eigen::Vector3d d = Eigen::Vector3d::Ones();
        if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2) = -1.0;
        rot = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
        s = (sv(0) * d(0) + sv(1) * d(1) + sv(2) * d(2)) / var_p;
        t = mu_g - s * (rot * mu_p.transpose()).transpose();
    }

    Eigen::Map<Mat> aligned(out.aligned.data(), k, 3);
    const Eigen::RowVector3d shift = (s * (rot * mu_p.transpose())).transpose() + t;
    aligned = (s * (rot * pc.transpose())).transpose().rowwise() + shift;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.rotation[r * 3 + c] = rot(r, c);
    out.scaling = s;
    for (int c = 0; c < 3; ++c) out.translation[c] = t(c);
    return out;
}

double mpjpe_mm(std::span<const double> pred, std::span<const double> gt, std::size_t frames,
                std::size_t points) {
    check_points(pred, gt, frames, points, 3, "mpjpe");
    double acc = 0.0;
    for (std::size_t tt = 0; tt < frames; ++tt)
        acc += mean_point_dist_mm(pred.data() + tt * points * 3, gt.data() + tt * points * 3,
                                  points);
    return acc / static_cast<double>(frames);
}

double pa_mpjpe_mm(std::span<const double> pred, std::span<const double> gt,
                   std::size_t frames, std::size_t points) {
    check_points(pred, gt, frames, points, 3, "pa_mpjpe");
    double acc = 0.0;
    for (std::size_t tt = 0; tt < frames; ++tt) {
        const auto p = pred.subspan(tt * points * 3, points * 3);
        const auto g = gt.subspan(tt * points * 3, points * 3);
        const AlignResult a = procrustes_align(p, g);
        const double aligned_err = mean_point_dist_mm(a.aligned.data(), g.data(), points);
        const double raw_err = mean_point_dist_mm(p.data(), g.data(), points);
        acc += std::min(aligned_err, raw_err);
    }
    return acc / static_cast<double>(frames);
}

double pve_mm(std::span<const double> pred, std::span<const double> gt, std::size_t frames,
              std::size_t points) {
    check_points(pred, gt, frames, points, 3, "pve");
    return mpjpe_mm(pred, gt, frames, points);
}

double accel_error_mm_s2(std::span<const double> pred, std::span<const double> gt,
                         std::size_t frames, std::size_t points, double fps) {
    check_points(pred, gt, frames, points, 3, "accel_error");
    if (frames < 3)
        throw NumericError("accel_error: needs at least 3 frames, got " +
                           std::to_string(frames));
    const double fps2 = fps * fps;
    const std::size_t stride = points * 3;
    double acc = 0.0;
    for (std::size_t tt = 1; tt + 1 < frames; ++tt) {
        for (std::size_t k = 0; k < points; ++k) {
            double ss = 0.0;
            for (int c = 0; c < 3; ++c) {
                const std::size_t i = tt * stride + k * 3 + static_cast<std::size_t>(c);
                const double ap = (pred[i + stride] - 2.0 * pred[i] + pred[i - stride]) * fps2;
                const double ag = (gt[i + stride] - 2.0 * gt[i] + gt[i - stride]) * fps2;
                const double d = ag - ap;
                ss += d * d;
            }
            acc += std::sqrt(ss);
        }
    }
    return 1000.0 * acc / static_cast<double>((frames - 2) * points);
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "variant,dataset,mpjpe,pa_mpjpe,pve,accel\n";
    auto row = [&os](const MetricsRow& r) {
        os << r.variant << ',' << r.dataset << ',' << ser::format_double(r.mpjpe) << ','
           << ser::format_double(r.pa_mpjpe) << ',' << ser::format_double(r.pve) << ','
           << ser::format_double(r.accel) << '\n';
    };
    row(summary);
    for (const auto& r : sequences) row(r);
    return os.str();
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << to_csv();
    os.flush();
    if (!os) throw IoError("write failed: " + path.string());
}

} // namespace lmr
