#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "json.hpp"

#include "error.hpp"
#include "image.hpp"

namespace interior_ct {

enum class PsnrMode { paper, standard };

namespace detail {

inline void check_pair(const Grid& est, const Grid& ref, const Mask2D* mask) {
    require(est.same_shape(ref), "metrics: image grids differ (" + std::to_string(est.rows()) + "x" +
                                     std::to_string(est.cols()) + " vs " + std::to_string(ref.rows()) + "x" +
                                     std::to_string(ref.cols()) + ")");
    require(!mask || (mask->rows() == ref.rows() && mask->cols() == ref.cols()), "metrics: mask grid differs");
}

template <typename F>
void for_each_selected(const Grid& est, const Grid& ref, const Mask2D* mask, F&& f) {
    for (std::size_t k = 0; k < ref.size(); ++k)
        if (!mask || mask->values()[k]) f(est.values()[k], ref.values()[k]);
}

} // namespace detail

/**
 * PSNR over the selected pixels (N of them):
 *   paper:    20 log10(N max|ref| / ||est - ref||)
 *   standard: 20 log10(sqrt(N) max|ref| / ||est - ref||)
 * Returns +infinity when est equals ref on the selection.
 */
inline double psnr(const Grid& est, const Grid& ref, PsnrMode mode, const Mask2D* mask = nullptr) {
    detail::check_pair(est, ref, mask);
    double peak = 0.0, err = 0.0;
    std::size_t n = 0;
    detail::for_each_selected(est, ref, mask, [&](double e, double r) {
        peak = std::max(peak, std::abs(r));
        err += (e - r) * (e - r);
        ++n;
    });
    require(n > 0, "psnr: empty selection");
    require(peak > 0.0, "psnr: reference is zero");
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    const double count = mode == PsnrMode::paper ? static_cast<double>(n) : std::sqrt(static_cast<double>(n));
    return 20.0 * std::log10(count * peak / std::sqrt(err));
}

/// Single-window SSIM with k1 = 0.01, k2 = 0.03 and L the dynamic range of ref.
inline double ssim_global(const Grid& est, const Grid& ref, const Mask2D* mask = nullptr) {
    detail::check_pair(est, ref, mask);
    double me = 0.0, mr = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t n = 0;
    detail::for_each_selected(est, ref, mask, [&](double e, double r) {
        me += e;
        mr += r;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        ++n;
    });
    require(n > 0, "ssim: empty selection");
    me /= n;
    mr /= n;
    double ve = 0.0, vr = 0.0, cov = 0.0;
    detail::for_each_selected(est, ref, mask, [&](double e, double r) {
        ve += (e - me) * (e - me);
        vr += (r - mr) * (r - mr);
        cov += (e - me) * (r - mr);
    });
    ve /= n;
    vr /= n;
    cov /= n;
    const double L = hi - lo;
    const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
    const double den = (me * me + mr * mr + c1) * (ve + vr + c2);
    if (den == 0.0) return 1.0;
    return (2.0 * me * mr + c1) * (2.0 * cov + c2) / den;
}

/// ||est - ref||^2 / ||ref||^2 over the selection.
inline double nmse(const Grid& est, const Grid& ref, const Mask2D* mask = nullptr) {
    detail::check_pair(est, ref, mask);
    double num = 0.0, den = 0.0;
    detail::for_each_selected(est, ref, mask, [&](double e, double r) {
        num += (e - r) * (e - r);
        den += r * r;
    });
    require(den > 0.0, "nmse: reference is zero");
    return num / den;
}

struct MetricReport {
    double psnr_paper = 0.0;
    double psnr_standard = 0.0;
    double ssim = 0.0;
    double nmse = 0.0;
    bool roi_masked = false;
};

inline MetricReport evaluate(const Grid& est, const Grid& ref, const Mask2D* mask = nullptr) {
    return MetricReport{psnr(est, ref, PsnrMode::paper, mask), psnr(est, ref, PsnrMode::standard, mask),
                        ssim_global(est, ref, mask), nmse(est, ref, mask), mask != nullptr};
}

namespace detail {

inline nlohmann::json finite_or_tag(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline std::string csv_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Infinite PSNR is written as the string "inf".
inline void to_json(nlohmann::json& j, const MetricReport& m) {
    j = nlohmann::json{{"psnr_paper", detail::finite_or_tag(m.psnr_paper)},
                       {"psnr_standard", detail::finite_or_tag(m.psnr_standard)},
                       {"ssim", m.ssim},
                       {"nmse", m.nmse},
                       {"roi_masked", m.roi_masked}};
}

inline std::string metric_csv_header() { return "psnr_paper,psnr_standard,ssim,nmse,roi_masked"; }

inline std::string metric_csv_row(const MetricReport& m) {
    return detail::csv_number(m.psnr_paper) + ',' + detail::csv_number(m.psnr_standard) + ',' +
           detail::csv_number(m.ssim) + ',' + detail::csv_number(m.nmse) + ',' + (m.roi_masked ? "1" : "0");
}

} // namespace interior_ct
