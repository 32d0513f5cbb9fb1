#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace interior_ct {

/// Dense row-major 2-D array.
template <typename T>
class Array2D {
  public:
    Array2D() = default;
    Array2D(int rows, int cols, T value = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, value) {
        require(rows >= 0 && cols >= 0, "Array2D: negative extent");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::span<T> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
    std::span<const T> row(int r) const {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
    }

    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    bool same_shape(const Array2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Array2D&, const Array2D&) = default;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Grid = Array2D<double>;
using Mask2D = Array2D<std::uint8_t>;

/// Square image of n_pix x n_pix samples covering fov x fov mm around isocenter.
struct Image {
    Grid data;
    double fov = 0.0;
    std::optional<Mask2D> roi_mask;

    int n_pix() const { return data.rows(); }
    double pixel_size() const { return fov / data.rows(); }
    double x(int col) const { return (col - 0.5 * (data.cols() - 1)) * pixel_size(); }
    double y(int row) const { return (0.5 * (data.rows() - 1) - row) * pixel_size(); }
};

inline Image make_image(int n_pix, double fov) {
    require(n_pix >= 1, "image: n_pix must be >= 1");
    require(fov > 0.0, "image: fov must be > 0");
    return Image{Grid(n_pix, n_pix, 0.0), fov, std::nullopt};
}

/// Pixels whose centers lie within `radius` of isocenter.
inline Mask2D disk_mask(int n_pix, double fov, double radius) {
    Mask2D m(n_pix, n_pix, 0);
    const double px = fov / n_pix;
    const double c = 0.5 * (n_pix - 1);
    for (int i = 0; i < n_pix; ++i)
        for (int j = 0; j < n_pix; ++j) {
            const double x = (j - c) * px, y = (c - i) * px;
            m(i, j) = (x * x + y * y <= radius * radius) ? 1 : 0;
        }
    return m;
}

/// Pixels whose centers lie in the annulus inner <= r <= outer.
inline Mask2D annulus_mask(int n_pix, double fov, double inner, double outer) {
    Mask2D m(n_pix, n_pix, 0);
    const double px = fov / n_pix;
    const double c = 0.5 * (n_pix - 1);
    for (int i = 0; i < n_pix; ++i)
        for (int j = 0; j < n_pix; ++j) {
            const double r = std::hypot((j - c) * px, (c - i) * px);
            m(i, j) = (r >= inner && r <= outer) ? 1 : 0;
        }
    return m;
}

/// Removes `pixels` layers from the boundary of a mask (4-neighbourhood).
inline Mask2D erode(const Mask2D& mask, int pixels) {
    Mask2D cur = mask;
    for (int it = 0; it < pixels; ++it) {
        Mask2D next = cur;
        for (int i = 0; i < cur.rows(); ++i)
            for (int j = 0; j < cur.cols(); ++j) {
                if (!cur(i, j)) continue;
                const bool edge = i == 0 || j == 0 || i == cur.rows() - 1 || j == cur.cols() - 1 ||
                                  !cur(i - 1, j) || !cur(i + 1, j) || !cur(i, j - 1) || !cur(i, j + 1);
                if (edge) next(i, j) = 0;
            }
        cur = std::move(next);
    }
    return cur;
}

inline std::size_t count(const Mask2D& m) {
    std::size_t n = 0;
    for (auto v : m.values()) n += v ? 1 : 0;
    return n;
}

/// Zeroes every pixel outside the mask.
inline Grid apply_mask(const Grid& g, const Mask2D& m) {
    require(g.same_shape(Grid(m.rows(), m.cols())), "apply_mask: shape mismatch");
    Grid out = g;
    for (std::size_t k = 0; k < out.size(); ++k)
        if (!m.values()[k]) out.values()[k] = 0.0;
    return out;
}

/**
 * Fan-beam measurements: n_views rows of n_det line integrals. Channels with
 * mask == 0 were not measured and hold zero.
 */
struct Sinogram {
    Grid data;
    Geometry geom;
    std::vector<std::uint8_t> mask;

    int n_views() const { return data.rows(); }
    int n_det() const { return data.cols(); }
    int n_measured() const {
        int n = 0;
        for (auto v : mask) n += v ? 1 : 0;
        return n;
    }
    bool truncated() const { return n_measured() < n_det(); }
};

inline Sinogram make_sinogram(const Geometry& geom) {
    return Sinogram{Grid(geom.n_views, geom.n_det, 0.0), geom,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(geom.n_det), 1)};
}

/// First kept channel of a centered block; parity mismatch puts the extra channel on the + side.
inline int kept_block_start(int n_det, int n_det_kept) { return (n_det - n_det_kept + 1) / 2; }

/// Zero-pads everything outside the central n_det_kept channels.
inline Sinogram truncate(const Sinogram& sino, int n_det_kept) {
    require(n_det_kept >= 1 && n_det_kept <= sino.n_det(),
            "truncate: n_det_kept must be in [1, " + std::to_string(sino.n_det()) + "]");
    Sinogram out = sino;
    const int first = kept_block_start(sino.n_det(), n_det_kept);
    for (int d = 0; d < sino.n_det(); ++d) {
        const bool keep = d >= first && d < first + n_det_kept && sino.mask[d];
        out.mask[d] = keep ? 1 : 0;
        if (!keep)
            for (int v = 0; v < sino.n_views(); ++v) out.data(v, d) = 0.0;
    }
    return out;
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// ||a - b|| / ||b|| over the pixels selected by mask (all when mask is empty).
inline double relative_l2(const Grid& a, const Grid& b, const Mask2D* mask = nullptr) {
    require(a.same_shape(b), "relative_l2: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (mask && !mask->values()[k]) continue;
        const double d = a.values()[k] - b.values()[k];
        num += d * d;
        den += b.values()[k] * b.values()[k];
    }
    require(den > 0.0, "relative_l2: reference is zero on the selected region");
    return std::sqrt(num / den);
}

} // namespace interior_ct
