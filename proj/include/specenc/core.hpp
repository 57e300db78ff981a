#pragma once

#include "specenc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace specenc
{
    // Real-valued row-major raster shared by depth maps, masks and spectra.
    // Immutable after construction; every value is finite.
    class PixelGrid
    {
    public:
        PixelGrid(std::size_t rows, std::size_t cols, std::vector<double> values)
            : rows_(rows), cols_(cols), values_(std::move(values))
        {
            if (rows_ == 0 || cols_ == 0)
                throw DomainError("PixelGrid: rows and cols must be positive");
            if (values_.size() != rows_ * cols_)
                throw DomainError("PixelGrid: expected " + std::to_string(rows_ * cols_) + " values, got " +
                                  std::to_string(values_.size()));
            for (double v : values_)
                if (!std::isfinite(v))
                    throw DomainError("PixelGrid: non-finite value");
        }

        static PixelGrid filled(std::size_t rows, std::size_t cols, double value)
        {
            return PixelGrid(rows, cols, std::vector<double>(rows * cols, value));
        }

        static PixelGrid zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, 0.0); }

        std::size_t rows() const noexcept { return rows_; }
        std::size_t cols() const noexcept { return cols_; }
        std::size_t size() const noexcept { return values_.size(); }

        double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

        double at(std::size_t r, std::size_t c) const
        {
            if (r >= rows_ || c >= cols_)
                throw IndexError("PixelGrid: index out of range");
            return values_[r * cols_ + c];
        }

        std::span<const double> values() const noexcept { return values_; }

        bool same_shape(const PixelGrid &other) const noexcept
        {
            return rows_ == other.rows_ && cols_ == other.cols_;
        }

        double min() const { return *std::min_element(values_.begin(), values_.end()); }
        double max() const { return *std::max_element(values_.begin(), values_.end()); }

        friend bool operator==(const PixelGrid &, const PixelGrid &) = default;

    private:
        std::size_t rows_;
        std::size_t cols_;
        std::vector<double> values_;
    };

    // Uniform, endpoint-inclusive grid of angles. Degrees at the API surface, radians inside.
    class AngleGrid
    {
    public:
        double min_deg() const noexcept { return min_deg_; }
        double max_deg() const noexcept { return max_deg_; }
        std::size_t count() const noexcept { return angles_.size(); }
        std::span<const double> angles() const noexcept { return angles_; }
        double operator[](std::size_t i) const noexcept { return angles_[i]; }
        double step_deg() const noexcept { return (max_deg_ - min_deg_) / static_cast<double>(count() - 1); }

        friend bool operator==(const AngleGrid &, const AngleGrid &) = default;

        friend AngleGrid make_angle_grid(double min_deg, double max_deg, std::size_t count);

    private:
        AngleGrid() = default;

        double min_deg_ = 0.0;
        double max_deg_ = 0.0;
        std::vector<double> angles_;
    };

    inline double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
    inline double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

    inline AngleGrid make_angle_grid(double min_deg, double max_deg, std::size_t count)
    {
        if (!(min_deg > -90.0 && min_deg < max_deg && max_deg < 90.0))
            throw DomainError("angle grid: require -90 < min < max < 90 degrees");
        if (count < 2)
            throw DomainError("angle grid: count must be at least 2");

        AngleGrid g;
        g.min_deg_ = min_deg;
        g.max_deg_ = max_deg;
        g.angles_.resize(count);
        const double last = static_cast<double>(count - 1);
        for (std::size_t i = 0; i < count; ++i)
        {
            // Interpolate from both ends so a symmetric grid has an exact zero in the middle.
            const double t = static_cast<double>(i) / last;
            const double deg = (i == count - 1) ? max_deg : min_deg * (1.0 - t) + max_deg * t;
            g.angles_[i] = deg_to_rad(deg);
        }
        return g;
    }

    struct Point3
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;

        friend bool operator==(const Point3 &, const Point3 &) = default;
    };

    inline double distance(const Point3 &a, const Point3 &b) noexcept
    {
        const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    }

    // Set of 3D points in meters.
    class PointCloud
    {
    public:
        PointCloud() = default;

        explicit PointCloud(std::vector<Point3> points) : points_(std::move(points))
        {
            for (const auto &p : points_)
                if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                    throw DomainError("PointCloud: non-finite coordinate");
        }

        std::size_t size() const noexcept { return points_.size(); }
        bool empty() const noexcept { return points_.empty(); }
        std::span<const Point3> points() const noexcept { return points_; }
        const Point3 &operator[](std::size_t i) const noexcept { return points_[i]; }

        friend bool operator==(const PointCloud &, const PointCloud &) = default;

    private:
        std::vector<Point3> points_;
    };

    // N x K non-negative spatial power spectrum; rows run over phi, columns over theta.
    class Spectrum
    {
    public:
        Spectrum(PixelGrid grid, std::size_t m_segments, AngleGrid phi, AngleGrid theta)
            : grid_(std::move(grid)), m_segments_(m_segments), phi_(std::move(phi)), theta_(std::move(theta))
        {
            if (m_segments_ == 0)
                throw DomainError("Spectrum: m_segments must be positive");
            if (grid_.rows() != phi_.count() || grid_.cols() != theta_.count())
                throw DomainError("Spectrum: grid shape does not match angle grids");
            if (grid_.min() < 0.0)
                throw DomainError("Spectrum: negative power");
        }

        const PixelGrid &grid() const noexcept { return grid_; }
        std::size_t m_segments() const noexcept { return m_segments_; }
        const AngleGrid &phi() const noexcept { return phi_; }
        const AngleGrid &theta() const noexcept { return theta_; }

    private:
        PixelGrid grid_;
        std::size_t m_segments_;
        AngleGrid phi_;
        AngleGrid theta_;
    };

    // (g - min) / (max - min); constant grids map to all zeros.
    inline PixelGrid normalize_grid(const PixelGrid &g)
    {
        const double lo = g.min();
        const double hi = g.max();
        std::vector<double> out(g.size(), 0.0);
        if (hi > lo)
        {
            const double span = hi - lo;
            auto in = g.values();
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = (in[i] - lo) / span;
        }
        return PixelGrid(g.rows(), g.cols(), std::move(out));
    }

    // Divides by the peak value; zero grids stay zero. Unlike normalize_grid, exact zeros are preserved.
    inline PixelGrid scale_to_peak(const PixelGrid &g)
    {
        const double hi = g.max();
        std::vector<double> out(g.values().begin(), g.values().end());
        if (hi > 0.0)
            for (double &v : out)
                v /= hi;
        return PixelGrid(g.rows(), g.cols(), std::move(out));
    }

    inline PixelGrid transpose(const PixelGrid &g)
    {
        std::vector<double> out(g.size());
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c)
                out[c * g.rows() + r] = g(r, c);
        return PixelGrid(g.cols(), g.rows(), std::move(out));
    }

    // Nearest-neighbour resampling by pixel-centre alignment.
    inline PixelGrid resample_nearest(const PixelGrid &g, std::size_t rows, std::size_t cols)
    {
        if (rows == g.rows() && cols == g.cols())
            return g;
        std::vector<std::size_t> src_r(rows), src_c(cols);
        for (std::size_t r = 0; r < rows; ++r)
            src_r[r] = std::min(g.rows() - 1, static_cast<std::size_t>((static_cast<double>(r) + 0.5) *
                                                                       static_cast<double>(g.rows()) /
                                                                       static_cast<double>(rows)));
        for (std::size_t c = 0; c < cols; ++c)
            src_c[c] = std::min(g.cols() - 1, static_cast<std::size_t>((static_cast<double>(c) + 0.5) *
                                                                       static_cast<double>(g.cols()) /
                                                                       static_cast<double>(cols)));
        std::vector<double> out(rows * cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out[r * cols + c] = g(src_r[r], src_c[c]);
        return PixelGrid(rows, cols, std::move(out));
    }
}
