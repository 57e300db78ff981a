#pragma once

#include "specenc/core.hpp"
#include "specenc/spectrum.hpp"

#include <cmath>
#include <deque>
#include <vector>

namespace specenc
{
    // Pinhole camera without distortion. Depth maps it produces store depth_min / z per pixel.
    struct CameraModel
    {
        double fx = 56.0;
        double fy = 56.0;
        double cx = 32.0;
        double cy = 32.0;
        std::size_t width = 64;
        std::size_t height = 64;
        double depth_min = 1.0;
        double depth_max = 50.0;

        void validate() const
        {
            if (!(fx > 0.0 && fy > 0.0))
                throw DomainError("camera: focal lengths must be positive");
            if (width == 0 || height == 0)
                throw DomainError("camera: width and height must be positive");
            if (!(cx >= 0.0 && cx < static_cast<double>(width) && cy >= 0.0 && cy < static_cast<double>(height)))
                throw DomainError("camera: principal point outside the image");
            if (!(depth_min > 0.0 && depth_min < depth_max))
                throw DomainError("camera: require 0 < depth_min < depth_max");
        }

        friend bool operator==(const CameraModel &, const CameraModel &) = default;
    };

    // Pinhole projection to an inverse-depth raster. Points behind the camera, outside the depth range or
    // outside the image are dropped; when several land on one pixel the nearest wins.
    inline PixelGrid project_to_depth_map(const PointCloud &cloud, const CameraModel &cam)
    {
        cam.validate();
        std::vector<double> out(cam.width * cam.height, 0.0);
        for (const Point3 &p : cloud.points())
        {
            if (p.z <= 0.0 || p.z < cam.depth_min || p.z > cam.depth_max)
                continue;
            const double u = cam.fx * p.x / p.z + cam.cx;
            const double v = cam.fy * p.y / p.z + cam.cy;
            const double col = std::floor(u + 0.5);
            const double row = std::floor(v + 0.5);
            if (col < 0.0 || row < 0.0 || col >= static_cast<double>(cam.width) ||
                row >= static_cast<double>(cam.height))
                continue;
            double &cell = out[static_cast<std::size_t>(row) * cam.width + static_cast<std::size_t>(col)];
            cell = std::max(cell, cam.depth_min / p.z);
        }
        return PixelGrid(cam.height, cam.width, std::move(out));
    }

    // Inverse of project_to_depth_map for every non-zero pixel, placing the point at the pixel centre.
    inline PointCloud unproject_depth_map(const PixelGrid &depth_map, const CameraModel &cam)
    {
        cam.validate();
        std::vector<Point3> pts;
        for (std::size_t r = 0; r < depth_map.rows(); ++r)
            for (std::size_t c = 0; c < depth_map.cols(); ++c)
            {
                const double v = depth_map(r, c);
                if (v <= 0.0)
                    continue;
                const double z = cam.depth_min / v;
                pts.push_back({(static_cast<double>(c) - cam.cx) * z / cam.fx,
                               (static_cast<double>(r) - cam.cy) * z / cam.fy, z});
            }
        return PointCloud(std::move(pts));
    }

    // Largest metric displacement caused by snapping a point at depth z to its pixel centre.
    inline double pixel_snap_bound(double z, const CameraModel &cam) noexcept
    {
        const double ex = 0.5 * z / cam.fx;
        const double ey = 0.5 * z / cam.fy;
        return std::sqrt(ex * ex + ey * ey);
    }

    // Per-cell range in meters, in spectrum layout, from an inverse-depth image. Cells without a return
    // take the range of the nearest cell that has one (4-connected flood, row-major seed order); with no
    // returns at all every cell gets depth_max.
    inline PixelGrid depth_hint_from_depth_map(const PixelGrid &depth_map, const Spectrum &like,
                                               const CameraModel &cam)
    {
        cam.validate();
        const PixelGrid laid_out = to_spectrum_layout(depth_map, like);
        const std::size_t rows = laid_out.rows(), cols = laid_out.cols();
        std::vector<double> range(rows * cols, 0.0);
        std::vector<bool> set(rows * cols, false);
        std::deque<std::size_t> frontier;
        for (std::size_t i = 0; i < range.size(); ++i)
        {
            const double v = laid_out.values()[i];
            if (v > 0.0)
            {
                range[i] = std::clamp(cam.depth_min / v, cam.depth_min, cam.depth_max);
                set[i] = true;
                frontier.push_back(i);
            }
        }
        if (frontier.empty())
            return PixelGrid::filled(rows, cols, cam.depth_max);

        while (!frontier.empty())
        {
            const std::size_t i = frontier.front();
            frontier.pop_front();
            const std::size_t r = i / cols, c = i % cols;
            const auto visit = [&](std::size_t j) {
                if (!set[j])
                {
                    set[j] = true;
                    range[j] = range[i];
                    frontier.push_back(j);
                }
            };
            if (r > 0)
                visit(i - cols);
            if (r + 1 < rows)
                visit(i + cols);
            if (c > 0)
                visit(i - 1);
            if (c + 1 < cols)
                visit(i + 1);
        }
        return PixelGrid(rows, cols, std::move(range));
    }

    // Cells whose min-max normalized power reaches `threshold` become points along the cell's (phi, theta)
    // direction at the range given by `depth_hint`. Cells whose hint lies outside the camera's depth range
    // carry no usable range and are skipped.
    inline PointCloud spectrum_to_point_cloud(const Spectrum &spec, const PixelGrid &depth_hint,
                                              const CameraModel &cam, double threshold)
    {
        cam.validate();
        if (!(threshold > 0.0 && threshold < 1.0))
            throw DomainError("spectrum_to_point_cloud: threshold must lie in (0, 1)");
        if (!depth_hint.same_shape(spec.grid()))
            throw DomainError("spectrum_to_point_cloud: depth hint shape differs from spectrum");

        const PixelGrid power = normalize_grid(spec.grid());
        std::vector<Point3> pts;
        for (std::size_t n = 0; n < power.rows(); ++n)
        {
            const double sp = std::sin(spec.phi()[n]);
            for (std::size_t k = 0; k < power.cols(); ++k)
            {
                if (power(n, k) < threshold)
                    continue;
                const double r = depth_hint(n, k);
                if (!(r >= cam.depth_min && r <= cam.depth_max))
                    continue;
                const double st = std::sin(spec.theta()[k]);
                const double lateral = sp * sp + st * st;
                if (lateral <= 1.0)
                    pts.push_back({r * sp, r * st, r * std::sqrt(std::max(0.0, 1.0 - lateral))});
                else
                {
                    // Outside the unit disk of direction cosines; project onto it to keep |p| = r.
                    const double s = std::sqrt(lateral);
                    pts.push_back({r * sp / s, r * st / s, 0.0});
                }
            }
        }
        return PointCloud(std::move(pts));
    }
}
