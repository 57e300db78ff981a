#pragma once

#include "specenc/core.hpp"
#include "specenc/geometry.hpp"
#include "specenc/random.hpp"

#include <string>
#include <vector>

namespace specenc::synthetic
{
    enum class ObjectClass : long
    {
        background = 0,
        vehicle = 1,
        pole = 2,
    };

    // Fronto-parallel rectangle at depth z, camera coordinates (x right, y down, z forward).
    struct Panel
    {
        ObjectClass cls = ObjectClass::vehicle;
        double x0 = 0.0, x1 = 0.0;
        double y0 = 0.0, y1 = 0.0;
        double z = 0.0;
    };

    struct SceneOptions
    {
        std::size_t min_objects = 2;
        std::size_t max_objects = 5;
        std::size_t radar_points = 60;    // returns sampled from visible surfaces
        std::size_t clutter_points = 4;   // spurious returns anywhere in the frustum
        double range_noise_m = 0.10;      // radar range jitter (1 sigma)
        double label_noise = 0.01;        // fraction of mask pixels with a flipped label
        double sensor_height_m = 1.5;     // ground plane at y = +sensor_height
    };

    struct Frame
    {
        std::string frame_id;
        std::vector<Panel> panels;
        PointCloud radar_cloud;
        PixelGrid radar_depth; // radar cloud projected, inverse-depth convention
        PixelGrid mask;        // class ids
        PixelGrid gt_depth;    // dense inverse-depth render of the scene
    };

    inline std::string frame_name(std::size_t i)
    {
        std::string digits = std::to_string(i);
        return "f" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
    }

    inline std::vector<Panel> random_scene(Rng &rng, const CameraModel &cam, const SceneOptions &opt)
    {
        const std::size_t count = opt.min_objects + rng.index(opt.max_objects - opt.min_objects + 1);
        const double half_fov = std::atan(0.5 * static_cast<double>(cam.width) / cam.fx);
        const double far = std::min(cam.depth_max, 30.0);
        std::vector<Panel> panels;
        for (std::size_t i = 0; i < count; ++i)
        {
            Panel p;
            const bool pole = rng.bernoulli(0.35);
            p.cls = pole ? ObjectClass::pole : ObjectClass::vehicle;
            p.z = rng.uniform(std::max(cam.depth_min * 4.0, 4.0), far);
            const double lateral = p.z * std::tan(half_fov * 0.8);
            const double xc = rng.uniform(-lateral, lateral);
            const double width = pole ? rng.uniform(0.25, 0.45) : rng.uniform(1.7, 4.5);
            const double height = pole ? rng.uniform(3.0, 5.0) : rng.uniform(1.3, 1.9);
            p.x0 = xc - 0.5 * width;
            p.x1 = xc + 0.5 * width;
            p.y1 = opt.sensor_height_m;
            p.y0 = opt.sensor_height_m - height;
            panels.push_back(p);
        }
        return panels;
    }

    // Nearest panel hit by the ray through pixel (r, c), or nullptr.
    inline const Panel *cast(const std::vector<Panel> &panels, const CameraModel &cam, double r, double c)
    {
        const double dx = (c - cam.cx) / cam.fx;
        const double dy = (r - cam.cy) / cam.fy;
        const Panel *best = nullptr;
        for (const Panel &p : panels)
        {
            const double x = p.z * dx, y = p.z * dy;
            if (x >= p.x0 && x <= p.x1 && y >= p.y0 && y <= p.y1 && (!best || p.z < best->z))
                best = &p;
        }
        return best;
    }

    inline Frame render_frame(std::string frame_id, std::vector<Panel> panels, Rng &rng, const CameraModel &cam,
                              const SceneOptions &opt)
    {
        const std::size_t h = cam.height, w = cam.width;
        std::vector<double> depth(h * w, 0.0), mask(h * w, 0.0);
        std::vector<std::size_t> hits;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                if (const Panel *p = cast(panels, cam, static_cast<double>(r), static_cast<double>(c)))
                {
                    depth[r * w + c] = cam.depth_min / p->z;
                    mask[r * w + c] = static_cast<double>(static_cast<long>(p->cls));
                    hits.push_back(r * w + c);
                }

        std::vector<Point3> returns;
        if (!hits.empty())
            for (std::size_t i = 0; i < opt.radar_points; ++i)
            {
                const std::size_t px = hits[rng.index(hits.size())];
                const double r = static_cast<double>(px / w) + rng.uniform(-0.5, 0.5);
                const double c = static_cast<double>(px % w) + rng.uniform(-0.5, 0.5);
                const Panel *p = cast(panels, cam, r, c);
                if (!p)
                    continue;
                const double z = std::clamp(p->z + rng.normal(0.0, opt.range_noise_m), cam.depth_min, cam.depth_max);
                returns.push_back({(c - cam.cx) * z / cam.fx, (r - cam.cy) * z / cam.fy, z});
            }
        for (std::size_t i = 0; i < opt.clutter_points; ++i)
        {
            const double z = rng.uniform(cam.depth_min * 2.0, std::min(cam.depth_max, 40.0));
            const double r = rng.uniform(0.0, static_cast<double>(h) - 1.0);
            const double c = rng.uniform(0.0, static_cast<double>(w) - 1.0);
            returns.push_back({(c - cam.cx) * z / cam.fx, (r - cam.cy) * z / cam.fy, z});
        }

        for (std::size_t i = 0; i < mask.size(); ++i)
            if (rng.bernoulli(opt.label_noise))
                mask[i] = mask[i] == 0.0 ? static_cast<double>(1 + rng.index(2)) : 0.0;

        PointCloud cloud(std::move(returns));
        PixelGrid radar_depth = project_to_depth_map(cloud, cam);
        return Frame{std::move(frame_id),
                     std::move(panels),
                     std::move(cloud),
                     std::move(radar_depth),
                     PixelGrid(h, w, std::move(mask)),
                     PixelGrid(h, w, std::move(depth))};
    }

    // Deterministic in (count, seed, cam, opt).
    inline std::vector<Frame> generate(std::size_t count, std::uint64_t seed, const CameraModel &cam,
                                       const SceneOptions &opt = {})
    {
        cam.validate();
        Rng rng(seed);
        std::vector<Frame> frames;
        frames.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
        {
            auto panels = random_scene(rng, cam, opt);
            frames.push_back(render_frame(frame_name(i), std::move(panels), rng, cam, opt));
        }
        return frames;
    }
}
