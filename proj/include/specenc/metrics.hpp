#pragma once

#include "specenc/core.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

namespace specenc
{
    struct MetricReport
    {
        double mae = 0.0;
        double rel = 0.0;
        double ucd = 0.0;
        double bcd = 0.0;
        double pearson = 0.0;
        double mutual_info = 0.0;
        double mse = 0.0;
        double ssim = 0.0;

        // Fixed CSV column order.
        static constexpr std::array<std::string_view, 8> columns = {"mae",     "rel",         "ucd", "bcd",
                                                                    "pearson", "mutual_info", "mse", "ssim"};

        std::array<double, 8> as_array() const { return {mae, rel, ucd, bcd, pearson, mutual_info, mse, ssim}; }
    };

    namespace detail
    {
        inline void require_same_shape(const PixelGrid &a, const PixelGrid &b, const char *what)
        {
            if (!a.same_shape(b))
                throw DomainError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                                  std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                  std::to_string(b.cols()) + ")");
        }

        inline std::vector<std::size_t> bin_indices(const PixelGrid &g, std::size_t bins)
        {
            const PixelGrid unit = normalize_grid(g);
            std::vector<std::size_t> idx(unit.size());
            auto v = unit.values();
            for (std::size_t i = 0; i < idx.size(); ++i)
                idx[i] = std::min(bins - 1, static_cast<std::size_t>(v[i] * static_cast<double>(bins)));
            return idx;
        }
    }

    // Sample Pearson coefficient over flattened values. If exactly one input is constant the
    // coefficient is reported as 0.
    inline double pearson(const PixelGrid &a, const PixelGrid &b)
    {
        detail::require_same_shape(a, b, "pearson");
        const double n = static_cast<double>(a.size());
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            ma += a.values()[i];
            mb += b.values()[i];
        }
        ma /= n;
        mb /= n;
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double da = a.values()[i] - ma;
            const double db = b.values()[i] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        const bool a_const = a.max() == a.min();
        const bool b_const = b.max() == b.min();
        if (a_const && b_const)
            throw DegenerateInput("pearson: both inputs are constant");
        if (a_const || b_const)
            return 0.0;
        return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    }

    // Shannon entropy in nats of the min-max normalized grid binned into `bins` levels.
    inline double entropy(const PixelGrid &g, std::size_t bins)
    {
        if (bins < 2)
            throw DomainError("entropy: bins must be at least 2");
        const auto idx = detail::bin_indices(g, bins);
        std::vector<double> hist(bins, 0.0);
        for (std::size_t i : idx)
            hist[i] += 1.0;
        const double n = static_cast<double>(idx.size());
        double h = 0.0;
        for (double c : hist)
            if (c > 0.0)
            {
                const double p = c / n;
                h -= p * std::log(p);
            }
        return h;
    }

    // Joint-histogram mutual information in nats. Both grids are min-max normalized and binned
    // into bins x bins cells.
    inline double mutual_information(const PixelGrid &a, const PixelGrid &b, std::size_t bins = 64)
    {
        detail::require_same_shape(a, b, "mutual_information");
        if (bins < 2)
            throw DomainError("mutual_information: bins must be at least 2");
        const auto ia = detail::bin_indices(a, bins);
        const auto ib = detail::bin_indices(b, bins);

        std::vector<double> joint(bins * bins, 0.0), pa(bins, 0.0), pb(bins, 0.0);
        for (std::size_t i = 0; i < ia.size(); ++i)
        {
            joint[ia[i] * bins + ib[i]] += 1.0;
            pa[ia[i]] += 1.0;
            pb[ib[i]] += 1.0;
        }
        const double n = static_cast<double>(ia.size());
        double mi = 0.0;
        for (std::size_t i = 0; i < bins; ++i)
            for (std::size_t j = 0; j < bins; ++j)
            {
                const double c = joint[i * bins + j];
                if (c > 0.0)
                    mi += (c / n) * std::log(c * n / (pa[i] * pb[j]));
            }
        return mi < 0.0 ? 0.0 : mi;
    }

    inline double mae(const PixelGrid &pred, const PixelGrid &gt)
    {
        detail::require_same_shape(pred, gt, "mae");
        double s = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            s += std::abs(pred.values()[i] - gt.values()[i]);
        return s / static_cast<double>(pred.size());
    }

    // Mean |pred - gt| / gt over pixels with gt > eps.
    inline double rel(const PixelGrid &pred, const PixelGrid &gt, double eps = 1e-6)
    {
        detail::require_same_shape(pred, gt, "rel");
        double s = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
        {
            const double g = gt.values()[i];
            if (g > eps)
            {
                s += std::abs(pred.values()[i] - g) / g;
                ++count;
            }
        }
        if (count == 0)
            throw DegenerateInput("rel: no ground-truth pixel exceeds eps");
        return s / static_cast<double>(count);
    }

    inline double mse(const PixelGrid &a, const PixelGrid &b)
    {
        detail::require_same_shape(a, b, "mse");
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double d = a.values()[i] - b.values()[i];
            s += d * d;
        }
        return s / static_cast<double>(a.size());
    }

    // Mean SSIM over all 8x8 windows at stride 1, unit dynamic range.
    inline double ssim(const PixelGrid &a, const PixelGrid &b)
    {
        constexpr std::size_t win = 8;
        constexpr double c1 = 0.01 * 0.01;
        constexpr double c2 = 0.03 * 0.03;
        detail::require_same_shape(a, b, "ssim");
        if (a.rows() < win || a.cols() < win)
            throw DomainError("ssim: grid smaller than the 8x8 window");

        const double inv = 1.0 / static_cast<double>(win * win);
        double total = 0.0;
        std::size_t windows = 0;
        for (std::size_t r0 = 0; r0 + win <= a.rows(); ++r0)
            for (std::size_t c0 = 0; c0 + win <= a.cols(); ++c0)
            {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (std::size_t r = r0; r < r0 + win; ++r)
                    for (std::size_t c = c0; c < c0 + win; ++c)
                    {
                        const double x = a(r, c), y = b(r, c);
                        sa += x;
                        sb += y;
                        saa += x * x;
                        sbb += y * y;
                        sab += x * y;
                    }
                const double mx = sa * inv, my = sb * inv;
                const double vx = saa * inv - mx * mx;
                const double vy = sbb * inv - my * my;
                const double cov = sab * inv - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++windows;
            }
        return total / static_cast<double>(windows);
    }

    // Exact nearest-neighbour queries over a fixed cloud using a uniform voxel grid.
    class NearestIndex
    {
    public:
        explicit NearestIndex(const PointCloud &cloud) : cloud_(cloud)
        {
            if (cloud.empty())
                throw DegenerateInput("nearest-neighbour index: empty cloud");
            lo_ = hi_ = cloud[0];
            for (const Point3 &p : cloud.points())
            {
                lo_.x = std::min(lo_.x, p.x), hi_.x = std::max(hi_.x, p.x);
                lo_.y = std::min(lo_.y, p.y), hi_.y = std::max(hi_.y, p.y);
                lo_.z = std::min(lo_.z, p.z), hi_.z = std::max(hi_.z, p.z);
            }
            const double extent = std::max({hi_.x - lo_.x, hi_.y - lo_.y, hi_.z - lo_.z});
            const double per_axis = std::max(1.0, std::cbrt(static_cast<double>(cloud.size()) / 2.0));
            cell_ = extent > 0.0 ? extent / per_axis : 1.0;
            dims_[0] = axis_cells(hi_.x - lo_.x);
            dims_[1] = axis_cells(hi_.y - lo_.y);
            dims_[2] = axis_cells(hi_.z - lo_.z);

            std::vector<std::size_t> counts(dims_[0] * dims_[1] * dims_[2] + 1, 0);
            std::vector<std::size_t> cell_of(cloud.size());
            for (std::size_t i = 0; i < cloud.size(); ++i)
            {
                const auto c = cell_coords(cloud[i]);
                cell_of[i] = flat(c[0], c[1], c[2]);
                ++counts[cell_of[i] + 1];
            }
            for (std::size_t i = 1; i < counts.size(); ++i)
                counts[i] += counts[i - 1];
            starts_ = counts;
            order_.resize(cloud.size());
            for (std::size_t i = 0; i < cloud.size(); ++i)
                order_[counts[cell_of[i]]++] = i;
        }

        double nearest_distance(const Point3 &q) const
        {
            const auto c = cell_coords(q);
            const long max_r = static_cast<long>(std::max({dims_[0], dims_[1], dims_[2]}));
            double best = std::numeric_limits<double>::infinity();
            for (long r = 0; r <= max_r; ++r)
            {
                visit_shell(c, r, q, best);
                // Anything in a farther shell is at least r cells away along some axis.
                if (best <= static_cast<double>(r) * cell_)
                    break;
            }
            return best;
        }

    private:
        std::size_t axis_cells(double span) const
        {
            return static_cast<std::size_t>(std::floor(span / cell_)) + 1;
        }

        std::array<long, 3> cell_coords(const Point3 &p) const
        {
            const auto axis = [&](double v, double lo, std::size_t dim) {
                const long i = static_cast<long>(std::floor((v - lo) / cell_));
                return std::clamp<long>(i, 0, static_cast<long>(dim) - 1);
            };
            return {axis(p.x, lo_.x, dims_[0]), axis(p.y, lo_.y, dims_[1]), axis(p.z, lo_.z, dims_[2])};
        }

        std::size_t flat(long x, long y, long z) const
        {
            return (static_cast<std::size_t>(x) * dims_[1] + static_cast<std::size_t>(y)) * dims_[2] +
                   static_cast<std::size_t>(z);
        }

        void visit_cell(long x, long y, long z, const Point3 &q, double &best) const
        {
            if (x < 0 || y < 0 || z < 0 || x >= static_cast<long>(dims_[0]) || y >= static_cast<long>(dims_[1]) ||
                z >= static_cast<long>(dims_[2]))
                return;
            const std::size_t f = flat(x, y, z);
            for (std::size_t i = starts_[f]; i < starts_[f + 1]; ++i)
                best = std::min(best, distance(q, cloud_[order_[i]]));
        }

        void visit_shell(const std::array<long, 3> &c, long r, const Point3 &q, double &best) const
        {
            for (long dx = -r; dx <= r; ++dx)
                for (long dy = -r; dy <= r; ++dy)
                {
                    const bool face = std::abs(dx) == r || std::abs(dy) == r;
                    if (face)
                        for (long dz = -r; dz <= r; ++dz)
                            visit_cell(c[0] + dx, c[1] + dy, c[2] + dz, q, best);
                    else
                    {
                        visit_cell(c[0] + dx, c[1] + dy, c[2] - r, q, best);
                        if (r > 0)
                            visit_cell(c[0] + dx, c[1] + dy, c[2] + r, q, best);
                    }
                }
        }

        const PointCloud &cloud_;
        Point3 lo_, hi_;
        double cell_ = 1.0;
        std::array<std::size_t, 3> dims_{};
        std::vector<std::size_t> starts_;
        std::vector<std::size_t> order_;
    };

    // Clouds above this size are queried through NearestIndex.
    inline constexpr std::size_t brute_force_limit = 512;

    inline double ucd_brute_force(const PointCloud &pred, const PointCloud &gt)
    {
        if (pred.empty() || gt.empty())
            throw DegenerateInput("ucd: empty point cloud");
        double total = 0.0;
        for (const Point3 &p : pred.points())
        {
            double best = std::numeric_limits<double>::infinity();
            for (const Point3 &q : gt.points())
                best = std::min(best, distance(p, q));
            total += best;
        }
        return total / static_cast<double>(pred.size());
    }

    inline double ucd_indexed(const PointCloud &pred, const PointCloud &gt)
    {
        if (pred.empty() || gt.empty())
            throw DegenerateInput("ucd: empty point cloud");
        const NearestIndex index(gt);
        double total = 0.0;
        for (const Point3 &p : pred.points())
            total += index.nearest_distance(p);
        return total / static_cast<double>(pred.size());
    }

    // Mean distance from each predicted point to its nearest ground-truth point.
    inline double ucd(const PointCloud &pred, const PointCloud &gt)
    {
        return gt.size() > brute_force_limit ? ucd_indexed(pred, gt) : ucd_brute_force(pred, gt);
    }

    inline double bcd(const PointCloud &a, const PointCloud &b) { return ucd(a, b) + ucd(b, a); }
}
