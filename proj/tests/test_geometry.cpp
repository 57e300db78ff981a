#include <catch_amalgamated.hpp>

#include "specenc/geometry.hpp"
#include "specenc/random.hpp"

#include <cmath>
#include <set>

using namespace specenc;

namespace
{
    Spectrum spectrum_of(std::vector<double> v, std::size_t n, std::size_t k)
    {
        return Spectrum(PixelGrid(n, k, std::move(v)), 4, make_angle_grid(-70, 70, n), make_angle_grid(-70, 70, k));
    }
}

TEST_CASE("project_to_depth_map - examples")
{
    const CameraModel cam;
    CHECK(project_to_depth_map(PointCloud{}, cam).max() == 0.0);

    const auto one = project_to_depth_map(PointCloud({{0, 0, cam.depth_min}}), cam);
    CHECK(one(32, 32) == 1.0);
    CHECK(std::count(one.values().begin(), one.values().end(), 0.0) == 64 * 64 - 1);

    // Same ray, two depths.
    const auto two = project_to_depth_map(PointCloud({{0.5, 0.25, 4.0}, {0.25, 0.125, 2.0}}), cam);
    const auto it = std::max_element(two.values().begin(), two.values().end());
    CHECK(*it == 0.5);
    CHECK(std::count(two.values().begin(), two.values().end(), 0.0) == 64 * 64 - 1);
}

TEST_CASE("project_to_depth_map - discards out-of-range points")
{
    const CameraModel cam;
    const PointCloud cloud({{0, 0, -3}, {0, 0, 0.5}, {0, 0, 60}, {100, 0, 5}});
    CHECK(project_to_depth_map(cloud, cam).max() == 0.0);

    CameraModel bad;
    bad.depth_min = 0.0;
    CHECK_THROWS_AS(project_to_depth_map(cloud, bad), DomainError);
    bad = CameraModel{};
    bad.cx = 64.0;
    CHECK_THROWS_AS(project_to_depth_map(cloud, bad), DomainError);
}

TEST_CASE("spectrum_to_point_cloud - examples")
{
    const CameraModel cam;
    const auto zero = spectrum_of(std::vector<double>(25, 0.0), 5, 5);
    CHECK(spectrum_to_point_cloud(zero, PixelGrid::filled(5, 5, 5.0), cam, 0.5).empty());

    // Centre cell of a symmetric 5x5 grid sits at phi = theta = 0.
    std::vector<double> v(25, 0.0);
    v[12] = 3.0;
    const auto cloud = spectrum_to_point_cloud(spectrum_of(v, 5, 5), PixelGrid::filled(5, 5, 5.0), cam, 0.5);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud[0] == Point3{0.0, 0.0, 5.0});

    Rng rng(9);
    std::vector<double> w(100);
    for (auto &x : w)
        x = rng.uniform(0.0, 0.45);
    w[0] = 0.0;
    std::set<std::size_t> hot;
    while (hot.size() < 7)
        hot.insert(1 + rng.index(99));
    for (std::size_t i : hot)
        w[i] = rng.uniform(0.5, 1.0);
    w[*hot.begin()] = 1.0;
    const auto seven = spectrum_to_point_cloud(spectrum_of(w, 10, 10), PixelGrid::filled(10, 10, 5.0), cam, 0.5);
    CHECK(seven.size() == 7);
}

TEST_CASE("spectrum_to_point_cloud - errors")
{
    const CameraModel cam;
    const auto s = spectrum_of(std::vector<double>(25, 1.0), 5, 5);
    CHECK_THROWS_AS(spectrum_to_point_cloud(s, PixelGrid::filled(5, 4, 5.0), cam, 0.5), DomainError);
    CHECK_THROWS_AS(spectrum_to_point_cloud(s, PixelGrid::filled(5, 5, 5.0), cam, 0.0), DomainError);
    CHECK_THROWS_AS(spectrum_to_point_cloud(s, PixelGrid::filled(5, 5, 5.0), cam, 1.0), DomainError);
}

TEST_CASE("spectrum_to_point_cloud - monotone threshold and range bounds")
{
    const CameraModel cam;
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial)
    {
        std::vector<double> v(32 * 24), h(32 * 24);
        for (auto &x : v)
            x = rng.uniform();
        for (auto &x : h)
            x = rng.uniform(0.5 * cam.depth_min, cam.depth_max * 1.2);
        const auto s = spectrum_of(v, 32, 24);
        const PixelGrid hint(32, 24, h);
        std::size_t previous = std::numeric_limits<std::size_t>::max();
        for (double t = 0.05; t < 1.0; t += 0.1)
        {
            const auto cloud = spectrum_to_point_cloud(s, hint, cam, t);
            CHECK(cloud.size() <= previous);
            previous = cloud.size();
            for (const auto &p : cloud.points())
            {
                const double r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
                CHECK(r >= cam.depth_min - 1e-9);
                CHECK(r <= cam.depth_max + 1e-9);
            }
        }
    }
}

TEST_CASE("depth_hint_from_depth_map - fills from nearest return")
{
    const CameraModel cam;
    const auto like = spectrum_of(std::vector<double>(64 * 64, 0.0), 64, 64);
    const auto empty = depth_hint_from_depth_map(PixelGrid::zeros(64, 64), like, cam);
    CHECK(empty.min() == cam.depth_max);

    const auto one = depth_hint_from_depth_map(project_to_depth_map(PointCloud({{0, 0, 8.0}}), cam), like, cam);
    CHECK(one.min() == 8.0);
    CHECK(one.max() == 8.0);
}

TEST_CASE("project then unproject - within pixel snapping bound")
{
    const CameraModel cam;
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial)
    {
        std::vector<Point3> pts;
        std::set<std::pair<long, long>> used;
        while (pts.size() < 40)
        {
            const double z = rng.uniform(cam.depth_min, cam.depth_max);
            const double u = rng.uniform(-0.49, 63.49), v = rng.uniform(-0.49, 63.49);
            const auto key = std::make_pair(std::lround(std::floor(v + 0.5)), std::lround(std::floor(u + 0.5)));
            if (!used.insert(key).second)
                continue;
            pts.push_back({(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z});
        }
        const PointCloud cloud(pts);
        const auto back = unproject_depth_map(project_to_depth_map(cloud, cam), cam);
        REQUIRE(back.size() == pts.size());
        for (const auto &p : pts)
        {
            double best = INFINITY;
            for (const auto &q : back.points())
                best = std::min(best, distance(p, q));
            CHECK(best <= pixel_snap_bound(p.z, cam) + 1e-9);
        }
    }
}
