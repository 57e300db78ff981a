#include <catch_amalgamated.hpp>

#include "specenc/io.hpp"
#include "specenc/learner.hpp"
#include "specenc/random.hpp"

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>

using namespace specenc;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch_dir(const std::string &name)
    {
        const fs::path dir = fs::temp_directory_path() / ("specenc_test_io_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    double random_bits_double(Rng &rng)
    {
        for (;;)
        {
            const auto bits = (static_cast<std::uint64_t>(rng.index(1ull << 32)) << 32) | rng.index(1ull << 32);
            const double v = std::bit_cast<double>(bits);
            if (std::isfinite(v))
                return v;
        }
    }
}

TEST_CASE("grid CSV - bit-exact round trip")
{
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial)
    {
        const std::size_t r = 1 + rng.index(9), c = 1 + rng.index(9);
        std::vector<double> v(r * c);
        for (auto &x : v)
            x = trial % 2 ? random_bits_double(rng) : rng.uniform(-1.0, 1.0);
        const PixelGrid g(r, c, v);
        const auto back = io::grid_from_csv(io::grid_to_csv(g), "mem");
        REQUIRE(back.same_shape(g));
        for (std::size_t i = 0; i < v.size(); ++i)
            CHECK(std::bit_cast<std::uint64_t>(back.values()[i]) == std::bit_cast<std::uint64_t>(v[i]));
    }
    const PixelGrid edge(1, 4, {0.0, -0.0, std::numeric_limits<double>::denorm_min(),
                                std::numeric_limits<double>::max()});
    const auto back = io::grid_from_csv(io::grid_to_csv(edge), "mem");
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(std::bit_cast<std::uint64_t>(back.values()[i]) == std::bit_cast<std::uint64_t>(edge.values()[i]));
}

TEST_CASE("grid CSV - layout and parse errors")
{
    CHECK(io::grid_to_csv(PixelGrid(2, 2, {1, 0.5, -2, 0})) == "rows,cols\n2,2\n1,0.5\n-2,0\n");
    CHECK_THROWS_AS(io::grid_from_csv("r,c\n1,1\n0\n", "a.csv"), ParseError);
    CHECK_THROWS_AS(io::grid_from_csv("rows,cols\n2,2\n1,2\n", "a.csv"), ParseError);
    CHECK_THROWS_AS(io::grid_from_csv("rows,cols\n1,2\n1\n", "a.csv"), ParseError);
    CHECK_THROWS_AS(io::grid_from_csv("rows,cols\n1,2\n1,x\n", "a.csv"), ParseError);
    CHECK_THROWS_AS(io::grid_from_csv("rows,cols\n1,1\nnan\n", "a.csv"), ParseError);
    try
    {
        io::grid_from_csv("rows,cols\n2,2\n1,2\n3,oops\n", "b.csv");
        FAIL("expected a parse error");
    }
    catch (const ParseError &e)
    {
        CHECK(std::string(e.what()).find("b.csv:4") != std::string::npos);
    }
}

TEST_CASE("grid PGM - integer masks are exact")
{
    Rng rng(2);
    std::vector<double> v(15 * 11);
    for (auto &x : v)
        x = static_cast<double>(rng.index(65536));
    const PixelGrid mask(15, 11, v);
    const std::string text = io::grid_to_pgm(mask, io::PgmRange{});
    CHECK(text.rfind("P2\n# specenc linear min=0 max=65535", 0) == 0);
    CHECK(io::grid_from_pgm(text, "m.pgm") == mask);
}

TEST_CASE("grid PGM - real values within one level")
{
    Rng rng(3);
    std::vector<double> v(64);
    for (auto &x : v)
        x = rng.uniform(-3.0, 7.0);
    const PixelGrid g(8, 8, v);
    const auto back = io::grid_from_pgm(io::grid_to_pgm(g), "p.pgm");
    const double level = (g.max() - g.min()) / 65535.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(std::abs(back.values()[i] - v[i]) <= 0.5 * level + 1e-12);
    CHECK(back.min() == g.min());

    CHECK_THROWS_AS(io::grid_from_pgm("P5\n1 1\n255\n0\n", "x.pgm"), ParseError);
    CHECK_THROWS_AS(io::grid_from_pgm("P2\n2 1\n255\n0\n", "x.pgm"), ParseError);
    CHECK_THROWS_AS(io::grid_from_pgm("P2\n1 1\n255\n300\n", "x.pgm"), ParseError);
    // Plain PGM without the mapping comment reads raw levels.
    CHECK(io::grid_from_pgm("P2\n2 1\n255\n0 7\n", "x.pgm") == PixelGrid(1, 2, {0, 7}));
}

TEST_CASE("point cloud CSV - round trip")
{
    Rng rng(4);
    std::vector<Point3> pts(40);
    for (auto &p : pts)
        p = {rng.uniform(-20, 20), rng.uniform(-5, 5), rng.uniform(0, 50)};
    const PointCloud cloud(pts);
    const auto text = io::cloud_to_csv(cloud);
    CHECK(text.rfind("x,y,z\n", 0) == 0);
    CHECK(io::cloud_from_csv(text, "c.csv") == cloud);
    CHECK(io::cloud_from_csv("x,y,z\n", "c.csv").empty());
    CHECK_THROWS_AS(io::cloud_from_csv("x,y\n1,2\n", "c.csv"), ParseError);
    CHECK_THROWS_AS(io::cloud_from_csv("x,y,z\n1,2\n", "c.csv"), ParseError);
}

TEST_CASE("checkpoint - named tensors round trip")
{
    const auto model = EnhancerModel::create(99);
    const std::string bytes = io::checkpoint_bytes(model.named_tensors());
    CHECK(bytes.rfind("specenc-checkpoint 1\n", 0) == 0);
    const auto tensors = io::checkpoint_from_bytes(bytes, "mem");
    REQUIRE(tensors.size() == 6);
    for (std::size_t i = 0; i < tensors.size(); ++i)
    {
        CHECK(tensors[i].name == model.named_tensors()[i].name);
        CHECK(tensors[i].shape == model.named_tensors()[i].shape);
    }
    CHECK(EnhancerModel::from_named_tensors(tensors).parameters() == model.parameters());

    // Payload is raw little-endian float64, 737 of them.
    CHECK(bytes.size() - (bytes.find("data\n") + 5) == 737 * 8);

    CHECK_THROWS_AS(io::checkpoint_from_bytes(bytes.substr(0, bytes.size() - 3), "mem"), ParseError);
    CHECK_THROWS_AS(io::checkpoint_from_bytes("garbage", "mem"), ParseError);

    const auto dir = scratch_dir("ckpt");
    io::write_checkpoint(dir / "m.ckpt", model.named_tensors());
    CHECK(EnhancerModel::from_named_tensors(io::read_checkpoint(dir / "m.ckpt")).parameters() ==
          model.parameters());
    fs::remove_all(dir);
}

TEST_CASE("files - atomic writes and missing files")
{
    const auto dir = scratch_dir("files");
    io::write_file_atomic(dir / "a.txt", "first");
    io::write_file_atomic(dir / "a.txt", "second");
    CHECK(io::read_file(dir / "a.txt") == "second");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir))
        ++entries;
    CHECK(entries == 1);

    try
    {
        io::read_file(dir / "nope.csv");
        FAIL("expected a missing-file error");
    }
    catch (const MissingFileError &e)
    {
        REQUIRE(e.files().size() == 1);
        CHECK(e.files()[0].find("nope.csv") != std::string::npos);
    }

    const PixelGrid g(2, 3, {1, 2, 3, 4, 5, 6});
    io::write_grid_csv(dir / "g.csv", g);
    CHECK(io::read_grid(dir / "g.csv") == g);
    io::write_file_atomic(dir / "g.pgm", io::grid_to_pgm(g, io::PgmRange{}));
    CHECK(io::read_grid(dir / "g.pgm") == g);
    CHECK_FALSE(io::is_cloud_file(dir / "g.csv"));
    io::write_file_atomic(dir / "c.csv", io::cloud_to_csv(PointCloud({{1, 2, 3}})));
    CHECK(io::is_cloud_file(dir / "c.csv"));
    fs::remove_all(dir);
}

TEST_CASE("format_double - shortest round-trip text")
{
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(std::nan("")) == "nan");
    CHECK(io::parse_double("2.5", "x") == 2.5);
    CHECK(std::isnan(io::parse_double("nan", "x")));
    CHECK_THROWS_AS(io::parse_double("2.5x", "x"), ParseError);
    CHECK_THROWS_AS(io::parse_count("-1", "x"), ParseError);
}
