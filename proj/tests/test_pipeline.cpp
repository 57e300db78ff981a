#include <catch_amalgamated.hpp>

#include "specenc/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace specenc;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch_dir(const std::string &name)
    {
        const fs::path dir = fs::temp_directory_path() / ("specenc_test_pipeline_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    EncodingConfig small_config(std::size_t n = 32)
    {
        EncodingConfig cfg;
        cfg.phi = make_angle_grid(-70.0, 70.0, n);
        cfg.theta = make_angle_grid(-70.0, 70.0, n);
        return cfg;
    }

    std::vector<std::vector<std::string>> csv_rows(const std::string &text)
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto &line : io::lines_of(text))
        {
            std::vector<std::string> cells;
            for (auto c : io::split(line, ','))
                cells.emplace_back(c);
            rows.push_back(std::move(cells));
        }
        return rows;
    }

    // Writes a manifest whose frames are hand-built grids: radar depth as CSV grid, mask as PGM.
    fs::path write_grid_manifest(const fs::path &dir, const std::vector<std::pair<PixelGrid, PixelGrid>> &frames,
                                 const CameraModel &cam = {})
    {
        std::string text = pipeline::manifest_header(cam) + std::string(pipeline::manifest_columns) + "\n";
        for (std::size_t i = 0; i < frames.size(); ++i)
        {
            const std::string id = "g" + std::to_string(i);
            io::write_grid_csv(dir / (id + ".radar.csv"), frames[i].first);
            io::write_file_atomic(dir / (id + ".mask.pgm"), io::grid_to_pgm(frames[i].second, io::PgmRange{}));
            io::write_grid_csv(dir / (id + ".gt.csv"), frames[i].first);
            text += id + "\t" + id + ".radar.csv\t" + id + ".mask.pgm\t" + id + ".gt.csv\n";
        }
        io::write_file_atomic(dir / "manifest.txt", text);
        return dir / "manifest.txt";
    }

    PixelGrid box(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1, double v = 1.0)
    {
        std::vector<double> g(64 * 64, 0.0);
        for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t c = c0; c < c1; ++c)
                g[r * 64 + c] = v;
        return PixelGrid(64, 64, std::move(g));
    }
}

TEST_CASE("load_manifest - well-formed synthetic manifest")
{
    const auto dir = scratch_dir("manifest");
    const auto path = pipeline::write_synthetic_dataset(dir, 3, 1);
    const auto m = pipeline::load_manifest(path);
    REQUIRE(m.entries.size() == 3);
    CHECK(m.camera == CameraModel{});
    CHECK(m.entries[0].frame_id == "f0000");
    CHECK(m.entries[2].gt_depth.has_value());
    CHECK_FALSE(m.entries[2].gt_cloud.has_value());
    const auto f = pipeline::load_frame(m, m.entries[1]);
    CHECK(f.radar_cloud.has_value());
    CHECK_FALSE(f.radar_depth.has_value());
    CHECK(f.seg_mask.rows() == 64);
    fs::remove_all(dir);
}

TEST_CASE("load_manifest - names exactly the missing file")
{
    const auto dir = scratch_dir("missing");
    const auto path = pipeline::write_synthetic_dataset(dir, 3, 2);
    fs::remove(dir / "mask" / "f0001.pgm");
    try
    {
        pipeline::load_manifest(path);
        FAIL("expected a missing-file error");
    }
    catch (const MissingFileError &e)
    {
        REQUIRE(e.files().size() == 1);
        CHECK(e.files()[0].find("f0001.pgm") != std::string::npos);
    }
    CHECK_THROWS_AS(pipeline::load_manifest(dir / "nothing.txt"), MissingFileError);
    fs::remove_all(dir);
}

TEST_CASE("parse_manifest - rejects malformed input")
{
    const std::string header = pipeline::manifest_header(CameraModel{});
    const std::string cols = std::string(pipeline::manifest_columns) + "\n";
    try
    {
        pipeline::parse_manifest(header + cols + "a\tr.csv\tm.pgm\nb\tr.csv\tm.pgm\na\tr.csv\tm.pgm\n", ".", "m.txt");
        FAIL("expected a parse error");
    }
    catch (const ParseError &e)
    {
        const std::string what = e.what();
        CHECK(what.find("duplicate frame_id 'a'") != std::string::npos);
        CHECK(what.find("m.txt:13") != std::string::npos);
    }
    CHECK_THROWS_AS(pipeline::parse_manifest(header + "bogus=1\n" + cols, ".", "m"), ParseError);
    CHECK_THROWS_AS(pipeline::parse_manifest(header + "fx=3\n" + cols, ".", "m"), ParseError);
    CHECK_THROWS_AS(pipeline::parse_manifest(header + cols + "a\tr.csv\n", ".", "m"), ParseError);
    CHECK_THROWS_AS(pipeline::parse_manifest(header + cols + "a\t-\tm.pgm\n", ".", "m"), ParseError);
    CHECK_THROWS_AS(pipeline::parse_manifest("fx=1\n" + cols, ".", "m"), ParseError);
    CHECK_THROWS_AS(pipeline::parse_manifest(header + "fx=1\n", ".", "m"), ParseError);

    const auto m = pipeline::parse_manifest(header + "m_radar=12\nn_phi=40\nlog_compress=0\n" + cols +
                                                "a\tr.csv\tm.pgm\t-\tc.csv\n",
                                            ".", "m");
    CHECK(m.entries[0].gt_cloud == fs::path("c.csv"));
    CHECK_FALSE(m.entries[0].gt_depth.has_value());
    const auto cfg = pipeline::apply_defaults(EncodingConfig{}, m.defaults);
    CHECK(cfg.m_radar == 12);
    CHECK(cfg.phi.count() == 40);
    CHECK(cfg.theta.count() == 128);
    CHECK_FALSE(cfg.log_compress);
}

TEST_CASE("run_encode - file count, zero frames and reruns")
{
    const auto dir = scratch_dir("encode");
    const auto path = pipeline::write_synthetic_dataset(dir / "data", 2, 3);
    const auto m = pipeline::load_manifest(path);
    const auto cfg = small_config();
    const auto report = pipeline::run_encode(m, cfg, dir / "out1");
    CHECK(report.errors.empty());
    CHECK(report.files.size() == 4);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto &e : fs::directory_iterator(dir / "out1"))
        ++files;
    CHECK(files == 5);
    const std::string index = io::read_file(dir / "out1" / "index.tsv");
    CHECK(index.find("f0001\tf0001.radar.csv\tf0001.camera.csv\n") != std::string::npos);

    pipeline::EncodeOptions opt;
    opt.workers = 3;
    pipeline::run_encode(m, cfg, dir / "out2", opt);
    for (const auto *name : {"f0000.radar.csv", "f0000.camera.csv", "f0001.radar.csv", "f0001.camera.csv", "index.tsv"})
        CHECK(io::read_file(dir / "out1" / name) == io::read_file(dir / "out2" / name));

    const auto zero_manifest =
        write_grid_manifest(dir / "zero", {{PixelGrid::zeros(64, 64), PixelGrid::zeros(64, 64)}});
    pipeline::run_encode(pipeline::load_manifest(zero_manifest), cfg, dir / "out_zero");
    for (const auto *name : {"g0.radar.csv", "g0.camera.csv"})
        CHECK(io::read_grid(dir / "out_zero" / name).max() == 0.0);
    fs::remove_all(dir);
}

TEST_CASE("run_encode - per-frame errors are collected")
{
    const auto dir = scratch_dir("encode_errors");
    const auto path = write_grid_manifest(dir, {{box(10, 20, 10, 20), box(10, 20, 10, 20)},
                                                {box(10, 20, 10, 20), box(10, 20, 10, 20)}});
    io::write_file_atomic(dir / "g1.radar.csv", "rows,cols\n1,2\n1\n");
    const auto m = pipeline::load_manifest(path);
    const auto report = pipeline::run_encode(m, small_config(), dir / "out");
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].frame_id == "g1");
    CHECK(report.files.size() == 2);
    pipeline::EncodeOptions opt;
    opt.fail_fast = true;
    CHECK_THROWS_AS(pipeline::run_encode(m, small_config(), dir / "out_ff", opt), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("run_sweep - valid cells only")
{
    const auto dir = scratch_dir("sweep");
    const auto m = pipeline::load_manifest(pipeline::write_synthetic_dataset(dir, 1, 4));
    const auto res = pipeline::run_sweep(m, {20, 10}, "pearson", small_config());
    REQUIRE(res.m_values == std::vector<std::size_t>{10, 20});
    CHECK(res.cells[0][1].has_value());
    CHECK_FALSE(res.cells[0][0].has_value());
    CHECK_FALSE(res.cells[1][0].has_value());
    CHECK_FALSE(res.cells[1][1].has_value());
    const auto rows = csv_rows(res.to_csv());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"m_radar\\m_cam", "10", "20"});
    CHECK(rows[1][2] == io::format_double(*res.cells[0][1]));
    CHECK(rows[2][1].empty());

    CHECK_THROWS_AS(pipeline::run_sweep(m, {}, "pearson", small_config()), DomainError);
    CHECK_THROWS_AS(pipeline::run_sweep(m, {10, 20}, "rmse", small_config()), DomainError);
    fs::remove_all(dir);
}

TEST_CASE("run_sweep - aligned content correlates")
{
    // Radar returns cover exactly the labelled region.
    const auto dir = scratch_dir("sweep_aligned");
    const auto support = box(20, 44, 12, 30);
    const auto m = pipeline::load_manifest(write_grid_manifest(dir, {{support, support}}));
    CHECK(*pipeline::run_sweep(m, {10, 20}, "pearson", small_config()).cells[0][1] > 0.95);
    CHECK(*pipeline::run_sweep(m, {10, 20}, "ssim", small_config()).cells[0][1] > 0.8);
    const auto res = pipeline::run_sweep(m, {10, 20}, "mse", small_config());
    CHECK(*res.cells[0][1] < 0.05);
    fs::remove_all(dir);
}

TEST_CASE("run_sweep - degenerate frames become nan")
{
    const auto dir = scratch_dir("sweep_nan");
    const auto m = pipeline::load_manifest(write_grid_manifest(dir, {{PixelGrid::zeros(64, 64), PixelGrid::zeros(64, 64)}}));
    const auto res = pipeline::run_sweep(m, {10, 20}, "pearson", small_config());
    CHECK(std::isnan(*res.cells[0][1]));
    CHECK(res.warnings == 1);
    CHECK(csv_rows(res.to_csv())[1][2] == "nan");
    fs::remove_all(dir);
}

TEST_CASE("run_eval - identical predictions score perfectly")
{
    const auto dir = scratch_dir("eval_identity");
    const auto m = pipeline::load_manifest(pipeline::write_synthetic_dataset(dir / "data", 3, 5));
    const auto cfg = small_config();
    const Spectrum like(PixelGrid::zeros(32, 32), cfg.m_radar, cfg.phi, cfg.theta);
    for (const auto &e : m.entries)
    {
        const auto f = pipeline::load_frame(m, e);
        io::write_grid_csv(dir / "pred" / (e.frame_id + ".csv"), to_spectrum_layout(*f.gt_depth, like));
    }
    const auto res = pipeline::run_eval(dir / "pred", m, m.camera, cfg);
    REQUIRE(res.rows.size() == 3);
    for (const auto &row : res.rows)
    {
        CHECK(row.report.mae == 0.0);
        CHECK(row.report.rel == 0.0);
        CHECK(row.report.mse == 0.0);
        CHECK(row.report.ucd == 0.0);
        CHECK(row.report.bcd == 0.0);
        CHECK(row.report.pearson == Catch::Approx(1.0).margin(1e-12));
        CHECK(row.report.ssim == Catch::Approx(1.0).margin(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("run_eval - rows, aggregates and missing predictions")
{
    const auto dir = scratch_dir("eval_rows");
    const auto m = pipeline::load_manifest(pipeline::write_synthetic_dataset(dir / "data", 3, 6));
    const auto cfg = small_config();
    pipeline::TrainOptions topt;
    topt.epochs = 5;
    pipeline::run_train(m, cfg, dir / "train", topt);
    const auto res = pipeline::run_eval(dir / "train" / "pred", m, m.camera, cfg);
    const auto rows = csv_rows(res.to_csv());
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"frame_id", "mae", "rel", "ucd", "bcd", "pearson", "mutual_info", "mse",
                                              "ssim"});
    CHECK(rows[4][0] == "mean");
    CHECK(rows[5][0] == "std");
    for (std::size_t c = 1; c < 9; ++c)
    {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 1; r <= 3; ++r)
            if (const double v = io::parse_double(rows[r][c], "row"); std::isfinite(v))
                sum += v, ++n;
        REQUIRE(n > 0);
        CHECK(io::parse_double(rows[4][c], "mean") == Catch::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
    }

    fs::remove(dir / "train" / "pred" / "f0002.csv");
    fs::remove(dir / "train" / "pred" / "f0000.csv");
    try
    {
        pipeline::run_eval(dir / "train" / "pred", m, m.camera, cfg);
        FAIL("expected a missing-prediction error");
    }
    catch (const MissingPredictionError &e)
    {
        CHECK(e.frame_ids() == std::vector<std::string>{"f0000", "f0002"});
    }
    fs::remove_all(dir);
}

TEST_CASE("run_train - artifacts and determinism")
{
    const auto dir = scratch_dir("train");
    const auto m = pipeline::load_manifest(pipeline::write_synthetic_dataset(dir / "data", 2, 7));
    pipeline::TrainOptions opt;
    opt.epochs = 8;
    const auto a = pipeline::run_train(m, small_config(16), dir / "a", opt);
    opt.workers = 2;
    pipeline::run_train(m, small_config(16), dir / "b", opt);
    CHECK(a.losses.size() == 8);
    for (const auto *name : {"model.ckpt", "loss.csv", "pred/f0000.csv", "pred/f0001.csv"})
        CHECK(io::read_file(dir / "a" / name) == io::read_file(dir / "b" / name));
    CHECK(csv_rows(io::read_file(dir / "a" / "loss.csv")).size() == 9);
    fs::remove_all(dir);
}

TEST_CASE("parallel_for - visits every index once")
{
    for (std::size_t workers : {1u, 2u, 5u})
    {
        std::vector<int> hits(37, 0);
        pipeline::parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    CHECK_THROWS_AS(pipeline::parallel_for(4, 2, [](std::size_t i) {
                        if (i == 3)
                            throw DomainError("boom");
                    }),
                    DomainError);
}
