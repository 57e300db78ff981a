#pragma once

#include "specenc/core.hpp"
#include "specenc/geometry.hpp"
#include "specenc/io.hpp"
#include "specenc/learner.hpp"
#include "specenc/metrics.hpp"
#include "specenc/spectrum.hpp"
#include "specenc/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace specenc::pipeline
{
    namespace fs = std::filesystem;

    struct ManifestEntry
    {
        std::string frame_id;
        fs::path radar;
        fs::path mask;
        std::optional<fs::path> gt_depth;
        std::optional<fs::path> gt_cloud;
    };

    // Encoding settings a manifest may pin; unset fields fall back to the caller's defaults.
    struct EncodingDefaults
    {
        std::optional<std::size_t> m_radar, m_cam, n_phi, n_theta;
        std::optional<double> phi_min, phi_max, theta_min, theta_max;
        std::optional<bool> log_compress;
    };

    struct Manifest
    {
        fs::path root;
        std::vector<ManifestEntry> entries;
        CameraModel camera;
        EncodingDefaults defaults;
    };

    // One synchronized radar/camera sample. Exactly one radar representation is present.
    struct FramePair
    {
        std::string frame_id;
        std::optional<PointCloud> radar_cloud;
        std::optional<PixelGrid> radar_depth;
        PixelGrid seg_mask;
        std::optional<PointCloud> gt_cloud;
        std::optional<PixelGrid> gt_depth;

        // Radar as an inverse-depth raster, projecting the cloud if that is what was supplied.
        PixelGrid radar_depth_map(const CameraModel &cam) const
        {
            return radar_depth ? *radar_depth : project_to_depth_map(*radar_cloud, cam);
        }
    };

    inline constexpr std::string_view manifest_columns = "frame_id\tradar\tmask\tgt_depth\tgt_cloud";

    // ---- manifest ----
    //
    // Line-oriented "key=value" header (camera model and optional encoding defaults), then the column
    // line, then one tab-separated record per frame. Paths are relative to the manifest's directory;
    // "-" marks an absent optional file. '#' starts a comment line.

    inline Manifest parse_manifest(const std::string &text, const fs::path &root, const std::string &name)
    {
        Manifest m;
        m.root = root;
        const auto lines = io::lines_of(text);
        bool in_records = false;
        std::set<std::string> seen_keys, seen_ids;
        std::set<std::string> required = {"fx", "fy", "cx", "cy", "width", "height", "depth_min", "depth_max"};

        for (std::size_t i = 0; i < lines.size(); ++i)
        {
            const std::string &line = lines[i];
            const std::string where = name + ":" + std::to_string(i + 1);
            if (line.empty() || line[0] == '#')
                continue;
            if (!in_records)
            {
                if (line.rfind("frame_id", 0) == 0)
                {
                    if (line != manifest_columns)
                        throw ParseError(where + ": column line must be '" +
                                         std::string(manifest_columns) + "' (tab-separated)");
                    in_records = true;
                    continue;
                }
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ParseError(where + ": expected key=value");
                const std::string key = line.substr(0, eq);
                const std::string value = line.substr(eq + 1);
                if (!seen_keys.insert(key).second)
                    throw ParseError(where + ": duplicate key '" + key + "'");
                const std::string ctx = where + " (" + key + ")";
                auto &cam = m.camera;
                auto &d = m.defaults;
                if (key == "fx")
                    cam.fx = io::parse_double(value, ctx);
                else if (key == "fy")
                    cam.fy = io::parse_double(value, ctx);
                else if (key == "cx")
                    cam.cx = io::parse_double(value, ctx);
                else if (key == "cy")
                    cam.cy = io::parse_double(value, ctx);
                else if (key == "width")
                    cam.width = io::parse_count(value, ctx);
                else if (key == "height")
                    cam.height = io::parse_count(value, ctx);
                else if (key == "depth_min")
                    cam.depth_min = io::parse_double(value, ctx);
                else if (key == "depth_max")
                    cam.depth_max = io::parse_double(value, ctx);
                else if (key == "m_radar")
                    d.m_radar = io::parse_count(value, ctx);
                else if (key == "m_cam")
                    d.m_cam = io::parse_count(value, ctx);
                else if (key == "n_phi")
                    d.n_phi = io::parse_count(value, ctx);
                else if (key == "n_theta")
                    d.n_theta = io::parse_count(value, ctx);
                else if (key == "phi_min")
                    d.phi_min = io::parse_double(value, ctx);
                else if (key == "phi_max")
                    d.phi_max = io::parse_double(value, ctx);
                else if (key == "theta_min")
                    d.theta_min = io::parse_double(value, ctx);
                else if (key == "theta_max")
                    d.theta_max = io::parse_double(value, ctx);
                else if (key == "log_compress")
                {
                    if (value != "0" && value != "1")
                        throw ParseError(ctx + ": expected 0 or 1");
                    d.log_compress = value == "1";
                }
                else
                    throw ParseError(where + ": unknown key '" + key + "'");
                continue;
            }

            const auto fields = io::split(line, '\t');
            if (fields.size() < 3 || fields.size() > 5)
                throw ParseError(where + ": expected 3 to 5 tab-separated fields, got " +
                                 std::to_string(fields.size()));
            ManifestEntry e;
            e.frame_id = std::string(fields[0]);
            if (e.frame_id.empty())
                throw ParseError(where + ": empty frame_id");
            if (!seen_ids.insert(e.frame_id).second)
                throw ParseError(where + ": duplicate frame_id '" + e.frame_id + "'");
            const auto required_path = [&](std::string_view f, const char *column) {
                if (f.empty() || f == "-")
                    throw ParseError(where + ": " + column + " path is required");
                return fs::path(std::string(f));
            };
            const auto optional_path = [](std::string_view f) -> std::optional<fs::path> {
                if (f.empty() || f == "-")
                    return std::nullopt;
                return fs::path(std::string(f));
            };
            e.radar = required_path(fields[1], "radar");
            e.mask = required_path(fields[2], "mask");
            if (fields.size() > 3)
                e.gt_depth = optional_path(fields[3]);
            if (fields.size() > 4)
                e.gt_cloud = optional_path(fields[4]);
            m.entries.push_back(std::move(e));
        }

        for (const auto &key : required)
            if (!seen_keys.count(key))
                throw ParseError(name + ": missing header key '" + key + "'");
        if (!in_records)
            throw ParseError(name + ": missing column line '" + std::string(manifest_columns) + "'");
        try
        {
            m.camera.validate();
        }
        catch (const DomainError &e)
        {
            throw ParseError(name + ": " + e.what());
        }
        return m;
    }

    inline fs::path resolve(const Manifest &m, const fs::path &p) { return p.is_absolute() ? p : m.root / p; }

    // Fully validated manifest; fails before returning anything if any referenced file is missing.
    inline Manifest load_manifest(const fs::path &path)
    {
        if (!fs::exists(path))
            throw MissingFileError({path.string()});
        Manifest m = parse_manifest(io::read_file(path), path.parent_path(), path.string());
        std::vector<std::string> missing;
        const auto check = [&](const fs::path &p) {
            const fs::path full = resolve(m, p);
            if (!fs::is_regular_file(full))
                missing.push_back(full.string());
        };
        for (const auto &e : m.entries)
        {
            check(e.radar);
            check(e.mask);
            if (e.gt_depth)
                check(*e.gt_depth);
            if (e.gt_cloud)
                check(*e.gt_cloud);
        }
        if (!missing.empty())
            throw MissingFileError(std::move(missing));
        return m;
    }

    inline FramePair load_frame(const Manifest &m, const ManifestEntry &e)
    {
        FramePair f{e.frame_id, std::nullopt, std::nullopt, io::read_grid(resolve(m, e.mask)), std::nullopt,
                    std::nullopt};
        const fs::path radar = resolve(m, e.radar);
        if (io::is_cloud_file(radar))
            f.radar_cloud = io::read_cloud(radar);
        else
            f.radar_depth = io::read_grid(radar);
        if (e.gt_depth)
            f.gt_depth = io::read_grid(resolve(m, *e.gt_depth));
        if (e.gt_cloud)
            f.gt_cloud = io::read_cloud(resolve(m, *e.gt_cloud));
        return f;
    }

    // Applies manifest-pinned settings on top of `base`.
    inline EncodingConfig apply_defaults(EncodingConfig base, const EncodingDefaults &d)
    {
        if (d.m_radar)
            base.m_radar = *d.m_radar;
        if (d.m_cam)
            base.m_cam = *d.m_cam;
        if (d.log_compress)
            base.log_compress = *d.log_compress;
        if (d.phi_min || d.phi_max || d.n_phi)
            base.phi = make_angle_grid(d.phi_min.value_or(base.phi.min_deg()), d.phi_max.value_or(base.phi.max_deg()),
                                       d.n_phi.value_or(base.phi.count()));
        if (d.theta_min || d.theta_max || d.n_theta)
            base.theta = make_angle_grid(d.theta_min.value_or(base.theta.min_deg()),
                                         d.theta_max.value_or(base.theta.max_deg()),
                                         d.n_theta.value_or(base.theta.count()));
        return base;
    }

    // ---- worker pool ----

    // Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be written by index; the first
    // exception (lowest index) is rethrown after all workers finish.
    inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)> &fn)
    {
        workers = std::max<std::size_t>(1, std::min(workers, n));
        std::vector<std::exception_ptr> errors(n);
        std::atomic<std::size_t> next{0};
        const auto work = [&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        if (workers == 1)
            work();
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(work);
            for (auto &t : pool)
                t.join();
        }
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    inline std::size_t default_workers()
    {
        const unsigned hc = std::thread::hardware_concurrency();
        return hc == 0 ? 1 : hc;
    }

    // ---- encode ----

    struct EncodeOptions
    {
        std::size_t workers = 1;
        bool fail_fast = false;
        bool preview = false; // also write 16-bit PGM previews
    };

    struct FrameError
    {
        std::string frame_id;
        std::string message;
    };

    struct EncodeReport
    {
        fs::path index;
        std::vector<fs::path> files; // spectrum files, in manifest order
        std::vector<FrameError> errors;
    };

    inline std::string describe(const EncodingConfig &cfg)
    {
        const auto grid = [](const AngleGrid &g) {
            return io::format_double(g.min_deg()) + "," + io::format_double(g.max_deg()) + "," +
                   std::to_string(g.count());
        };
        return "m_radar=" + std::to_string(cfg.m_radar) + " m_cam=" + std::to_string(cfg.m_cam) + " phi=" +
               grid(cfg.phi) + " theta=" + grid(cfg.theta) + " log_compress=" + (cfg.log_compress ? "1" : "0");
    }

    inline void write_spectrum(const fs::path &csv, const Spectrum &s, bool preview)
    {
        io::write_grid_csv(csv, s.grid());
        if (preview)
        {
            fs::path pgm = csv;
            pgm.replace_extension(".pgm");
            io::write_file_atomic(pgm, io::grid_to_pgm(s.grid()));
        }
    }

    // Radar and camera spectra for every frame, plus index.tsv mapping frame_id to artifact paths.
    // The index is written last and lists only frames that succeeded.
    inline EncodeReport run_encode(const Manifest &m, const EncodingConfig &cfg, const fs::path &out_dir,
                                   const EncodeOptions &opt = {})
    {
        cfg.validate();
        fs::create_directories(out_dir);
        const std::size_t n = m.entries.size();
        std::vector<std::optional<std::string>> failures(n);
        const SpectrumEstimator radar_est(cfg.m_radar, cfg.phi, cfg.theta);
        const SpectrumEstimator cam_est(cfg.m_cam, cfg.phi, cfg.theta);

        parallel_for(n, opt.workers, [&](std::size_t i) {
            const auto &e = m.entries[i];
            try
            {
                const FramePair f = load_frame(m, e);
                Spectrum pr = radar_est(normalize_grid(f.radar_depth_map(m.camera)));
                Spectrum pc = cam_est(mask_weights(f.seg_mask, cfg.class_weights));
                if (cfg.log_compress)
                {
                    pr = log_compress(pr);
                    pc = log_compress(pc);
                }
                write_spectrum(out_dir / (e.frame_id + ".radar.csv"), pr, opt.preview);
                write_spectrum(out_dir / (e.frame_id + ".camera.csv"), pc, opt.preview);
            }
            catch (const std::exception &ex)
            {
                if (opt.fail_fast)
                    throw;
                failures[i] = ex.what();
            }
        });

        EncodeReport report;
        std::string index = "# " + describe(cfg) + "\nframe_id\tradar_spectrum\tcamera_spectrum\n";
        for (std::size_t i = 0; i < n; ++i)
        {
            const auto &id = m.entries[i].frame_id;
            if (failures[i])
            {
                report.errors.push_back({id, *failures[i]});
                continue;
            }
            index += id + "\t" + id + ".radar.csv\t" + id + ".camera.csv\n";
            report.files.push_back(out_dir / (id + ".radar.csv"));
            report.files.push_back(out_dir / (id + ".camera.csv"));
        }
        report.index = out_dir / "index.tsv";
        io::write_file_atomic(report.index, index);
        return report;
    }

    // ---- sweep ----

    inline const std::set<std::string> &sweep_metrics()
    {
        static const std::set<std::string> names = {"pearson", "mutual_info", "mse", "ssim"};
        return names;
    }

    // Compares a radar spectrum with a camera spectrum. mse and ssim see min-max normalized inputs.
    inline double spectrum_metric(const std::string &metric, const PixelGrid &radar, const PixelGrid &cam,
                                  std::size_t bins)
    {
        if (metric == "pearson")
            return pearson(radar, cam);
        if (metric == "mutual_info")
            return mutual_information(radar, cam, bins);
        if (metric == "mse")
            return mse(normalize_grid(radar), normalize_grid(cam));
        if (metric == "ssim")
            return ssim(normalize_grid(radar), normalize_grid(cam));
        throw DomainError("unknown metric '" + metric + "'");
    }

    struct SweepResult
    {
        std::vector<std::size_t> m_values;              // sorted, unique
        std::vector<std::vector<std::optional<double>>> cells; // [m_radar][m_cam]; set only when m_cam > m_radar
        std::size_t warnings = 0;                       // frames whose metric was degenerate

        std::string to_csv() const
        {
            std::string out = "m_radar\\m_cam";
            for (std::size_t v : m_values)
                out += "," + std::to_string(v);
            out += "\n";
            for (std::size_t r = 0; r < m_values.size(); ++r)
            {
                out += std::to_string(m_values[r]);
                for (std::size_t c = 0; c < m_values.size(); ++c)
                {
                    out += ",";
                    if (cells[r][c])
                        out += io::format_double(*cells[r][c]);
                }
                out += "\n";
            }
            return out;
        }
    };

    struct SweepOptions
    {
        std::size_t workers = 1;
        std::size_t bins = 64;
    };

    // Frame-averaged metric(P_radar(m_radar), P_cam(m_cam)) for every pair with m_cam > m_radar. A cell
    // with any degenerate frame is NaN.
    inline SweepResult run_sweep(const Manifest &m, const std::vector<std::size_t> &m_values, const std::string &metric,
                                 const EncodingConfig &base, const SweepOptions &opt = {})
    {
        if (m_values.empty())
            throw DomainError("sweep: m_values must not be empty");
        if (!sweep_metrics().count(metric))
            throw DomainError("sweep: unknown metric '" + metric + "'");
        if (m.entries.empty())
            throw DomainError("sweep: manifest has no frames");
        SweepResult res;
        res.m_values = m_values;
        std::sort(res.m_values.begin(), res.m_values.end());
        res.m_values.erase(std::unique(res.m_values.begin(), res.m_values.end()), res.m_values.end());
        if (res.m_values.front() == 0)
            throw DomainError("sweep: segment counts must be positive");
        const std::size_t nv = res.m_values.size();

        std::vector<SpectrumEstimator> estimators;
        for (std::size_t v : res.m_values)
            estimators.emplace_back(v, base.phi, base.theta);

        const std::size_t frames = m.entries.size();
        // [frame][m index][pair index]: value or nullopt when degenerate.
        std::vector<std::vector<std::vector<std::optional<double>>>> per_frame(frames);
        parallel_for(frames, opt.workers, [&](std::size_t fi) {
            const FramePair f = load_frame(m, m.entries[fi]);
            const PixelGrid radar_img = normalize_grid(f.radar_depth_map(m.camera));
            const PixelGrid cam_img = mask_weights(f.seg_mask, base.class_weights);
            std::vector<PixelGrid> radar, cam;
            for (const auto &est : estimators)
            {
                Spectrum pr = est(radar_img), pc = est(cam_img);
                radar.push_back(base.log_compress ? log_compress(pr).grid() : pr.grid());
                cam.push_back(base.log_compress ? log_compress(pc).grid() : pc.grid());
            }
            auto &table = per_frame[fi];
            table.assign(nv, std::vector<std::optional<double>>(nv));
            for (std::size_t r = 0; r < nv; ++r)
                for (std::size_t c = r + 1; c < nv; ++c)
                {
                    try
                    {
                        table[r][c] = spectrum_metric(metric, radar[r], cam[c], opt.bins);
                    }
                    catch (const DegenerateInput &)
                    {
                        table[r][c] = std::nullopt;
                    }
                }
        });

        res.cells.assign(nv, std::vector<std::optional<double>>(nv));
        for (std::size_t r = 0; r < nv; ++r)
            for (std::size_t c = r + 1; c < nv; ++c)
            {
                double sum = 0.0;
                bool degenerate = false;
                for (std::size_t fi = 0; fi < frames; ++fi)
                {
                    if (!per_frame[fi][r][c])
                    {
                        degenerate = true;
                        ++res.warnings;
                        continue;
                    }
                    sum += *per_frame[fi][r][c];
                }
                res.cells[r][c] = degenerate ? std::nan("") : sum / static_cast<double>(frames);
            }
        return res;
    }

    // ---- train ----

    struct TrainOptions
    {
        std::size_t epochs = 200;
        double lr = 0.1;
        std::uint64_t seed = 42;
        std::size_t workers = 1;
    };

    struct TrainReport
    {
        fs::path checkpoint;
        fs::path loss_curve;
        fs::path predictions;
        std::vector<double> losses;
    };

    inline std::vector<TrainingPair> build_training_set(const Manifest &m, const EncodingConfig &cfg,
                                                        std::size_t workers = 1)
    {
        cfg.validate();
        const SpectrumEstimator radar_est(cfg.m_radar, cfg.phi, cfg.theta);
        const SpectrumEstimator cam_est(cfg.m_cam, cfg.phi, cfg.theta);
        std::vector<std::optional<TrainingPair>> pairs(m.entries.size());
        parallel_for(m.entries.size(), workers, [&](std::size_t i) {
            const FramePair f = load_frame(m, m.entries[i]);
            Spectrum pr = radar_est(normalize_grid(f.radar_depth_map(m.camera)));
            Spectrum pc = cam_est(mask_weights(f.seg_mask, cfg.class_weights));
            if (cfg.log_compress)
            {
                pr = log_compress(pr);
                pc = log_compress(pc);
            }
            pairs[i] = build_target(pr, pc);
        });
        std::vector<TrainingPair> out;
        for (auto &p : pairs)
            out.push_back(std::move(*p));
        return out;
    }

    // Trains the enhancer on every frame and writes model.ckpt, loss.csv and pred/<frame_id>.csv.
    inline TrainReport run_train(const Manifest &m, const EncodingConfig &cfg, const fs::path &out_dir,
                                 const TrainOptions &opt)
    {
        const auto data = build_training_set(m, cfg, opt.workers);
        if (data.empty())
            throw DomainError("train: manifest has no frames");
        auto result = train(EnhancerModel::create(opt.seed), data, opt.epochs, opt.lr);

        TrainReport report;
        report.losses = result.losses;
        report.checkpoint = out_dir / "model.ckpt";
        report.loss_curve = out_dir / "loss.csv";
        report.predictions = out_dir / "pred";
        io::write_checkpoint(report.checkpoint, result.model.named_tensors());
        std::string curve = "epoch,loss\n";
        for (std::size_t e = 0; e < result.losses.size(); ++e)
            curve += std::to_string(e) + "," + io::format_double(result.losses[e]) + "\n";
        io::write_file_atomic(report.loss_curve, curve);
        for (std::size_t i = 0; i < data.size(); ++i)
            io::write_grid_csv(report.predictions / (m.entries[i].frame_id + ".csv"),
                               forward(result.model, data[i].input.grid()));
        return report;
    }

    // ---- eval ----

    struct EvalOptions
    {
        double threshold = 0.5;
        std::size_t bins = 64;
        double rel_eps = 1e-6;
        std::size_t workers = 1;
    };

    struct EvalRow
    {
        std::string frame_id;
        MetricReport report;
    };

    struct EvalResult
    {
        std::vector<EvalRow> rows;
        MetricReport mean;
        MetricReport stddev;

        std::string to_csv() const
        {
            std::string out = "frame_id";
            for (auto c : MetricReport::columns)
                out += "," + std::string(c);
            out += "\n";
            const auto row = [&](const std::string &label, const MetricReport &r) {
                out += label;
                for (double v : r.as_array())
                    out += "," + io::format_double(v);
                out += "\n";
            };
            for (const auto &r : rows)
                row(r.frame_id, r.report);
            row("mean", mean);
            row("std", stddev);
            return out;
        }
    };

    namespace detail
    {
        template <typename Fn>
        double or_nan(Fn &&fn)
        {
            try
            {
                return fn();
            }
            catch (const DegenerateInput &)
            {
                return std::nan("");
            }
        }

        inline MetricReport from_array(const std::array<double, 8> &a)
        {
            return MetricReport{a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
        }
    }

    // Scores one prediction (spectrum layout, rows over phi) against the frame's ground truth.
    // Raster metrics compare min-max normalized prediction and ground-truth depth brought to the
    // prediction's layout. Cloud metrics back-project both rasters with ranges from the radar depth map,
    // unless an explicit ground-truth cloud is given.
    inline MetricReport evaluate_frame(const PixelGrid &prediction, const FramePair &frame, const CameraModel &cam,
                                       const EncodingConfig &cfg, const EvalOptions &opt)
    {
        const AngleGrid phi = make_angle_grid(cfg.phi.min_deg(), cfg.phi.max_deg(), prediction.rows());
        const AngleGrid theta = make_angle_grid(cfg.theta.min_deg(), cfg.theta.max_deg(), prediction.cols());
        const Spectrum pred_spec(PixelGrid(prediction.rows(), prediction.cols(),
                                           std::vector<double>(prediction.values().begin(), prediction.values().end())),
                                 cfg.m_radar, phi, theta);
        const PixelGrid gt_image = frame.gt_depth ? *frame.gt_depth : project_to_depth_map(*frame.gt_cloud, cam);
        const PixelGrid gt_layout = to_spectrum_layout(gt_image, pred_spec);
        const Spectrum gt_spec(gt_layout, cfg.m_radar, phi, theta);

        const PixelGrid p = normalize_grid(prediction);
        const PixelGrid g = normalize_grid(gt_layout);

        MetricReport r;
        r.mae = mae(p, g);
        r.rel = detail::or_nan([&] { return rel(p, g, opt.rel_eps); });
        r.pearson = detail::or_nan([&] { return pearson(p, g); });
        r.mutual_info = mutual_information(p, g, opt.bins);
        r.mse = mse(p, g);
        r.ssim = (p.rows() >= 8 && p.cols() >= 8) ? ssim(p, g) : std::nan("");

        const PixelGrid hint = depth_hint_from_depth_map(frame.radar_depth_map(cam), pred_spec, cam);
        const PointCloud pred_cloud = spectrum_to_point_cloud(pred_spec, hint, cam, opt.threshold);
        const PointCloud gt_cloud =
            frame.gt_cloud ? *frame.gt_cloud : spectrum_to_point_cloud(gt_spec, hint, cam, opt.threshold);
        r.ucd = detail::or_nan([&] { return ucd(pred_cloud, gt_cloud); });
        r.bcd = detail::or_nan([&] { return bcd(pred_cloud, gt_cloud); });
        return r;
    }

    // Per-frame reports for frames with ground truth, then mean and population standard deviation
    // over the finite entries of each column.
    inline EvalResult run_eval(const fs::path &pred_dir, const Manifest &m, const CameraModel &cam,
                               const EncodingConfig &cfg, const EvalOptions &opt = {})
    {
        cam.validate();
        std::vector<std::size_t> scored;
        std::vector<std::string> missing;
        for (std::size_t i = 0; i < m.entries.size(); ++i)
        {
            const auto &e = m.entries[i];
            if (!e.gt_depth && !e.gt_cloud)
                continue;
            scored.push_back(i);
            if (!fs::is_regular_file(pred_dir / (e.frame_id + ".csv")))
                missing.push_back(e.frame_id);
        }
        if (!missing.empty())
            throw MissingPredictionError(std::move(missing));

        EvalResult res;
        res.rows.resize(scored.size());
        parallel_for(scored.size(), opt.workers, [&](std::size_t j) {
            const auto &e = m.entries[scored[j]];
            const FramePair f = load_frame(m, e);
            const PixelGrid pred = io::read_grid(pred_dir / (e.frame_id + ".csv"));
            res.rows[j] = EvalRow{e.frame_id, evaluate_frame(pred, f, cam, cfg, opt)};
        });

        std::array<double, 8> mean{}, stddev{};
        for (std::size_t c = 0; c < 8; ++c)
        {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto &row : res.rows)
                if (const double v = row.report.as_array()[c]; std::isfinite(v))
                    sum += v, ++n;
            mean[c] = n ? sum / static_cast<double>(n) : std::nan("");
            double ss = 0.0;
            for (const auto &row : res.rows)
                if (const double v = row.report.as_array()[c]; std::isfinite(v))
                    ss += (v - mean[c]) * (v - mean[c]);
            stddev[c] = n ? std::sqrt(ss / static_cast<double>(n)) : std::nan("");
        }
        res.mean = detail::from_array(mean);
        res.stddev = detail::from_array(stddev);
        return res;
    }

    // ---- synthetic dataset on disk ----

    inline std::string manifest_header(const CameraModel &cam)
    {
        std::string out = "# specenc manifest\n";
        out += "fx=" + io::format_double(cam.fx) + "\n";
        out += "fy=" + io::format_double(cam.fy) + "\n";
        out += "cx=" + io::format_double(cam.cx) + "\n";
        out += "cy=" + io::format_double(cam.cy) + "\n";
        out += "width=" + std::to_string(cam.width) + "\n";
        out += "height=" + std::to_string(cam.height) + "\n";
        out += "depth_min=" + io::format_double(cam.depth_min) + "\n";
        out += "depth_max=" + io::format_double(cam.depth_max) + "\n";
        return out;
    }

    // Writes radar clouds, PGM masks, CSV ground-truth depth maps and manifest.txt under `dir`.
    inline fs::path write_synthetic_dataset(const fs::path &dir, std::size_t frames, std::uint64_t seed,
                                            const CameraModel &cam = {}, const synthetic::SceneOptions &opt = {})
    {
        const auto data = synthetic::generate(frames, seed, cam, opt);
        std::string manifest = manifest_header(cam) + std::string(manifest_columns) + "\n";
        for (const auto &f : data)
        {
            const std::string radar = "radar/" + f.frame_id + ".csv";
            const std::string mask = "mask/" + f.frame_id + ".pgm";
            const std::string gt = "gt/" + f.frame_id + ".csv";
            io::write_file_atomic(dir / radar, io::cloud_to_csv(f.radar_cloud));
            io::write_file_atomic(dir / mask, io::grid_to_pgm(f.mask, io::PgmRange{}));
            io::write_grid_csv(dir / gt, f.gt_depth);
            manifest += f.frame_id + "\t" + radar + "\t" + mask + "\t" + gt + "\t-\n";
        }
        const fs::path path = dir / "manifest.txt";
        io::write_file_atomic(path, manifest);
        return path;
    }
}
