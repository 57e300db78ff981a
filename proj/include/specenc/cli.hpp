#pragma once

#include "specenc/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace specenc::cli
{
    inline constexpr int exit_ok = 0;
    inline constexpr int exit_runtime = 1;
    inline constexpr int exit_usage = 2;

    inline const std::vector<std::string> &subcommands()
    {
        static const std::vector<std::string> names = {"encode", "sweep", "train", "eval", "gen-synthetic",
                                                       "gradcheck"};
        return names;
    }

    struct CliConfig
    {
        std::string subcommand;
        std::string manifest;
        std::string out;
        std::string pred_dir;
        std::size_t m_radar = 20;
        std::size_t m_cam = 200;
        double phi_min = -70.0;
        double phi_max = 70.0;
        double theta_min = -70.0;
        double theta_max = 70.0;
        std::size_t n_phi = 128;
        std::size_t n_theta = 128;
        std::size_t bins = 64;
        double threshold = 0.5;
        std::size_t epochs = 200;
        double lr = 0.1;
        std::uint64_t seed = 42;
        std::size_t workers = pipeline::default_workers();
        bool fail_fast = false;
        bool log_compress = true;
        bool preview = false;
        std::vector<std::size_t> m_values = {10, 20, 50, 70, 200};
        std::string metric = "pearson";
        std::size_t frames = 8;
        double epsilon = 1e-5;

        // Flags given explicitly on the command line; these win over manifest-pinned settings.
        std::vector<std::string> explicit_flags;

        bool given(const std::string &flag) const
        {
            return std::find(explicit_flags.begin(), explicit_flags.end(), flag) != explicit_flags.end();
        }

        EncodingConfig encoding(const pipeline::EncodingDefaults &pinned = {}) const
        {
            EncodingConfig cfg;
            cfg.m_radar = m_radar;
            cfg.m_cam = m_cam;
            cfg.log_compress = log_compress;
            cfg.phi = make_angle_grid(phi_min, phi_max, n_phi);
            cfg.theta = make_angle_grid(theta_min, theta_max, n_theta);
            pipeline::EncodingDefaults d = pinned;
            const auto drop = [&](const char *flag, auto &field) {
                if (given(flag))
                    field.reset();
            };
            drop("--m-radar", d.m_radar);
            drop("--m-cam", d.m_cam);
            drop("--n-phi", d.n_phi);
            drop("--n-theta", d.n_theta);
            drop("--phi-min", d.phi_min);
            drop("--phi-max", d.phi_max);
            drop("--theta-min", d.theta_min);
            drop("--theta-max", d.theta_max);
            if (given("--log-compress") || given("--no-log-compress"))
                d.log_compress.reset();
            cfg = pipeline::apply_defaults(cfg, d);
            cfg.validate();
            return cfg;
        }
    };

    // One row per option as shown by --help: flags, default, description.
    struct FlagDoc
    {
        std::string_view flags;
        std::string_view default_value;
        std::string_view description;
    };

    inline const std::vector<FlagDoc> &flag_docs()
    {
        static const std::vector<FlagDoc> docs = {
            {"--manifest PATH", "none", "Manifest file (key=value header + tab-separated frames)"},
            {"--out DIR", "none", "Output directory"},
            {"--pred-dir DIR", "none", "Directory of <frame_id>.csv predictions (eval)"},
            {"--m-radar INT", "20", "Segments for the radar transform"},
            {"--m-cam INT", "200", "Segments for the camera transform (must exceed --m-radar)"},
            {"--phi-min DEG", "-70", "Azimuth window start, degrees"},
            {"--phi-max DEG", "70", "Azimuth window end, degrees"},
            {"--theta-min DEG", "-70", "Elevation window start, degrees"},
            {"--theta-max DEG", "70", "Elevation window end, degrees"},
            {"--n-phi INT", "128", "Azimuth grid count N"},
            {"--n-theta INT", "128", "Elevation grid count K"},
            {"--bins INT", "64", "Histogram bins for mutual information"},
            {"--threshold FRAC", "0.5", "Normalized power threshold for back-projection, in (0, 1)"},
            {"--epochs INT", "200", "Training epochs"},
            {"--lr FLOAT", "0.1", "Gradient descent step size"},
            {"--seed INT", "42", "Seed for every random choice"},
            {"--workers INT", "logical cores", "Worker threads"},
            {"--fail-fast", "off", "Stop at the first failing frame"},
            {"--log-compress", "on", "Apply ln(1 + P) to spectra"},
            {"--no-log-compress", "off", "Keep spectra uncompressed"},
            {"--preview", "off", "Also write 16-bit PGM previews of spectra"},
            {"--m-values LIST", "10,20,50,70,200", "Comma-separated segment counts to sweep"},
            {"--metric NAME", "pearson", "Sweep metric: pearson, mutual_info, mse or ssim"},
            {"--frames INT", "8", "Frames to generate (gen-synthetic)"},
            {"--epsilon FLOAT", "1e-05", "Finite-difference step (gradcheck), in [1e-7, 1e-3]"},
            {"-h, --help", "off", "Print this help and exit"},
        };
        return docs;
    }

    inline std::string describe_flag(std::string_view flag)
    {
        for (const auto &d : flag_docs())
            if (d.flags == flag || d.flags.substr(0, d.flags.find(' ')) == flag)
                return std::string(d.description);
        return {};
    }

    // Builds the parser bound to `cfg`. Options live on the top-level app; subcommands fall through to it
    // so flags may appear before or after the subcommand name.
    inline void build_app(CLI::App &app, CliConfig &cfg)
    {
        app.description("Spatial-spectrum encoding of radar depth maps and camera masks.");
        app.require_subcommand(1, 1);
        app.allow_extras(false);

        const auto d = describe_flag;
        app.add_option("--manifest", cfg.manifest, d("--manifest"));
        app.add_option("--out", cfg.out, d("--out"));
        app.add_option("--pred-dir", cfg.pred_dir, d("--pred-dir"));
        app.add_option("--m-radar", cfg.m_radar, d("--m-radar"))->check(CLI::PositiveNumber);
        app.add_option("--m-cam", cfg.m_cam, d("--m-cam"))->check(CLI::PositiveNumber);
        app.add_option("--phi-min", cfg.phi_min, d("--phi-min"));
        app.add_option("--phi-max", cfg.phi_max, d("--phi-max"));
        app.add_option("--theta-min", cfg.theta_min, d("--theta-min"));
        app.add_option("--theta-max", cfg.theta_max, d("--theta-max"));
        app.add_option("--n-phi", cfg.n_phi, d("--n-phi"))->check(CLI::Range(2, 1 << 16));
        app.add_option("--n-theta", cfg.n_theta, d("--n-theta"))->check(CLI::Range(2, 1 << 16));
        app.add_option("--bins", cfg.bins, d("--bins"))->check(CLI::Range(2, 1 << 16));
        app.add_option("--threshold", cfg.threshold, d("--threshold"))->check(CLI::Range(0.0, 1.0));
        app.add_option("--epochs", cfg.epochs, d("--epochs"));
        app.add_option("--lr", cfg.lr, d("--lr"))->check(CLI::PositiveNumber);
        app.add_option("--seed", cfg.seed, d("--seed"));
        app.add_option("--workers", cfg.workers, d("--workers"))->check(CLI::PositiveNumber);
        app.add_flag("--fail-fast", cfg.fail_fast, d("--fail-fast"));
        app.add_flag("--log-compress,!--no-log-compress", cfg.log_compress, d("--log-compress"));
        app.add_flag("--preview", cfg.preview, d("--preview"));
        app.add_option("--m-values", cfg.m_values, d("--m-values"))->delimiter(',')->check(CLI::PositiveNumber);
        app.add_option("--metric", cfg.metric, d("--metric"))
            ->check(CLI::IsMember({"pearson", "mutual_info", "mse", "ssim"}));
        app.add_option("--frames", cfg.frames, d("--frames"))->check(CLI::PositiveNumber);
        app.add_option("--epsilon", cfg.epsilon, d("--epsilon"))->check(CLI::Range(1e-7, 1e-3));

        for (const auto &name : subcommands())
            app.add_subcommand(name)->fallthrough();
        app.get_subcommand("encode")->description("Write radar and camera spectra for every frame");
        app.get_subcommand("sweep")->description("Frame-averaged metric over (m_radar, m_cam) pairs");
        app.get_subcommand("train")->description("Train the spectrum enhancer and write predictions");
        app.get_subcommand("eval")->description("Score predictions against ground truth");
        app.get_subcommand("gen-synthetic")->description("Write a synthetic dataset and manifest");
        app.get_subcommand("gradcheck")->description("Compare analytic and finite-difference gradients");
    }

    inline std::string help_text()
    {
        CLI::App app{"specenc"};
        CliConfig cfg;
        build_app(app, cfg);
        const auto pad = [](std::string_view s, std::size_t width) {
            std::string out(s);
            out.resize(std::max(width, s.size() + 2), ' ');
            return out;
        };
        std::string out = "specenc: " + app.get_description() + "\n\nUsage: specenc SUBCOMMAND [OPTIONS]\n\nSubcommands:\n";
        for (const auto &name : subcommands())
            out += "  " + pad(name, 16) + app.get_subcommand(name)->get_description() + "\n";
        out += "\nOptions:\n  " + pad("Flag", 22) + pad("Default", 18) + "Description\n";
        for (const auto &doc : flag_docs())
            out += "  " + pad(doc.flags, 22) + pad(doc.default_value, 18) + std::string(doc.description) + "\n";
        return out;
    }

    // Parses and validates. Throws UsageError for anything the user must fix on the command line;
    // CLI::CallForHelp propagates for --help.
    inline CliConfig parse_args(const std::vector<std::string> &args)
    {
        CLI::App app{"specenc"};
        CliConfig cfg;
        build_app(app, cfg);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        try
        {
            app.parse(reversed);
        }
        catch (const CLI::CallForHelp &)
        {
            throw;
        }
        catch (const CLI::CallForAllHelp &)
        {
            throw;
        }
        catch (const CLI::ParseError &e)
        {
            std::string msg = e.what();
            if (msg.empty())
                msg = e.get_name();
            throw UsageError(msg);
        }

        for (auto *opt : app.get_options())
            if (opt->count() > 0)
                for (const auto &name : opt->get_lnames())
                    cfg.explicit_flags.push_back("--" + name);
        // The negated form of a flag pair is recorded under its own name.
        for (const auto &a : args)
            if (a == "--no-log-compress")
                cfg.explicit_flags.push_back(a);

        cfg.subcommand = app.get_subcommands().front()->get_name();

        if (cfg.m_cam <= cfg.m_radar)
            throw UsageError("--m-cam (" + std::to_string(cfg.m_cam) + ") must exceed --m-radar (" +
                             std::to_string(cfg.m_radar) + ")");
        const auto window = [](double lo, double hi, const char *axis) {
            if (!(lo > -90.0 && lo < hi && hi < 90.0))
                throw UsageError(std::string("--") + axis + "-min/--" + axis +
                                 "-max must satisfy -90 < min < max < 90");
        };
        window(cfg.phi_min, cfg.phi_max, "phi");
        window(cfg.theta_min, cfg.theta_max, "theta");
        if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0)
            throw UsageError("--threshold must lie strictly between 0 and 1");

        const auto require = [&](const std::string &value, const char *flag) {
            if (value.empty())
                throw UsageError(cfg.subcommand + " requires " + flag);
        };
        const std::string &sub = cfg.subcommand;
        if (sub == "encode" || sub == "train" || sub == "sweep" || sub == "eval")
            require(cfg.manifest, "--manifest");
        if (sub == "encode" || sub == "train" || sub == "gen-synthetic")
            require(cfg.out, "--out");
        if (sub == "eval")
            require(cfg.pred_dir, "--pred-dir");
        if (sub == "sweep" && cfg.m_values.empty())
            throw UsageError("--m-values must not be empty");
        return cfg;
    }

    inline int run_subcommand(const CliConfig &cfg, std::ostream &out, std::ostream &err)
    {
        namespace fs = std::filesystem;
        const std::string &sub = cfg.subcommand;

        if (sub == "gen-synthetic")
        {
            const fs::path manifest = pipeline::write_synthetic_dataset(cfg.out, cfg.frames, cfg.seed);
            out << manifest.string() << "\n";
            return exit_ok;
        }

        if (sub == "gradcheck")
        {
            const EncodingConfig enc = cfg.encoding();
            TrainingPair pair = [&] {
                if (!cfg.manifest.empty())
                {
                    const auto m = pipeline::load_manifest(cfg.manifest);
                    pipeline::Manifest first = m;
                    first.entries.resize(std::min<std::size_t>(1, m.entries.size()));
                    auto data = pipeline::build_training_set(first, cfg.encoding(m.defaults), 1);
                    if (data.empty())
                        throw DomainError("gradcheck: manifest has no frames");
                    return data.front();
                }
                // Random pair on a 16 x 16 grid.
                Rng rng(cfg.seed);
                const AngleGrid g = make_angle_grid(enc.phi.min_deg(), enc.phi.max_deg(), 16);
                std::vector<double> a(256), b(256);
                for (auto &v : a)
                    v = rng.uniform();
                for (auto &v : b)
                    v = rng.uniform();
                return TrainingPair{Spectrum(PixelGrid(16, 16, a), enc.m_radar, g, g),
                                    Spectrum(PixelGrid(16, 16, b), enc.m_radar, g, g)};
            }();
            const auto model = EnhancerModel::create(cfg.seed);
            const auto res = gradient_check(model, pair, cfg.epsilon);
            out << "parameters_checked," << res.indices.size() << "\n"
                << "kinks_skipped," << res.kinks_skipped << "\n"
                << "max_rel_error," << io::format_double(res.max_rel_error) << "\n";
            if (!(res.max_rel_error < 1e-4))
            {
                err << "error: gradient check failed: max relative error " << res.max_rel_error << " >= 1e-4\n";
                return exit_runtime;
            }
            return exit_ok;
        }

        const auto manifest = pipeline::load_manifest(cfg.manifest);
        const EncodingConfig enc = cfg.encoding(manifest.defaults);

        if (sub == "encode")
        {
            const auto report = pipeline::run_encode(manifest, enc, cfg.out,
                                                     pipeline::EncodeOptions{cfg.workers, cfg.fail_fast, cfg.preview});
            for (const auto &e : report.errors)
                err << "warning: frame " << e.frame_id << ": " << e.message << "\n";
            out << report.index.string() << "\n";
            if (!report.errors.empty())
            {
                err << "error: " << report.errors.size() << " frame(s) failed to encode\n";
                return exit_runtime;
            }
            return exit_ok;
        }
        if (sub == "sweep")
        {
            const auto res = pipeline::run_sweep(manifest, cfg.m_values, cfg.metric, enc,
                                                 pipeline::SweepOptions{cfg.workers, cfg.bins});
            if (res.warnings)
                err << "warning: " << res.warnings << " degenerate frame metric(s) recorded as nan\n";
            if (cfg.out.empty())
                out << res.to_csv();
            else
            {
                const fs::path path = fs::path(cfg.out) / ("sweep_" + cfg.metric + ".csv");
                io::write_file_atomic(path, res.to_csv());
                out << path.string() << "\n";
            }
            return exit_ok;
        }
        if (sub == "train")
        {
            const auto report = pipeline::run_train(manifest, enc, cfg.out,
                                                    pipeline::TrainOptions{cfg.epochs, cfg.lr, cfg.seed, cfg.workers});
            out << report.checkpoint.string() << "\n";
            if (!report.losses.empty())
                out << "loss," << io::format_double(report.losses.front()) << ","
                    << io::format_double(report.losses.back()) << "\n";
            return exit_ok;
        }
        if (sub == "eval")
        {
            const auto res = pipeline::run_eval(cfg.pred_dir, manifest, manifest.camera, enc,
                                                pipeline::EvalOptions{cfg.threshold, cfg.bins, 1e-6, cfg.workers});
            if (cfg.out.empty())
                out << res.to_csv();
            else
            {
                const fs::path path = fs::path(cfg.out) / "metrics.csv";
                io::write_file_atomic(path, res.to_csv());
                out << path.string() << "\n";
            }
            return exit_ok;
        }
        throw UsageError("unknown subcommand '" + sub + "'");
    }

    // Exit status: 0 success, 1 runtime error ("error: ..." on stderr), 2 usage error.
    inline int run(const std::vector<std::string> &args, std::ostream &out = std::cout,
                   std::ostream &err = std::cerr)
    {
        CliConfig cfg;
        try
        {
            if (args.empty())
            {
                err << help_text();
                return exit_usage;
            }
            cfg = parse_args(args);
        }
        catch (const CLI::CallForHelp &)
        {
            out << help_text();
            return exit_ok;
        }
        catch (const CLI::CallForAllHelp &)
        {
            out << help_text();
            return exit_ok;
        }
        catch (const UsageError &e)
        {
            err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
            return exit_usage;
        }

        try
        {
            return run_subcommand(cfg, out, err);
        }
        catch (const UsageError &e)
        {
            err << "usage error: " << e.what() << "\n";
            return exit_usage;
        }
        catch (const std::exception &e)
        {
            std::string msg = e.what();
            for (char &c : msg)
                if (c == '\n')
                    c = ' ';
            err << "error: " << msg << "\n";
            return exit_runtime;
        }
    }
}
