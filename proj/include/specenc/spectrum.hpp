#pragma once

#include "specenc/basis.hpp"
#include "specenc/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <optional>

namespace specenc
{
    // Encoding parameters shared by the radar and camera transforms.
    struct EncodingConfig
    {
        std::size_t m_radar = 20;
        std::size_t m_cam = 200;
        AngleGrid phi = make_angle_grid(-70.0, 70.0, 128);
        AngleGrid theta = make_angle_grid(-70.0, 70.0, 128);
        bool log_compress = true;
        // Per-class weights for camera masks. Empty means binarize: every foreground class weighs 1.
        std::map<long, double> class_weights;

        void validate() const
        {
            if (m_radar == 0)
                throw DomainError("encoding config: m_radar must be positive");
            if (m_cam <= m_radar)
                throw DomainError("encoding config: m_cam must exceed m_radar");
            for (const auto &[cls, w] : class_weights)
                if (!std::isfinite(w) || w < 0.0)
                    throw DomainError("encoding config: class weight for " + std::to_string(cls) +
                                      " must be finite and non-negative");
        }
    };

    // Precomputed |covariance| for both axes at a fixed segment count; reusable across images.
    class SpectrumEstimator
    {
    public:
        SpectrumEstimator(std::size_t m_segments, const AngleGrid &phi, const AngleGrid &theta)
            : m_segments_(m_segments), phi_(phi), theta_(theta)
        {
            if (m_segments == 0)
                throw DomainError("estimate_spectrum: m_segments must be positive");
            phi_weights_ = build_basis(m_segments, phi).covariance.cwiseAbs();
            theta_weights_ = build_basis(m_segments, theta).covariance.cwiseAbs();
        }

        // Image rows map to theta, image columns to phi; the image is resampled to K x N first.
        Spectrum operator()(const PixelGrid &image) const
        {
            const std::size_t n_len = phi_.count();
            const std::size_t k_len = theta_.count();
            const PixelGrid adapted = resample_nearest(image, k_len, n_len);

            using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            const Eigen::Map<const RowMajor> pixels(adapted.values().data(), static_cast<Eigen::Index>(k_len),
                                                    static_cast<Eigen::Index>(n_len));

            // P(n,k) = sum_{a,b} |I(a,b)| * |y_theta(k)[a]| * |y_phi(n)[b]|
            const Eigen::MatrixXd col_weighted = pixels.cwiseAbs().transpose() * theta_weights_.transpose();
            const RowMajor power = phi_weights_ * col_weighted;

            std::vector<double> values(power.data(), power.data() + power.size());
            for (double &v : values)
                v = v < 0.0 ? 0.0 : v;
            return Spectrum(PixelGrid(n_len, k_len, std::move(values)), m_segments_, phi_, theta_);
        }

        std::size_t m_segments() const noexcept { return m_segments_; }

    private:
        std::size_t m_segments_;
        AngleGrid phi_;
        AngleGrid theta_;
        Eigen::MatrixXd phi_weights_;   // N x N
        Eigen::MatrixXd theta_weights_; // K x K
    };

    inline Spectrum estimate_spectrum(const PixelGrid &image, std::size_t m_segments, const AngleGrid &phi,
                                      const AngleGrid &theta)
    {
        return SpectrumEstimator(m_segments, phi, theta)(image);
    }

    // ln(1 + P); spectra contain exact zeros so plain ln() is unusable.
    inline Spectrum log_compress(const Spectrum &s)
    {
        std::vector<double> out(s.grid().values().begin(), s.grid().values().end());
        for (double &v : out)
            v = std::log1p(v);
        return Spectrum(PixelGrid(s.grid().rows(), s.grid().cols(), std::move(out)), s.m_segments(), s.phi(),
                        s.theta());
    }

    // Radar depth map (inverse-depth convention) to spectrum at m_radar segments.
    inline Spectrum transform_radar(const PixelGrid &depth_map, const EncodingConfig &cfg)
    {
        Spectrum s = estimate_spectrum(normalize_grid(depth_map), cfg.m_radar, cfg.phi, cfg.theta);
        return cfg.log_compress ? log_compress(s) : s;
    }

    // Label raster to weights: background 0, foreground classes 1 (or their table weight).
    inline PixelGrid mask_weights(const PixelGrid &mask, const std::map<long, double> &class_weights = {})
    {
        std::vector<double> out(mask.size());
        auto in = mask.values();
        for (std::size_t i = 0; i < in.size(); ++i)
        {
            const double v = in[i];
            const double rounded = std::round(v);
            if (v < -1e-9 || std::abs(v - rounded) > 1e-9)
                throw DomainError("transform_camera: mask value " + std::to_string(v) +
                                  " is not a non-negative class id");
            const long cls = static_cast<long>(rounded);
            if (cls == 0)
                out[i] = 0.0;
            else if (class_weights.empty())
                out[i] = 1.0;
            else
            {
                auto it = class_weights.find(cls);
                out[i] = it == class_weights.end() ? 0.0 : it->second;
            }
        }
        return PixelGrid(mask.rows(), mask.cols(), std::move(out));
    }

    inline Spectrum transform_camera(const PixelGrid &mask, const EncodingConfig &cfg)
    {
        Spectrum s = estimate_spectrum(mask_weights(mask, cfg.class_weights), cfg.m_cam, cfg.phi, cfg.theta);
        return cfg.log_compress ? log_compress(s) : s;
    }

    // Image-layout raster (rows over theta, cols over phi) brought to spectrum layout (rows over phi).
    inline PixelGrid to_spectrum_layout(const PixelGrid &image, const Spectrum &like)
    {
        return transpose(resample_nearest(image, like.theta().count(), like.phi().count()));
    }
}
