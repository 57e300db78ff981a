#pragma once

#include "specenc/core.hpp"
#include "specenc/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace specenc
{
    // Input (peak-scaled radar spectrum) and target (input times peak-scaled camera spectrum).
    struct TrainingPair
    {
        Spectrum input;
        Spectrum target;
    };

    struct NamedTensor
    {
        std::string name;
        std::vector<std::size_t> shape;
        std::vector<double> values;
    };

    // Endpoint-aligned bilinear resampling; suited to rasters sampled on inclusive angle grids.
    inline PixelGrid resample_bilinear(const PixelGrid &g, std::size_t rows, std::size_t cols)
    {
        if (rows == 0 || cols == 0)
            throw DomainError("resample_bilinear: empty target shape");
        if (rows == g.rows() && cols == g.cols())
            return g;
        const auto coord = [](std::size_t i, std::size_t dst, std::size_t src) {
            return dst == 1 ? 0.0
                            : static_cast<double>(i) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
        };
        std::vector<double> out(rows * cols);
        for (std::size_t r = 0; r < rows; ++r)
        {
            const double y = coord(r, rows, g.rows());
            const std::size_t y0 = std::min(static_cast<std::size_t>(y), g.rows() - 1);
            const std::size_t y1 = std::min(y0 + 1, g.rows() - 1);
            const double fy = y - static_cast<double>(y0);
            for (std::size_t c = 0; c < cols; ++c)
            {
                const double x = coord(c, cols, g.cols());
                const std::size_t x0 = std::min(static_cast<std::size_t>(x), g.cols() - 1);
                const std::size_t x1 = std::min(x0 + 1, g.cols() - 1);
                const double fx = x - static_cast<double>(x0);
                const double top = g(y0, x0) * (1.0 - fx) + g(y0, x1) * fx;
                const double bottom = g(y1, x0) * (1.0 - fx) + g(y1, x1) * fx;
                out[r * cols + c] = top * (1.0 - fy) + bottom * fy;
            }
        }
        return PixelGrid(rows, cols, std::move(out));
    }

    // Training target: elementwise product of the two peak-scaled spectra, on the radar spectrum's grid.
    inline TrainingPair build_target(const Spectrum &p_radar, const Spectrum &p_cam)
    {
        const auto same_window = [](const AngleGrid &a, const AngleGrid &b) {
            return a.min_deg() == b.min_deg() && a.max_deg() == b.max_deg();
        };
        if (!same_window(p_radar.phi(), p_cam.phi()) || !same_window(p_radar.theta(), p_cam.theta()))
            throw DomainError("build_target: radar and camera spectra cover different angle windows");

        const PixelGrid radar = scale_to_peak(p_radar.grid());
        const PixelGrid cam =
            scale_to_peak(resample_bilinear(p_cam.grid(), p_radar.grid().rows(), p_radar.grid().cols()));
        std::vector<double> product(radar.size());
        for (std::size_t i = 0; i < product.size(); ++i)
            product[i] = std::max(0.0, radar.values()[i] * cam.values()[i]);

        return TrainingPair{
            Spectrum(radar, p_radar.m_segments(), p_radar.phi(), p_radar.theta()),
            Spectrum(PixelGrid(radar.rows(), radar.cols(), std::move(product)), p_radar.m_segments(),
                     p_radar.phi(), p_radar.theta())};
    }

    // Three 3x3 same-padded convolutions, widths 1 -> 8 -> 8 -> 1, ReLU between layers and softplus
    // at the output. All parameters live in one flat vector, layer by layer, weights then bias.
    class EnhancerModel
    {
    public:
        static constexpr std::array<std::size_t, 4> widths = {1, 8, 8, 1};
        static constexpr std::size_t kernel = 3;
        static constexpr std::size_t layer_count = widths.size() - 1;
        static constexpr std::size_t min_side = 8;

        // Uniform init in [-s, s] with s = sqrt(1 / fan_in); the output bias starts at zero.
        // With zero_final_layer the last layer's weights are zero too, so the output is softplus(0).
        static EnhancerModel create(std::uint64_t seed, bool zero_final_layer = false)
        {
            EnhancerModel m;
            m.seed_ = seed;
            m.params_.assign(parameter_count(), 0.0);
            Rng rng(seed);
            for (std::size_t l = 0; l < layer_count; ++l)
            {
                const double fan_in = static_cast<double>(widths[l] * kernel * kernel);
                const double s = std::sqrt(1.0 / fan_in);
                const bool last = l + 1 == layer_count;
                for (std::size_t i = 0; i < weight_count(l); ++i)
                    m.params_[weight_offset(l) + i] = (last && zero_final_layer) ? 0.0 : rng.uniform(-s, s);
                for (std::size_t i = 0; i < widths[l + 1]; ++i)
                    m.params_[bias_offset(l) + i] = last ? 0.0 : rng.uniform(-s, s);
            }
            return m;
        }

        static constexpr std::size_t weight_count(std::size_t l)
        {
            return widths[l + 1] * widths[l] * kernel * kernel;
        }

        static constexpr std::size_t weight_offset(std::size_t l)
        {
            std::size_t off = 0;
            for (std::size_t i = 0; i < l; ++i)
                off += weight_count(i) + widths[i + 1];
            return off;
        }

        static constexpr std::size_t bias_offset(std::size_t l) { return weight_offset(l) + weight_count(l); }

        static constexpr std::size_t parameter_count() { return weight_offset(layer_count); }

        std::uint64_t seed() const noexcept { return seed_; }
        const std::vector<double> &parameters() const noexcept { return params_; }
        std::vector<double> &parameters() noexcept { return params_; }

        std::vector<NamedTensor> named_tensors() const
        {
            std::vector<NamedTensor> out;
            for (std::size_t l = 0; l < layer_count; ++l)
            {
                const std::string prefix = "conv" + std::to_string(l + 1);
                const auto w0 = params_.begin() + static_cast<std::ptrdiff_t>(weight_offset(l));
                const auto b0 = params_.begin() + static_cast<std::ptrdiff_t>(bias_offset(l));
                out.push_back({prefix + ".weight",
                               {widths[l + 1], widths[l], kernel, kernel},
                               std::vector<double>(w0, w0 + static_cast<std::ptrdiff_t>(weight_count(l)))});
                out.push_back({prefix + ".bias",
                               {widths[l + 1]},
                               std::vector<double>(b0, b0 + static_cast<std::ptrdiff_t>(widths[l + 1]))});
            }
            return out;
        }

        static EnhancerModel from_named_tensors(const std::vector<NamedTensor> &tensors, std::uint64_t seed = 0)
        {
            EnhancerModel m;
            m.seed_ = seed;
            m.params_.assign(parameter_count(), 0.0);
            const auto expected = create(0).named_tensors();
            if (tensors.size() != expected.size())
                throw DomainError("model: expected " + std::to_string(expected.size()) + " tensors, got " +
                                  std::to_string(tensors.size()));
            std::size_t off = 0;
            for (std::size_t i = 0; i < expected.size(); ++i)
            {
                if (tensors[i].name != expected[i].name || tensors[i].shape != expected[i].shape ||
                    tensors[i].values.size() != expected[i].values.size())
                    throw DomainError("model: tensor '" + tensors[i].name + "' does not match '" +
                                      expected[i].name + "'");
                std::copy(tensors[i].values.begin(), tensors[i].values.end(),
                          m.params_.begin() + static_cast<std::ptrdiff_t>(off));
                off += tensors[i].values.size();
            }
            return m;
        }

    private:
        EnhancerModel() = default;

        std::uint64_t seed_ = 0;
        std::vector<double> params_;
    };

    namespace detail
    {
        inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

        inline double sigmoid(double z)
        {
            if (z >= 0.0)
                return 1.0 / (1.0 + std::exp(-z));
            const double e = std::exp(z);
            return e / (1.0 + e);
        }

        // Channel-major feature maps, each rows x cols.
        struct Features
        {
            std::size_t channels = 0, rows = 0, cols = 0;
            std::vector<double> data;

            Features(std::size_t ch, std::size_t r, std::size_t c) : channels(ch), rows(r), cols(c), data(ch * r * c, 0.0) {}
            double *plane(std::size_t ch) { return data.data() + ch * rows * cols; }
            const double *plane(std::size_t ch) const { return data.data() + ch * rows * cols; }
        };

        // Visits every (kernel tap, output pixel range) pair of a zero-padded 3x3 convolution.
        // fn(dr, dc, r, c_begin, c_end) where the input pixel for output (r, c) is (r + dr - 1, c + dc - 1).
        template <typename Fn>
        void for_each_tap(std::size_t rows, std::size_t cols, Fn &&fn)
        {
            for (std::size_t dr = 0; dr < 3; ++dr)
            {
                const std::size_t r_begin = dr == 0 ? 1 : 0;
                const std::size_t r_end = dr == 2 ? rows - 1 : rows;
                for (std::size_t dc = 0; dc < 3; ++dc)
                {
                    const std::size_t c_begin = dc == 0 ? 1 : 0;
                    const std::size_t c_end = dc == 2 ? cols - 1 : cols;
                    for (std::size_t r = r_begin; r < r_end; ++r)
                        fn(dr, dc, r, c_begin, c_end);
                }
            }
        }

        inline Features conv_forward(const Features &in, const double *w, const double *b, std::size_t out_ch)
        {
            Features out(out_ch, in.rows, in.cols);
            const std::size_t cols = in.cols;
            for (std::size_t o = 0; o < out_ch; ++o)
            {
                double *dst = out.plane(o);
                std::fill(dst, dst + in.rows * cols, b[o]);
                for (std::size_t i = 0; i < in.channels; ++i)
                {
                    const double *src = in.plane(i);
                    const double *wk = w + (o * in.channels + i) * 9;
                    for_each_tap(in.rows, cols, [&](std::size_t dr, std::size_t dc, std::size_t r, std::size_t c0,
                                                    std::size_t c1) {
                        const double wv = wk[dr * 3 + dc];
                        double *d = dst + r * cols;
                        const double *s = src + (r + dr - 1) * cols;
                        for (std::size_t c = c0; c < c1; ++c)
                            d[c] += wv * s[c + dc - 1];
                    });
                }
            }
            return out;
        }

        // Accumulates weight/bias gradients and returns the gradient w.r.t. the layer input.
        inline Features conv_backward(const Features &in, const Features &grad_out, const double *w, double *grad_w,
                                      double *grad_b, bool need_input_grad)
        {
            Features grad_in(need_input_grad ? in.channels : 0, in.rows, in.cols);
            const std::size_t cols = in.cols;
            for (std::size_t o = 0; o < grad_out.channels; ++o)
            {
                const double *g = grad_out.plane(o);
                double bsum = 0.0;
                for (std::size_t p = 0; p < in.rows * cols; ++p)
                    bsum += g[p];
                grad_b[o] += bsum;
                for (std::size_t i = 0; i < in.channels; ++i)
                {
                    const double *src = in.plane(i);
                    const double *wk = w + (o * in.channels + i) * 9;
                    double *gwk = grad_w + (o * in.channels + i) * 9;
                    double *gi = need_input_grad ? grad_in.plane(i) : nullptr;
                    std::array<double, 9> acc{};
                    for_each_tap(in.rows, cols, [&](std::size_t dr, std::size_t dc, std::size_t r, std::size_t c0,
                                                    std::size_t c1) {
                        const std::size_t tap = dr * 3 + dc;
                        const double *gr = g + r * cols;
                        const double *s = src + (r + dr - 1) * cols;
                        double sum = 0.0;
                        for (std::size_t c = c0; c < c1; ++c)
                            sum += gr[c] * s[c + dc - 1];
                        acc[tap] += sum;
                        if (gi)
                        {
                            const double wv = wk[tap];
                            double *d = gi + (r + dr - 1) * cols;
                            for (std::size_t c = c0; c < c1; ++c)
                                d[c + dc - 1] += wv * gr[c];
                        }
                    });
                    for (std::size_t t = 0; t < 9; ++t)
                        gwk[t] += acc[t];
                }
            }
            return grad_in;
        }

        struct ForwardTrace
        {
            std::vector<Features> inputs;  // input to each layer (post-activation of previous)
            std::vector<Features> preacts; // pre-activation of each layer
            std::vector<double> output;
        };

        inline ForwardTrace run_forward(const EnhancerModel &model, const PixelGrid &x)
        {
            using M = EnhancerModel;
            if (x.rows() < M::min_side || x.cols() < M::min_side)
                throw DomainError("enhancer: input must be at least 8x8");
            ForwardTrace t;
            Features act(1, x.rows(), x.cols());
            std::copy(x.values().begin(), x.values().end(), act.data.begin());
            const double *p = model.parameters().data();
            for (std::size_t l = 0; l < M::layer_count; ++l)
            {
                t.inputs.push_back(act);
                Features z = conv_forward(act, p + M::weight_offset(l), p + M::bias_offset(l), M::widths[l + 1]);
                t.preacts.push_back(z);
                const bool last = l + 1 == M::layer_count;
                for (double &v : z.data)
                    v = last ? softplus(v) : std::max(0.0, v);
                act = std::move(z);
            }
            t.output = std::move(act.data);
            return t;
        }
    }

    inline PixelGrid forward(const EnhancerModel &model, const PixelGrid &input)
    {
        auto t = detail::run_forward(model, input);
        return PixelGrid(input.rows(), input.cols(), std::move(t.output));
    }

    inline Spectrum forward(const EnhancerModel &model, const Spectrum &input)
    {
        return Spectrum(forward(model, input.grid()), input.m_segments(), input.phi(), input.theta());
    }

    // Mean squared error of one pair, accumulating d(loss)/d(params) * weight into `grad` when non-null.
    inline double pair_loss(const EnhancerModel &model, const TrainingPair &pair, std::vector<double> *grad,
                            double weight = 1.0)
    {
        using M = EnhancerModel;
        const PixelGrid &x = pair.input.grid();
        const PixelGrid &y = pair.target.grid();
        if (!x.same_shape(y))
            throw DomainError("training pair: input and target shapes differ");
        auto t = detail::run_forward(model, x);
        const double n = static_cast<double>(x.size());
        double loss = 0.0;
        for (std::size_t i = 0; i < t.output.size(); ++i)
        {
            const double d = t.output[i] - y.values()[i];
            loss += d * d;
        }
        loss /= n;
        if (!grad)
            return loss;

        const double *p = model.parameters().data();
        double *g = grad->data();
        detail::Features delta(1, x.rows(), x.cols());
        for (std::size_t i = 0; i < t.output.size(); ++i)
            delta.data[i] = weight * 2.0 * (t.output[i] - y.values()[i]) / n *
                            detail::sigmoid(t.preacts.back().data[i]);
        for (std::size_t l = M::layer_count; l-- > 0;)
        {
            detail::Features grad_in = detail::conv_backward(t.inputs[l], delta, p + M::weight_offset(l),
                                                             g + M::weight_offset(l), g + M::bias_offset(l), l > 0);
            if (l == 0)
                break;
            const auto &z = t.preacts[l - 1].data;
            for (std::size_t i = 0; i < grad_in.data.size(); ++i)
                if (z[i] <= 0.0)
                    grad_in.data[i] = 0.0;
            delta = std::move(grad_in);
        }
        return loss;
    }

    // Mean of per-pair losses and its gradient.
    inline double dataset_loss(const EnhancerModel &model, const std::vector<TrainingPair> &data,
                               std::vector<double> *grad)
    {
        if (data.empty())
            throw DomainError("training: empty dataset");
        if (grad)
            grad->assign(EnhancerModel::parameter_count(), 0.0);
        const double w = 1.0 / static_cast<double>(data.size());
        double loss = 0.0;
        for (const auto &pair : data)
            loss += w * pair_loss(model, pair, grad, w);
        return loss;
    }

    struct TrainResult
    {
        EnhancerModel model;
        std::vector<double> losses; // loss before the update of each epoch
    };

    // Full-batch gradient descent with a fixed step size.
    inline TrainResult train(EnhancerModel model, const std::vector<TrainingPair> &data, std::size_t epochs, double lr)
    {
        if (data.empty())
            throw DomainError("train: empty dataset");
        if (!(lr > 0.0) || !std::isfinite(lr))
            throw DomainError("train: learning rate must be positive");
        std::vector<double> losses;
        losses.reserve(epochs);
        std::vector<double> grad;
        for (std::size_t e = 0; e < epochs; ++e)
        {
            const double loss = dataset_loss(model, data, &grad);
            if (!std::isfinite(loss))
                throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(e));
            losses.push_back(loss);
            auto &params = model.parameters();
            for (std::size_t i = 0; i < params.size(); ++i)
                params[i] -= lr * grad[i];
        }
        return TrainResult{std::move(model), std::move(losses)};
    }

    struct GradientCheckResult
    {
        double max_rel_error = 0.0;
        std::vector<std::size_t> indices;
        std::vector<double> analytic;
        std::vector<double> numeric;
        std::size_t kinks_skipped = 0;
    };

    // Relative error floor: gradients smaller than this are compared in absolute terms.
    inline constexpr double gradient_check_floor = 1e-8;

    namespace detail
    {
        // Loss at `up` minus loss at `down`, summed as a difference of squares per pixel so two large
        // totals are never cancelled against each other.
        inline double trace_loss_difference(const ForwardTrace &up, const ForwardTrace &down, const PixelGrid &target)
        {
            double diff = 0.0;
            for (std::size_t i = 0; i < up.output.size(); ++i)
            {
                const double y = target.values()[i];
                diff += (up.output[i] - down.output[i]) * ((up.output[i] - y) + (down.output[i] - y));
            }
            return diff / static_cast<double>(target.size());
        }

        // True when some ReLU input changes side of zero between the two traces.
        inline bool crosses_kink(const ForwardTrace &a, const ForwardTrace &b)
        {
            for (std::size_t l = 0; l + 1 < a.preacts.size(); ++l)
                for (std::size_t i = 0; i < a.preacts[l].data.size(); ++i)
                    if ((a.preacts[l].data[i] > 0.0) != (b.preacts[l].data[i] > 0.0))
                        return true;
            return false;
        }
    }

    // Central-difference check of the analytic L2-loss gradient on `samples` distinct parameters drawn
    // by a generator seeded from the model seed. A parameter whose +/- epsilon stencil moves any ReLU
    // input across zero is not differentiable there at that scale; it is skipped and another is drawn.
    inline GradientCheckResult gradient_check(const EnhancerModel &model, const TrainingPair &pair, double epsilon,
                                              std::size_t samples = 64)
    {
        if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
            throw DomainError("gradient_check: epsilon must lie in [1e-7, 1e-3]");
        std::vector<double> grad(EnhancerModel::parameter_count(), 0.0);
        pair_loss(model, pair, &grad);

        const std::size_t total = EnhancerModel::parameter_count();
        std::vector<std::size_t> order(total);
        for (std::size_t i = 0; i < total; ++i)
            order[i] = i;
        Rng rng(model.seed() ^ 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = 0; i + 1 < total; ++i)
            std::swap(order[i], order[i + rng.index(total - i)]);

        GradientCheckResult res;
        EnhancerModel probe = model;
        const PixelGrid &x = pair.input.grid();
        const PixelGrid &y = pair.target.grid();
        for (std::size_t idx : order)
        {
            if (res.indices.size() >= samples)
                break;
            const double orig = probe.parameters()[idx];
            probe.parameters()[idx] = orig + epsilon;
            const auto up = detail::run_forward(probe, x);
            probe.parameters()[idx] = orig - epsilon;
            const auto down = detail::run_forward(probe, x);
            probe.parameters()[idx] = orig;
            if (detail::crosses_kink(up, down))
            {
                ++res.kinks_skipped;
                continue;
            }
            const double numeric = detail::trace_loss_difference(up, down, y) / (2.0 * epsilon);
            const double analytic = grad[idx];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), gradient_check_floor});
            res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic - numeric) / denom);
            res.indices.push_back(idx);
            res.analytic.push_back(analytic);
            res.numeric.push_back(numeric);
        }
        return res;
    }
}
