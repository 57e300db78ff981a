#pragma once

#include "specenc/core.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace specenc
{
    using cdouble = std::complex<double>;

    // Steering segments for one angle axis. Entry (m, i) of `segments` is exp(-j*pi*m*sin(angle_i)),
    // so the phase step across segments grows with sin() of the angle rather than the angle itself.
    // `covariance` = (1/M) * segments^H * segments; row i is the periodogram of angle i against every
    // other angle on the grid.
    struct BasisSet
    {
        std::size_t m_segments = 0;
        AngleGrid grid;
        Eigen::MatrixXcd segments;   // M x L
        Eigen::MatrixXcd covariance; // L x L, Hermitian
    };

    inline BasisSet build_basis(std::size_t m_segments, const AngleGrid &grid)
    {
        if (m_segments == 0)
            throw DomainError("build_basis: m_segments must be at least 1");

        const auto M = static_cast<Eigen::Index>(m_segments);
        const auto L = static_cast<Eigen::Index>(grid.count());
        Eigen::MatrixXcd segments(M, L);
        for (Eigen::Index i = 0; i < L; ++i)
        {
            const double phase_step = std::numbers::pi * std::sin(grid[static_cast<std::size_t>(i)]);
            segments(0, i) = cdouble(1.0, 0.0);
            for (Eigen::Index m = 1; m < M; ++m)
                segments(m, i) = std::polar(1.0, -phase_step * static_cast<double>(m));
        }

        Eigen::MatrixXcd covariance = (segments.adjoint() * segments) / static_cast<double>(m_segments);
        // Force exact Hermitian symmetry and real diagonal; the product only gets it to round-off.
        for (Eigen::Index i = 0; i < L; ++i)
        {
            covariance(i, i) = cdouble(covariance(i, i).real(), 0.0);
            for (Eigen::Index l = i + 1; l < L; ++l)
                covariance(l, i) = std::conj(covariance(i, l));
        }

        return BasisSet{m_segments, grid, std::move(segments), std::move(covariance)};
    }

    // y(angle_i): row i of the covariance.
    inline Eigen::VectorXcd periodogram_row(const BasisSet &b, std::size_t i)
    {
        if (i >= b.grid.count())
            throw IndexError("periodogram_row: index " + std::to_string(i) + " out of range");
        return b.covariance.row(static_cast<Eigen::Index>(i)).transpose();
    }

    struct JointPeriodogram
    {
        std::size_t n_index = 0;
        std::size_t k_index = 0;
        Eigen::MatrixXcd matrix; // K_len x N_len
    };

    // Y(phi_n, theta_k) = outer(y_theta(k), y_phi(n)). Rank one by construction.
    inline JointPeriodogram joint_periodogram(const BasisSet &b_phi, const BasisSet &b_theta, std::size_t n,
                                              std::size_t k)
    {
        const Eigen::VectorXcd y_phi = periodogram_row(b_phi, n);
        const Eigen::VectorXcd y_theta = periodogram_row(b_theta, k);
        return JointPeriodogram{n, k, y_theta * y_phi.transpose()};
    }

    // Classic Bartlett power spectrum over the segment axis.
    //
    // `signal_segments` is M x N_samples: row m holds the samples seen by segment (receptor) m.
    // The segment covariance is C(m, m') = (1/N) * sum_n s_m(n) * conj(s_m'(n)) and the power at each
    // scan angle is a^H C a with a(m) = exp(-j*m*pi*sin(angle)), the same phase map the 2D encoder uses.
    // Values are clamped at zero to absorb round-off.
    inline std::vector<double> classic_bartlett_1d(const Eigen::MatrixXcd &signal_segments, const AngleGrid &scan)
    {
        if (signal_segments.rows() < 1 || signal_segments.cols() < 1)
            throw DomainError("classic_bartlett_1d: empty signal");

        const Eigen::Index M = signal_segments.rows();
        const double n_samples = static_cast<double>(signal_segments.cols());
        const Eigen::MatrixXcd C = (signal_segments * signal_segments.adjoint()) / n_samples;

        std::vector<double> power(scan.count());
        Eigen::VectorXcd a(M);
        for (std::size_t s = 0; s < scan.count(); ++s)
        {
            const double phase_step = std::numbers::pi * std::sin(scan[s]);
            for (Eigen::Index m = 0; m < M; ++m)
                a(m) = std::polar(1.0, -phase_step * static_cast<double>(m));
            const double p = (a.adjoint() * C * a)(0, 0).real();
            power[s] = p < 0.0 ? 0.0 : p;
        }
        return power;
    }

    // Segment-by-sample matrix of plane waves: s_m(n) = sum_src exp(-j*(omega*n + m*pi*sin(angle_src))).
    inline Eigen::MatrixXcd synthesize_sources(std::size_t m_segments, std::size_t n_samples,
                                               std::span<const double> source_angles_rad,
                                               std::span<const double> omegas)
    {
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m_segments),
                                                    static_cast<Eigen::Index>(n_samples));
        for (std::size_t src = 0; src < source_angles_rad.size(); ++src)
        {
            const double phase_step = std::numbers::pi * std::sin(source_angles_rad[src]);
            const double omega = omegas.empty() ? 0.0 : omegas[src % omegas.size()];
            for (std::size_t m = 0; m < m_segments; ++m)
                for (std::size_t n = 0; n < n_samples; ++n)
                    s(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) +=
                        std::polar(1.0, -(omega * static_cast<double>(n) + phase_step * static_cast<double>(m)));
        }
        return s;
    }
}
