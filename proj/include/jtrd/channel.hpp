#pragma once

#include <cmath>

#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/linalg.hpp"
#include "jtrd/rng.hpp"
#include "jtrd/transmitter.hpp"

namespace jtrd {

/// [Re(a); Im(a)] stacking of a complex column vector.
inline RealVector complex_to_real_vec(const ComplexVector& a) {
    RealVector out(2 * a.size());
    out.head(a.size()) = a.real();
    out.tail(a.size()) = a.imag();
    return out;
}

inline ComplexVector real_to_complex_vec(const RealVector& a) {
    if (a.size() % 2 != 0)
        throw DimensionMismatch("real_to_complex_vec: odd length");
    const Eigen::Index n = a.size() / 2;
    ComplexVector out(n);
    out.real() = a.head(n);
    out.imag() = a.tail(n);
    return out;
}

/// Real-valued equivalent block form [[Re, -Im], [Im, Re]].
inline RealMatrix real_block_form(const ComplexMatrix& a) {
    RealMatrix out(2 * a.rows(), 2 * a.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a.real();
    out.topRightCorner(a.rows(), a.cols()) = -a.imag();
    out.bottomLeftCorner(a.rows(), a.cols()) = a.imag();
    out.bottomRightCorner(a.rows(), a.cols()) = a.real();
    return out;
}

/// Complex T x M block from the stacked real 2T x M transmit block.
inline ComplexMatrix complex_block_from_real(const RealMatrix& x) {
    if (x.rows() % 2 != 0)
        throw DimensionMismatch("complex_block_from_real: odd row count");
    const Eigen::Index t = x.rows() / 2;
    ComplexMatrix out(t, x.cols());
    out.real() = x.topRows(t);
    out.imag() = x.bottomRows(t);
    return out;
}

/**
 * One block-fading channel draw: the complex M x N matrix H plus its
 * real-valued equivalent block form.
 */
struct ChannelRealization {
    ComplexMatrix H;       // M x N, row m = user m's gains across antennas
    RealMatrix H_real;     // 2M x 2N block form of H

    static ChannelRealization from_matrix(ComplexMatrix h) {
        ChannelRealization ch;
        ch.H_real = real_block_form(h);
        ch.H = std::move(h);
        return ch;
    }

    int users() const { return static_cast<int>(H.rows()); }
    int antennas() const { return static_cast<int>(H.cols()); }

    /**
     * The per-slot real channel operator: maps the stacked per-slot transmit
     * vector [Re(s); Im(s)] (2M) to the stacked per-slot receive vector
     * [Re(r); Im(r)] (2N), r = H^T s. Built from the block form alone so the
     * training pipeline runs entirely in real arithmetic.
     */
    RealMatrix real_slot_operator() const {
        const Eigen::Index m = H.rows(), n = H.cols();
        RealMatrix g(2 * n, 2 * m);
        const auto re = H_real.topLeftCorner(m, n);        // Re(H)
        const auto im = H_real.bottomLeftCorner(m, n);     // Im(H)
        g.topLeftCorner(n, m) = re.transpose();
        g.topRightCorner(n, m) = -im.transpose();
        g.bottomLeftCorner(n, m) = im.transpose();
        g.bottomRightCorner(n, m) = re.transpose();
        return g;
    }
};

/// Hermitian Toeplitz correlation matrix with entries rho^|i-j|.
inline ComplexMatrix exponential_correlation(int n, double rho) {
    ComplexMatrix r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            r(i, j) = std::pow(rho, std::abs(i - j));
    return r;
}

/**
 * Draw one channel realization. Entries are normalized so E|h|^2 = 1/M for
 * both models, keeping SNR calibration comparable across them.
 */
inline ChannelRealization sample_channel(const ChannelModel& model,
                                         const SystemConfig& cfg, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.M));
    if (model.kind == ChannelKind::IidGaussian || model.rho == 0.0) {
        ComplexMatrix h = sample_standard_complex_gaussian(rng, cfg.M, cfg.N);
        return ChannelRealization::from_matrix(scale * h);
    }
    const ComplexMatrix lt = cholesky_psd(exponential_correlation(cfg.M, model.rho));
    const ComplexMatrix lr = cholesky_psd(exponential_correlation(cfg.N, model.rho));
    ComplexMatrix hw = sample_standard_complex_gaussian(rng, cfg.M, cfg.N);
    return ChannelRealization::from_matrix(scale * (lt * hw * lr.adjoint()));
}

// Slot-major stacking of the received block: slot t occupies
// y[2Nt .. 2N(t+1)) as [Re(row t of Y); Im(row t of Y)].
inline RealVector stack_received(const ComplexMatrix& y_block) {
    const Eigen::Index t_len = y_block.rows(), n = y_block.cols();
    RealVector y(2 * n * t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        y.segment(2 * n * t, n) = y_block.row(t).real().transpose();
        y.segment(2 * n * t + n, n) = y_block.row(t).imag().transpose();
    }
    return y;
}

inline ComplexMatrix unstack_received(const RealVector& y, int n) {
    if (y.size() % (2 * n) != 0)
        throw DimensionMismatch("unstack_received: length not a multiple of 2N");
    const Eigen::Index t_len = y.size() / (2 * n);
    ComplexMatrix out(t_len, n);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        out.row(t).real() = y.segment(2 * n * t, n).transpose();
        out.row(t).imag() = y.segment(2 * n * t + n, n).transpose();
    }
    return out;
}

/// Column-stacked complex vector of a received block (vec of T x N).
inline ComplexVector vec_columns(const ComplexMatrix& a) {
    return ComplexVector(Eigen::Map<const ComplexVector>(a.data(), a.size()));
}

/**
 * Push a stacked real transmit block through the fading channel and add
 * noise: the real-arithmetic image of Y = X H + V under the slot-major
 * stacking convention.
 */
inline RealVector transmit(const RealMatrix& x, const ChannelRealization& ch,
                           const NoiseSpec& noise, Rng& rng) {
    const Eigen::Index m = ch.H.rows(), n = ch.H.cols();
    if (x.cols() != m || x.rows() % 2 != 0)
        throw DimensionMismatch("transmit: X must be 2T x M");
    const Eigen::Index t_len = x.rows() / 2;
    const RealMatrix g = ch.real_slot_operator();
    RealVector y(2 * n * t_len);
    RealVector s(2 * m);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        s.head(m) = x.row(t).transpose();
        s.tail(m) = x.row(t_len + t).transpose();
        y.segment(2 * n * t, 2 * n) = g * s;
    }
    if (noise.sigma2 > 0.0) {
        if (noise.is_white()) {
            const double part_sd = std::sqrt(noise.sigma2 / 2.0);
            for (Eigen::Index i = 0; i < y.size(); ++i)
                y(i) += part_sd * rng.gaussian();
        } else {
            if (noise.phi.rows() != n * t_len)
                throw DimensionMismatch("transmit: Phi must be NT x NT");
            ComplexMatrix l = cholesky_psd(noise.phi);
            ComplexVector w = l * sample_standard_complex_gaussian(rng, n * t_len, 1);
            ComplexMatrix v = Eigen::Map<ComplexMatrix>(w.data(), t_len, n);
            y += stack_received(v);
        }
    }
    return y;
}

/**
 * Calibrate the noise variance for a target SNR: the ratio of per-slot
 * average received signal energy per user (averaged over users) to the
 * per-complex-dimension noise variance. Expectations are estimated by
 * Monte-Carlo over channel and codeword draws.
 */
inline NoiseSpec calibrate_noise(const SystemConfig& cfg, double snr_db,
                                 const CodebookSet& codebooks,
                                 const ChannelModel& model, Rng& rng,
                                 long draws = 100000) {
    double acc = 0.0;
    std::vector<int> indices(static_cast<size_t>(cfg.M));
    for (long d = 0; d < draws; ++d) {
        for (int m = 0; m < cfg.M; ++m)
            indices[static_cast<size_t>(m)] =
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.L())));
        const TxForwardResult fwd = tx_forward(codebooks, indices);
        const ChannelRealization ch = sample_channel(model, cfg, rng);
        for (int m = 0; m < cfg.M; ++m) {
            const double sig = fwd.X.col(m).squaredNorm();
            const double gain = ch.H.row(m).squaredNorm();
            acc += sig * gain;
        }
    }
    const double per_slot_signal =
        acc / (static_cast<double>(draws) * cfg.M * cfg.T);
    const double snr_linear = std::pow(10.0, snr_db / 10.0);
    return NoiseSpec::white(per_slot_signal / snr_linear);
}

}  // namespace jtrd
