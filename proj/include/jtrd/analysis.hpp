#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "jtrd/channel.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/detectors.hpp"
#include "jtrd/linalg.hpp"

namespace jtrd {

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
inline double q_function(double x) {
    if (!std::isfinite(x)) throw NonFinite("q_function: argument not finite");
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

namespace detail {

inline ComplexMatrix projector_complement(const ComplexMatrix& x,
                                          bool& pseudo_solved) {
    // I - X (X^H X)^{-1} X^H, least-squares fallback for rank deficiency.
    const ComplexMatrix gram = x.adjoint() * x;
    ComplexMatrix inv_apply;
    try {
        inv_apply = solve_hermitian_psd(gram, ComplexMatrix(x.adjoint()));
    } catch (const Singular&) {
        inv_apply = pseudo_solve_hermitian_psd(gram, ComplexMatrix(x.adjoint()));
        pseudo_solved = true;
    }
    return ComplexMatrix::Identity(x.rows(), x.rows()) - x * inv_apply;
}

}  // namespace detail

/**
 * Gram-residual matrix of an ordered codeword pair: the energy of codeword
 * i's whitened columns left unexplained by codeword j's column space. With
 * white noise the N-antenna structure factors out as I_N (x) S / sigma^2
 * where S is the per-block T-domain residual Gram matrix.
 */
inline ComplexMatrix compute_L(const ComplexMatrix& xi, const ComplexMatrix& xj,
                               int n_antennas, const NoiseSpec& noise,
                               bool* pseudo_solved = nullptr) {
    if (xi.rows() != xj.rows() || xi.cols() != xj.cols())
        throw DimensionMismatch("compute_L: codeword shape mismatch");
    bool pseudo = false;
    ComplexMatrix l;
    if (noise.is_white()) {
        const ComplexMatrix pc = detail::projector_complement(xj, pseudo);
        const ComplexMatrix s = (xi.adjoint() * pc * xi) / noise.sigma2;
        const Eigen::Index m = s.rows();
        l = ComplexMatrix::Zero(n_antennas * m, n_antennas * m);
        for (int b = 0; b < n_antennas; ++b)
            l.block(b * m, b * m, m, m) = s;
    } else {
        const int t_len = static_cast<int>(xi.rows());
        if (noise.phi.rows() != static_cast<Eigen::Index>(n_antennas) * t_len)
            throw DimensionMismatch("compute_L: Phi must be NT x NT");
        const ComplexMatrix w = inverse_sqrt_psd(noise.phi);
        auto lift = [&](const ComplexMatrix& x) {
            ComplexMatrix s = ComplexMatrix::Zero(n_antennas * t_len,
                                                  n_antennas * x.cols());
            for (int b = 0; b < n_antennas; ++b)
                s.block(b * t_len, b * x.cols(), t_len, x.cols()) = x;
            return ComplexMatrix(w * s);
        };
        const ComplexMatrix xci = lift(xi);
        const ComplexMatrix xcj = lift(xj);
        const ComplexMatrix pc = detail::projector_complement(xcj, pseudo);
        l = xci.adjoint() * pc * xci;
    }
    if (pseudo_solved) *pseudo_solved = pseudo;
    return l;
}

/**
 * Pairwise-error geometry of one ordered codeword pair: the residual Gram
 * matrix, its minimum eigenvalue (clamped at zero when floating-point noise
 * drives it slightly negative) and the resulting error-probability bounds.
 */
struct PepReport {
    long i = 0;
    long j = 0;
    ComplexMatrix L;
    double lambda_min = 0.0;
    bool clamped = false;        // lambda_min was in [-1e-9, 0) before clamping
    bool pseudo_solved = false;  // rank-deficient hypothesis, pseudo-solve used

    /// High-SNR upper bound as a function of the channel norm.
    double bound_at(double h_norm) const {
        return q_function(h_norm * std::sqrt(lambda_min) / std::sqrt(2.0));
    }
};

inline PepReport make_pep_report(long i, long j, const ComplexMatrix& xi,
                                 const ComplexMatrix& xj, int n_antennas,
                                 const NoiseSpec& noise) {
    PepReport rep;
    rep.i = i;
    rep.j = j;
    rep.L = compute_L(xi, xj, n_antennas, noise, &rep.pseudo_solved);
    double lam = hermitian_min_eigenvalue(rep.L);
    if (lam < 0.0) {
        if (lam < -1e-9 * std::max(1.0, rep.L.norm()))
            throw NotPsd("make_pep_report: residual Gram matrix not PSD");
        rep.clamped = true;
        lam = 0.0;
    }
    rep.lambda_min = lam;
    return rep;
}

struct PepBounds {
    double approx = 0.5;  // Q(sqrt(h^H L h)/sqrt(2))
    double upper = 0.5;   // Q(||h|| sqrt(lambda_min)/sqrt(2))
};

/// Misclassification probability for one channel draw: the high-SNR
/// approximation and its channel-norm upper bound.
inline PepBounds pep_bound(const PepReport& report, const ComplexVector& h) {
    if (h.size() != report.L.rows())
        throw DimensionMismatch("pep_bound: channel vector length");
    const double quad = std::max(0.0, (h.adjoint() * report.L * h)(0, 0).real());
    PepBounds out;
    out.approx = q_function(std::sqrt(quad) / std::sqrt(2.0));
    out.upper = report.bound_at(h.norm());
    return out;
}

// ---------------------------------------------------------------------------
// Codebook-quality summary
// ---------------------------------------------------------------------------

inline constexpr long kQualityMaxAlphabet = 1L << 12;

struct CodebookQuality {
    double min_lambda = 0.0;
    long worst_i = 0;
    long worst_j = 0;
    long pairs = 0;
    std::vector<double> lambda_values;     // one per ordered pair
    std::vector<long> histogram;           // counts over uniform bins
    double histogram_lo = 0.0;
    double histogram_hi = 0.0;
};

/**
 * Minimum eigenvalue of the residual Gram matrix over all ordered codeword
 * pairs: the worst pair dominates the high-SNR pairwise error probability,
 * so bigger minima indicate better-separated codebooks.
 */
inline CodebookQuality codebook_quality(const JointAlphabet& alphabet,
                                        const NoiseSpec& noise, int n_antennas,
                                        int histogram_bins = 24) {
    const long k_total = alphabet.size();
    if (k_total > kQualityMaxAlphabet)
        throw AlphabetTooLarge("codebook_quality: alphabet exceeds pairwise guard");
    CodebookQuality q;
    q.min_lambda = std::numeric_limits<double>::infinity();
    for (long i = 0; i < k_total; ++i) {
        const ComplexMatrix xi = alphabet.codeword(i);
        for (long j = 0; j < k_total; ++j) {
            if (i == j) continue;
            const PepReport rep =
                make_pep_report(i, j, xi, alphabet.codeword(j), n_antennas, noise);
            q.lambda_values.push_back(rep.lambda_min);
            if (rep.lambda_min < q.min_lambda) {
                q.min_lambda = rep.lambda_min;
                q.worst_i = i;
                q.worst_j = j;
            }
            ++q.pairs;
        }
    }
    q.histogram_lo = 0.0;
    q.histogram_hi = *std::max_element(q.lambda_values.begin(), q.lambda_values.end());
    q.histogram.assign(static_cast<size_t>(histogram_bins), 0);
    const double width = (q.histogram_hi - q.histogram_lo) /
                         static_cast<double>(histogram_bins);
    for (double v : q.lambda_values) {
        long bin = width > 0.0 ? static_cast<long>((v - q.histogram_lo) / width)
                               : 0;
        bin = std::min<long>(bin, histogram_bins - 1);
        ++q.histogram[static_cast<size_t>(bin)];
    }
    return q;
}

// ---------------------------------------------------------------------------
// Monte-Carlo validation of the PEP approximation
// ---------------------------------------------------------------------------

struct PepMonteCarlo {
    double empirical = 0.0;    // observed misclassification frequency
    double approx_mean = 0.0;  // mean of the high-SNR approximation
    double approx_se = 0.0;
    double upper_mean = 0.0;   // mean of the channel-norm upper bound
    double upper_se = 0.0;
    long trials = 0;
};

/**
 * Paired Monte-Carlo estimate: for each channel draw, run the two-hypothesis
 * detector on a noisy block transmitted as codeword i, and accumulate the
 * analytic approximation and upper bound on the same draw.
 */
inline PepMonteCarlo pep_monte_carlo(const ComplexMatrix& xi,
                                     const ComplexMatrix& xj,
                                     const SystemConfig& cfg,
                                     const ChannelModel& model,
                                     const NoiseSpec& noise, long trials,
                                     Rng& rng) {
    const PepReport rep = make_pep_report(0, 1, xi, xj, cfg.N, noise);
    const JointAlphabet pair_alphabet = JointAlphabet::from_list({xi, xj});
    PepMonteCarlo mc;
    mc.trials = trials;
    double acc_a = 0.0, acc_a2 = 0.0, acc_u = 0.0, acc_u2 = 0.0;
    long errors = 0;
    for (long t = 0; t < trials; ++t) {
        const ChannelRealization ch = sample_channel(model, cfg, rng);
        // vec(H) stacks antenna columns, matching L's I_N block structure.
        const ComplexVector h = vec_columns(ch.H);
        const PepBounds b = pep_bound(rep, h);
        acc_a += b.approx;
        acc_a2 += b.approx * b.approx;
        acc_u += b.upper;
        acc_u2 += b.upper * b.upper;
        ComplexMatrix v = sample_standard_complex_gaussian(rng, cfg.T, cfg.N) *
                          std::sqrt(noise.sigma2);
        const ComplexMatrix y_block = xi * ch.H + v;
        if (glrt_detect(y_block, pair_alphabet, noise).decided_index == 1)
            ++errors;
    }
    const double n = static_cast<double>(trials);
    mc.empirical = static_cast<double>(errors) / n;
    mc.approx_mean = acc_a / n;
    mc.approx_se = std::sqrt(std::max(0.0, acc_a2 / n - mc.approx_mean * mc.approx_mean) / n);
    mc.upper_mean = acc_u / n;
    mc.upper_se = std::sqrt(std::max(0.0, acc_u2 / n - mc.upper_mean * mc.upper_mean) / n);
    return mc;
}

/// Monte-Carlo frequency of the detector picking j when i was sent.
inline double empirical_pairwise_error(const JointAlphabet& alphabet, long i,
                                       long j, const NoiseSpec& noise,
                                       const ChannelModel& model,
                                       const SystemConfig& cfg, long trials,
                                       Rng& rng) {
    const JointAlphabet pair_alphabet =
        JointAlphabet::from_list({alphabet.codeword(i), alphabet.codeword(j)});
    long errors = 0;
    for (long t = 0; t < trials; ++t) {
        const ChannelRealization ch = sample_channel(model, cfg, rng);
        ComplexMatrix v = sample_standard_complex_gaussian(rng, cfg.T, cfg.N) *
                          std::sqrt(noise.sigma2);
        const ComplexMatrix y_block = alphabet.codeword(i) * ch.H + v;
        if (glrt_detect(y_block, pair_alphabet, noise).decided_index == 1)
            ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(trials);
}

}  // namespace jtrd
