#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "jtrd/channel.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/linalg.hpp"
#include "jtrd/transmitter.hpp"

namespace jtrd {

// ---------------------------------------------------------------------------
// Joint transmit alphabet
// ---------------------------------------------------------------------------

/**
 * The joint alphabet of transmit blocks. Either the cross product of the
 * per-user codebooks (K = L^M members indexed by base-L digits, user 0 most
 * significant) or an explicit list of T x M blocks.
 */
class JointAlphabet {
   public:
    static JointAlphabet from_codebooks(const CodebookSet& cb) {
        JointAlphabet a;
        const int t_len = cb.block_len();
        const int l = cb.codebook_size();
        for (int m = 0; m < cb.users(); ++m) {
            const RealMatrix& w = cb.W[static_cast<size_t>(m)];
            ComplexMatrix user(t_len, l);
            for (int c = 0; c < l; ++c) {
                const double norm = w.col(c).norm();
                if (norm < 1e-12)
                    throw DegenerateCodeword("JointAlphabet: degenerate column");
                const double amp = std::sqrt(cb.alphaP[static_cast<size_t>(m)]) / norm;
                user.col(c).real() = amp * w.col(c).head(t_len);
                user.col(c).imag() = amp * w.col(c).tail(t_len);
            }
            a.user_codebooks_.push_back(std::move(user));
        }
        return a;
    }

    static JointAlphabet from_list(std::vector<ComplexMatrix> blocks) {
        JointAlphabet a;
        a.explicit_ = std::move(blocks);
        return a;
    }

    bool is_product() const { return !user_codebooks_.empty(); }
    int users() const {
        return is_product() ? static_cast<int>(user_codebooks_.size())
                            : static_cast<int>(explicit_.front().cols());
    }
    int block_len() const {
        return is_product() ? static_cast<int>(user_codebooks_.front().rows())
                            : static_cast<int>(explicit_.front().rows());
    }
    int per_user_size() const {
        return is_product() ? static_cast<int>(user_codebooks_.front().cols()) : 0;
    }

    long size() const {
        if (!is_product()) return static_cast<long>(explicit_.size());
        long k = 1;
        for (size_t m = 0; m < user_codebooks_.size(); ++m)
            k *= user_codebooks_[m].cols();
        return k;
    }

    std::vector<int> digits(long k) const {
        const int l = per_user_size();
        std::vector<int> d(static_cast<size_t>(users()));
        for (int m = users() - 1; m >= 0; --m) {
            d[static_cast<size_t>(m)] = static_cast<int>(k % l);
            k /= l;
        }
        return d;
    }

    long index_of(const std::vector<int>& digits_in) const {
        long k = 0;
        for (int d : digits_in) k = k * per_user_size() + d;
        return k;
    }

    ComplexMatrix codeword(long k) const {
        if (!is_product()) return explicit_[static_cast<size_t>(k)];
        const std::vector<int> d = digits(k);
        ComplexMatrix x(block_len(), users());
        for (int m = 0; m < users(); ++m)
            x.col(m) = user_codebooks_[static_cast<size_t>(m)].col(
                d[static_cast<size_t>(m)]);
        return x;
    }

   private:
    std::vector<ComplexMatrix> user_codebooks_;
    std::vector<ComplexMatrix> explicit_;
};

struct DetectionResult {
    std::vector<int> decided_bits;  // J*M bits, empty for explicit alphabets
    long decided_index = 0;
    std::vector<double> residuals;  // per-hypothesis scores
};

inline constexpr long kGlrtMaxAlphabet = 1L << 20;

/**
 * Non-coherent GLRT detection: for every hypothesis, estimate the channel
 * that best explains the received block and pick the hypothesis with the
 * smallest whitened residual. Rank-deficient hypotheses fall back to a
 * least-squares pseudo-solve; ties break to the lowest index.
 */
inline DetectionResult glrt_detect(const ComplexVector& y,
                                   const JointAlphabet& alphabet,
                                   const NoiseSpec& noise) {
    const long k_total = alphabet.size();
    if (k_total > kGlrtMaxAlphabet)
        throw AlphabetTooLarge("glrt_detect: alphabet exceeds exhaustive-search guard");
    const int t_len = alphabet.block_len();
    if (y.size() % t_len != 0)
        throw DimensionMismatch("glrt_detect: received length not N*T");
    const int n = static_cast<int>(y.size()) / t_len;

    DetectionResult result;
    result.residuals.resize(static_cast<size_t>(k_total));
    double best = std::numeric_limits<double>::infinity();
    long best_k = 0;

    if (noise.is_white()) {
        // Whitening by a scalar: work block-wise, one T x T projector per
        // hypothesis shared by all antennas.
        const ComplexMatrix y_block =
            Eigen::Map<const ComplexMatrix>(y.data(), t_len, n);
        for (long k = 0; k < k_total; ++k) {
            const ComplexMatrix x = alphabet.codeword(k);
            const ComplexMatrix gram = x.adjoint() * x;
            const ComplexMatrix rhs = x.adjoint() * y_block;
            ComplexMatrix h_hat;
            try {
                h_hat = solve_hermitian_psd(gram, rhs);
            } catch (const Singular&) {
                h_hat = pseudo_solve_hermitian_psd(gram, rhs);
            }
            const double res =
                (y_block - x * h_hat).squaredNorm() / noise.sigma2;
            result.residuals[static_cast<size_t>(k)] = res;
            if (res < best) {
                best = res;
                best_k = k;
            }
        }
    } else {
        if (noise.phi.rows() != y.size())
            throw DimensionMismatch("glrt_detect: Phi must be NT x NT");
        const ComplexMatrix w = inverse_sqrt_psd(noise.phi);
        const ComplexVector yw = w * y;
        for (long k = 0; k < k_total; ++k) {
            const ComplexMatrix x = alphabet.codeword(k);
            ComplexMatrix xcal(y.size(), n * x.cols());
            xcal.setZero();
            for (int b = 0; b < n; ++b)
                xcal.block(b * t_len, b * x.cols(), t_len, x.cols()) = x;
            xcal = w * xcal;
            const ComplexMatrix gram = xcal.adjoint() * xcal;
            const ComplexMatrix rhs = xcal.adjoint() * yw;
            ComplexMatrix h_hat;
            try {
                h_hat = solve_hermitian_psd(gram, rhs);
            } catch (const Singular&) {
                h_hat = pseudo_solve_hermitian_psd(gram, rhs);
            }
            const double res = (yw - xcal * h_hat).squaredNorm();
            result.residuals[static_cast<size_t>(k)] = res;
            if (res < best) {
                best = res;
                best_k = k;
            }
        }
    }

    result.decided_index = best_k;
    if (alphabet.is_product()) {
        const std::vector<int> d = alphabet.digits(best_k);
        int j_bits = 0;
        while ((1 << j_bits) < alphabet.per_user_size()) ++j_bits;
        for (int m = 0; m < alphabet.users(); ++m) {
            const std::vector<int> bits =
                bits_from_codeword_column(d[static_cast<size_t>(m)], j_bits);
            result.decided_bits.insert(result.decided_bits.end(), bits.begin(),
                                       bits.end());
        }
    }
    return result;
}

/// Convenience overload on the received block.
inline DetectionResult glrt_detect(const ComplexMatrix& y_block,
                                   const JointAlphabet& alphabet,
                                   const NoiseSpec& noise) {
    return glrt_detect(vec_columns(y_block), alphabet, noise);
}

// ---------------------------------------------------------------------------
// Gray-mapped data modulation for the pilot-based baselines
// ---------------------------------------------------------------------------

enum class DataModulation { Qpsk, Qam16 };

inline int bits_per_symbol(DataModulation mod) {
    return mod == DataModulation::Qpsk ? 2 : 4;
}

inline DataModulation modulation_for_bits(int j_bits) {
    if (j_bits == 2) return DataModulation::Qpsk;
    if (j_bits == 4) return DataModulation::Qam16;
    throw ConfigError("pilot baselines support 2 (QPSK) or 4 (16-QAM) bits per symbol");
}

namespace detail {

// Gray-coded 4-PAM component: 00 -> +3, 01 -> +1, 11 -> -1, 10 -> -3.
inline double pam4_level(int b_hi, int b_lo) {
    static constexpr double levels[4] = {3.0, 1.0, -3.0, -1.0};
    return levels[(b_hi << 1) | b_lo];
}

inline void pam4_slice(double v, int& b_hi, int& b_lo) {
    if (v > 2.0) {
        b_hi = 0; b_lo = 0;      // +3
    } else if (v > 0.0) {
        b_hi = 0; b_lo = 1;      // +1
    } else if (v > -2.0) {
        b_hi = 1; b_lo = 1;      // -1
    } else {
        b_hi = 1; b_lo = 0;      // -3
    }
}

}  // namespace detail

/// Map bits (MSB first) to a unit-average-energy constellation point.
inline Complex modulate(const std::vector<int>& bits, DataModulation mod) {
    if (static_cast<int>(bits.size()) != bits_per_symbol(mod))
        throw DimensionMismatch("modulate: wrong bit count for modulation");
    if (mod == DataModulation::Qpsk) {
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        return Complex((1 - 2 * bits[0]) * inv_sqrt2, (1 - 2 * bits[1]) * inv_sqrt2);
    }
    const double inv_sqrt10 = 1.0 / std::sqrt(10.0);
    return Complex(detail::pam4_level(bits[0], bits[1]) * inv_sqrt10,
                   detail::pam4_level(bits[2], bits[3]) * inv_sqrt10);
}

/// Nearest-constellation-point slicing with Gray demapping.
inline std::vector<int> slice_symbol(Complex z, DataModulation mod) {
    if (mod == DataModulation::Qpsk)
        return {z.real() < 0.0 ? 1 : 0, z.imag() < 0.0 ? 1 : 0};
    std::vector<int> bits(4);
    const double sqrt10 = std::sqrt(10.0);
    detail::pam4_slice(z.real() * sqrt10, bits[0], bits[1]);
    detail::pam4_slice(z.imag() * sqrt10, bits[2], bits[3]);
    return bits;
}

inline Complex symbol_for_value(int value, DataModulation mod) {
    return modulate(value_to_bits(value, bits_per_symbol(mod)), mod);
}

/// Full bit-pattern-to-symbol table, for diagnostics and test vectors.
inline std::vector<std::pair<std::vector<int>, Complex>> gray_mapping_table(
    DataModulation mod) {
    std::vector<std::pair<std::vector<int>, Complex>> table;
    const int j_bits = bits_per_symbol(mod);
    for (int v = 0; v < (1 << j_bits); ++v) {
        std::vector<int> bits = value_to_bits(v, j_bits);
        table.emplace_back(bits, modulate(bits, mod));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Pilot-based coherent baseline
// ---------------------------------------------------------------------------

/**
 * Orthogonal pilots over the first M slots plus Gray-mapped data symbols in
 * the remaining T - M slots. Per-user energy is split evenly across the
 * user's pilot slot and its data slots, so a block consumes exactly the
 * sum(alpha_m P) budget of the learned transmitter.
 */
struct PilotScheme {
    ComplexMatrix pilot_block;          // M x M, occupies the first M slots
    DataModulation modulation = DataModulation::Qpsk;
    std::vector<double> symbol_scale;   // per-user data-symbol amplitude
    int data_slots = 1;

    static PilotScheme make(const SystemConfig& cfg) {
        cfg.validate();
        if (cfg.T < cfg.M + 1)
            throw ConfigError("PilotScheme: need T >= M + 1 for pilots plus data");
        PilotScheme ps;
        ps.modulation = modulation_for_bits(cfg.J);
        ps.data_slots = cfg.T - cfg.M;
        ps.pilot_block = ComplexMatrix::Zero(cfg.M, cfg.M);
        ps.symbol_scale.resize(static_cast<size_t>(cfg.M));
        for (int m = 0; m < cfg.M; ++m) {
            // alpha_m P spread over 1 pilot slot + data_slots data slots.
            const double per_slot = cfg.alpha_p(m) / (1.0 + ps.data_slots);
            ps.symbol_scale[static_cast<size_t>(m)] = std::sqrt(per_slot);
            ps.pilot_block(m, m) = std::sqrt(per_slot);
        }
        return ps;
    }

    double total_block_energy() const {
        double e = pilot_block.squaredNorm();
        for (double s : symbol_scale) e += data_slots * s * s;
        return e;
    }
};

/**
 * Linear-MMSE channel estimate from the pilot block: with prior per-entry
 * channel variance prior_var, Hhat = prior_var P^H (P prior_var P^H +
 * sigma^2 I)^{-1} Y_pilot.
 */
inline ComplexMatrix mmse_channel_estimate(const ComplexMatrix& y_pilot,
                                           const PilotScheme& pilots,
                                           const NoiseSpec& noise,
                                           double prior_var) {
    const ComplexMatrix& p = pilots.pilot_block;
    if (y_pilot.rows() != p.rows())
        throw DimensionMismatch("mmse_channel_estimate: pilot block shape");
    Eigen::JacobiSVD<ComplexMatrix> svd(p);
    if (svd.singularValues().minCoeff() <
        1e-12 * svd.singularValues().maxCoeff())
        throw SingularPilot("mmse_channel_estimate: pilot block singular");
    const ComplexMatrix gram =
        prior_var * (p * p.adjoint()) +
        noise.sigma2 * ComplexMatrix::Identity(p.rows(), p.rows());
    return prior_var * p.adjoint() * solve_hermitian_psd(gram, y_pilot);
}

/**
 * Per-user linear MMSE equalization of one data slot followed by
 * constellation slicing. h_est is the estimated M x N channel; the data
 * symbols were scaled per user by pilots.symbol_scale.
 */
inline std::vector<int> mmse_equalize_detect(const ComplexVector& y_data,
                                             const ComplexMatrix& h_est,
                                             const NoiseSpec& noise,
                                             const PilotScheme& pilots) {
    const int m_users = static_cast<int>(h_est.rows());
    if (y_data.size() != h_est.cols())
        throw DimensionMismatch("mmse_equalize_detect: antenna count mismatch");
    ComplexMatrix g = h_est.transpose();  // N x M, y = G diag(scale) s + v
    for (int m = 0; m < m_users; ++m)
        g.col(m) *= pilots.symbol_scale[static_cast<size_t>(m)];
    ComplexMatrix reg = g.adjoint() * g;
    for (int m = 0; m < m_users; ++m) {
        const double s = pilots.symbol_scale[static_cast<size_t>(m)];
        reg(m, m) += noise.sigma2 * m_users * s * s;
    }
    const ComplexVector s_tilde =
        solve_hermitian_psd(reg, ComplexMatrix(g.adjoint() * y_data));
    std::vector<int> bits;
    for (int m = 0; m < m_users; ++m) {
        const std::vector<int> b = slice_symbol(s_tilde(m), pilots.modulation);
        bits.insert(bits.end(), b.begin(), b.end());
    }
    return bits;
}

/// Precomputed exhaustive search over all joint symbol vectors for one
/// channel estimate; detection is then a nearest-candidate scan per slot.
class MlsdSearcher {
   public:
    MlsdSearcher(const ComplexMatrix& h_est, const PilotScheme& pilots) {
        const int m_users = static_cast<int>(h_est.rows());
        j_bits_ = bits_per_symbol(pilots.modulation);
        users_ = m_users;
        if (m_users * j_bits_ > 20)
            throw SearchTooLarge("mlsd_detect: joint search exceeds 2^20 guard");
        const int l = 1 << j_bits_;
        ComplexMatrix g = h_est.transpose();
        for (int m = 0; m < m_users; ++m)
            g.col(m) *= pilots.symbol_scale[static_cast<size_t>(m)];
        long k_total = 1;
        for (int m = 0; m < m_users; ++m) k_total *= l;
        candidates_.resize(static_cast<size_t>(k_total));
        for (long k = 0; k < k_total; ++k) {
            ComplexVector sum = ComplexVector::Zero(h_est.cols());
            long rem = k;
            for (int m = m_users - 1; m >= 0; --m) {
                const int v = static_cast<int>(rem % l);
                rem /= l;
                sum += g.col(m) * symbol_for_value(v, pilots.modulation);
            }
            candidates_[static_cast<size_t>(k)] = std::move(sum);
        }
    }

    std::vector<int> detect(const ComplexVector& y_data) const {
        double best = std::numeric_limits<double>::infinity();
        long best_k = 0;
        for (long k = 0; k < static_cast<long>(candidates_.size()); ++k) {
            const double d =
                (y_data - candidates_[static_cast<size_t>(k)]).squaredNorm();
            if (d < best) {
                best = d;
                best_k = k;
            }
        }
        std::vector<int> bits;
        std::vector<int> values(static_cast<size_t>(users_));
        long rem = best_k;
        for (int m = users_ - 1; m >= 0; --m) {
            values[static_cast<size_t>(m)] = static_cast<int>(rem % (1 << j_bits_));
            rem /= (1 << j_bits_);
        }
        for (int m = 0; m < users_; ++m) {
            const std::vector<int> b = value_to_bits(values[static_cast<size_t>(m)], j_bits_);
            bits.insert(bits.end(), b.begin(), b.end());
        }
        return bits;
    }

   private:
    std::vector<ComplexVector> candidates_;
    int users_ = 0;
    int j_bits_ = 0;
};

/// Exhaustive joint maximum-likelihood detection of one data slot.
inline std::vector<int> mlsd_detect(const ComplexVector& y_data,
                                    const ComplexMatrix& h_est,
                                    const PilotScheme& pilots) {
    return MlsdSearcher(h_est, pilots).detect(y_data);
}

}  // namespace jtrd
