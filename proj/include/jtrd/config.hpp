#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "jtrd/core.hpp"

namespace jtrd {

/**
 * Uplink system dimensions and power budget.
 *
 * M single-antenna users transmit to an N-antenna access point over
 * coherent blocks of T symbols; each user encodes J bits per block into
 * one of L = 2^J codewords. Per-user transmit energy is alpha[m] * P with
 * sum(alpha) = T.
 */
struct SystemConfig {
    int M = 2;              // users
    int N = 4;              // receive antennas
    int T = 3;              // coherent-block length (symbols)
    int J = 1;              // bits per codeword per user
    double P = 1.0;         // power budget
    std::vector<double> alpha;  // per-user power factors, defaults T/M

    int L() const { return 1 << J; }
    int rx_dim() const { return 2 * N * T; }
    int bits_total() const { return J * M; }

    double alpha_p(int m) const { return alpha[static_cast<size_t>(m)] * P; }

    static SystemConfig make(int M, int N, int T, int J, double P = 1.0) {
        SystemConfig cfg;
        cfg.M = M;
        cfg.N = N;
        cfg.T = T;
        cfg.J = J;
        cfg.P = P;
        cfg.alpha.assign(static_cast<size_t>(M),
                         static_cast<double>(T) / static_cast<double>(M));
        return cfg;
    }

    void validate() const {
        if (M < 1 || N < M) throw ConfigError("SystemConfig: need N >= M >= 1");
        if (T <= 1) throw ConfigError("SystemConfig: need T > 1");
        if (J < 1 || J > 20) throw ConfigError("SystemConfig: J out of range");
        if (P <= 0.0) throw ConfigError("SystemConfig: P must be positive");
        if (alpha.size() != static_cast<size_t>(M))
            throw ConfigError("SystemConfig: alpha size != M");
        double sum = 0.0;
        for (double a : alpha) {
            if (a < 0.0) throw ConfigError("SystemConfig: alpha must be >= 0");
            sum += a;
        }
        if (std::abs(sum - static_cast<double>(T)) > 1e-12)
            throw ConfigError("SystemConfig: alpha must sum to T");
    }
};

enum class ChannelKind { IidGaussian, KroneckerExponential };

struct ChannelModel {
    ChannelKind kind = ChannelKind::IidGaussian;
    double rho = 0.0;  // exponential correlation coefficient, Kronecker only

    static ChannelModel iid() { return {ChannelKind::IidGaussian, 0.0}; }
    static ChannelModel kronecker(double rho) {
        return {ChannelKind::KroneckerExponential, rho};
    }

    void validate() const {
        if (kind == ChannelKind::KroneckerExponential &&
            (rho < 0.0 || rho >= 1.0))
            throw ConfigError("ChannelModel: need 0 <= rho < 1");
    }
};

/**
 * Additive-noise description: per-complex-dimension variance sigma2 and an
 * optional full covariance Phi (N*T x N*T, over the column-stacked received
 * block). Phi empty means white noise sigma2 * I.
 */
struct NoiseSpec {
    double sigma2 = 1.0;
    ComplexMatrix phi;  // empty => sigma2 * I

    static NoiseSpec white(double sigma2) { return {sigma2, ComplexMatrix()}; }

    bool is_white() const { return phi.size() == 0; }

    void validate() const {
        if (!(sigma2 > 0.0)) throw ConfigError("NoiseSpec: sigma2 must be > 0");
    }
};

/// Mini-batch training hyperparameters.
struct TrainConfig {
    int batch_size = 100;
    double eta_init = 1e-3;
    double eta_low = 1e-5;
    double train_snr_db = 10.0;
    long max_iterations = 20000;
    long convergence_window = 2000;
    double convergence_tol = 1e-3;
    std::uint64_t seed = 1;
    bool per_batch_channel = false;  // default: fresh channel per sample
    long ber_cadence = 0;            // 0 disables in-training BER snapshots
    int ber_cadence_blocks = 250;    // Monte-Carlo blocks per snapshot

    void validate() const {
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size >= 1");
        if (max_iterations < 1)
            throw ConfigError("TrainConfig: max_iterations >= 1");
        if (eta_low > eta_init)
            throw ConfigError("TrainConfig: eta_low must be <= eta_init");
        if (convergence_window < 1)
            throw ConfigError("TrainConfig: convergence_window >= 1");
    }
};

}  // namespace jtrd
