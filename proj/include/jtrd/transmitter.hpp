#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/rng.hpp"

namespace jtrd {

// ---------------------------------------------------------------------------
// One-hot encoding
//
// J bits (MSB first) select one codebook column. The hot position counted
// from the right end of the vector equals the integer value of the bits:
// 00 -> 0001, 01 -> 0010, 10 -> 0100, 11 -> 1000. The column index used
// throughout the pipeline is therefore L - 1 - value.
// ---------------------------------------------------------------------------

inline int bits_to_value(const std::vector<int>& bits) {
    int v = 0;
    for (int b : bits) {
        if (b != 0 && b != 1) throw Error("bits_to_value: bits must be 0/1");
        v = (v << 1) | b;
    }
    return v;
}

inline std::vector<int> value_to_bits(int value, int j_bits) {
    std::vector<int> bits(static_cast<size_t>(j_bits));
    for (int i = 0; i < j_bits; ++i)
        bits[static_cast<size_t>(i)] = (value >> (j_bits - 1 - i)) & 1;
    return bits;
}

inline int codeword_column_from_bits(const std::vector<int>& bits) {
    const int l = 1 << bits.size();
    return l - 1 - bits_to_value(bits);
}

inline std::vector<int> bits_from_codeword_column(int column, int j_bits) {
    const int l = 1 << j_bits;
    return value_to_bits(l - 1 - column, j_bits);
}

inline RealVector one_hot_encode(const std::vector<int>& bits) {
    const int l = 1 << bits.size();
    RealVector v = RealVector::Zero(l);
    v(codeword_column_from_bits(bits)) = 1.0;
    return v;
}

inline std::vector<int> one_hot_decode(const RealVector& onehot) {
    int hot = -1;
    for (Eigen::Index i = 0; i < onehot.size(); ++i) {
        if (onehot(i) == 1.0) {
            if (hot >= 0) throw Error("one_hot_decode: multiple hot positions");
            hot = static_cast<int>(i);
        } else if (onehot(i) != 0.0) {
            throw Error("one_hot_decode: entries must be 0/1");
        }
    }
    if (hot < 0) throw Error("one_hot_decode: no hot position");
    int j_bits = 0;
    while ((1 << j_bits) < onehot.size()) ++j_bits;
    if ((1 << j_bits) != onehot.size())
        throw DimensionMismatch("one_hot_decode: length not a power of two");
    return bits_from_codeword_column(hot, j_bits);
}

// ---------------------------------------------------------------------------
// Codebooks
// ---------------------------------------------------------------------------

/**
 * Per-user transmitter weights: W[m] is the 2T x L real codebook of user m
 * (columns are stacked [Re; Im] codewords before power normalization),
 * alphaP[m] the user's per-block energy budget alpha_m * P.
 */
struct CodebookSet {
    std::vector<RealMatrix> W;
    std::vector<double> alphaP;

    int users() const { return static_cast<int>(W.size()); }
    int block_len() const { return static_cast<int>(W.front().rows()) / 2; }
    int codebook_size() const { return static_cast<int>(W.front().cols()); }
};

enum class InitKind { Xavier, SymmetricalInterval };

struct InitScheme {
    InitKind kind = InitKind::SymmetricalInterval;
    double zeta = -1.0;  // < 0 => default 0.1 / sqrt(n)

    static InitScheme xavier() { return {InitKind::Xavier, 0.0}; }
    static InitScheme symmetrical_interval(double zeta = -1.0) {
        return {InitKind::SymmetricalInterval, zeta};
    }
};

/**
 * Initialize the per-user codebooks.
 *
 * Xavier draws every coefficient uniformly from (-1/sqrt(n), 1/sqrt(n)) with
 * n = L, the layer input size. The symmetrical-interval scheme instead draws
 * the magnitude uniformly from (1/sqrt(n) - zeta, 1/sqrt(n) + zeta) and picks
 * the sign with probability 1/2, so no coefficient starts near zero.
 */
inline CodebookSet init_codebooks(const SystemConfig& cfg,
                                  const InitScheme& scheme, Rng& rng) {
    cfg.validate();
    const int n = cfg.L();
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    double zeta = scheme.zeta;
    if (scheme.kind == InitKind::SymmetricalInterval) {
        if (zeta < 0.0) zeta = 0.1 * bound;
        if (zeta > bound / 10.0 + 1e-15)
            throw ConfigError("InitScheme: zeta must be <= (1/sqrt(n))/10");
    }
    CodebookSet cb;
    cb.W.reserve(static_cast<size_t>(cfg.M));
    cb.alphaP.reserve(static_cast<size_t>(cfg.M));
    for (int m = 0; m < cfg.M; ++m) {
        RealMatrix w(2 * cfg.T, n);
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                if (scheme.kind == InitKind::Xavier) {
                    w(r, c) = rng.uniform(-bound, bound);
                } else {
                    const double sign = (rng.next_u64() & 1) ? 1.0 : -1.0;
                    w(r, c) = sign * rng.uniform(bound - zeta, bound + zeta);
                }
            }
        }
        cb.W.push_back(std::move(w));
        cb.alphaP.push_back(cfg.alpha_p(m));
    }
    return cb;
}

// ---------------------------------------------------------------------------
// Forward / backward through the normalization layer
// ---------------------------------------------------------------------------

struct TxForwardResult {
    RealMatrix X;  // 2T x M, normalized codewords, ||x_m||^2 = alphaP[m]
    RealMatrix Z;  // 2T x M, pre-normalization cache for the backward pass
};

/// Select each user's codeword column and normalize to its power budget.
inline TxForwardResult tx_forward(const CodebookSet& cb,
                                  const std::vector<int>& indices) {
    const int m_users = cb.users();
    if (static_cast<int>(indices.size()) != m_users)
        throw DimensionMismatch("tx_forward: index count != user count");
    const Eigen::Index rows = cb.W.front().rows();
    TxForwardResult out;
    out.X.resize(rows, m_users);
    out.Z.resize(rows, m_users);
    for (int m = 0; m < m_users; ++m) {
        const RealMatrix& w = cb.W[static_cast<size_t>(m)];
        const int idx = indices[static_cast<size_t>(m)];
        if (idx < 0 || idx >= w.cols())
            throw DimensionMismatch("tx_forward: codeword index out of range");
        out.Z.col(m) = w.col(idx);
        const double norm = out.Z.col(m).norm();
        if (norm < 1e-12)
            throw DegenerateCodeword("tx_forward: codeword norm below 1e-12");
        out.X.col(m) =
            std::sqrt(cb.alphaP[static_cast<size_t>(m)]) / norm * out.Z.col(m);
    }
    return out;
}

enum class NormGradMode {
    Exact,        // full Jacobian of the normalization
    Elementwise,  // legacy element-wise derivative, kept for comparison
};

/**
 * Accumulate codebook gradients for one sample. The normalization Jacobian
 * sqrt(alphaP) * (I/||z|| - z z^T/||z||^3) is applied to the incoming signal
 * gradient, and the result lands in the selected column only.
 */
inline void tx_backward_accumulate(const CodebookSet& cb,
                                   const std::vector<int>& indices,
                                   const RealMatrix& z_cache,
                                   const RealMatrix& grad_x,
                                   std::vector<RealMatrix>& grads,
                                   NormGradMode mode = NormGradMode::Exact) {
    const int m_users = cb.users();
    if (static_cast<int>(indices.size()) != m_users ||
        z_cache.cols() != m_users || z_cache.rows() != cb.W.front().rows())
        throw MissingCache("tx_backward: cache shape does not match codebooks");
    if (grad_x.rows() != z_cache.rows() || grad_x.cols() != z_cache.cols())
        throw DimensionMismatch("tx_backward: gradient shape mismatch");
    for (int m = 0; m < m_users; ++m) {
        const auto z = z_cache.col(m);
        const auto g = grad_x.col(m);
        const double zn = z.norm();
        if (zn < 1e-12)
            throw DegenerateCodeword("tx_backward: cached codeword degenerate");
        const double amp = std::sqrt(cb.alphaP[static_cast<size_t>(m)]);
        const int idx = indices[static_cast<size_t>(m)];
        if (mode == NormGradMode::Exact) {
            const double radial = z.dot(g) / (zn * zn * zn);
            grads[static_cast<size_t>(m)].col(idx) += amp * (g / zn - radial * z);
        } else {
            const double zn2 = zn * zn;
            const RealVector deriv =
                amp * (RealVector::Constant(z.size(), zn2) - z) / (zn2 * zn);
            grads[static_cast<size_t>(m)].col(idx) += g.cwiseProduct(deriv);
        }
    }
}

/// Gradients of the per-user codebooks for a single sample.
inline std::vector<RealMatrix> tx_backward(const CodebookSet& cb,
                                           const std::vector<int>& indices,
                                           const RealMatrix& z_cache,
                                           const RealMatrix& grad_x,
                                           NormGradMode mode = NormGradMode::Exact) {
    std::vector<RealMatrix> grads;
    grads.reserve(cb.W.size());
    for (const RealMatrix& w : cb.W)
        grads.push_back(RealMatrix::Zero(w.rows(), w.cols()));
    tx_backward_accumulate(cb, indices, z_cache, grad_x, grads, mode);
    return grads;
}

// ---------------------------------------------------------------------------
// Constellation export
// ---------------------------------------------------------------------------

/**
 * Serialized constellation description: per-user complex codewords after
 * power normalization, plus the per-slot power split of every codeword.
 */
inline nlohmann::json export_codebooks(const CodebookSet& cb) {
    nlohmann::json users = nlohmann::json::array();
    const int t_len = cb.block_len();
    const int l = cb.codebook_size();
    for (int m = 0; m < cb.users(); ++m) {
        const RealMatrix& w = cb.W[static_cast<size_t>(m)];
        nlohmann::json re = nlohmann::json::array();
        nlohmann::json im = nlohmann::json::array();
        nlohmann::json slot_power = nlohmann::json::array();
        for (int t = 0; t < t_len; ++t) {
            nlohmann::json re_row = nlohmann::json::array();
            nlohmann::json im_row = nlohmann::json::array();
            nlohmann::json pw_row = nlohmann::json::array();
            for (int c = 0; c < l; ++c) {
                const double norm = w.col(c).norm();
                if (norm < 1e-12)
                    throw DegenerateCodeword("export_codebooks: degenerate column");
                const double amp = std::sqrt(cb.alphaP[static_cast<size_t>(m)]) / norm;
                const double re_v = amp * w(t, c);
                const double im_v = amp * w(t_len + t, c);
                re_row.push_back(re_v);
                im_row.push_back(im_v);
                pw_row.push_back(re_v * re_v + im_v * im_v);
            }
            re.push_back(re_row);
            im.push_back(im_row);
            slot_power.push_back(pw_row);
        }
        users.push_back({{"re", re}, {"im", im}, {"slot_power", slot_power}});
    }
    return nlohmann::json{{"version", 1},
                          {"M", cb.users()},
                          {"T", t_len},
                          {"L", l},
                          {"alphaP", cb.alphaP},
                          {"users", users}};
}

/// Rebuild a CodebookSet from an exported constellation (columns come back
/// normalized, which re-exports identically).
inline CodebookSet import_codebooks(const nlohmann::json& j) {
    try {
        if (j.at("version").get<int>() != 1)
            throw VersionMismatch("import_codebooks: unsupported version");
        const int m_users = j.at("M").get<int>();
        const int t_len = j.at("T").get<int>();
        const int l = j.at("L").get<int>();
        CodebookSet cb;
        cb.alphaP = j.at("alphaP").get<std::vector<double>>();
        for (int m = 0; m < m_users; ++m) {
            const auto& user = j.at("users").at(static_cast<size_t>(m));
            RealMatrix w(2 * t_len, l);
            for (int t = 0; t < t_len; ++t) {
                for (int c = 0; c < l; ++c) {
                    w(t, c) = user.at("re").at(t).at(c).get<double>();
                    w(t_len + t, c) = user.at("im").at(t).at(c).get<double>();
                }
            }
            cb.W.push_back(std::move(w));
        }
        return cb;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("import_codebooks: ") + e.what());
    }
}

}  // namespace jtrd
