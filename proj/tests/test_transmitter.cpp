#include <catch2/catch_amalgamated.hpp>

#include "jtrd/transmitter.hpp"

using namespace jtrd;

TEST_CASE("one-hot encoding follows the documented convention", "[transmitter]") {
    // 00 -> 0001, 01 -> 0010, 10 -> 0100, 11 -> 1000
    const RealVector v01 = one_hot_encode({0, 1});
    REQUIRE(v01.size() == 4);
    REQUIRE(v01(0) == 0.0);
    REQUIRE(v01(1) == 0.0);
    REQUIRE(v01(2) == 1.0);
    REQUIRE(v01(3) == 0.0);
    const RealVector v11 = one_hot_encode({1, 1});
    REQUIRE(v11(0) == 1.0);
    REQUIRE(v11(1) == 0.0);
    REQUIRE(v11(2) == 0.0);
    REQUIRE(v11(3) == 0.0);
    const RealVector v00 = one_hot_encode({0, 0});
    REQUIRE(v00(3) == 1.0);
}

TEST_CASE("one-hot encode/decode is a bijection for J <= 8", "[transmitter]") {
    for (int j = 1; j <= 8; ++j) {
        for (int v = 0; v < (1 << j); ++v) {
            const std::vector<int> bits = value_to_bits(v, j);
            REQUIRE(bits_to_value(bits) == v);
            REQUIRE(one_hot_decode(one_hot_encode(bits)) == bits);
            const int col = codeword_column_from_bits(bits);
            REQUIRE(bits_from_codeword_column(col, j) == bits);
        }
    }
}

TEST_CASE("selecting a column equals multiplying by the one-hot vector",
          "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 2);
    Rng rng(20);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    for (int v = 0; v < cfg.L(); ++v) {
        const std::vector<int> bits = value_to_bits(v, cfg.J);
        const RealVector z = cb.W[0] * one_hot_encode(bits);
        const int col = codeword_column_from_bits(bits);
        REQUIRE((z - cb.W[0].col(col)).norm() == 0.0);
    }
}

TEST_CASE("xavier initialization bounds and mean", "[transmitter][slow]") {
    // n = L = 16: entries live in (-0.25, 0.25) with zero mean.
    const SystemConfig cfg = SystemConfig::make(1, 1, 8, 4);
    Rng rng(21);
    double sum = 0.0;
    long count = 0;
    for (int rep = 0; rep < 4000; ++rep) {
        const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
        for (const auto& w : cb.W) {
            REQUIRE(w.cwiseAbs().maxCoeff() < 0.25);
            sum += w.sum();
            count += w.size();
        }
    }
    REQUIRE(count >= 1000000);
    REQUIRE(std::abs(sum / static_cast<double>(count)) < 0.005);
}

TEST_CASE("symmetrical-interval magnitudes stay in the band", "[transmitter]") {
    // n = 4, zeta = 0.05: |entry| in [0.45, 0.55].
    const SystemConfig cfg = SystemConfig::make(2, 2, 4, 2);
    Rng rng(22);
    const CodebookSet cb =
        init_codebooks(cfg, InitScheme::symmetrical_interval(0.05), rng);
    for (const auto& w : cb.W) {
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                REQUIRE(std::abs(w(r, c)) >= 0.45);
                REQUIRE(std::abs(w(r, c)) <= 0.55);
            }
    }
}

TEST_CASE("symmetrical-interval signs are balanced", "[transmitter][slow]") {
    const SystemConfig cfg = SystemConfig::make(1, 1, 8, 4);
    Rng rng(23);
    long positive = 0, count = 0;
    for (int rep = 0; rep < 4000; ++rep) {
        const CodebookSet cb =
            init_codebooks(cfg, InitScheme::symmetrical_interval(), rng);
        for (const auto& w : cb.W) {
            positive += (w.array() > 0.0).count();
            count += w.size();
        }
    }
    REQUIRE(count >= 1000000);
    REQUIRE(static_cast<double>(positive) / static_cast<double>(count) ==
            Catch::Approx(0.5).margin(0.005));
}

TEST_CASE("zeta guard rejects oversized half-widths", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 2);
    Rng rng(24);
    REQUIRE_THROWS_AS(
        init_codebooks(cfg, InitScheme::symmetrical_interval(0.2), rng),
        ConfigError);
}

TEST_CASE("forward normalization scales codewords onto the power shell",
          "[transmitter]") {
    CodebookSet cb;
    cb.alphaP = {1.0};
    RealMatrix w(4, 2);
    w << 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0;  // column 0 has norm 2
    cb.W.push_back(w);
    const TxForwardResult fwd = tx_forward(cb, {0});
    REQUIRE((fwd.X.col(0) - w.col(0) / 2.0).norm() < 1e-15);
    REQUIRE(fwd.X.col(0).norm() == Catch::Approx(1.0).margin(1e-12));
    // Already unit-norm column passes through unchanged.
    const TxForwardResult fwd1 = tx_forward(cb, {1});
    REQUIRE((fwd1.X.col(0) - w.col(1)).norm() < 1e-15);
}

TEST_CASE("power constraint holds exactly after any forward", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(3, 3, 4, 2);
    Rng rng(25);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> idx(3);
        for (int m = 0; m < 3; ++m)
            idx[static_cast<size_t>(m)] = static_cast<int>(rng.next_below(4));
        const TxForwardResult fwd = tx_forward(cb, idx);
        for (int m = 0; m < 3; ++m)
            REQUIRE(fwd.X.col(m).squaredNorm() ==
                    Catch::Approx(cb.alphaP[static_cast<size_t>(m)]).margin(1e-12));
    }
}

TEST_CASE("degenerate codeword is rejected", "[transmitter]") {
    CodebookSet cb;
    cb.alphaP = {1.0};
    cb.W.push_back(RealMatrix::Zero(4, 2));
    REQUIRE_THROWS_AS(tx_forward(cb, {0}), DegenerateCodeword);
}

TEST_CASE("backward pass zero and projection properties", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 1);
    Rng rng(26);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    const std::vector<int> idx = {1, 0};
    const TxForwardResult fwd = tx_forward(cb, idx);

    // Zero upstream gradient produces zero codebook gradients.
    const auto zero_grads =
        tx_backward(cb, idx, fwd.Z, RealMatrix::Zero(6, 2));
    for (const auto& g : zero_grads) REQUIRE(g.norm() == 0.0);

    // Radial directions are annihilated: grad parallel to z maps to zero
    // when the codeword is already on the unit shell.
    CodebookSet unit;
    unit.alphaP = {1.0};
    RealMatrix w = RealMatrix::Zero(4, 1);
    w.col(0) << 0.5, 0.5, 0.5, 0.5;  // unit norm
    unit.W.push_back(w);
    const TxForwardResult ufwd = tx_forward(unit, {0});
    RealMatrix grad = ufwd.Z;
    const auto grads = tx_backward(unit, {0}, ufwd.Z, grad);
    REQUIRE(grads[0].norm() < 1e-14);
}

TEST_CASE("gradients land only in the selected column", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 2);
    Rng rng(27);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    const std::vector<int> idx = {2, 1};
    const TxForwardResult fwd = tx_forward(cb, idx);
    RealMatrix grad(6, 2);
    for (Eigen::Index i = 0; i < grad.size(); ++i) grad(i) = rng.gaussian();
    const auto grads = tx_backward(cb, idx, fwd.Z, grad);
    for (int m = 0; m < 2; ++m) {
        for (int c = 0; c < 4; ++c) {
            if (c == idx[static_cast<size_t>(m)]) continue;
            REQUIRE(grads[static_cast<size_t>(m)].col(c).norm() == 0.0);
        }
    }
}

TEST_CASE("normalization Jacobian matches finite differences", "[transmitter]") {
    Rng rng(28);
    const double alpha_p = 1.7;
    for (int rep = 0; rep < 100; ++rep) {
        CodebookSet cb;
        cb.alphaP = {alpha_p};
        RealMatrix w(6, 2);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.gaussian();
        cb.W.push_back(w);
        const int idx = static_cast<int>(rng.next_below(2));
        RealVector probe(6);
        for (Eigen::Index i = 0; i < 6; ++i) probe(i) = rng.gaussian();

        // Loss = probe . x(z); analytic gradient via the backward pass.
        const TxForwardResult fwd = tx_forward(cb, {idx});
        RealMatrix grad_x(6, 1);
        grad_x.col(0) = probe;
        const auto grads = tx_backward(cb, {idx}, fwd.Z, grad_x);

        const double step = 1e-6;
        double max_rel = 0.0;
        for (int r = 0; r < 6; ++r) {
            CodebookSet lo = cb, hi = cb;
            lo.W[0](r, idx) -= step;
            hi.W[0](r, idx) += step;
            const double f_lo = probe.dot(tx_forward(lo, {idx}).X.col(0));
            const double f_hi = probe.dot(tx_forward(hi, {idx}).X.col(0));
            const double fd = (f_hi - f_lo) / (2.0 * step);
            const double an = grads[0](r, idx);
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
            max_rel = std::max(max_rel, std::abs(fd - an) / denom);
        }
        REQUIRE(max_rel < 1e-5);
    }
}

TEST_CASE("legacy element-wise derivative differs from the exact Jacobian",
          "[transmitter]") {
    Rng rng(29);
    CodebookSet cb;
    cb.alphaP = {1.0};
    RealMatrix w(4, 1);
    for (Eigen::Index i = 0; i < 4; ++i) w(i) = rng.gaussian();
    cb.W.push_back(w);
    const TxForwardResult fwd = tx_forward(cb, {0});
    RealMatrix grad(4, 1);
    for (Eigen::Index i = 0; i < 4; ++i) grad(i) = rng.gaussian();
    const auto exact = tx_backward(cb, {0}, fwd.Z, grad, NormGradMode::Exact);
    const auto legacy =
        tx_backward(cb, {0}, fwd.Z, grad, NormGradMode::Elementwise);
    REQUIRE((exact[0] - legacy[0]).norm() > 1e-6);
}

TEST_CASE("cache shape mismatch raises MissingCache", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 1);
    Rng rng(30);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    RealMatrix bad_cache(6, 1);  // one user missing
    bad_cache.setZero();
    REQUIRE_THROWS_AS(
        tx_backward(cb, {0, 1}, bad_cache, RealMatrix::Zero(6, 2)),
        MissingCache);
}

TEST_CASE("export/import round trip", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 3, 2);
    Rng rng(31);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    const nlohmann::json first = export_codebooks(cb);
    const CodebookSet back = import_codebooks(first);
    const nlohmann::json second = export_codebooks(back);
    REQUIRE(first == second);

    // Imported codebooks are post-normalization; their columns re-normalize
    // to themselves.
    for (int m = 0; m < back.users(); ++m)
        for (int c = 0; c < back.codebook_size(); ++c)
            REQUIRE(back.W[static_cast<size_t>(m)].col(c).squaredNorm() ==
                    Catch::Approx(cb.alphaP[static_cast<size_t>(m)]).margin(1e-12));
}

TEST_CASE("exported per-slot powers sum to the budget", "[transmitter]") {
    const SystemConfig cfg = SystemConfig::make(2, 2, 4, 1);
    Rng rng(32);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::xavier(), rng);
    const nlohmann::json j = export_codebooks(cb);
    for (int m = 0; m < cfg.M; ++m) {
        for (int c = 0; c < cfg.L(); ++c) {
            double total = 0.0;
            for (int t = 0; t < cfg.T; ++t)
                total += j["users"][m]["slot_power"][t][c].get<double>();
            REQUIRE(total == Catch::Approx(cfg.alpha_p(m)).margin(1e-12));
        }
    }
}
