#include <catch2/catch_amalgamated.hpp>

#include "jtrd/channel.hpp"

using namespace jtrd;

namespace {

CodebookSet unit_codebooks(const SystemConfig& cfg, Rng& rng) {
    return init_codebooks(cfg, InitScheme::symmetrical_interval(), rng);
}

}  // namespace

TEST_CASE("complex/real vector stacking round trip", "[channel]") {
    ComplexVector a(1);
    a << Complex(1.0, 2.0);
    const RealVector r = complex_to_real_vec(a);
    REQUIRE(r.size() == 2);
    REQUIRE(r(0) == 1.0);
    REQUIRE(r(1) == 2.0);

    const ComplexVector zero = ComplexVector::Zero(3);
    REQUIRE(complex_to_real_vec(zero).size() == 6);
    REQUIRE(complex_to_real_vec(zero).norm() == 0.0);

    Rng rng(1);
    const ComplexVector v = sample_standard_complex_gaussian(rng, 5, 1);
    REQUIRE((real_to_complex_vec(complex_to_real_vec(v)) - v).norm() == 0.0);
}

TEST_CASE("real block form structure", "[channel]") {
    Rng rng(2);
    const ComplexMatrix h = sample_standard_complex_gaussian(rng, 3, 4);
    const ChannelRealization ch = ChannelRealization::from_matrix(h);
    REQUIRE(ch.H_real.rows() == 6);
    REQUIRE(ch.H_real.cols() == 8);
    REQUIRE((ch.H_real.topLeftCorner(3, 4) - h.real()).norm() == 0.0);
    REQUIRE((ch.H_real.topRightCorner(3, 4) + h.imag()).norm() == 0.0);
    REQUIRE((ch.H_real.bottomLeftCorner(3, 4) - h.imag()).norm() == 0.0);
    REQUIRE((ch.H_real.bottomRightCorner(3, 4) - h.real()).norm() == 0.0);
}

TEST_CASE("iid channel variance is 1/M", "[channel][slow]") {
    const SystemConfig cfg = SystemConfig::make(4, 4, 5, 1);
    Rng rng(3);
    const long draws = 62500;  // 1e6 entries at 4x4
    double acc = 0.0;
    Complex mean = 0.0;
    for (long d = 0; d < draws; ++d) {
        const ChannelRealization ch = sample_channel(ChannelModel::iid(), cfg, rng);
        acc += ch.H.squaredNorm();
        mean += ch.H.sum();
    }
    const double entries = static_cast<double>(draws) * 16.0;
    REQUIRE(acc / entries == Catch::Approx(0.25).margin(0.01));
    REQUIRE(std::abs(mean) / entries < 0.01);
}

TEST_CASE("kronecker rho=0 degenerates to iid statistics", "[channel][slow]") {
    const SystemConfig cfg = SystemConfig::make(4, 4, 5, 1);
    Rng rng(4);
    const long draws = 20000;
    double var = 0.0;
    Complex adj = 0.0;
    for (long d = 0; d < draws; ++d) {
        const ChannelRealization ch =
            sample_channel(ChannelModel::kronecker(0.0), cfg, rng);
        var += ch.H.squaredNorm();
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k + 1 < 4; ++k)
                adj += ch.H(i, k) * std::conj(ch.H(i, k + 1));
    }
    const double entries = static_cast<double>(draws) * 16.0;
    REQUIRE(var / entries == Catch::Approx(0.25).margin(0.01));
    // No residual correlation between adjacent antennas.
    REQUIRE(std::abs(adj) / (static_cast<double>(draws) * 12.0) < 0.01);
}

TEST_CASE("kronecker receive-side correlation matches rho", "[channel][slow]") {
    const SystemConfig cfg = SystemConfig::make(4, 4, 5, 1);
    Rng rng(5);
    const long draws = 250000;
    double power = 0.0;
    Complex adjacent = 0.0;
    for (long d = 0; d < draws; ++d) {
        const ChannelRealization ch =
            sample_channel(ChannelModel::kronecker(0.5), cfg, rng);
        power += ch.H.squaredNorm();
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k + 1 < 4; ++k)
                adjacent += ch.H(i, k) * std::conj(ch.H(i, k + 1));
    }
    const double per_entry = power / (static_cast<double>(draws) * 16.0);
    const double corr =
        adjacent.real() / (static_cast<double>(draws) * 12.0) / per_entry;
    REQUIRE(corr == Catch::Approx(0.5).margin(0.02));
    // Transmit side (across rows) carries the same profile.
    REQUIRE(per_entry == Catch::Approx(0.25).margin(0.01));
}

TEST_CASE("correlation matrices are Hermitian Toeplitz with Cholesky roundtrip",
          "[channel]") {
    const ComplexMatrix r = exponential_correlation(5, 0.7);
    REQUIRE(is_hermitian(r));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            REQUIRE(r(i, j).real() == Catch::Approx(std::pow(0.7, std::abs(i - j))));
    const ComplexMatrix l = cholesky_psd(r);
    REQUIRE((l * l.adjoint() - r).norm() <= 1e-10 * r.norm());
}

TEST_CASE("transmit through an identity channel with no noise", "[channel]") {
    // M = N = 2, H = I: each slot's received vector equals the transmitted one.
    const ChannelRealization ch =
        ChannelRealization::from_matrix(ComplexMatrix::Identity(2, 2));
    Rng rng(6);
    RealMatrix x(6, 2);  // T = 3
    for (int i = 0; i < 6; ++i)
        for (int m = 0; m < 2; ++m) x(i, m) = rng.gaussian();
    NoiseSpec off = NoiseSpec::white(1.0);
    off.sigma2 = 0.0;
    const RealVector y = transmit(x, ch, off, rng);
    REQUIRE(y.size() == 12);
    for (int t = 0; t < 3; ++t) {
        for (int m = 0; m < 2; ++m) {
            REQUIRE(y(4 * t + m) == Catch::Approx(x(t, m)).margin(1e-15));
            REQUIRE(y(4 * t + 2 + m) == Catch::Approx(x(3 + t, m)).margin(1e-15));
        }
    }
}

TEST_CASE("single user, single slot is scalar multiplication", "[channel]") {
    Rng rng(7);
    // T must exceed 1 for configs, but transmit itself is dimension-driven.
    const ComplexMatrix h = sample_standard_complex_gaussian(rng, 1, 3);
    const ChannelRealization ch = ChannelRealization::from_matrix(h);
    RealMatrix x(2, 1);
    x << 0.8, -0.3;  // symbol 0.8 - 0.3i
    NoiseSpec off = NoiseSpec::white(1.0);
    off.sigma2 = 0.0;
    const RealVector y = transmit(x, ch, off, rng);
    const Complex sym(0.8, -0.3);
    for (int n = 0; n < 3; ++n) {
        const Complex expect = sym * h(0, n);
        REQUIRE(y(n) == Catch::Approx(expect.real()).margin(1e-15));
        REQUIRE(y(3 + n) == Catch::Approx(expect.imag()).margin(1e-15));
    }
}

TEST_CASE("real pipeline equals the complex-domain computation", "[channel]") {
    Rng rng(8);
    for (int rep = 0; rep < 100; ++rep) {
        const int m = 1 + static_cast<int>(rng.next_below(4));
        const int n = m + static_cast<int>(rng.next_below(4));
        const int t_len = 2 + static_cast<int>(rng.next_below(4));
        RealMatrix x(2 * t_len, m);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index c = 0; c < x.cols(); ++c) x(i, c) = rng.gaussian();
        const ChannelRealization ch = ChannelRealization::from_matrix(
            sample_standard_complex_gaussian(rng, m, n));
        NoiseSpec off = NoiseSpec::white(1.0);
        off.sigma2 = 0.0;
        const RealVector y = transmit(x, ch, off, rng);
        // Complex-domain oracle: Y = X H stacked the same way.
        const ComplexMatrix xc = complex_block_from_real(x);
        const ComplexMatrix yc = xc * ch.H;
        const RealVector y_oracle = stack_received(yc);
        REQUIRE((y - y_oracle).norm() <= 1e-12 * std::max(1.0, y_oracle.norm()));
    }
}

TEST_CASE("noise whiteness", "[channel][slow]") {
    const ChannelRealization ch =
        ChannelRealization::from_matrix(ComplexMatrix::Zero(1, 2));
    Rng rng(9);
    const double sigma2 = 0.7;
    const NoiseSpec noise = NoiseSpec::white(sigma2);
    RealMatrix x = RealMatrix::Zero(4, 1);  // T = 2, silent transmitter
    const long draws = 100000;
    RealMatrix cov = RealMatrix::Zero(8, 8);
    for (long d = 0; d < draws; ++d) {
        const RealVector y = transmit(x, ch, noise, rng);
        cov += y * y.transpose();
    }
    cov /= static_cast<double>(draws);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const double expect = i == j ? sigma2 / 2.0 : 0.0;
            REQUIRE(cov(i, j) == Catch::Approx(expect).margin(0.02 * sigma2));
        }
    }
}

TEST_CASE("noise calibration definitions", "[channel][slow]") {
    const SystemConfig cfg = SystemConfig::make(2, 4, 3, 1);
    Rng cb_rng(10);
    const CodebookSet cb = unit_codebooks(cfg, cb_rng);

    Rng c1(11, 0);
    const NoiseSpec at0 = calibrate_noise(cfg, 0.0, cb, ChannelModel::iid(), c1);
    Rng c2(11, 0);
    const NoiseSpec at10 = calibrate_noise(cfg, 10.0, cb, ChannelModel::iid(), c2);
    // Same stream, same estimate: exactly a factor 10 apart.
    REQUIRE(at10.sigma2 == Catch::Approx(at0.sigma2 / 10.0).epsilon(1e-15));

    // Closed form: per-slot per-user received power = (alpha P / T) * N/M.
    const double expect = (cfg.alpha_p(0) / cfg.T) * cfg.N / cfg.M;
    REQUIRE(at0.sigma2 == Catch::Approx(expect).epsilon(0.01));
}

TEST_CASE("unit-energy codeword calibration closed form", "[channel][slow]") {
    // alpha_m P / T = 1 per slot with E|h|^2 = 1/M gives sigma^2 = N/M at 0 dB.
    SystemConfig cfg = SystemConfig::make(2, 3, 4, 1, /*P=*/2.0);
    // alpha_m = T/M = 2, alpha_m * P = 4 = T so per-slot energy is 1.
    Rng cb_rng(12);
    const CodebookSet cb = init_codebooks(cfg, InitScheme::symmetrical_interval(), cb_rng);
    Rng c(13, 0);
    const NoiseSpec spec = calibrate_noise(cfg, 0.0, cb, ChannelModel::iid(), c);
    REQUIRE(spec.sigma2 ==
            Catch::Approx(static_cast<double>(cfg.N) / cfg.M).epsilon(0.01));
}

TEST_CASE("transmit dimension checks", "[channel]") {
    const ChannelRealization ch =
        ChannelRealization::from_matrix(ComplexMatrix::Identity(2, 2));
    Rng rng(14);
    RealMatrix bad(6, 3);  // 3 users against a 2-user channel
    bad.setZero();
    REQUIRE_THROWS_AS(transmit(bad, ch, NoiseSpec::white(1.0), rng),
                      DimensionMismatch);
}
