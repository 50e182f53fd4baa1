#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "jtrd/analysis.hpp"
#include "jtrd/channel.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/detectors.hpp"
#include "jtrd/trainer.hpp"

namespace jtrd {

enum class Scheme { Jtrd, Glrt, MmseCeMmse, MmseCeMlsd, RandomGuess };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Jtrd: return "JTRD";
        case Scheme::Glrt: return "GLRT";
        case Scheme::MmseCeMmse: return "MMSECE_MMSE";
        case Scheme::MmseCeMlsd: return "MMSECE_MLSD";
        case Scheme::RandomGuess: return "RANDOM_GUESS";
    }
    return "?";
}

inline Scheme baseline_from_name(const std::string& s) {
    if (s == "GLRT") return Scheme::Glrt;
    if (s == "MMSECE_MMSE") return Scheme::MmseCeMmse;
    if (s == "MMSECE_MLSD") return Scheme::MmseCeMlsd;
    throw ConfigError("unknown baseline: " + s);
}

/// Full experiment description, loadable from JSON.
struct ExperimentConfig {
    SystemConfig system;
    ChannelModel channel;
    TrainConfig train;
    InitScheme init = InitScheme::symmetrical_interval();
    std::vector<int> hidden_sizes = {256, 128, 64};
    std::vector<double> eval_snrs_db;
    long min_bit_errors = 1000;
    long max_trials = 1000000;
    std::vector<Scheme> baselines;
    std::string output_dir = "out";

    void validate() const {
        system.validate();
        channel.validate();
        train.validate();
        if (eval_snrs_db.empty())
            throw ConfigError("ExperimentConfig: eval_snrs_db must be non-empty");
        if (min_bit_errors < 100)
            throw ConfigError("ExperimentConfig: min_bit_errors must be >= 100");
        if (max_trials < 1)
            throw ConfigError("ExperimentConfig: max_trials must be >= 1");
    }
};

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        const auto& sys = j.at("system");
        cfg.system = SystemConfig::make(
            sys.at("M").get<int>(), sys.at("N").get<int>(), sys.at("T").get<int>(),
            sys.at("J").get<int>(), sys.value("P", 1.0));
        if (sys.contains("alpha"))
            cfg.system.alpha = sys.at("alpha").get<std::vector<double>>();
        const auto& ch = j.at("channel");
        const std::string kind = ch.at("kind").get<std::string>();
        if (kind == "iid_gaussian")
            cfg.channel = ChannelModel::iid();
        else if (kind == "kronecker_exponential")
            cfg.channel = ChannelModel::kronecker(ch.at("rho").get<double>());
        else
            throw ConfigError("unknown channel kind: " + kind);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.eta_init = t.value("eta_init", cfg.train.eta_init);
            cfg.train.eta_low = t.value("eta_low", cfg.train.eta_low);
            cfg.train.train_snr_db = t.value("train_snr_db", cfg.train.train_snr_db);
            cfg.train.max_iterations = t.value("max_iterations", cfg.train.max_iterations);
            cfg.train.convergence_window =
                t.value("convergence_window", cfg.train.convergence_window);
            cfg.train.convergence_tol = t.value("convergence_tol", cfg.train.convergence_tol);
            cfg.train.seed = t.value("seed", cfg.train.seed);
            cfg.train.per_batch_channel =
                t.value("per_batch_channel", cfg.train.per_batch_channel);
            cfg.train.ber_cadence = t.value("ber_cadence", cfg.train.ber_cadence);
            cfg.train.ber_cadence_blocks =
                t.value("ber_cadence_blocks", cfg.train.ber_cadence_blocks);
        }
        if (j.contains("init")) {
            const std::string ik = j.at("init").at("kind").get<std::string>();
            if (ik == "xavier")
                cfg.init = InitScheme::xavier();
            else if (ik == "symmetrical_interval")
                cfg.init = InitScheme::symmetrical_interval(
                    j.at("init").value("zeta", -1.0));
            else
                throw ConfigError("unknown init kind: " + ik);
        }
        cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
        cfg.eval_snrs_db = j.at("eval_snrs_db").get<std::vector<double>>();
        cfg.min_bit_errors = j.value("min_bit_errors", cfg.min_bit_errors);
        cfg.max_trials = j.value("max_trials", cfg.max_trials);
        if (j.contains("baselines"))
            for (const auto& b : j.at("baselines"))
                cfg.baselines.push_back(baseline_from_name(b.get<std::string>()));
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return experiment_from_json(j);
}

// ---------------------------------------------------------------------------
// BER accounting
// ---------------------------------------------------------------------------

struct BerCell {
    long bits_tested = 0;
    long bit_errors = 0;

    double ber() const {
        return bits_tested > 0
                   ? static_cast<double>(bit_errors) / static_cast<double>(bits_tested)
                   : 0.0;
    }
    /// 95% normal-approximation half-width.
    double ci() const {
        if (bits_tested == 0) return 0.0;
        const double p = ber();
        return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(bits_tested));
    }
};

struct BerRow {
    Scheme scheme = Scheme::Jtrd;
    double snr_db = 0.0;
    std::vector<BerCell> per_user;
    long trials = 0;
    bool budget_exhausted = false;

    BerCell aggregate() const {
        BerCell a;
        for (const auto& c : per_user) {
            a.bits_tested += c.bits_tested;
            a.bit_errors += c.bit_errors;
        }
        return a;
    }
};

struct BerReport {
    std::vector<BerRow> rows;
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_clock_seconds = 0.0;

    void write_csv(std::ostream& os) const {
        os << "scheme,snr_db,user,bits,errors,ber,ci\n";
        for (const auto& r : rows) {
            for (size_t m = 0; m < r.per_user.size(); ++m) {
                const BerCell& c = r.per_user[m];
                os << scheme_name(r.scheme) << ',' << format_double(r.snr_db)
                   << ',' << (m + 1) << ',' << c.bits_tested << ',' << c.bit_errors
                   << ',' << format_double(c.ber()) << ',' << format_double(c.ci())
                   << "\n";
            }
            const BerCell a = r.aggregate();
            os << scheme_name(r.scheme) << ',' << format_double(r.snr_db)
               << ",all," << a.bits_tested << ',' << a.bit_errors << ','
               << format_double(a.ber()) << ',' << format_double(a.ci()) << "\n";
        }
    }
};

// Stream-id layout under the evaluation seed.
inline constexpr std::uint64_t kStreamEvalCalib = 1ULL << 32;
inline constexpr std::uint64_t kStreamEvalTrialBase = 1ULL << 33;

namespace detail {

inline std::uint64_t snr_stream_tag(double snr_db) {
    // Calibration stream depends only on the SNR point, so every scheme at a
    // given SNR sees the same noise variance.
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof snr_db);
    std::memcpy(&bits, &snr_db, sizeof bits);
    return kStreamEvalCalib ^ bits;
}

/// Per-trial detector: fills `errors[user]` for one coherent block.
using TrialFn = std::function<void(long trial, Rng& rng, std::vector<long>& errors,
                                   std::vector<long>& bits)>;

inline BerRow run_trials(Scheme scheme, double snr_db, const SystemConfig& sys,
                         long min_bit_errors, long max_trials,
                         std::uint64_t seed, int threads, const TrialFn& trial_fn) {
    BerRow row;
    row.scheme = scheme;
    row.snr_db = snr_db;
    row.per_user.resize(static_cast<size_t>(sys.M));
    std::vector<long> errors(static_cast<size_t>(sys.M), 0);
    std::vector<long> bits(static_cast<size_t>(sys.M), 0);

    const long chunk = 1024;
    long done = 0;
    while (done < max_trials) {
        const long batch = std::min(chunk, max_trials - done);
        if (threads <= 1) {
            Rng rng(0);  // re-seeded per trial below
            for (long t = done; t < done + batch; ++t) {
                Rng tr(seed, kStreamEvalTrialBase + static_cast<std::uint64_t>(t));
                trial_fn(t, tr, errors, bits);
            }
        } else {
            std::vector<std::vector<long>> werr(
                static_cast<size_t>(threads),
                std::vector<long>(static_cast<size_t>(sys.M), 0));
            std::vector<std::vector<long>> wbits = werr;
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) {
                pool.emplace_back([&, w] {
                    for (long t = done + w; t < done + batch; t += threads) {
                        Rng tr(seed, kStreamEvalTrialBase + static_cast<std::uint64_t>(t));
                        trial_fn(t, tr, werr[static_cast<size_t>(w)],
                                 wbits[static_cast<size_t>(w)]);
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (int w = 0; w < threads; ++w)
                for (int m = 0; m < sys.M; ++m) {
                    errors[static_cast<size_t>(m)] += werr[static_cast<size_t>(w)][static_cast<size_t>(m)];
                    bits[static_cast<size_t>(m)] += wbits[static_cast<size_t>(w)][static_cast<size_t>(m)];
                }
        }
        done += batch;
        long total_err = 0;
        for (long e : errors) total_err += e;
        if (total_err >= min_bit_errors) break;
    }
    row.trials = done;
    long total_err = 0;
    for (long e : errors) total_err += e;
    row.budget_exhausted = total_err < min_bit_errors;
    for (int m = 0; m < sys.M; ++m) {
        row.per_user[static_cast<size_t>(m)].bit_errors = errors[static_cast<size_t>(m)];
        row.per_user[static_cast<size_t>(m)].bits_tested = bits[static_cast<size_t>(m)];
    }
    return row;
}

/// Precomputed whitened projectors for fast repeated GLRT detection with
/// white noise; decisions match glrt_detect.
class GlrtSearcher {
   public:
    GlrtSearcher(const JointAlphabet& alphabet, double sigma2)
        : sigma2_(sigma2) {
        const long k_total = alphabet.size();
        if (k_total > kGlrtMaxAlphabet)
            throw AlphabetTooLarge("GlrtSearcher: alphabet exceeds guard");
        projectors_.reserve(static_cast<size_t>(k_total));
        alphabet_ = &alphabet;
        for (long k = 0; k < k_total; ++k) {
            const ComplexMatrix x = alphabet.codeword(k);
            const ComplexMatrix gram = x.adjoint() * x;
            ComplexMatrix sol;
            try {
                sol = solve_hermitian_psd(gram, ComplexMatrix(x.adjoint()));
            } catch (const Singular&) {
                sol = pseudo_solve_hermitian_psd(gram, ComplexMatrix(x.adjoint()));
            }
            projectors_.push_back(x * sol);  // T x T projector onto col(X_k)
        }
    }

    long detect(const ComplexMatrix& y_block) const {
        double best = std::numeric_limits<double>::infinity();
        long best_k = 0;
        for (long k = 0; k < static_cast<long>(projectors_.size()); ++k) {
            const double res =
                (y_block - projectors_[static_cast<size_t>(k)] * y_block)
                    .squaredNorm() /
                sigma2_;
            if (res < best) {
                best = res;
                best_k = k;
            }
        }
        return best_k;
    }

    const JointAlphabet& alphabet() const { return *alphabet_; }

   private:
    std::vector<ComplexMatrix> projectors_;
    const JointAlphabet* alphabet_ = nullptr;
    double sigma2_ = 1.0;
};

}  // namespace detail

/**
 * Monte-Carlo BER of one scheme at one SNR point: fresh channel and noise
 * per coherent block, stopping once min_bit_errors errors are collected or
 * the trial budget runs out (flagged, not fatal). The learned receiver sees
 * only the received vector; no channel state reaches the inference path.
 */
inline BerRow evaluate_ber(Scheme scheme, const Checkpoint* model,
                           const ExperimentConfig& cfg, double snr_db,
                           std::uint64_t seed, int threads = 1) {
    cfg.validate();
    const SystemConfig& sys = cfg.system;
    if ((scheme == Scheme::Jtrd || scheme == Scheme::Glrt) && model == nullptr)
        throw ConfigError("evaluate_ber: scheme requires a trained checkpoint");

    // Shared noise calibration: identical variance for every scheme.
    NoiseSpec noise = NoiseSpec::white(1.0);
    {
        const CodebookSet* cb = nullptr;
        CodebookSet fresh;
        if (model != nullptr) {
            cb = &model->codebooks;
        } else {
            Rng tmp(seed, 12345);
            fresh = init_codebooks(sys, InitScheme::symmetrical_interval(), tmp);
            cb = &fresh;
        }
        Rng calib(seed, detail::snr_stream_tag(snr_db));
        noise = calibrate_noise(sys, snr_db, *cb, cfg.channel, calib);
    }

    detail::TrialFn trial_fn;
    // Keep per-scheme precomputations alive for the duration of the run.
    std::shared_ptr<void> hold;

    switch (scheme) {
        case Scheme::Jtrd: {
            if (model->system.M != sys.M || model->system.N != sys.N ||
                model->system.T != sys.T || model->system.J != sys.J)
                throw ConfigError("evaluate_ber: checkpoint dimensions mismatch");
            const CodebookSet& cb = model->codebooks;
            const ReceiverNetwork& net = model->receiver;
            trial_fn = [&sys, &cb, &net, noise, &cfg](long, Rng& tr,
                                                      std::vector<long>& errors,
                                                      std::vector<long>& bits) {
                std::vector<int> indices(static_cast<size_t>(sys.M));
                for (int m = 0; m < sys.M; ++m)
                    indices[static_cast<size_t>(m)] = static_cast<int>(
                        tr.next_below(static_cast<std::uint64_t>(sys.L())));
                const TxForwardResult fwd = tx_forward(cb, indices);
                const ChannelRealization ch = sample_channel(cfg.channel, sys, tr);
                const RealVector y = transmit(fwd.X, ch, noise, tr);
                const std::vector<int> decided = hard_decision(rx_forward(net, y));
                for (int m = 0; m < sys.M; ++m) {
                    const std::vector<int> tx_bits = bits_from_codeword_column(
                        indices[static_cast<size_t>(m)], sys.J);
                    bits[static_cast<size_t>(m)] += sys.J;
                    for (int j = 0; j < sys.J; ++j)
                        if (decided[static_cast<size_t>(m * sys.J + j)] !=
                            tx_bits[static_cast<size_t>(j)])
                            ++errors[static_cast<size_t>(m)];
                }
            };
            break;
        }
        case Scheme::Glrt: {
            auto alphabet = std::make_shared<JointAlphabet>(
                JointAlphabet::from_codebooks(model->codebooks));
            auto searcher =
                std::make_shared<detail::GlrtSearcher>(*alphabet, noise.sigma2);
            hold = searcher;
            trial_fn = [&sys, &cfg, noise, alphabet, searcher](
                           long, Rng& tr, std::vector<long>& errors,
                           std::vector<long>& bits) {
                std::vector<int> digits(static_cast<size_t>(sys.M));
                for (int m = 0; m < sys.M; ++m)
                    digits[static_cast<size_t>(m)] = static_cast<int>(
                        tr.next_below(static_cast<std::uint64_t>(sys.L())));
                const long k = alphabet->index_of(digits);
                const ComplexMatrix x = alphabet->codeword(k);
                const ChannelRealization ch = sample_channel(cfg.channel, sys, tr);
                const ComplexMatrix v =
                    sample_standard_complex_gaussian(tr, sys.T, sys.N) *
                    std::sqrt(noise.sigma2);
                const long decided = searcher->detect(x * ch.H + v);
                const std::vector<int> ddigits = alphabet->digits(decided);
                for (int m = 0; m < sys.M; ++m) {
                    const std::vector<int> tx_bits = bits_from_codeword_column(
                        digits[static_cast<size_t>(m)], sys.J);
                    const std::vector<int> rx_bits = bits_from_codeword_column(
                        ddigits[static_cast<size_t>(m)], sys.J);
                    bits[static_cast<size_t>(m)] += sys.J;
                    for (int j = 0; j < sys.J; ++j)
                        if (tx_bits[static_cast<size_t>(j)] !=
                            rx_bits[static_cast<size_t>(j)])
                            ++errors[static_cast<size_t>(m)];
                }
            };
            break;
        }
        case Scheme::MmseCeMmse:
        case Scheme::MmseCeMlsd: {
            auto pilots = std::make_shared<PilotScheme>(PilotScheme::make(sys));
            hold = pilots;
            // Fair comparison: the pilot block consumes exactly the learned
            // transmitter's energy budget.
            double budget = 0.0;
            for (int m = 0; m < sys.M; ++m) budget += sys.alpha_p(m);
            if (std::abs(pilots->total_block_energy() - budget) > 1e-9 * budget)
                throw Error("evaluate_ber: pilot scheme violates energy budget");
            const bool use_mlsd = scheme == Scheme::MmseCeMlsd;
            const double prior_var = 1.0 / static_cast<double>(sys.M);
            trial_fn = [&sys, &cfg, noise, pilots, use_mlsd, prior_var](
                           long, Rng& tr, std::vector<long>& errors,
                           std::vector<long>& bits) {
                const int d_slots = pilots->data_slots;
                const int bps = bits_per_symbol(pilots->modulation);
                ComplexMatrix x = ComplexMatrix::Zero(sys.T, sys.M);
                x.topRows(sys.M) = pilots->pilot_block;
                std::vector<std::vector<int>> tx_bits(
                    static_cast<size_t>(sys.M * d_slots));
                for (int d = 0; d < d_slots; ++d) {
                    for (int m = 0; m < sys.M; ++m) {
                        const int v = static_cast<int>(
                            tr.next_below(1ULL << bps));
                        std::vector<int> b = value_to_bits(v, bps);
                        x(sys.M + d, m) =
                            pilots->symbol_scale[static_cast<size_t>(m)] *
                            modulate(b, pilots->modulation);
                        tx_bits[static_cast<size_t>(d * sys.M + m)] = std::move(b);
                    }
                }
                const ChannelRealization ch = sample_channel(cfg.channel, sys, tr);
                const ComplexMatrix v =
                    sample_standard_complex_gaussian(tr, sys.T, sys.N) *
                    std::sqrt(noise.sigma2);
                const ComplexMatrix y = x * ch.H + v;
                const ComplexMatrix h_est = mmse_channel_estimate(
                    y.topRows(sys.M), *pilots, noise, prior_var);
                std::unique_ptr<MlsdSearcher> searcher;
                if (use_mlsd) searcher = std::make_unique<MlsdSearcher>(h_est, *pilots);
                for (int d = 0; d < d_slots; ++d) {
                    const ComplexVector y_d = y.row(sys.M + d).transpose();
                    const std::vector<int> decided =
                        use_mlsd ? searcher->detect(y_d)
                                 : mmse_equalize_detect(y_d, h_est, noise, *pilots);
                    for (int m = 0; m < sys.M; ++m) {
                        const auto& sent = tx_bits[static_cast<size_t>(d * sys.M + m)];
                        bits[static_cast<size_t>(m)] += bps;
                        for (int j = 0; j < bps; ++j)
                            if (decided[static_cast<size_t>(m * bps + j)] !=
                                sent[static_cast<size_t>(j)])
                                ++errors[static_cast<size_t>(m)];
                    }
                }
            };
            break;
        }
        case Scheme::RandomGuess: {
            trial_fn = [&sys](long, Rng& tr, std::vector<long>& errors,
                              std::vector<long>& bits) {
                for (int m = 0; m < sys.M; ++m) {
                    bits[static_cast<size_t>(m)] += sys.J;
                    for (int j = 0; j < sys.J; ++j) {
                        const int sent = static_cast<int>(tr.next_u64() & 1);
                        const int guessed = static_cast<int>(tr.next_u64() & 1);
                        if (sent != guessed) ++errors[static_cast<size_t>(m)];
                    }
                }
            };
            break;
        }
    }

    return detail::run_trials(scheme, snr_db, sys, cfg.min_bit_errors,
                              cfg.max_trials, seed, threads, trial_fn);
}

/**
 * Evaluate every configured scheme at every SNR point. Row order is the
 * learned system first (when a checkpoint is given) followed by the
 * configured baselines, each swept across eval_snrs_db.
 */
inline BerReport sweep(const ExperimentConfig& cfg, const Checkpoint* model,
                       std::uint64_t seed, int threads = 1) {
    const auto start = std::chrono::steady_clock::now();
    BerReport report;
    report.seed = seed;
    std::vector<Scheme> schemes;
    if (model != nullptr) schemes.push_back(Scheme::Jtrd);
    for (Scheme b : cfg.baselines) schemes.push_back(b);
    for (Scheme s : schemes)
        for (double snr : cfg.eval_snrs_db)
            report.rows.push_back(evaluate_ber(s, model, cfg, snr, seed, threads));
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

// ---------------------------------------------------------------------------
// Initialization-comparison experiment
// ---------------------------------------------------------------------------

struct InitComparisonRun {
    std::uint64_t seed = 0;
    InitKind init = InitKind::Xavier;
    TrainLog log;
    long iterations = 0;
    bool converged = false;
    std::vector<double> final_ber;  // per user, from a dedicated snapshot
    double imbalance = 1.0;         // max/min per-user BER at convergence
};

struct InitComparisonResult {
    std::vector<InitComparisonRun> runs;
};

/**
 * Paired training runs differing only in the weight-initialization scheme,
 * reporting per-user convergence curves and the final per-user BER spread.
 */
inline InitComparisonResult init_comparison(const ExperimentConfig& cfg,
                                            const std::vector<std::uint64_t>& seeds,
                                            int final_snapshot_blocks = 4000) {
    if (seeds.size() < 3)
        throw ConfigError("init_comparison: need at least 3 seeds");
    InitComparisonResult result;
    for (std::uint64_t seed : seeds) {
        for (InitKind kind : {InitKind::Xavier, InitKind::SymmetricalInterval}) {
            ExperimentConfig run_cfg = cfg;
            run_cfg.train.seed = seed;
            if (run_cfg.train.ber_cadence <= 0)
                run_cfg.train.ber_cadence =
                    std::max<long>(1, run_cfg.train.max_iterations / 40);
            InitScheme scheme = kind == InitKind::Xavier
                                    ? InitScheme::xavier()
                                    : InitScheme::symmetrical_interval();
            Checkpoint ck = init_training(run_cfg.system, run_cfg.channel,
                                          run_cfg.train, scheme, run_cfg.hidden_sizes);
            TrainResult tr = train_until_converged(ck);

            InitComparisonRun run;
            run.seed = seed;
            run.init = kind;
            run.log = std::move(tr.log);
            run.iterations = tr.iterations;
            run.converged = tr.converged;
            Rng calib(seed, kStreamCalibration);
            const NoiseSpec noise =
                calibrate_noise(ck.system, run_cfg.train.train_snr_db,
                                ck.codebooks, ck.channel, calib);
            Rng snap(seed, kStreamSnapshotBase - 1);
            run.final_ber = per_user_ber_snapshot(ck.codebooks, ck.receiver,
                                                  ck.system, ck.channel, noise,
                                                  final_snapshot_blocks, snap);
            // Counting floor keeps the ratio finite when a user is error-free.
            const double floor =
                1.0 / (static_cast<double>(final_snapshot_blocks) * ck.system.J);
            double lo = 1.0, hi = 0.0;
            for (double b : run.final_ber) {
                lo = std::min(lo, std::max(b, floor));
                hi = std::max(hi, std::max(b, floor));
            }
            run.imbalance = hi / lo;
            result.runs.push_back(std::move(run));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Coherent-block-length study
// ---------------------------------------------------------------------------

struct BlockLengthPoint {
    int T = 0;
    double snr_db = 0.0;
    BerRow ber;
    long train_iterations = 0;
};

/**
 * Train one system per block length and evaluate at the first configured
 * SNR. Longer blocks add time-domain energy (alpha sums to T), so the BER
 * is expected to be non-increasing in T.
 */
inline std::vector<BlockLengthPoint> block_length_study(
    const ExperimentConfig& cfg, const std::vector<int>& t_values,
    std::uint64_t eval_seed, int threads = 1) {
    std::vector<BlockLengthPoint> points;
    for (int t : t_values) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.system = SystemConfig::make(cfg.system.M, cfg.system.N, t,
                                            cfg.system.J, cfg.system.P);
        double budget = 0.0;
        for (int m = 0; m < run_cfg.system.M; ++m)
            budget += run_cfg.system.alpha_p(m);
        if (std::abs(budget - t * cfg.system.P) > 1e-9)
            throw Error("block_length_study: energy budget must scale with T");
        Checkpoint ck = init_training(run_cfg.system, run_cfg.channel,
                                      run_cfg.train, cfg.init, run_cfg.hidden_sizes);
        TrainResult tr = train_until_converged(ck);
        BlockLengthPoint p;
        p.T = t;
        p.snr_db = cfg.eval_snrs_db.front();
        p.train_iterations = tr.iterations;
        p.ber = evaluate_ber(Scheme::Jtrd, &ck, run_cfg, p.snr_db, eval_seed, threads);
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace jtrd
