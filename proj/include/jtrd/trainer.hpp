#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "jtrd/channel.hpp"
#include "jtrd/config.hpp"
#include "jtrd/core.hpp"
#include "jtrd/receiver.hpp"
#include "jtrd/rng.hpp"
#include "jtrd/transmitter.hpp"

namespace jtrd {

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Learning-rate decay with a floor: eta_init / iteration^(1/4), never below
/// eta_low.
inline double lr_schedule(double eta_init, long iteration, double eta_low) {
    if (iteration < 1) throw ConfigError("lr_schedule: iteration must be >= 1");
    const double eta =
        eta_init / std::pow(static_cast<double>(iteration), 0.25);
    return std::max(eta, eta_low);
}

/**
 * Push the loss gradient at the receiver input back through the (known)
 * channel to the transmitted block: the adjoint of the slot-wise real
 * channel operator, reshaped so column m is the gradient of user m's
 * stacked codeword. Channel knowledge enters the pipeline only here.
 */
inline RealMatrix grad_through_channel(const ChannelRealization& ch,
                                       const RealVector& grad_y) {
    const Eigen::Index m = ch.H.rows(), n = ch.H.cols();
    if (grad_y.size() % (2 * n) != 0)
        throw DimensionMismatch("grad_through_channel: gradient length");
    const Eigen::Index t_len = grad_y.size() / (2 * n);
    const RealMatrix g = ch.real_slot_operator();
    RealMatrix grad_x(2 * t_len, m);
    for (Eigen::Index t = 0; t < t_len; ++t) {
        RealVector slot = g.transpose() * grad_y.segment(2 * n * t, 2 * n);
        grad_x.row(t) = slot.head(m).transpose();
        grad_x.row(t_len + t) = slot.tail(m).transpose();
    }
    return grad_x;
}

/// Optimizer state for every trainable tensor in the system.
struct OptimizerStates {
    std::vector<AdamState> codebooks;
    std::vector<AdamState> weights;
    std::vector<AdamState> biases;

    static OptimizerStates like(const CodebookSet& cb,
                                const ReceiverNetwork& net) {
        OptimizerStates st;
        for (const auto& w : cb.W) st.codebooks.push_back(AdamState::like(w));
        for (const auto& l : net.layers) {
            st.weights.push_back(AdamState::like(l.weights));
            st.biases.push_back(AdamState::like(l.bias));
        }
        return st;
    }
};

/**
 * One mini-batch iteration: draw random bits and fresh channels, run
 * transmitter -> channel -> receiver, backpropagate through all of it and
 * apply a single Adam update at the scheduled rate. Returns the batch loss.
 */
inline double train_step(CodebookSet& cb, ReceiverNetwork& net,
                         OptimizerStates& states, const SystemConfig& cfg,
                         const TrainConfig& tcfg, const ChannelModel& model,
                         const NoiseSpec& noise, long iteration, Rng& rng) {
    const int b = tcfg.batch_size;
    const int rx_dim = cfg.rx_dim();
    const int bits_dim = cfg.bits_total();

    RealMatrix inputs(b, rx_dim);
    RealMatrix targets(b, bits_dim);
    std::vector<std::vector<int>> batch_indices(static_cast<size_t>(b));
    std::vector<RealMatrix> batch_z(static_cast<size_t>(b));
    std::vector<ChannelRealization> batch_ch;
    batch_ch.reserve(static_cast<size_t>(b));

    ChannelRealization shared;
    if (tcfg.per_batch_channel) shared = sample_channel(model, cfg, rng);

    for (int i = 0; i < b; ++i) {
        std::vector<int> indices(static_cast<size_t>(cfg.M));
        for (int m = 0; m < cfg.M; ++m) {
            const int col =
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.L())));
            indices[static_cast<size_t>(m)] = col;
            const std::vector<int> bits = bits_from_codeword_column(col, cfg.J);
            for (int j = 0; j < cfg.J; ++j)
                targets(i, m * cfg.J + j) = bits[static_cast<size_t>(j)];
        }
        TxForwardResult fwd = tx_forward(cb, indices);
        const ChannelRealization& ch =
            tcfg.per_batch_channel
                ? shared
                : batch_ch.emplace_back(sample_channel(model, cfg, rng));
        inputs.row(i) = transmit(fwd.X, ch, noise, rng).transpose();
        batch_indices[static_cast<size_t>(i)] = std::move(indices);
        batch_z[static_cast<size_t>(i)] = std::move(fwd.Z);
    }

    RxCache cache;
    const RealMatrix s_hat = rx_forward_batch(net, inputs, cache);
    const double loss = bce_loss(s_hat, targets);
    if (!std::isfinite(loss))
        throw NonFiniteLoss("train_step: loss diverged at iteration " +
                            std::to_string(iteration));

    RxGradients rxg = rx_backward(net, cache, targets);

    std::vector<RealMatrix> cb_grads;
    cb_grads.reserve(cb.W.size());
    for (const auto& w : cb.W) cb_grads.push_back(RealMatrix::Zero(w.rows(), w.cols()));
    for (int i = 0; i < b; ++i) {
        const ChannelRealization& ch =
            tcfg.per_batch_channel ? shared
                                   : batch_ch[static_cast<size_t>(i)];
        const RealVector grad_y = rxg.input.row(i).transpose();
        const RealMatrix grad_x = grad_through_channel(ch, grad_y);
        tx_backward_accumulate(cb, batch_indices[static_cast<size_t>(i)],
                               batch_z[static_cast<size_t>(i)], grad_x, cb_grads);
    }

    const double lr = lr_schedule(tcfg.eta_init, iteration, tcfg.eta_low);
    for (size_t m = 0; m < cb.W.size(); ++m)
        adam_step(cb.W[m], cb_grads[m], states.codebooks[m], lr);
    for (size_t li = 0; li < net.layers.size(); ++li) {
        adam_step(net.layers[li].weights, rxg.weights[li], states.weights[li], lr);
        adam_step(net.layers[li].bias, rxg.bias[li], states.biases[li], lr);
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training loop with convergence tracking
// ---------------------------------------------------------------------------

struct TrainLogRow {
    long iteration = 0;
    double loss = 0.0;
    double lr = 0.0;
    bool has_ber = false;
    std::vector<double> ber_per_user;
};

struct TrainLog {
    int users = 0;
    std::vector<TrainLogRow> rows;

    void write_csv(std::ostream& os) const {
        os << "iteration,loss,lr";
        for (int m = 1; m <= users; ++m) os << ",ber_user_" << m;
        os << "\n";
        for (const auto& r : rows) {
            os << r.iteration << ',' << format_double(r.loss) << ','
               << format_double(r.lr);
            for (int m = 0; m < users; ++m) {
                os << ',';
                if (r.has_ber) os << format_double(r.ber_per_user[static_cast<size_t>(m)]);
            }
            os << "\n";
        }
    }
};

/// Per-user bit error rate of the current model over a fixed number of
/// Monte-Carlo blocks. Inference only: the receiver sees nothing but y.
inline std::vector<double> per_user_ber_snapshot(
    const CodebookSet& cb, const ReceiverNetwork& net, const SystemConfig& cfg,
    const ChannelModel& model, const NoiseSpec& noise, int blocks, Rng& rng) {
    std::vector<long> errors(static_cast<size_t>(cfg.M), 0);
    std::vector<int> indices(static_cast<size_t>(cfg.M));
    for (int blk = 0; blk < blocks; ++blk) {
        for (int m = 0; m < cfg.M; ++m)
            indices[static_cast<size_t>(m)] =
                static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.L())));
        const TxForwardResult fwd = tx_forward(cb, indices);
        const ChannelRealization ch = sample_channel(model, cfg, rng);
        const RealVector y = transmit(fwd.X, ch, noise, rng);
        const std::vector<int> decided = hard_decision(rx_forward(net, y));
        for (int m = 0; m < cfg.M; ++m) {
            const std::vector<int> bits =
                bits_from_codeword_column(indices[static_cast<size_t>(m)], cfg.J);
            for (int j = 0; j < cfg.J; ++j)
                if (decided[static_cast<size_t>(m * cfg.J + j)] !=
                    bits[static_cast<size_t>(j)])
                    ++errors[static_cast<size_t>(m)];
        }
    }
    std::vector<double> ber(static_cast<size_t>(cfg.M));
    for (int m = 0; m < cfg.M; ++m)
        ber[static_cast<size_t>(m)] =
            static_cast<double>(errors[static_cast<size_t>(m)]) /
            (static_cast<double>(blocks) * cfg.J);
    return ber;
}

/// Everything needed to resume training or evaluate a trained system.
struct Checkpoint {
    SystemConfig system;
    TrainConfig train;
    ChannelModel channel;
    std::vector<int> hidden_sizes;
    CodebookSet codebooks;
    ReceiverNetwork receiver;
    OptimizerStates states;
    long iteration = 0;
};

// Stream-id layout under the master training seed.
inline constexpr std::uint64_t kStreamCodebookInit = 1;
inline constexpr std::uint64_t kStreamReceiverInit = 2;
inline constexpr std::uint64_t kStreamTraining = 3;
inline constexpr std::uint64_t kStreamCalibration = 4;
inline constexpr std::uint64_t kStreamSnapshotBase = 1ULL << 40;

/// Fresh randomly-initialized system ready for training.
inline Checkpoint init_training(const SystemConfig& cfg, const ChannelModel& model,
                                const TrainConfig& tcfg,
                                const InitScheme& scheme,
                                const std::vector<int>& hidden_sizes) {
    cfg.validate();
    model.validate();
    tcfg.validate();
    Checkpoint ck;
    ck.system = cfg;
    ck.train = tcfg;
    ck.channel = model;
    ck.hidden_sizes = hidden_sizes;
    Rng cb_rng(tcfg.seed, kStreamCodebookInit);
    ck.codebooks = init_codebooks(cfg, scheme, cb_rng);
    Rng net_rng(tcfg.seed, kStreamReceiverInit);
    ck.receiver = ReceiverNetwork::make(cfg.rx_dim(), hidden_sizes,
                                        cfg.bits_total(), net_rng);
    ck.states = OptimizerStates::like(ck.codebooks, ck.receiver);
    ck.iteration = 0;
    return ck;
}

struct TrainResult {
    TrainLog log;
    bool converged = false;
    long iterations = 0;
    double final_loss = 0.0;
};

/**
 * Train until the windowed mean loss stops moving (relative change below
 * convergence_tol between consecutive windows) or max_iterations is hit.
 */
inline TrainResult train_until_converged(Checkpoint& ck) {
    const TrainConfig& tcfg = ck.train;
    tcfg.validate();
    Rng calib_rng(tcfg.seed, kStreamCalibration);
    const NoiseSpec noise = calibrate_noise(ck.system, tcfg.train_snr_db,
                                            ck.codebooks, ck.channel, calib_rng);
    Rng rng(tcfg.seed, kStreamTraining);

    TrainResult result;
    result.log.users = ck.system.M;
    double prev_window_mean = -1.0;
    double window_acc = 0.0;
    long window_count = 0;

    for (long it = ck.iteration + 1; it <= tcfg.max_iterations; ++it) {
        const double loss = train_step(ck.codebooks, ck.receiver, ck.states,
                                       ck.system, tcfg, ck.channel, noise, it, rng);
        ck.iteration = it;
        result.iterations = it;
        result.final_loss = loss;

        TrainLogRow row;
        row.iteration = it;
        row.loss = loss;
        row.lr = lr_schedule(tcfg.eta_init, it, tcfg.eta_low);
        if (tcfg.ber_cadence > 0 && it % tcfg.ber_cadence == 0) {
            Rng snap_rng(tcfg.seed, kStreamSnapshotBase + static_cast<std::uint64_t>(it));
            row.ber_per_user = per_user_ber_snapshot(
                ck.codebooks, ck.receiver, ck.system, ck.channel, noise,
                tcfg.ber_cadence_blocks, snap_rng);
            row.has_ber = true;
        }
        result.log.rows.push_back(std::move(row));

        window_acc += loss;
        if (++window_count == tcfg.convergence_window) {
            const double mean = window_acc / static_cast<double>(window_count);
            if (prev_window_mean >= 0.0 &&
                std::abs(mean - prev_window_mean) <
                    tcfg.convergence_tol * prev_window_mean) {
                result.converged = true;
                break;
            }
            prev_window_mean = mean;
            window_acc = 0.0;
            window_count = 0;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const RealMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline RealMatrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.size();
    if (rows == 0) return RealMatrix(0, 0);
    const auto cols = j.at(0).size();
    RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols)
            throw CorruptFile("matrix_from_json: ragged rows");
        for (size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j.at(r).at(c).get<double>();
    }
    return m;
}

inline nlohmann::json adam_to_json(const AdamState& s) {
    return {{"m", matrix_to_json(s.m)}, {"v", matrix_to_json(s.v)}, {"t", s.t}};
}

inline AdamState adam_from_json(const nlohmann::json& j) {
    AdamState s;
    s.m = matrix_from_json(j.at("m"));
    s.v = matrix_from_json(j.at("v"));
    s.t = j.at("t").get<long>();
    return s;
}

}  // namespace detail

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["system_config"] = {{"M", ck.system.M}, {"N", ck.system.N},
                          {"T", ck.system.T}, {"J", ck.system.J},
                          {"P", ck.system.P}, {"alpha", ck.system.alpha}};
    j["train_config"] = {{"batch_size", ck.train.batch_size},
                         {"eta_init", ck.train.eta_init},
                         {"eta_low", ck.train.eta_low},
                         {"train_snr_db", ck.train.train_snr_db},
                         {"max_iterations", ck.train.max_iterations},
                         {"convergence_window", ck.train.convergence_window},
                         {"convergence_tol", ck.train.convergence_tol},
                         {"seed", ck.train.seed},
                         {"per_batch_channel", ck.train.per_batch_channel},
                         {"ber_cadence", ck.train.ber_cadence},
                         {"ber_cadence_blocks", ck.train.ber_cadence_blocks}};
    j["channel_model"] = {
        {"kind", ck.channel.kind == ChannelKind::IidGaussian ? "iid_gaussian"
                                                             : "kronecker_exponential"},
        {"rho", ck.channel.rho}};
    j["hidden_sizes"] = ck.hidden_sizes;
    nlohmann::json cbs = nlohmann::json::array();
    for (const auto& w : ck.codebooks.W) cbs.push_back(detail::matrix_to_json(w));
    j["codebooks"] = {{"alphaP", ck.codebooks.alphaP}, {"W", cbs}};
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : ck.receiver.layers) {
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) bias.push_back(l.bias(i));
        layers.push_back({{"weights", detail::matrix_to_json(l.weights)},
                          {"bias", bias},
                          {"activation", activation_name(l.activation)}});
    }
    j["receiver_layers"] = layers;
    nlohmann::json adam;
    adam["codebooks"] = nlohmann::json::array();
    for (const auto& s : ck.states.codebooks)
        adam["codebooks"].push_back(detail::adam_to_json(s));
    adam["weights"] = nlohmann::json::array();
    for (const auto& s : ck.states.weights)
        adam["weights"].push_back(detail::adam_to_json(s));
    adam["biases"] = nlohmann::json::array();
    for (const auto& s : ck.states.biases)
        adam["biases"].push_back(detail::adam_to_json(s));
    j["adam_state"] = adam;
    j["iteration"] = ck.iteration;
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw VersionMismatch("checkpoint version " + std::to_string(version) +
                                  " unsupported");
        Checkpoint ck;
        const auto& sc = j.at("system_config");
        ck.system.M = sc.at("M").get<int>();
        ck.system.N = sc.at("N").get<int>();
        ck.system.T = sc.at("T").get<int>();
        ck.system.J = sc.at("J").get<int>();
        ck.system.P = sc.at("P").get<double>();
        ck.system.alpha = sc.at("alpha").get<std::vector<double>>();
        const auto& tc = j.at("train_config");
        ck.train.batch_size = tc.at("batch_size").get<int>();
        ck.train.eta_init = tc.at("eta_init").get<double>();
        ck.train.eta_low = tc.at("eta_low").get<double>();
        ck.train.train_snr_db = tc.at("train_snr_db").get<double>();
        ck.train.max_iterations = tc.at("max_iterations").get<long>();
        ck.train.convergence_window = tc.at("convergence_window").get<long>();
        ck.train.convergence_tol = tc.at("convergence_tol").get<double>();
        ck.train.seed = tc.at("seed").get<std::uint64_t>();
        ck.train.per_batch_channel = tc.at("per_batch_channel").get<bool>();
        ck.train.ber_cadence = tc.at("ber_cadence").get<long>();
        ck.train.ber_cadence_blocks = tc.at("ber_cadence_blocks").get<int>();
        const auto& cm = j.at("channel_model");
        const std::string kind = cm.at("kind").get<std::string>();
        if (kind == "iid_gaussian")
            ck.channel.kind = ChannelKind::IidGaussian;
        else if (kind == "kronecker_exponential")
            ck.channel.kind = ChannelKind::KroneckerExponential;
        else
            throw CorruptFile("unknown channel kind: " + kind);
        ck.channel.rho = cm.at("rho").get<double>();
        ck.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
        ck.codebooks.alphaP = j.at("codebooks").at("alphaP").get<std::vector<double>>();
        for (const auto& w : j.at("codebooks").at("W"))
            ck.codebooks.W.push_back(detail::matrix_from_json(w));
        for (const auto& l : j.at("receiver_layers")) {
            DenseLayer layer;
            layer.weights = detail::matrix_from_json(l.at("weights"));
            const auto& bias = l.at("bias");
            layer.bias.resize(static_cast<Eigen::Index>(bias.size()));
            for (size_t i = 0; i < bias.size(); ++i)
                layer.bias(static_cast<Eigen::Index>(i)) = bias.at(i).get<double>();
            layer.activation = activation_from_name(l.at("activation").get<std::string>());
            ck.receiver.layers.push_back(std::move(layer));
        }
        const auto& adam = j.at("adam_state");
        for (const auto& s : adam.at("codebooks"))
            ck.states.codebooks.push_back(detail::adam_from_json(s));
        for (const auto& s : adam.at("weights"))
            ck.states.weights.push_back(detail::adam_from_json(s));
        for (const auto& s : adam.at("biases"))
            ck.states.biases.push_back(detail::adam_from_json(s));
        ck.iteration = j.at("iteration").get<long>();
        ck.system.validate();
        ck.receiver.validate();
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("save_checkpoint: cannot open " + path);
    out << checkpoint_to_json(ck).dump(1) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorruptFile("load_checkpoint: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("load_checkpoint: ") + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace jtrd
