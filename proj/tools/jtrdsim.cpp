// Command-line front end: training, BER sweeps, codebook analysis and the
// initialization / block-length experiments, all driven by a JSON config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jtrd/jtrd.hpp"

namespace fs = std::filesystem;
using namespace jtrd;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

std::string csv_of(const BerReport& report) {
    std::ostringstream os;
    report.write_csv(os);
    return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << cfg.system.M << '|' << cfg.system.N << '|' << cfg.system.T << '|'
       << cfg.system.J << '|' << cfg.system.P << '|' << cfg.train.seed << '|'
       << cfg.train.train_snr_db << '|' << static_cast<int>(cfg.channel.kind)
       << '|' << cfg.channel.rho;
    return std::hash<std::string>{}(os.str());
}

int run_train(const ExperimentConfig& cfg, const fs::path& out_dir) {
    Checkpoint ck = init_training(cfg.system, cfg.channel, cfg.train, cfg.init,
                                  cfg.hidden_sizes);
    std::cout << "training M=" << cfg.system.M << " N=" << cfg.system.N
              << " T=" << cfg.system.T << " J=" << cfg.system.J << " at "
              << cfg.train.train_snr_db << " dB, seed " << cfg.train.seed
              << "\n";
    const TrainResult result = train_until_converged(ck);
    std::cout << (result.converged ? "converged" : "stopped") << " after "
              << result.iterations << " iterations, loss "
              << result.final_loss << "\n";
    std::ostringstream log;
    result.log.write_csv(log);
    write_file(out_dir / "train_log.csv", log.str());
    save_checkpoint(ck, (out_dir / "checkpoint.json").string());
    write_file(out_dir / "codebooks.json", export_codebooks(ck.codebooks).dump(1));
    return 0;
}

int run_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint,
                 double snr_override, bool has_snr, std::uint64_t seed,
                 int threads, const fs::path& out_dir) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    ExperimentConfig run_cfg = cfg;
    run_cfg.system = ck.system;
    BerReport report;
    report.seed = seed;
    const std::vector<double> snrs =
        has_snr ? std::vector<double>{snr_override} : cfg.eval_snrs_db;
    for (double snr : snrs) {
        const BerRow row = evaluate_ber(Scheme::Jtrd, &ck, run_cfg, snr, seed, threads);
        const BerCell agg = row.aggregate();
        std::cout << "JTRD @ " << snr << " dB: ber=" << agg.ber()
                  << " (" << agg.bit_errors << "/" << agg.bits_tested
                  << (row.budget_exhausted ? ", budget exhausted" : "") << ")\n";
        report.rows.push_back(row);
    }
    write_file(out_dir / "ber.csv", csv_of(report));
    return 0;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& checkpoint,
              std::uint64_t seed, int threads, const fs::path& out_dir) {
    Checkpoint ck;
    const Checkpoint* model = nullptr;
    if (!checkpoint.empty()) {
        ck = load_checkpoint(checkpoint);
        model = &ck;
    }
    ExperimentConfig run_cfg = cfg;
    if (model != nullptr) run_cfg.system = ck.system;
    BerReport report = sweep(run_cfg, model, seed, threads);
    report.config_hash = std::to_string(config_hash(run_cfg));
    write_file(out_dir / "ber.csv", csv_of(report));

    nlohmann::json meta = {{"seed", report.seed},
                           {"config_hash", report.config_hash},
                           {"wall_clock_seconds", report.wall_clock_seconds}};
    write_file(out_dir / "ber_meta.json", meta.dump(1));

    // Aggregate BER per scheme across the sweep, one column per scheme.
    std::vector<Scheme> schemes;
    for (const auto& row : report.rows)
        if (schemes.empty() || schemes.back() != row.scheme)
            schemes.push_back(row.scheme);
    std::ostringstream fig;
    fig << "snr_db";
    for (Scheme s : schemes) fig << ',' << scheme_name(s);
    fig << "\n";
    for (double snr : run_cfg.eval_snrs_db) {
        fig << format_double(snr);
        for (Scheme s : schemes) {
            for (const auto& row : report.rows)
                if (row.scheme == s && row.snr_db == snr)
                    fig << ',' << format_double(row.aggregate().ber());
        }
        fig << "\n";
    }
    write_file(out_dir / "plot_data" / "fig7.csv", fig.str());
    for (const auto& row : report.rows) {
        const BerCell agg = row.aggregate();
        std::cout << scheme_name(row.scheme) << " @ " << row.snr_db
                  << " dB: ber=" << agg.ber() << "\n";
    }
    return 0;
}

int run_analyze(const std::string& checkpoint, const fs::path& out_dir) {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const JointAlphabet alphabet = JointAlphabet::from_codebooks(ck.codebooks);
    const CodebookQuality q =
        codebook_quality(alphabet, NoiseSpec::white(1.0), ck.system.N);
    nlohmann::json pairs = nlohmann::json::array();
    long idx = 0;
    for (long i = 0; i < alphabet.size(); ++i)
        for (long j = 0; j < alphabet.size(); ++j) {
            if (i == j) continue;
            pairs.push_back({{"i", i},
                             {"j", j},
                             {"lambda_min", q.lambda_values[static_cast<size_t>(idx)]}});
            ++idx;
        }
    nlohmann::json out = {{"lambda_min_min", q.min_lambda},
                          {"worst_pair", {q.worst_i, q.worst_j}},
                          {"pairs", pairs},
                          {"histogram_bins",
                           {{"lo", q.histogram_lo},
                            {"hi", q.histogram_hi},
                            {"counts", q.histogram}}}};
    write_file(out_dir / "analysis.json", out.dump(1));
    std::cout << "worst pair (" << q.worst_i << "," << q.worst_j
              << ") lambda_min=" << q.min_lambda << " over " << q.pairs
              << " ordered pairs\n";
    return 0;
}

int run_init_compare(const ExperimentConfig& cfg,
                     const std::vector<std::uint64_t>& seeds,
                     const fs::path& out_dir) {
    const InitComparisonResult result = init_comparison(cfg, seeds);
    std::ostringstream curves;
    curves << "init,seed,iteration";
    for (int m = 1; m <= cfg.system.M; ++m) curves << ",ber_user_" << m;
    curves << "\n";
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& run : result.runs) {
        const char* name =
            run.init == InitKind::Xavier ? "xavier" : "symmetrical_interval";
        for (const auto& row : run.log.rows) {
            if (!row.has_ber) continue;
            curves << name << ',' << run.seed << ',' << row.iteration;
            for (double b : row.ber_per_user) curves << ',' << format_double(b);
            curves << "\n";
        }
        summary.push_back({{"init", name},
                           {"seed", run.seed},
                           {"iterations", run.iterations},
                           {"converged", run.converged},
                           {"final_ber", run.final_ber},
                           {"imbalance", run.imbalance}});
        std::cout << name << " seed " << run.seed << ": imbalance "
                  << run.imbalance << " after " << run.iterations
                  << " iterations\n";
    }
    write_file(out_dir / "plot_data" / "fig2.csv", curves.str());
    write_file(out_dir / "init_compare.json", summary.dump(1));
    return 0;
}

int run_block_length(const ExperimentConfig& cfg, const std::vector<int>& t_values,
                     std::uint64_t seed, int threads, const fs::path& out_dir) {
    const auto points = block_length_study(cfg, t_values, seed, threads);
    std::ostringstream os;
    os << "T,snr_db,bits,errors,ber,ci,train_iterations\n";
    for (const auto& p : points) {
        const BerCell agg = p.ber.aggregate();
        os << p.T << ',' << format_double(p.snr_db) << ',' << agg.bits_tested
           << ',' << agg.bit_errors << ',' << format_double(agg.ber()) << ','
           << format_double(agg.ci()) << ',' << p.train_iterations << "\n";
        std::cout << "T=" << p.T << ": ber=" << agg.ber() << "\n";
    }
    write_file(out_dir / "block_length.csv", os.str());
    write_file(out_dir / "plot_data" / "fig5.csv", os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned multiuser transmitter / non-coherent receiver simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string checkpoint_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    bool seed_given = false;
    int threads = 1;
    bool deterministic = false;
    double snr_db = 0.0;
    bool snr_given = false;
    std::vector<std::uint64_t> seeds;
    std::vector<int> t_values;

    app.add_option("--config", config_path, "JSON experiment config")->required();
    app.add_option("--out", out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads for Monte-Carlo trials");
    app.add_flag("--deterministic", deterministic,
                 "force single-threaded, fixed-seed execution");

    auto* train_cmd = app.add_subcommand("train", "train a system end to end");
    auto* eval_cmd = app.add_subcommand("evaluate", "BER of a trained checkpoint");
    eval_cmd->add_option("--checkpoint", checkpoint_path, "trained model")->required();
    eval_cmd->add_option("--snr", snr_db, "single SNR point (dB)")->each(
        [&](const std::string&) { snr_given = true; });
    auto* sweep_cmd = app.add_subcommand("sweep", "all schemes across all SNRs");
    sweep_cmd->add_option("--checkpoint", checkpoint_path,
                          "trained model (omit for baselines only)");
    auto* analyze_cmd = app.add_subcommand("analyze", "codebook pairwise-error geometry");
    analyze_cmd->add_option("--checkpoint", checkpoint_path, "trained model")->required();
    auto* init_cmd = app.add_subcommand("init-compare",
                                        "Xavier vs symmetrical-interval convergence");
    init_cmd->add_option("--seeds", seeds, "explicit seed list (>= 3)");
    auto* block_cmd = app.add_subcommand("block-length", "BER versus coherent-block length");
    block_cmd->add_option("--t-values", t_values, "block lengths to train")->required();

    CLI11_PARSE(app, argc, argv);
    seed_given = seed_opt->count() > 0;

    try {
        ExperimentConfig cfg = load_experiment(config_path);
        if (deterministic) threads = 1;
        if (seed_given) cfg.train.seed = seed;
        const std::uint64_t eval_seed = seed_given ? seed : cfg.train.seed;
        const fs::path out(out_dir);
        fs::create_directories(out);

        if (train_cmd->parsed()) return run_train(cfg, out);
        if (eval_cmd->parsed())
            return run_evaluate(cfg, checkpoint_path, snr_db, snr_given,
                                eval_seed, threads, out);
        if (sweep_cmd->parsed())
            return run_sweep(cfg, checkpoint_path, eval_seed, threads, out);
        if (analyze_cmd->parsed()) return run_analyze(checkpoint_path, out);
        if (init_cmd->parsed()) {
            if (seeds.empty())
                for (std::uint64_t s = 0; s < 5; ++s) seeds.push_back(eval_seed + s);
            return run_init_compare(cfg, seeds, out);
        }
        if (block_cmd->parsed())
            return run_block_length(cfg, t_values, eval_seed, threads, out);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CorruptFile& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const VersionMismatch& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
