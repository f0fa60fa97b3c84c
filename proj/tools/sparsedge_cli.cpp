// Command-line driver: train runs, interleaver verification, throughput
// estimates, and fixed-vs-float comparisons.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsedge/sparsedge.hpp"

namespace fs = std::filesystem;
using namespace sparsedge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

Dataset load_split(const std::string& dir, bool training, const TrainConfig& cfg) {
    const std::string img =
        dir + (training ? "/train-images-idx3-ubyte" : "/t10k-images-idx3-ubyte");
    const std::string lab =
        dir + (training ? "/train-labels-idx1-ubyte" : "/t10k-labels-idx1-ubyte");
    const int limit = training ? cfg.train_size : cfg.test_size;
    return load_mnist(img, lab, cfg.topo.layer_sizes.front(),
                      cfg.topo.layer_sizes.back(), limit);
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
    const RunConfig rc = parse_run_config_file(config_path);
    if (rc.mnist_dir.empty()) {
        std::cerr << "no mnist_dir in config and MNIST_DIR unset\n";
        return kExitValidation;
    }
    const Dataset train_ds = load_split(rc.mnist_dir, true, rc.train);
    const Dataset test_ds = load_split(rc.mnist_dir, false, rc.train);

    fs::create_directories(out_dir);
    TrainResult result = train(rc.train, train_ds, test_ds);
    save_metrics_csv(out_dir + "/metrics.csv", result.metrics);
    save_checkpoint(out_dir + "/checkpoint.txt", result.net);
    for (const auto& r : result.metrics.records)
        std::cout << "epoch " << r.epoch << ": train_acc=" << r.train_accuracy
                  << " test_acc=" << r.test_accuracy
                  << " mean_loss=" << r.mean_loss << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& interleaver_path, const std::string& config_path) {
    std::vector<InterleaverMap> maps;
    if (!interleaver_path.empty()) {
        maps.push_back(load_interleaver(interleaver_path));
    } else {
        const RunConfig rc = parse_run_config_file(config_path);
        maps = generate_maps(rc.train);
        if (rc.train.hardware()) {
            const auto report = validate_hardware(rc.train.topo, *rc.train.hw);
            std::cout << report.describe();
            if (!report.ok()) return kExitValidation;
        }
    }
    bool all_ok = true;
    for (std::size_t j = 0; j < maps.size(); ++j) {
        const auto report = verify(maps[j]);
        if (maps.size() > 1) std::cout << "junction " << (j + 1) << ":\n";
        std::cout << report.describe();
        all_ok = all_ok && report.all_ok();
    }
    return all_ok ? kExitOk : kExitValidation;
}

int cmd_estimate(const std::vector<int>& layers, const std::vector<double>& rho,
                 const std::vector<std::int64_t>& edges,
                 const std::vector<std::int64_t>& z, double clock_mhz,
                 std::int64_t images, int epochs, double baseline_seconds,
                 const std::string& csv_path) {
    PerfScenario s;
    s.layer_sizes = layers;
    s.connectivity = rho;
    s.edge_counts = edges;
    s.z_list = z;
    s.clock_hz = clock_mhz * 1e6;
    s.images_per_epoch = images;
    s.epochs = epochs;
    const PerfReport report = estimate(s);
    std::cout << report.describe();
    std::cout << "pipeline parallelism: "
              << pipeline_parallelism(s.junction_count()) << " concurrent ops\n";
    if (baseline_seconds > 0)
        std::cout << "speedup vs baseline: " << speedup(report, baseline_seconds)
                  << "x\n";
    if (!csv_path.empty()) {
        std::ofstream os(csv_path);
        if (!os) throw IoError(IoError::Code::open_failed, "cannot write " + csv_path);
        os << "cycles_per_image,time_per_image_s,epoch_time_s,total_time_s\n"
           << report.cycles_per_image << "," << report.time_per_image_s << ","
           << report.epoch_time_s << "," << report.total_time_s << "\n";
    }
    return kExitOk;
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const std::string& out_csv) {
    const MetricsSeries a = load_metrics_csv(path_a);
    const MetricsSeries b = load_metrics_csv(path_b);
    const DiffSeries d = compare_runs(a, b);
    save_diff_csv(out_csv, d);
    std::cout << "epochs: " << d.diffs.size() << "\nmean diff: " << d.mean
              << "\nmean |diff|: " << d.mean_abs << "\nmin: " << d.min
              << "\nmax: " << d.max << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured-sparse edge-processing trainer and simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, interleaver_path;
    auto* train_cmd = app.add_subcommand("train", "train per a config file");
    train_cmd->add_option("--config", config_path, "run config file")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* verify_cmd = app.add_subcommand("verify", "verify interleaver maps");
    auto* opt_ilv =
        verify_cmd->add_option("--interleaver", interleaver_path, "interleaver file");
    verify_cmd->add_option("--config", config_path, "run config file")
        ->excludes(opt_ilv);

    std::vector<int> layers;
    std::vector<double> rho;
    std::vector<std::int64_t> edges, zs;
    double clock_mhz = 250.0, baseline_s = 0.0;
    std::int64_t images = 0;
    int epochs = 1;
    std::string csv_path;
    auto* est_cmd = app.add_subcommand("estimate", "analytical throughput model");
    est_cmd->add_option("--layers", layers, "layer sizes")->required();
    est_cmd->add_option("--rho", rho, "per-junction connectivity");
    est_cmd->add_option("--edges", edges, "per-junction edge counts");
    est_cmd->add_option("--z", zs, "per-junction parallelism")->required();
    est_cmd->add_option("--clock-mhz", clock_mhz, "clock in MHz");
    est_cmd->add_option("--images", images, "images per epoch");
    est_cmd->add_option("--epochs", epochs, "epoch count");
    est_cmd->add_option("--baseline-seconds", baseline_s, "baseline for speedup");
    est_cmd->add_option("--csv", csv_path, "also write a CSV");

    std::string metrics_a, metrics_b, diff_csv;
    auto* cmp_cmd = app.add_subcommand("compare", "per-epoch accuracy differences");
    cmp_cmd->add_option("a", metrics_a, "first metrics CSV")->required();
    cmp_cmd->add_option("b", metrics_b, "second metrics CSV")->required();
    cmp_cmd->add_option("--out", diff_csv, "difference CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, out_dir);
        if (verify_cmd->parsed()) {
            if (interleaver_path.empty() && config_path.empty()) {
                std::cerr << "verify needs --interleaver or --config\n";
                return kExitValidation;
            }
            return cmd_verify(interleaver_path, config_path);
        }
        if (est_cmd->parsed())
            return cmd_estimate(layers, rho, edges, zs, clock_mhz, images, epochs,
                                baseline_s, csv_path);
        if (cmp_cmd->parsed()) return cmd_compare(metrics_a, metrics_b, diff_csv);
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
