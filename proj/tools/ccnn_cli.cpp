// Experiment CLI for the continuous-kernel convolution library.
//
// Subcommands: train, eval, export-kernels, bench, gradcheck.
// Exit codes: 0 success, 2 config error, 3 numerical abort.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ccnn/ccnn.hpp>
#include <ccnn/gradcheck_suite.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ccnn;

using T = float;  // training precision

namespace {

// ---------------------------------------------------------------- config --

const std::set<std::string> kAllowedKeys = {
    // run
    "task", "seed", "epochs", "batch_size", "learning_rate", "weight_decay", "kernel_decay",
    "warmup_epochs",
    // model
    "block_style", "norm", "channels", "blocks", "kernel_size", "knet_hidden", "knet_layers",
    "w0", "dropout", "backend", "causal", "k_neighbors",
    // data
    "data_dir", "n_train", "n_val", "n_test", "downscale", "permute", "permute_seed", "length",
    "n_classes", "points", "grid_n", "budget",
};

BlockStyle parse_style(const std::string& s) {
    if (s == "ccnn") return BlockStyle::Ccnn;
    if (s == "s4") return BlockStyle::S4;
    if (s == "flexnet") return BlockStyle::FlexNet;
    throw ConfigError("unknown block_style '" + s + "' (expected ccnn|s4|flexnet)");
}

NormKind parse_norm(const std::string& s) {
    if (s == "batch") return NormKind::Batch;
    if (s == "layer") return NormKind::Layer;
    throw ConfigError("unknown norm '" + s + "' (expected batch|layer)");
}

ConvBackend parse_backend(const std::string& s) {
    if (s == "auto") return ConvBackend::Auto;
    if (s == "direct") return ConvBackend::Direct;
    if (s == "fft") return ConvBackend::Fft;
    throw ConfigError("unknown backend '" + s + "' (expected auto|direct|fft)");
}

struct TaskDefaults {
    int64_t channels = 32, blocks = 2, kernel_size = 33, epochs = 10, batch_size = 32;
    double w0 = 30, dropout = 0.1, learning_rate = 0.01;
    std::string norm = "batch";
};

TaskDefaults defaults_for(const std::string& task) {
    TaskDefaults d;
    if (task == "smnist") {
        d.kernel_size = 196;
        d.w0 = 300;
        d.epochs = 10;
        d.batch_size = 64;
    } else if (task == "waveforms") {
        d.kernel_size = 256;
        d.w0 = 30;
        d.epochs = 6;
        d.batch_size = 32;
    } else if (task == "shapes") {
        d.w0 = 20;
        d.epochs = 6;
        d.batch_size = 16;
        d.norm = "layer";
    } else {
        throw ConfigError("unknown task '" + task + "' (expected smnist|waveforms|shapes)");
    }
    return d;
}

ModelConfig model_config_from(const Config& cfg, const std::string& task) {
    const TaskDefaults d = defaults_for(task);
    ModelConfig mc;
    if (task == "shapes") {
        mc.dims = 3;
        mc.pointcloud = true;
        mc.in_channels = 3;
        mc.n_classes = 3;
        mc.k_neighbors = cfg.get_i64("k_neighbors", 16);
    } else {
        mc.dims = 1;
        mc.in_channels = 1;
        mc.n_classes = task == "smnist" ? 10 : cfg.get_i64("n_classes", 4);
        mc.causal = cfg.get_bool("causal", true);
        mc.kernel_size = cfg.get_i64("kernel_size", d.kernel_size);
    }
    mc.channels = cfg.get_i64("channels", d.channels);
    mc.n_blocks = cfg.get_i64("blocks", d.blocks);
    mc.knet_hidden = static_cast<int>(cfg.get_i64("knet_hidden", 32));
    mc.knet_layers = static_cast<int>(cfg.get_i64("knet_layers", 3));
    mc.omega0 = cfg.get_f64("w0", d.w0);
    mc.dropout = cfg.get_f64("dropout", d.dropout);
    mc.style = parse_style(cfg.get_str("block_style", "ccnn"));
    mc.norm = parse_norm(cfg.get_str("norm", d.norm));
    mc.backend = parse_backend(cfg.get_str("backend", "auto"));
    return mc;
}

TrainSettings train_settings_from(const Config& cfg, const std::string& task) {
    const TaskDefaults d = defaults_for(task);
    TrainSettings s;
    s.epochs = cfg.get_i64("epochs", d.epochs);
    s.batch_size = cfg.get_i64("batch_size", d.batch_size);
    s.learning_rate = cfg.get_f64("learning_rate", d.learning_rate);
    s.weight_decay = cfg.get_f64("weight_decay", 0.0);
    s.kernel_decay = cfg.get_f64("kernel_decay", cfg.get_f64("weight_decay", 1e-6));
    s.warmup_epochs = cfg.get_f64("warmup_epochs", 1.0);
    s.seed = static_cast<uint64_t>(cfg.get_i64("seed", 0));
    return s;
}

// ------------------------------------------------------------------ data --

struct GridTask {
    GridDataset<T> train, val, test;
    int64_t length = 0;
};

GridTask build_smnist(const Config& cfg) {
    const std::string dir = cfg.get_str("data_dir", "data/mnist");
    const int64_t n_train = cfg.get_i64("n_train", 10000);
    const int64_t n_val = cfg.get_i64("n_val", 5000);
    const int64_t n_test = cfg.get_i64("n_test", 10000);
    MnistData<T> m = load_mnist<T>(dir);
    check(m.train_images.dim(0) >= kMnistTrainSplit, "mnist train file too small");

    auto prep = [&](Tensor<T> images) {
        if (cfg.get_bool("downscale", true)) images = avgpool2x2(images);
        return flatten_to_sequence(images);
    };
    GridTask t;
    Tensor<T> all_train = prep(m.train_images);
    const int64_t L = all_train.dim(2);
    t.length = L;

    GridDataset<T> full_train{all_train, m.train_labels};
    GridDataset<T> train55 = take_subset(full_train, kMnistTrainSplit);
    t.train = take_subset(train55, std::min(n_train, kMnistTrainSplit));
    // validation = tail 5K of the train file
    std::vector<int64_t> vidx;
    for (int64_t i = kMnistTrainSplit; i < std::min<int64_t>(kMnistTrainSplit + n_val, full_train.size()); ++i)
        vidx.push_back(i);
    t.val = gather_grid(full_train, vidx);
    GridDataset<T> full_test{prep(m.test_images), m.test_labels};
    t.test = take_subset(full_test, std::min<int64_t>(n_test, full_test.size()));

    if (cfg.get_bool("permute", false)) {
        auto perm = make_permutation(L, static_cast<uint64_t>(cfg.get_i64("permute_seed", 42)));
        t.train.x = permute_sequence(t.train.x, perm);
        t.val.x = permute_sequence(t.val.x, perm);
        t.test.x = permute_sequence(t.test.x, perm);
    }
    auto std_ = Standardizer<T>::fit(t.train.x);
    std_.apply(t.train.x);
    std_.apply(t.val.x);
    std_.apply(t.test.x);
    return t;
}

GridTask build_waveforms(const Config& cfg, uint64_t seed) {
    const int64_t L = cfg.get_i64("length", 256);
    const int64_t classes = cfg.get_i64("n_classes", 4);
    GridTask t;
    t.length = L;
    t.train = synth_waveforms<T>(cfg.get_i64("n_train", 800), L, classes, seed, "wave-train");
    t.val = synth_waveforms<T>(cfg.get_i64("n_val", 200), L, classes, seed, "wave-val");
    t.test = synth_waveforms<T>(cfg.get_i64("n_test", 400), L, classes, seed, "wave-test");
    return t;
}

struct CloudTask {
    CloudDataset<T> train_vox, val_vox, test_vox, test_raw;
};

CloudTask build_shapes(const Config& cfg, uint64_t seed) {
    const int64_t P = cfg.get_i64("points", 128);
    const int64_t grid_n = cfg.get_i64("grid_n", 16);
    const int64_t budget = cfg.get_i64("budget", 128);
    CloudTask t;
    CloudDataset<T> train_raw = synth_shapes<T>(cfg.get_i64("n_train", 450), P, seed, "shape-train");
    CloudDataset<T> val_raw = synth_shapes<T>(cfg.get_i64("n_val", 150), P, seed, "shape-val");
    t.test_raw = synth_shapes<T>(cfg.get_i64("n_test", 210), P, seed, "shape-test");
    t.train_vox = voxelize_clouds(train_raw, grid_n, budget, seed);
    t.val_vox = voxelize_clouds(val_raw, grid_n, budget, seed);
    t.test_vox = voxelize_clouds(t.test_raw, grid_n, budget, seed);
    return t;
}

// ------------------------------------------------------------ run output --

json checkpoint_extra(const Config& cfg, const std::string& task, int64_t epoch,
                      double best_val_acc) {
    json extra;
    extra["config"] = cfg.entries();
    extra["config_hash"] = cfg.hash();
    extra["task"] = task;
    extra["epoch"] = epoch;
    extra["best_val_acc"] = best_val_acc;
    return extra;
}

void write_summary(const fs::path& out, json j) {
    std::ofstream f(out / "summary.json");
    check(static_cast<bool>(f), "cannot write summary.json in " + out.string());
    f << j.dump(2) << "\n";
}

template <class Net, class TrainFn, class TestFn>
int finish_train(Net& net, const Config& cfg, const std::string& task, const fs::path& out,
                 const TrainSettings& s, TrainFn&& do_train, TestFn&& do_test) {
    fs::create_directories(out);
    const fs::path ckpt = out / "checkpoint";
    std::ofstream metrics(out / "metrics.csv");
    check(static_cast<bool>(metrics), "cannot write metrics.csv in " + out.string());
    metrics << kMetricsHeader << "\n" << std::flush;

    // epoch -1 checkpoint = initialization (kept when epochs == 0)
    save_checkpoint<T>(ckpt.string(), net, checkpoint_extra(cfg, task, -1, -1.0));

    EpochCallback on_epoch = [&](const EpochRow& r) {
        metrics << r.epoch << "," << fmt_g9(r.lr) << "," << fmt_g9(r.train_loss) << ","
                << fmt_g9(r.train_acc) << "," << fmt_g9(r.val_loss) << "," << fmt_g9(r.val_acc)
                << "\n"
                << std::flush;
        std::cout << "epoch " << r.epoch << "  lr " << fmt_g9(r.lr) << "  train_loss "
                  << fmt_g9(r.train_loss) << "  train_acc " << fmt_g9(r.train_acc) << "  val_acc "
                  << fmt_g9(r.val_acc) << std::endl;
    };
    BestCallback on_best = [&](const EpochRow& r) {
        save_checkpoint<T>(ckpt.string(), net, checkpoint_extra(cfg, task, r.epoch, r.val_acc));
    };

    RunResult rr = do_train(on_epoch, on_best);
    auto [test_loss, test_acc] = do_test();
    std::cout << "test_loss " << fmt_g9(test_loss) << "  test_acc " << fmt_g9(test_acc)
              << "  wall_s " << fmt_g9(rr.wall_seconds) << std::endl;

    json summary;
    summary["mode"] = "train";
    summary["task"] = task;
    summary["config"] = cfg.entries();
    summary["config_hash"] = cfg.hash();
    summary["epochs_run"] = static_cast<int64_t>(rr.rows.size());
    summary["best_val_acc"] = rr.best_val_acc;
    summary["best_epoch"] = rr.best_epoch;
    summary["test_loss"] = test_loss;
    summary["test_acc"] = test_acc;
    summary["wall_seconds"] = rr.wall_seconds;
    summary["n_params"] = param_count(net);
    write_summary(out, summary);
    return 0;
}

int run_train(const Config& cfg, const fs::path& out) {
    const std::string task = cfg.get_str("task", "");
    if (task.empty()) throw ConfigError("config key 'task' is required (smnist|waveforms|shapes)");
    cfg.validate_keys(kAllowedKeys);
    const TrainSettings s = train_settings_from(cfg, task);
    const ModelConfig mc = model_config_from(cfg, task);
    Rng init(s.seed, "init");

    if (task == "shapes") {
        CloudTask td = build_shapes(cfg, s.seed);
        PointModel<T> net(mc, init);
        AdamW<T> opt(net, s.weight_decay);
        return finish_train(
            net, cfg, task, out, s,
            [&](const EpochCallback& oe, const BestCallback& ob) {
                return train_cloud(net, opt, td.train_vox, td.val_vox, mc.k_neighbors, s, oe, ob);
            },
            [&] { return evaluate_cloud(net, td.test_vox, s.batch_size, mc.k_neighbors); });
    }
    GridTask td = task == "smnist" ? build_smnist(cfg) : build_waveforms(cfg, s.seed);
    Model1d<T> net(mc, init);
    AdamW<T> opt(net, s.weight_decay);
    return finish_train(
        net, cfg, task, out, s,
        [&](const EpochCallback& oe, const BestCallback& ob) {
            return train_grid(net, opt, td.train, td.val, s, oe, ob);
        },
        [&] { return evaluate_grid(net, td.test, s.batch_size, 0); });
}

// ------------------------------------------------------------------ eval --

Config config_from_manifest(const json& manifest, const std::vector<std::string>& overrides) {
    Config cfg;
    for (const auto& [k, v] : manifest.at("config").items()) cfg.set(k, v.get<std::string>());
    for (const auto& kv : overrides) cfg.set_pair(kv);
    cfg.validate_keys(kAllowedKeys);
    return cfg;
}

int run_eval(const std::string& ckpt, const std::vector<std::string>& overrides,
             int64_t eval_length, const std::string& representation, const fs::path& out) {
    json manifest = load_manifest(ckpt);
    Config cfg = config_from_manifest(manifest, overrides);
    const std::string task = cfg.get_str("task", "");
    const ModelConfig mc = model_config_from(cfg, task);
    const TrainSettings s = train_settings_from(cfg, task);
    Rng init(s.seed, "init");
    fs::create_directories(out);

    json summary;
    summary["mode"] = "eval";
    summary["task"] = task;
    summary["config_hash"] = cfg.hash();
    summary["checkpoint"] = ckpt;
    double loss = 0, acc = 0;

    if (task == "shapes") {
        if (eval_length > 0) throw ConfigError("--length applies to sequence tasks only");
        PointModel<T> net(mc, init);
        load_checkpoint<T>(ckpt, net);
        CloudTask td = build_shapes(cfg, s.seed);
        const std::string rep = representation.empty() ? "voxels" : representation;
        if (rep == "voxels")
            std::tie(loss, acc) = evaluate_cloud(net, td.test_vox, s.batch_size, mc.k_neighbors);
        else if (rep == "points")
            std::tie(loss, acc) = evaluate_cloud(net, td.test_raw, s.batch_size, mc.k_neighbors);
        else
            throw ConfigError("unknown representation '" + rep + "' (expected voxels|points)");
        summary["representation"] = rep;
    } else {
        if (!representation.empty())
            throw ConfigError("--representation applies to the shapes task only");
        Model1d<T> net(mc, init);
        load_checkpoint<T>(ckpt, net);
        GridTask td = task == "smnist" ? build_smnist(cfg) : build_waveforms(cfg, s.seed);
        GridDataset<T> test = td.test;
        int64_t k_eval = 0;
        if (eval_length > 0 && eval_length != td.length) {
            if (td.length % eval_length != 0)
                throw ConfigError("--length must divide the training length " +
                                  std::to_string(td.length));
            test.x = subsample_sequence(test.x, td.length / eval_length);
            if ((mc.kernel_size * eval_length) % td.length != 0)
                throw ConfigError("kernel size does not rescale to an integer tap count at length " +
                                  std::to_string(eval_length));
            k_eval = mc.kernel_size * eval_length / td.length;
            summary["eval_length"] = eval_length;
            summary["kernel_taps"] = k_eval;
        }
        std::tie(loss, acc) = evaluate_grid(net, test, s.batch_size, k_eval);
    }
    summary["test_loss"] = loss;
    summary["test_acc"] = acc;
    std::cout << "test_loss " << fmt_g9(loss) << "  test_acc " << fmt_g9(acc) << std::endl;
    write_summary(out, summary);
    return 0;
}

// -------------------------------------------------------- export-kernels --

template <class Net, class Fn>
void for_each_named_conv(Net& net, Fn&& fn) {
    fn("stem", net.stem);
    for (size_t i = 0; i < net.blocks.size(); ++i) {
        const std::string b = "block" + std::to_string(i);
        fn(b + ".conv1", net.blocks[i].conv1);
        if (net.blocks[i].style == BlockStyle::FlexNet) fn(b + ".conv2", net.blocks[i].conv2);
    }
}

template <class Net>
int export_kernels_from(Net& net, const std::string& layer_filter, int64_t resolution,
                        const fs::path& out) {
    fs::create_directories(out);
    bool found = false;
    for_each_named_conv(net, [&](const std::string& name, auto& conv) {
        if (!layer_filter.empty() && name != layer_filter) return;
        found = true;
        int64_t res = resolution;
        if (res <= 0) {
            if constexpr (requires { conv.kernel_size; })
                res = conv.kernel_size;
            else
                res = 9;
        }
        auto [coords, kv] = conv.sample_kernel(res);
        const int64_t rows = kv.dim(0), C = kv.dim(1), D = coords.dim(1);
        std::ofstream csv(out / ("kernels_" + name + ".csv"));
        check(static_cast<bool>(csv), "cannot write kernel csv for layer " + name);
        csv << "layer,channel";
        if (D == 1)
            csv << ",offset";
        else
            for (int64_t d = 0; d < D; ++d) csv << ",offset_" << d;
        csv << ",value\n";
        for (int64_t c = 0; c < C; ++c)
            for (int64_t r = 0; r < rows; ++r) {
                csv << name << "," << c;
                for (int64_t d = 0; d < D; ++d) csv << "," << fmt_g9(coords.at(r * D + d));
                csv << "," << fmt_g9(kv.at(r * C + c)) << "\n";
            }
        std::cout << "wrote " << (out / ("kernels_" + name + ".csv")).string() << " (" << C * rows
                  << " rows)" << std::endl;
    });
    if (!found) throw ConfigError("unknown layer '" + layer_filter + "'");
    return 0;
}

int run_export(const std::string& ckpt, const std::vector<std::string>& overrides,
               const std::string& layer, int64_t resolution, const fs::path& out) {
    json manifest = load_manifest(ckpt);
    Config cfg = config_from_manifest(manifest, overrides);
    const std::string task = cfg.get_str("task", "");
    const ModelConfig mc = model_config_from(cfg, task);
    Rng init(static_cast<uint64_t>(cfg.get_i64("seed", 0)), "init");
    if (task == "shapes") {
        PointModel<T> net(mc, init);
        load_checkpoint<T>(ckpt, net);
        return export_kernels_from(net, layer, resolution, out);
    }
    Model1d<T> net(mc, init);
    load_checkpoint<T>(ckpt, net);
    return export_kernels_from(net, layer, resolution, out);
}

// ----------------------------------------------------------------- bench --

int run_bench(const std::vector<int64_t>& lengths, int64_t channels, int64_t batch,
              int64_t repeats, const fs::path& out) {
    fs::create_directories(out);
    std::ofstream csv(out / "bench.csv");
    check(static_cast<bool>(csv), "cannot write bench.csv");
    csv << "backend,length,channels,median_ms,p90_ms\n";
    std::cout << "backend  length  channels  median_ms  p90_ms" << std::endl;
    for (int64_t L : lengths) {
        const int64_t K = L;  // global kernel: |support| = input length
        Rng rng(7, "bench");
        Tensor<T> f({batch, channels, L});
        Tensor<T> taps({channels, K});
        for (int64_t i = 0; i < f.numel(); ++i) f.at(i) = static_cast<T>(rng.normal());
        for (int64_t i = 0; i < taps.numel(); ++i) taps.at(i) = static_cast<T>(rng.normal());
        f.set_tracked(true);
        taps.set_tracked(true);
        for (const std::string backend : {"direct", "fft"}) {
            std::vector<double> ms;
            for (int64_t r = 0; r <= repeats; ++r) {  // first iteration = warmup
                f.zero_grad();
                taps.zero_grad();
                const auto t0 = std::chrono::steady_clock::now();
                {
                    TapeScope<T> scope;
                    Tensor<T> y = backend == "direct" ? conv1d_depthwise_direct(f, taps, int64_t(0))
                                                      : conv1d_depthwise_fft(f, taps, int64_t(0));
                    Tensor<T> loss = sum_all(y);
                    scope.backward(loss);
                }
                const double dt = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count();
                if (r > 0) ms.push_back(dt);
            }
            std::sort(ms.begin(), ms.end());
            const double median = ms[ms.size() / 2];
            const double p90 = ms[std::min(ms.size() - 1,
                                           static_cast<size_t>(0.9 * (double)(ms.size() - 1) + 0.5))];
            csv << backend << "," << L << "," << channels << "," << fmt_g9(median) << ","
                << fmt_g9(p90) << "\n";
            std::cout << backend << "  " << L << "  " << channels << "  " << fmt_g9(median) << "  "
                      << fmt_g9(p90) << std::endl;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous-kernel convolution experiments"};
    app.require_subcommand(1);

    std::string config_path, ckpt_dir, layer, representation;
    std::vector<std::string> sets;
    int64_t seed = -1, threads = 1, eval_length = 0, resolution = 0;
    int64_t bench_channels = 4, bench_batch = 1, bench_repeats = 5, instances = 20;
    std::string out_dir = "run";
    std::vector<int64_t> bench_lengths = {1024, 2048, 4096, 8192};

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--set", sets, "override config entries, key=value")->take_all();
        sub->add_option("--seed", seed, "override the run seed");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--threads", threads, "worker thread count");
    };

    CLI::App* train = app.add_subcommand("train", "train a model from a config file");
    train->add_option("--config", config_path, "config file path")->required();
    add_common(train);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
    eval->add_option("--length", eval_length, "evaluate sequences at this length");
    eval->add_option("--representation", representation, "shapes task: voxels|points");
    add_common(eval);

    CLI::App* expk = app.add_subcommand("export-kernels", "sample generated kernels to CSV");
    expk->add_option("--checkpoint", ckpt_dir, "checkpoint directory")->required();
    expk->add_option("--layer", layer, "restrict to one conv layer");
    expk->add_option("--resolution", resolution, "samples per axis (0 = native)");
    add_common(expk);

    CLI::App* bench = app.add_subcommand("bench", "time direct vs fft convolution backends");
    bench->add_option("--lengths", bench_lengths, "sequence lengths")->take_all();
    bench->add_option("--channels", bench_channels, "channels");
    bench->add_option("--batch", bench_batch, "batch size");
    bench->add_option("--repeats", bench_repeats, "timed repetitions per case");
    add_common(bench);

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gc->add_option("--instances", instances, "random instances per operation");
    add_common(gc);

    try {
        app.parse(argc, argv);
        thread_count() = static_cast<int>(std::max<int64_t>(1, threads));
        const fs::path out(out_dir);

        if (train->parsed()) {
            Config cfg = Config::from_file(config_path);
            for (const auto& kv : sets) cfg.set_pair(kv);
            if (seed >= 0) cfg.set("seed", std::to_string(seed));
            return run_train(cfg, out);
        }
        if (eval->parsed()) {
            if (seed >= 0) sets.push_back("seed=" + std::to_string(seed));
            return run_eval(ckpt_dir, sets, eval_length, representation, out);
        }
        if (expk->parsed()) {
            if (seed >= 0) sets.push_back("seed=" + std::to_string(seed));
            return run_export(ckpt_dir, sets, layer, resolution, out);
        }
        if (bench->parsed()) return run_bench(bench_lengths, bench_channels, bench_batch,
                                              bench_repeats, out);
        if (gc->parsed()) {
            std::cout << "gradient suite (" << instances << " instances per op, h=1e-5, double)\n";
            auto results = run_gradient_suite(static_cast<int>(instances), &std::cout);
            const bool ok = gradient_suite_passed(results);
            std::cout << (ok ? "all operations pass" : "FAILURES present") << std::endl;
            return ok ? 0 : 1;
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << std::endl;
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
