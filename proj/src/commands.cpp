#include "mufia/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "mufia/analytics.hpp"
#include "mufia/classifier.hpp"
#include "mufia/fsio.hpp"
#include "mufia/summary.hpp"

namespace fs = std::filesystem;

namespace mufia {

namespace {

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::map<std::string, std::string> parse_kv_list(const std::string& s) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("expected key=value in dataset spec, got: " + item);
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

LabeledDataset load_synthetic_spec(const std::string& args) {
    auto kv = parse_kv_list(args);
    int k = 5, n = 200, side = 32;
    std::uint64_t seed = 0;
    double noise = 0.05;
    std::string split = "all";
    for (const auto& [key, val] : kv) {
        if (key == "k") k = std::stoi(val);
        else if (key == "n") n = std::stoi(val);
        else if (key == "side") side = std::stoi(val);
        else if (key == "seed") seed = std::stoull(val);
        else if (key == "noise") noise = std::stod(val);
        else if (key == "split") split = val;
        else throw std::invalid_argument("unknown synthetic dataset key: " + key);
    }
    LabeledDataset full = generate_synthetic_dataset(k, n, side, seed, noise);
    if (split == "all") return full;
    auto [train, test] = split_per_class(full, 0.8);
    if (split == "train") return train;
    if (split == "test") return test;
    throw std::invalid_argument("unknown split: " + split + " (want train, test or all)");
}

LabeledDataset load_png_dir(const std::string& root) {
    if (!fs::is_directory(root)) throw std::runtime_error("not a directory: " + root);

    std::vector<std::pair<int, fs::path>> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (!name.empty() && std::all_of(name.begin(), name.end(),
                                         [](unsigned char c) { return std::isdigit(c); }))
            class_dirs.emplace_back(std::stoi(name), entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.size() < 2)
        throw std::runtime_error("png-dir needs at least two numeric class subdirectories");
    for (std::size_t i = 0; i < class_dirs.size(); ++i)
        if (class_dirs[i].first != static_cast<int>(i))
            throw std::runtime_error("png-dir class subdirectories must be 0..k-1");

    LabeledDataset ds;
    ds.num_classes = static_cast<int>(class_dirs.size());
    for (const auto& [label, dir] : class_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".png")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            Image img = load_png(f.string());
            if (!ds.images.empty() && (img.height != ds.images.front().height ||
                                       img.width != ds.images.front().width))
                throw std::runtime_error("png-dir images differ in size: " + f.string());
            ds.images.push_back(std::move(img));
            ds.labels.push_back(label);
        }
    }
    if (ds.images.empty()) throw std::runtime_error("png-dir contains no PNG files: " + root);
    return ds;
}

NetworkSpec spec_for_dataset(const LabeledDataset& ds) {
    NetworkSpec spec;
    spec.input_side = ds.images.front().height;
    spec.num_classes = ds.num_classes;
    require(ds.images.front().width == spec.input_side, "expected square images");
    spec.validate();
    return spec;
}

void check_attack_inputs(const ClassifierWeights<float>& w, const LabeledDataset& ds,
                         const AttackConfig& cfg) {
    for (const Image& img : ds.images) {
        require(img.height == w.spec.input_side && img.width == w.spec.input_side,
                "dataset image size does not match the model");
        require(img.height % cfg.block_size == 0 && img.width % cfg.block_size == 0,
                "image sides are not divisible by the block size");
    }
}

std::string image_file_name(std::size_t index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05zu.%s", index, ext);
    return buf;
}

OrderedJson block_to_json(const float* block, int n) {
    OrderedJson rows = OrderedJson::array();
    for (int i = 0; i < n; ++i) {
        OrderedJson row = OrderedJson::array();
        for (int j = 0; j < n; ++j) row.push_back(static_cast<double>(block[i * n + j]));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::ordered_json& j) {
    static const std::set<std::string> known = {
        "kappa", "lambda", "iters",  "lr",     "block_size", "mode",   "loss",
        "seed",  "batch",  "data",   "model",  "out",        "axis",   "values",
        "values2", "epochs", "train_lr"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);

    RunConfig cfg;
    if (j.contains("kappa")) cfg.attack.kappa = j.at("kappa").get<double>();
    if (j.contains("lambda")) cfg.attack.lambda = j.at("lambda").get<double>();
    if (j.contains("iters")) cfg.attack.n_iters = j.at("iters").get<int>();
    if (j.contains("lr")) cfg.attack.lr = j.at("lr").get<double>();
    if (j.contains("block_size")) cfg.attack.block_size = j.at("block_size").get<int>();
    if (j.contains("mode")) cfg.attack.mode = attack_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("loss")) cfg.attack.loss_kind = loss_kind_from_string(j.at("loss").get<std::string>());
    if (j.contains("seed")) cfg.attack.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("batch")) cfg.attack.batch = j.at("batch").get<int>();
    if (j.contains("data")) cfg.data = j.at("data").get<std::string>();
    if (j.contains("model")) cfg.model = j.at("model").get<std::string>();
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("axis")) cfg.axis = j.at("axis").get<std::string>();
    if (j.contains("values")) cfg.values = j.at("values").get<std::vector<double>>();
    if (j.contains("values2")) cfg.values2 = j.at("values2").get<std::vector<double>>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("train_lr")) cfg.train_lr = j.at("train_lr").get<double>();
    return cfg;
}

LabeledDataset load_dataset(const std::string& spec) {
    const std::size_t colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "synthetic") return load_synthetic_spec(rest);
    if (kind == "cifar10") return load_cifar10_binary(rest);
    if (kind == "png-dir") return load_png_dir(rest);
    throw std::invalid_argument("unknown dataset source: " + spec +
                                " (want synthetic:..., cifar10:..., or png-dir:...)");
}

void write_filter_bank_csv(const FilterBank<float>& fb, const std::string& path) {
    std::string text;
    for (int u = 0; u < fb.size; ++u) {
        for (int v = 0; v < fb.size; ++v) {
            if (v) text += ',';
            text += format_g9(static_cast<double>(fb.at(u, v)));
        }
        text += '\n';
    }
    write_file_text_atomic(path, text);
}

FilterBank<double> read_filter_bank_csv(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    std::stringstream ss(std::string(bytes.begin(), bytes.end()));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty filter bank CSV: " + path);
    const int n = static_cast<int>(rows.size());
    FilterBank<double> fb = FilterBank<double>::ones(n);
    for (int u = 0; u < n; ++u) {
        if (static_cast<int>(rows[u].size()) != n)
            throw std::runtime_error("filter bank CSV is not square: " + path);
        for (int v = 0; v < n; ++v) fb.at(u, v) = rows[u][v];
    }
    return fb;
}

int cmd_train(const RunConfig& cfg) {
    require(!cfg.model.empty(), "train: --model output path is required");
    require(!cfg.data.empty(), "train: --data is required");
    require(cfg.epochs >= 0, "train: epochs must be >= 0");

    const LabeledDataset full = load_dataset(cfg.data);
    auto [train_ds, test_ds] = split_per_class(full, 0.8);
    const LabeledDataset& eval_ds = test_ds.images.empty() ? train_ds : test_ds;
    const NetworkSpec spec = spec_for_dataset(full);

    TrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.lr = cfg.train_lr;
    opt.seed = cfg.attack.seed;
    opt.batch_size = cfg.attack.batch;

    OrderedJson epoch_log = OrderedJson::array();
    auto hook = [&](int epoch, double mean_loss, const ClassifierWeights<float>& w) {
        const double acc = evaluate(w, eval_ds);
        OrderedJson e;
        e["epoch"] = epoch;
        e["mean_loss"] = mean_loss;
        e["test_accuracy"] = acc;
        epoch_log.push_back(std::move(e));
        std::printf("epoch %3d  loss %.6f  test_accuracy %.4f\n", epoch, mean_loss, acc);
    };

    const ClassifierWeights<float> weights = train<float>(spec, train_ds, opt, hook);
    save_weights(weights, cfg.model);

    OrderedJson log;
    log["data"] = cfg.data;
    log["model"] = cfg.model;
    log["epochs"] = cfg.epochs;
    log["lr"] = cfg.train_lr;
    log["seed"] = cfg.attack.seed;
    log["batch"] = cfg.attack.batch;
    log["per_epoch"] = std::move(epoch_log);
    log["final_train_accuracy"] = evaluate(weights, train_ds);
    log["final_test_accuracy"] = evaluate(weights, eval_ds);

    std::string log_path;
    if (!cfg.out.empty()) {
        ensure_directory(cfg.out);
        log_path = (fs::path(cfg.out) / "train_log.json").string();
    } else {
        fs::path parent = fs::path(cfg.model).parent_path();
        log_path = (parent.empty() ? fs::path(".") : parent) / "train_log.json";
    }
    write_file_text_atomic(log_path, log.dump(2) + "\n");
    std::printf("model written to %s (test_accuracy %.4f)\n", cfg.model.c_str(),
                log["final_test_accuracy"].get<double>());
    return 0;
}

int cmd_attack(const RunConfig& cfg) {
    require(!cfg.model.empty(), "attack: --model is required");
    require(!cfg.data.empty(), "attack: --data is required");
    require(!cfg.out.empty(), "attack: --out is required");
    cfg.attack.validate();

    const ClassifierWeights<float> weights = load_weights(cfg.model);
    const LabeledDataset ds = load_dataset(cfg.data);
    check_attack_inputs(weights, ds, cfg.attack);

    const AttackReport<float> report = attack_dataset(weights, ds, cfg.attack);

    ensure_directory(cfg.out);
    const fs::path out(cfg.out);
    ensure_directory((out / "adv").string());
    ensure_directory((out / "q").string());
    ensure_directory((out / "trace").string());

    for (std::size_t i = 0; i < report.results.size(); ++i) {
        const AttackResult<float>& r = report.results[i];
        save_png(r.adv_image, (out / "adv" / image_file_name(i, "png")).string());
        write_filter_bank_csv(r.q, (out / "q" / image_file_name(i, "csv")).string());

        std::string jsonl;
        for (std::size_t t = 0; t < r.trace.size(); ++t) {
            OrderedJson e;
            e["iter"] = t;
            e["adv"] = static_cast<double>(r.trace[t].adv);
            e["sim"] = static_cast<double>(r.trace[t].sim);
            e["total"] = static_cast<double>(r.trace[t].total);
            e["cos_to_label"] = static_cast<double>(r.trace[t].cos_to_label);
            jsonl += e.dump();
            jsonl += '\n';
        }
        write_file_text_atomic((out / "trace" / image_file_name(i, "jsonl")).string(), jsonl);
    }

    OrderedJson doc;
    doc["summary"] = summarize_report(report, report.clean_accuracy, cfg.attack);
    doc["per_image"] = per_image_json(report);
    write_file_text_atomic((out / "report.json").string(), doc.dump(2) + "\n");

    std::printf("clean %.4f  robust %.4f  success %.4f  mean_sim %.6g\n", report.clean_accuracy,
                report.robust_accuracy, report.success_rate, report.mean_sim_loss);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    require(!cfg.model.empty(), "sweep: --model is required");
    require(!cfg.data.empty(), "sweep: --data is required");
    require(!cfg.out.empty(), "sweep: --out is required");
    require(!cfg.values.empty(), "sweep: --values is required");
    const std::string& axis = cfg.axis;
    require(axis == "iters" || axis == "block" || axis == "kappa" || axis == "lambda" ||
                axis == "kappa-lambda",
            "sweep: axis must be iters, block, kappa, lambda or kappa-lambda");

    const ClassifierWeights<float> weights = load_weights(cfg.model);
    const LabeledDataset ds = load_dataset(cfg.data);

    struct GridPoint {
        double a = 0.0, b = 0.0;
    };
    std::vector<GridPoint> points;
    if (axis == "kappa-lambda") {
        require(!cfg.values2.empty(), "sweep: kappa-lambda needs --values2 for the lambda list");
        for (double ka : cfg.values)
            for (double la : cfg.values2) points.push_back({ka, la});
    } else {
        for (double v : cfg.values) points.push_back({v, 0.0});
    }

    auto point_config = [&](const GridPoint& p) {
        AttackConfig a = cfg.attack;
        if (axis == "iters") a.n_iters = static_cast<int>(p.a);
        else if (axis == "block") a.block_size = static_cast<int>(p.a);
        else if (axis == "kappa") a.kappa = p.a;
        else if (axis == "lambda") a.lambda = p.a;
        else {
            a.kappa = p.a;
            a.lambda = p.b;
        }
        return a;
    };
    for (const GridPoint& p : points) {
        const AttackConfig a = point_config(p);
        a.validate();
        check_attack_inputs(weights, ds, a);
    }

    std::string csv = (axis == "kappa-lambda")
                          ? "kappa,lambda,robust_accuracy,mean_sim_loss,mean_psnr\n"
                          : (axis == "block" ? "block_size" : axis) +
                                std::string(",robust_accuracy,mean_sim_loss,mean_psnr\n");
    for (const GridPoint& p : points) {
        const AttackConfig a = point_config(p);
        const AttackReport<float> report = attack_dataset(weights, ds, a);
        std::string row;
        if (axis == "kappa-lambda")
            row = format_g9(p.a) + "," + format_g9(p.b);
        else
            row = format_g9(p.a);
        row += "," + format_g9(report.robust_accuracy);
        row += "," + format_g9(report.mean_sim_loss);
        row += ",";
        row += (report.psnr_infinite_count == static_cast<int>(report.results.size()))
                   ? "inf"
                   : format_g9(report.mean_psnr);
        csv += row + "\n";
        std::printf("%s\n", row.c_str());
    }

    ensure_directory(cfg.out);
    write_file_text_atomic((fs::path(cfg.out) / "sweep.csv").string(), csv);
    return 0;
}

namespace {

/// 2x2-periodic stimuli matching the four filter bank elements: constant,
/// variation along x, variation along y, variation along both. The colors
/// are fixed so the probes are reproducible; the d00 constant is a dark tone
/// whose decision sits close to a brightness boundary.
Image make_toy_stimulus(const std::string& element, int side) {
    const bool constant = (element == "d00");
    const float base_dark[3] = {0.25f, 0.15f, 0.05f};
    const float base_mid[3] = {0.55f, 0.50f, 0.45f};
    const float* base = constant ? base_dark : base_mid;
    const float amp = 0.18f;
    Image img(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            float s = 0.0f;
            if (element == "d01") s = (x % 2 == 0) ? -1.0f : 1.0f;
            else if (element == "d10") s = (y % 2 == 0) ? -1.0f : 1.0f;
            else if (element == "d11") s = ((x + y) % 2 == 0) ? -1.0f : 1.0f;
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = base[c] + amp * s;
        }
    }
    return img;
}

}  // namespace

int cmd_toy(const RunConfig& cfg, const std::string& element) {
    require(element == "d00" || element == "d01" || element == "d10" || element == "d11",
            "toy: element must be one of d00, d01, d10, d11");
    require(!cfg.model.empty(), "toy: --model is required");
    require(!cfg.out.empty(), "toy: --out is required");

    const ClassifierWeights<float> weights = load_weights(cfg.model);
    const Image stimulus = make_toy_stimulus(element, weights.spec.input_side);

    AttackConfig a = cfg.attack;
    a.block_size = 2;
    a.lambda = 0.0;
    a.kappa = 0.99;
    a.mode = AttackMode::kDecisionFlip;

    const AttackResult<float> r = attack_image(weights, stimulus, 0, a);

    ensure_directory(cfg.out);
    const fs::path out(cfg.out);
    save_png(stimulus, (out / (element + "_original.png")).string());
    save_png(r.adv_image, (out / (element + "_adversarial.png")).string());
    write_filter_bank_csv(r.q, (out / (element + "_q.csv")).string());

    PipelineCache<float> cache;
    forward_pipeline(r.q, image_cast<float>(stimulus), &cache);

    OrderedJson doc;
    doc["element"] = element;
    doc["orig_prediction"] = r.orig_prediction;
    doc["final_prediction"] = r.final_prediction;
    doc["success"] = r.success;
    if (r.first_success_iter)
        doc["first_success_iter"] = *r.first_success_iter;
    else
        doc["first_success_iter"] = nullptr;
    doc["q"] = block_to_json(r.q.q.data(), 2);
    doc["original_block"] = block_to_json(cache.orig_dct.block(0), 2);
    doc["filtered_block"] = block_to_json(cache.filtered_dct.block(0), 2);
    write_file_text_atomic((out / (element + "_dct.json")).string(), doc.dump(2) + "\n");

    std::printf("%s: prediction %d -> %d (%s)\n", element.c_str(), r.orig_prediction,
                r.final_prediction, r.success ? "flipped" : "not flipped");
    return r.success ? 0 : 1;
}

int cmd_analyze(const RunConfig& cfg) {
    require(!cfg.data.empty(), "analyze: --data must point at a directory of Q CSV files");
    require(!cfg.out.empty(), "analyze: --out is required");
    if (!fs::is_directory(cfg.data))
        throw std::runtime_error("analyze: not a directory: " + cfg.data);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cfg.data))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("analyze: no CSV files in " + cfg.data);

    std::vector<FilterBank<double>> banks;
    banks.reserve(files.size());
    for (const fs::path& f : files) {
        FilterBank<double> fb = read_filter_bank_csv(f.string());
        if (!banks.empty() && fb.size != banks.front().size)
            throw std::runtime_error("analyze: inconsistent filter bank sizes in " + cfg.data);
        banks.push_back(std::move(fb));
    }

    const FilterBank<double> median = median_filter_bank(banks);
    const HeatmapMatrix hm = heatmap_transform(median);
    const int n = hm.size;

    // Unchanged means |tanh(q-1)| below threshold. Bands split the
    // anti-diagonal at u+v = N/2.
    const double threshold = 0.05;
    int low_total = 0, low_unchanged = 0, high_total = 0, high_unchanged = 0;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            const bool low = 2 * (u + v) < n;
            const bool unchanged = std::abs(hm.values[static_cast<std::size_t>(u) * n + v]) < threshold;
            (low ? low_total : high_total)++;
            if (unchanged) (low ? low_unchanged : high_unchanged)++;
        }

    ensure_directory(cfg.out);
    const fs::path out(cfg.out);
    save_png(render_heatmap(hm, 16), (out / "heatmap.png").string());

    OrderedJson stats;
    stats["count"] = banks.size();
    stats["block_size"] = n;
    stats["unchanged_threshold"] = threshold;
    stats["low_band_unchanged_fraction"] =
        low_total ? static_cast<double>(low_unchanged) / low_total : 0.0;
    stats["high_band_unchanged_fraction"] =
        high_total ? static_cast<double>(high_unchanged) / high_total : 0.0;
    OrderedJson median_rows = OrderedJson::array();
    for (int u = 0; u < n; ++u) {
        OrderedJson row = OrderedJson::array();
        for (int v = 0; v < n; ++v) row.push_back(median.at(u, v));
        median_rows.push_back(std::move(row));
    }
    stats["median"] = std::move(median_rows);
    write_file_text_atomic((out / "stats.json").string(), stats.dump(2) + "\n");

    std::printf("analyzed %zu filter banks (N=%d): unchanged low %.3f high %.3f\n", banks.size(),
                n, stats["low_band_unchanged_fraction"].get<double>(),
                stats["high_band_unchanged_fraction"].get<double>());
    return 0;
}

}  // namespace mufia
