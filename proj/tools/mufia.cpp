// Command-line front end: train a victim model, run the filter bank attack,
// sweep hyperparameters, run the 2x2 toy probes, and analyze filter banks.

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mufia/commands.hpp"
#include "mufia/fsio.hpp"
#include "mufia/summary.hpp"

namespace {

std::vector<double> parse_value_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

struct FlagValues {
    std::string config_path, data, model, out, axis, values, mode, loss;
    double kappa = 0, lambda = 0, lr = 0, train_lr = 0;
    int iters = 0, block_size = 0, batch = 0, epochs = 0;
    std::uint64_t seed = 0;
};

// Flags are applied on top of the JSON config, but only the ones the user
// actually passed.
void add_common_flags(CLI::App* cmd, FlagValues& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--data", f.data, "dataset spec (synthetic:..., cifar10:..., png-dir:...)");
    cmd->add_option("--model", f.model, "weight file path");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--kappa", f.kappa, "adversarial margin in [0,1]");
    cmd->add_option("--lambda", f.lambda, "similarity weight (>= 0)");
    cmd->add_option("--iters", f.iters, "attack iterations");
    cmd->add_option("--lr", f.lr, "attack learning rate");
    cmd->add_option("--block-size", f.block_size, "DCT block size");
    cmd->add_option("--mode", f.mode, "ground-truth | decision-flip");
    cmd->add_option("--loss", f.loss, "cosine | ce");
    cmd->add_option("--seed", f.seed, "run seed");
    cmd->add_option("--batch", f.batch, "images attacked concurrently");
    cmd->add_option("--axis", f.axis, "sweep axis: iters | block | kappa | lambda | kappa-lambda");
    cmd->add_option("--values", f.values, "comma-separated sweep values; use ; between the two kappa-lambda lists");
    cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--train-lr", f.train_lr, "training learning rate");
}

mufia::RunConfig build_config(const CLI::App* cmd, const FlagValues& f) {
    mufia::RunConfig cfg;
    if (cmd->count("--config")) {
        const auto bytes = mufia::read_file_bytes(f.config_path);
        const auto j = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
        cfg = mufia::run_config_from_json(j);
    }
    if (cmd->count("--data")) cfg.data = f.data;
    if (cmd->count("--model")) cfg.model = f.model;
    if (cmd->count("--out")) cfg.out = f.out;
    if (cmd->count("--kappa")) cfg.attack.kappa = f.kappa;
    if (cmd->count("--lambda")) cfg.attack.lambda = f.lambda;
    if (cmd->count("--iters")) cfg.attack.n_iters = f.iters;
    if (cmd->count("--lr")) cfg.attack.lr = f.lr;
    if (cmd->count("--block-size")) cfg.attack.block_size = f.block_size;
    if (cmd->count("--mode")) cfg.attack.mode = mufia::attack_mode_from_string(f.mode);
    if (cmd->count("--loss")) cfg.attack.loss_kind = mufia::loss_kind_from_string(f.loss);
    if (cmd->count("--seed")) cfg.attack.seed = f.seed;
    if (cmd->count("--batch")) cfg.attack.batch = f.batch;
    if (cmd->count("--axis")) cfg.axis = f.axis;
    if (cmd->count("--values")) {
        const std::size_t semi = f.values.find(';');
        if (semi == std::string::npos) {
            cfg.values = parse_value_list(f.values);
        } else {
            cfg.values = parse_value_list(f.values.substr(0, semi));
            cfg.values2 = parse_value_list(f.values.substr(semi + 1));
        }
    }
    if (cmd->count("--epochs")) cfg.epochs = f.epochs;
    if (cmd->count("--train-lr")) cfg.train_lr = f.train_lr;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiplicative DCT filter bank attack toolkit"};
    app.require_subcommand(1);

    FlagValues f_train, f_attack, f_sweep, f_toy, f_analyze;
    std::string toy_element;

    CLI::App* c_train = app.add_subcommand("train", "train the victim classifier");
    add_common_flags(c_train, f_train);
    CLI::App* c_attack = app.add_subcommand("attack", "attack a dataset and write a report");
    add_common_flags(c_attack, f_attack);
    CLI::App* c_sweep = app.add_subcommand("sweep", "run an attack across a hyperparameter grid");
    add_common_flags(c_sweep, f_sweep);
    CLI::App* c_toy = app.add_subcommand("toy", "2x2 filter bank probe on a synthetic stimulus");
    c_toy->add_option("element", toy_element, "d00 | d01 | d10 | d11")->required();
    add_common_flags(c_toy, f_toy);
    CLI::App* c_analyze = app.add_subcommand("analyze", "median filter bank, heatmap and stats");
    add_common_flags(c_analyze, f_analyze);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed()) return mufia::cmd_train(build_config(c_train, f_train));
        if (c_attack->parsed()) return mufia::cmd_attack(build_config(c_attack, f_attack));
        if (c_sweep->parsed()) return mufia::cmd_sweep(build_config(c_sweep, f_sweep));
        if (c_toy->parsed()) return mufia::cmd_toy(build_config(c_toy, f_toy), toy_element);
        if (c_analyze->parsed()) return mufia::cmd_analyze(build_config(c_analyze, f_analyze));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
