#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mufia/attack.hpp"
#include "mufia/imageio.hpp"

namespace mufia {

/// One run of any subcommand, assembled from an optional JSON config file
/// plus command-line flag overrides. Unknown JSON keys are rejected.
struct RunConfig {
    AttackConfig attack;
    std::string data;    // dataset spec: synthetic:... | cifar10:<path> | png-dir:<path>
    std::string model;   // weight file path (output of train, input elsewhere)
    std::string out;     // output directory
    std::string axis;    // sweep axis: iters | block | kappa | lambda | kappa-lambda
    std::vector<double> values;
    std::vector<double> values2;  // second axis of a kappa-lambda grid
    int epochs = 30;
    double train_lr = 1e-3;
};

RunConfig run_config_from_json(const nlohmann::ordered_json& j);

/// Dataset spec strings:
///   synthetic:k=5,n=200,side=32,seed=0[,split=train|test|all][,noise=0.05]
///   cifar10:<path to binary batch file>
///   png-dir:<path with one numeric subdirectory per class>
/// The synthetic split uses the stratified 80/20 rule.
LabeledDataset load_dataset(const std::string& spec);

void write_filter_bank_csv(const FilterBank<float>& fb, const std::string& path);
FilterBank<double> read_filter_bank_csv(const std::string& path);

int cmd_train(const RunConfig& cfg);
int cmd_attack(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_toy(const RunConfig& cfg, const std::string& element);
int cmd_analyze(const RunConfig& cfg);

}  // namespace mufia
