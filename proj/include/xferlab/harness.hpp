#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xferlab/models.hpp"
#include "xferlab/synthdata.hpp"
#include "xferlab/transfer.hpp"

namespace xferlab {

struct DataConfig {
    std::size_t n = 50;
    std::size_t rbf_count = 100;
    std::size_t d = 10;
    std::size_t mixture_k = 10;
    std::size_t num_samples = 5000;
    double sigma_sq_floor = 1e-3;
    std::uint64_t seed = 101;
};

struct ModelConfig {
    std::size_t target_width = 100;
    std::size_t source_width = 100;
    double lr = 0.5;
    std::size_t epochs = 2000;
    std::uint64_t init_seed = 202;
    std::uint64_t ref_init_seed = 203;
};

struct SweepSettings {
    double t_start = 0.0;
    double t_stop = 1.0;
    double t_step = 0.05;
    std::uint64_t perturb_seed = 303;
    std::uint64_t pgd_seed = 404;
    std::size_t attack_order = 1;      // 1 or 2
    std::vector<double> eps_list;      // finite-radius cross-checks, off by default
    std::size_t pgd_steps = 50;
};

struct RunConfig {
    DataConfig data;
    ModelConfig model;
    SweepSettings sweep;
    std::string out_dir = "out";
    std::uint64_t verify_seed = 505;
};

// Strict parse: every field optional with the defaults above, unknown keys
// rejected so typos cannot silently run a different experiment.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// --seed: rekeys every stream from one master value.
void apply_master_seed(RunConfig& cfg, std::uint64_t master);

struct SweepRow {
    double t = 0.0;
    double alpha1_ts = 0.0;
    double alpha1_st = 0.0;
    double alpha2_ts = 0.0;
    double alpha2_st = 0.0;
    double grad_match = 0.0;
    double knowledge_dist = 0.0;
};

struct FiniteEpsRow {
    double t = 0.0;
    double eps = 0.0;
    double alpha1_ts = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<FiniteEpsRow> finite;
};

Vector t_grid(const SweepSettings& s);

// Core of cmd_sweep, file-free: perturbs the reference per t and fills rows.
SweepResult run_sweep(const RunConfig& cfg, const MlpOneHidden& target,
                      const MlpOneHidden& reference, const Dataset& data);

std::string sweep_csv(const SweepResult& result);
std::string finite_eps_csv(const SweepResult& result);

// Sweep chart: one polyline per tracked quantity, each series scaled to its
// own vertical range so relative shape is what the file shows; the legend
// carries the per-series ranges.
std::string emit_svg(const SweepResult& result);

int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

struct VerifyOptions {
    std::string only;        // canonical suite name or accepted alias; empty = all
    std::size_t trials = 0;  // 0 = per-suite default
    bool appendix_a = false; // shorthand for the 1-D sign-flip example suite
};

struct SuiteResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t failures = 0;
    bool passed = false;
    std::vector<std::string> notes;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    bool ok = false;
};

VerifyReport run_verify(const VerifyOptions& opts, std::uint64_t seed);
std::string verify_report_json(const VerifyReport& report);
int cmd_verify(const RunConfig& cfg, const VerifyOptions& opts);

// Rank correlation (mean-rank ties), in [-1, 1].
double spearman(const Vector& a, const Vector& b);

}  // namespace xferlab
