#pragma once

#include <string>
#include <vector>

#include "oneshot/continual.hpp"
#include "oneshot/model.hpp"
#include "oneshot/optimizer.hpp"

namespace oneshot {

/// Domain shift protocol: raw class c1 leaves the original label space and
/// its images become the new domain, labelled as class c2. Remaining raw
/// labels are remapped to a dense 1..K.
struct DomainSpec {
    int c1 = 0;
    int c2 = 0;
    double train_frac = 0.7;
    double val_frac = 0.15;

    bool operator==(const DomainSpec&) const = default;
};

void validate(const DomainSpec& spec);

struct Splits {
    std::vector<Sample> train, val, test;
};

struct DomainData {
    Splits orig;
    Splits new_domain;
    int num_classes = 0;
    int merged_label = 0;
};

/// Shuffles and splits each side into train/val/test by the given fractions.
/// Every new-domain sample carries merged_label, the remapped value of c2.
DomainData split_domains(const std::vector<Sample>& data, const DomainSpec& spec,
                         RngStream& rng);

struct BaseTrainConfig {
    int epochs = 30;
    int batch_size = 64;
    double lr_max = 0.1;
    double lr_min = 0.0;

    bool operator==(const BaseTrainConfig&) const = default;
};

void validate(const BaseTrainConfig& cfg);

struct BaseTrainResult {
    std::vector<double> epoch_loss;
    int steps = 0;
};

/// Plain SGD with a cosine schedule swept over every step, batch statistics
/// live. Partial trailing batches are dropped. A non-finite loss aborts.
BaseTrainResult train_base(Model& model, const std::vector<Sample>& train,
                           const BaseTrainConfig& cfg, RngStream& rng);

/// Up to n indices of misclassified pool samples, drawn uniformly without
/// replacement. When fewer than n are misclassified all of them come back
/// and a note lands in *warning if provided.
std::vector<int> pick_misclassified(Model& model, const std::vector<Sample>& pool, int n,
                                    RngStream& rng, std::string* warning = nullptr);

/// Softmax probability the model assigns to the sample's own label,
/// running statistics untouched.
double sample_prob(Model& model, const Sample& s);

/// True once that probability exceeds delta.
bool judge(Model& model, const Sample& s, double delta);

enum class Termination { CONVERGED, ITERATION_CAP };
std::string to_string(Termination t);

struct OneShotConfig {
    std::string method = "ce";
    StatsMode stats_mode = StatsMode::UPDATED_STATS;
    double lr = 1e-3;
    int max_iters = 100;
    double delta = 0.99;
    int buffer_batch = 32;
    int copy_count = 32;
    double ewc_lambda = 100.0;
    AugmentConfig augment;
    bool run_full_length = false;

    bool operator==(const OneShotConfig&) const = default;
};

void validate(const OneShotConfig& cfg);

struct OneShotResult {
    int iters = 0;
    Termination termination = Termination::ITERATION_CAP;
    double final_prob = 0.0;
    double min_gem_dot = 0.0;
    bool gem_used = false;
    bool gem_degenerate = false;
    StatsTrace trace;
};

/// Adapts the model in place to one new sample: minibatches mix buffer draws
/// with augmented copies, Adam updates, convergence judged before each step
/// and capped at max_iters. Running statistics are sampled into the trace at
/// step 0 and after every executed step. For "ce+ewc" a precomputed Fisher
/// may be passed; otherwise it is taken over the buffer here.
OneShotResult one_shot_dil(Model& model, const ReplayBuffer& buf, const Sample& new_sample,
                           const OneShotConfig& cfg, RngStream& rng,
                           const FisherDiag* fisher = nullptr);

struct LrSearchEntry {
    double lr = 0.0;
    double val_acc = 0.0;
    bool capped = false;
    OneShotResult result;
};

struct LrSearchResult {
    Model model;
    double lr = 0.0;
    double val_acc = 0.0;
    bool fallback = false;
    OneShotResult result;
    std::vector<LrSearchEntry> entries;
};

/// Runs the adaptation once per grid entry from a fresh copy of base, drops
/// runs that hit the cap, and keeps the converged run with the best accuracy
/// on (a subset of) the original validation split, ties to the smaller rate.
/// If nothing converges the highest final probability wins and the result is
/// flagged fallback.
LrSearchResult lr_search(const Model& base, const ReplayBuffer& buf,
                         const Sample& new_sample, const OneShotConfig& cfg,
                         const std::vector<double>& grid,
                         const std::vector<Sample>& orig_val, int val_subset,
                         RngStream& rng, const FisherDiag* fisher = nullptr);

struct Aggregate {
    double median = 0.0;
    double stddev = 0.0;
};

/// Median (mean of the central pair when even) and population standard
/// deviation.
Aggregate aggregate(std::vector<double> values);

struct TrialRow {
    int trial = 0;
    std::string method;
    StatsMode stats_mode = StatsMode::UPDATED_STATS;
    int buffer_batch = 0;
    int copy_count = 0;
    double lr = 0.0;
    int iters = 0;
    Termination termination = Termination::ITERATION_CAP;
    bool fallback = false;
    double final_prob = 0.0;
    double acc_new = 0.0;
    double acc_orig = 0.0;
};

struct CellKey {
    std::string method;
    StatsMode stats_mode = StatsMode::UPDATED_STATS;
    int buffer_batch = 0;
    int copy_count = 0;

    bool operator==(const CellKey&) const = default;
};

struct CellSummary {
    CellKey cell;
    int trials = 0;
    Aggregate acc_new, acc_orig, iters;
};

/// One adaptation run's termination record, kept for every run including
/// grid points that were discarded by the search.
struct RunRecord {
    int iters = 0;
    int max_iters = 0;
    Termination termination = Termination::ITERATION_CAP;
    double final_prob = 0.0;
    double min_gem_dot = 0.0;
    bool gem_used = false;
};

struct SweepConfig {
    std::vector<std::string> methods = {"ce", "ce+ewc", "ce+gem"};
    std::vector<StatsMode> modes = {StatsMode::UPDATED_STATS, StatsMode::FIXED_STATS};
    std::vector<std::pair<int, int>> regimes = {{32, 32}, {63, 1}};
    int trials = 10;
    std::vector<double> lr_grid = {1e-4, 1e-3, 1e-2};
    int buffer_capacity = 1000;
    int val_subset = 500;
    OneShotConfig adapt;

    bool operator==(const SweepConfig&) const = default;
};

void validate(const SweepConfig& cfg);

struct SweepResult {
    std::vector<TrialRow> rows;
    std::vector<CellSummary> summaries;
    std::vector<RunRecord> all_runs;
    std::vector<std::string> warnings;
};

/// Full grid over method x stats mode x batch regime. The buffer and the
/// per-trial new samples are drawn once and shared by every cell, so cells
/// are paired.
SweepResult run_sweep(Model& base, const DomainData& domains, const SweepConfig& cfg,
                      RngStream& rng);

/// Accuracy summaries per cell from per-trial rows.
std::vector<CellSummary> summarize(const std::vector<TrialRow>& rows);

struct TraceConfig {
    int trials = 5;
    int steps = 100;
    int buffer_batch = 32;
    int copy_count = 32;
    int new_batch = 32;
    int new_pool = 1000;
    double lr = 1e-5;
    AugmentConfig augment;

    bool operator==(const TraceConfig&) const = default;
};

struct TraceSet {
    std::vector<StatsTrace> one_shot;
    std::vector<StatsTrace> many_shot;
    std::vector<std::string> warnings;
};

/// Running-statistics traces under live batch statistics, run for the full
/// step budget with no convergence judging. The one-shot regime mixes buffer
/// draws with augmented copies of a single misclassified sample; the
/// many-shot regime mixes them with distinct new-domain samples instead.
TraceSet run_stat_traces(Model& base, const DomainData& domains, const ReplayBuffer& buf,
                         const TraceConfig& cfg, RngStream& rng);

/// CSV with columns trial,method,stats_mode,lr,iters,terminated,acc_new,acc_orig.
std::string report_csv(const std::vector<TrialRow>& rows);

/// Per-trial rows plus one median row per cell, with batch sizes and spread
/// columns appended.
std::string sweep_csv(const SweepResult& result);

std::string summary_json(const SweepResult& result);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace oneshot
