#include "oneshot/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace oneshot {

void validate(const DomainSpec& spec) {
    if (spec.c1 == spec.c2)
        throw std::invalid_argument("c1 and c2 must be different classes");
    if (spec.c1 < 1 || spec.c2 < 1)
        throw std::invalid_argument("class labels are 1-based");
    if (!(spec.train_frac > 0.0) || !(spec.val_frac > 0.0) ||
        spec.train_frac + spec.val_frac >= 1.0)
        throw std::invalid_argument(
            "split fractions must be positive with train_frac + val_frac < 1");
}

namespace {

Splits split_three(std::vector<Sample> side, double train_frac, double val_frac,
                   RngStream& rng) {
    shuffle(rng, side);
    const int n = static_cast<int>(side.size());
    const int train_n = static_cast<int>(train_frac * n);
    const int val_n = static_cast<int>(val_frac * n);
    Splits out;
    out.train.assign(side.begin(), side.begin() + train_n);
    out.val.assign(side.begin() + train_n, side.begin() + train_n + val_n);
    out.test.assign(side.begin() + train_n + val_n, side.end());
    return out;
}

}  // namespace

DomainData split_domains(const std::vector<Sample>& data, const DomainSpec& spec,
                         RngStream& rng) {
    validate(spec);
    if (data.empty()) throw std::invalid_argument("dataset is empty");

    std::set<int> classes;
    for (const Sample& s : data) {
        if (s.label < 1) throw std::invalid_argument("labels must be 1-based");
        classes.insert(s.label);
    }
    if (!classes.count(spec.c1))
        throw std::invalid_argument("class " + std::to_string(spec.c1) +
                                    " is absent from the dataset");
    if (!classes.count(spec.c2))
        throw std::invalid_argument("class " + std::to_string(spec.c2) +
                                    " is absent from the dataset");

    std::map<int, int> remap;
    int next = 1;
    for (int c : classes)
        if (c != spec.c1) remap[c] = next++;
    if (static_cast<int>(remap.size()) < 2)
        throw std::invalid_argument("need at least two classes besides c1");

    DomainData out;
    out.num_classes = static_cast<int>(remap.size());
    out.merged_label = remap.at(spec.c2);

    std::vector<Sample> orig, fresh;
    for (const Sample& s : data) {
        Sample copy = s;
        if (s.label == spec.c1) {
            copy.label = out.merged_label;
            fresh.push_back(std::move(copy));
        } else {
            copy.label = remap.at(s.label);
            orig.push_back(std::move(copy));
        }
    }

    RngStream orig_rng = rng.child("orig");
    RngStream new_rng = rng.child("new");
    out.orig = split_three(std::move(orig), spec.train_frac, spec.val_frac, orig_rng);
    out.new_domain = split_three(std::move(fresh), spec.train_frac, spec.val_frac, new_rng);

    auto check = [](const std::vector<Sample>& part, const char* what) {
        if (part.empty())
            throw std::invalid_argument(std::string("split left no samples for ") + what);
    };
    check(out.orig.train, "orig train");
    check(out.orig.val, "orig val");
    check(out.orig.test, "orig test");
    check(out.new_domain.train, "new train");
    check(out.new_domain.val, "new val");
    check(out.new_domain.test, "new test");
    return out;
}

void validate(const BaseTrainConfig& cfg) {
    if (cfg.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
    if (cfg.batch_size < 2)
        throw std::invalid_argument("batch_size must be at least 2 for batch statistics");
    if (!(cfg.lr_max >= cfg.lr_min) || cfg.lr_min < 0.0 || !std::isfinite(cfg.lr_max))
        throw std::invalid_argument("need finite lr_max >= lr_min >= 0");
}

BaseTrainResult train_base(Model& model, const std::vector<Sample>& train,
                           const BaseTrainConfig& cfg, RngStream& rng) {
    validate(cfg);
    BaseTrainResult out;
    if (cfg.epochs == 0) return out;
    const int per_epoch = static_cast<int>(train.size()) / cfg.batch_size;
    if (per_epoch == 0)
        throw std::invalid_argument("training set of " + std::to_string(train.size()) +
                                    " is smaller than one batch of " +
                                    std::to_string(cfg.batch_size));
    const int total_steps = cfg.epochs * per_epoch;

    model.mode = StatsMode::UPDATED_STATS;
    std::vector<int> order(train.size());
    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        shuffle(rng, order);
        double epoch_loss = 0.0;
        for (int b = 0; b < per_epoch; ++b) {
            std::vector<int> idx(order.begin() + b * cfg.batch_size,
                                 order.begin() + (b + 1) * cfg.batch_size);
            Batch batch = make_batch(train, idx);
            ForwardContext ctx = model.context();
            const double loss = model.graph.forward(ctx, batch.x, batch.labels);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged at epoch " +
                                         std::to_string(epoch + 1) + " step " +
                                         std::to_string(b + 1));
            ParameterSet grads = model.graph.backward();
            sgd_step(model.params, grads,
                     cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min));
            epoch_loss += loss;
            ++step;
        }
        out.epoch_loss.push_back(epoch_loss / per_epoch);
    }
    out.steps = step;
    return out;
}

std::vector<int> pick_misclassified(Model& model, const std::vector<Sample>& pool, int n,
                                    RngStream& rng, std::string* warning) {
    if (pool.empty()) throw std::invalid_argument("sample pool is empty");
    if (n < 1) throw std::invalid_argument("need a positive sample count");
    std::vector<int> miss;
    const int chunk = 256;
    for (int start = 0; start < static_cast<int>(pool.size()); start += chunk) {
        const int stop = std::min<int>(start + chunk, static_cast<int>(pool.size()));
        std::vector<Sample> part(pool.begin() + start, pool.begin() + stop);
        Prediction pred = predict(model, make_batch(part).x);
        for (int i = 0; i < stop - start; ++i)
            if (pred.labels[static_cast<std::size_t>(i)] !=
                pool[static_cast<std::size_t>(start + i)].label)
                miss.push_back(start + i);
    }
    if (static_cast<int>(miss.size()) <= n) {
        if (static_cast<int>(miss.size()) < n && warning)
            *warning = "only " + std::to_string(miss.size()) + " of " + std::to_string(n) +
                       " requested samples are misclassified";
        return miss;
    }
    std::vector<int> chosen;
    sample_without_replacement(rng, static_cast<int>(miss.size()), n, chosen);
    std::vector<int> out;
    out.reserve(chosen.size());
    for (int i : chosen) out.push_back(miss[static_cast<std::size_t>(i)]);
    return out;
}

double sample_prob(Model& model, const Sample& s) {
    if (s.label < 1 || s.label > model.spec.num_classes)
        throw std::invalid_argument("sample label " + std::to_string(s.label) +
                                    " outside 1.." +
                                    std::to_string(model.spec.num_classes));
    Prediction pred = predict(model, make_batch({s}).x);
    return pred.probs[static_cast<std::size_t>(s.label - 1)];
}

bool judge(Model& model, const Sample& s, double delta) {
    return sample_prob(model, s) > delta;
}

std::string to_string(Termination t) {
    return t == Termination::CONVERGED ? "converged" : "iteration_cap";
}

void validate(const OneShotConfig& cfg) {
    if (cfg.method != "ce" && cfg.method != "ce+ewc" && cfg.method != "ce+gem")
        throw std::invalid_argument("unknown method " + cfg.method);
    if (cfg.stats_mode == StatsMode::INFERENCE)
        throw std::invalid_argument("cannot train in inference mode");
    if (cfg.lr < 0.0 || !std::isfinite(cfg.lr))
        throw std::invalid_argument("learning rate must be non-negative and finite");
    if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be positive");
    if (!(cfg.delta > 0.0) || !(cfg.delta < 1.0))
        throw std::invalid_argument("delta must lie in (0,1)");
    if (cfg.buffer_batch < 1) throw std::invalid_argument("buffer_batch must be positive");
    if (cfg.copy_count < 1) throw std::invalid_argument("copy_count must be positive");
    if (cfg.ewc_lambda < 0.0)
        throw std::invalid_argument("ewc_lambda must be non-negative");
    validate(cfg.augment);
}

namespace {

OneShotResult adapt_model(Model& model, const ReplayBuffer& buf,
                          const Sample* judge_sample,
                          const std::function<Batch(RngStream&)>& next_batch,
                          const OneShotConfig& cfg, RngStream& rng,
                          const FisherDiag* fisher) {
    validate(cfg);
    model.mode = cfg.stats_mode;
    const bool use_ewc = cfg.method == "ce+ewc";
    const bool use_gem = cfg.method == "ce+gem";

    FisherDiag local;
    if (use_ewc) {
        if (!fisher) {
            local = ewc_fisher(model, buf);
            fisher = &local;
        }
        attach_ewc_penalty(model, *fisher, cfg.ewc_lambda);
    }

    AdamState adam = make_adam_state(model.params);
    OneShotResult out;
    out.gem_used = use_gem;
    out.min_gem_dot = std::numeric_limits<double>::infinity();

    auto snapshot = [&](int step) {
        for (std::size_t i = 0; i < model.bn_states.size(); ++i)
            record_trace(out.trace, step, "bn" + std::to_string(i + 1),
                         model.bn_states[i]);
    };
    snapshot(0);

    bool converged = false;
    int step = 0;
    for (; step < cfg.max_iters; ++step) {
        if (!cfg.run_full_length && judge_sample && judge(model, *judge_sample, cfg.delta)) {
            converged = true;
            break;
        }
        Batch b = next_batch(rng);
        ForwardContext ctx = model.context();
        model.graph.forward(ctx, b.x, b.labels);
        ParameterSet grads = model.graph.backward();
        if (use_gem) {
            ParameterSet ref = gem_reference_gradient(model, buf, cfg.buffer_batch, rng);
            GemProjection proj = gem_project(grads, ref);
            if (proj.degenerate) out.gem_degenerate = true;
            out.min_gem_dot = std::min(out.min_gem_dot, proj.post_dot);
            grads = std::move(proj.grads);
        }
        adam_step(model.params, grads, adam, cfg.lr);
        snapshot(step + 1);
    }
    out.iters = step;
    out.termination = converged ? Termination::CONVERGED : Termination::ITERATION_CAP;
    if (judge_sample) out.final_prob = sample_prob(model, *judge_sample);
    if (!std::isfinite(out.min_gem_dot)) out.min_gem_dot = 0.0;
    return out;
}

}  // namespace

OneShotResult one_shot_dil(Model& model, const ReplayBuffer& buf, const Sample& new_sample,
                           const OneShotConfig& cfg, RngStream& rng,
                           const FisherDiag* fisher) {
    auto next = [&](RngStream& r) {
        return compose_minibatch(buf, cfg.buffer_batch, new_sample, cfg.copy_count,
                                 cfg.augment, r)
            .batch;
    };
    return adapt_model(model, buf, &new_sample, next, cfg, rng, fisher);
}

LrSearchResult lr_search(const Model& base, const ReplayBuffer& buf,
                         const Sample& new_sample, const OneShotConfig& cfg,
                         const std::vector<double>& grid,
                         const std::vector<Sample>& orig_val, int val_subset,
                         RngStream& rng, const FisherDiag* fisher) {
    if (grid.empty()) throw std::invalid_argument("learning-rate grid is empty");
    if (orig_val.empty()) throw std::invalid_argument("validation split is empty");

    std::vector<Sample> val_sub;
    if (val_subset > 0 && val_subset < static_cast<int>(orig_val.size())) {
        RngStream vr = rng.child("valsub");
        std::vector<int> idx;
        sample_without_replacement(vr, static_cast<int>(orig_val.size()), val_subset, idx);
        val_sub.reserve(idx.size());
        for (int i : idx) val_sub.push_back(orig_val[static_cast<std::size_t>(i)]);
    } else {
        val_sub = orig_val;
    }

    LrSearchResult out;
    std::vector<Model> models;
    models.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Model m = base;
        OneShotConfig c = cfg;
        c.lr = grid[i];
        RngStream r = rng.child("lr" + std::to_string(i));
        LrSearchEntry e;
        e.lr = grid[i];
        e.result = one_shot_dil(m, buf, new_sample, c, r, fisher);
        e.capped = e.result.termination == Termination::ITERATION_CAP;
        e.val_acc = accuracy(m, val_sub);
        out.entries.push_back(std::move(e));
        models.push_back(std::move(m));
    }

    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });

    std::ptrdiff_t best = -1;
    for (std::size_t i : order) {
        if (out.entries[i].capped) continue;
        if (best < 0 ||
            out.entries[i].val_acc > out.entries[static_cast<std::size_t>(best)].val_acc)
            best = static_cast<std::ptrdiff_t>(i);
    }
    if (best < 0) {
        out.fallback = true;
        for (std::size_t i : order) {
            if (best < 0 || out.entries[i].result.final_prob >
                                out.entries[static_cast<std::size_t>(best)].result.final_prob)
                best = static_cast<std::ptrdiff_t>(i);
        }
    }
    const std::size_t win = static_cast<std::size_t>(best);
    out.model = std::move(models[win]);
    out.lr = out.entries[win].lr;
    out.val_acc = out.entries[win].val_acc;
    out.result = out.entries[win].result;
    return out;
}

Aggregate aggregate(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("nothing to aggregate");
    std::sort(values.begin(), values.end());
    Aggregate out;
    const std::size_t n = values.size();
    out.median = (n % 2 == 1) ? values[n / 2]
                              : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    out.stddev = std::sqrt(var / static_cast<double>(n));
    return out;
}

void validate(const SweepConfig& cfg) {
    if (cfg.methods.empty()) throw std::invalid_argument("no methods to sweep");
    if (cfg.modes.empty()) throw std::invalid_argument("no stats modes to sweep");
    if (cfg.regimes.empty()) throw std::invalid_argument("no batch regimes to sweep");
    if (cfg.trials < 1) throw std::invalid_argument("trials must be positive");
    if (cfg.lr_grid.empty()) throw std::invalid_argument("learning-rate grid is empty");
    if (cfg.buffer_capacity < 1)
        throw std::invalid_argument("buffer_capacity must be positive");
    for (StatsMode m : cfg.modes)
        if (m == StatsMode::INFERENCE)
            throw std::invalid_argument("cannot train in inference mode");
}

std::vector<CellSummary> summarize(const std::vector<TrialRow>& rows) {
    std::vector<CellSummary> out;
    std::vector<CellKey> seen;
    for (const TrialRow& r : rows) {
        CellKey key{r.method, r.stats_mode, r.buffer_batch, r.copy_count};
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) seen.push_back(key);
    }
    for (const CellKey& key : seen) {
        std::vector<double> acc_new, acc_orig, iters;
        for (const TrialRow& r : rows) {
            if (CellKey{r.method, r.stats_mode, r.buffer_batch, r.copy_count} != key)
                continue;
            acc_new.push_back(r.acc_new);
            acc_orig.push_back(r.acc_orig);
            iters.push_back(r.iters);
        }
        CellSummary s;
        s.cell = key;
        s.trials = static_cast<int>(acc_new.size());
        s.acc_new = aggregate(acc_new);
        s.acc_orig = aggregate(acc_orig);
        s.iters = aggregate(iters);
        out.push_back(std::move(s));
    }
    return out;
}

SweepResult run_sweep(Model& base, const DomainData& domains, const SweepConfig& cfg,
                      RngStream& rng) {
    validate(cfg);
    SweepResult out;

    const int capacity =
        std::min<int>(cfg.buffer_capacity, static_cast<int>(domains.orig.train.size()));
    if (capacity < cfg.buffer_capacity)
        out.warnings.push_back("buffer capacity clamped to the training split size " +
                               std::to_string(capacity));
    RngStream buf_rng = rng.child("buffer");
    ReplayBuffer buf = make_replay_buffer(domains.orig.train, capacity, buf_rng);

    RngStream pick_rng = rng.child("pick");
    std::string warn;
    std::vector<int> picked =
        pick_misclassified(base, domains.new_domain.train, cfg.trials, pick_rng, &warn);
    if (!warn.empty()) out.warnings.push_back(warn);
    if (picked.empty())
        throw std::runtime_error("no new-domain training sample is misclassified");
    const int trials = std::min<int>(cfg.trials, static_cast<int>(picked.size()));

    bool need_fisher = false;
    for (const std::string& m : cfg.methods)
        if (m == "ce+ewc") need_fisher = true;
    FisherDiag fd;
    if (need_fisher) fd = ewc_fisher(base, buf);

    int cell_index = 0;
    for (const std::string& method : cfg.methods) {
        for (StatsMode mode : cfg.modes) {
            for (const auto& [buffer_batch, copy_count] : cfg.regimes) {
                OneShotConfig acfg = cfg.adapt;
                acfg.method = method;
                acfg.stats_mode = mode;
                acfg.buffer_batch = buffer_batch;
                acfg.copy_count = copy_count;
                for (int t = 0; t < trials; ++t) {
                    const Sample& x0 =
                        domains.new_domain.train[static_cast<std::size_t>(
                            picked[static_cast<std::size_t>(t)])];
                    RngStream tr = rng.child("cell" + std::to_string(cell_index) +
                                             ".trial" + std::to_string(t));
                    LrSearchResult res =
                        lr_search(base, buf, x0, acfg, cfg.lr_grid, domains.orig.val,
                                  cfg.val_subset, tr,
                                  method == "ce+ewc" ? &fd : nullptr);
                    for (const LrSearchEntry& e : res.entries)
                        out.all_runs.push_back({e.result.iters, acfg.max_iters,
                                                e.result.termination, e.result.final_prob,
                                                e.result.min_gem_dot, e.result.gem_used});
                    TrialRow row;
                    row.trial = t + 1;
                    row.method = method;
                    row.stats_mode = mode;
                    row.buffer_batch = buffer_batch;
                    row.copy_count = copy_count;
                    row.lr = res.lr;
                    row.iters = res.result.iters;
                    row.termination = res.result.termination;
                    row.fallback = res.fallback;
                    row.final_prob = res.result.final_prob;
                    row.acc_new = accuracy(res.model, domains.new_domain.test);
                    row.acc_orig = accuracy(res.model, domains.orig.test);
                    out.rows.push_back(std::move(row));
                }
                ++cell_index;
            }
        }
    }
    out.summaries = summarize(out.rows);
    return out;
}

TraceSet run_stat_traces(Model& base, const DomainData& domains, const ReplayBuffer& buf,
                         const TraceConfig& cfg, RngStream& rng) {
    if (cfg.trials < 1) throw std::invalid_argument("trials must be positive");
    if (cfg.steps < 1) throw std::invalid_argument("steps must be positive");
    if (cfg.buffer_batch < 1 || cfg.copy_count < 1 || cfg.new_batch < 1 ||
        cfg.new_pool < 1)
        throw std::invalid_argument("batch and pool sizes must be positive");
    if (cfg.lr < 0.0 || !std::isfinite(cfg.lr))
        throw std::invalid_argument("learning rate must be non-negative and finite");
    validate(cfg.augment);

    TraceSet out;
    RngStream pick_rng = rng.child("pick");
    std::string warn;
    std::vector<int> picked =
        pick_misclassified(base, domains.new_domain.train, cfg.trials, pick_rng, &warn);
    if (!warn.empty()) out.warnings.push_back(warn);
    if (picked.empty())
        throw std::runtime_error("no new-domain training sample is misclassified");

    const int pool_n =
        std::min<int>(cfg.new_pool, static_cast<int>(domains.new_domain.train.size()));
    if (pool_n < cfg.new_pool)
        out.warnings.push_back("new-domain pool clamped to " + std::to_string(pool_n) +
                               " samples");
    RngStream pool_rng = rng.child("newpool");
    ReplayBuffer new_pool = make_replay_buffer(domains.new_domain.train, pool_n, pool_rng);

    OneShotConfig shared;
    shared.method = "ce";
    shared.stats_mode = StatsMode::UPDATED_STATS;
    shared.lr = cfg.lr;
    shared.max_iters = cfg.steps;
    shared.buffer_batch = cfg.buffer_batch;
    shared.copy_count = cfg.copy_count;
    shared.augment = cfg.augment;
    shared.run_full_length = true;

    for (int t = 0; t < cfg.trials; ++t) {
        const Sample& x0 = domains.new_domain.train[static_cast<std::size_t>(
            picked[static_cast<std::size_t>(t) % picked.size()])];
        {
            Model m = base;
            RngStream r = rng.child("one" + std::to_string(t));
            OneShotResult res = one_shot_dil(m, buf, x0, shared, r);
            out.one_shot.push_back(std::move(res.trace));
        }
        {
            Model m = base;
            RngStream r = rng.child("many" + std::to_string(t));
            auto next = [&](RngStream& rr) {
                return compose_mixed_batch(buf, cfg.buffer_batch, new_pool, cfg.new_batch,
                                           rr)
                    .batch;
            };
            OneShotResult res = adapt_model(m, buf, nullptr, next, shared, r, nullptr);
            out.many_shot.push_back(std::move(res.trace));
        }
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string report_csv(const std::vector<TrialRow>& rows) {
    std::string out = "trial,method,stats_mode,lr,iters,terminated,acc_new,acc_orig\n";
    for (const TrialRow& r : rows) {
        out += std::to_string(r.trial) + "," + r.method + "," + to_string(r.stats_mode) +
               "," + fmt(r.lr) + "," + std::to_string(r.iters) + "," +
               to_string(r.termination) + "," + fmt(r.acc_new) + "," + fmt(r.acc_orig) +
               "\n";
    }
    return out;
}

std::string sweep_csv(const SweepResult& result) {
    std::string out =
        "trial,method,stats_mode,buffer_batch,copy_count,lr,iters,terminated,"
        "acc_new,acc_orig,acc_new_std,acc_orig_std\n";
    for (const TrialRow& r : result.rows) {
        out += std::to_string(r.trial) + "," + r.method + "," + to_string(r.stats_mode) +
               "," + std::to_string(r.buffer_batch) + "," + std::to_string(r.copy_count) +
               "," + fmt(r.lr) + "," + std::to_string(r.iters) + "," +
               to_string(r.termination) + "," + fmt(r.acc_new) + "," + fmt(r.acc_orig) +
               ",,\n";
    }
    for (const CellSummary& s : result.summaries) {
        out += std::string("median,") + s.cell.method + "," + to_string(s.cell.stats_mode) +
               "," + std::to_string(s.cell.buffer_batch) + "," +
               std::to_string(s.cell.copy_count) + ",," + fmt(s.iters.median) + ",," +
               fmt(s.acc_new.median) + "," + fmt(s.acc_orig.median) + "," +
               fmt(s.acc_new.stddev) + "," + fmt(s.acc_orig.stddev) + "\n";
    }
    return out;
}

std::string summary_json(const SweepResult& result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const CellSummary& s : result.summaries) {
        cells.push_back({{"method", s.cell.method},
                         {"stats_mode", to_string(s.cell.stats_mode)},
                         {"buffer_batch", s.cell.buffer_batch},
                         {"copy_count", s.cell.copy_count},
                         {"trials", s.trials},
                         {"acc_new", {{"median", s.acc_new.median},
                                      {"std", s.acc_new.stddev}}},
                         {"acc_orig", {{"median", s.acc_orig.median},
                                       {"std", s.acc_orig.stddev}}},
                         {"iters", {{"median", s.iters.median},
                                    {"std", s.iters.stddev}}}});
    }
    nlohmann::json j = {{"cells", cells}, {"warnings", result.warnings}};
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace oneshot
