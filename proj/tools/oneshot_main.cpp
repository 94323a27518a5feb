#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oneshot/checkpoint.hpp"
#include "oneshot/config.hpp"
#include "oneshot/harness.hpp"

namespace {

using namespace oneshot;

struct Pipeline {
    DomainData domains;
    ModelSpec spec;
};

Pipeline make_pipeline(const ExperimentConfig& cfg) {
    std::vector<Sample> data = load_dataset(cfg.dataset);
    RngStream split_rng = RngStream::named(cfg.seed, "split");
    Pipeline p;
    p.domains = split_domains(data, cfg.domains, split_rng);

    const bool flatten = cfg.arch == "mlp" && p.domains.orig.train[0].x.ndim() > 1;
    if (flatten) {
        for (Splits* s : {&p.domains.orig, &p.domains.new_domain}) {
            s->train = flatten_samples(s->train);
            s->val = flatten_samples(s->val);
            s->test = flatten_samples(s->test);
        }
    }
    p.spec.arch = cfg.arch;
    p.spec.hidden = cfg.hidden;
    p.spec.num_classes = p.domains.num_classes;
    p.spec.input_shape = p.domains.orig.train[0].x.shape();
    validate(p.spec);
    return p;
}

Model load_base(const std::string& path, const Pipeline& p) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("base checkpoint " + path +
                                 " does not exist; run train-base first");
    Model model = load_checkpoint(path).model;
    if (model.spec.input_shape != p.spec.input_shape ||
        model.spec.num_classes != p.spec.num_classes)
        throw std::runtime_error("checkpoint " + path + " was trained for " +
                                 shape_string(model.spec.input_shape) + " inputs and " +
                                 std::to_string(model.spec.num_classes) +
                                 " classes, dataset gives " +
                                 shape_string(p.spec.input_shape) + " and " +
                                 std::to_string(p.spec.num_classes));
    return model;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "WARNING: " << w << "\n";
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

int cmd_train_base(const ExperimentConfig& cfg, const std::string& ckpt) {
    Pipeline p = make_pipeline(cfg);
    Model model = build_model(p.spec, cfg.seed);
    RngStream rng = RngStream::named(cfg.seed, "train_base");
    BaseTrainResult r = train_base(model, p.domains.orig.train, cfg.base, rng);

    const std::string path = ckpt.empty() ? out_path(cfg, "base.ckpt") : ckpt;
    save_checkpoint(path, model);

    nlohmann::json j = {{"epochs", cfg.base.epochs},
                        {"steps", r.steps},
                        {"epoch_loss", r.epoch_loss},
                        {"val_acc", accuracy(model, p.domains.orig.val)},
                        {"test_acc", accuracy(model, p.domains.orig.test)},
                        {"checkpoint", path}};
    write_text_file(out_path(cfg, "base_summary.json"), j.dump(2) + "\n");
    std::cout << "wrote " << path << " and " << out_path(cfg, "base_summary.json") << "\n";
    return 0;
}

SweepConfig single_cell(const ExperimentConfig& cfg) {
    SweepConfig one = cfg.sweep;
    one.methods = {cfg.adapt.method};
    one.modes = {cfg.adapt.stats_mode};
    one.regimes = {{cfg.adapt.buffer_batch, cfg.adapt.copy_count}};
    one.adapt = cfg.adapt;
    return one;
}

int cmd_one_shot(const ExperimentConfig& cfg, const std::string& ckpt) {
    Pipeline p = make_pipeline(cfg);
    Model base = load_base(ckpt.empty() ? out_path(cfg, "base.ckpt") : ckpt, p);
    RngStream rng = RngStream::named(cfg.seed, "one_shot");
    SweepResult res = run_sweep(base, p.domains, single_cell(cfg), rng);
    print_warnings(res.warnings);
    write_text_file(out_path(cfg, "report.csv"), report_csv(res.rows));
    write_text_file(out_path(cfg, "report.json"), summary_json(res));
    std::cout << "wrote " << out_path(cfg, "report.csv") << " and "
              << out_path(cfg, "report.json") << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& ckpt) {
    Pipeline p = make_pipeline(cfg);
    Model base = load_base(ckpt.empty() ? out_path(cfg, "base.ckpt") : ckpt, p);
    RngStream rng = RngStream::named(cfg.seed, "sweep");
    SweepResult res = run_sweep(base, p.domains, cfg.sweep, rng);
    print_warnings(res.warnings);
    write_text_file(out_path(cfg, "sweep.csv"), sweep_csv(res));
    write_text_file(out_path(cfg, "summary.json"), summary_json(res));
    std::cout << "wrote " << out_path(cfg, "sweep.csv") << " and "
              << out_path(cfg, "summary.json") << "\n";
    return 0;
}

int cmd_trace(const ExperimentConfig& cfg, const std::string& ckpt) {
    Pipeline p = make_pipeline(cfg);
    Model base = load_base(ckpt.empty() ? out_path(cfg, "base.ckpt") : ckpt, p);
    RngStream rng = RngStream::named(cfg.seed, "trace");
    const int capacity = std::min<int>(cfg.sweep.buffer_capacity,
                                       static_cast<int>(p.domains.orig.train.size()));
    RngStream buf_rng = rng.child("buffer");
    ReplayBuffer buf = make_replay_buffer(p.domains.orig.train, capacity, buf_rng);
    TraceSet ts = run_stat_traces(base, p.domains, buf, cfg.trace, rng);
    print_warnings(ts.warnings);
    for (std::size_t t = 0; t < ts.one_shot.size(); ++t)
        write_trace_csv(ts.one_shot[t],
                        out_path(cfg, "trace_oneshot_" + std::to_string(t + 1) + ".csv"));
    for (std::size_t t = 0; t < ts.many_shot.size(); ++t)
        write_trace_csv(ts.many_shot[t],
                        out_path(cfg, "trace_manyshot_" + std::to_string(t + 1) + ".csv"));
    std::cout << "wrote " << ts.one_shot.size() + ts.many_shot.size()
              << " trace files under " << cfg.output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"one-shot domain-incremental training harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::string checkpoint;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--output-dir", output_dir,
                        "overrides the config and ONESHOT_OUTPUT_DIR");
        sub->add_option("--checkpoint", checkpoint, "base checkpoint path");
    };
    CLI::App* train = app.add_subcommand("train-base", "train the base model");
    CLI::App* one = app.add_subcommand("one-shot", "adapt to single samples");
    CLI::App* sweep = app.add_subcommand("sweep", "full method x mode x regime grid");
    CLI::App* trace = app.add_subcommand("trace", "running-statistics traces");
    for (CLI::App* sub : {train, one, sweep, trace}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 1;
    }

    try {
        ExperimentConfig cfg = load_config(config_path);
        validate(cfg);
        if (const char* env = std::getenv("ONESHOT_OUTPUT_DIR"))
            if (*env) cfg.output_dir = env;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        std::filesystem::create_directories(cfg.output_dir);

        if (train->parsed()) return cmd_train_base(cfg, checkpoint);
        if (one->parsed()) return cmd_one_shot(cfg, checkpoint);
        if (sweep->parsed()) return cmd_sweep(cfg, checkpoint);
        return cmd_trace(cfg, checkpoint);
    } catch (const ConfigError& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR: " << e.what() << "\n";
        return 2;
    }
}
