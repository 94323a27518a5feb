#include "oneshot/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace oneshot {

namespace {

using nlohmann::json;

/// Reads keys out of one JSON object, remembering which were touched so
/// leftovers can be reported by name.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw ConfigError(path_ + " must be a JSON object");
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        try {
            j_.at(key).get_to(out);
        } catch (const json::exception&) {
            throw ConfigError("bad value for " + path_ + "." + key);
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* object(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        const json& sub = j_.at(key);
        if (!sub.is_object())
            throw ConfigError(path_ + "." + key + " must be a JSON object");
        return &sub;
    }

    void finish() const {
        std::vector<std::string> unknown;
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) unknown.push_back(item.key());
        if (unknown.empty()) return;
        std::string msg = "unknown keys in " + path_ + ":";
        for (const std::string& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    const std::string& path() const { return path_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

StatsMode parse_mode(const std::string& s, const std::string& where) {
    try {
        return stats_mode_from_string(s);
    } catch (const std::exception&) {
        throw ConfigError("bad value for " + where + ": " + s);
    }
}

void read_augment(const json& j, const std::string& path, AugmentConfig& cfg) {
    ObjectReader r(j, path);
    r.get("crop_prob", cfg.crop_prob);
    r.get("affine_prob", cfg.affine_prob);
    r.get("rotate_prob", cfg.rotate_prob);
    r.get("perspective_prob", cfg.perspective_prob);
    r.get("crop_scale_min", cfg.crop_scale_min);
    r.get("crop_scale_max", cfg.crop_scale_max);
    r.get("max_translate", cfg.max_translate);
    r.get("max_shear_deg", cfg.max_shear_deg);
    r.get("max_rotate_deg", cfg.max_rotate_deg);
    r.get("perspective_distortion", cfg.perspective_distortion);
    r.finish();
}

json dump_augment(const AugmentConfig& cfg) {
    return {{"crop_prob", cfg.crop_prob},
            {"affine_prob", cfg.affine_prob},
            {"rotate_prob", cfg.rotate_prob},
            {"perspective_prob", cfg.perspective_prob},
            {"crop_scale_min", cfg.crop_scale_min},
            {"crop_scale_max", cfg.crop_scale_max},
            {"max_translate", cfg.max_translate},
            {"max_shear_deg", cfg.max_shear_deg},
            {"max_rotate_deg", cfg.max_rotate_deg},
            {"perspective_distortion", cfg.perspective_distortion}};
}

void read_adapt(const json& j, const std::string& path, OneShotConfig& cfg) {
    ObjectReader r(j, path);
    r.get("method", cfg.method);
    std::string mode = to_string(cfg.stats_mode);
    r.get("stats_mode", mode);
    cfg.stats_mode = parse_mode(mode, path + ".stats_mode");
    r.get("lr", cfg.lr);
    r.get("max_iters", cfg.max_iters);
    r.get("delta", cfg.delta);
    r.get("buffer_batch", cfg.buffer_batch);
    r.get("copy_count", cfg.copy_count);
    r.get("ewc_lambda", cfg.ewc_lambda);
    r.get("run_full_length", cfg.run_full_length);
    if (const json* sub = r.object("augment"))
        read_augment(*sub, path + ".augment", cfg.augment);
    r.finish();
}

json dump_adapt(const OneShotConfig& cfg) {
    return {{"method", cfg.method},
            {"stats_mode", to_string(cfg.stats_mode)},
            {"lr", cfg.lr},
            {"max_iters", cfg.max_iters},
            {"delta", cfg.delta},
            {"buffer_batch", cfg.buffer_batch},
            {"copy_count", cfg.copy_count},
            {"ewc_lambda", cfg.ewc_lambda},
            {"run_full_length", cfg.run_full_length},
            {"augment", dump_augment(cfg.augment)}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    ObjectReader root(j, "config");
    root.get("seed", cfg.seed);
    root.get("output_dir", cfg.output_dir);

    if (const json* d = root.object("dataset")) {
        ObjectReader r(*d, "dataset");
        r.get("source", cfg.dataset.source);
        if (cfg.dataset.source != "synthetic" && cfg.dataset.source != "digits" &&
            cfg.dataset.source != "idx")
            throw ConfigError("dataset.source must be synthetic, digits or idx");
        r.get("images", cfg.dataset.images);
        r.get("labels", cfg.dataset.labels);
        SyntheticSpec& s = cfg.dataset.synthetic;
        r.get("per_class", s.per_class);
        r.get("num_classes", s.num_classes);
        r.get("image_size", s.image_size);
        r.get("blob_sigma", s.blob_sigma);
        r.get("ring_radius", s.ring_radius);
        r.get("center_jitter", s.center_jitter);
        r.get("mean_scale", s.mean_scale);
        r.get("noise_scale", s.noise_scale);
        r.get("amp_jitter", s.amp_jitter);
        r.finish();
        if (cfg.dataset.source == "idx" &&
            (cfg.dataset.images.empty() || cfg.dataset.labels.empty()))
            throw ConfigError("dataset.images and dataset.labels are required for idx");
    }
    cfg.dataset.synthetic.seed = cfg.seed;

    if (const json* d = root.object("domains")) {
        ObjectReader r(*d, "domains");
        r.get("c1", cfg.domains.c1);
        r.get("c2", cfg.domains.c2);
        r.get("train_frac", cfg.domains.train_frac);
        r.get("val_frac", cfg.domains.val_frac);
        r.finish();
    }

    if (const json* d = root.object("model")) {
        ObjectReader r(*d, "model");
        r.get("arch", cfg.arch);
        r.get("hidden", cfg.hidden);
        r.finish();
    }

    if (const json* d = root.object("base")) {
        ObjectReader r(*d, "base");
        r.get("epochs", cfg.base.epochs);
        r.get("batch_size", cfg.base.batch_size);
        r.get("lr_max", cfg.base.lr_max);
        r.get("lr_min", cfg.base.lr_min);
        r.finish();
    }

    if (const json* d = root.object("adapt")) read_adapt(*d, "adapt", cfg.adapt);

    if (const json* d = root.object("sweep")) {
        ObjectReader r(*d, "sweep");
        r.get("methods", cfg.sweep.methods);
        if (r.has("modes")) {
            std::vector<std::string> modes;
            r.get("modes", modes);
            cfg.sweep.modes.clear();
            for (const std::string& m : modes)
                cfg.sweep.modes.push_back(parse_mode(m, "sweep.modes"));
        }
        if (r.has("regimes")) {
            std::vector<std::vector<int>> regimes;
            r.get("regimes", regimes);
            cfg.sweep.regimes.clear();
            for (const auto& p : regimes) {
                if (p.size() != 2)
                    throw ConfigError("sweep.regimes entries must be [buffer, copies]");
                cfg.sweep.regimes.emplace_back(p[0], p[1]);
            }
        }
        r.get("trials", cfg.sweep.trials);
        r.get("lr_grid", cfg.sweep.lr_grid);
        r.get("buffer_capacity", cfg.sweep.buffer_capacity);
        r.get("val_subset", cfg.sweep.val_subset);
        r.finish();
    }
    cfg.sweep.adapt = cfg.adapt;

    if (const json* d = root.object("trace")) {
        ObjectReader r(*d, "trace");
        r.get("trials", cfg.trace.trials);
        r.get("steps", cfg.trace.steps);
        r.get("buffer_batch", cfg.trace.buffer_batch);
        r.get("copy_count", cfg.trace.copy_count);
        r.get("new_batch", cfg.trace.new_batch);
        r.get("new_pool", cfg.trace.new_pool);
        r.get("lr", cfg.trace.lr);
        if (const json* sub = r.object("augment"))
            read_augment(*sub, "trace.augment", cfg.trace.augment);
        r.finish();
    }

    root.finish();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json dataset = {{"source", cfg.dataset.source},
                    {"images", cfg.dataset.images},
                    {"labels", cfg.dataset.labels},
                    {"per_class", cfg.dataset.synthetic.per_class},
                    {"num_classes", cfg.dataset.synthetic.num_classes},
                    {"image_size", cfg.dataset.synthetic.image_size},
                    {"blob_sigma", cfg.dataset.synthetic.blob_sigma},
                    {"ring_radius", cfg.dataset.synthetic.ring_radius},
                    {"center_jitter", cfg.dataset.synthetic.center_jitter},
                    {"mean_scale", cfg.dataset.synthetic.mean_scale},
                    {"noise_scale", cfg.dataset.synthetic.noise_scale},
                    {"amp_jitter", cfg.dataset.synthetic.amp_jitter}};
    std::vector<std::string> modes;
    for (StatsMode m : cfg.sweep.modes) modes.push_back(to_string(m));
    std::vector<std::vector<int>> regimes;
    for (const auto& [b, c] : cfg.sweep.regimes) regimes.push_back({b, c});
    json j = {
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"dataset", dataset},
        {"domains",
         {{"c1", cfg.domains.c1},
          {"c2", cfg.domains.c2},
          {"train_frac", cfg.domains.train_frac},
          {"val_frac", cfg.domains.val_frac}}},
        {"model", {{"arch", cfg.arch}, {"hidden", cfg.hidden}}},
        {"base",
         {{"epochs", cfg.base.epochs},
          {"batch_size", cfg.base.batch_size},
          {"lr_max", cfg.base.lr_max},
          {"lr_min", cfg.base.lr_min}}},
        {"adapt", dump_adapt(cfg.adapt)},
        {"sweep",
         {{"methods", cfg.sweep.methods},
          {"modes", modes},
          {"regimes", regimes},
          {"trials", cfg.sweep.trials},
          {"lr_grid", cfg.sweep.lr_grid},
          {"buffer_capacity", cfg.sweep.buffer_capacity},
          {"val_subset", cfg.sweep.val_subset}}},
        {"trace",
         {{"trials", cfg.trace.trials},
          {"steps", cfg.trace.steps},
          {"buffer_batch", cfg.trace.buffer_batch},
          {"copy_count", cfg.trace.copy_count},
          {"new_batch", cfg.trace.new_batch},
          {"new_pool", cfg.trace.new_pool},
          {"lr", cfg.trace.lr},
          {"augment", dump_augment(cfg.trace.augment)}}}};
    return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& cfg) {
    try {
        if (cfg.dataset.source == "synthetic") validate(cfg.dataset.synthetic);
        if (cfg.dataset.source == "digits" && cfg.dataset.synthetic.per_class < 1)
            throw std::invalid_argument("dataset.per_class must be positive");
        validate(cfg.domains);
        if (cfg.arch != "mlp" && cfg.arch != "small_cnn")
            throw std::invalid_argument("model.arch must be mlp or small_cnn");
        if (cfg.hidden.empty())
            throw std::invalid_argument("model.hidden must not be empty");
        validate(cfg.base);
        validate(cfg.adapt);
        SweepConfig sweep = cfg.sweep;
        sweep.adapt = cfg.adapt;
        validate(sweep);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::vector<Sample> load_dataset(const DatasetConfig& cfg) {
    if (cfg.source == "synthetic") return gen_synthetic(cfg.synthetic);
    if (cfg.source == "digits")
        return gen_digits(cfg.synthetic.per_class, cfg.synthetic.seed);
    if (cfg.source == "idx") return load_idx_dataset(cfg.images, cfg.labels);
    throw ConfigError("dataset.source must be synthetic, digits or idx");
}

}  // namespace oneshot
