#include "oneshot/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace oneshot {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'D', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& path;
    std::string buf;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > buf.size())
            throw std::runtime_error(path + " truncated at byte " + std::to_string(buf.size()) +
                                     ", needed " + std::to_string(off + n));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
        off += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i]))
                    << (8 * i);
        off += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(off, n);
        off += n;
        return s;
    }
};

}  // namespace

void write_archive(const std::string& path, const Archive& ar) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(ar.arrays.size() + ar.strings.size()));
    auto put_name = [&](const std::string& name, std::uint8_t kind) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(kind));
    };
    for (const auto& [name, t] : ar.arrays) {
        put_name(name, 0);
        put_u32(out, static_cast<std::uint32_t>(t.ndim()));
        for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < t.numel(); ++i) put_f64(out, t[i]);
    }
    for (const auto& [name, s] : ar.strings) {
        put_name(name, 1);
        put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

Archive read_archive(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    Reader r{path, std::string(std::istreambuf_iterator<char>(f),
                               std::istreambuf_iterator<char>()),
             0};
    if (r.bytes(4) != std::string(kMagic, 4))
        throw std::runtime_error(path + " is not a checkpoint file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error(path + " has unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    Archive ar;
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        const std::string kind = r.bytes(1);
        if (kind[0] == 0) {
            const std::uint32_t ndim = r.u32();
            std::vector<int> shape;
            std::size_t numel = 1;
            for (std::uint32_t i = 0; i < ndim; ++i) {
                shape.push_back(static_cast<int>(r.u32()));
                numel *= static_cast<std::size_t>(shape.back());
            }
            std::vector<double> data(numel);
            for (std::size_t i = 0; i < numel; ++i) data[i] = r.f64();
            ar.arrays.emplace(name, Tensor(std::move(shape), std::move(data)));
        } else if (kind[0] == 1) {
            const std::uint32_t len = r.u32();
            ar.strings.emplace(name, r.bytes(len));
        } else {
            throw std::runtime_error(path + " has unknown entry kind at byte " +
                                     std::to_string(r.off - 1));
        }
    }
    return ar;
}

namespace {

Tensor vec_tensor(const std::vector<int>& v) {
    Tensor t({std::max<int>(1, static_cast<int>(v.size()))});
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
    return t;
}

std::vector<int> tensor_vec(const Tensor& t) {
    std::vector<int> v;
    for (std::size_t i = 0; i < t.numel(); ++i) v.push_back(static_cast<int>(t[i]));
    return v;
}

const Tensor& want(const Archive& ar, const std::string& key, const std::string& path) {
    auto it = ar.arrays.find(key);
    if (it == ar.arrays.end())
        throw std::runtime_error(path + " is missing checkpoint entry " + key);
    return it->second;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const AdamState* adam) {
    Archive ar;
    ar.strings["arch"] = model.spec.arch;
    ar.strings["mode"] = to_string(model.mode);
    ar.arrays["input_shape"] = vec_tensor(model.spec.input_shape);
    ar.arrays["hidden"] = vec_tensor(model.spec.hidden);
    ar.arrays["num_classes"] = Tensor::scalar(model.spec.num_classes);
    for (const auto& [name, t] : model.params) ar.arrays["param." + name] = t;
    ar.arrays["bn.count"] = Tensor::scalar(static_cast<double>(model.bn_states.size()));
    for (std::size_t i = 0; i < model.bn_states.size(); ++i) {
        const std::string tag = "bn." + std::to_string(i) + ".";
        const BatchNormState& st = model.bn_states[i];
        ar.arrays[tag + "running_mean"] = st.running_mean;
        ar.arrays[tag + "running_var"] = st.running_var;
        ar.arrays[tag + "momentum"] = Tensor::scalar(st.momentum);
        ar.arrays[tag + "epsilon"] = Tensor::scalar(st.epsilon);
    }
    if (adam) {
        ar.arrays["adam.t"] = Tensor::scalar(static_cast<double>(adam->t));
        ar.arrays["adam.beta1"] = Tensor::scalar(adam->beta1);
        ar.arrays["adam.beta2"] = Tensor::scalar(adam->beta2);
        ar.arrays["adam.epsilon"] = Tensor::scalar(adam->epsilon);
        for (const auto& [name, t] : adam->m) ar.arrays["adam.m." + name] = t;
        for (const auto& [name, t] : adam->v) ar.arrays["adam.v." + name] = t;
    }
    write_archive(path, ar);
}

Checkpoint load_checkpoint(const std::string& path) {
    Archive ar = read_archive(path);
    auto arch_it = ar.strings.find("arch");
    if (arch_it == ar.strings.end())
        throw std::runtime_error(path + " is missing checkpoint entry arch");

    ModelSpec spec;
    spec.arch = arch_it->second;
    spec.input_shape = tensor_vec(want(ar, "input_shape", path));
    spec.hidden = tensor_vec(want(ar, "hidden", path));
    spec.num_classes = static_cast<int>(want(ar, "num_classes", path)[0]);

    Checkpoint cp;
    cp.model = build_model(spec, 0);
    auto mode_it = ar.strings.find("mode");
    if (mode_it == ar.strings.end())
        throw std::runtime_error(path + " is missing checkpoint entry mode");
    cp.model.mode = stats_mode_from_string(mode_it->second);
    for (auto& [name, t] : cp.model.params) {
        const Tensor& stored = want(ar, "param." + name, path);
        if (!stored.same_shape(t))
            throw std::runtime_error(path + " entry param." + name + " has shape " +
                                     shape_string(stored.shape()) + ", expected " +
                                     shape_string(t.shape()));
        t = stored;
    }
    const int bn_count = static_cast<int>(want(ar, "bn.count", path)[0]);
    if (bn_count != static_cast<int>(cp.model.bn_states.size()))
        throw std::runtime_error(path + " stores " + std::to_string(bn_count) +
                                 " batch-norm layers, model has " +
                                 std::to_string(cp.model.bn_states.size()));
    for (std::size_t i = 0; i < cp.model.bn_states.size(); ++i) {
        const std::string tag = "bn." + std::to_string(i) + ".";
        BatchNormState& st = cp.model.bn_states[i];
        st.running_mean = want(ar, tag + "running_mean", path);
        st.running_var = want(ar, tag + "running_var", path);
        st.momentum = want(ar, tag + "momentum", path)[0];
        st.epsilon = want(ar, tag + "epsilon", path)[0];
    }
    if (ar.arrays.count("adam.t")) {
        cp.has_adam = true;
        cp.adam = make_adam_state(cp.model.params);
        cp.adam.t = static_cast<long>(want(ar, "adam.t", path)[0]);
        cp.adam.beta1 = want(ar, "adam.beta1", path)[0];
        cp.adam.beta2 = want(ar, "adam.beta2", path)[0];
        cp.adam.epsilon = want(ar, "adam.epsilon", path)[0];
        for (auto& [name, t] : cp.adam.m) t = want(ar, "adam.m." + name, path);
        for (auto& [name, t] : cp.adam.v) t = want(ar, "adam.v." + name, path);
    }
    return cp;
}

}  // namespace oneshot
