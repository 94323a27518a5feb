#include "oneshot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "oneshot/rng.hpp"

namespace oneshot {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t read_u32(const std::vector<unsigned char>& buf, std::size_t off,
                       const std::string& path) {
    if (off + 4 > buf.size())
        throw std::runtime_error(path + " truncated at byte " + std::to_string(buf.size()) +
                                 ", needed " + std::to_string(off + 4));
    return (static_cast<std::uint32_t>(buf[off]) << 24) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) |
           static_cast<std::uint32_t>(buf[off + 3]);
}

std::string hex32(std::uint32_t v) {
    char b[16];
    std::snprintf(b, sizeof(b), "0x%08x", v);
    return b;
}

void write_u32(std::ofstream& f, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Tensor load_idx_images(const std::string& path) {
    const std::vector<unsigned char> buf = read_file(path);
    const std::uint32_t magic = read_u32(buf, 0, path);
    if (magic != 0x00000803u)
        throw std::runtime_error(path + " has magic " + hex32(magic) +
                                 " at byte 0, expected 0x00000803");
    const std::uint32_t n = read_u32(buf, 4, path);
    const std::uint32_t rows = read_u32(buf, 8, path);
    const std::uint32_t cols = read_u32(buf, 12, path);
    const std::size_t need = 16 + static_cast<std::size_t>(n) * rows * cols;
    if (buf.size() < need)
        throw std::runtime_error(path + " truncated at byte " + std::to_string(buf.size()) +
                                 ", needed " + std::to_string(need));
    Tensor images({static_cast<int>(n), 1, static_cast<int>(rows), static_cast<int>(cols)});
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * rows * cols; ++i)
        images[i] = buf[16 + i] / 255.0;
    return images;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const std::vector<unsigned char> buf = read_file(path);
    const std::uint32_t magic = read_u32(buf, 0, path);
    if (magic != 0x00000801u)
        throw std::runtime_error(path + " has magic " + hex32(magic) +
                                 " at byte 0, expected 0x00000801");
    const std::uint32_t n = read_u32(buf, 4, path);
    const std::size_t need = 8 + static_cast<std::size_t>(n);
    if (buf.size() < need)
        throw std::runtime_error(path + " truncated at byte " + std::to_string(buf.size()) +
                                 ", needed " + std::to_string(need));
    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) labels[i] = buf[8 + i] + 1;
    return labels;
}

std::vector<Sample> load_idx_dataset(const std::string& images_path,
                                     const std::string& labels_path) {
    Tensor images = load_idx_images(images_path);
    std::vector<int> labels = load_idx_labels(labels_path);
    const int n = images.dim(0);
    if (n != static_cast<int>(labels.size()))
        throw std::runtime_error(images_path + " holds " + std::to_string(n) + " images but " +
                                 labels_path + " holds " + std::to_string(labels.size()) +
                                 " labels");
    const int h = images.dim(2), w = images.dim(3);
    const std::size_t per = static_cast<std::size_t>(h) * w;
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.x = Tensor({1, h, w});
        for (std::size_t j = 0; j < per; ++j) s.x[j] = images[static_cast<std::size_t>(i) * per + j];
        s.label = labels[static_cast<std::size_t>(i)];
        out.push_back(std::move(s));
    }
    return out;
}

void save_idx_images(const std::string& path, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("no samples to write");
    const std::vector<int>& shape = samples.front().x.shape();
    if (shape.size() != 3 || shape[0] != 1)
        throw std::invalid_argument("images must be [1,H,W], got " + shape_string(shape));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_u32(f, 0x00000803u);
    write_u32(f, static_cast<std::uint32_t>(samples.size()));
    write_u32(f, static_cast<std::uint32_t>(shape[1]));
    write_u32(f, static_cast<std::uint32_t>(shape[2]));
    for (const Sample& s : samples) {
        if (s.x.shape() != shape)
            throw std::invalid_argument("mixed image shapes in dataset");
        for (std::size_t i = 0; i < s.x.numel(); ++i) {
            const double v = std::clamp(s.x[i], 0.0, 1.0);
            const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
            f.write(reinterpret_cast<const char*>(&b), 1);
        }
    }
    if (!f) throw std::runtime_error("write failed for " + path);
}

void save_idx_labels(const std::string& path, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("no samples to write");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_u32(f, 0x00000801u);
    write_u32(f, static_cast<std::uint32_t>(samples.size()));
    for (const Sample& s : samples) {
        if (s.label < 1 || s.label > 256)
            throw std::invalid_argument("label " + std::to_string(s.label) +
                                        " does not fit in a byte");
        const unsigned char b = static_cast<unsigned char>(s.label - 1);
        f.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!f) throw std::runtime_error("write failed for " + path);
}

void validate(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (spec.per_class < 1) throw std::invalid_argument("per_class must be positive");
    if (spec.image_size < 4) throw std::invalid_argument("image_size must be at least 4");
    if (spec.blob_sigma <= 0.0) throw std::invalid_argument("blob_sigma must be positive");
    if (spec.ring_radius <= 0.0 || spec.ring_radius > 0.5)
        throw std::invalid_argument("ring_radius must lie in (0, 0.5]");
    if (spec.center_jitter < 0.0) throw std::invalid_argument("center_jitter must be >= 0");
    auto check_per_class = [&](const std::vector<double>& v, const std::string& what,
                               bool positive) {
        if (v.empty()) return;
        if (static_cast<int>(v.size()) != spec.num_classes)
            throw std::invalid_argument(what + " needs one entry per class");
        for (double x : v)
            if (x < 0.0 || (positive && x <= 0.0))
                throw std::invalid_argument(what + " entries must be " +
                                            (positive ? "positive" : "non-negative"));
    };
    check_per_class(spec.mean_scale, "mean_scale", true);
    check_per_class(spec.noise_scale, "noise_scale", false);
    check_per_class(spec.amp_jitter, "amp_jitter", false);
    for (double j : spec.amp_jitter)
        if (j >= 1.0) throw std::invalid_argument("amp_jitter entries must be < 1");
}

std::vector<Sample> gen_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    const int S = spec.image_size;
    const int K = spec.num_classes;
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(K) * spec.per_class);
    for (int k = 0; k < K; ++k) {
        RngStream rng = RngStream::named(spec.seed, "synthetic.class" + std::to_string(k));
        const double amp = spec.mean_scale.empty() ? 1.0 : spec.mean_scale[static_cast<std::size_t>(k)];
        const double noise =
            spec.noise_scale.empty() ? 0.05 : spec.noise_scale[static_cast<std::size_t>(k)];
        const double jitter =
            spec.amp_jitter.empty() ? 0.0 : spec.amp_jitter[static_cast<std::size_t>(k)];
        const double angle = 2.0 * M_PI * k / K;
        const double base_cx = S * (0.5 + spec.ring_radius * std::cos(angle));
        const double base_cy = S * (0.5 + spec.ring_radius * std::sin(angle));
        const double sigma = spec.blob_sigma * S;
        for (int i = 0; i < spec.per_class; ++i) {
            const double cx = base_cx + spec.center_jitter * S * rng.normal();
            const double cy = base_cy + spec.center_jitter * S * rng.normal();
            const double a = amp * (jitter > 0.0 ? rng.uniform(1.0 - jitter, 1.0 + jitter)
                                                 : 1.0);
            Sample s;
            s.x = Tensor({1, S, S});
            s.label = k + 1;
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const double dx = x - cx;
                    const double dy = y - cy;
                    double v = a * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    v += noise * rng.normal();
                    s.x[static_cast<std::size_t>(y) * S + x] = std::clamp(v, 0.0, 1.0);
                }
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

struct Pt {
    double x, y;
};

double seg_dist(Pt p, Pt a, Pt b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

std::vector<Pt> ellipse(double cx, double cy, double rx, double ry, int pts = 20) {
    std::vector<Pt> out;
    for (int i = 0; i <= pts; ++i) {
        const double a = 2.0 * M_PI * i / pts;
        out.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return out;
}

/// Polyline skeletons in a unit box, y pointing down. A digit may need
/// several strokes, so each entry is a list of polylines.
std::vector<std::vector<std::vector<Pt>>> digit_skeletons() {
    std::vector<std::vector<std::vector<Pt>>> d(10);
    d[0] = {ellipse(0.5, 0.5, 0.24, 0.36)};
    d[1] = {{{0.36, 0.26}, {0.52, 0.12}, {0.52, 0.88}}, {{0.36, 0.88}, {0.68, 0.88}}};
    d[2] = {{{0.28, 0.3}, {0.34, 0.16}, {0.5, 0.12}, {0.66, 0.16}, {0.72, 0.3},
             {0.66, 0.46}, {0.3, 0.84}},
            {{0.28, 0.88}, {0.74, 0.88}}};
    d[3] = {{{0.3, 0.18}, {0.5, 0.12}, {0.68, 0.2}, {0.68, 0.36}, {0.48, 0.48},
             {0.7, 0.58}, {0.7, 0.76}, {0.52, 0.88}, {0.3, 0.82}}};
    d[4] = {{{0.62, 0.12}, {0.26, 0.6}, {0.78, 0.6}}, {{0.62, 0.3}, {0.62, 0.88}}};
    d[5] = {{{0.7, 0.12}, {0.34, 0.12}, {0.3, 0.46}, {0.54, 0.4}, {0.7, 0.52},
             {0.7, 0.72}, {0.52, 0.87}, {0.3, 0.8}}};
    d[6] = {{{0.64, 0.14}, {0.42, 0.32}, {0.33, 0.56}, {0.34, 0.74}, {0.5, 0.87},
             {0.66, 0.74}, {0.64, 0.56}, {0.46, 0.5}, {0.34, 0.62}}};
    d[7] = {{{0.28, 0.12}, {0.74, 0.12}, {0.44, 0.88}}};
    d[8] = {ellipse(0.5, 0.3, 0.17, 0.17), ellipse(0.5, 0.66, 0.2, 0.21)};
    d[9] = {ellipse(0.52, 0.32, 0.18, 0.19), {{0.69, 0.38}, {0.66, 0.62}, {0.55, 0.88}}};
    return d;
}

}  // namespace

std::vector<Sample> gen_digits(int per_class, std::uint64_t seed) {
    if (per_class < 1) throw std::invalid_argument("per_class must be positive");
    static const std::vector<std::vector<std::vector<Pt>>> skel = digit_skeletons();
    const int S = 28;
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(per_class) * 10);
    for (int digit = 0; digit < 10; ++digit) {
        RngStream rng = RngStream::named(seed, "digits." + std::to_string(digit));
        for (int i = 0; i < per_class; ++i) {
            const double rot = rng.uniform(-0.2, 0.2);
            const double scale = rng.uniform(0.85, 1.1);
            const double tx = rng.uniform(-0.06, 0.06);
            const double ty = rng.uniform(-0.06, 0.06);
            const double thick = rng.uniform(0.9, 1.5);
            const double cr = std::cos(rot), sr = std::sin(rot);
            auto place = [&](Pt p) {
                const double ux = (p.x - 0.5) * scale, uy = (p.y - 0.5) * scale;
                return Pt{(0.5 + tx + cr * ux - sr * uy) * S,
                          (0.5 + ty + sr * ux + cr * uy) * S};
            };
            Sample s;
            s.x = Tensor({1, S, S});
            s.label = digit + 1;
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const Pt p{x + 0.5, y + 0.5};
                    double best = 1e9;
                    for (const auto& stroke : skel[static_cast<std::size_t>(digit)])
                        for (std::size_t j = 0; j + 1 < stroke.size(); ++j)
                            best = std::min(best,
                                            seg_dist(p, place(stroke[j]), place(stroke[j + 1])));
                    double v = std::exp(-(best * best) / (2.0 * thick * thick));
                    v += 0.02 * rng.normal();
                    s.x[static_cast<std::size_t>(y) * S + x] = std::clamp(v, 0.0, 1.0);
                }
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace oneshot
