#include "oneshot/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oneshot {

static std::size_t checked_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0)
            throw std::invalid_argument("tensor dimension must be positive, got " +
                                        shape_string(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != data_.size())
        throw std::invalid_argument("tensor data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_string(shape_));
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string shape_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Batch make_batch(const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("cannot build a batch from no samples");
    const std::vector<int>& s0 = samples.front().x.shape();
    std::vector<int> shape;
    shape.push_back(static_cast<int>(samples.size()));
    shape.insert(shape.end(), s0.begin(), s0.end());
    Batch b;
    b.x = Tensor(shape);
    b.labels.reserve(samples.size());
    const std::size_t per = samples.front().x.numel();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].x.shape() != s0)
            throw std::invalid_argument("sample " + std::to_string(i) + " has shape " +
                                        shape_string(samples[i].x.shape()) + ", expected " +
                                        shape_string(s0));
        for (std::size_t j = 0; j < per; ++j) b.x[i * per + j] = samples[i].x[j];
        b.labels.push_back(samples[i].label);
    }
    return b;
}

Batch make_batch(const std::vector<Sample>& dataset, const std::vector<int>& indices) {
    std::vector<Sample> picked;
    picked.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= static_cast<int>(dataset.size()))
            throw std::out_of_range("batch index " + std::to_string(i) +
                                    " outside dataset of size " +
                                    std::to_string(dataset.size()));
        picked.push_back(dataset[static_cast<std::size_t>(i)]);
    }
    return make_batch(picked);
}

std::vector<Sample> flatten_samples(const std::vector<Sample>& data) {
    std::vector<Sample> out;
    out.reserve(data.size());
    for (const Sample& s : data) {
        Sample f;
        f.label = s.label;
        f.x = Tensor({static_cast<int>(s.x.numel())},
                     {s.x.values().begin(), s.x.values().end()});
        out.push_back(std::move(f));
    }
    return out;
}

void ParameterSet::insert(const std::string& name, Tensor t) {
    auto [it, ok] = items_.emplace(name, std::move(t));
    (void)it;
    if (!ok) throw std::invalid_argument("duplicate parameter name: " + name);
}

Tensor& ParameterSet::at(const std::string& name) {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

const Tensor& ParameterSet::at(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

std::size_t ParameterSet::total_dim() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (const auto& [name, t] : items_) out.insert(name, Tensor::zeros(t.shape()));
    return out;
}

std::vector<double> ParameterSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_dim());
    for (const auto& [name, t] : items_)
        flat.insert(flat.end(), t.values().begin(), t.values().end());
    return flat;
}

void ParameterSet::assign_flat(std::span<const double> flat) {
    if (flat.size() != total_dim())
        throw std::invalid_argument("flat vector size " + std::to_string(flat.size()) +
                                    " does not match parameter count " +
                                    std::to_string(total_dim()));
    std::size_t off = 0;
    for (auto& [name, t] : items_) {
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = flat[off + i];
        off += t.numel();
    }
}

}  // namespace oneshot
