#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace oneshot {

/// Dense n-dimensional array of doubles in row-major order. All training
/// math runs in 64-bit so gradient checks can be held to tight tolerances.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v);

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

/// One labelled example; x is a single sample without a batch dimension.
struct Sample {
    Tensor x;
    int label = 0;
};

struct Batch {
    Tensor x;
    std::vector<int> labels;
};

/// Stacks samples along a new leading batch dimension. All samples must
/// share one shape; the list must not be empty.
Batch make_batch(const std::vector<Sample>& samples);
Batch make_batch(const std::vector<Sample>& dataset, const std::vector<int>& indices);

/// Reshapes every sample to a flat [D] vector, labels untouched.
std::vector<Sample> flatten_samples(const std::vector<Sample>& data);

/// Named map from parameter identifier to Tensor; names unique, shapes fixed
/// once inserted. Iteration (and therefore flattening) is in name order.
class ParameterSet {
public:
    using Map = std::map<std::string, Tensor>;

    void insert(const std::string& name, Tensor t);
    bool contains(const std::string& name) const { return items_.count(name) != 0; }
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t total_dim() const;

    Map::iterator begin() { return items_.begin(); }
    Map::iterator end() { return items_.end(); }
    Map::const_iterator begin() const { return items_.begin(); }
    Map::const_iterator end() const { return items_.end(); }

    ParameterSet zeros_like() const;
    std::vector<double> flatten() const;
    void assign_flat(std::span<const double> flat);

    bool operator==(const ParameterSet& other) const { return items_ == other.items_; }

private:
    Map items_;
};

}  // namespace oneshot
