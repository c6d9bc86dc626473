#pragma once

#include "lmr/rng.hpp"
#include "lmr/tensor.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmr {

// Named trainable leaves. Iteration order is insertion order, which is fixed
// by model construction and therefore stable across runs.
class ParamStore {
public:
    Tensor& create(const std::string& name, Shape shape, std::vector<double> values);
    // Uniform(-a, a) with a = 1/sqrt(fan_in); the convention for every weight
    // matrix in this project. fan_in = last shape dim.
    Tensor& create_uniform(const std::string& name, Shape shape, Rng& rng);
    Tensor& create_zeros(const std::string& name, Shape shape);

    bool has(std::string_view name) const;
    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    std::size_t total_values() const;

    void zero_grad();
    // Global L2 norm over all gradients.
    double grad_norm() const;
    void scale_grads(double factor);

    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    // Flat copies in iteration order; used by checkpoints and optimizers.
    std::vector<std::vector<double>> snapshot_values() const;
    void assign_values(const std::vector<std::vector<double>>& values);

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, Tensor> params_;
};

// Central-difference gradient check. `f` must rebuild its graph from the
// current parameter values on every call and return a scalar. Returns the
// maximum relative error over every parameter coordinate, with denominator
// max(1, |analytic|, |numeric|).
double finite_diff_check(const std::function<Tensor()>& f, ParamStore& params, double eps);

// Same check against an explicit list of leaf tensors.
double finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                         double eps);

} // namespace lmr
