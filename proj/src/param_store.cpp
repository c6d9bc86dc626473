#include "lmr/param_store.hpp"

#include "lmr/errors.hpp"

#include <cmath>

namespace lmr {

Tensor& ParamStore::create(const std::string& name, Shape shape, std::vector<double> values) {
    if (params_.count(name))
        throw NumericError("param store: duplicate name '" + name + "'");
    auto [it, ok] = params_.emplace(name, Tensor::leaf(std::move(shape), std::move(values)));
    order_.push_back(name);
    return it->second;
}

Tensor& ParamStore::create_uniform(const std::string& name, Shape shape, Rng& rng) {
    const std::size_t fan_in = shape.empty() ? 1 : shape.back();
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(-a, a);
    return create(name, std::move(shape), std::move(v));
}

Tensor& ParamStore::create_zeros(const std::string& name, Shape shape) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return create(name, std::move(shape), std::move(v));
}

bool ParamStore::has(std::string_view name) const {
    return params_.count(std::string(name)) > 0;
}

Tensor& ParamStore::at(std::string_view name) {
    auto it = params_.find(std::string(name));
    if (it == params_.end())
        throw NumericError("param store: unknown name '" + std::string(name) + "'");
    return it->second;
}

const Tensor& ParamStore::at(std::string_view name) const {
    auto it = params_.find(std::string(name));
    if (it == params_.end())
        throw NumericError("param store: unknown name '" + std::string(name) + "'");
    return it->second;
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += params_.at(name).numel();
    return n;
}

void ParamStore::zero_grad() {
    for (const auto& name : order_) {
        Tensor& t = params_.at(name);
        auto& g = t.grad_mut();
        std::fill(g.begin(), g.end(), 0.0);
        t.node()->grad_accum_count = 0;
    }
}

double ParamStore::grad_norm() const {
    double ss = 0.0;
    for (const auto& name : order_)
        for (double g : params_.at(name).grad()) ss += g * g;
    return std::sqrt(ss);
}

void ParamStore::scale_grads(double factor) {
    for (const auto& name : order_)
        for (double& g : params_.at(name).grad_mut()) g *= factor;
}

void ParamStore::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    for (const auto& name : order_) fn(name, params_.at(name));
}

void ParamStore::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    for (const auto& name : order_) fn(name, params_.at(name));
}

std::vector<std::vector<double>> ParamStore::snapshot_values() const {
    std::vector<std::vector<double>> out;
    out.reserve(order_.size());
    for (const auto& name : order_) out.push_back(params_.at(name).values());
    return out;
}

void ParamStore::assign_values(const std::vector<std::vector<double>>& values) {
    if (values.size() != order_.size())
        throw NumericError("param store: assign expects " + std::to_string(order_.size()) +
                           " tensors, got " + std::to_string(values.size()));
    for (std::size_t i = 0; i < order_.size(); ++i) {
        Tensor& t = params_.at(order_[i]);
        if (values[i].size() != t.numel())
            throw NumericError("param store: size mismatch for '" + order_[i] + "'");
        t.values_mut() = values[i];
    }
}

namespace {

double run_scalar(const std::function<Tensor()>& f) {
    NoGradGuard guard;
    const Tensor t = f();
    const double v = t.item();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite objective");
    return v;
}

double check_leaves(const std::function<Tensor()>& f, std::span<Tensor> leaves, double eps) {
    if (eps <= 0.0) throw NumericError("finite_diff_check: eps must be positive");
    for (auto& leaf : leaves) {
        auto& g = leaf.grad_mut();
        std::fill(g.begin(), g.end(), 0.0);
    }
    Tensor loss = f();
    if (!all_finite(loss)) throw NumericError("finite_diff_check: non-finite objective");
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(leaves.size());
    for (auto& leaf : leaves) analytic.push_back(leaf.grad());

    double max_rel = 0.0;
    for (std::size_t p = 0; p < leaves.size(); ++p) {
        auto& vals = leaves[p].values_mut();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + eps;
            const double f_plus = run_scalar(f);
            vals[i] = saved - eps;
            const double f_minus = run_scalar(f);
            vals[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[p][i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
        }
    }
    return max_rel;
}

} // namespace

double finite_diff_check(const std::function<Tensor()>& f, ParamStore& params, double eps) {
    std::vector<Tensor> leaves;
    params.for_each([&](const std::string&, Tensor& t) { leaves.push_back(t); });
    return check_leaves(f, leaves, eps);
}

double finite_diff_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                         double eps) {
    return check_leaves(f, leaves, eps);
}

} // namespace lmr
