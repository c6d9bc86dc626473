#include "lmr/tensor.hpp"

#include "lmr/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace lmr {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += ")";
    return out;
}

namespace detail {

Node::~Node() {
    // Iterative teardown: long op chains (unrolled sequences) would otherwise
    // recurse once per node through shared_ptr destructors.
    std::vector<std::shared_ptr<Node>> stack(std::move(inputs));
    while (!stack.empty()) {
        std::shared_ptr<Node> n = std::move(stack.back());
        stack.pop_back();
        if (n && n.use_count() == 1) {
            for (auto& c : n->inputs) stack.push_back(std::move(c));
            n->inputs.clear();
        }
    }
}

namespace {
thread_local bool g_grad_enabled = true;
}

} // namespace detail

bool grad_enabled() { return detail::g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = prev_; }

// --- Tensor basics -----------------------------------------------------------

namespace {

std::shared_ptr<detail::Node> make_node(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size())
        throw NumericError("tensor: " + std::to_string(values.size()) +
                           " values for shape " + shape_str(shape));
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    return n;
}

void ensure_grad(detail::Node& n) {
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
}

detail::Node& input(detail::Node& n, std::size_t i) { return *n.inputs[i]; }

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

} // namespace

Tensor make_op(Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
               std::function<void(detail::Node&)> backward_fn) {
    auto n = make_node(std::move(shape), std::move(value));
    if (grad_enabled()) {
        bool req = false;
        for (const auto& t : inputs) req = req || t.requires_grad();
        if (req) {
            n->requires_grad = true;
            n->inputs.reserve(inputs.size());
            for (auto& t : inputs) n->inputs.push_back(t.node_ptr());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return Tensor(std::move(n));
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    return Tensor(make_node(std::move(shape), std::move(values)));
}

Tensor Tensor::constant(double scalar) { return constant(Shape{}, {scalar}); }

Tensor Tensor::zeros(Shape shape) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return constant(std::move(shape), std::move(v));
}

Tensor Tensor::full(Shape shape, double x) {
    std::vector<double> v(shape_numel(shape), x);
    return constant(std::move(shape), std::move(v));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> values) {
    auto n = make_node(std::move(shape), std::move(values));
    n->requires_grad = true;
    n->leaf = true;
    n->grad.assign(n->value.size(), 0.0);
    return Tensor(std::move(n));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->value.size(); }
std::size_t Tensor::rank() const { return node_->shape.size(); }
const std::vector<double>& Tensor::values() const { return node_->value; }

double Tensor::item() const {
    if (numel() != 1)
        throw NumericError("item(): tensor has shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::size_t i) const { return node_->value.at(i); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && node_->leaf; }

const std::vector<double>& Tensor::grad() const {
    ensure_grad(*node_);
    return node_->grad;
}

int Tensor::grad_accum_count() const { return node_->grad_accum_count; }

std::vector<double>& Tensor::values_mut() {
    if (!is_leaf() && node_->requires_grad)
        throw NumericError("values_mut(): only leaves and constants are mutable");
    return node_->value;
}

std::vector<double>& Tensor::grad_mut() {
    ensure_grad(*node_);
    return node_->grad;
}

// --- elementwise helpers ------------------------------------------------------

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw NumericError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                           " vs " + shape_str(b.shape()));
}

void accum(detail::Node& dst, const double* g, std::size_t n) {
    ensure_grad(dst);
    for (std::size_t i = 0; i < n; ++i) dst.grad[i] += g[i];
    ++dst.grad_accum_count;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
        for (int k : {0, 1})
            if (input(n, k).requires_grad) accum(input(n, k), n.grad.data(), n.grad.size());
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
        if (input(n, 0).requires_grad) accum(input(n, 0), n.grad.data(), n.grad.size());
        if (input(n, 1).requires_grad) {
            detail::Node& bn = input(n, 1);
            ensure_grad(bn);
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn.grad[i] -= n.grad[i];
            ++bn.grad_accum_count;
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
        detail::Node& an = input(n, 0);
        detail::Node& bn = input(n, 1);
        if (an.requires_grad) {
            ensure_grad(an);
            for (std::size_t i = 0; i < n.grad.size(); ++i) an.grad[i] += n.grad[i] * bn.value[i];
            ++an.grad_accum_count;
        }
        if (bn.requires_grad) {
            ensure_grad(bn);
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn.grad[i] += n.grad[i] * an.value[i];
            ++bn.grad_accum_count;
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape("div", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] / b.values()[i];
    return make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
        detail::Node& an = input(n, 0);
        detail::Node& bn = input(n, 1);
        if (an.requires_grad) {
            ensure_grad(an);
            for (std::size_t i = 0; i < n.grad.size(); ++i) an.grad[i] += n.grad[i] / bn.value[i];
            ++an.grad_accum_count;
        }
        if (bn.requires_grad) {
            ensure_grad(bn);
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                bn.grad[i] -= n.grad[i] * n.value[i] / bn.value[i];
            ++bn.grad_accum_count;
        }
    });
}

// --- matmul -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    const bool vec_rhs = b.rank() == 1;
    if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1))
        throw NumericError("matmul: unsupported ranks " + shape_str(a.shape()) + " x " +
                           shape_str(b.shape()));
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t kb = b.shape()[0];
    const std::size_t nn = vec_rhs ? 1 : b.shape()[1];
    if (k != kb)
        throw NumericError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));

    std::vector<double> v(m * nn);
    {
        CMapMat A(a.values().data(), m, k);
        CMapMat B(b.values().data(), k, nn);
        MapMat C(v.data(), m, nn);
        C.noalias() = A * B;
    }
    Shape out_shape = vec_rhs ? Shape{m} : Shape{m, nn};
    return make_op(std::move(out_shape), std::move(v), {a, b},
                   [m, k, nn](detail::Node& n) {
                       detail::Node& an = input(n, 0);
                       detail::Node& bn = input(n, 1);
                       CMapMat G(n.grad.data(), m, nn);
                       if (an.requires_grad) {
                           ensure_grad(an);
                           CMapMat B(bn.value.data(), k, nn);
                           MapMat dA(an.grad.data(), m, k);
                           dA.noalias() += G * B.transpose();
                           ++an.grad_accum_count;
                       }
                       if (bn.requires_grad) {
                           ensure_grad(bn);
                           CMapMat A(an.value.data(), m, k);
                           MapMat dB(bn.grad.data(), k, nn);
                           dB.noalias() += A.transpose() * G;
                           ++bn.grad_accum_count;
                       }
                   });
}

// --- structural ops -----------------------------------------------------------

Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw NumericError("concat: no inputs");
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() > 1)
            throw NumericError("concat: rank-1 tensors only, got " + shape_str(p.shape()));
        total += p.numel();
    }
    std::vector<double> v;
    v.reserve(total);
    std::vector<Tensor> ins;
    std::vector<std::size_t> sizes;
    ins.reserve(parts.size());
    for (const auto& p : parts) {
        v.insert(v.end(), p.values().begin(), p.values().end());
        ins.push_back(p);
        sizes.push_back(p.numel());
    }
    return make_op(Shape{total}, std::move(v), std::move(ins),
                   [sizes](detail::Node& n) {
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < sizes.size(); ++i) {
                           detail::Node& in = input(n, i);
                           if (in.requires_grad) accum(in, n.grad.data() + off, sizes[i]);
                           off += sizes[i];
                       }
                   });
}

Tensor concat(std::initializer_list<Tensor> parts) {
    return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice(const Tensor& t, std::size_t start, std::size_t count) {
    if (t.rank() < 1 || t.rank() > 2)
        throw NumericError("slice: rank-1/2 tensors only, got " + shape_str(t.shape()));
    const std::size_t rows = t.shape()[0];
    const std::size_t stride = t.rank() == 2 ? t.shape()[1] : 1;
    if (start + count > rows)
        throw NumericError("slice: range [" + std::to_string(start) + "," +
                           std::to_string(start + count) + ") out of " + shape_str(t.shape()));
    const std::size_t off = start * stride;
    const std::size_t len = count * stride;
    std::vector<double> v(t.values().begin() + off, t.values().begin() + off + len);
    Shape out = t.rank() == 2 ? Shape{count, stride} : Shape{count};
    return make_op(std::move(out), std::move(v), {t}, [off, len](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        for (std::size_t i = 0; i < len; ++i) in.grad[off + i] += n.grad[i];
        ++in.grad_accum_count;
    });
}

Tensor gather(const Tensor& t, std::vector<std::size_t> indices) {
    if (t.rank() != 1)
        throw NumericError("gather: rank-1 tensors only, got " + shape_str(t.shape()));
    std::vector<double> v(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= t.numel())
            throw NumericError("gather: index " + std::to_string(indices[i]) + " out of " +
                               shape_str(t.shape()));
        v[i] = t.values()[indices[i]];
    }
    const std::size_t n_out = indices.size();
    return make_op(Shape{n_out}, std::move(v), {t},
                   [idx = std::move(indices)](detail::Node& n) {
                       detail::Node& in = input(n, 0);
                       if (!in.requires_grad) return;
                       ensure_grad(in);
                       for (std::size_t i = 0; i < idx.size(); ++i) in.grad[idx[i]] += n.grad[i];
                       ++in.grad_accum_count;
                   });
}

Tensor reshape(const Tensor& t, Shape shape) {
    if (shape_numel(shape) != t.numel())
        throw NumericError("reshape: cannot view " + shape_str(t.shape()) + " as " +
                           shape_str(shape));
    std::vector<double> v = t.values();
    return make_op(std::move(shape), std::move(v), {t}, [](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (in.requires_grad) accum(in, n.grad.data(), n.grad.size());
    });
}

Tensor transpose(const Tensor& t) {
    if (t.rank() != 2)
        throw NumericError("transpose: rank-2 tensors only, got " + shape_str(t.shape()));
    const std::size_t r = t.shape()[0];
    const std::size_t c = t.shape()[1];
    std::vector<double> v(t.numel());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) v[j * r + i] = t.values()[i * c + j];
    return make_op(Shape{c, r}, std::move(v), {t}, [r, c](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) in.grad[i * c + j] += n.grad[j * r + i];
        ++in.grad_accum_count;
    });
}

// --- nonlinearities -----------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& t, Fwd fwd, Bwd bwd) {
    std::vector<double> v(t.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fwd(t.values()[i]);
    return make_op(t.shape(), std::move(v), {t}, [bwd](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            in.grad[i] += n.grad[i] * bwd(in.value[i], n.value[i]);
        ++in.grad_accum_count;
    });
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Tensor tanh(const Tensor& t) {
    return unary_op(t, [](double x) { return std::tanh(x); },
                    [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& t) {
    return unary_op(t, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Tensor sin(const Tensor& t) {
    return unary_op(t, [](double x) { return std::sin(x); },
                    [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor& t) {
    return unary_op(t, [](double x) { return std::cos(x); },
                    [](double x, double) { return -std::sin(x); });
}

Tensor abs(const Tensor& t) {
    return unary_op(t, [](double x) { return std::abs(x); },
                    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(const Tensor& t) {
    return unary_op(t, [](double x) { return x * x; },
                    [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& t) {
    return unary_op(t, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor scale(const Tensor& t, double c) {
    return unary_op(t, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor neg(const Tensor& t) { return scale(t, -1.0); }

// --- reductions / broadcast -----------------------------------------------------

Tensor sum(const Tensor& t) {
    double s = 0.0;
    for (double x : t.values()) s += x;
    return make_op(Shape{}, {s}, {t}, [](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        for (auto& g : in.grad) g += n.grad[0];
        ++in.grad_accum_count;
    });
}

Tensor mean(const Tensor& t) {
    if (t.numel() == 0) throw NumericError("mean: empty tensor");
    double s = 0.0;
    for (double x : t.values()) s += x;
    const double inv = 1.0 / static_cast<double>(t.numel());
    return make_op(Shape{}, {s * inv}, {t}, [inv](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        for (auto& g : in.grad) g += n.grad[0] * inv;
        ++in.grad_accum_count;
    });
}

Tensor broadcast(const Tensor& scalar, Shape shape) {
    if (scalar.numel() != 1)
        throw NumericError("broadcast: source must be scalar, got " + shape_str(scalar.shape()));
    std::vector<double> v(shape_numel(shape), scalar.values()[0]);
    return make_op(std::move(shape), std::move(v), {scalar}, [](detail::Node& n) {
        detail::Node& in = input(n, 0);
        if (!in.requires_grad) return;
        ensure_grad(in);
        double s = 0.0;
        for (double g : n.grad) s += g;
        in.grad[0] += s;
        ++in.grad_accum_count;
    });
}

// --- backward -------------------------------------------------------------------

void backward(const Tensor& loss) {
    detail::Node* root = loss.node();
    if (!root) throw NumericError("backward: undefined tensor");
    if (root->value.size() != 1)
        throw NumericError("backward: loss must be scalar, got shape " + shape_str(root->shape));
    if (root->backward_done)
        throw NumericError("backward: already called on this graph; rebuild it first");
    root->backward_done = true;
    if (!root->requires_grad) return;

    // Post-order DFS; the reverse of the resulting list is a valid topological
    // order of the recorded DAG.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    struct Item {
        detail::Node* n;
        std::size_t next_child;
    };
    std::vector<Item> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        Item& top = stack.back();
        if (top.next_child < top.n->inputs.size()) {
            detail::Node* child = top.n->inputs[top.next_child++].get();
            if (child->requires_grad && seen.insert(child).second)
                stack.push_back({child, 0});
        } else {
            order.push_back(top.n);
            stack.pop_back();
        }
    }

    ensure_grad(*root);
    root->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward_fn) {
            ensure_grad(*n);
            n->backward_fn(*n);
        }
    }
}

bool all_finite(const Tensor& t) {
    for (double v : t.values())
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace lmr
