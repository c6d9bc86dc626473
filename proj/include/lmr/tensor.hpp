#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lmr {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

// One recorded value in the computation tape. Interior nodes own their inputs
// through shared_ptr; adjoint closures deliberately capture no node pointers
// so that `inputs` is the only ownership edge and teardown can be iterative.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // allocated lazily; leaves keep zeros from birth
    bool requires_grad = false;
    bool leaf = false;
    bool backward_done = false;
    int grad_accum_count = 0; // number of adjoint accumulations received
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn; // reads this->grad, accumulates into inputs

    ~Node();
};

} // namespace detail

// When disabled (see NoGradGuard), newly created tensors record no tape
// structure; forward values are computed as usual.
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Value-semantics handle to a tape node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor constant(double scalar); // rank-0
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    // Trainable leaf; participates in backward and keeps an allocated gradient.
    static Tensor leaf(Shape shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t numel() const;
    std::size_t rank() const;

    const std::vector<double>& values() const;
    double item() const; // single-element tensors only
    double at(std::size_t i) const;

    bool requires_grad() const;
    bool is_leaf() const;
    const std::vector<double>& grad() const; // leaves: zeros until backward runs
    int grad_accum_count() const;

    // Mutable access for optimizers / finite-difference probes; leaves only.
    std::vector<double>& values_mut();
    std::vector<double>& grad_mut();

    detail::Node* node() const { return node_.get(); }
    const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::Node> node_;

    friend Tensor make_op(Shape shape, std::vector<double> value,
                          std::vector<Tensor> inputs,
                          std::function<void(detail::Node&)> backward_fn);
};

// --- op set -----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b); // elementwise
Tensor div(const Tensor& a, const Tensor& b); // elementwise
Tensor matmul(const Tensor& a, const Tensor& b); // (m,k)x(k,n), (m,k)x(k)
Tensor concat(std::span<const Tensor> parts);    // rank-1 tensors
Tensor concat(std::initializer_list<Tensor> parts);
Tensor slice(const Tensor& t, std::size_t start, std::size_t count); // along axis 0
Tensor gather(const Tensor& t, std::vector<std::size_t> indices);    // rank-1
Tensor reshape(const Tensor& t, Shape shape);
Tensor transpose(const Tensor& t); // rank-2
Tensor tanh(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor sin(const Tensor& t);
Tensor cos(const Tensor& t);
Tensor sum(const Tensor& t);  // full reduction, rank-0
Tensor mean(const Tensor& t); // full reduction, rank-0
Tensor abs(const Tensor& t);  // adjoint at 0 is 0
Tensor square(const Tensor& t);
Tensor sqrt(const Tensor& t);
Tensor broadcast(const Tensor& scalar, Shape shape); // rank-0 -> any shape
Tensor scale(const Tensor& t, double c);
Tensor neg(const Tensor& t);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// Reverse sweep from a scalar loss. Every requires-grad leaf reachable from
// `loss` receives (accumulates) its total adjoint. A second sweep from the
// same node is rejected; rebuild the graph instead.
void backward(const Tensor& loss);

bool all_finite(const Tensor& t);

} // namespace lmr
