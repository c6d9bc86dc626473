#include "lmr/blocks.hpp"

#include "lmr/errors.hpp"

namespace lmr {

AffineLayer AffineLayer::create(ParamStore& store, const std::string& prefix, std::size_t in,
                                std::size_t out, Rng& rng) {
    AffineLayer layer;
    layer.weight = store.create_uniform(prefix + ".weight", {out, in}, rng);
    layer.bias = store.create_zeros(prefix + ".bias", {out});
    return layer;
}

AffineLayer AffineLayer::from_store(const ParamStore& store, const std::string& prefix) {
    return AffineLayer{store.at(prefix + ".weight"), store.at(prefix + ".bias")};
}

Tensor affine_forward(const AffineLayer& layer, const Tensor& x) {
    if (x.rank() != 1 || x.shape()[0] != layer.in_dim())
        throw NumericError("affine_forward: input " + shape_str(x.shape()) +
                           " does not match weight " + shape_str(layer.weight.shape()));
    return add(matmul(layer.weight, x), layer.bias);
}

GruCell GruCell::create(ParamStore& store, const std::string& prefix, std::size_t in,
                        std::size_t hidden, Rng& rng) {
    GruCell c;
    c.w_update = store.create_uniform(prefix + ".w_update", {hidden, in}, rng);
    c.u_update = store.create_uniform(prefix + ".u_update", {hidden, hidden}, rng);
    c.b_update = store.create_zeros(prefix + ".b_update", {hidden});
    c.w_reset = store.create_uniform(prefix + ".w_reset", {hidden, in}, rng);
    c.u_reset = store.create_uniform(prefix + ".u_reset", {hidden, hidden}, rng);
    c.b_reset = store.create_zeros(prefix + ".b_reset", {hidden});
    c.w_cand = store.create_uniform(prefix + ".w_cand", {hidden, in}, rng);
    c.u_cand = store.create_uniform(prefix + ".u_cand", {hidden, hidden}, rng);
    c.b_cand = store.create_zeros(prefix + ".b_cand", {hidden});
    return c;
}

GruCell GruCell::from_store(const ParamStore& store, const std::string& prefix) {
    GruCell c;
    c.w_update = store.at(prefix + ".w_update");
    c.u_update = store.at(prefix + ".u_update");
    c.b_update = store.at(prefix + ".b_update");
    c.w_reset = store.at(prefix + ".w_reset");
    c.u_reset = store.at(prefix + ".u_reset");
    c.b_reset = store.at(prefix + ".b_reset");
    c.w_cand = store.at(prefix + ".w_cand");
    c.u_cand = store.at(prefix + ".u_cand");
    c.b_cand = store.at(prefix + ".b_cand");
    return c;
}

Tensor gru_cell_step(const GruCell& cell, const Tensor& x, const Tensor& h) {
    if (x.rank() != 1 || x.shape()[0] != cell.in_dim())
        throw NumericError("gru_cell_step: input " + shape_str(x.shape()) +
                           " does not match cell input width " + std::to_string(cell.in_dim()));
    if (h.rank() != 1 || h.shape()[0] != cell.hidden_dim())
        throw NumericError("gru_cell_step: hidden " + shape_str(h.shape()) +
                           " does not match cell hidden width " +
                           std::to_string(cell.hidden_dim()));
    Tensor z = sigmoid(add(add(matmul(cell.w_update, x), matmul(cell.u_update, h)),
                           cell.b_update));
    Tensor r = sigmoid(add(add(matmul(cell.w_reset, x), matmul(cell.u_reset, h)), cell.b_reset));
    Tensor n = tanh(add(add(matmul(cell.w_cand, x), matmul(cell.u_cand, mul(r, h))),
                        cell.b_cand));
    Tensor one = Tensor::full({cell.hidden_dim()}, 1.0);
    return add(mul(sub(one, z), h), mul(z, n));
}

std::vector<Tensor> gru_sequence(const GruCell& cell, std::span<const Tensor> inputs,
                                 const Tensor& h0) {
    if (inputs.empty()) throw NumericError("gru_sequence: empty input sequence");
    std::vector<Tensor> hidden;
    hidden.reserve(inputs.size());
    Tensor h = h0;
    for (const Tensor& x : inputs) {
        h = gru_cell_step(cell, x, h);
        hidden.push_back(h);
    }
    return hidden;
}

} // namespace lmr
