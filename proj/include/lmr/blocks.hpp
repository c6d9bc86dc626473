#pragma once

#include "lmr/param_store.hpp"
#include "lmr/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace lmr {

struct AffineLayer {
    Tensor weight; // (out, in)
    Tensor bias;   // (out)

    std::size_t in_dim() const { return weight.shape()[1]; }
    std::size_t out_dim() const { return weight.shape()[0]; }

    // Registers "<prefix>.weight" / "<prefix>.bias"; weight uniform(-a,a) with
    // a = 1/sqrt(in), bias zero.
    static AffineLayer create(ParamStore& store, const std::string& prefix, std::size_t in,
                              std::size_t out, Rng& rng);
    static AffineLayer from_store(const ParamStore& store, const std::string& prefix);
};

Tensor affine_forward(const AffineLayer& layer, const Tensor& x); // W x + b

// Gated recurrent unit:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r*h) + bn)
//   h' = (1-z)*h + z*n
struct GruCell {
    Tensor w_update, u_update, b_update;
    Tensor w_reset, u_reset, b_reset;
    Tensor w_cand, u_cand, b_cand;

    std::size_t in_dim() const { return w_update.shape()[1]; }
    std::size_t hidden_dim() const { return w_update.shape()[0]; }

    static GruCell create(ParamStore& store, const std::string& prefix, std::size_t in,
                          std::size_t hidden, Rng& rng);
    static GruCell from_store(const ParamStore& store, const std::string& prefix);
};

Tensor gru_cell_step(const GruCell& cell, const Tensor& x, const Tensor& h);

// Unrolls the cell over the sequence; returns every step's hidden state.
std::vector<Tensor> gru_sequence(const GruCell& cell, std::span<const Tensor> inputs,
                                 const Tensor& h0);

} // namespace lmr
