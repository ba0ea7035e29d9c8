#pragma once

#include <cstdint>
#include <vector>

#include "hwgn2/model.hpp"
#include "hwgn2/prg.hpp"

namespace hwgn2::oracle {

/// Weights uniform in [-weight_range, weight_range] (Q8.8 units), biases in
/// a quarter of that, hidden activations drawn from relu / hard_sigmoid.
nn::MlpModel random_mlp(Prg& prg, const std::vector<std::uint32_t>& sizes, std::int32_t weight_range = 512);
nn::BnnModel random_bnn(Prg& prg, const std::vector<std::uint32_t>& sizes);
std::vector<nn::Fixed> random_input(Prg& prg, std::uint32_t n, std::int32_t range = 1024);
std::vector<std::uint8_t> random_bits(Prg& prg, std::uint32_t n);

/// Independent reference: int64 arithmetic, floor division instead of shifts,
/// explicit branches for the activations.
std::vector<std::int64_t> reference_mlp(const nn::MlpModel& m, const std::vector<nn::Fixed>& x);
/// Direct +-1 dot products.
std::vector<std::int64_t> reference_bnn(const nn::BnnModel& m, const std::vector<std::uint8_t>& x);

}  // namespace hwgn2::oracle
