#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hwgn2/emulator.hpp"
#include "hwgn2/model.hpp"

namespace hwgn2::nn {

/// Emitted programs are straight-line (no branches, no HALT): the step count
/// equals the instruction count and does not depend on the input.
///
/// dmem_words = 0 picks the smallest power of two (>= 16) that fits.
/// Throws Error naming the required W when the layout does not fit.
mips::MipsProgram compile_mlp(const MlpModel& model, std::uint32_t dmem_words = 0);
mips::MipsProgram compile_bnn(const BnnModel& model, std::uint32_t dmem_words = 0);

/// Data words used: input, parameters, activation buffers and output.
std::uint32_t mlp_data_words(const MlpModel& model);
std::uint32_t bnn_data_words(const BnnModel& model);

/// Evaluator input words for compiled programs.
std::vector<std::uint32_t> mlp_input_words(std::span<const Fixed> x);
std::vector<std::uint32_t> bnn_input_words(std::span<const std::uint8_t> bits);
/// Output words back to signed logits.
std::vector<std::int32_t> logits_from_words(std::span<const std::uint32_t> words);

}  // namespace hwgn2::nn
