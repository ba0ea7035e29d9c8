#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "hwgn2/model.hpp"

namespace hwgn2::nn {

using AnyModel = std::variant<MlpModel, BnnModel>;

/// JSON model files, schema in docs/formats.md. Errors are ParseError with
/// the line (and column for syntax errors) of the offending element.
AnyModel model_from_json(std::string_view text);
std::string to_json(const MlpModel& model);
std::string to_json(const BnnModel& model);

AnyModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const AnyModel& model);

}  // namespace hwgn2::nn
