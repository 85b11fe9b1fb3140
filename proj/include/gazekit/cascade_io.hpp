#pragma once

#include <filesystem>
#include <string>

#include "gazekit/cascade.hpp"

namespace gazekit {

// Cascade file: UTF-8 JSON, format_version 1. LBP subset masks are 64 hex
// characters (byte j covers codes 8j..8j+7, lowest code in the low bit;
// byte 0 first). Loading validates every CascadeModel invariant.
std::string cascade_to_json(const CascadeModel& model);
CascadeModel cascade_from_json(const std::string& text, const std::string& origin = "<memory>");
void save_cascade(const CascadeModel& model, const std::filesystem::path& path);
CascadeModel load_cascade(const std::filesystem::path& path);

}  // namespace gazekit
