#pragma once

#include <filesystem>
#include <string>

#include "gazekit/image.hpp"

namespace gazekit {

// Binary PGM (P5, maxval 255), bit-exact round trip. Binary images are
// written with 0 -> 0 and 1 -> 255 so they stay viewable.
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage parse_pgm(std::span<const uint8_t> bytes, const std::string& origin = "<memory>");
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const BinaryImage& img);
std::string pgm_bytes(const GrayImage& img);

}  // namespace gazekit
