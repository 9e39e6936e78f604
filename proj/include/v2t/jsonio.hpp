#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace v2t {

// Canonical serialization: object keys sorted (nlohmann's default map order),
// doubles printed with 17 significant digits so equal values always produce
// equal bytes and parse back bit-exactly. Used for reports and checkpoints.
std::string canonical_dump(const nlohmann::json& j, int indent = 0);

// Canonical text for one double, same formatting the dump uses.
std::string format_double(double x);

// Whole file as a string; LoadError{missing_file} if it cannot be opened.
std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::string base64_encode(const std::uint8_t* data, std::size_t len);
std::vector<std::uint8_t> base64_decode(const std::string& text);

} // namespace v2t
