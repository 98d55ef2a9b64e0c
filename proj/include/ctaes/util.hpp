#pragma once

#include <cstdint>
#include <string>

namespace ctaes::util {

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::string& path); // FileError if unreadable

std::string iso8601_utc_now();

} // namespace ctaes::util
