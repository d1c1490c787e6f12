#pragma once
#include <cstdint>
#include <string>

namespace wqed {

// SHA-256 digest of a byte string, lowercase hex.
std::string sha256_hex(const std::string& bytes);

} // namespace wqed
