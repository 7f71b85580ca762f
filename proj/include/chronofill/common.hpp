#pragma once

#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chronofill {

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Warnings go through a swappable sink so library code never owns a stream.
// Default sink writes to stderr. The handler may be called from worker
// threads; installers must provide a thread-safe callable.
using WarningHandler = std::function<void(const std::string&)>;

void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

// Canonical float formatting for every CSV this toolkit writes:
// 17 significant digits, round-trip exact for IEEE doubles.
std::string format_double(double value);

// Strict double parse of a whole field. Throws Error on failure or on
// non-finite values (missingness is an empty field, never NaN).
double parse_double(std::string_view field, const std::string& context);

// Writes content to path via a sibling temp file + rename, so readers never
// observe a half-written file.
void write_text_file_atomic(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

} // namespace chronofill
