#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace zcc {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Runs one `zcc` invocation. `args` excludes the program name. Returns the
// process exit code: 0 success, 2 validation error (bad flags, bad or
// missing input), 1 anything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a over a file's bytes, as recorded in run manifests.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace zcc
