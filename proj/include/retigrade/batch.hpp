#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace retigrade {

/// PNG/JPEG files directly inside `dir`, sorted by file name.
/// Throws InvalidInput if `dir` is not a directory.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown by any call is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view value);

/// Splits one CSV line, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

std::size_t default_workers() noexcept;

}  // namespace retigrade
