#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace nca {

/// Writes to a sibling temp file and renames it over `path`, so readers never see a
/// partially written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Regular files in `dir` with one of `extensions` (lowercase, with dot), sorted by
/// file name. An empty extension list accepts every regular file.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::vector<std::string_view>& extensions = {});

/// Worker count for batch jobs: NCA_EDGE_THREADS if set and positive, otherwise the
/// hardware concurrency, clamped to [1, jobs].
unsigned batch_threads(std::size_t jobs);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception thrown is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace nca
