#ifndef VNFP_IO_UTIL_HPP
#define VNFP_IO_UTIL_HPP

#include <filesystem>
#include <functional>
#include <string>

namespace vnfp {

/// Writes via a temp file in the target directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) across at most `threads` workers; any exception
/// is rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// Thread cap from the VNFP_THREADS environment variable, falling back to
/// hardware concurrency.
int env_thread_cap();

}  // namespace vnfp

#endif
