#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace bhmds::io {

/// Shortest round-trip decimal representation ("%.17g" semantics).
std::string format_double(double x);

/// Writes content to path via a temporary file and rename, so readers never
/// observe a partially written file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Matrix as CSV with an optional header row.
std::string matrix_csv(const Eigen::Ref<const Eigen::MatrixXd>& m, const std::vector<std::string>& header = {});

void ensure_directory(const std::filesystem::path& dir);

}  // namespace bhmds::io
