#pragma once
#include <l0group/model.hpp>

#include <map>
#include <string>

namespace l0group {

/// Comma-delimited numeric matrix; `skip_header` drops the first line.
Matrix read_csv_matrix(const std::string& path, bool skip_header = false);
/// Single-column (or single-row) CSV as a vector.
Vector read_csv_vector(const std::string& path, bool skip_header = false);
void write_csv_matrix(const std::string& path, const Matrix& m, const std::string& header = "");
void write_csv_vector(const std::string& path, const Vector& v);

/// One group per line, space-delimited zero-based column indices.
GroupPartition read_groups(const std::string& path);
void write_groups(const std::string& path, const GroupPartition& partition);

/// key=value per line; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_config(const std::string& path);

} // namespace l0group
