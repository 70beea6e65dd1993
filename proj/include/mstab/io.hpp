#pragma once

// File IO: atomic writes (temp file + rename), CSV tables, and the binary
// path cache (little-endian doubles with a fixed header).

#include <string>
#include <vector>

#include "mstab/series.hpp"

namespace mstab::io {

// Writes content to path atomically; throws std::runtime_error with the
// path in the message on failure.
void atomic_write(const std::string& path, const std::string& content);

std::string path_to_csv(const series::PathSample& p); // "t,value" rows
void write_path_csv(const series::PathSample& p, const std::string& path);

// binary cache: magic "MSPATH01", u8 tag, 7 pad bytes, u64 seed, u64 terms,
// u64 count, count x t, count x value (all little-endian 64-bit)
void write_path_binary(const series::PathSample& p, const std::string& path);
series::PathSample read_path_binary(const std::string& path);

// single- or two-column numeric CSV; optional header line is skipped
std::vector<double> read_value_column(const std::string& path);

} // namespace mstab::io
