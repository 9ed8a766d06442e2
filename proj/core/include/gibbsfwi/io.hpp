#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gibbsfwi/grid.hpp"
#include "gibbsfwi/grid_wave.hpp"

namespace gfwi::io {

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
/// FNV-1a checksum of a file's bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Raw little-endian float64 array at base.f64 plus a JSON sidecar at
/// base.json.  `extra_json` must be a JSON object (or empty); its members
/// are merged into the sidecar.
void write_array(const std::filesystem::path& base, std::span<const double> data,
                 const std::vector<std::size_t>& shape, std::string_view extra_json = {});
std::vector<double> read_array(const std::filesystem::path& base, std::vector<std::size_t>* shape = nullptr);

void write_field(const std::filesystem::path& base, const Field2D& field);
Field2D read_field(const std::filesystem::path& base);

/// Sidecar records shape, dt, zero_mean and (when given) source and
/// receiver coordinates.
void write_seismogram(const std::filesystem::path& base, const Seismogram& s,
                      const AcquisitionGeometry* geometry = nullptr);
Seismogram read_seismogram(const std::filesystem::path& base);

/// Plot-ready CSV: one time column, then one column per trace.
void write_traces_csv(const std::filesystem::path& path, const Seismogram& s);
/// Plot-ready CSV: x, z, value rows.
void write_field_csv(const std::filesystem::path& path, const Field2D& field);

}  // namespace gfwi::io
