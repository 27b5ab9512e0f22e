#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "landing/matrix.hpp"
#include "landing/problems.hpp"

namespace landing {

/// Flat binary container for generated instances:
///   "LNDG" | u32 version | u32 kind | u64 seed | f64 param | u32 count |
///   count x (u64 rows | u64 cols | rows*cols f64)
/// All fields little-endian.
enum class DataKind : std::uint32_t { pca = 1, ica = 2 };

struct DataFile {
  DataKind kind = DataKind::pca;
  std::uint64_t seed = 0;
  double param = 0.0;
  std::vector<Matrix> matrices;
};

void write_data_file(const std::filesystem::path& path, const DataFile& file);
DataFile read_data_file(const std::filesystem::path& path);

/// pca: [data, planted_u], param = sigma. ica: [sources, mixing, data].
DataFile to_data_file(const PcaInstance& inst);
DataFile to_data_file(const IcaInstance& inst);
PcaInstance pca_from_data_file(const DataFile& file);
IcaInstance ica_from_data_file(const DataFile& file);

}  // namespace landing
