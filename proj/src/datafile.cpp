#include "landing/datafile.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "landing/errors.hpp"

namespace landing {

namespace {

constexpr char kMagic[4] = {'L', 'N', 'D', 'G'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw ConfigError(fmt::format("{}: truncated data file", path.string()));
  }
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace

void write_data_file(const std::filesystem::path& path, const DataFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot open {} for writing", path.string()));
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.kind));
  put_le<std::uint64_t>(out, file.seed);
  put_le<double>(out, file.param);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.matrices.size()));
  for (const Matrix& m : file.matrices) {
    put_le<std::uint64_t>(out, m.rows());
    put_le<std::uint64_t>(out, m.cols());
    for (double v : m.values()) put_le<double>(out, v);
  }
  if (!out) throw ConfigError(fmt::format("write to {} failed", path.string()));
}

DataFile read_data_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open data file {}", path.string()));
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ConfigError(fmt::format("{}: not a LNDG data file", path.string()));
  }
  const auto version = get_le<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw ConfigError(fmt::format("{}: unsupported version {}", path.string(), version));
  }
  DataFile file;
  const auto kind = get_le<std::uint32_t>(in, path);
  if (kind != 1 && kind != 2) {
    throw ConfigError(fmt::format("{}: unknown instance kind {}", path.string(), kind));
  }
  file.kind = static_cast<DataKind>(kind);
  file.seed = get_le<std::uint64_t>(in, path);
  file.param = get_le<double>(in, path);
  const auto count = get_le<std::uint32_t>(in, path);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto rows = get_le<std::uint64_t>(in, path);
    const auto cols = get_le<std::uint64_t>(in, path);
    if (rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 32)) {
      throw ConfigError(fmt::format("{}: bad matrix shape {}x{}", path.string(), rows, cols));
    }
    std::vector<double> values(rows * cols);
    for (double& v : values) v = get_le<double>(in, path);
    file.matrices.emplace_back(rows, cols, std::move(values));
  }
  return file;
}

DataFile to_data_file(const PcaInstance& inst) {
  return {DataKind::pca, inst.seed, inst.noise_sigma, {inst.data, inst.planted_u}};
}

DataFile to_data_file(const IcaInstance& inst) {
  return {DataKind::ica, inst.seed, 0.0, {inst.sources, inst.mixing, inst.data}};
}

PcaInstance pca_from_data_file(const DataFile& file) {
  if (file.kind != DataKind::pca || file.matrices.size() != 2) {
    throw ConfigError("data file does not hold a PCA instance");
  }
  return {file.matrices[0], file.param, file.matrices[1], file.seed};
}

IcaInstance ica_from_data_file(const DataFile& file) {
  if (file.kind != DataKind::ica || file.matrices.size() != 3) {
    throw ConfigError("data file does not hold an ICA instance");
  }
  return {file.matrices[0], file.matrices[1], file.matrices[2], file.seed};
}

}  // namespace landing
