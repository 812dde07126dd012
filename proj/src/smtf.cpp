#include "smast/smtf.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace smast {

static_assert(std::endian::native == std::endian::little,
              "SMTF writer assumes a little-endian host");

namespace {
constexpr char kMagic[4] = {'S', 'M', 'T', 'F'};
constexpr uint32_t kVersion = 1;
}  // namespace

void smtf_write(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open for writing: " + path);
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  uint32_t ndim = static_cast<uint32_t>(t.ndim());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
  for (int64_t i = 0; i < t.ndim(); ++i) {
    uint64_t d = static_cast<uint64_t>(t.dim(i));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  }
  out.write(reinterpret_cast<const char*>(t.data().data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!out) fail("write failed: " + path);
}

Tensor smtf_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail("not an SMTF file: " + path);
  uint32_t version = 0, ndim = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
  if (!in || version != kVersion)
    fail("unsupported SMTF version " + std::to_string(version) + " in " + path);
  Shape shape(ndim);
  int64_t numel = 1;
  for (uint32_t i = 0; i < ndim; ++i) {
    uint64_t d = 0;
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    shape[i] = static_cast<int64_t>(d);
    numel *= shape[i];
  }
  std::vector<float> data(static_cast<size_t>(numel));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) fail("truncated SMTF file: " + path);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace smast
