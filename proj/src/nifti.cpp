#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>

#include "cardiac/dataio.hpp"

namespace cardiac {

namespace {

constexpr int kHeaderSize = 348;
constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

struct GzCloser {
  void operator()(gzFile_s* f) const { gzclose(f); }
};

// gzread passes uncompressed files through unchanged, so one reader serves
// both .nii and .nii.gz.
std::vector<unsigned char> read_all(const fs::path& path) {
  std::unique_ptr<gzFile_s, GzCloser> file(gzopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buf, sizeof buf);
    if (n < 0) throw IoError("read error in " + path.string());
    if (n == 0) break;
    bytes.insert(bytes.end(), buf, buf + n);
  }
  return bytes;
}

class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + offset, sizeof(T));
    if (swap_) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

 private:
  const std::vector<unsigned char>& bytes_;
  bool swap_;
};

}  // namespace

NiftiVolume read_nifti(const fs::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < kHeaderSize) throw IoError("truncated NIfTI header: " + path.string());

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    swap = true;
    const auto u = static_cast<std::uint32_t>(sizeof_hdr);
    const std::uint32_t swapped =
        (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    if (swapped != static_cast<std::uint32_t>(kHeaderSize)) {
      throw IoError("not a NIfTI-1 file: " + path.string());
    }
  }
  if (std::memcmp(bytes.data() + 344, "n+1", 4) != 0) {
    throw IoError("only single-file NIfTI-1 (magic n+1) is supported: " + path.string());
  }
  const HeaderReader h(bytes, swap);

  const int ndim = h.get<std::int16_t>(40);
  if (ndim < 2 || ndim > 4) throw IoError("unsupported NIfTI dimensionality " + std::to_string(ndim));
  NiftiVolume vol;
  for (int i = 0; i < 4; ++i) {
    const int d = i < ndim ? h.get<std::int16_t>(42 + 2 * i) : 1;
    if (d <= 0) throw IoError("non-positive NIfTI dim");
    vol.dims[i] = d;
  }
  vol.spacing = Spacing{std::abs(h.get<float>(80)), std::abs(h.get<float>(84)),
                        ndim >= 3 ? std::abs(h.get<float>(88)) : 1.0f};
  vol.spacing.validate();

  const std::int16_t datatype = h.get<std::int16_t>(70);
  std::size_t elem = 0;
  switch (datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    default: throw IoError("unsupported NIfTI datatype " + std::to_string(datatype));
  }
  const auto offset = static_cast<std::size_t>(h.get<float>(108));
  const std::size_t count = static_cast<std::size_t>(vol.dims[0]) * vol.dims[1] * vol.dims[2] * vol.dims[3];
  if (offset < kHeaderSize || bytes.size() < offset + count * elem) {
    throw IoError("truncated payload: " + path.string());
  }
  float slope = h.get<float>(112);
  float inter = h.get<float>(116);
  if (slope == 0.0f || !std::isfinite(slope)) {
    slope = 1.0f;
    inter = 0.0f;
  }

  vol.values.resize(count);
  const HeaderReader data(bytes, swap);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = offset + i * elem;
    double v = 0.0;
    switch (datatype) {
      case kDtUint8: v = bytes[at]; break;
      case kDtInt16: v = data.get<std::int16_t>(at); break;
      case kDtFloat32: v = data.get<float>(at); break;
    }
    vol.values[i] = slope * v + inter;
  }
  return vol;
}

}  // namespace cardiac
