#include "sslv/clip.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace sslv {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'L', 'V'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, size_t& offset, const std::string& what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4)
    fail(ErrorKind::FormatError,
         "truncated " + what + " at byte offset " + std::to_string(offset));
  offset += 4;
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void check_clip_tensor(const Tensor& t) {
  if (t.rank() != 4) fail(ErrorKind::InvalidShape, "clip tensor must have rank 4 (T,H,W,C)");
  if (t.dim(3) != 3) fail(ErrorKind::InvalidShape, "clip tensor requires C == 3");
  if (t.dim(0) < 2) fail(ErrorKind::InvalidShape, "clip tensor requires T >= 2");
  for (size_t i = 0; i < t.size(); ++i) {
    real v = t[i];
    if (!(v >= real(0) && v <= real(1)))
      fail(ErrorKind::InvalidRange, "clip pixel outside [0,1] at flat index " + std::to_string(i));
  }
}

ClipTensor::ClipTensor(Tensor t) : tensor_(std::move(t)) { check_clip_tensor(tensor_); }

void save_clip_tensor(const Tensor& t, const std::string& path) {
  if (t.rank() != 4) fail(ErrorKind::InvalidShape, "SSLV container stores rank-4 tensors");
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::IoError, "cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  for (int axis = 0; axis < 4; ++axis) put_u32(os, static_cast<uint32_t>(t.dim(axis)));
  std::vector<float> payload(t.size());
  for (size_t i = 0; i < t.size(); ++i) payload[i] = static_cast<float>(t[i]);
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * 4));
  if (!os) fail(ErrorKind::IoError, "short write to " + path);
}

Tensor load_clip_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::IoError, "cannot open " + path + " for reading");
  size_t offset = 0;
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorKind::FormatError, "bad magic in " + path + " at byte offset 0");
  offset = 4;
  uint32_t version = get_u32(is, offset, "version");
  if (version != kVersion)
    fail(ErrorKind::FormatError, "unsupported version " + std::to_string(version) +
                                     " in " + path + " at byte offset 4");
  std::vector<int> shape(4);
  for (int axis = 0; axis < 4; ++axis) {
    uint32_t d = get_u32(is, offset, "dimension");
    if (d == 0 || d > (1u << 24))
      fail(ErrorKind::FormatError, "implausible dimension " + std::to_string(d) + " in " +
                                       path + " at byte offset " + std::to_string(offset - 4));
    shape[static_cast<size_t>(axis)] = static_cast<int>(d);
  }
  size_t count = checked_element_count(shape);
  std::vector<float> payload(count);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<size_t>(is.gcount()) != count * 4)
    fail(ErrorKind::FormatError,
         "payload shorter than header dims promise in " + path + " at byte offset " +
             std::to_string(offset + static_cast<size_t>(is.gcount())));
  // Trailing bytes mean the dims disagree with the payload length.
  char extra;
  is.read(&extra, 1);
  if (is.gcount() != 0)
    fail(ErrorKind::FormatError, "payload longer than header dims promise in " + path +
                                     " at byte offset " + std::to_string(offset + count * 4));
  std::vector<real> data(count);
  for (size_t i = 0; i < count; ++i) data[i] = static_cast<real>(payload[i]);
  return Tensor::from_data(shape, std::move(data));
}

void save_clip(const ClipTensor& clip, const std::string& path) {
  save_clip_tensor(clip.tensor(), path);
}

ClipTensor load_clip(const std::string& path) { return ClipTensor(load_clip_tensor(path)); }

}  // namespace sslv
