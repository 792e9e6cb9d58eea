#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "nwc/errors.hpp"
#include "nwc/grid.hpp"
#include "nwc/synthetic.hpp"

namespace nwc {

// NWC1 dataset file, little-endian:
//   magic "NWC1" | u32 height | u32 width | u32 cadence_s | u32 t_in
//   | u32 t_out | u64 sample_count
//   then per sample, per frame (t_in + t_out frames):
//     u64 timestamp, height rows bit-packed MSB-first, ceil(width/8) bytes each
//   | u32 CRC-32 of all preceding bytes
namespace nwc1 {

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  const std::uint8_t* bytes(std::size_t n) {
    need(n);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_)
      throw DecodeError(DecodeError::Code::truncated,
                        "NWC1: truncated file (need " + std::to_string(n) +
                            " bytes at offset " + std::to_string(pos_) + ")");
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::size_t row_bytes(int width) {
  return (static_cast<std::size_t>(width) + 7) / 8;
}

inline std::vector<std::uint8_t> encode(const Dataset& dataset) {
  dataset.shape.validate();
  dataset.spec.validate();
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), {'N', 'W', 'C', '1'});
  detail::put_u32(buf, static_cast<std::uint32_t>(dataset.shape.height));
  detail::put_u32(buf, static_cast<std::uint32_t>(dataset.shape.width));
  detail::put_u32(buf, static_cast<std::uint32_t>(dataset.spec.cadence_s));
  detail::put_u32(buf, static_cast<std::uint32_t>(dataset.spec.t_in));
  detail::put_u32(buf, static_cast<std::uint32_t>(dataset.spec.t_out));
  detail::put_u64(buf, dataset.samples.size());

  const std::size_t rb = row_bytes(dataset.shape.width);
  for (const SequenceSample& sample : dataset.samples) {
    if (static_cast<int>(sample.inputs.size()) != dataset.spec.t_in ||
        static_cast<int>(sample.targets.size()) != dataset.spec.t_out)
      throw ValidationError("NWC1: sample frame counts do not match spec");
    auto write_frame = [&](const CloudGrid& grid) {
      if (!(grid.shape == dataset.shape))
        throw ValidationError("NWC1: frame shape does not match dataset shape");
      detail::put_u64(buf, static_cast<std::uint64_t>(grid.timestamp));
      for (int r = 0; r < grid.shape.height; ++r) {
        std::size_t row_start = buf.size();
        buf.resize(buf.size() + rb, 0);
        for (int c = 0; c < grid.shape.width; ++c)
          if (grid.at(r, c))
            buf[row_start + static_cast<std::size_t>(c) / 8] |=
                static_cast<std::uint8_t>(0x80u >> (c % 8));
      }
    };
    for (const CloudGrid& grid : sample.inputs) write_frame(grid);
    for (const CloudGrid& grid : sample.targets) write_frame(grid);
  }

  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
  detail::put_u32(buf, crc);
  return buf;
}

inline Dataset decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "NWC1", 4) != 0)
    throw DecodeError(DecodeError::Code::bad_magic, "NWC1: bad magic");
  if (bytes.size() < 4 + 20 + 8 + 4)
    throw DecodeError(DecodeError::Code::truncated, "NWC1: truncated header");

  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
  std::uint32_t actual_crc = static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (stored_crc != actual_crc)
    throw DecodeError(DecodeError::Code::checksum_mismatch,
                      "NWC1: checksum mismatch");

  detail::Reader r(bytes.data(), bytes.size() - 4);
  r.bytes(4);  // magic
  Dataset dataset;
  dataset.shape.height = static_cast<int>(r.u32());
  dataset.shape.width = static_cast<int>(r.u32());
  dataset.spec.cadence_s = static_cast<std::int64_t>(r.u32());
  dataset.spec.t_in = static_cast<int>(r.u32());
  dataset.spec.t_out = static_cast<int>(r.u32());
  const std::uint64_t sample_count = r.u64();
  dataset.shape.validate();
  dataset.spec.validate();

  const std::size_t rb = row_bytes(dataset.shape.width);
  dataset.samples.reserve(sample_count);
  for (std::uint64_t s = 0; s < sample_count; ++s) {
    SequenceSample sample;
    for (int f = 0; f < dataset.spec.total_frames(); ++f) {
      const std::int64_t ts = static_cast<std::int64_t>(r.u64());
      std::vector<std::uint8_t> mask(dataset.shape.cells(), 0);
      for (int row = 0; row < dataset.shape.height; ++row) {
        const std::uint8_t* packed = r.bytes(rb);
        for (int c = 0; c < dataset.shape.width; ++c)
          mask[static_cast<std::size_t>(row) * dataset.shape.width + c] =
              (packed[static_cast<std::size_t>(c) / 8] >> (7 - c % 8)) & 1u;
      }
      CloudGrid grid(dataset.shape, ts, std::move(mask));
      if (f < dataset.spec.t_in)
        sample.inputs.push_back(std::move(grid));
      else
        sample.targets.push_back(std::move(grid));
    }
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

inline void write_file(const Dataset& dataset, const std::string& path) {
  std::vector<std::uint8_t> bytes = encode(dataset);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("NWC1: cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("NWC1: write failed: " + path);
}

inline Dataset read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("NWC1: cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

inline std::uint32_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("NWC1: cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace nwc1
}  // namespace nwc
