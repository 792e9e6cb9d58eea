#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "nwc/errors.hpp"

namespace nwc {

struct PgmImage {
  int height = 0;
  int width = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major
};

inline void write_pgm(const PgmImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_pgm: cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline PgmImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_pgm: cannot open " + path);

  auto next_token = [&in, &path]() {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!token.empty()) return token;
        continue;
      }
      token.push_back(static_cast<char>(ch));
    }
    if (token.empty())
      throw DecodeError(DecodeError::Code::truncated, "read_pgm: truncated header in " + path);
    return token;
  };

  if (next_token() != "P5")
    throw DecodeError(DecodeError::Code::bad_magic, "read_pgm: not a P5 file: " + path);
  PgmImage img;
  img.width = std::stoi(next_token());
  img.height = std::stoi(next_token());
  img.maxval = std::stoi(next_token());
  if (img.width < 1 || img.height < 1 || img.maxval < 1 || img.maxval > 255)
    throw DecodeError(DecodeError::Code::bad_value, "read_pgm: bad dimensions in " + path);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw DecodeError(DecodeError::Code::truncated, "read_pgm: truncated pixel data in " + path);
  return img;
}

}  // namespace nwc
