// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/image.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <string>

#include "xdface/error.hpp"

namespace xdface {

double mean_abs_diff(const Image& a, const Image& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::DimMismatch, "image sizes differ");
  }
  if (a.empty()) return 0.0;
  auto da = a.data();
  auto db = b.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) sum += std::abs(int(da[i]) - int(db[i]));
  return sum / static_cast<double>(da.size());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  if (next_token(in) != "P6") throw Error(ErrorCode::FormatError, path.string() + ": not a P6 PPM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::FormatError, path.string() + ": bad PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw Error(ErrorCode::FormatError, path.string() + ": unsupported PPM geometry or maxval");
  }
  Image img(h, w);
  auto buf = img.data();
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw Error(ErrorCode::FormatError, path.string() + ": truncated pixel data");
  }
  return img;
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  auto buf = img.data();
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace xdface
