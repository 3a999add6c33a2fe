#include "lattice/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "lattice/error.hpp"

namespace lattice {

std::size_t BitImage::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<double> BitImage::to_unit_floats() const {
  std::vector<double> out(bits_.size());
  std::transform(bits_.begin(), bits_.end(), out.begin(),
                 [](std::uint8_t b) { return b ? 1.0 : 0.0; });
  return out;
}

BitImage BitImage::from_floats(std::span<const double> values, double threshold) {
  if (values.size() != static_cast<std::size_t>(kImagePixels)) {
    throw ContractViolation("BitImage::from_floats: expected 16384 values");
  }
  BitImage img;
  for (std::size_t i = 0; i < values.size(); ++i) img.bits_[i] = values[i] > threshold ? 1 : 0;
  return img;
}

std::vector<std::uint8_t> BitImage::packed() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(kImageSide) * kPackedRowBytes, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

BitImage BitImage::from_packed(std::span<const std::uint8_t> packed) {
  if (packed.size() != static_cast<std::size_t>(kImageSide) * kPackedRowBytes) {
    throw FormatError("packed image must be 2048 bytes, got " + std::to_string(packed.size()));
  }
  BitImage img;
  for (std::size_t i = 0; i < img.bits_.size(); ++i) {
    img.bits_[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
  }
  return img;
}

BitImage rasterize(const CurveSet& curves) {
  BitImage img;
  if (curves.empty()) {
    img.empty_source = true;
    return img;
  }
  const double side = curves.bbox.side;
  if (!(side > 0.0)) throw ContractViolation("rasterize: bbox side must be > 0");
  const double scale = (kImageSide - 1) / side;  // pixels per mm
  const double step = 0.25 / scale;              // mm per sample
  const Point o = curves.bbox.origin;

  auto stamp = [&](double x, double y) {
    const double u = (x - o.x) * scale;
    const double v = (y - o.y) * scale;
    const int col = static_cast<int>(std::floor(u + 0.5));
    const int row = (kImageSide - 1) - static_cast<int>(std::floor(v + 0.5));
    if (col >= 0 && col < kImageSide && row >= 0 && row < kImageSide) img.set(row, col);
  };

  for (const auto& s : curves.segments) {
    const double len = std::hypot(s.p1.x - s.p0.x, s.p1.y - s.p0.y);
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      stamp(s.p0.x + t * (s.p1.x - s.p0.x), s.p0.y + t * (s.p1.y - s.p0.y));
    }
  }
  for (const auto& a : curves.arcs) {
    const int n = std::max(1, static_cast<int>(std::ceil(a.length() / step)));
    for (int k = 0; k <= n; ++k) {
      const Point p = a.point_at(a.start_angle + a.sweep * static_cast<double>(k) / n);
      stamp(p.x, p.y);
    }
  }
  return img;
}

BitImage render_key(const DesignKey& key, const CellProportions& proportions) {
  BitImage img = rasterize(build_lattice(key, proportions));
  img.source_key = format_key(key);
  return img;
}

double dsc(const BitImage& a, const BitImage& b) {
  const auto ab = a.bits();
  const auto bb = b.bits();
  std::size_t both = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    na += ab[i];
    nb += bb[i];
    both += ab[i] & bb[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

void write_pgm(std::ostream& out, const BitImage& image) {
  out << "P5\n" << kImageSide << ' ' << kImageSide << "\n255\n";
  std::vector<char> bytes(kImagePixels);
  const auto bits = image.bits();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = bits[i] ? static_cast<char>(255) : 0;
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
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

BitImage read_pgm(std::istream& in) {
  if (pgm_token(in) != "P5") throw FormatError("not a binary PGM (P5) image");
  const std::string w = pgm_token(in);
  const std::string h = pgm_token(in);
  const std::string maxval = pgm_token(in);
  if (w != "128" || h != "128") throw FormatError("PGM must be 128x128, got " + w + "x" + h);
  if (maxval != "255") throw FormatError("PGM maxval must be 255, got " + maxval);
  std::vector<char> bytes(kImagePixels);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("PGM pixel data truncated");
  }
  BitImage img;
  for (int i = 0; i < kImagePixels; ++i) {
    const auto v = static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]);
    if (v != 0 && v != 255) throw FormatError("PGM pixel value must be 0 or 255");
    img.set(i / kImageSide, i % kImageSide, v == 255);
  }
  return img;
}

void save_pgm(const std::string& path, const BitImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path + "'");
  write_pgm(out, image);
  if (!out) throw IoError("write failed for '" + path + "'");
}

BitImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path + "'");
  return read_pgm(in);
}

}  // namespace lattice
