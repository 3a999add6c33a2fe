#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lattice/geometry.hpp"

namespace lattice {

inline constexpr int kImageSide = 128;
inline constexpr int kImagePixels = kImageSide * kImageSide;
// Bytes per row in the packed bitset layout (MSB first).
inline constexpr int kPackedRowBytes = kImageSide / 8;

/// 128x128 binary skeleton image, row-major, row 0 at the top.
class BitImage {
 public:
  BitImage() : bits_(kImagePixels, 0) {}

  bool get(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool on = true) { bits_[index(row, col)] = on ? 1 : 0; }

  std::size_t popcount() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  /// Pixel values as 0.0 / 1.0, for the autoencoder.
  std::vector<double> to_unit_floats() const;
  /// Thresholds `values` at `threshold` (strictly greater is on).
  static BitImage from_floats(std::span<const double> values, double threshold = 0.5);

  std::vector<std::uint8_t> packed() const;
  static BitImage from_packed(std::span<const std::uint8_t> packed);

  std::string source_key;
  // Set when the image was rasterized from an empty curve set.
  bool empty_source = false;

  bool operator==(const BitImage& other) const { return bits_ == other.bits_; }

 private:
  static std::size_t index(int row, int col) {
    return static_cast<std::size_t>(row) * kImageSide + static_cast<std::size_t>(col);
  }
  std::vector<std::uint8_t> bits_;
};

/// Nearest-pixel stamping of samples taken every quarter pixel of arc
/// length. The bbox maps onto pixel centres 0..127.
BitImage rasterize(const CurveSet& curves);

/// Image of the 2x2 lattice for `key`.
BitImage render_key(const DesignKey& key, const CellProportions& proportions = {});

/// Dice similarity 2|a & b| / (|a| + |b|); 1 when both are empty.
double dsc(const BitImage& a, const BitImage& b);

// Binary PGM (P5, maxval 255, pixels 0 or 255).
void write_pgm(std::ostream& out, const BitImage& image);
BitImage read_pgm(std::istream& in);
void save_pgm(const std::string& path, const BitImage& image);
BitImage load_pgm(const std::string& path);

}  // namespace lattice
