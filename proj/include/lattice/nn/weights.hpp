#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace lattice::nn {

inline constexpr int kWeightFormatVersion = 1;

/// Portable weight file: a plain-text manifest followed by little-endian
/// float64 blobs in the order the manifest declares them.
///
///   LATTICE-WEIGHTS 1
///   meta <key> <value>
///   blob <name> <count>
///   end
///   <payload>
///
/// Metadata and blobs keep insertion order, so load followed by save
/// reproduces the file byte for byte.
class WeightArchive {
 public:
  void set_meta(const std::string& key, const std::string& value);
  /// Throws FormatError when the key is missing.
  const std::string& meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;

  void add_blob(const std::string& name, std::vector<double> values);
  void add_blob(const std::string& name, const double* data, std::size_t size);
  /// Throws FormatError when missing or when `expected_size` disagrees.
  const std::vector<double>& blob(const std::string& name, std::size_t expected_size) const;

  const std::vector<std::pair<std::string, std::string>>& meta_entries() const { return meta_; }
  const std::vector<std::pair<std::string, std::vector<double>>>& blobs() const { return blobs_; }

  void write(std::ostream& out) const;
  static WeightArchive read(std::istream& in);
  void save(const std::string& path) const;
  static WeightArchive load(const std::string& path);

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::pair<std::string, std::vector<double>>> blobs_;
};

}  // namespace lattice::nn
