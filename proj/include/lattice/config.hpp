#pragma once

#include <iosfwd>
#include <map>
#include <string>

namespace lattice {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Keys are kept sorted so written files are stable and diffable.
class Config {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;

  /// Entries of `other` override ours.
  void merge(const Config& other);

  const std::map<std::string, std::string>& entries() const { return values_; }

  static Config parse(std::istream& in);
  static Config load(const std::string& path);
  void write(std::ostream& out) const;
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace lattice
