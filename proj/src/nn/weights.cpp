#include "lattice/nn/weights.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lattice/binary_io.hpp"
#include "lattice/error.hpp"

namespace lattice::nn {

void WeightArchive::set_meta(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of(" \t\n") != std::string::npos ||
      value.find('\n') != std::string::npos) {
    throw ContractViolation("WeightArchive: metadata key must be a single token, value one line");
  }
  for (auto& [k, v] : meta_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta_.emplace_back(key, value);
}

bool WeightArchive::has_meta(const std::string& key) const {
  return std::any_of(meta_.begin(), meta_.end(), [&](const auto& kv) { return kv.first == key; });
}

const std::string& WeightArchive::meta(const std::string& key) const {
  for (const auto& [k, v] : meta_) {
    if (k == key) return v;
  }
  throw FormatError("weight file has no metadata entry '" + key + "'");
}

void WeightArchive::add_blob(const std::string& name, std::vector<double> values) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw ContractViolation("WeightArchive: blob name must be a single token");
  }
  blobs_.emplace_back(name, std::move(values));
}

void WeightArchive::add_blob(const std::string& name, const double* data, std::size_t size) {
  add_blob(name, std::vector<double>(data, data + size));
}

const std::vector<double>& WeightArchive::blob(const std::string& name,
                                               std::size_t expected_size) const {
  for (const auto& [n, values] : blobs_) {
    if (n == name) {
      if (values.size() != expected_size) {
        throw FormatError("weight blob '" + name + "' has " + std::to_string(values.size()) +
                          " values, expected " + std::to_string(expected_size));
      }
      return values;
    }
  }
  throw FormatError("weight file has no blob '" + name + "'");
}

void WeightArchive::write(std::ostream& out) const {
  out << "LATTICE-WEIGHTS " << kWeightFormatVersion << '\n';
  for (const auto& [k, v] : meta_) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [n, values] : blobs_) out << "blob " << n << ' ' << values.size() << '\n';
  out << "end\n";
  for (const auto& [n, values] : blobs_) binio::put_f64s(out, values);
}

WeightArchive WeightArchive::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty weight file");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "LATTICE-WEIGHTS") throw FormatError("not a weight file (bad magic)");
    if (version != kWeightFormatVersion) {
      throw FormatError("weight file format version " + std::to_string(version) +
                        " is not supported (expected " + std::to_string(kWeightFormatVersion) + ")");
    }
  }
  WeightArchive archive;
  std::vector<std::pair<std::string, std::size_t>> layout;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    if (line.rfind("meta ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) {
        archive.meta_.emplace_back(line.substr(5), "");
      } else {
        archive.meta_.emplace_back(line.substr(5, sp - 5), line.substr(sp + 1));
      }
    } else if (line.rfind("blob ", 0) == 0) {
      std::istringstream ls(line.substr(5));
      std::string name;
      std::size_t count = 0;
      if (!(ls >> name >> count)) throw FormatError("bad blob line in weight manifest: " + line);
      layout.emplace_back(name, count);
    } else {
      throw FormatError("unexpected line in weight manifest: " + line);
    }
  }
  if (!ended) throw FormatError("weight manifest is missing its 'end' line");
  for (const auto& [name, count] : layout) {
    std::vector<double> values(count);
    binio::get_f64s(in, values);
    archive.blobs_.emplace_back(name, std::move(values));
  }
  return archive;
}

void WeightArchive::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight file '" + path + "'");
  write(out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

WeightArchive WeightArchive::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file '" + path + "'");
  return read(in);
}

}  // namespace lattice::nn
