#include "lattice/keyspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "lattice/error.hpp"
#include "lattice/geometry.hpp"
#include "lattice/raster.hpp"

namespace lattice {
namespace {

struct DigitRange {
  int lo;
  int hi;
  const char* name;
};

constexpr DigitRange kDigitRanges[8] = {
    {0, 2, "vertex style"},
    {0, 1, "vertex sub-option"},
    {2, 4, "horizontal segment count"},
    {2, 4, "vertical segment count"},
    {0, 1, "horizontal edge style"},
    {0, 1, "vertical edge style"},
    {0, 2, "interior support"},
    {0, 1, "interior sub-option"},
};

}  // namespace

DesignKey parse_key(std::string_view text) {
  if (text.size() != 8) {
    throw FormatError("design key must have exactly 8 digits, got " +
                      std::to_string(text.size()) + " characters: '" +
                      std::string(text) + "'");
  }
  int d[8];
  for (int i = 0; i < 8; ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') {
      throw FormatError("design key '" + std::string(text) +
                        "' contains non-digit character at position " +
                        std::to_string(i + 1));
    }
    d[i] = c - '0';
    const auto& range = kDigitRanges[i];
    if (d[i] < range.lo || d[i] > range.hi) {
      throw DomainError("design key '" + std::string(text) + "': digit " +
                        std::to_string(i + 1) + " (" + range.name + ") = " +
                        std::to_string(d[i]) + " is outside [" +
                        std::to_string(range.lo) + ", " +
                        std::to_string(range.hi) + "]");
    }
  }
  DesignKey key;
  key.vertex = static_cast<VertexStyle>(d[0]);
  key.vertex_sub = d[1];
  key.h_segments = d[2];
  key.v_segments = d[3];
  key.h_style = static_cast<EdgeStyle>(d[4]);
  key.v_style = static_cast<EdgeStyle>(d[5]);
  key.interior = static_cast<Interior>(d[6]);
  key.interior_sub = d[7];
  return canonicalize(key);
}

std::string format_key(const DesignKey& key) {
  std::string s(8, '0');
  s[0] = static_cast<char>('0' + static_cast<int>(key.vertex));
  s[1] = static_cast<char>('0' + key.vertex_sub);
  s[2] = static_cast<char>('0' + key.h_segments);
  s[3] = static_cast<char>('0' + key.v_segments);
  s[4] = static_cast<char>('0' + static_cast<int>(key.h_style));
  s[5] = static_cast<char>('0' + static_cast<int>(key.v_style));
  s[6] = static_cast<char>('0' + static_cast<int>(key.interior));
  s[7] = static_cast<char>('0' + key.interior_sub);
  return s;
}

DesignKey canonicalize(const DesignKey& key) {
  DesignKey out = key;
  if (out.vertex == VertexStyle::AsIs) out.vertex_sub = 0;
  if (out.interior == Interior::None) out.interior_sub = 0;
  return out;
}

bool is_canonical(const DesignKey& key) { return canonicalize(key) == key; }

std::vector<DesignKey> enumerate_canonical_keys() {
  // Nested loops in digit order produce lexicographic order directly.
  std::vector<DesignKey> keys;
  for (int v = 0; v <= 2; ++v) {
    for (int vs = 0; vs <= (v == 0 ? 0 : 1); ++vs) {
      for (int h = 2; h <= 4; ++h) {
        for (int vv = 2; vv <= 4; ++vv) {
          for (int hs = 0; hs <= 1; ++hs) {
            for (int vst = 0; vst <= 1; ++vst) {
              for (int in = 0; in <= 2; ++in) {
                for (int is = 0; is <= (in == 0 ? 0 : 1); ++is) {
                  DesignKey k;
                  k.vertex = static_cast<VertexStyle>(v);
                  k.vertex_sub = vs;
                  k.h_segments = h;
                  k.v_segments = vv;
                  k.h_style = static_cast<EdgeStyle>(hs);
                  k.v_style = static_cast<EdgeStyle>(vst);
                  k.interior = static_cast<Interior>(in);
                  k.interior_sub = is;
                  keys.push_back(k);
                }
              }
            }
          }
        }
      }
    }
  }
  return keys;
}

KeyEnumeration enumerate_keys() {
  KeyEnumeration result;
  result.canonical = enumerate_canonical_keys();
  std::map<std::vector<std::uint8_t>, DesignKey> seen;
  for (const auto& key : result.canonical) {
    const BitImage image = render_key(key);
    // Lexicographic iteration order means the first key of each class wins.
    if (seen.emplace(image.packed(), key).second) {
      result.unique.push_back(key);
    }
  }
  return result;
}

DesignSample sample_design(std::mt19937_64& rng, const std::vector<DesignKey>& keys) {
  if (keys.empty()) throw ContractViolation("sample_design: empty key list");
  std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
  std::uniform_real_distribution<double> thick(kMinThicknessMm, kMaxThicknessMm);
  std::uniform_real_distribution<double> log_rate(kMinLog10Rate, kMaxLog10Rate);
  DesignSample s;
  s.key = keys[pick(rng)];
  s.thickness_mm = thick(rng);
  s.strain_rate = std::pow(10.0, log_rate(rng));
  return s;
}

}  // namespace lattice
