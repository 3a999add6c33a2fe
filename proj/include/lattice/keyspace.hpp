#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace lattice {

enum class VertexStyle : std::uint8_t { AsIs = 0, StraightEdge = 1, Arc = 2 };
enum class EdgeStyle : std::uint8_t { Straight = 0, TwoArcs = 1 };
enum class Interior : std::uint8_t { None = 0, Plus = 1, X = 2 };

/// One lattice cross-section design, one field per key digit.
///
/// `vertex_sub` selects the chamfer style (0 straight, 1 two arcs) for
/// StraightEdge vertices and the arc direction (0 in, 1 out) for Arc
/// vertices. `interior_sub` adds a centred circle when 1.
struct DesignKey {
  VertexStyle vertex = VertexStyle::AsIs;
  int vertex_sub = 0;
  int h_segments = 2;
  int v_segments = 2;
  EdgeStyle h_style = EdgeStyle::Straight;
  EdgeStyle v_style = EdgeStyle::Straight;
  Interior interior = Interior::None;
  int interior_sub = 0;

  auto operator<=>(const DesignKey&) const = default;
};

/// Parses an 8-digit key and returns it canonicalized.
/// Throws FormatError on bad length/characters, DomainError on a digit
/// outside its range (the message names the digit position).
DesignKey parse_key(std::string_view text);

std::string format_key(const DesignKey& key);

/// Forces don't-care digits to 0. Idempotent.
DesignKey canonicalize(const DesignKey& key);

bool is_canonical(const DesignKey& key);

/// All canonical keys in lexicographic digit order.
std::vector<DesignKey> enumerate_canonical_keys();

struct KeyEnumeration {
  std::vector<DesignKey> canonical;  // raw canonical list
  std::vector<DesignKey> unique;     // after raster-equality deduplication
  std::size_t raw_count() const { return canonical.size(); }
  std::size_t dedup_count() const { return unique.size(); }
};

// Count the key system is documented to contain; reported next to ours.
inline constexpr std::size_t kReferenceUniqueKeyCount = 660;

/// Canonical enumeration followed by geometric deduplication: keys whose
/// rasterized 2x2 tessellations are bit-identical collapse onto the
/// lexicographically smallest member.
KeyEnumeration enumerate_keys();

struct DesignSample {
  DesignKey key;
  double thickness_mm = 0.0;
  double strain_rate = 0.0;  // 1/s
};

inline constexpr double kMinThicknessMm = 0.25;
inline constexpr double kMaxThicknessMm = 0.75;
inline constexpr double kMinLog10Rate = 2.0;
inline constexpr double kMaxLog10Rate = 5.0;

/// Uniform key from `keys`, uniform thickness, log-uniform strain rate.
DesignSample sample_design(std::mt19937_64& rng, const std::vector<DesignKey>& keys);

}  // namespace lattice
