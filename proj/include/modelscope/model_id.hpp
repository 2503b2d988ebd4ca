#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <functional>

namespace modelscope {

/// A candidate model as a set of design-matrix columns. The intercept is
/// always present and is not represented in the mask.
struct ModelId {
  static constexpr int kMaxVariables = 63;

  std::uint64_t mask = 0;

  static constexpr ModelId null() { return ModelId{0}; }
  static constexpr ModelId full(int p) {
    return ModelId{p >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << p) - 1};
  }

  constexpr bool contains(int j) const { return (mask >> j) & 1u; }
  constexpr ModelId with(int j) const { return ModelId{mask | (std::uint64_t{1} << j)}; }
  constexpr ModelId without(int j) const {
    return ModelId{mask & ~(std::uint64_t{1} << j)};
  }
  constexpr int size() const { return std::popcount(mask); }
  /// Number of regression parameters: variables plus intercept.
  constexpr int dimension() const { return size() + 1; }
  constexpr bool subset_of(ModelId other) const { return (mask & ~other.mask) == 0; }

  friend constexpr auto operator<=>(ModelId, ModelId) = default;
};

/// Deterministic total order used for every tie: fewer variables first, then
/// smaller mask.
constexpr bool simpler(ModelId a, ModelId b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.mask < b.mask;
}

}  // namespace modelscope

template <>
struct std::hash<modelscope::ModelId> {
  std::size_t operator()(modelscope::ModelId m) const noexcept {
    return std::hash<std::uint64_t>{}(m.mask);
  }
};
