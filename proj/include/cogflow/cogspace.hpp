#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cogflow {

/// One axis of the cognitive space. `index` is 1-based.
struct DimensionSpec {
  std::string name;
  std::size_t index = 0;
  std::string low_pole_text;
  std::string high_pole_text;

  bool operator==(const DimensionSpec&) const = default;
};

/// The unit hypercube [0,1]^n spanned by n named cognitive dimensions.
class CognitiveSpace {
 public:
  static constexpr std::size_t kMaxDimensions = 6;

  /// Validates names (nonempty, unique), indices (exactly 1..n) and 1 <= n <= 6.
  explicit CognitiveSpace(std::vector<DimensionSpec> dimensions);

  /// Builds a space from names alone; indices are positional and pole texts empty.
  static CognitiveSpace from_names(const std::vector<std::string>& names);

  std::size_t size() const noexcept { return dimensions_.size(); }
  std::size_t anchor_count() const noexcept { return std::size_t{1} << dimensions_.size(); }

  std::span<const DimensionSpec> dimensions() const noexcept { return dimensions_; }
  /// 0-based access.
  const DimensionSpec& dimension(std::size_t i) const { return dimensions_.at(i); }
  /// 0-based position of the dimension called `name`.
  std::optional<std::size_t> find(std::string_view name) const;

  bool operator==(const CognitiveSpace&) const = default;

 private:
  std::vector<DimensionSpec> dimensions_;
};

/// A target cognitive profile s in [0,1]^n. Out-of-range values are rejected, never clamped.
class ScoreVector {
 public:
  explicit ScoreVector(std::vector<double> values);
  ScoreVector(const CognitiveSpace& space, std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const ScoreVector&) const = default;

 private:
  std::vector<double> values_;
};

/// A hypercube vertex. Canonical index k is 1-based: k-1 in binary with
/// dimension 1 as the least significant bit.
class CognitiveAnchor {
 public:
  static CognitiveAnchor from_index(std::size_t n, std::size_t k);
  static CognitiveAnchor from_bits(std::vector<std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t index() const noexcept { return index_; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::uint8_t bit(std::size_t i) const { return bits_.at(i); }

  bool operator==(const CognitiveAnchor&) const = default;

 private:
  CognitiveAnchor(std::vector<std::uint8_t> bits, std::size_t index)
      : bits_(std::move(bits)), index_(index) {}

  std::vector<std::uint8_t> bits_;
  std::size_t index_;
};

/// All 2^n vertices in canonical order (k = 1 .. 2^n).
std::vector<CognitiveAnchor> enumerate_anchors(const CognitiveSpace& space);
std::vector<CognitiveAnchor> enumerate_anchors(std::size_t n);

/// Multilinear interpolation weight prod_i (s_i a_i + (1 - a_i)(1 - s_i)).
double anchor_weight(const ScoreVector& s, const CognitiveAnchor& a);

/// Weights of all anchors in canonical order. They sum to one up to roundoff.
std::vector<double> weight_vector(const ScoreVector& s);
std::vector<double> weight_vector(const ScoreVector& s, const CognitiveSpace& space);

}  // namespace cogflow
