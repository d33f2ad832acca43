#include "cogflow/cogspace.hpp"

#include <cmath>
#include <set>

#include "cogflow/errors.hpp"

namespace cogflow {

namespace {

void check_dimension_count(std::size_t n) {
  if (n == 0 || n > CognitiveSpace::kMaxDimensions) {
    throw ContractError("cognitive space must have between 1 and " +
                        std::to_string(CognitiveSpace::kMaxDimensions) + " dimensions, got " +
                        std::to_string(n));
  }
}

}  // namespace

CognitiveSpace::CognitiveSpace(std::vector<DimensionSpec> dimensions)
    : dimensions_(std::move(dimensions)) {
  check_dimension_count(dimensions_.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < dimensions_.size(); ++i) {
    const auto& d = dimensions_[i];
    if (d.name.empty()) throw ContractError("dimension " + std::to_string(i + 1) + " has an empty name");
    if (!seen.insert(d.name).second) throw ContractError("duplicate dimension name '" + d.name + "'");
    if (d.index != i + 1) {
      throw ContractError("dimension '" + d.name + "' has index " + std::to_string(d.index) +
                          ", expected " + std::to_string(i + 1));
    }
  }
}

CognitiveSpace CognitiveSpace::from_names(const std::vector<std::string>& names) {
  std::vector<DimensionSpec> dims;
  dims.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) dims.push_back({names[i], i + 1, {}, {}});
  return CognitiveSpace(std::move(dims));
}

std::optional<std::size_t> CognitiveSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < dimensions_.size(); ++i) {
    if (dimensions_[i].name == name) return i;
  }
  return std::nullopt;
}

ScoreVector::ScoreVector(std::vector<double> values) : values_(std::move(values)) {
  check_dimension_count(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ContractError("score component " + std::to_string(i + 1) + " = " + std::to_string(v) +
                          " lies outside [0,1]");
    }
  }
}

ScoreVector::ScoreVector(const CognitiveSpace& space, std::vector<double> values)
    : ScoreVector(std::move(values)) {
  if (values_.size() != space.size()) {
    throw ContractError("score vector has " + std::to_string(values_.size()) +
                        " components but the space has " + std::to_string(space.size()));
  }
}

CognitiveAnchor CognitiveAnchor::from_index(std::size_t n, std::size_t k) {
  check_dimension_count(n);
  if (k < 1 || k > (std::size_t{1} << n)) {
    throw ContractError("anchor index " + std::to_string(k) + " out of range for n=" + std::to_string(n));
  }
  std::vector<std::uint8_t> bits(n);
  for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>(((k - 1) >> i) & 1U);
  return CognitiveAnchor(std::move(bits), k);
}

CognitiveAnchor CognitiveAnchor::from_bits(std::vector<std::uint8_t> bits) {
  check_dimension_count(bits.size());
  std::size_t code = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw ContractError("anchor bits must be 0 or 1");
    code |= std::size_t{bits[i]} << i;
  }
  return CognitiveAnchor(std::move(bits), code + 1);
}

std::vector<CognitiveAnchor> enumerate_anchors(std::size_t n) {
  check_dimension_count(n);
  std::vector<CognitiveAnchor> anchors;
  anchors.reserve(std::size_t{1} << n);
  for (std::size_t k = 1; k <= (std::size_t{1} << n); ++k) anchors.push_back(CognitiveAnchor::from_index(n, k));
  return anchors;
}

std::vector<CognitiveAnchor> enumerate_anchors(const CognitiveSpace& space) {
  return enumerate_anchors(space.size());
}

double anchor_weight(const ScoreVector& s, const CognitiveAnchor& a) {
  if (s.size() != a.size()) {
    throw ContractError("score vector (n=" + std::to_string(s.size()) + ") and anchor (n=" +
                        std::to_string(a.size()) + ") belong to incompatible spaces");
  }
  double w = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) w *= a.bit(i) ? s[i] : 1.0 - s[i];
  return w;
}

std::vector<double> weight_vector(const ScoreVector& s) {
  const auto anchors = enumerate_anchors(s.size());
  std::vector<double> weights;
  weights.reserve(anchors.size());
  for (const auto& a : anchors) weights.push_back(anchor_weight(s, a));
  return weights;
}

std::vector<double> weight_vector(const ScoreVector& s, const CognitiveSpace& space) {
  if (s.size() != space.size()) {
    throw ContractError("score vector does not belong to the given cognitive space");
  }
  return weight_vector(s);
}

}  // namespace cogflow
