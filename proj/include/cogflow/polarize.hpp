#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cogflow/cogspace.hpp"

namespace cogflow {

enum class Pole : std::uint8_t { low = 0, high = 1 };

inline Pole pole_of(std::uint8_t bit) { return bit ? Pole::high : Pole::low; }

/// Rewrites a prompt toward one pole of one cognitive dimension.
class PolarizerBackend {
 public:
  virtual ~PolarizerBackend() = default;

  virtual std::string polarize(std::string_view prompt, const DimensionSpec& dimension, Pole pole) = 0;
  /// Identifies the backend (and its model) in cache keys.
  virtual std::string backend_id() const = 0;
};

// Template prompts look like "a valley «valence:+»«arousal:-»": the base text,
// one space, then tags in application order.
struct TemplateTag {
  std::string dimension;
  Pole pole;

  bool operator==(const TemplateTag&) const = default;
};

struct TemplatePrompt {
  std::string base;
  std::vector<TemplateTag> tags;
};

std::string format_tag(const TemplateTag& tag);
std::string format_template_prompt(const TemplatePrompt& prompt);
/// Splits off the trailing run of tags. Returns nullopt on malformed tag syntax.
std::optional<TemplatePrompt> parse_template_prompt(std::string_view prompt);

/// Deterministic backend: appends "«name:+»" / "«name:-»". Re-polarizing a
/// dimension drops its old tag and appends the new one at the end.
class TemplateBackend final : public PolarizerBackend {
 public:
  std::string polarize(std::string_view prompt, const DimensionSpec& dimension, Pole pole) override;
  std::string backend_id() const override { return "template"; }

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Stable content hash of a polarization request.
std::string cache_digest(std::string_view backend_id, std::string_view prompt,
                         std::string_view dimension_name, Pole pole);

/// Digest -> output map, optionally persisted as append-only NDJSON records
/// {"digest": ..., "output": ...}. Thread-safe; a key is fetched at most once
/// per process even under concurrent requests.
class PolarizationCache {
 public:
  PolarizationCache() = default;
  explicit PolarizationCache(std::filesystem::path path);

  PolarizationCache(const PolarizationCache&) = delete;
  PolarizationCache& operator=(const PolarizationCache&) = delete;

  std::string get_or_fetch(const std::string& digest, const std::function<std::string()>& fetch);
  std::optional<std::string> lookup(const std::string& digest) const;

  std::size_t size() const;
  /// Number of fetch callbacks that ran (cache misses).
  std::size_t fetches() const noexcept { return fetches_.load(); }
  const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

 private:
  void append_record(const std::string& digest, const std::string& output);

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::shared_future<std::string>> in_flight_;
  std::atomic<std::size_t> fetches_{0};
};

/// One application of the polarization operator, routed through the cache.
std::string polarize_once(PolarizerBackend& backend, std::string_view prompt,
                          const DimensionSpec& dimension, Pole pole, PolarizationCache& cache);

/// Cyclic Latin-square orders: order j (1-based) is (j, j+1, ..., n, 1, ..., j-1).
std::vector<std::vector<std::size_t>> build_chain_orders(std::size_t n);

struct ChainStep {
  std::size_t dimension;  // 1-based
  Pole pole;

  bool operator==(const ChainStep&) const = default;
};

struct PromptChain {
  std::vector<ChainStep> applications;
  std::vector<std::string> intermediates;

  const std::string& result() const { return intermediates.back(); }
  std::vector<std::size_t> order() const;
};

struct PolarizedPromptSet {
  CognitiveAnchor anchor;
  std::string base_prompt;
  std::vector<PromptChain> chains;
};

PolarizedPromptSet build_prompt_set(PolarizerBackend& backend, std::string_view prompt,
                                    const CognitiveAnchor& anchor, const CognitiveSpace& space,
                                    PolarizationCache& cache);

/// One set per anchor, canonical anchor order.
std::vector<PolarizedPromptSet> build_all_sets(PolarizerBackend& backend, std::string_view prompt,
                                               const CognitiveSpace& space, PolarizationCache& cache);

/// {base_prompt, space, sets:[{anchor_bits, chains:[{order, result}]}]}
nlohmann::json export_prompt_sets(std::string_view base_prompt, const CognitiveSpace& space,
                                  const std::vector<PolarizedPromptSet>& sets);

}  // namespace cogflow
