#include "cogflow/polarize.hpp"

#include <fstream>

#include "cogflow/digest.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/json_io.hpp"

namespace cogflow {

namespace {

constexpr std::string_view kOpen = "«";
constexpr std::string_view kClose = "»";

char pole_sign(Pole pole) { return pole == Pole::high ? '+' : '-'; }

}  // namespace

std::string format_tag(const TemplateTag& tag) {
  std::string out(kOpen);
  out += tag.dimension;
  out += ':';
  out += pole_sign(tag.pole);
  out += kClose;
  return out;
}

std::string format_template_prompt(const TemplatePrompt& prompt) {
  std::string out = prompt.base;
  if (!prompt.tags.empty()) out += ' ';
  for (const auto& tag : prompt.tags) out += format_tag(tag);
  return out;
}

std::optional<TemplatePrompt> parse_template_prompt(std::string_view prompt) {
  TemplatePrompt parsed;
  std::string_view rest = prompt;
  while (rest.ends_with(kClose)) {
    const auto open = rest.rfind(kOpen);
    if (open == std::string_view::npos) return std::nullopt;
    const auto body = rest.substr(open + kOpen.size(), rest.size() - kClose.size() - open - kOpen.size());
    const auto colon = body.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 2 != body.size()) return std::nullopt;
    const char sign = body.back();
    if (sign != '+' && sign != '-') return std::nullopt;
    parsed.tags.insert(parsed.tags.begin(),
                       TemplateTag{std::string(body.substr(0, colon)), sign == '+' ? Pole::high : Pole::low});
    rest = rest.substr(0, open);
  }
  if (!parsed.tags.empty() && rest.ends_with(' ')) rest.remove_suffix(1);
  parsed.base = std::string(rest);
  return parsed;
}

std::string TemplateBackend::polarize(std::string_view prompt, const DimensionSpec& dimension, Pole pole) {
  ++calls_;
  auto parsed = parse_template_prompt(prompt);
  if (!parsed) {
    throw BackendError("template backend cannot parse tags in prompt '" + std::string(prompt) + "'", false);
  }
  std::erase_if(parsed->tags, [&](const TemplateTag& t) { return t.dimension == dimension.name; });
  parsed->tags.push_back({dimension.name, pole});
  return format_template_prompt(*parsed);
}

std::string cache_digest(std::string_view backend_id, std::string_view prompt,
                         std::string_view dimension_name, Pole pole) {
  // Length-prefixed fields keep the encoding injective.
  std::string buf;
  for (std::string_view field : {backend_id, prompt, dimension_name}) {
    buf += std::to_string(field.size());
    buf += ':';
    buf += field;
  }
  buf += pole == Pole::high ? "1" : "0";
  return sha256_hex(buf);
}

PolarizationCache::PolarizationCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;  // a missing file is an empty cache
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      entries_[j.at("digest").get<std::string>()] = j.at("output").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError("corrupt cache record at " + path_->string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::optional<std::string> PolarizationCache::lookup(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(digest); it != entries_.end()) return it->second;
  return std::nullopt;
}

std::size_t PolarizationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void PolarizationCache::append_record(const std::string& digest, const std::string& output) {
  if (!path_) return;
  if (path_->has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_->parent_path(), ec);
  }
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  out << nlohmann::json{{"digest", digest}, {"output", output}}.dump() << '\n';
  out.flush();
  if (!out) throw IoError("cannot append to polarization cache " + path_->string());
}

std::string PolarizationCache::get_or_fetch(const std::string& digest, const std::function<std::string()>& fetch) {
  std::promise<std::string> promise;
  {
    std::unique_lock lock(mutex_);
    if (auto it = entries_.find(digest); it != entries_.end()) return it->second;
    if (auto it = in_flight_.find(digest); it != in_flight_.end()) {
      auto pending = it->second;
      lock.unlock();
      return pending.get();
    }
    in_flight_.emplace(digest, promise.get_future().share());
  }

  try {
    ++fetches_;
    std::string output = fetch();
    {
      std::lock_guard lock(mutex_);
      in_flight_.erase(digest);
      entries_.emplace(digest, output);
      append_record(digest, output);
    }
    promise.set_value(output);
    return output;
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      in_flight_.erase(digest);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

std::string polarize_once(PolarizerBackend& backend, std::string_view prompt, const DimensionSpec& dimension,
                          Pole pole, PolarizationCache& cache) {
  if (prompt.empty()) throw ContractError("cannot polarize an empty prompt");
  const auto key = cache_digest(backend.backend_id(), prompt, dimension.name, pole);
  return cache.get_or_fetch(key, [&] { return backend.polarize(prompt, dimension, pole); });
}

std::vector<std::vector<std::size_t>> build_chain_orders(std::size_t n) {
  if (n == 0 || n > CognitiveSpace::kMaxDimensions) {
    throw ContractError("chain orders need 1 <= n <= " + std::to_string(CognitiveSpace::kMaxDimensions));
  }
  std::vector<std::vector<std::size_t>> orders(n);
  for (std::size_t j = 0; j < n; ++j) {
    orders[j].reserve(n);
    for (std::size_t p = 0; p < n; ++p) orders[j].push_back((j + p) % n + 1);
  }
  return orders;
}

std::vector<std::size_t> PromptChain::order() const {
  std::vector<std::size_t> out;
  out.reserve(applications.size());
  for (const auto& step : applications) out.push_back(step.dimension);
  return out;
}

PolarizedPromptSet build_prompt_set(PolarizerBackend& backend, std::string_view prompt,
                                    const CognitiveAnchor& anchor, const CognitiveSpace& space,
                                    PolarizationCache& cache) {
  if (anchor.size() != space.size()) {
    throw ContractError("anchor has " + std::to_string(anchor.size()) + " bits but the space has " +
                        std::to_string(space.size()) + " dimensions");
  }
  PolarizedPromptSet set{anchor, std::string(prompt), {}};
  const auto orders = build_chain_orders(space.size());
  set.chains.reserve(orders.size());
  for (std::size_t j = 0; j < orders.size(); ++j) {
    PromptChain chain;
    std::string current(prompt);
    for (std::size_t pos = 0; pos < orders[j].size(); ++pos) {
      const std::size_t dim = orders[j][pos];
      const Pole pole = pole_of(anchor.bit(dim - 1));
      try {
        current = polarize_once(backend, current, space.dimension(dim - 1), pole, cache);
      } catch (const BackendError& e) {
        throw BackendError("anchor " + std::to_string(anchor.index()) + ", chain " + std::to_string(j + 1) +
                               ", position " + std::to_string(pos + 1) + ": " + e.what(),
                           e.retriable(), e.diagnostics());
      }
      chain.applications.push_back({dim, pole});
      chain.intermediates.push_back(current);
    }
    set.chains.push_back(std::move(chain));
  }
  return set;
}

std::vector<PolarizedPromptSet> build_all_sets(PolarizerBackend& backend, std::string_view prompt,
                                               const CognitiveSpace& space, PolarizationCache& cache) {
  std::vector<PolarizedPromptSet> sets;
  sets.reserve(space.anchor_count());
  for (const auto& anchor : enumerate_anchors(space)) {
    sets.push_back(build_prompt_set(backend, prompt, anchor, space, cache));
  }
  return sets;
}

nlohmann::json export_prompt_sets(std::string_view base_prompt, const CognitiveSpace& space,
                                  const std::vector<PolarizedPromptSet>& sets) {
  nlohmann::json out_sets = nlohmann::json::array();
  for (const auto& set : sets) {
    nlohmann::json chains = nlohmann::json::array();
    for (const auto& chain : set.chains) chains.push_back({{"order", chain.order()}, {"result", chain.result()}});
    std::vector<int> bits(set.anchor.bits().begin(), set.anchor.bits().end());
    out_sets.push_back({{"anchor_bits", bits}, {"chains", std::move(chains)}});
  }
  return {{"base_prompt", base_prompt}, {"space", space_to_json(space)}, {"sets", std::move(out_sets)}};
}

}  // namespace cogflow
