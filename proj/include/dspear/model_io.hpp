#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dspear/decision_tree.hpp"
#include "dspear/gmm.hpp"

namespace dspear::models {

// Model file: "DSPEARM1", uint32 LE header length, JSON header, float32 LE payload.
std::vector<std::uint8_t> serialize(const GmmModel& model);
std::vector<std::uint8_t> serialize(const DecisionTree& tree);

using AnyModel = std::variant<GmmModel, DecisionTree>;

// Throws ModelFormatError on corrupt input.
AnyModel deserialize(std::span<const std::uint8_t> bytes);
GmmModel deserialize_gmm(std::span<const std::uint8_t> bytes);
DecisionTree deserialize_tree(std::span<const std::uint8_t> bytes);

std::size_t serialized_size(const GmmModel& model);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

enum class Placement { dsp, cpu };
std::string_view to_string(Placement p);
Placement placement_from_string(std::string_view s);

// Fixed per-model code-size costs used for budget checks, independent of the
// serialized sizes.
struct CodeBudget {
  std::size_t code_limit_bytes = 2u * 1024 * 1024;
  std::size_t system_code_bytes = 650u * 1024;
  std::size_t emotion_model_bytes = 260u * 1024;
  std::size_t ambient_model_bytes = 87u * 1024;
};

// Entry names follow "<pipeline>/<model>", e.g. "ambient/music",
// "emotion/narrow/panic", "emotion/gate/neutral", "speaker/background",
// "speaker/id/alice" and "speech_filter".
struct BundleEntry {
  AnyModel model;
  Placement placement = Placement::cpu;
};

class ModelBundle {
 public:
  void add(const std::string& name, AnyModel model, Placement placement);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  const GmmModel& gmm(const std::string& name) const;
  const DecisionTree& tree(const std::string& name) const;
  Placement placement(const std::string& name) const;
  // Names starting with `prefix`, in lexicographic order.
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  const std::map<std::string, BundleEntry>& entries() const { return entries_; }

  std::size_t model_cost_bytes(const std::string& name, const CodeBudget& budget = {}) const;
  std::size_t dsp_code_bytes(const CodeBudget& budget = {}) const;
  // Throws ConfigError when the DSP-placed models do not fit.
  void check_budget(const CodeBudget& budget = {}) const;

  // Directory with manifest.json and one .dspm file per entry.
  void save(const std::filesystem::path& dir) const;
  static ModelBundle load(const std::filesystem::path& dir);

 private:
  std::map<std::string, BundleEntry> entries_;
};

}  // namespace dspear::models
