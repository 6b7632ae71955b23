#include "dspear/model_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "dspear/errors.hpp"

namespace dspear::models {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'D', 'S', 'P', 'E', 'A', 'R', 'M', '1'};

void put_f32(std::vector<std::uint8_t>& out, double v) {
  const auto f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

double get_f32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::vector<std::uint8_t> frame_file(const json& header, const std::vector<std::uint8_t>& payload) {
  const std::string h = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  const auto len = static_cast<std::uint32_t>(h.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((len >> (8 * i)) & 0xff));
  out.insert(out.end(), h.begin(), h.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct Parsed {
  json header;
  std::span<const std::uint8_t> payload;
};

Parsed unframe(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw ModelFormatError("model file: bad magic");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  if (12 + static_cast<std::size_t>(len) > bytes.size()) throw ModelFormatError("model file: header overruns file");
  Parsed p;
  try {
    p.header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model file: bad header: ") + e.what());
  }
  p.payload = bytes.subspan(12 + len);
  return p;
}

GmmModel gmm_from(const Parsed& p) {
  GmmModel m;
  std::size_t k = 0, d = 0;
  try {
    m.label = p.header.at("label").get<std::string>();
    m.gender = p.header.value("gender", std::string{});
    k = p.header.at("n_components").get<std::size_t>();
    d = p.header.at("dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model file: incomplete GMM header: ") + e.what());
  }
  const std::size_t expect = 4 * k * (1 + 2 * d);
  if (k == 0 || d == 0 || p.payload.size() != expect)
    throw ModelFormatError("model file: GMM payload has " + std::to_string(p.payload.size()) + " bytes, expected " +
                           std::to_string(expect));
  std::size_t at = 0;
  m.weights.resize(k);
  for (auto& w : m.weights) {
    w = get_f32(p.payload, at);
    at += 4;
  }
  m.means = Matrix(k, d);
  m.variances = Matrix(k, d);
  for (auto& v : m.means.data()) {
    v = get_f32(p.payload, at);
    at += 4;
  }
  for (auto& v : m.variances.data()) {
    v = get_f32(p.payload, at);
    at += 4;
  }
  m.validate();
  return m;
}

DecisionTree tree_from(const Parsed& p) {
  DecisionTree t;
  try {
    t.class_names = p.header.at("classes").get<std::vector<std::string>>();
    t.feature_names = p.header.value("features", std::vector<std::string>{});
    t.n_features = p.header.at("n_features").get<std::size_t>();
    for (const auto& jn : p.header.at("nodes")) {
      TreeNode n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.cls = jn.at("c").get<int>();
      n.confidence = jn.at("p").get<double>();
      n.samples = jn.at("n").get<std::size_t>();
      t.nodes.push_back(n);
    }
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("model file: incomplete tree header: ") + e.what());
  }
  if (!p.payload.empty()) throw ModelFormatError("model file: unexpected tree payload");
  t.validate();
  return t;
}

}  // namespace

std::vector<std::uint8_t> serialize(const GmmModel& model) {
  model.validate();
  json h = {{"type", "gmm"},
            {"label", model.label},
            {"n_components", model.n_components()},
            {"dim", model.dim()}};
  if (!model.gender.empty()) h["gender"] = model.gender;
  std::vector<std::uint8_t> payload;
  payload.reserve(4 * model.n_components() * (1 + 2 * model.dim()));
  for (double w : model.weights) put_f32(payload, w);
  for (double v : model.means.data()) put_f32(payload, v);
  for (double v : model.variances.data()) put_f32(payload, v);
  return frame_file(h, payload);
}

std::vector<std::uint8_t> serialize(const DecisionTree& tree) {
  tree.validate();
  json nodes = json::array();
  for (const auto& n : tree.nodes)
    nodes.push_back({{"f", n.feature},
                     {"t", n.threshold},
                     {"l", n.left},
                     {"r", n.right},
                     {"c", n.cls},
                     {"p", n.confidence},
                     {"n", n.samples}});
  json h = {{"type", "tree"},
            {"classes", tree.class_names},
            {"features", tree.feature_names},
            {"n_features", tree.n_features},
            {"nodes", nodes}};
  return frame_file(h, {});
}

AnyModel deserialize(std::span<const std::uint8_t> bytes) {
  const auto p = unframe(bytes);
  const std::string type = p.header.value("type", std::string{});
  if (type == "gmm") return gmm_from(p);
  if (type == "tree") return tree_from(p);
  throw ModelFormatError("model file: unknown model type '" + type + "'");
}

GmmModel deserialize_gmm(std::span<const std::uint8_t> bytes) {
  auto m = deserialize(bytes);
  if (auto* g = std::get_if<GmmModel>(&m)) return std::move(*g);
  throw ModelFormatError("model file holds a tree, expected a GMM");
}

DecisionTree deserialize_tree(std::span<const std::uint8_t> bytes) {
  auto m = deserialize(bytes);
  if (auto* t = std::get_if<DecisionTree>(&m)) return std::move(*t);
  throw ModelFormatError("model file holds a GMM, expected a tree");
}

std::size_t serialized_size(const GmmModel& model) { return serialize(model).size(); }

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  const auto bytes = std::visit([](const auto& m) { return serialize(m); }, model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const ModelFormatError& e) {
    throw ModelFormatError(path.string() + ": " + e.what());
  }
}

std::string_view to_string(Placement p) { return p == Placement::dsp ? "dsp" : "cpu"; }

Placement placement_from_string(std::string_view s) {
  if (s == "dsp") return Placement::dsp;
  if (s == "cpu") return Placement::cpu;
  throw ConfigError("unknown placement '" + std::string(s) + "'");
}

void ModelBundle::add(const std::string& name, AnyModel model, Placement placement) {
  entries_[name] = BundleEntry{std::move(model), placement};
}

const GmmModel& ModelBundle::gmm(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("model bundle has no entry '" + name + "'");
  if (const auto* g = std::get_if<GmmModel>(&it->second.model)) return *g;
  throw ConfigError("model bundle entry '" + name + "' is not a GMM");
}

const DecisionTree& ModelBundle::tree(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("model bundle has no entry '" + name + "'");
  if (const auto* t = std::get_if<DecisionTree>(&it->second.model)) return *t;
  throw ConfigError("model bundle entry '" + name + "' is not a decision tree");
}

Placement ModelBundle::placement(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("model bundle has no entry '" + name + "'");
  return it->second.placement;
}

std::vector<std::string> ModelBundle::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.rfind(prefix, 0) == 0; ++it)
    out.push_back(it->first);
  return out;
}

std::size_t ModelBundle::model_cost_bytes(const std::string& name, const CodeBudget& budget) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("model bundle has no entry '" + name + "'");
  if (name.rfind("emotion/", 0) == 0) return budget.emotion_model_bytes;
  if (name.rfind("ambient/", 0) == 0) return budget.ambient_model_bytes;
  return std::visit([](const auto& m) { return serialize(m).size(); }, it->second.model);
}

std::size_t ModelBundle::dsp_code_bytes(const CodeBudget& budget) const {
  std::size_t total = budget.system_code_bytes;
  for (const auto& [name, e] : entries_)
    if (e.placement == Placement::dsp) total += model_cost_bytes(name, budget);
  return total;
}

void ModelBundle::check_budget(const CodeBudget& budget) const {
  const auto used = dsp_code_bytes(budget);
  if (used > budget.code_limit_bytes)
    throw ConfigError("DSP-placed models need " + std::to_string(used) + " bytes of code, limit is " +
                      std::to_string(budget.code_limit_bytes));
}

void ModelBundle::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json manifest = {{"version", 1}, {"entries", json::array()}};
  for (const auto& [name, e] : entries_) {
    std::string file = name;
    for (auto& ch : file)
      if (ch == '/') ch = '.';
    file += ".dspm";
    save_model(dir / file, e.model);
    manifest["entries"].push_back({{"name", name}, {"file", file}, {"placement", to_string(e.placement)}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write bundle manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("no model bundle at " + dir.string() + " (manifest.json missing)");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw ModelFormatError("bundle manifest: " + std::string(e.what()));
  }
  ModelBundle b;
  try {
    for (const auto& e : manifest.at("entries"))
      b.add(e.at("name").get<std::string>(), load_model(dir / e.at("file").get<std::string>()),
            placement_from_string(e.at("placement").get<std::string>()));
  } catch (const json::exception& e) {
    throw ModelFormatError("bundle manifest: " + std::string(e.what()));
  }
  return b;
}

}  // namespace dspear::models
