#include "dspear/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "dspear/errors.hpp"

namespace dspear {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KvConfig KvConfig::parse(std::string_view text, const std::string& source) {
  KvConfig cfg;
  cfg.source_ = source;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  const auto v = cfg.get("version");
  if (!v) throw ConfigError(source + ": missing 'version' line");
  if (*v != std::to_string(kVersion))
    throw ConfigError(source + ": unsupported version " + *v + " (expected " + std::to_string(kVersion) + ")");
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KvConfig::get_double(const std::string& key) const {
  const auto v = get(key);
  if (!v) throw ConfigError(source_ + ": missing key '" + key + "'");
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(source_ + ": key '" + key + "' is not a number: '" + *v + "'");
  }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KvConfig::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double d = get_double(key);
  if (d != static_cast<double>(static_cast<long>(d)))
    throw ConfigError(source_ + ": key '" + key + "' must be an integer");
  return static_cast<long>(d);
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "off") return false;
  throw ConfigError(source_ + ": key '" + key + "' is not a boolean: '" + *v + "'");
}

std::vector<std::string> KvConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void KvConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : values_) {
    if (k == "version") continue;
    bool ok = false;
    for (const auto& a : allowed) {
      if (!a.empty() && a.back() == '*' ? k.rfind(a.substr(0, a.size() - 1), 0) == 0 : k == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(source_ + ": unknown key '" + k + "'");
  }
}

std::string KvConfig::to_text() const {
  std::ostringstream os;
  os << "version = " << get_string("version", std::to_string(kVersion)) << '\n';
  for (const auto& [k, v] : values_)
    if (k != "version") os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace dspear
