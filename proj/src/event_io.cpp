#include <json.hpp>
#include <sstream>

#include "dspear/errors.hpp"
#include "dspear/pipelines.hpp"

namespace dspear::pipelines {

namespace {

constexpr std::string_view kKindNames[] = {"silence", "ambient", "gender", "speaker_count", "emotion", "speaker"};
constexpr std::string_view kProvenanceNames[] = {"classified", "propagated", "gated_out"};

}  // namespace

std::string_view to_string(EventKind k) { return kKindNames[static_cast<int>(k)]; }
std::string_view to_string(Provenance p) { return kProvenanceNames[static_cast<int>(p)]; }

EventKind event_kind_from_string(std::string_view s) {
  for (int i = 0; i < 6; ++i)
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  throw DataError("unknown event kind '" + std::string(s) + "'");
}

Provenance provenance_from_string(std::string_view s) {
  for (int i = 0; i < 3; ++i)
    if (kProvenanceNames[i] == s) return static_cast<Provenance>(i);
  throw DataError("unknown provenance '" + std::string(s) + "'");
}

std::string events_to_jsonl(std::span<const InferenceEvent> events) {
  std::string out;
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["t_start"] = e.t_start;
    j["t_end"] = e.t_end;
    j["kind"] = to_string(e.kind);
    j["label"] = e.label;
    j["detail"] = e.detail;
    j["count"] = e.count;
    j["provenance"] = to_string(e.provenance);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<InferenceEvent> events_from_jsonl(std::string_view text) {
  std::vector<InferenceEvent> events;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      InferenceEvent e;
      e.t_start = j.at("t_start").get<double>();
      e.t_end = j.at("t_end").get<double>();
      e.kind = event_kind_from_string(j.at("kind").get<std::string>());
      e.label = j.value("label", std::string{});
      e.detail = j.value("detail", std::string{});
      e.count = j.value("count", 0);
      e.provenance = provenance_from_string(j.value("provenance", std::string("classified")));
      if (e.t_end < e.t_start) throw DataError("event ends before it starts");
      events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("events line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const DataError& ex) {
      throw DataError("events line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return events;
}

}  // namespace dspear::pipelines
