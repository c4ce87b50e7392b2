#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "advbench/dataset_io.hpp"
#include "advbench/errors.hpp"
#include "advbench/harness.hpp"

using nlohmann::json;

namespace advbench {

namespace {

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

json usage_to_json(const UsageReport& u) {
  return {{"images", u.images},         {"avg_backward", u.avg_backward}, {"avg_forward", u.avg_forward},
          {"max_backward", u.max_backward}, {"max_forward", u.max_forward},   {"total_backward", u.total_backward},
          {"total_forward", u.total_forward}, {"backward", u.backward},       {"forward", u.forward}};
}

UsageReport usage_from_json(const json& j) {
  UsageReport u;
  u.images = j.at("images").get<std::size_t>();
  u.avg_backward = j.at("avg_backward").get<double>();
  u.avg_forward = j.at("avg_forward").get<double>();
  u.max_backward = j.at("max_backward").get<std::uint64_t>();
  u.max_forward = j.at("max_forward").get<std::uint64_t>();
  u.total_backward = j.at("total_backward").get<std::uint64_t>();
  u.total_forward = j.at("total_forward").get<std::uint64_t>();
  u.backward = j.at("backward").get<std::vector<std::uint64_t>>();
  u.forward = j.at("forward").get<std::vector<std::uint64_t>>();
  return u;
}

json phase_to_json(const PhaseRecord& p) {
  return {{"name", p.name},         {"backward_allocation", p.backward_allocation},
          {"forward_allocation", p.forward_allocation}, {"moved_backward", p.moved_backward},
          {"active", p.active},     {"succeeded", p.succeeded},
          {"filtered", p.filtered}};
}

PhaseRecord phase_from_json(const json& j) {
  PhaseRecord p;
  p.name = j.at("name").get<std::string>();
  p.backward_allocation = j.at("backward_allocation").get<std::uint64_t>();
  p.forward_allocation = j.at("forward_allocation").get<std::uint64_t>();
  p.moved_backward = j.at("moved_backward").get<std::uint64_t>();
  p.active = j.at("active").get<std::size_t>();
  p.succeeded = j.at("succeeded").get<std::size_t>();
  p.filtered = j.at("filtered").get<std::size_t>();
  return p;
}

}  // namespace

json report_to_json(const ScoreReport& r) {
  json models = json::array();
  for (const auto& m : r.models) {
    json phases = json::array();
    for (const auto& p : m.phases) phases.push_back(phase_to_json(p));
    models.push_back({{"id", m.id},
                      {"samples", m.samples},
                      {"misclassified", m.misclassified},
                      {"rate", m.rate},
                      {"percent", m.percent},
                      {"succeeded", m.succeeded},
                      {"filtered", m.filtered},
                      {"exhausted", m.exhausted},
                      {"usage", usage_to_json(m.usage)},
                      {"phases", phases},
                      {"notes", m.notes},
                      {"adversarial_file", m.adversarial_file},
                      {"flags_file", m.flags_file}});
  }
  return {{"group", r.group},
          {"attack", r.attack},
          {"pipeline", r.pipeline},
          {"config", r.config},
          {"suite", r.suite},
          {"dataset", r.dataset},
          {"epsilon_text", r.epsilon_text},
          {"epsilon", r.epsilon},
          {"quota", {{"backward", r.quota.backward}, {"forward", r.quota.forward}}},
          {"strict", r.strict},
          {"seed", r.seed},
          {"models", models},
          {"aggregate", r.aggregate},
          {"aggregate_percent", r.aggregate_percent},
          {"wall_clock_seconds", r.wall_clock_seconds}};
}

ScoreReport report_from_json(const json& j) {
  ScoreReport r;
  try {
    r.group = j.at("group").get<std::string>();
    r.attack = j.at("attack").get<std::string>();
    r.pipeline = j.at("pipeline").get<std::string>();
    r.config = j.at("config");
    r.suite = j.at("suite").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.epsilon_text = j.at("epsilon_text").get<std::string>();
    r.epsilon = j.at("epsilon").get<double>();
    r.quota.backward = j.at("quota").at("backward").get<std::uint64_t>();
    r.quota.forward = j.at("quota").at("forward").get<std::uint64_t>();
    r.strict = j.at("strict").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& mj : j.at("models")) {
      ModelScore m;
      m.id = mj.at("id").get<std::string>();
      m.samples = mj.at("samples").get<std::size_t>();
      m.misclassified = mj.at("misclassified").get<std::size_t>();
      m.rate = mj.at("rate").get<double>();
      m.percent = mj.at("percent").get<double>();
      m.succeeded = mj.at("succeeded").get<std::size_t>();
      m.filtered = mj.at("filtered").get<std::size_t>();
      m.exhausted = mj.at("exhausted").get<std::size_t>();
      m.usage = usage_from_json(mj.at("usage"));
      for (const auto& p : mj.at("phases")) m.phases.push_back(phase_from_json(p));
      m.notes = mj.at("notes").get<std::vector<std::string>>();
      m.adversarial_file = mj.at("adversarial_file").get<std::string>();
      m.flags_file = mj.at("flags_file").get<std::string>();
      r.models.push_back(std::move(m));
    }
    r.aggregate = j.at("aggregate").get<double>();
    r.aggregate_percent = j.at("aggregate_percent").get<double>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string report_to_text(const ScoreReport& r, ReportFormat format) {
  if (r.models.empty()) throw ConfigError("report has no models");
  if (format == ReportFormat::structured_json) return report_to_json(r).dump(2) + "\n";
  std::ostringstream os;
  os << "attack: " << r.attack << " (" << r.pipeline << ")  group: " << r.group << "  epsilon: " << r.epsilon_text
     << "\n";
  std::size_t width = 5;
  for (const auto& m : r.models) width = std::max(width, m.id.size());
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  os << pad("model", width) << "  misclassified%  avg_backward  avg_forward\n";
  for (const auto& m : r.models) {
    os << pad(m.id, width) << "  " << pad(fixed3(m.percent), 14) << "  " << pad(fixed3(m.usage.avg_backward), 12)
       << "  " << fixed3(m.usage.avg_forward) << "\n";
  }
  os << pad("score", width) << "  " << fixed3(r.aggregate_percent) << "\n";
  return os.str();
}

void emit_report(const ScoreReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, report_to_text(report, format));
}

ScoreReport read_report(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

std::string render_leaderboard(std::span<const ScoreReport> reports) {
  std::vector<std::string> groups, attacks;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const auto& r : reports) {
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) groups.push_back(r.group);
    if (std::find(attacks.begin(), attacks.end(), r.attack) == attacks.end()) attacks.push_back(r.attack);
    cell[{r.attack, r.group}] = r.aggregate_percent;
  }
  std::vector<std::pair<std::string, double>> rows;
  for (const auto& a : attacks) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
      if (auto it = cell.find({a, g}); it != cell.end()) {
        sum += it->second;
        ++n;
      }
    }
    rows.emplace_back(a, n ? sum / n : 0.0);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.second > y.second; });

  std::size_t width = 6;
  for (const auto& a : attacks) width = std::max(width, a.size());
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  std::ostringstream os;
  os << pad("attack", width);
  for (const auto& g : groups) os << "  " << pad(g, std::max<std::size_t>(g.size(), 8));
  os << "  mean\n";
  for (const auto& [a, mean] : rows) {
    os << pad(a, width);
    for (const auto& g : groups) {
      auto it = cell.find({a, g});
      os << "  " << pad(it == cell.end() ? "-" : fixed3(it->second), std::max<std::size_t>(g.size(), 8));
    }
    os << "  " << fixed3(mean) << "\n";
  }
  return os.str();
}

}  // namespace advbench
