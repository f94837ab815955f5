#include "ink/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

nlohmann::ordered_json optional_real(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  // Shortest round-trip representation never needs more than 17 significant digits.
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
  out << "t,Q_t,deff_exact,deff_tilde,spectral_gap,psi_gap,lower_ok,upper_ok,risk_exact,"
         "risk_approx,risk_ratio_bound\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : rows) {
    if (!r.evaluated) {
      out << r.t << ',' << r.q << ",," << format_real(r.deff_tilde) << ",,,,,,,\n";
      continue;
    }
    out << r.t << ',' << r.q << ',' << format_real(r.deff_exact) << ','
        << format_real(r.deff_tilde) << ',' << format_real(r.spectral_gap) << ','
        << format_real(r.psi_gap) << ',' << (r.lower_ok ? "true" : "false") << ','
        << (r.upper_ok ? "true" : "false") << ',' << opt(r.risk_exact) << ','
        << opt(r.risk_approx) << ',' << format_real(r.risk_ratio_bound) << '\n';
  }
}

nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    if (!r.evaluated) {
      out.push_back({{"t", r.t}, {"Q_t", r.q}, {"deff_tilde", r.deff_tilde}});
      continue;
    }
    out.push_back({{"t", r.t},
                   {"Q_t", r.q},
                   {"deff_exact", r.deff_exact},
                   {"deff_tilde", r.deff_tilde},
                   {"spectral_gap", r.spectral_gap},
                   {"psi_gap", r.psi_gap},
                   {"lower_ok", r.lower_ok},
                   {"upper_ok", r.upper_ok},
                   {"risk_exact", optional_real(r.risk_exact)},
                   {"risk_approx", optional_real(r.risk_approx)},
                   {"risk_ratio_bound", optional_real(r.risk_ratio_bound)}});
  }
  return out;
}

nlohmann::ordered_json checkpoints_json(const nlohmann::ordered_json& config_echo,
                                const std::vector<RunCheckpoint>& checkpoints) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& cp : checkpoints) {
    nlohmann::ordered_json item = {{"t", cp.t},
                           {"Q_t", cp.q},
                           {"deff_tilde", cp.deff_tilde},
                           {"dictionary_indices", cp.indices},
                           {"weights", cp.weights}};
    if (!cp.b.empty()) item["b"] = cp.b;
    list.push_back(std::move(item));
  }
  return {{"spec_version", kSpecVersion}, {"config_echo", config_echo}, {"checkpoints", list}};
}

std::vector<RunCheckpoint> checkpoints_from_json(const nlohmann::ordered_json& doc) {
  std::vector<RunCheckpoint> out;
  try {
    if (!doc.contains("spec_version")) throw InputError("checkpoint file has no spec_version");
    for (const auto& item : doc.at("checkpoints")) {
      RunCheckpoint cp;
      cp.t = item.at("t").get<std::size_t>();
      cp.q = item.at("Q_t").get<std::size_t>();
      cp.deff_tilde = item.at("deff_tilde").is_null() ? 0.0 : item.at("deff_tilde").get<double>();
      cp.indices = item.at("dictionary_indices").get<std::vector<std::size_t>>();
      cp.weights = item.at("weights").get<std::vector<double>>();
      if (item.contains("b")) cp.b = item.at("b").get<std::vector<std::uint64_t>>();
      if (cp.indices.size() != cp.weights.size())
        throw InputError("checkpoint at t=" + std::to_string(cp.t) + ": indices and weights differ in length");
      out.push_back(std::move(cp));
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw InputError(std::string("malformed checkpoint file: ") + e.what());
  }
  return out;
}

nlohmann::ordered_json timing_json(const std::vector<RunCheckpoint>& checkpoints) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& cp : checkpoints)
    list.push_back({{"t", cp.t}, {"elapsed_seconds", cp.elapsed_seconds}});
  return {{"spec_version", kSpecVersion}, {"timing", list}};
}

nlohmann::ordered_json conditions_json(const nlohmann::ordered_json& config_echo,
                               const std::vector<ConditionReport>& reports) {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.holds();
    list.push_back({{"t", r.step},
                    {"lower_psd_ok", r.lower_psd_ok},
                    {"upper_psd_ok", r.upper_psd_ok},
                    {"spectral_gap", r.spectral_gap},
                    {"psi_gap", optional_real(r.psi_gap)}});
  }
  return {{"spec_version", kSpecVersion},
          {"config_echo", config_echo},
          {"all_conditions_hold", all},
          {"conditions", list}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

nlohmann::ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace ink
