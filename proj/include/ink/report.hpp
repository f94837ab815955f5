#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ink/evaluation.hpp"
#include "ink/pipeline.hpp"

namespace ink {

inline constexpr const char* kSpecVersion = "1.0";

// Locale-independent shortest-form real with at most 17 significant digits.
std::string format_real(double value);

void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out);
nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows);

// Deterministic checkpoint document; wall-clock timings are kept out of it.
nlohmann::ordered_json checkpoints_json(const nlohmann::ordered_json& config_echo,
                                const std::vector<RunCheckpoint>& checkpoints);
std::vector<RunCheckpoint> checkpoints_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json timing_json(const std::vector<RunCheckpoint>& checkpoints);
nlohmann::ordered_json conditions_json(const nlohmann::ordered_json& config_echo,
                               const std::vector<ConditionReport>& reports);

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);
nlohmann::ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace ink
