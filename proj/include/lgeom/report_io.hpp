#pragma once

// File output helpers: pretty JSON, eigenvalue CSV, sweep rows.

#include <filesystem>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "lgeom/lindex.hpp"

namespace lgeom {

/// Creates parent directories as needed.
void write_json_file(const std::filesystem::path& file, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& file, const std::string& text);

/// Header "k,eigenvalue,relative".
void write_eigenvalues_csv(std::ostream& os, const IndexSpectrum& sp);

nlohmann::json chart_point_json(const ChartPoint& x);
nlohmann::json stats_json(const IntegratorStats& st);

/// Round-trip formatting for CSV cells.
std::string format_real(double x);

}  // namespace lgeom
