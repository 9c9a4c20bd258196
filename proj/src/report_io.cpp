#include "lgeom/report_io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lgeom {

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorKind::InvalidConfig, "cannot open " + file.string() + " for writing");
  os << text;
}

void write_json_file(const std::filesystem::path& file, const nlohmann::json& j) {
  write_text_file(file, j.dump(2) + "\n");
}

std::string format_real(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

void write_eigenvalues_csv(std::ostream& os, const IndexSpectrum& sp) {
  os << "k,eigenvalue,relative\n";
  for (std::size_t k = 0; k < sp.eigenvalues.size(); ++k)
    os << k << ',' << format_real(sp.eigenvalues[k]) << ',' << format_real(sp.eigenvalues[k] / sp.norm) << '\n';
}

nlohmann::json chart_point_json(const ChartPoint& x) {
  return {{"coords", std::vector<double>(x.coords.data(), x.coords.data() + x.coords.size())},
          {"chart", x.chart_id}};
}

nlohmann::json stats_json(const IntegratorStats& st) {
  return {{"accepted", st.accepted},
          {"rejected", st.rejected},
          {"rhs_evals", st.rhs_evals},
          {"max_error_ratio", st.max_error_ratio}};
}

}  // namespace lgeom
