#include "kvd/export.hpp"

#include "kvd/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kvd {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string csv_text(const EnergyReport& report, const std::vector<StepStats>& stats) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const auto& r : report.rows) {
    const StepStats* st = r.k >= 1 && r.k <= static_cast<int>(stats.size()) ? &stats[r.k - 1] : nullptr;
    os << r.k << ',' << g17(r.t) << ',' << g17(r.kinetic) << ',' << g17(r.elastic) << ',' << g17(r.phi) << ','
       << g17(r.gradient) << ',' << g17(r.visc_diss) << ',' << g17(r.dam_diss) << ',' << g17(r.ext_work) << ','
       << g17(r.margin) << ',' << (st ? st->newton_iters : 0) << ',' << g17(st ? st->pg_norm : 0.0) << "\n";
  }
  return os.str();
}

void export_csv(const EnergyReport& report, const std::vector<StepStats>& stats, const std::filesystem::path& path) {
  write_file(path, csv_text(report, stats));
}

void export_vtk(const State& state, const Mesh& mesh, const std::filesystem::path& path) {
  const int d = mesh.dim();
  const int nen = mesh.nodes_per_element();
  std::ostringstream os;
  os << "# vtk DataFile Version 3.0\n";
  os << "kvdamage step " << state.k << " t=" << g17(state.t) << "\n";
  os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes()) os << g17(p[0]) << ' ' << g17(p[1]) << " 0\n";
  os << "CELLS " << mesh.n_elements() << ' ' << mesh.n_elements() * (nen + 1) << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) {
    os << nen;
    for (int a = 0; a < nen; ++a) os << ' ' << mesh.element(e)[a];
    os << "\n";
  }
  os << "CELL_TYPES " << mesh.n_elements() << "\n";
  for (int e = 0; e < mesh.n_elements(); ++e) os << (d == 1 ? 3 : 5) << "\n";
  os << "POINT_DATA " << mesh.n_nodes() << "\n";
  auto vec = [&](const char* name, const Eigen::VectorXd& f) {
    os << "VECTORS " << name << " double\n";
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      for (int c = 0; c < 3; ++c) os << (c ? " " : "") << (c < d ? g17(f[n * d + c]) : "0");
      os << "\n";
    }
  };
  vec("u", state.u);
  vec("v", state.v);
  os << "SCALARS alpha double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < mesh.n_nodes(); ++n) os << g17(state.alpha[n]) << "\n";
  write_file(path, os.str());
}

}  // namespace kvd
