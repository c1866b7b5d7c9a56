#pragma once

#include "kvd/integrator.hpp"
#include "kvd/mesh.hpp"
#include "kvd/potential.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace kvd {

/// Header of the energy ledger CSV.
inline constexpr const char* kCsvHeader =
    "k,t,kinetic,elastic,phi,gradient,visc_diss,dam_diss,ext_work,ineq_margin,newton_iters,pg_norm";

/// One row per ledger entry; stats[k-1] belongs to step k. Throws IoError.
void export_csv(const EnergyReport& report, const std::vector<StepStats>& stats, const std::filesystem::path& path);
std::string csv_text(const EnergyReport& report, const std::vector<StepStats>& stats);

/// Legacy ASCII VTK unstructured grid with point data u, v (3-vectors) and
/// alpha, at 17 significant digits. Throws IoError.
void export_vtk(const State& state, const Mesh& mesh, const std::filesystem::path& path);

}  // namespace kvd
