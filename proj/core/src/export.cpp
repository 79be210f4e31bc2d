#include "viflow/export.hpp"

#include <cstdio>
#include <fstream>

namespace viflow {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_vtk_fields(const std::string& path, const Mesh& mesh,
                      const std::vector<Vec2>& vel_vertex, const VectorXd& p_vertex,
                      std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  char head[64];
  std::snprintf(head, sizeof head, "viflow fields config-hash=%016llx",
                static_cast<unsigned long long>(config_hash));
  out << "# vtk DataFile Version 3.0\n" << head << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";

  const size_t nv = mesh.nodes.size();
  out << "POINTS " << nv << " double\n";
  for (const auto& p : mesh.nodes) out << num(p.x()) << " " << num(p.y()) << " 0\n";

  const size_t nt = mesh.triangles.size(), nb = mesh.boundary.size();
  out << "CELLS " << nt + nb << " " << 4 * nt + 3 * nb << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  for (const auto& e : mesh.boundary) out << "2 " << e.a << " " << e.b << "\n";
  out << "CELL_TYPES " << nt + nb << "\n";
  for (size_t i = 0; i < nt; ++i) out << "5\n";
  for (size_t i = 0; i < nb; ++i) out << "3\n";

  out << "CELL_DATA " << nt + nb << "\nSCALARS patch_tag int 1\nLOOKUP_TABLE default\n";
  for (size_t i = 0; i < nt; ++i) out << "0\n";
  for (const auto& e : mesh.boundary) out << e.tag << "\n";

  out << "POINT_DATA " << nv << "\nVECTORS velocity double\n";
  for (const auto& v : vel_vertex) out << num(v.x()) << " " << num(v.y()) << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (size_t i = 0; i < nv; ++i) out << num(p_vertex[static_cast<int>(i)]) << "\n";
}

void write_multipliers_csv(const std::string& path, const Multipliers& m, const FemSpace& space,
                           std::uint64_t config_hash) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  char head[48];
  std::snprintf(head, sizeof head, "# config-hash=%016llx\n",
                static_cast<unsigned long long>(config_hash));
  out << head;
  out << "family,tag,node,x,y,weight,trace,sigma,g\n";
  auto dump = [&](const char* family, const std::vector<Multipliers::Entry>& list) {
    for (const auto& e : list) {
      const Vec2& p = space.nodes[e.node];
      out << family << "," << e.tag << "," << e.node << "," << num(p.x()) << "," << num(p.y())
          << "," << num(e.weight) << "," << num(e.trace) << "," << num(e.value) << ","
          << num(e.g) << "\n";
    }
  };
  dump("sigma_tau", m.sigma_tau);
  dump("sigma_n", m.sigma_n);
  dump("sigma_plus", m.sigma_plus);
  dump("sigma_minus", m.sigma_minus);
}

}  // namespace viflow
