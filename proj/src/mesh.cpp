#include "kvd/mesh.hpp"

#include "kvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace kvd {

int boundary_tag(const std::string& name) {
  static const std::map<std::string, int> names{{"left", kLeft}, {"right", kRight}, {"bottom", kBottom}, {"top", kTop}};
  if (auto it = names.find(name); it != names.end()) return it->second;
  try {
    std::size_t pos = 0;
    const int tag = std::stoi(name, &pos);
    if (pos == name.size()) return tag;
  } catch (const std::exception&) {
  }
  throw BadSpec("unknown boundary tag '" + name + "'");
}

Mesh::Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements, std::vector<Facet> facets)
    : dim_(dim), nodes_(std::move(nodes)), elements_(std::move(elements)), facets_(std::move(facets)) {
  if (dim_ != 1 && dim_ != 2) throw BadSpec("mesh dimension must be 1 or 2");
  const int nen = nodes_per_element();
  measure_.resize(elements_.size());
  grads_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    auto& el = elements_[e];
    for (int a = 0; a < nen; ++a)
      if (el[a] < 0 || el[a] >= n_nodes()) throw FileFormat("element " + std::to_string(e) + " references a missing node");
    if (dim_ == 1) {
      if (nodes_[el[1]][0] < nodes_[el[0]][0]) std::swap(el[0], el[1]);
      const double h = nodes_[el[1]][0] - nodes_[el[0]][0];
      if (!(h > 0.0)) throw BadSpec("degenerate segment " + std::to_string(e));
      measure_[e] = h;
      Eigen::MatrixXd g(1, 2);
      g << -1.0 / h, 1.0 / h;
      grads_[e] = g;
    } else {
      auto area2 = [&] {
        const auto& p0 = nodes_[el[0]];
        const auto& p1 = nodes_[el[1]];
        const auto& p2 = nodes_[el[2]];
        return (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
      };
      double a2 = area2();
      if (a2 < 0.0) {
        std::swap(el[1], el[2]);
        a2 = -a2;
      }
      if (!(a2 > 0.0)) throw BadSpec("degenerate triangle " + std::to_string(e));
      measure_[e] = 0.5 * a2;
      const auto& p0 = nodes_[el[0]];
      const auto& p1 = nodes_[el[1]];
      const auto& p2 = nodes_[el[2]];
      Eigen::MatrixXd g(2, 3);
      g(0, 0) = p1[1] - p2[1];
      g(0, 1) = p2[1] - p0[1];
      g(0, 2) = p0[1] - p1[1];
      g(1, 0) = p2[0] - p1[0];
      g(1, 1) = p0[0] - p2[0];
      g(1, 2) = p1[0] - p0[0];
      grads_[e] = g / a2;
    }
  }

  // every boundary facet belongs to exactly one element
  std::map<std::array<int, 2>, int> owners;
  for (const auto& el : elements_) {
    if (dim_ == 1) {
      for (int a = 0; a < 2; ++a) ++owners[{el[a], -1}];
    } else {
      for (int a = 0; a < 3; ++a) {
        int i = el[a], j = el[(a + 1) % 3];
        ++owners[{std::min(i, j), std::max(i, j)}];
      }
    }
  }
  for (const auto& f : facets_) {
    std::array<int, 2> key = dim_ == 1 ? std::array<int, 2>{f.nodes[0], -1}
                                       : std::array<int, 2>{std::min(f.nodes[0], f.nodes[1]),
                                                            std::max(f.nodes[0], f.nodes[1])};
    auto it = owners.find(key);
    if (it == owners.end() || it->second != 1)
      throw FileFormat("boundary facet with tag " + std::to_string(f.tag) + " is not on the boundary");
  }
}

double Mesh::total_measure() const { return std::accumulate(measure_.begin(), measure_.end(), 0.0); }

double Mesh::facet_measure(const Facet& f) const {
  if (dim_ == 1) return 1.0;
  const auto& a = nodes_[f.nodes[0]];
  const auto& b = nodes_[f.nodes[1]];
  return std::hypot(b[0] - a[0], b[1] - a[1]);
}

std::vector<int> Mesh::tagged_nodes(int tag) const {
  std::set<int> out;
  for (const auto& f : facets_) {
    if (f.tag != tag) continue;
    for (int a = 0; a < facet_nodes(); ++a) out.insert(f.nodes[a]);
  }
  return {out.begin(), out.end()};
}

Mesh build_mesh(const MeshSpec& spec) {
  if (!spec.file.empty()) return load_mesh(spec.file);
  if (spec.dim == 1) {
    if (!(spec.lx > 0.0) || spec.nx < 1) throw BadSpec("1D mesh needs length > 0 and n >= 1");
    std::vector<Point> nodes;
    for (int i = 0; i <= spec.nx; ++i) nodes.push_back({spec.lx * i / spec.nx, 0.0});
    std::vector<std::array<int, 3>> elems;
    for (int i = 0; i < spec.nx; ++i) elems.push_back({i, i + 1, -1});
    std::vector<Facet> facets{{kLeft, {0, -1}}, {kRight, {spec.nx, -1}}};
    return Mesh(1, std::move(nodes), std::move(elems), std::move(facets));
  }
  if (spec.dim == 2) {
    if (!(spec.lx > 0.0) || !(spec.ly > 0.0) || spec.nx < 1 || spec.ny < 1)
      throw BadSpec("2D mesh needs positive extents and resolution");
    const int nx = spec.nx, ny = spec.ny;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<Point> nodes;
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) nodes.push_back({spec.lx * i / nx, spec.ly * j / ny});
    std::vector<std::array<int, 3>> elems;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        elems.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        elems.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    std::vector<Facet> facets;
    for (int i = 0; i < nx; ++i) {
      facets.push_back({kBottom, {id(i, 0), id(i + 1, 0)}});
      facets.push_back({kTop, {id(i, ny), id(i + 1, ny)}});
    }
    for (int j = 0; j < ny; ++j) {
      facets.push_back({kLeft, {id(0, j), id(0, j + 1)}});
      facets.push_back({kRight, {id(nx, j), id(nx, j + 1)}});
    }
    return Mesh(2, std::move(nodes), std::move(elems), std::move(facets));
  }
  throw BadSpec("mesh dimension must be 1 or 2");
}

Mesh parse_mesh(const std::string& text) {
  std::istringstream in(text);
  int dim = 0, nn = 0, ne = 0;
  if (!(in >> dim >> nn >> ne)) throw FileFormat("mesh header must be `dim n_nodes n_elems`");
  if (dim != 1 && dim != 2) throw FileFormat("mesh dimension must be 1 or 2");
  if (nn < 2 || ne < 1) throw FileFormat("mesh needs at least 2 nodes and 1 element");
  std::vector<Point> nodes(nn, Point{0.0, 0.0});
  for (int i = 0; i < nn; ++i)
    for (int c = 0; c < dim; ++c)
      if (!(in >> nodes[i][c])) throw FileFormat("truncated node block at node " + std::to_string(i + 1));
  std::vector<std::array<int, 3>> elems(ne, {-1, -1, -1});
  for (int e = 0; e < ne; ++e)
    for (int a = 0; a <= dim; ++a) {
      int v = 0;
      if (!(in >> v)) throw FileFormat("truncated element block at element " + std::to_string(e + 1));
      if (v < 1 || v > nn) throw FileFormat("element " + std::to_string(e + 1) + " has an out-of-range node");
      elems[e][a] = v - 1;
    }
  std::vector<Facet> facets;
  int tag = 0;
  while (in >> tag) {
    Facet f;
    f.tag = tag;
    for (int a = 0; a < dim; ++a) {
      int v = 0;
      if (!(in >> v)) throw FileFormat("truncated boundary facet line");
      if (v < 1 || v > nn) throw FileFormat("boundary facet has an out-of-range node");
      f.nodes[a] = v - 1;
    }
    facets.push_back(f);
  }
  if (!in.eof()) throw FileFormat("unexpected token in boundary facet block");
  return Mesh(dim, std::move(nodes), std::move(elems), std::move(facets));
}

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FileFormat("cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_mesh(ss.str());
}

const std::vector<QuadraturePoint>& quadrature(int dim) {
  static const double g = 0.5 / std::sqrt(3.0);
  static const std::vector<QuadraturePoint> seg{{{0.5 + g, 0.5 - g, 0.0}, 0.5}, {{0.5 - g, 0.5 + g, 0.0}, 0.5}};
  static const std::vector<QuadraturePoint> tri{{{2.0 / 3, 1.0 / 6, 1.0 / 6}, 1.0 / 3},
                                                {{1.0 / 6, 2.0 / 3, 1.0 / 6}, 1.0 / 3},
                                                {{1.0 / 6, 1.0 / 6, 2.0 / 3}, 1.0 / 3}};
  return dim == 1 ? seg : tri;
}

Point map_point(const Mesh& mesh, int e, const QuadraturePoint& q) {
  Point x{0.0, 0.0};
  const auto& el = mesh.element(e);
  for (int a = 0; a < mesh.nodes_per_element(); ++a) {
    x[0] += q.bary[a] * mesh.node(el[a])[0];
    x[1] += q.bary[a] * mesh.node(el[a])[1];
  }
  return x;
}

}  // namespace kvd
