#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace kvd {

using Point = std::array<double, 2>;

/// Structured-grid request or mesh file.
struct MeshSpec {
  int dim = 1;
  double lx = 1.0;
  double ly = 1.0;
  int nx = 10;
  int ny = 10;
  std::filesystem::path file;  ///< when non-empty, overrides the structured fields
};

/// Boundary tags of structured meshes.
enum BoundaryTag : int { kLeft = 1, kRight = 2, kBottom = 3, kTop = 4 };

/// Tag name ("left", "right", "bottom", "top" or a decimal number) -> id.
int boundary_tag(const std::string& name);

struct Facet {
  int tag = 0;
  std::array<int, 2> nodes{-1, -1};  ///< second entry unused in 1D
};

/// P1 simplicial mesh: segments (d=1) or triangles (d=2).
class Mesh {
 public:
  Mesh(int dim, std::vector<Point> nodes, std::vector<std::array<int, 3>> elements, std::vector<Facet> facets);

  int dim() const { return dim_; }
  int nodes_per_element() const { return dim_ + 1; }
  int facet_nodes() const { return dim_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  int n_elements() const { return static_cast<int>(elements_.size()); }

  const Point& node(int i) const { return nodes_[i]; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::array<int, 3>& element(int e) const { return elements_[e]; }
  const std::vector<Facet>& facets() const { return facets_; }

  double measure(int e) const { return measure_[e]; }
  double total_measure() const;
  /// Shape-function gradients on element e: dim x nodes_per_element.
  const Eigen::MatrixXd& gradients(int e) const { return grads_[e]; }
  double facet_measure(const Facet& f) const;

  /// Nodes lying on facets with the given tag, sorted, unique.
  std::vector<int> tagged_nodes(int tag) const;

 private:
  int dim_;
  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> elements_;
  std::vector<Facet> facets_;
  std::vector<double> measure_;
  std::vector<Eigen::MatrixXd> grads_;
};

/// Throws BadSpec (nonpositive extent/resolution) or FileFormat.
Mesh build_mesh(const MeshSpec& spec);

/// Plain text: `dim n_nodes n_elems`, node coordinate lines, 1-based
/// connectivity lines, then boundary facet lines `tag node...` to EOF.
Mesh load_mesh(const std::filesystem::path& path);
Mesh parse_mesh(const std::string& text);

/// Order-2 rule in barycentric coordinates: 2-point Gauss on segments,
/// 3 interior points on triangles. Weights sum to 1 (scale by measure).
struct QuadraturePoint {
  std::array<double, 3> bary;
  double weight;
};
const std::vector<QuadraturePoint>& quadrature(int dim);

/// Physical coordinates of a quadrature point on element e.
Point map_point(const Mesh& mesh, int e, const QuadraturePoint& q);

}  // namespace kvd
