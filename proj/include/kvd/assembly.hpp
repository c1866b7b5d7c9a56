#pragma once

// Element-loop assembly. AssemblyPlan computes element contributions in
// OpenMP-parallel chunks and scatters them in element order, so results are
// bitwise independent of the thread count. The kvd::serial namespace keeps a
// plain triplet-based assembler as the reference implementation for tests
// and benchmarks.

#include "kvd/mesh.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <span>
#include <vector>

namespace kvd {

/// Symmetric sparse matrix, stored in full (both triangles).
struct SparseSym {
  Eigen::SparseMatrix<double> m;
  bool symmetric = true;

  int size() const { return static_cast<int>(m.rows()); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return m * x; }
  double quad(const Eigen::VectorXd& x) const { return x.dot(m * x); }
  bool is_symmetric(double rel_tol = 1e-12) const;
};

/// Vector: d components per node (node-major). Scalar: one per node.
/// Coupled: the vector space followed by the scalar space.
enum class Space { Vector, Scalar, Coupled };

int space_size(const Mesh& mesh, Space space);
int local_size(const Mesh& mesh, Space space);
/// Global indices of the local dofs of element e. Local ordering: vector
/// part a*d + c, then scalar part at offset nen*d (Coupled) or 0 (Scalar).
void local_dofs(const Mesh& mesh, Space space, int e, std::span<int> out);

using MatrixKernel = std::function<void(int e, Eigen::Ref<Eigen::MatrixXd> ke)>;
using VectorKernel = std::function<void(int e, Eigen::Ref<Eigen::VectorXd> fe)>;
using ScalarKernel = std::function<double(int e)>;

class AssemblyPlan {
 public:
  AssemblyPlan(const Mesh& mesh, Space space);

  const Mesh& mesh() const { return *mesh_; }
  Space space() const { return space_; }
  int size() const { return n_; }
  int local_size() const { return nloc_; }
  std::span<const int> dofs(int e) const { return {dofs_.data() + static_cast<std::size_t>(e) * nloc_, static_cast<std::size_t>(nloc_)}; }

  /// The structural pattern with all values zero.
  SparseSym zero() const;
  SparseSym assemble(const MatrixKernel& kernel) const;
  /// Adds element contributions into `values`, laid out as pattern().valuePtr().
  void accumulate(const MatrixKernel& kernel, std::span<double> values) const;
  Eigen::VectorXd assemble_vector(const VectorKernel& kernel) const;
  double assemble_scalar(const ScalarKernel& kernel) const;

  /// Value index of global entry (i, j) in the pattern, -1 if absent.
  int find(int i, int j) const;

 private:
  const Mesh* mesh_;
  Space space_;
  int n_;
  int nloc_;
  std::vector<int> dofs_;
  std::vector<int> scatter_;
  Eigen::SparseMatrix<double> pattern_;
};

namespace serial {

SparseSym assemble(const Mesh& mesh, Space space, const MatrixKernel& kernel);
Eigen::VectorXd assemble_vector(const Mesh& mesh, Space space, const VectorKernel& kernel);
double assemble_scalar(const Mesh& mesh, const ScalarKernel& kernel);

}  // namespace serial

}  // namespace kvd
