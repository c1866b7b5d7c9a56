#include "kvd/assembly.hpp"

#include <omp.h>

#include <algorithm>

namespace kvd {

namespace {

constexpr int kChunk = 2048;

}  // namespace

bool SparseSym::is_symmetric(double rel_tol) const {
  Eigen::SparseMatrix<double> t = m.transpose();
  const double scale = std::max(1.0, m.norm());
  return (m - t).norm() <= rel_tol * scale;
}

int space_size(const Mesh& mesh, Space space) {
  switch (space) {
    case Space::Vector: return mesh.n_nodes() * mesh.dim();
    case Space::Scalar: return mesh.n_nodes();
    case Space::Coupled: return mesh.n_nodes() * (mesh.dim() + 1);
  }
  return 0;
}

int local_size(const Mesh& mesh, Space space) {
  const int nen = mesh.nodes_per_element();
  switch (space) {
    case Space::Vector: return nen * mesh.dim();
    case Space::Scalar: return nen;
    case Space::Coupled: return nen * (mesh.dim() + 1);
  }
  return 0;
}

void local_dofs(const Mesh& mesh, Space space, int e, std::span<int> out) {
  const int nen = mesh.nodes_per_element();
  const int d = mesh.dim();
  const auto& el = mesh.element(e);
  int k = 0;
  if (space != Space::Scalar)
    for (int a = 0; a < nen; ++a)
      for (int c = 0; c < d; ++c) out[k++] = el[a] * d + c;
  if (space != Space::Vector) {
    const int offset = space == Space::Coupled ? mesh.n_nodes() * d : 0;
    for (int a = 0; a < nen; ++a) out[k++] = offset + el[a];
  }
}

AssemblyPlan::AssemblyPlan(const Mesh& mesh, Space space)
    : mesh_(&mesh), space_(space), n_(space_size(mesh, space)), nloc_(kvd::local_size(mesh, space)) {
  const int ne = mesh.n_elements();
  dofs_.resize(static_cast<std::size_t>(ne) * nloc_);
  for (int e = 0; e < ne; ++e) local_dofs(mesh, space, e, {dofs_.data() + static_cast<std::size_t>(e) * nloc_, static_cast<std::size_t>(nloc_)});

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(ne) * nloc_ * nloc_);
  for (int e = 0; e < ne; ++e) {
    auto d = dofs(e);
    for (int i : d)
      for (int j : d) trips.emplace_back(i, j, 0.0);
  }
  pattern_.resize(n_, n_);
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  scatter_.resize(static_cast<std::size_t>(ne) * nloc_ * nloc_);
  for (int e = 0; e < ne; ++e) {
    auto d = dofs(e);
    for (int a = 0; a < nloc_; ++a)
      for (int b = 0; b < nloc_; ++b)
        scatter_[(static_cast<std::size_t>(e) * nloc_ + b) * nloc_ + a] = find(d[a], d[b]);
  }
}

int AssemblyPlan::find(int i, int j) const {
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  const int* first = inner + outer[j];
  const int* last = inner + outer[j + 1];
  const int* it = std::lower_bound(first, last, i);
  if (it == last || *it != i) return -1;
  return static_cast<int>(it - inner);
}

SparseSym AssemblyPlan::zero() const { return {pattern_, true}; }

void AssemblyPlan::accumulate(const MatrixKernel& kernel, std::span<double> values) const {
  const int ne = mesh_->n_elements();
  const std::size_t block = static_cast<std::size_t>(nloc_) * nloc_;
  std::vector<double> buffer(std::min(ne, kChunk) * block);
  for (int start = 0; start < ne; start += kChunk) {
    const int stop = std::min(ne, start + kChunk);
#pragma omp parallel for schedule(static)
    for (int e = start; e < stop; ++e) {
      Eigen::Map<Eigen::MatrixXd> ke(buffer.data() + (e - start) * block, nloc_, nloc_);
      ke.setZero();
      kernel(e, ke);
    }
    for (int e = start; e < stop; ++e) {
      const double* ke = buffer.data() + (e - start) * block;
      const int* sc = scatter_.data() + static_cast<std::size_t>(e) * block;
      for (std::size_t k = 0; k < block; ++k) values[sc[k]] += ke[k];
    }
  }
}

SparseSym AssemblyPlan::assemble(const MatrixKernel& kernel) const {
  SparseSym out{pattern_, true};
  accumulate(kernel, {out.m.valuePtr(), static_cast<std::size_t>(out.m.nonZeros())});
  return out;
}

Eigen::VectorXd AssemblyPlan::assemble_vector(const VectorKernel& kernel) const {
  const int ne = mesh_->n_elements();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  std::vector<double> buffer(static_cast<std::size_t>(std::min(ne, kChunk)) * nloc_);
  for (int start = 0; start < ne; start += kChunk) {
    const int stop = std::min(ne, start + kChunk);
#pragma omp parallel for schedule(static)
    for (int e = start; e < stop; ++e) {
      Eigen::Map<Eigen::VectorXd> fe(buffer.data() + static_cast<std::size_t>(e - start) * nloc_, nloc_);
      fe.setZero();
      kernel(e, fe);
    }
    for (int e = start; e < stop; ++e) {
      const double* fe = buffer.data() + static_cast<std::size_t>(e - start) * nloc_;
      auto d = dofs(e);
      for (int a = 0; a < nloc_; ++a) out[d[a]] += fe[a];
    }
  }
  return out;
}

double AssemblyPlan::assemble_scalar(const ScalarKernel& kernel) const {
  const int ne = mesh_->n_elements();
  std::vector<double> vals(ne);
#pragma omp parallel for schedule(static)
  for (int e = 0; e < ne; ++e) vals[e] = kernel(e);
  double sum = 0.0;
  for (double v : vals) sum += v;
  return sum;
}

namespace serial {

SparseSym assemble(const Mesh& mesh, Space space, const MatrixKernel& kernel) {
  const int n = space_size(mesh, space);
  const int nloc = local_size(mesh, space);
  std::vector<int> d(nloc);
  Eigen::MatrixXd ke(nloc, nloc);
  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    local_dofs(mesh, space, e, d);
    ke.setZero();
    kernel(e, ke);
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) trips.emplace_back(d[a], d[b], ke(a, b));
  }
  SparseSym out;
  out.m.resize(n, n);
  out.m.setFromTriplets(trips.begin(), trips.end());
  out.m.makeCompressed();
  return out;
}

Eigen::VectorXd assemble_vector(const Mesh& mesh, Space space, const VectorKernel& kernel) {
  const int nloc = local_size(mesh, space);
  std::vector<int> d(nloc);
  Eigen::VectorXd fe(nloc);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_size(mesh, space));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    local_dofs(mesh, space, e, d);
    fe.setZero();
    kernel(e, fe);
    for (int a = 0; a < nloc; ++a) out[d[a]] += fe[a];
  }
  return out;
}

double assemble_scalar(const Mesh& mesh, const ScalarKernel& kernel) {
  double sum = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) sum += kernel(e);
  return sum;
}

}  // namespace serial

}  // namespace kvd
