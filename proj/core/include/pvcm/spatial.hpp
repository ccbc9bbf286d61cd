#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pvcm/array_io.hpp"

namespace pvcm {

class WorkerPool;

using LatticeCoord = std::array<std::size_t, 3>;

/// Voxel adjacency over the estimated voxels. Edges are unordered pairs
/// stored once with first < second.
class SpatialGraph {
 public:
  SpatialGraph(Eigen::Index n_voxels, std::vector<std::pair<Eigen::Index, Eigen::Index>> edges);
  /// Lattice-backed graph; coords[n] is voxel n's position in `shape`.
  SpatialGraph(Eigen::Index n_voxels, std::vector<std::pair<Eigen::Index, Eigen::Index>> edges,
               std::vector<std::size_t> shape, std::vector<LatticeCoord> coords);

  Eigen::Index voxels() const { return n_voxels_; }
  const std::vector<std::pair<Eigen::Index, Eigen::Index>>& edges() const { return edges_; }
  Eigen::Index degree(Eigen::Index n) const { return offsets_[n + 1] - offsets_[n]; }
  std::vector<Eigen::Index> degrees() const;
  Eigen::Index max_degree() const;
  std::span<const Eigen::Index> neighbors(Eigen::Index n) const {
    return {neighbors_.data() + offsets_[n], static_cast<std::size_t>(degree(n))};
  }

  bool has_lattice() const { return !shape_.empty(); }
  const std::vector<std::size_t>& lattice_shape() const { return shape_; }
  const std::vector<LatticeCoord>& voxel_coords() const { return coords_; }
  /// Voxel index at a lattice position, or nullopt outside the mask.
  std::optional<Eigen::Index> voxel_at(const LatticeCoord& coord) const;

 private:
  void build_adjacency();

  Eigen::Index n_voxels_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges_;
  std::vector<Eigen::Index> offsets_;
  std::vector<Eigen::Index> neighbors_;
  std::vector<std::size_t> shape_;
  std::vector<LatticeCoord> coords_;
  std::vector<Eigen::Index> lattice_to_voxel_;
};

enum class Connectivity { faces };

/// One node per nonzero mask entry (column-major order), one edge per
/// face-adjacent pair of mask voxels. The mask must be 1-, 2- or 3-D.
SpatialGraph build_spatial_graph(const NdArray& mask, Connectivity connectivity = Connectivity::faces);

/// D^T D applied to every spectral row of a Q x N image. With the
/// ordered-pair convention D^T D = 2L, L the combinatorial graph Laplacian.
Eigen::MatrixXd apply_dtd(const SpatialGraph& graph, const Eigen::MatrixXd& image);
void apply_dtd(const SpatialGraph& graph, const Eigen::Ref<const Eigen::MatrixXd>& image,
               Eigen::Ref<Eigen::MatrixXd> out, WorkerPool* pool = nullptr);

/// Column n of D^T D applied to `image`, written into `out`.
template <class In, class Out>
void dtd_column(const SpatialGraph& graph, const In& image, Eigen::Index n, Out&& out) {
  out = static_cast<double>(graph.degree(n)) * image.col(n);
  for (Eigen::Index m : graph.neighbors(n)) out -= image.col(m);
  out *= 2.0;
}

/// Estimate of ||D^T D|| by power iteration on 2L, converged when the
/// residual ||Ax - rho x|| drops below tol * rho. Falls back to the bound
/// 4 * max_degree when that does not happen within 1000 iterations.
double operator_norm_dtd(const SpatialGraph& graph, double tol = 1e-6);

inline constexpr double kXiEpsilon = 1e-10;

/// 0.75 * lambda * norm_dtd + 1e-10.
double compute_xi_p(double lambda, double norm_dtd);

}  // namespace pvcm
