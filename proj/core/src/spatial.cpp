#include "pvcm/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pvcm/error.hpp"
#include "pvcm/parallel.hpp"

namespace pvcm {

SpatialGraph::SpatialGraph(Eigen::Index n_voxels,
                           std::vector<std::pair<Eigen::Index, Eigen::Index>> edges)
    : n_voxels_(n_voxels), edges_(std::move(edges)) {
  if (n_voxels_ < 1) throw InvalidArgument("spatial graph needs at least one voxel");
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (auto& [a, b] : edges_) {
    if (a < 0 || b < 0 || a >= n_voxels_ || b >= n_voxels_) {
      throw InvalidArgument("spatial graph edge index out of range");
    }
    if (a == b) throw InvalidArgument("spatial graph must not contain self-edges");
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) {
      throw InvalidArgument("spatial graph must not contain duplicate edges");
    }
  }
  build_adjacency();
}

SpatialGraph::SpatialGraph(Eigen::Index n_voxels,
                           std::vector<std::pair<Eigen::Index, Eigen::Index>> edges,
                           std::vector<std::size_t> shape, std::vector<LatticeCoord> coords)
    : SpatialGraph(n_voxels, std::move(edges)) {
  if (shape.empty() || shape.size() > 3 || static_cast<Eigen::Index>(coords.size()) != n_voxels_) {
    throw InvalidArgument("spatial graph lattice metadata is inconsistent");
  }
  shape_ = std::move(shape);
  coords_ = std::move(coords);
  const std::size_t cells =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  lattice_to_voxel_.assign(cells, -1);
  for (Eigen::Index n = 0; n < n_voxels_; ++n) {
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < shape_.size(); ++a) {
      if (coords_[static_cast<std::size_t>(n)][a] >= shape_[a]) {
        throw InvalidArgument("voxel coordinate outside the lattice");
      }
      flat += coords_[static_cast<std::size_t>(n)][a] * stride;
      stride *= shape_[a];
    }
    if (lattice_to_voxel_[flat] != -1) throw InvalidArgument("two voxels share a lattice cell");
    lattice_to_voxel_[flat] = n;
  }
}

void SpatialGraph::build_adjacency() {
  std::vector<Eigen::Index> count(static_cast<std::size_t>(n_voxels_), 0);
  for (const auto& [a, b] : edges_) {
    ++count[static_cast<std::size_t>(a)];
    ++count[static_cast<std::size_t>(b)];
  }
  offsets_.assign(static_cast<std::size_t>(n_voxels_) + 1, 0);
  for (Eigen::Index n = 0; n < n_voxels_; ++n) {
    offsets_[static_cast<std::size_t>(n) + 1] = offsets_[static_cast<std::size_t>(n)] +
                                                count[static_cast<std::size_t>(n)];
  }
  neighbors_.assign(static_cast<std::size_t>(offsets_.back()), 0);
  std::vector<Eigen::Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges_) {
    neighbors_[static_cast<std::size_t>(fill[static_cast<std::size_t>(a)]++)] = b;
    neighbors_[static_cast<std::size_t>(fill[static_cast<std::size_t>(b)]++)] = a;
  }
  for (Eigen::Index n = 0; n < n_voxels_; ++n) {
    std::sort(neighbors_.begin() + offsets_[static_cast<std::size_t>(n)],
              neighbors_.begin() + offsets_[static_cast<std::size_t>(n) + 1]);
  }
}

std::vector<Eigen::Index> SpatialGraph::degrees() const {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n_voxels_));
  for (Eigen::Index n = 0; n < n_voxels_; ++n) out[static_cast<std::size_t>(n)] = degree(n);
  return out;
}

Eigen::Index SpatialGraph::max_degree() const {
  Eigen::Index best = 0;
  for (Eigen::Index n = 0; n < n_voxels_; ++n) best = std::max(best, degree(n));
  return best;
}

std::optional<Eigen::Index> SpatialGraph::voxel_at(const LatticeCoord& coord) const {
  if (shape_.empty()) return std::nullopt;
  std::size_t flat = 0;
  std::size_t stride = 1;
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (coord[a] >= shape_[a]) return std::nullopt;
    flat += coord[a] * stride;
    stride *= shape_[a];
  }
  const Eigen::Index n = lattice_to_voxel_[flat];
  if (n < 0) return std::nullopt;
  return n;
}

SpatialGraph build_spatial_graph(const NdArray& mask, Connectivity) {
  if (mask.rank() < 1 || mask.rank() > 3) {
    throw InvalidArgument("mask must be a 1-, 2- or 3-D array");
  }
  std::vector<std::size_t> shape = mask.shape;
  std::array<std::size_t, 3> dims{1, 1, 1};
  for (std::size_t a = 0; a < shape.size(); ++a) dims[a] = shape[a];

  std::vector<Eigen::Index> index(mask.size(), -1);
  std::vector<LatticeCoord> coords;
  Eigen::Index n = 0;
  for (std::size_t flat = 0; flat < mask.size(); ++flat) {
    if (mask.data[flat] != 0.0) {
      index[flat] = n++;
      coords.push_back({flat % dims[0], (flat / dims[0]) % dims[1], flat / (dims[0] * dims[1])});
    }
  }
  if (n == 0) throw InvalidArgument("mask contains no voxels");

  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  const std::array<std::size_t, 3> strides{1, dims[0], dims[0] * dims[1]};
  for (std::size_t v = 0; v < coords.size(); ++v) {
    const auto& c = coords[v];
    const std::size_t flat = c[0] + dims[0] * (c[1] + dims[1] * c[2]);
    for (std::size_t a = 0; a < 3; ++a) {
      if (c[a] + 1 < dims[a]) {
        const Eigen::Index other = index[flat + strides[a]];
        if (other >= 0) edges.emplace_back(static_cast<Eigen::Index>(v), other);
      }
    }
  }
  return SpatialGraph(n, std::move(edges), std::move(shape), std::move(coords));
}

void apply_dtd(const SpatialGraph& graph, const Eigen::Ref<const Eigen::MatrixXd>& image,
               Eigen::Ref<Eigen::MatrixXd> out, WorkerPool* pool) {
  if (image.cols() != graph.voxels() || out.cols() != image.cols() ||
      out.rows() != image.rows()) {
    throw InvalidArgument("apply_dtd: image columns must equal the voxel count");
  }
  const Eigen::Index n = graph.voxels();
  auto work = [&](Eigen::Index block) {
    const auto range = block_range(block, n);
    for (Eigen::Index v = range.begin; v < range.begin + range.size; ++v) {
      dtd_column(graph, image, v, out.col(v));
    }
  };
  if (pool) {
    pool->run(block_count(n), work);
  } else {
    for (Eigen::Index b = 0; b < block_count(n); ++b) work(b);
  }
}

Eigen::MatrixXd apply_dtd(const SpatialGraph& graph, const Eigen::MatrixXd& image) {
  Eigen::MatrixXd out(image.rows(), image.cols());
  apply_dtd(graph, image, out);
  return out;
}

namespace {

// x <- 2 L x for a single vector.
void dtd_vector(const SpatialGraph& graph, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  for (Eigen::Index n = 0; n < graph.voxels(); ++n) {
    double acc = static_cast<double>(graph.degree(n)) * x(n);
    for (Eigen::Index m : graph.neighbors(n)) acc -= x(m);
    out(n) = 2.0 * acc;
  }
}

// Connected-component label per voxel.
std::vector<Eigen::Index> components(const SpatialGraph& graph) {
  std::vector<Eigen::Index> label(static_cast<std::size_t>(graph.voxels()), -1);
  Eigen::Index next = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index s = 0; s < graph.voxels(); ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index m : graph.neighbors(v)) {
        if (label[static_cast<std::size_t>(m)] < 0) {
          label[static_cast<std::size_t>(m)] = next;
          stack.push_back(m);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace

double operator_norm_dtd(const SpatialGraph& graph, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("operator_norm_dtd: tol must lie in (0, 1)");
  if (graph.edges().empty()) return 0.0;
  const double gershgorin = 4.0 * static_cast<double>(graph.max_degree());

  // All-ones plus 1 at the first voxel of every connected component, so each
  // component's dominant mode is excited.
  Eigen::VectorXd x = Eigen::VectorXd::Ones(graph.voxels());
  const auto label = components(graph);
  Eigen::Index seen = 0;
  for (Eigen::Index n = 0; n < graph.voxels(); ++n) {
    if (label[static_cast<std::size_t>(n)] == seen) {
      x(n) += 1.0;
      ++seen;
    }
  }
  x.normalize();

  Eigen::VectorXd y(graph.voxels());
  constexpr int kMaxIterations = 1000;
  for (int it = 0; it < kMaxIterations; ++it) {
    dtd_vector(graph, x, y);
    const double rho = x.dot(y);
    const double residual = (y - rho * x).norm();
    if (rho > 0.0 && residual <= tol * rho) return std::min(rho, gershgorin);
    const double norm = y.norm();
    if (!(norm > 0.0)) break;
    x = y / norm;
  }
  return gershgorin;
}

double compute_xi_p(double lambda, double norm_dtd) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (norm_dtd < 0.0) throw InvalidArgument("operator norm must be nonnegative");
  return 0.75 * lambda * norm_dtd + kXiEpsilon;
}

}  // namespace pvcm
