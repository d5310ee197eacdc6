#pragma once

#include "loopgas/model.hpp"

#include <map>
#include <vector>

namespace loopgas {

enum class LatticeBoundary {
  free_ends,  // kinetic term is half the graph Laplacian (D - A) / a^2
  killed      // walks stepping off the site set are killed: full line coordination on the diagonal
};

struct LatticeModel {
  std::vector<Point> sites;
  double spacing = 1.0;
  std::vector<std::vector<int>> neighbors;
  std::vector<int> n_max;  // per type
  const ModelParams* model = nullptr;
  LatticeBoundary boundary = LatticeBoundary::free_ends;

  // Sites 0..count-1 at x = i * spacing (embedded in d = model.d with zero padding).
  static LatticeModel line(int count, double spacing, const ModelParams& m, std::vector<int> n_max);
  int site_count() const { return static_cast<int>(sites.size()); }
  // Single-particle kinetic matrix.
  Eigen::MatrixXd kinetic() const;
};

// Occupation states over a subset of sites: entry [j * |sites| + s] is the number of type-j
// particles on sites[s].
struct OccupationBasis {
  std::vector<int> sites;
  int q = 1;
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, int> index;

  int dim() const { return static_cast<int>(states.size()); }
  void add(const std::vector<int>& occ);
};

// Sector basis with exactly n[j] type-j particles; hard-core states removed.
OccupationBasis sector_basis(const LatticeModel& lm, const std::vector<int>& n, const ExternalCC* ext = nullptr);

constexpr int kMaxSectorDimension = 20000;

// Dense Hamiltonian on the sector; throws std::length_error beyond kMaxSectorDimension.
Eigen::MatrixXd build_hamiltonian(const LatticeModel& lm, const std::vector<int>& n, const ExternalCC* ext,
                                  OccupationBasis* basis_out = nullptr);

struct SectorResult {
  std::vector<int> n;
  double xi = 0.0;            // trace exp(-beta H_n)
  double min_eigenvalue = 0.0;
  int dimension = 0;
};

struct PartitionResult {
  std::vector<SectorResult> sectors;
  double grand = 0.0;
  double truncation_bound = 0.0;
};

PartitionResult partition_functions(const LatticeModel& lm, const ExternalCC* ext);

struct DensityMatrix {
  OccupationBasis basis;
  Eigen::MatrixXd matrix;
};

DensityMatrix density_matrix(const LatticeModel& lm, const ExternalCC* ext);

// Trace out every site not in `inner_sites`.
DensityMatrix partial_trace(const DensityMatrix& r, const std::vector<int>& inner_sites);

// Max entry difference between tracing to inner directly and via middle (inner within middle).
double check_compatibility(const LatticeModel& lm, const ExternalCC* ext, const std::vector<int>& inner,
                           const std::vector<int>& middle);

}  // namespace loopgas
