#include "loopgas/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace loopgas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All ways to put n identical particles on m sites.
void compositions(int n, int m, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == m - 1) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = n; k >= 0; --k) {
    cur.push_back(k);
    compositions(n - k, m, cur, out);
    cur.pop_back();
  }
}

double site_distance(const LatticeModel& lm, int a, int b) { return (lm.sites[a] - lm.sites[b]).norm(); }

// Interaction plus external energy of an occupation state over all sites; +inf on hard cores.
double potential_energy(const LatticeModel& lm, const std::vector<int>& occ, const ExternalCC* ext) {
  const ModelParams& m = *lm.model;
  const int ns = lm.site_count();
  double e = 0.0;
  for (int j = 0; j < m.q; ++j)
    for (int jp = j; jp < m.q; ++jp) {
      const PairPotential& v = m.potential(j, jp);
      if (v.is_zero()) continue;
      for (int s = 0; s < ns; ++s) {
        const int a = occ[j * ns + s];
        if (a == 0) continue;
        for (int t = (j == jp ? s : 0); t < ns; ++t) {
          const int b = occ[jp * ns + t];
          if (b == 0) continue;
          double pairs = 0.0;
          if (j == jp && s == t) pairs = 0.5 * a * (a - 1);
          else pairs = static_cast<double>(a) * b;
          if (pairs == 0.0) continue;
          const double val = v(site_distance(lm, s, t));
          if (val == kInf) return kInf;
          e += pairs * val;
        }
      }
    }
  if (ext) {
    for (int j = 0; j < m.q; ++j)
      for (int tp = 0; tp < static_cast<int>(ext->points.size()); ++tp) {
        const PairPotential& v = m.potential(j, tp);
        if (v.is_zero()) continue;
        for (int s = 0; s < ns; ++s) {
          const int a = occ[j * ns + s];
          if (a == 0) continue;
          for (const Point& x : ext->points[tp]) {
            const double val = v((lm.sites[s] - x).norm());
            if (val == kInf) return kInf;
            e += a * val;
          }
        }
      }
  }
  return e;
}

std::vector<std::vector<int>> sectors_of(const LatticeModel& lm) {
  std::vector<std::vector<int>> out{{}};
  for (int j = 0; j < lm.model->q; ++j) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : out)
      for (int n = 0; n <= lm.n_max[j]; ++n) {
        auto v = prefix;
        v.push_back(n);
        next.push_back(v);
      }
    out = std::move(next);
  }
  return out;
}

void require_ready(const LatticeModel& lm) {
  if (!lm.model) throw std::invalid_argument("LatticeModel: missing model parameters");
  if (static_cast<int>(lm.n_max.size()) != lm.model->q) throw std::invalid_argument("LatticeModel: need n_max per type");
}

}  // namespace

LatticeModel LatticeModel::line(int count, double spacing, const ModelParams& m, std::vector<int> n_max) {
  if (count < 1 || !(spacing > 0.0)) throw std::invalid_argument("LatticeModel::line: bad size or spacing");
  LatticeModel lm;
  lm.spacing = spacing;
  lm.model = &m;
  lm.n_max = std::move(n_max);
  for (int i = 0; i < count; ++i) {
    Point x = Point::Zero(m.d);
    x[0] = i * spacing;
    lm.sites.push_back(x);
  }
  lm.neighbors.resize(static_cast<std::size_t>(count));
  for (int i = 0; i + 1 < count; ++i) {
    lm.neighbors[i].push_back(i + 1);
    lm.neighbors[i + 1].push_back(i);
  }
  return lm;
}

Eigen::MatrixXd LatticeModel::kinetic() const {
  const int n = site_count();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    // Killed walks see the full coordination of the infinite line.
    k(i, i) = boundary == LatticeBoundary::free_ends ? static_cast<double>(neighbors[i].size()) : 2.0;
    for (int t : neighbors[i]) k(i, t) -= 1.0;
  }
  return 0.5 * k / (spacing * spacing);
}

void OccupationBasis::add(const std::vector<int>& occ) {
  if (index.emplace(occ, static_cast<int>(states.size())).second) states.push_back(occ);
}

OccupationBasis sector_basis(const LatticeModel& lm, const std::vector<int>& n, const ExternalCC* ext) {
  require_ready(lm);
  const int ns = lm.site_count();
  const int q = lm.model->q;
  OccupationBasis basis;
  basis.q = q;
  for (int s = 0; s < ns; ++s) basis.sites.push_back(s);
  std::vector<std::vector<std::vector<int>>> per_type(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) {
    std::vector<int> cur;
    compositions(n[j], ns, cur, per_type[j]);
  }
  std::vector<int> choice(static_cast<std::size_t>(q), 0);
  while (true) {
    std::vector<int> occ;
    occ.reserve(static_cast<std::size_t>(q * ns));
    for (int j = 0; j < q; ++j) occ.insert(occ.end(), per_type[j][choice[j]].begin(), per_type[j][choice[j]].end());
    if (potential_energy(lm, occ, ext) < kInf) basis.add(occ);
    int j = 0;
    while (j < q && ++choice[j] == static_cast<int>(per_type[j].size())) choice[j++] = 0;
    if (j == q) break;
    if (basis.dim() > kMaxSectorDimension)
      throw std::length_error("sector dimension exceeds the dense budget of " + std::to_string(kMaxSectorDimension));
  }
  return basis;
}

Eigen::MatrixXd build_hamiltonian(const LatticeModel& lm, const std::vector<int>& n, const ExternalCC* ext,
                                  OccupationBasis* basis_out) {
  OccupationBasis basis = sector_basis(lm, n, ext);
  const int dim = basis.dim();
  if (dim > kMaxSectorDimension)
    throw std::length_error("sector dimension " + std::to_string(dim) + " exceeds the dense budget");
  const int ns = lm.site_count();
  const Eigen::MatrixXd k = lm.kinetic();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    const auto& occ = basis.states[i];
    double diag = potential_energy(lm, occ, ext);
    for (int j = 0; j < basis.q; ++j)
      for (int s = 0; s < ns; ++s) {
        const int a = occ[j * ns + s];
        if (a == 0) continue;
        diag += a * k(s, s);
        for (int t : lm.neighbors[s]) {
          auto moved = occ;
          --moved[j * ns + s];
          ++moved[j * ns + t];
          const auto it = basis.index.find(moved);
          if (it == basis.index.end()) continue;  // hard-core states are not in the space
          h(it->second, i) += k(t, s) * std::sqrt(static_cast<double>(a) * (occ[j * ns + t] + 1));
        }
      }
    h(i, i) += diag;
  }
  if (basis_out) *basis_out = std::move(basis);
  return h;
}

PartitionResult partition_functions(const LatticeModel& lm, const ExternalCC* ext) {
  require_ready(lm);
  const ModelParams& m = *lm.model;
  PartitionResult r;
  double largest = 0.0;
  for (const auto& n : sectors_of(lm)) {
    const Eigen::MatrixXd h = build_hamiltonian(lm, n, ext);
    SectorResult s;
    s.n = n;
    s.dimension = static_cast<int>(h.rows());
    if (s.dimension > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
      s.min_eigenvalue = es.eigenvalues().minCoeff();
      s.xi = (-m.beta * es.eigenvalues().array()).exp().sum();
    }
    double w = 1.0;
    for (int j = 0; j < m.q; ++j) w *= std::pow(m.z[j], n[j]);
    r.grand += w * s.xi;
    largest = std::max(largest, s.xi);
    r.sectors.push_back(s);
  }
  double tail = 0.0;
  for (int j = 0; j < m.q; ++j) tail += std::pow(m.z[j], lm.n_max[j] + 1) / (1.0 - m.z[j]);
  r.truncation_bound = largest * tail;
  return r;
}

DensityMatrix density_matrix(const LatticeModel& lm, const ExternalCC* ext) {
  require_ready(lm);
  const ModelParams& m = *lm.model;
  struct Block {
    OccupationBasis basis;
    Eigen::MatrixXd g;
  };
  std::vector<Block> blocks;
  double grand = 0.0;
  int total = 0;
  for (const auto& n : sectors_of(lm)) {
    Block b;
    const Eigen::MatrixXd h = build_hamiltonian(lm, n, ext, &b.basis);
    if (h.rows() == 0) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    double w = 1.0;
    for (int j = 0; j < m.q; ++j) w *= std::pow(m.z[j], n[j]);
    const Eigen::VectorXd boltz = w * (-m.beta * es.eigenvalues().array()).exp();
    b.g = es.eigenvectors() * boltz.asDiagonal() * es.eigenvectors().transpose();
    grand += boltz.sum();
    total += static_cast<int>(h.rows());
    blocks.push_back(std::move(b));
  }
  DensityMatrix r;
  r.basis.q = m.q;
  for (int s = 0; s < lm.site_count(); ++s) r.basis.sites.push_back(s);
  r.matrix = Eigen::MatrixXd::Zero(total, total);
  int offset = 0;
  for (const auto& b : blocks) {
    for (const auto& st : b.basis.states) r.basis.add(st);
    r.matrix.block(offset, offset, b.g.rows(), b.g.cols()) = b.g / grand;
    offset += static_cast<int>(b.g.rows());
  }
  return r;
}

DensityMatrix partial_trace(const DensityMatrix& r, const std::vector<int>& inner_sites) {
  std::vector<int> inner = inner_sites;
  std::sort(inner.begin(), inner.end());
  inner.erase(std::unique(inner.begin(), inner.end()), inner.end());
  const auto& sites = r.basis.sites;
  const int ns = static_cast<int>(sites.size());
  const int q = r.basis.q;
  std::vector<bool> keep(static_cast<std::size_t>(ns), false);
  for (int s : inner) {
    const auto it = std::find(sites.begin(), sites.end(), s);
    if (it == sites.end()) throw std::invalid_argument("partial_trace: inner site outside the current region");
    keep[static_cast<std::size_t>(it - sites.begin())] = true;
  }
  const int dim = r.basis.dim();
  std::vector<std::vector<int>> in_key(static_cast<std::size_t>(dim)), out_key(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < q; ++j)
      for (int s = 0; s < ns; ++s) (keep[s] ? in_key[i] : out_key[i]).push_back(r.basis.states[i][j * ns + s]);
  std::set<std::vector<int>> keys(in_key.begin(), in_key.end());
  DensityMatrix out;
  out.basis.q = q;
  out.basis.sites = inner;
  for (const auto& k : keys) out.basis.add(k);
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int i = 0; i < dim; ++i) groups[out_key[i]].push_back(i);
  out.matrix = Eigen::MatrixXd::Zero(out.basis.dim(), out.basis.dim());
  for (const auto& [key, members] : groups)
    for (int a : members) {
      const int ia = out.basis.index.at(in_key[a]);
      for (int b : members) out.matrix(ia, out.basis.index.at(in_key[b])) += r.matrix(a, b);
    }
  return out;
}

double check_compatibility(const LatticeModel& lm, const ExternalCC* ext, const std::vector<int>& inner,
                           const std::vector<int>& middle) {
  for (int s : inner)
    if (std::find(middle.begin(), middle.end(), s) == middle.end())
      throw std::invalid_argument("check_compatibility: inner region must lie inside the middle region");
  const DensityMatrix r = density_matrix(lm, ext);
  const DensityMatrix direct = partial_trace(r, inner);
  const DensityMatrix nested = partial_trace(partial_trace(r, middle), inner);
  if (direct.basis.states != nested.basis.states) return kInf;
  return (direct.matrix - nested.matrix).cwiseAbs().maxCoeff();
}

}  // namespace loopgas
