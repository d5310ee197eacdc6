#pragma once

#include "loopgas/bridge.hpp"
#include "loopgas/model.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace loopgas {

struct Loop {
  int type = 0;
  BridgePath path;  // closed: first and last samples coincide

  Loop() = default;
  Loop(int t, BridgePath p) : type(t), path(std::move(p)) {}
  Point anchor() const { return path.start(); }
  int k() const { return path.k; }
  bool closed() const { return path.samples.col(0) == path.samples.col(path.last()); }
};

// Open paths of one type: path l runs from starts[l] to ends[permutation[l]].
struct OpenPathSystem {
  int type = 0;
  std::vector<Point> starts, ends;
  std::vector<int> permutation;
  std::vector<BridgePath> paths;

  bool consistent() const;
};

struct LoopConfig {
  std::vector<Loop> loops;
  std::optional<ExternalCC> external;
  Box home;

  std::size_t size() const { return loops.size(); }
  std::size_t count(int type) const;
  bool anchors_in_home() const;
};

// Non-owning view of a typed path; the common currency of the indicator and energy functions.
struct PathRef {
  int type = 0;
  const BridgePath* path = nullptr;
};

std::vector<PathRef> refs(const LoopConfig& c);
std::vector<PathRef> refs(std::span<const Loop> loops);
std::vector<PathRef> refs(std::span<const OpenPathSystem> systems);
std::vector<PathRef> join(std::vector<PathRef> a, const std::vector<PathRef>& b);

int functional_K(std::span<const PathRef> c, int type);
int functional_K(const LoopConfig& c, int type);
int functional_K(const OpenPathSystem& s);
// Product of multiplicities; double because it can exceed any integer type.
double functional_L(std::span<const PathRef> c, int type);
double functional_L(const LoopConfig& c, int type);
double log_functional_L(std::span<const PathRef> c, int type);

// 1 iff no path visits box0 at an integer multiple of beta strictly inside its time span.
bool chi_indicator(std::span<const PathRef> c, const Box& box0);
bool chi_indicator(const LoopConfig& c, const Box& box0);
// 1 iff every grid sample lies in the box.
bool alpha_indicator(std::span<const PathRef> c, const Box& box);
bool alpha_indicator(const LoopConfig& c, const Box& box);

// Leg-pair energies use the trapezoid rule on the S-grid, which coincides with the
// midpoint rule on staggered cells and is exact for the periodic loop integrand.
double self_energy(const BridgePath& p, int type, const ModelParams& m);
double pair_energy(const BridgePath& a, int ta, const BridgePath& b, int tb, const ModelParams& m);
double external_energy(const BridgePath& p, int type, const ExternalCC& ext, const ModelParams& m);

// h(a) + cross(a, b) + cross(a, ext); +inf on any hard-core hit. Throws on mixed S.
double energy_h(std::span<const PathRef> a, std::span<const PathRef> b, const ExternalCC* ext,
                const ModelParams& m);
double energy_h(const LoopConfig& c, const ModelParams& m);

// sum_j [K_j ln z_j - ln L_j] - h(c | external); -inf on hard-core hits or when
// box0_exclusion is given and chi fails.
double log_weight(const LoopConfig& c, const std::optional<Box>& box0_exclusion, const ModelParams& m);

// Versioned text dump using hexadecimal floats, exact on round trip.
void dump_config(std::ostream& os, const LoopConfig& c);
LoopConfig load_config(std::istream& is);

}  // namespace loopgas
