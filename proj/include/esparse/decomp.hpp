#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esparse/graph.hpp"
#include "esparse/report.hpp"

namespace esparse {

enum class DecompKind { EffectiveResistance, Expander };

// Edge-disjoint subgraph with its certificate. `vertices` lists exactly the
// endpoints of `edges` (master edge ids); `phi` is the certified expansion
// for expander pieces and unused otherwise.
struct Piece {
  std::vector<int> vertices;
  std::vector<int> edges;
  double phi = 0.0;
  double wbar = 0.0;  // bucket floor: piece weights lie in (wbar, r*wbar]... see er_decomp
};

struct Decomposition {
  DecompKind kind = DecompKind::EffectiveResistance;
  std::vector<Piece> pieces;
  std::vector<int> cut_edges;  // master ids not covered by any piece
  double rho = 0.0;            // ER certificate: (max w)*(ER diameter) per piece
  double ratio = 0.0;          // weight ratio bound r per piece
  double coverage = 0.0;       // number of weight scales J
  double phi_min = 0.0;        // expander kind only
};

// Deterministic low-diameter partition. Lengths len and masked weights wm are
// indexed by position in eids. Guarantees, certified by construction:
//   - every region has radius <= d*ln(n+1) from its seed within the region's
//     induced subgraph (so diameter <= 2d*ln(n+1)),
//   - total weight of edges between regions <= 2 * (wm . len) / d.
// Seeds are the lowest-id uncovered vertices; ties in the ball growth break
// toward lower vertex id. Vertices not touched by eids become singletons.
struct RegionGrowResult {
  std::vector<int> label;        // region id per vertex, dense from 0
  int num_regions = 0;
  std::vector<double> radius;    // per region
  std::vector<int> cut_local;    // positions within eids crossing regions
  double cut_weight = 0.0;       // wm-total over cut_local
  double vol_total = 0.0;        // wm . len
};

RegionGrowResult region_grow(const Digraph& g, std::span<const int> eids,
                             std::span<const double> len, std::span<const double> wm,
                             double d);

// Convenience entry over all edges of g.
RegionGrowResult region_grow(const Digraph& g, std::span<const double> len,
                             std::span<const double> wm, double d);

// Effective-resistance decomposition: overestimated resistances as lengths,
// dyadic weight buckets (v/r, v], one region-growing pass per bucket with
// d = alpha / (2 v ln(n+1)) and alpha = 16 r n ln(n+1) / m. Pieces drop
// empty regions and trim vertex sets to edge endpoints. The certificate
// reported is rho = 8 r n ln(n+1) / m, ratio = r, coverage = number of
// buckets spanned.
Decomposition er_decomp(const Digraph& g, double r, double delta, std::uint64_t seed);

// Internal variant over an edge subset (weights w master-indexed); tolerates
// a disconnected support since resistances are only queried within
// components. n in the certificate formulas is g.n, m = |eids|.
Decomposition er_decomp_subset(const Digraph& g, std::span<const double> w,
                               std::span<const int> eids, double r, double delta,
                               std::uint64_t seed);

// Re-measures every certificate item from scratch: weight ratio per piece,
// exact-ER diameter times max weight vs rho (oracle scale), per-vertex piece
// coverage vs J, edge partition between pieces and cut, cut size <= m/2.
// Expander pieces re-check dense lambda_2 >= phi^2/2 instead of rho.
VerificationReport verify_decomposition(const Digraph& g, std::span<const double> w,
                                        const Decomposition& d);

}  // namespace esparse
