#include "auxcell/filter.hpp"

#include <cmath>
#include <vector>

#include "auxcell/errors.hpp"
#include "auxcell/parallel.hpp"

namespace auxcell {

double periodic_distance(const Vec2& Xi, const Vec2& Xj, const LatticeBasis& lattice) {
  double best = std::numeric_limits<double>::max();
  for (int c1 = -1; c1 <= 1; ++c1)
    for (int c2 = -1; c2 <= 1; ++c2) {
      const Vec2 d = Xi - (Xj + double(c1) * lattice.a1 + double(c2) * lattice.a2);
      best = std::min(best, d.norm());
    }
  return best;
}

FilterMatrix build_filter(const RveMesh& mesh, double rmin, int threads) {
  if (rmin <= 0.0) throw ConfigError("filter radius must be positive");
  if (rmin >= 0.5 * mesh.lattice.min_period())
    throw ConfigError("filter radius exceeds half the minimum lattice period");

  const int n = mesh.n_ele();
  std::vector<std::vector<Triplet>> rows(n);
  par_for(n, threads, [&](std::int64_t i) {
    auto& row = rows[i];
    double wsum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = periodic_distance(mesh.centroid[i], mesh.centroid[j], mesh.lattice);
      if (d < rmin) {
        const double w = (rmin - d) * mesh.v_e[j];
        row.emplace_back(static_cast<int>(i), j, w);
        wsum += w;
      }
    }
    for (auto& t : row) t = Triplet(t.row(), t.col(), t.value() / wsum);
  });

  std::vector<Triplet> trips;
  for (const auto& row : rows) trips.insert(trips.end(), row.begin(), row.end());

  FilterMatrix fm;
  fm.rmin = rmin;
  fm.W.resize(n, n);
  fm.W.setFromTriplets(trips.begin(), trips.end());
  return fm;
}

}  // namespace auxcell
