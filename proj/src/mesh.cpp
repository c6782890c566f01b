#include "auxcell/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>

#include "auxcell/errors.hpp"

namespace auxcell {

LatticeBasis LatticeBasis::from_primitives(const Vec2& a1, const Vec2& a2) {
  const double det = a1.x() * a2.y() - a1.y() * a2.x();
  if (std::abs(det) <= 0.0) throw ConfigError("lattice vectors are linearly dependent");
  LatticeBasis lb;
  lb.a1 = a1;
  lb.a2 = a2;
  // B = 2*pi*A^{-T} with A = [a1 a2] column-wise.
  const double f = 2.0 * std::numbers::pi / det;
  lb.b1 = f * Vec2(a2.y(), -a2.x());
  lb.b2 = f * Vec2(-a1.y(), a1.x());
  return lb;
}

double LatticeBasis::min_period() const {
  double best = std::numeric_limits<double>::max();
  for (int c1 = -1; c1 <= 1; ++c1)
    for (int c2 = -1; c2 <= 1; ++c2) {
      if (c1 == 0 && c2 == 0) continue;
      best = std::min(best, (c1 * a1 + c2 * a2).norm());
    }
  return best;
}

CellShape parse_shape(const std::string& name) {
  if (name == "square") return CellShape::Square;
  if (name == "parallelogram") return CellShape::Parallelogram;
  if (name == "hexagon") return CellShape::Hexagon;
  throw ConfigError("unknown cell shape '" + name + "'");
}

std::string shape_name(CellShape s) {
  switch (s) {
    case CellShape::Square: return "square";
    case CellShape::Parallelogram: return "parallelogram";
    case CellShape::Hexagon: return "hexagon";
  }
  return "?";
}

namespace {

struct NodeGrid {
  std::vector<Vec2> X;
  std::vector<std::array<int, 4>> conn;
  std::map<std::pair<long long, long long>, int> index;

  // Welds coincident nodes from the rhombus blocks of the hexagon mesh.
  // Seam nodes are generated by identical arithmetic in both blocks, so a
  // tol-quantized key is sufficient to identify them.
  int add_node(const Vec2& p, double tol) {
    const std::pair<long long, long long> key{std::llround(p.x() / tol),
                                              std::llround(p.y() / tol)};
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(X.size()));
    if (inserted) X.push_back(p);
    return it->second;
  }
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int i, int j) {
    i = find(i);
    j = find(j);
    if (i != j) parent[std::max(i, j)] = std::min(i, j);
  }
};

double quad_area(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3) {
  auto cross = [](const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); };
  return 0.5 * (cross(p0, p1) + cross(p1, p2) + cross(p2, p3) + cross(p3, p0));
}

// Boundary nodes = nodes on element edges that appear exactly once.
std::vector<char> boundary_flags(const NodeGrid& g) {
  std::map<std::pair<int, int>, int> edgeCount;
  for (const auto& e : g.conn) {
    for (int k = 0; k < 4; ++k) {
      int a = e[k], b = e[(k + 1) % 4];
      if (a > b) std::swap(a, b);
      ++edgeCount[{a, b}];
    }
  }
  std::vector<char> onb(g.X.size(), 0);
  for (const auto& [edge, count] : edgeCount) {
    if (count == 1) onb[edge.first] = onb[edge.second] = 1;
  }
  return onb;
}

}  // namespace

RveMesh build_mesh(CellShape shape, int resolution, double cellSize, double angleDeg) {
  if (resolution < 2) throw ConfigError("mesh resolution must be >= 2");
  if (cellSize <= 0.0) throw ConfigError("cell size must be positive");

  const int n = resolution;
  const double tol = 1e-9 * cellSize;
  NodeGrid g;
  Vec2 a1, a2;

  if (shape == CellShape::Square || shape == CellShape::Parallelogram) {
    double ang = shape == CellShape::Square ? 90.0 : angleDeg;
    if (!(ang > 0.0 && ang < 180.0))
      throw ConfigError("parallelogram angle must be in (0, 180) degrees");
    const double rad = ang * std::numbers::pi / 180.0;
    a1 = Vec2(cellSize, 0.0);
    a2 = cellSize * Vec2(std::cos(rad), std::sin(rad));
    g.X.reserve(static_cast<size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        g.X.push_back((double(i) / n) * a1 + (double(j) / n) * a2);
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        g.conn.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  } else {
    // Regular hexagon of edge length cellSize, split into the three rhombi
    // spanned by adjacent even vertices; each rhombus carries an n x n grid.
    const double s = cellSize;
    auto vtx = [s](int k) {
      const double a = k * std::numbers::pi / 3.0;
      return Vec2(s * std::cos(a), s * std::sin(a));
    };
    const Vec2 O = Vec2::Zero();
    const std::array<std::pair<Vec2, Vec2>, 3> rhombi = {
        std::make_pair(vtx(0), vtx(2)), std::make_pair(vtx(2), vtx(4)),
        std::make_pair(vtx(4), vtx(0))};
    for (const auto& [e1, e2] : rhombi) {
      std::vector<int> ids((n + 1) * (n + 1));
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
          ids[j * (n + 1) + i] =
              g.add_node(O + (double(i) / n) * e1 + (double(j) / n) * e2, tol);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          g.conn.push_back({ids[j * (n + 1) + i], ids[j * (n + 1) + i + 1],
                            ids[(j + 1) * (n + 1) + i + 1], ids[(j + 1) * (n + 1) + i]});
    }
    a1 = vtx(0) - vtx(4);  // s*(3/2,  sqrt(3)/2)
    a2 = vtx(0) - vtx(2);  // s*(3/2, -sqrt(3)/2)
  }

  RveMesh mesh;
  mesh.shape = shape;
  mesh.resolution = resolution;
  mesh.cellSize = cellSize;
  mesh.angleDeg = shape == CellShape::Square ? 90.0 : angleDeg;
  mesh.lattice = LatticeBasis::from_primitives(a1, a2);

  // Shift the geometric centroid to the origin.
  Vec2 c = Vec2::Zero();
  double area = 0.0;
  for (const auto& e : g.conn) {
    const double a = quad_area(g.X[e[0]], g.X[e[1]], g.X[e[2]], g.X[e[3]]);
    area += a;
    c += a * 0.25 * (g.X[e[0]] + g.X[e[1]] + g.X[e[2]] + g.X[e[3]]);
  }
  c /= area;
  for (auto& p : g.X) p -= c;

  mesh.X = g.X;
  mesh.conn = g.conn;

  // Periodic pairing: boundary nodes equivalent under lattice translations
  // collapse to one master each; corner classes yield a single master with
  // all other corners paired to it.
  const auto onb = boundary_flags(g);
  std::vector<int> bnodes;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (onb[i]) bnodes.push_back(i);

  UnionFind uf(mesh.n_nodes());
  for (int bi : bnodes) {
    for (int c1 = -1; c1 <= 1; ++c1)
      for (int c2 = -1; c2 <= 1; ++c2) {
        if (c1 == 0 && c2 == 0) continue;
        const Vec2 p = mesh.X[bi] + double(c1) * a1 + double(c2) * a2;
        for (int bj : bnodes) {
          if (bj != bi && (mesh.X[bj] - p).norm() < 10 * tol) uf.unite(bi, bj);
        }
      }
  }

  std::map<int, std::vector<int>> classes;
  for (int bi : bnodes) classes[uf.find(bi)].push_back(bi);

  Mat2 A;
  A.col(0) = a1;
  A.col(1) = a2;
  const Mat2 Ainv = A.inverse();
  for (auto& [master, members] : classes) {
    std::sort(members.begin(), members.end());
    const int neg = members.front();
    for (size_t k = 1; k < members.size(); ++k) {
      const int pos = members[k];
      const Vec2 d = mesh.X[pos] - mesh.X[neg];
      const Vec2 cf = Ainv * d;
      const double c1 = std::round(cf.x()), c2 = std::round(cf.y());
      const Vec2 L = c1 * a1 + c2 * a2;
      if ((d - L).norm() > 100 * tol || (c1 == 0 && c2 == 0))
        throw ConfigError("periodic pairing failed: boundary node without integer translation");
      mesh.X[pos] = mesh.X[neg] + L;  // snap so X+ = X- + L holds exactly
      mesh.pairs.push_back({neg, pos, L});
    }
  }
  if (mesh.pairs.empty()) throw ConfigError("no periodic pairs identified");

  // Element volumes and centroids (all elements are parallelograms).
  mesh.v_e.resize(mesh.n_ele());
  mesh.centroid.resize(mesh.n_ele());
  for (int e = 0; e < mesh.n_ele(); ++e) {
    const auto& q = mesh.conn[e];
    mesh.v_e[e] = quad_area(mesh.X[q[0]], mesh.X[q[1]], mesh.X[q[2]], mesh.X[q[3]]);
    if (mesh.v_e[e] <= 0.0) throw ConfigError("degenerate element in mesh construction");
    mesh.centroid[e] = 0.25 * (mesh.X[q[0]] + mesh.X[q[1]] + mesh.X[q[2]] + mesh.X[q[3]]);
  }

  switch (shape) {
    case CellShape::Square: mesh.V = cellSize * cellSize; break;
    case CellShape::Parallelogram:
      mesh.V = cellSize * cellSize * std::sin(mesh.angleDeg * std::numbers::pi / 180.0);
      break;
    case CellShape::Hexagon: mesh.V = 1.5 * std::sqrt(3.0) * cellSize * cellSize; break;
  }

  // Fixed node: the node nearest the centroid (interior by construction).
  int best = 0;
  double bestd = std::numeric_limits<double>::max();
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double d = mesh.X[i].squaredNorm();
    if (d < bestd - tol) {
      bestd = d;
      best = i;
    }
  }
  mesh.fixedNode = best;
  return mesh;
}

void constraint_matrices(const RveMesh& mesh, SpMat& M1, SpMat& M2) {
  const int N = mesh.n_dofs();
  const int m = mesh.n_pairs();
  M1.resize(2, N);
  M2.resize(2 * m, N);
  std::vector<Triplet> t1, t2;
  t1.emplace_back(0, 2 * mesh.fixedNode, 1.0);
  t1.emplace_back(1, 2 * mesh.fixedNode + 1, 1.0);
  for (int q = 0; q < m; ++q) {
    const auto& p = mesh.pairs[q];
    for (int d = 0; d < 2; ++d) {
      t2.emplace_back(2 * q + d, 2 * p.pos + d, 1.0);
      t2.emplace_back(2 * q + d, 2 * p.neg + d, -1.0);
    }
  }
  M1.setFromTriplets(t1.begin(), t1.end());
  M2.setFromTriplets(t2.begin(), t2.end());
}

MatX pair_translation_matrix(const RveMesh& mesh) {
  const int m = mesh.n_pairs();
  MatX LM = MatX::Zero(2 * m, 4);
  for (int q = 0; q < m; ++q) {
    const Vec2& L = mesh.pairs[q].L;
    LM(2 * q, 0) = L.x();
    LM(2 * q, 2) = L.y();
    LM(2 * q + 1, 1) = L.x();
    LM(2 * q + 1, 3) = L.y();
  }
  return LM;
}

void write_vtk(const std::string& path, const RveMesh& mesh,
               const std::vector<std::pair<std::string, VecX>>& cellFields,
               const VecX* deformed) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  std::fprintf(f, "# vtk DataFile Version 3.0\nauxcell unit cell\nASCII\n");
  std::fprintf(f, "DATASET UNSTRUCTURED_GRID\n");
  std::fprintf(f, "POINTS %d double\n", mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    double x = mesh.X[i].x(), y = mesh.X[i].y();
    if (deformed) {
      x += (*deformed)[2 * i];
      y += (*deformed)[2 * i + 1];
    }
    std::fprintf(f, "%.17g %.17g 0\n", x, y);
  }
  std::fprintf(f, "CELLS %d %d\n", mesh.n_ele(), 5 * mesh.n_ele());
  for (const auto& e : mesh.conn)
    std::fprintf(f, "4 %d %d %d %d\n", e[0], e[1], e[2], e[3]);
  std::fprintf(f, "CELL_TYPES %d\n", mesh.n_ele());
  for (int e = 0; e < mesh.n_ele(); ++e) std::fprintf(f, "9\n");
  if (!cellFields.empty()) {
    std::fprintf(f, "CELL_DATA %d\n", mesh.n_ele());
    for (const auto& [name, values] : cellFields) {
      std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", name.c_str());
      for (int e = 0; e < mesh.n_ele(); ++e) std::fprintf(f, "%.17g\n", values[e]);
    }
  }
  std::fclose(f);
}

}  // namespace auxcell
