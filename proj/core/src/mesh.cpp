#include "viflow/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace viflow {

namespace {

struct Tokenizer {
  std::istream& in;
  std::string name;
  int line = 0;
  std::vector<std::string> toks;
  size_t pos = 0;

  explicit Tokenizer(std::istream& s, std::string n) : in(s), name(std::move(n)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(name + ":" + std::to_string(line) + ": " + msg);
  }

  bool refill() {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      std::istringstream ls(raw);
      toks.clear();
      pos = 0;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (!toks.empty()) return true;
    }
    return false;
  }

  std::string next(const char* what) {
    if (pos >= toks.size() && !refill()) fail(std::string("expected ") + what + ", got end of file");
    return toks[pos++];
  }

  double number(const char* what) {
    std::string t = next(what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (...) {
      fail(std::string("expected ") + what + ", got '" + t + "'");
    }
    if (used != t.size()) fail(std::string("expected ") + what + ", got '" + t + "'");
    return v;
  }

  long integer(const char* what) {
    double v = number(what);
    long i = std::lround(v);
    if (i != v) fail(std::string("expected integer ") + what);
    return i;
  }
};

std::pair<int, int> key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

}  // namespace

double triangle_area(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  Vec2 e1 = mesh.nodes[tri[1]] - mesh.nodes[tri[0]];
  Vec2 e2 = mesh.nodes[tri[2]] - mesh.nodes[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

Mesh parse_mesh(std::istream& in, const std::string& stream_name) {
  Tokenizer tk(in, stream_name);
  if (tk.next("header") != "viflow-mesh") tk.fail("missing 'viflow-mesh' header");
  if (tk.integer("format version") != 1) tk.fail("unsupported mesh format version");

  Mesh mesh;
  if (tk.next("'nodes'") != "nodes") tk.fail("expected 'nodes'");
  long n = tk.integer("node count");
  if (n < 3) tk.fail("node count must be at least 3");
  mesh.nodes.reserve(n);
  for (long i = 0; i < n; ++i) {
    double x = tk.number("node x");
    double y = tk.number("node y");
    if (!std::isfinite(x) || !std::isfinite(y)) tk.fail("non-finite node coordinate");
    mesh.nodes.emplace_back(x, y);
  }

  if (tk.next("'triangles'") != "triangles") tk.fail("expected 'triangles'");
  long m = tk.integer("triangle count");
  if (m < 1) tk.fail("triangle count must be positive");
  mesh.triangles.reserve(m);
  for (long t = 0; t < m; ++t) {
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      long v = tk.integer("triangle node index");
      if (v < 0 || v >= n) tk.fail("triangle node index out of range");
      tri[k] = static_cast<int>(v);
    }
    mesh.triangles.push_back(tri);
  }

  if (tk.next("'boundary'") != "boundary") tk.fail("expected 'boundary'");
  long b = tk.integer("boundary edge count");
  if (b < 3) tk.fail("boundary edge count must be at least 3");
  mesh.boundary.reserve(b);
  for (long e = 0; e < b; ++e) {
    BoundaryEdge be;
    long a = tk.integer("boundary node index");
    long bb = tk.integer("boundary node index");
    long tag = tk.integer("boundary tag");
    if (a < 0 || a >= n || bb < 0 || bb >= n) tk.fail("boundary node index out of range");
    if (tag < 1 || tag > 11) tk.fail("boundary tag out of range 1..11");
    be.a = static_cast<int>(a);
    be.b = static_cast<int>(bb);
    be.tag = static_cast<int>(tag);
    mesh.boundary.push_back(be);
  }

  validate_mesh(mesh);
  return mesh;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file '" + path + "'");
  return parse_mesh(in, path);
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  char buf[80];
  out << "viflow-mesh 1\n";
  out << "nodes " << mesh.nodes.size() << "\n";
  for (const auto& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x(), p.y());
    out << buf;
  }
  out << "triangles " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "boundary " << mesh.boundary.size() << "\n";
  for (const auto& e : mesh.boundary) out << e.a << " " << e.b << " " << e.tag << "\n";
}

void validate_mesh(Mesh& mesh) {
  const int nv = static_cast<int>(mesh.nodes.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int v : mesh.triangles[t])
      if (v < 0 || v >= nv) throw Error("triangle " + std::to_string(t) + ": node index out of range");
    if (triangle_area(mesh, static_cast<int>(t)) <= 0.0)
      throw Error("inverted triangle " + std::to_string(t) + " (signed area not positive)");
  }

  // Edge incidence. A boundary edge must belong to exactly one triangle and
  // appear in the boundary list exactly once.
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  std::map<std::pair<int, int>, std::array<int, 2>> directed;  // CCW directed edge -> (tri, local)
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      edge_tris[key(a, b)].push_back(t);
      directed[{a, b}] = {t, k};
    }
  }

  std::map<std::pair<int, int>, int> listed;  // undirected edge -> boundary index
  mesh.owner_tri_.assign(mesh.boundary.size(), -1);
  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    auto& be = mesh.boundary[e];
    if (be.a == be.b) throw Error("boundary edge " + std::to_string(e) + ": degenerate (a == b)");
    auto k = key(be.a, be.b);
    auto it = edge_tris.find(k);
    if (it == edge_tris.end())
      throw Error("boundary edge " + std::to_string(e) + " (" + std::to_string(be.a) + "," +
                  std::to_string(be.b) + ") is not an edge of any triangle");
    if (it->second.size() != 1)
      throw Error("boundary edge " + std::to_string(e) + " (" + std::to_string(be.a) + "," +
                  std::to_string(be.b) + ") belongs to " + std::to_string(it->second.size()) +
                  " triangles, expected exactly one");
    auto prev = listed.find(k);
    if (prev != listed.end())
      throw Error("double-tagged edge: boundary edge (" + std::to_string(be.a) + "," +
                  std::to_string(be.b) + ") listed at entries " + std::to_string(prev->second) +
                  " and " + std::to_string(e));
    listed[k] = static_cast<int>(e);

    // Orient a->b to match the owning triangle's CCW traversal.
    if (directed.count({be.a, be.b})) {
      mesh.owner_tri_[e] = directed[{be.a, be.b}][0];
    } else {
      std::swap(be.a, be.b);
      mesh.owner_tri_[e] = directed[{be.a, be.b}][0];
    }
  }

  for (const auto& [k, tris] : edge_tris) {
    if (tris.size() == 1 && !listed.count(k))
      throw Error("untagged edge: mesh edge (" + std::to_string(k.first) + "," +
                  std::to_string(k.second) + ") lies on the boundary but is not in the boundary list");
    if (tris.size() > 2)
      throw Error("non-manifold edge (" + std::to_string(k.first) + "," + std::to_string(k.second) + ")");
  }

  // Traverse loops: each boundary vertex must have exactly one outgoing and
  // one incoming oriented edge.
  std::map<int, int> out_edge;
  std::map<int, int> in_count;
  for (size_t e = 0; e < mesh.boundary.size(); ++e) {
    const auto& be = mesh.boundary[e];
    if (out_edge.count(be.a))
      throw Error("open boundary: vertex " + std::to_string(be.a) +
                  " has more than two adjacent boundary edges");
    out_edge[be.a] = static_cast<int>(e);
    in_count[be.b]++;
  }
  for (const auto& [v, c] : in_count)
    if (c != 1 || !out_edge.count(v))
      throw Error("open boundary: vertex " + std::to_string(v) + " does not close a loop");

  mesh.loops.clear();
  std::vector<char> seen(mesh.boundary.size(), 0);
  for (size_t e0 = 0; e0 < mesh.boundary.size(); ++e0) {
    if (seen[e0]) continue;
    std::vector<int> loop;
    int e = static_cast<int>(e0);
    while (!seen[e]) {
      seen[e] = 1;
      loop.push_back(e);
      int v = mesh.boundary[e].b;
      auto it = out_edge.find(v);
      if (it == out_edge.end()) throw Error("open boundary at vertex " + std::to_string(v));
      e = it->second;
    }
    if (e != static_cast<int>(e0)) throw Error("boundary traversal did not close a loop");
    mesh.loops.push_back(std::move(loop));
  }
}

Mesh make_rect_mesh(int nx, int ny, double lx, double ly, int tag_bottom, int tag_right,
                    int tag_top, int tag_left) {
  if (nx < 1 || ny < 1) throw Error("make_rect_mesh: need at least one cell per direction");
  Mesh mesh;
  auto id = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.nodes.emplace_back(lx * i / nx, ly * j / ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      mesh.triangles.push_back({v00, v10, v11});
      mesh.triangles.push_back({v00, v11, v01});
    }
  for (int i = 0; i < nx; ++i) mesh.boundary.push_back({id(i, 0), id(i + 1, 0), tag_bottom});
  for (int j = 0; j < ny; ++j) mesh.boundary.push_back({id(nx, j), id(nx, j + 1), tag_right});
  for (int i = nx; i > 0; --i) mesh.boundary.push_back({id(i, ny), id(i - 1, ny), tag_top});
  for (int j = ny; j > 0; --j) mesh.boundary.push_back({id(0, j), id(0, j - 1), tag_left});
  validate_mesh(mesh);
  return mesh;
}

Mesh make_square_mesh(int n, int tag_bottom, int tag_right, int tag_top, int tag_left) {
  return make_rect_mesh(n, n, 1.0, 1.0, tag_bottom, tag_right, tag_top, tag_left);
}

Mesh make_disk_mesh(int segments, int rings, int tag) {
  if (segments < 3 || rings < 1) throw Error("make_disk_mesh: need segments >= 3, rings >= 1");
  Mesh mesh;
  mesh.nodes.emplace_back(0.0, 0.0);
  auto ring_id = [&](int k, int j) { return 1 + (k - 1) * segments + (j % segments); };
  for (int k = 1; k <= rings; ++k) {
    double r = static_cast<double>(k) / rings;
    for (int j = 0; j < segments; ++j) {
      double th = 2.0 * M_PI * j / segments;
      mesh.nodes.emplace_back(r * std::cos(th), r * std::sin(th));
    }
  }
  for (int j = 0; j < segments; ++j) mesh.triangles.push_back({0, ring_id(1, j), ring_id(1, j + 1)});
  for (int k = 1; k < rings; ++k)
    for (int j = 0; j < segments; ++j) {
      int i0 = ring_id(k, j), i1 = ring_id(k, j + 1);
      int o0 = ring_id(k + 1, j), o1 = ring_id(k + 1, j + 1);
      mesh.triangles.push_back({i0, o0, o1});
      mesh.triangles.push_back({i0, o1, i1});
    }
  for (int j = 0; j < segments; ++j)
    mesh.boundary.push_back({ring_id(rings, j), ring_id(rings, j + 1), tag});
  validate_mesh(mesh);
  return mesh;
}

void retag_boundary(Mesh& mesh, const std::function<int(const Vec2&)>& tag_of_midpoint) {
  for (auto& e : mesh.boundary) {
    Vec2 mid = 0.5 * (mesh.nodes[e.a] + mesh.nodes[e.b]);
    int tag = tag_of_midpoint(mid);
    if (tag < 1 || tag > 11) throw Error("retag_boundary: tag out of range 1..11");
    e.tag = tag;
  }
}

}  // namespace viflow
