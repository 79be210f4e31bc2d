#include <doctest.h>

#include <sstream>

#include "viflow/mesh.hpp"

using namespace viflow;

namespace {

const char* kUnitSquareTwoTri = R"(# smallest valid mesh
viflow-mesh 1
nodes 4
0 0
1 0
1 1
0 1
triangles 2
0 1 2
0 2 3
boundary 4
0 1 1
1 2 1
2 3 1
3 0 1
)";

}  // namespace

TEST_CASE("unit square two-triangle mesh loads") {
  std::istringstream in(kUnitSquareTwoTri);
  Mesh m = parse_mesh(in, "square");
  CHECK(m.nodes.size() == 4);
  CHECK(m.triangles.size() == 2);
  CHECK(m.boundary.size() == 4);
  CHECK(m.loops.size() == 1);
  CHECK(m.loops[0].size() == 4);
}

TEST_CASE("double-tagged edge is rejected") {
  std::string txt = kUnitSquareTwoTri;
  txt.replace(txt.find("boundary 4"), 10, "boundary 5");
  txt += "0 1 2\n";
  std::istringstream in(txt);
  CHECK_THROWS_WITH_AS(parse_mesh(in, "square"), doctest::Contains("double-tagged"), Error);
}

TEST_CASE("untagged boundary edge is rejected") {
  std::string txt = kUnitSquareTwoTri;
  txt.replace(txt.find("boundary 4"), 10, "boundary 3");
  txt.erase(txt.rfind("3 0 1"));
  std::istringstream in(txt);
  CHECK_THROWS_WITH_AS(parse_mesh(in, "square"), doctest::Contains("untagged"), Error);
}

TEST_CASE("inverted triangle is rejected") {
  std::string txt = kUnitSquareTwoTri;
  txt.replace(txt.find("0 1 2\n"), 6, "0 2 1\n");
  std::istringstream in(txt);
  CHECK_THROWS_WITH_AS(parse_mesh(in, "square"), doctest::Contains("inverted"), Error);
}

TEST_CASE("parse errors carry line numbers") {
  std::string txt = "viflow-mesh 1\nnodes 2\n0 0\n";
  std::istringstream in(txt);
  CHECK_THROWS_WITH_AS(parse_mesh(in, "bad"), doctest::Contains("bad:2"), Error);
  std::string txt2 = "viflow-mesh 1\nnodes 3\n0 0\n1 zz\n0 1\n";
  std::istringstream in2(txt2);
  CHECK_THROWS_WITH_AS(parse_mesh(in2, "bad"), doctest::Contains("bad:4"), Error);
}

TEST_CASE("64-triangle disk has one closed loop") {
  Mesh m = make_disk_mesh(64, 1);
  CHECK(m.triangles.size() == 64);
  CHECK(m.loops.size() == 1);
  CHECK(m.loops[0].size() == 64);
  for (size_t t = 0; t < m.triangles.size(); ++t) CHECK(triangle_area(m, static_cast<int>(t)) > 0);
}

TEST_CASE("structured square mesher tags the four sides") {
  Mesh m = make_square_mesh(4, 8, 2, 9, 1);
  int count8 = 0, count1 = 0;
  for (const auto& e : m.boundary) {
    if (e.tag == 8) ++count8;
    if (e.tag == 1) ++count1;
  }
  CHECK(count8 == 4);
  CHECK(count1 == 4);
  CHECK(m.loops.size() == 1);
}

TEST_CASE("mesh write/load round trip") {
  Mesh m = make_disk_mesh(16, 2);
  std::string path = "viflow_roundtrip_disk.vm";
  write_mesh(m, path);
  Mesh m2 = load_mesh(path);
  REQUIRE(m2.nodes.size() == m.nodes.size());
  for (size_t i = 0; i < m.nodes.size(); ++i) CHECK((m2.nodes[i] - m.nodes[i]).norm() == 0.0);
  CHECK(m2.boundary.size() == m.boundary.size());
  std::remove(path.c_str());
}

TEST_CASE("annulus-like mesh: two loops, signed turning per loop") {
  // Square ring: outer [0,3]^2, inner hole [1,2]^2, eight triangles.
  Mesh m;
  m.nodes = {Vec2(0, 0), Vec2(3, 0), Vec2(3, 3), Vec2(0, 3),
             Vec2(1, 1), Vec2(2, 1), Vec2(2, 2), Vec2(1, 2)};
  m.triangles = {{0, 1, 5}, {0, 5, 4}, {1, 2, 6}, {1, 6, 5},
                 {2, 3, 7}, {2, 7, 6}, {3, 0, 4}, {3, 4, 7}};
  m.boundary = {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1},
                {5, 4, 1}, {6, 5, 1}, {7, 6, 1}, {4, 7, 1}};
  validate_mesh(m);
  CHECK(m.loops.size() == 2);
}
