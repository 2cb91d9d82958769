#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tvcov/errors.hpp"
#include "tvcov/geometry.hpp"

using namespace tvcov;

namespace {

ConvexPolygon arena() { return ConvexPolygon::box(-2, 2, -2, 2); }

std::vector<Point> random_points(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(d(rng), d(rng));
  return pts;
}

bool same_vertex_set(const ConvexPolygon& a, const ConvexPolygon& b, double tol) {
  if (a.size() != b.size()) return false;
  for (const Point& v : a.vertices()) {
    const bool hit = std::any_of(b.vertices().begin(), b.vertices().end(),
                                 [&](const Point& w) { return (v - w).norm() <= tol; });
    if (!hit) return false;
  }
  return true;
}

}  // namespace

TEST(Geometry, BoxIsCounterClockwiseWithUnitNormals) {
  const auto sq = arena();
  ASSERT_EQ(sq.size(), 4u);
  EXPECT_NEAR(sq.area(), 16.0, 1e-12);
  for (const auto& h : sq.halfplanes()) EXPECT_NEAR(h.normal.norm(), 1.0, 1e-15);
  // Every vertex lies on exactly two halfplane boundaries.
  for (const Point& v : sq.vertices()) {
    int active = 0;
    for (const auto& h : sq.halfplanes()) active += std::abs(h.signed_distance(v)) <= 1e-9;
    EXPECT_EQ(active, 2);
  }
}

TEST(Geometry, FromVerticesAcceptsClockwiseAndDropsDuplicates) {
  auto p = ConvexPolygon::from_vertices({{0, 0}, {0, 1}, {0, 1}, {1, 1}, {1, 0.5}, {1, 0}});
  EXPECT_EQ(p.size(), 4u);
  EXPECT_NEAR(p.area(), 1.0, 1e-12);
  EXPECT_GT(oracle::shoelace_area(p.vertices()), 0.0);
}

TEST(Geometry, FromVerticesRejectsNonConvex) {
  EXPECT_THROW(ConvexPolygon::from_vertices({{0, 0}, {2, 0}, {1, 0.2}, {2, 2}, {0, 2}}), Error);
}

TEST(Geometry, TwoGeneratorsSplitAtBisector) {
  const std::vector<Point> gens{{-1, 0}, {1, 0}};
  const auto cells = voronoi_partition(gens, arena());
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_TRUE(same_vertex_set(cells[0], ConvexPolygon::box(-2, 0, -2, 2), 1e-12));
  EXPECT_TRUE(same_vertex_set(cells[1], ConvexPolygon::box(0, 2, -2, 2), 1e-12));
}

TEST(Geometry, SingleGeneratorOwnsArena) {
  const std::vector<Point> gens{{0.3, -0.7}};
  const auto cells = voronoi_partition(gens, arena());
  EXPECT_TRUE(same_vertex_set(cells[0], arena(), 1e-12));
}

TEST(Geometry, VoronoiErrors) {
  const std::vector<Point> coincident{{0, 0}, {0, 5e-10}};
  try {
    voronoi_partition(coincident, arena());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CoincidentGenerators);
  }
  const std::vector<Point> outside{{0, 0}, {2.5, 0}};
  try {
    voronoi_partition(outside, arena());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutsideArena);
  }
}

TEST(Geometry, VoronoiMatchesNearestNeighbourGrid) {
  std::mt19937_64 rng(11);
  const auto gens = random_points(rng, 20, -1.9, 1.9);
  const auto cells = voronoi_partition(gens, arena());
  int checked = 0, agree = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const Point q(-2 + 4 * (i + 0.5) / 100, -2 + 4 * (j + 0.5) / 100);
      const std::size_t best = oracle::nearest(gens, q);
      double second = 1e300;
      for (std::size_t g = 0; g < gens.size(); ++g) {
        if (g != best) second = std::min(second, (gens[g] - q).norm());
      }
      if (second - (gens[best] - q).norm() < 1e-6) continue;  // bisector band
      ++checked;
      agree += contains(cells[best], q, 1e-9);
    }
  }
  EXPECT_GT(checked, 9900);
  EXPECT_EQ(agree, checked);
}

TEST(Geometry, VoronoiMatchesIndependentClipper) {
  std::mt19937_64 rng(3);
  const auto gens = random_points(rng, 12, -1.9, 1.9);
  const auto cells = voronoi_partition(gens, arena());
  const auto box = arena().vertices();
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto ref = oracle::voronoi_cell({gens.begin(), gens.end()}, i, box);
    EXPECT_NEAR(cells[i].area(), oracle::shoelace_area(ref), 1e-10);
    EXPECT_LT((cells[i].area_centroid() - oracle::shoelace_centroid(ref)).norm(), 1e-10);
  }
}

TEST(Geometry, CellsTileArena) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gens = random_points(rng, 2 + trial, -1.99, 1.99);
    const auto cells = voronoi_partition(gens, arena());
    double total = 0;
    for (const auto& c : cells) total += c.area();
    EXPECT_NEAR(total, 16.0, 16.0 * 1e-8);
  }
}

TEST(Geometry, ClipOrderDoesNotMatter) {
  std::mt19937_64 rng(9);
  const auto gens = random_points(rng, 8, -1.9, 1.9);
  std::vector<Halfplane> bisectors;
  for (std::size_t j = 1; j < gens.size(); ++j) {
    Point n = gens[j] - gens[0];
    const double len = n.norm();
    bisectors.push_back({n / len, 0.5 * (gens[j].squaredNorm() - gens[0].squaredNorm()) / len});
  }
  ConvexPolygon ref = arena();
  for (const auto& h : bisectors) ref = ref.clip(h);
  for (int perm = 0; perm < 10; ++perm) {
    std::shuffle(bisectors.begin(), bisectors.end(), rng);
    ConvexPolygon p = arena();
    for (const auto& h : bisectors) p = p.clip(h);
    EXPECT_TRUE(same_vertex_set(p, ref, 1e-9));
  }
}

TEST(Geometry, ErodeSquare) {
  EXPECT_TRUE(same_vertex_set(erode(arena(), 0.5), ConvexPolygon::box(-1.5, 1.5, -1.5, 1.5), 1e-12));
  EXPECT_TRUE(same_vertex_set(erode(arena(), 0.0), arena(), 0.0));
  EXPECT_TRUE(erode(arena(), 2.5).is_empty());
  EXPECT_THROW(erode(arena(), -0.1), Error);
}

TEST(Geometry, ErodedHexagonKeepsClearance) {
  std::vector<Point> hex;
  for (int k = 0; k < 6; ++k) {
    const double a = k * M_PI / 3 + 0.1 * std::sin(3.0 * k);
    hex.emplace_back((1.0 + 0.2 * (k % 2)) * std::cos(a), (1.0 + 0.2 * (k % 2)) * std::sin(a));
  }
  const auto poly = ConvexPolygon::from_vertices(hex);
  const auto inner = erode(poly, 0.1);
  ASSERT_FALSE(inner.is_empty());
  // Sample boundary points of the original polygon.
  std::vector<Point> boundary;
  const auto& v = poly.vertices();
  for (std::size_t k = 0; k < v.size(); ++k) {
    for (int s = 0; s < 10000 / 6 + 1; ++s) {
      const double t = s / (10000.0 / 6 + 1);
      boundary.push_back((1 - t) * v[k] + t * v[(k + 1) % v.size()]);
    }
  }
  // Points of the eroded set: its vertices and edge samples.
  const auto& iv = inner.vertices();
  for (std::size_t k = 0; k < iv.size(); ++k) {
    for (int s = 0; s <= 20; ++s) {
      const Point q = iv[k] + (s / 20.0) * (iv[(k + 1) % iv.size()] - iv[k]);
      double dmin = 1e300;
      for (const Point& b : boundary) dmin = std::min(dmin, (q - b).norm());
      EXPECT_GE(dmin, 0.1 - 1e-9);
      EXPECT_GE(boundary_clearance(poly, q), 0.1 - 1e-9);
    }
  }
}

TEST(Geometry, ErosionIsMonotone) {
  std::mt19937_64 rng(21);
  const auto gens = random_points(rng, 6, -1.8, 1.8);
  const auto cells = voronoi_partition(gens, arena());
  for (const auto& c : cells) {
    for (double r1 : {0.0, 0.02, 0.05, 0.1}) {
      const auto big = erode(c, r1);
      const auto small = erode(c, r1 + 0.03);
      if (small.is_empty()) continue;
      for (const Point& v : small.vertices()) EXPECT_TRUE(contains(big, v, 1e-9));
    }
  }
}

TEST(Geometry, ContainsExamples) {
  EXPECT_TRUE(contains(arena(), Point(0, 0), 0));
  EXPECT_FALSE(contains(arena(), Point(2 + 1e-3, 0), 0));
  EXPECT_TRUE(contains(arena(), Point(2, 2), 1e-9));
  try {
    contains(ConvexPolygon::empty(), Point(0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPolygon);
  }
}

TEST(Geometry, MinPairwiseDistance) {
  const std::vector<Point> a{{0, 0}, {3, 4}};
  EXPECT_DOUBLE_EQ(min_pairwise_distance(a), 5.0);
  const std::vector<Point> b{{0, 0}, {1, 0}, {0, 1}};
  EXPECT_DOUBLE_EQ(min_pairwise_distance(b), 1.0);
  std::mt19937_64 rng(1);
  const auto c = random_points(rng, 10, -2, 2);
  double ref = 1e300;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) ref = std::min(ref, (c[i] - c[j]).norm());
  EXPECT_DOUBLE_EQ(min_pairwise_distance(c), ref);
  const std::vector<Point> one{{0, 0}};
  try {
    min_pairwise_distance(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewAgents);
  }
}

TEST(Geometry, GeneratorMembershipUnderSeparation) {
  const double r_max = 0.055, eps = 0.005;
  std::mt19937_64 rng(17);
  int configs = 0;
  while (configs < 200) {
    const auto gens = random_points(rng, 5, -1.9, 1.9);
    if (min_pairwise_distance(gens) < 2 * (r_max + eps)) continue;
    ++configs;
    const auto cells = voronoi_partition(gens, arena());
    for (std::size_t i = 0; i < gens.size(); ++i) {
      // Generators within R_max + eps of the arena edge are outside the
      // eroded arena itself, so only the inter-agent part is asserted there.
      if (boundary_clearance(arena(), gens[i]) >= r_max + eps) {
        const auto tight = erode(cells[i], r_max + eps);
        ASSERT_FALSE(tight.is_empty());
        EXPECT_TRUE(contains(tight, gens[i], 1e-9));
      }
      std::uniform_real_distribution<double> ang(0, 2 * M_PI);
      for (int s = 0; s < 20; ++s) {
        const double a = ang(rng);
        const Point q = gens[i] + eps * Point(std::cos(a), std::sin(a));
        if (contains(arena(), q)) EXPECT_TRUE(contains(cells[i], q, 1e-9));
      }
    }
  }
}

TEST(Geometry, PartitionSequenceNesting) {
  std::mt19937_64 rng(8);
  std::vector<std::vector<Point>> pos;
  for (int k = 0; k < 5; ++k) {
    std::vector<Point> row;
    while (true) {
      row = random_points(rng, 4, -1.8, 1.8);
      if (min_pairwise_distance(row) > 0.3) break;
    }
    pos.push_back(row);
  }
  const auto seq = build_partition_sequence(pos, arena(), 0.055, 0.005);
  ASSERT_EQ(seq.horizon(), 5u);
  ASSERT_EQ(seq.agents(), 4u);
  for (std::size_t k = 0; k < seq.horizon(); ++k) {
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      total += seq.cells[k][i].area();
      for (const Point& v : seq.interior[k][i].vertices()) EXPECT_TRUE(contains(seq.eroded[k][i], v, 1e-9));
      for (const Point& v : seq.eroded[k][i].vertices()) EXPECT_TRUE(contains(seq.cells[k][i], v, 1e-9));
    }
    EXPECT_NEAR(total, 16.0, 16e-8);
  }
  const auto slice = slice_for_agent(seq, 2);
  EXPECT_EQ(slice.horizon(), 5u);
  EXPECT_TRUE(same_vertex_set(slice.cells[3], seq.cells[3][2], 0.0));
}

TEST(Geometry, JsonRoundTrip) {
  const auto p = ConvexPolygon::from_vertices({{0, 0}, {1, 0}, {1.5, 1}, {0.2, 1.3}});
  const auto q = polygon_from_json(polygon_to_json(p));
  EXPECT_TRUE(same_vertex_set(p, q, 0.0));
  EXPECT_TRUE(polygon_from_json("[]").is_empty());
}
