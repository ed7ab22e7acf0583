#include <gtest/gtest.h>

#include "aggdiff/errors.hpp"
#include "aggdiff/grid.hpp"

using namespace aggdiff;

TEST(Grid, TableMeshCounts) {
  const Grid g = Grid::make_1d(6.0, 1e-2, 0.5e-4, 0.5);
  EXPECT_EQ(g.half_count(), 1200);
  EXPECT_EQ(g.active_half_count(), 600);
  EXPECT_EQ(g.steps(), 10000);
  EXPECT_EQ(g.nodes(), 2401);

  const Grid h = Grid::make_1d(6.0, 1.25e-2, 1e-4, 1.5);
  EXPECT_EQ(h.half_count(), 960);
  EXPECT_EQ(h.steps(), 15000);
}

TEST(Grid, DegenerateSingleCell) {
  const Grid g = Grid::make_1d(1.0, 2.0, 1.0, 1.0);
  EXPECT_EQ(g.half_count(), 1);
  EXPECT_EQ(g.steps(), 1);
  EXPECT_EQ(g.time_slices(), 2);
}

TEST(Grid, RejectsBadParameters) {
  EXPECT_THROW(Grid::make_1d(0.0, 0.1, 0.1, 1.0), InvalidParameter);
  EXPECT_THROW(Grid::make_1d(1.0, -0.1, 0.1, 1.0), InvalidParameter);
  EXPECT_THROW(Grid::make_1d(1.0, 0.1, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(Grid::make_1d(1.0, 3.0, 0.1, 1.0), InvalidParameter);
}

TEST(Grid, CoarseningTableFactors) {
  const Grid g = Grid::make_1d(6.0, 1e-2, 0.5e-4, 0.5);
  const Grid c = g.coarsened(6, 50);
  EXPECT_NEAR(c.step(), 0.06, 1e-15);
  EXPECT_NEAR(c.dt(), 2.5e-3, 1e-15);
  EXPECT_EQ(c.half_count(), 200);
  EXPECT_EQ(c.steps(), 200);
  EXPECT_EQ(g.coarsened(1, 1), g);

  const Grid m = Grid::make_1d(6.0, 1.25e-2, 1e-4, 1.5).coarsened(5, 2500);
  EXPECT_NEAR(m.step(), 0.0625, 1e-15);
  EXPECT_NEAR(m.dt(), 0.25, 1e-12);
}

TEST(Grid, CoarseningMisalignedThrows) {
  const Grid g = Grid::make_1d(6.0, 1e-2, 0.5e-4, 0.5);
  EXPECT_THROW(g.coarsened(7, 1), IndexAlignmentError);
  EXPECT_THROW(g.coarsened(1, 3), IndexAlignmentError);
  EXPECT_THROW(g.coarsened(0, 1), InvalidParameter);
}

TEST(Grid, NodesAndFlatIndexing2D) {
  const Grid g = Grid::make_2d(2.0, 2.0, 0.5, 0.5, 0.1, 0.2);
  EXPECT_EQ(g.dim(), 2);
  EXPECT_EQ(g.nodes(0), 17);
  EXPECT_EQ(g.nodes_per_slice(), 17u * 17u);
  EXPECT_EQ(g.flat(-8, -8), 0u);
  EXPECT_EQ(g.flat(8, 8), 17u * 17u - 1);
  EXPECT_TRUE(g.is_active(4, -4));
  EXPECT_FALSE(g.is_active(5, 0));
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25);
}

TEST(Grid, JsonRoundTrip) {
  const Grid g = Grid::make_2d(2.1, 2.1, 0.2, 0.2, 1e-3, 0.05);
  EXPECT_EQ(Grid::from_json(g.to_json()), g);
  const Grid h = Grid::make_1d(6.0, 0.06, 2.5e-3, 0.5);
  EXPECT_EQ(Grid::from_json(h.to_json()), h);
}

TEST(Grid, IndexOfRoundsToNearestNode) {
  const Grid g = Grid::make_1d(1.0, 0.1, 0.1, 1.0);
  EXPECT_EQ(g.index_of(0.31), 3);
  EXPECT_EQ(g.index_of(-0.49), -5);
  EXPECT_NEAR(g.x(g.index_of(0.7)), 0.7, 1e-15);
}
