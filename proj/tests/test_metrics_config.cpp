#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "atrium/config.hpp"
#include "atrium/memory_model.hpp"
#include "atrium/metrics.hpp"
#include "test_helpers.hpp"

using namespace atrium;
using Catch::Matchers::ContainsSubstring;

namespace {

Trajectory straight_line(int n) {
  Trajectory t;
  for (int i = 0; i < n; ++i) {
    Se3 p;
    p.t = Vec3(0.5 * i, 0, 0);
    t.poses.push_back(p);
    t.timestamps.push_back(0.1 * i);
  }
  return t;
}

}  // namespace

TEST_CASE("ate is zero on itself and invariant to a common motion") {
  std::mt19937_64 rng(97);
  Trajectory gt = straight_line(20);
  REQUIRE(ate_rmse(gt, gt) == 0.0);

  Se3 M = testing::random_se3(rng);
  Trajectory moved = gt;
  for (Se3& p : moved.poses) p = M * p;
  REQUIRE(ate_rmse(moved, gt) < 1e-12);

  Trajectory bent = gt;
  bent.poses[10].t += Vec3(0, 0.3, 0);
  REQUIRE(ate_rmse(bent, gt) == Catch::Approx(std::sqrt(0.09 / 20)));

  Trajectory shorter = straight_line(19);
  REQUIRE_THROWS_AS(ate_rmse(shorter, gt), std::invalid_argument);
  REQUIRE(ate_rmse(Trajectory{}, Trajectory{}) == 0.0);
}

TEST_CASE("room overlap scores match the hand computation") {
  std::vector<std::set<size_t>> est = {{1, 2, 3, 4}, {5, 6}};
  std::vector<std::set<size_t>> gt = {{1, 2, 3}, {4, 5, 6}};
  RoomPr pr = room_pr(est, gt);
  REQUIRE(pr.precision == Catch::Approx((3.0 / 4 + 2.0 / 2) / 2));
  REQUIRE(pr.recall == Catch::Approx((3.0 / 3 + 2.0 / 3) / 2));

  // identical partitions are perfect regardless of listing order
  RoomPr perfect = room_pr({{5, 6}, {1, 2, 3, 4}}, {{1, 2, 3, 4}, {5, 6}});
  REQUIRE(perfect.precision == 1.0);
  REQUIRE(perfect.recall == 1.0);

  std::vector<std::set<size_t>> swapped = {est[1], est[0]};
  RoomPr again = room_pr(swapped, gt);
  REQUIRE(again.precision == Catch::Approx(pr.precision));
  REQUIRE(again.recall == Catch::Approx(pr.recall));

  REQUIRE_THROWS_AS(room_pr({}, gt), std::invalid_argument);
  REQUIRE_THROWS_AS(room_pr(est, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(room_pr({{1}, {}}, gt), std::invalid_argument);
}

TEST_CASE("place error averages nearest-skeleton distances") {
  std::map<size_t, GvdVoxel> gvd;
  GvdVoxel a, b;
  a.position = Vec3(0, 0, 0);
  b.position = Vec3(2, 0, 0);
  gvd[0] = a;
  gvd[1] = b;
  REQUIRE(place_position_error({Vec3(0, 0, 0), Vec3(2, 0, 0)}, gvd) == 0.0);
  double err = place_position_error({Vec3(0.4, 0, 0), Vec3(1.6, 0.3, 0)}, gvd);
  REQUIRE(err == Catch::Approx((0.4 + 0.5) / 2));
  REQUIRE(place_position_error({}, gvd) == 0.0);
  REQUIRE_THROWS_AS(place_position_error({Vec3(0, 0, 0)}, {}), std::invalid_argument);
}

TEST_CASE("object recovery is scored by label and proximity") {
  std::vector<ObjectSample> gt = {{Vec3(0, 0, 0), 2}, {Vec3(5, 0, 0), 3}, {Vec3(9, 0, 0), 3}};
  std::vector<ObjectSample> est = {
      {Vec3(0.3, 0, 0), 2},   // matches the first
      {Vec3(5, 8, 0), 3},     // right label, too far
      {Vec3(9, 0, 0), 4},     // right spot, wrong label
  };
  ObjectMetrics m = object_metrics(est, gt, 0.5);
  REQUIRE(m.found_pct == Catch::Approx(100.0 / 3));
  REQUIRE(m.correct_pct == Catch::Approx(100.0 / 3));

  ObjectMetrics no_gt = object_metrics(est, {}, 0.5);
  REQUIRE_FALSE(no_gt.found_pct.has_value());
  REQUIRE(no_gt.correct_pct.has_value());
  REQUIRE(*no_gt.correct_pct == 0.0);
  ObjectMetrics no_est = object_metrics({}, gt, 0.5);
  REQUIRE_FALSE(no_est.correct_pct.has_value());
  REQUIRE(*no_est.found_pct == 0.0);
  REQUIRE_THROWS_AS(object_metrics(est, gt, 0.0), std::invalid_argument);
}

TEST_CASE("storage models count the reference apartment exactly") {
  World w = apartment_fixture();
  VoxelGrid g = rasterize(w, 0.5);
  REQUIRE(g.num_cells() == 336);
  REQUIRE(w.label_layers() == 5);
  REQUIRE(w.grouping_counts() == std::vector<uint64_t>{13, 4, 1, 1});

  REQUIRE(memory_flat(g.num_cells(), w.label_layers()) == SymbolCount{1680, 0});
  REQUIRE(memory_hierarchical(g.num_cells(), w.grouping_counts()) == SymbolCount{355, 354});
  REQUIRE(memory_hierarchical(0, {}) == SymbolCount{0, 0});

  SceneGraph sg = testing::object_room_fixture();
  REQUIRE(memory_compressed(sg) == SymbolCount{sg.num_nodes(), sg.num_edges()});
}

TEST_CASE("configs parse sections, comments and whitespace") {
  Config c = Config::parse(
      "top = 1\n"
      "# comment\n"
      "; another\n"
      "[world]\n"
      "  rooms = 6  \n"
      "scale = 0.25\n"
      "\n"
      "[run]\n"
      "verbose = true\n"
      "name = west wing\n");
  REQUIRE(c.get_int("top", 0) == 1);
  REQUIRE(c.get_int("world.rooms", 0) == 6);
  REQUIRE(c.get_double("world.scale", 0) == 0.25);
  REQUIRE(c.get_bool("run.verbose", false));
  REQUIRE(c.get_string("run.name", "") == "west wing");
  REQUIRE(c.get_int("world.missing", 41) == 41);
  REQUIRE_FALSE(c.has("world.missing"));
  c.set("world.rooms", "9");
  REQUIRE(c.get_int("world.rooms", 0) == 9);
}

TEST_CASE("parse errors carry their line number") {
  REQUIRE_THROWS_WITH(Config::parse("a = 1\nnonsense\n"), ContainsSubstring("line 2"));
  REQUIRE_THROWS_WITH(Config::parse("[world\na = 1\n"),
                      ContainsSubstring("line 1: unterminated section"));
  REQUIRE_THROWS_WITH(Config::parse("a = 1\nb = 2\n = 3\n"),
                      ContainsSubstring("line 3: empty key"));
}

TEST_CASE("typed getters reject malformed values by key") {
  Config c = Config::parse("a = abc\nb = 1.5\nc = yes\nd = 1e\n");
  REQUIRE_THROWS_AS(c.get_double("a", 0), ConfigError);
  REQUIRE_THROWS_WITH(c.get_double("a", 0), ContainsSubstring("a"));
  REQUIRE_THROWS_AS(c.get_int("b", 0), ConfigError);
  REQUIRE_THROWS_AS(c.get_bool("c", false), ConfigError);
  REQUIRE_THROWS_WITH(c.get_bool("c", false), ContainsSubstring("yes"));
  REQUIRE_THROWS_AS(c.get_double("d", 0), ConfigError);
  REQUIRE(c.get_double("b", 0) == 1.5);
}

TEST_CASE("report serialization keeps shape and missing values") {
  MetricsReport r;
  r.object_found_pct = 80.0;
  // object_correct_pct left unset
  r.place_position_error_mean = 0.12;
  r.room_precision = 0.9;
  r.room_recall = 0.85;
  r.ate_rmse = 0.05;
  r.descriptor_p_at_k = {{1, 100.0}, {5, 60.0}};
  r.memory_symbols = {{"flat", 1680}, {"hierarchical", 355}, {"scene_graph", 42}};
  r.runtimes_ms = {{"frontend", 12.5}};

  auto j = nlohmann::json::parse(to_json(r));
  REQUIRE(j["object_found_pct"] == 80.0);
  REQUIRE(j["object_correct_pct"].is_null());
  REQUIRE(j["descriptor_p_at_k"]["1"] == 100.0);
  REQUIRE(j["descriptor_p_at_k"]["5"] == 60.0);
  REQUIRE(j["memory_symbols"]["flat"] == 1680);
  REQUIRE(j["runtimes_ms"]["frontend"] == 12.5);

  std::string csv = to_csv(r);
  auto nl = csv.find('\n');
  std::string head = csv.substr(0, nl);
  std::string row = csv.substr(nl + 1, csv.size() - nl - 2);
  REQUIRE(std::count(head.begin(), head.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
  REQUIRE_THAT(head, ContainsSubstring("p_at_1"));
  REQUIRE_THAT(head, ContainsSubstring("memory_flat"));
  REQUIRE_THAT(row, ContainsSubstring("NA"));  // the unset optional
}
