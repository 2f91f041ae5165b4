#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "collusim/game.hpp"

using namespace collusim;

TEST_CASE("bertrand payoff table follows the split-demand rule") {
  const GameSpec g = make_bertrand(10, 0.1, 1.0, 0.0);
  auto idx = [&](double p) {
    for (int i = 0; i < g.num_actions(); ++i) {
      if (std::abs(g.action_value(i) - p) < 1e-9) return i;
    }
    FAIL("price not on grid");
    return -1;
  };
  CHECK(g.payoff(idx(0.5), idx(0.5)) == doctest::Approx(0.25));
  CHECK(g.payoff(idx(0.3), idx(0.5)) == doctest::Approx(0.3));
  CHECK(g.payoff(idx(0.7), idx(0.5)) == doctest::Approx(0.0));
  CHECK(g.floor_payoff() == doctest::Approx(0.0));
  CHECK(g.rank_of(0) == 0);  // lowest price is the strict NE
}

TEST_CASE("bertrand K=2 table") {
  const GameSpec g = make_bertrand(2, 0.1, 0.2, 0.0);
  CHECK(g.payoff(0, 0) == doctest::Approx(0.05));
  CHECK(g.payoff(0, 1) == doctest::Approx(0.1));
  CHECK(g.payoff(1, 0) == doctest::Approx(0.0));
  CHECK(g.payoff(1, 1) == doctest::Approx(0.1));
}

TEST_CASE("bertrand rejects bad orderings") {
  CHECK_THROWS(make_bertrand(10, 0.1, 1.0, 0.2));   // cost >= min_price
  CHECK_THROWS(make_bertrand(10, 0.0, 1.0, 0.0));   // min_price == cost
  CHECK_THROWS(make_bertrand(10, 1.1, 1.0, 0.0));   // min_price > wtp
  CHECK_THROWS(make_bertrand(1, 0.1, 1.0, 0.0));
}

TEST_CASE("prisoners dilemma construction and ordering guard") {
  const GameSpec g = make_prisoners_dilemma(0, 1, 2, 3);
  CHECK(g.floor_payoff() == doctest::Approx(0.0));
  CHECK(g.payoff(0, 0) == doctest::Approx(1.0));  // (D,D)
  CHECK(g.payoff(0, 1) == doctest::Approx(3.0));  // (D,C)
  CHECK(g.payoff(1, 0) == doctest::Approx(0.0));  // (C,D)
  CHECK(g.payoff(1, 1) == doctest::Approx(2.0));  // (C,C)
  CHECK(g.rank_of(0) == 0);                       // defect is the strict NE
  CHECK(check_assumptions(g).pass);
  CHECK_THROWS(make_prisoners_dilemma(0, 1, 2, 2));  // tie breaks strictness
}

TEST_CASE("mixed auction payment rule") {
  auto idx_of_bid = [](const GameSpec& g, double b) {
    for (int i = 0; i < g.num_actions(); ++i) {
      if (std::abs(g.action_value(i) - b) < 1e-9) return i;
    }
    return -1;
  };
  const GameSpec fpa = make_mixed_auction(10, 1.0, 1.0);
  CHECK(fpa.payoff(idx_of_bid(fpa, 0.3), idx_of_bid(fpa, 0.1)) == doctest::Approx(0.7));
  const GameSpec spa = make_mixed_auction(10, 1.0, 0.0);
  CHECK(spa.payoff(idx_of_bid(spa, 0.3), idx_of_bid(spa, 0.1)) == doctest::Approx(0.9));
  const GameSpec half = make_mixed_auction(10, 1.0, 0.5);
  CHECK(half.payoff(idx_of_bid(half, 0.4), idx_of_bid(half, 0.4)) == doctest::Approx(0.3));
  // Highest bid is the strict NE.
  CHECK(fpa.rank_of(9) == 0);
  CHECK(fpa.grid_of_rank(0) == 9);
  CHECK_THROWS(make_mixed_auction(10, 1.0, 1.5));
}

TEST_CASE("assumption checker passes the shipped constructors") {
  CHECK(check_assumptions(make_bertrand(10, 0.1, 1.0, 0.0)).pass);
  CHECK(check_assumptions(make_prisoners_dilemma(0, 1, 2, 3)).pass);
  for (double omega : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    CHECK(check_assumptions(make_mixed_auction(10, 1.0, omega)).pass);
  }
}

TEST_CASE("assumption checker catches a constructed 1.3 violation") {
  // A PD with u_DC < u_CC has no profitable downward deviation from (C,C).
  GameSpec bad(ActionGrid{{0.0, 1.0}}, {1.0, 1.5, 0.0, 2.0}, {0, 1}, GameLabel::kCustom, {});
  const auto report = check_assumptions(bad);
  CHECK_FALSE(report.pass);
  bool found_13 = false;
  for (const auto& v : report.violations) {
    if (v.id == "1.3") found_13 = true;
  }
  CHECK(found_13);
}

TEST_CASE("module invariants hold pairwise on constructed games") {
  const GameSpec games[] = {make_bertrand(10, 0.1, 1.0, 0.0),
                            make_bertrand(7, 0.2, 0.8, 0.1),
                            make_prisoners_dilemma(0, 1, 2, 3),
                            make_mixed_auction(10, 1.0, 0.5),
                            make_mixed_auction(6, 2.0, 0.25)};
  for (const auto& g : games) {
    const int k = g.num_actions();
    // Off-diagonal losers earn exactly the floor payoff.
    for (int r = 0; r < k; ++r) {
      for (int rp = 0; rp < r; ++rp) {
        CHECK(g.payoff_by_rank(r, rp) == doctest::Approx(g.floor_payoff()));
      }
    }
    // Diagonal strictly increases in rank.
    CHECK(g.floor_payoff() < g.payoff_by_rank(0, 0));
    for (int r = 1; r < k; ++r) {
      CHECK(g.payoff_by_rank(r - 1, r - 1) < g.payoff_by_rank(r, r));
    }
    // Some lower-ranked deviation weakly beats staying.
    for (int r = 1; r < k; ++r) {
      bool found = false;
      for (int rp = 0; rp < r; ++rp) {
        if (g.payoff_by_rank(rp, r) >= g.payoff_by_rank(r, r) - 1e-12) found = true;
      }
      CHECK(found);
    }
    // Payoffs nondecreasing in the opponent's rank.
    for (int r = 0; r < k; ++r) {
      for (int rp = 1; rp < k; ++rp) {
        CHECK(g.payoff_by_rank(r, rp) >= g.payoff_by_rank(r, rp - 1) - 1e-12);
      }
    }
  }
}

TEST_CASE("benchmark profits") {
  const auto [rn_b, rm_b] = benchmark_profits(make_bertrand(10, 0.1, 1.0, 0.0));
  CHECK(rn_b == doctest::Approx(0.1));
  CHECK(rm_b == doctest::Approx(1.0));
  const auto [rn_pd, rm_pd] = benchmark_profits(make_prisoners_dilemma(0, 1, 2, 3));
  CHECK(rn_pd == doctest::Approx(2.0));
  CHECK(rm_pd == doctest::Approx(4.0));
  for (double omega : {0.0, 0.5, 1.0}) {
    const auto [rn, rm] = benchmark_profits(make_mixed_auction(10, 1.0, omega));
    CHECK(rm >= rn - 1e-12);
  }
}

TEST_CASE("omega=1 auction is the Bertrand first-price game relabeled") {
  const GameSpec fpa = make_mixed_auction(10, 1.0, 1.0);
  const GameSpec bert = make_bertrand(10, 0.1, 1.0, 0.0);
  // Bid b earns what price p = 1 - b earns: grid index i maps to 9 - i.
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(fpa.action_value(i) - (1.0 - bert.action_value(9 - i))) < 1e-9);
    for (int j = 0; j < 10; ++j) {
      CHECK(fpa.payoff(i, j) == doctest::Approx(bert.payoff(9 - i, 9 - j)));
    }
  }
}

TEST_CASE("game JSON round-trip") {
  const GameSpec g = make_mixed_auction(5, 2.0, 0.3);
  const GameSpec back = GameSpec::from_json_string(g.to_json_string());
  CHECK(back.num_actions() == g.num_actions());
  CHECK(back.label() == g.label());
  for (int i = 0; i < g.num_actions(); ++i) {
    CHECK(back.action_value(i) == doctest::Approx(g.action_value(i)));
    CHECK(back.rank_of(i) == g.rank_of(i));
    for (int j = 0; j < g.num_actions(); ++j) {
      CHECK(back.payoff(i, j) == doctest::Approx(g.payoff(i, j)));
    }
  }
  CHECK(back.param("omega") == doctest::Approx(0.3));
}

TEST_CASE("custom game loads from the shared schema") {
  const std::string doc = R"({"label":"custom","grid":[0.0,1.0],
    "payoff":[1.0,3.0,0.0,2.0],"rank":[0,1],"params":{}})";
  const GameSpec g = GameSpec::from_json_string(doc);
  CHECK(check_assumptions(g).pass);
  CHECK_THROWS(GameSpec::from_json_string(
      R"({"label":"custom","grid":[1.0,0.5],"payoff":[0,0,0,0],"rank":[0,1]})"));
}
