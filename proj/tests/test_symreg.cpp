#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "symgn/analysis.hpp"
#include "symgn/random.hpp"
#include "symgn/symreg.hpp"

using namespace symgn;

namespace {

const std::vector<std::string> kNames{"dx", "dy", "r", "m1", "m2"};

Expr var(const std::string& name) {
  const auto it = std::find(kNames.begin(), kNames.end(), name);
  REQUIRE(it != kNames.end());
  return Expr::variable(name, static_cast<int>(it - kNames.begin()));
}

Expr mul(Expr a, Expr b) { return Expr::binary(ExprKind::kMul, std::move(a), std::move(b)); }
Expr add(Expr a, Expr b) { return Expr::binary(ExprKind::kAdd, std::move(a), std::move(b)); }
Expr sub(Expr a, Expr b) { return Expr::binary(ExprKind::kSub, std::move(a), std::move(b)); }
Expr divide(Expr a, Expr b) { return Expr::binary(ExprKind::kDiv, std::move(a), std::move(b)); }

/// (0.46*m2*dy - 1.55*m2*dx) / (r*r), products left-associated.
Expr reference_expression() {
  Expr left = mul(mul(Expr::constant(0.46), var("m2")), var("dy"));
  Expr right = mul(mul(Expr::constant(1.55), var("m2")), var("dx"));
  return divide(sub(std::move(left), std::move(right)), mul(var("r"), var("r")));
}

/// Rows with geometrically consistent features.
RegressionData synthetic_rows(std::size_t n, std::uint64_t seed) {
  RegressionData data;
  data.feature_names = kNames;
  data.features = Tensor(n, kNames.size());
  data.target.assign(n, 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = data.features.data.data() + i * data.features.cols;
    const double dx = rng.uniform(-1.0, 1.0);
    const double dy = rng.uniform(-1.0, 1.0);
    row[0] = dx;
    row[1] = dy;
    row[2] = std::max(std::sqrt(dx * dx + dy * dy), 0.1);
    row[3] = rng.log_uniform(0.5, 2.0);
    row[4] = rng.log_uniform(0.5, 2.0);
  }
  return data;
}

GpConfig small_gp(std::uint64_t seed) {
  GpConfig config;
  config.population = 256;
  config.generations = 40;
  config.max_depth = 6;
  config.const_opt_iters = 1;
  config.seed = seed;
  return config;
}

std::set<ExprKind> kinds_of(const Expr& e) {
  std::set<ExprKind> kinds;
  std::function<void(const ExprNode&)> walk = [&](const ExprNode& node) {
    kinds.insert(node.kind);
    if (node.lhs) walk(*node.lhs);
    if (node.rhs) walk(*node.rhs);
  };
  walk(e.root());
  return kinds;
}

bool well_formed(const ExprNode& node) {
  if (is_binary(node.kind)) {
    return node.lhs && node.rhs && well_formed(*node.lhs) && well_formed(*node.rhs);
  }
  return !node.lhs && !node.rhs;
}

}  // namespace

TEST_SUITE("symreg expr") {
  TEST_CASE("eval: constants and variables") {
    CHECK(Expr::constant(3.5).eval(std::unordered_map<std::string, double>{}) == 3.5);
    const Expr ratio = divide(var("r"), var("r"));
    CHECK(ratio.eval({{"r", 2.0}}) == 1.0);
  }

  TEST_CASE("eval: the reference 1/r expression at a point") {
    const Expr e = reference_expression();
    const double got = e.eval({{"dx", 1.0}, {"dy", 0.0}, {"m2", 1.0}, {"r", 1.0}});
    CHECK(got == doctest::Approx(-1.55).epsilon(1e-15));
  }

  TEST_CASE("eval: unbound variable is an error") {
    CHECK_THROWS_AS(var("dx").eval({{"dy", 1.0}}), std::out_of_range);
  }

  TEST_CASE("eval: near-zero divisor poisons the sample") {
    const Expr e = divide(Expr::constant(1.0), var("dx"));
    CHECK(std::isnan(e.eval({{"dx", 1e-13}})));
    CHECK(e.eval({{"dx", 0.5}}) == 2.0);
  }

  TEST_CASE("eval: arithmetic identity (x + y) - y = x") {
    const Expr e = sub(add(var("dx"), var("dy")), var("dy"));
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      const double x = rng.uniform(-10.0, 10.0), y = rng.uniform(-10.0, 10.0);
      CHECK(std::abs(e.eval({{"dx", x}, {"dy", y}}) - x) < 1e-12);
    }
  }

  TEST_CASE("complexity: counting rule") {
    CHECK(divide(var("dx"), var("r")).complexity() == 3);
    CHECK(Expr::constant(1.0).complexity() == 1);
    CHECK(reference_expression().complexity() == 15);
  }

  TEST_CASE("infix round trip") {
    const Expr e = reference_expression();
    const std::string text = to_infix(e);
    const Expr parsed = parse_infix(text, kNames);
    CHECK(parsed.structurally_equal(e));
    CHECK(to_infix(parsed) == text);

    GpConfig config = small_gp(2);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const Expr sample = random_expr(kNames, config, rng);
      const Expr back = parse_infix(to_infix(sample), kNames);
      CHECK(back.structurally_equal(sample));
    }
  }

  TEST_CASE("infix parser accepts precedence without parentheses") {
    const Expr e = parse_infix("dx + dy * r", kNames);
    CHECK(e.eval({{"dx", 1.0}, {"dy", 2.0}, {"r", 3.0}}) == 7.0);
    CHECK_THROWS_AS(parse_infix("dx + unknown", kNames), std::invalid_argument);
    CHECK_THROWS_AS(parse_infix("dx +", kNames), std::invalid_argument);
  }
}

TEST_SUITE("symreg gp") {
  TEST_CASE("mutate and crossover keep expressions well-formed and capped") {
    GpConfig config = small_gp(4);
    config.max_depth = 5;
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      const Expr a = random_expr(kNames, config, rng);
      const Expr b = random_expr(kNames, config, rng);
      const Expr m = mutate(a, kNames, config, rng);
      const Expr c = crossover(a, b, config, rng);
      CHECK(well_formed(m.root()));
      CHECK(well_formed(c.root()));
      CHECK(m.depth() <= config.max_depth);
      CHECK(c.depth() <= config.max_depth);
      CHECK(c.complexity() <= a.complexity() + b.complexity());
    }
  }

  TEST_CASE("mutate and crossover are deterministic per seed") {
    GpConfig config = small_gp(6);
    const Expr a = reference_expression();
    const Expr b = divide(var("m2"), var("r"));
    Rng r1(7), r2(7);
    const Expr m1 = mutate(a, kNames, config, r1);
    const Expr m2 = mutate(a, kNames, config, r2);
    CHECK(m1.structurally_equal(m2));
    const Expr c1 = crossover(a, b, config, r1);
    const Expr c2 = crossover(a, b, config, r2);
    CHECK(c1.structurally_equal(c2));
  }

  TEST_CASE("self-crossover introduces no new node kinds") {
    GpConfig config = small_gp(8);
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
      const Expr a = random_expr(kNames, config, rng);
      const Expr c = crossover(a, a, config, rng);
      const auto parent_kinds = kinds_of(a);
      for (ExprKind kind : kinds_of(c)) {
        CHECK(parent_kinds.count(kind) == 1);
      }
    }
  }

  TEST_CASE("optimize_constants: recovers the slope of y = 2*dx") {
    RegressionData data = synthetic_rows(100, 10);
    for (std::size_t i = 0; i < data.target.size(); ++i) {
      data.target[i] = 2.0 * data.features(i, 0);
    }
    GpConfig config = small_gp(11);
    config.const_opt_iters = 3;
    const Expr start = mul(Expr::constant(1.0), var("dx"));
    const Expr tuned = optimize_constants(start, data, config);
    REQUIRE(tuned.root().lhs->kind == ExprKind::kConstant);
    CHECK(std::abs(tuned.root().lhs->value - 2.0) < 1e-6);
    CHECK(expr_mse(tuned, data) < 1e-10);
  }

  TEST_CASE("optimize_constants: constant-free expressions are returned unchanged") {
    const RegressionData data = synthetic_rows(50, 12);
    const Expr e = divide(var("dx"), var("r"));
    const Expr out = optimize_constants(e, data, small_gp(13));
    CHECK(out.structurally_equal(e));
  }

  TEST_CASE("optimize_constants: never increases the MSE") {
    GpConfig config = small_gp(14);
    Rng rng(15);
    RegressionData data = synthetic_rows(80, 16);
    for (std::size_t i = 0; i < data.target.size(); ++i) {
      data.target[i] = data.features(i, 4) * data.features(i, 0);
    }
    for (int i = 0; i < 50; ++i) {
      const Expr e = random_expr(kNames, config, rng);
      const double before = expr_mse(e, data);
      const double after = expr_mse(optimize_constants(e, data, config), data);
      if (std::isfinite(before)) CHECK(after <= before + 1e-15);
    }
  }

  TEST_CASE("fold_constants collapses constant subtrees") {
    const Expr e = mul(add(Expr::constant(2.0), Expr::constant(3.0)), var("dx"));
    const Expr folded = fold_constants(e);
    CHECK(folded.complexity() == 3);
    CHECK(folded.eval({{"dx", 2.0}}) == 10.0);
  }

  TEST_CASE("pareto front: dominated entries are dropped, mse strictly decreases") {
    ParetoFront front;
    const Expr c1 = Expr::constant(0.0);                  // complexity 1
    const Expr c3 = add(var("dx"), var("dy"));            // complexity 3
    const Expr c5 = add(add(var("dx"), var("dy")), var("r"));  // complexity 5

    front.offer(c3, 0.5);
    front.offer(c1, 1.0);
    front.offer(c5, 0.4);
    auto entries = front.sorted();
    REQUIRE(entries.size() == 3);
    CHECK(entries[0]->mse > entries[1]->mse);
    CHECK(entries[1]->mse > entries[2]->mse);

    // A complexity-5 entry that is worse than the complexity-3 one is refused.
    front.offer(c5, 0.6);
    CHECK(front.sorted().back()->mse == 0.4);
    // A better complexity-1 entry evicts the entries it now dominates (the
    // 0.5 at complexity 3) but keeps the strictly better 0.4 at complexity 5.
    front.offer(c1, 0.45);
    entries = front.sorted();
    REQUIRE(entries.size() == 2);
    CHECK(entries[0]->complexity == 1);
    CHECK(entries[0]->mse == 0.45);
    CHECK(entries[1]->complexity == 5);
    // Non-finite offers are ignored.
    front.offer(c1, std::numeric_limits<double>::infinity());
    CHECK(front.sorted().size() == 2);
  }

  TEST_CASE("pareto front: stored mse at a complexity never increases") {
    ParetoFront front;
    Rng rng(17);
    GpConfig config = small_gp(18);
    std::map<int, double> floor;
    for (int i = 0; i < 500; ++i) {
      const Expr e = random_expr(kNames, config, rng);
      const double mse = rng.uniform(0.0, 10.0);
      front.offer(e, mse);
      const int c = e.complexity();
      floor[c] = floor.count(c) ? std::min(floor[c], mse) : mse;
      double prev = std::numeric_limits<double>::infinity();
      for (const auto* entry : front.sorted()) {
        CHECK(entry->mse < prev);
        prev = entry->mse;
        CHECK(entry->mse <= floor[entry->complexity] + 1e-15);
      }
    }
  }

  TEST_CASE("select_best: worked example, scale invariance, singleton") {
    ParetoFront front;
    front.offer(Expr::constant(0.0), 1.0);                           // c = 1
    front.offer(add(var("dx"), var("dy")), 0.1);                     // c = 3
    front.offer(add(add(var("dx"), var("dy")), var("r")), 0.09);     // c = 5
    const Selection pick = select_best(front);
    CHECK(pick.complexity == 3);

    // Scores: (ln 1.0 - ln 0.1)/2 = 1.151..., (ln 0.1 - ln 0.09)/2 = 0.0527...
    CHECK((std::log(1.0) - std::log(0.1)) / 2.0 == doctest::Approx(1.1513).epsilon(1e-3));
    CHECK((std::log(0.1) - std::log(0.09)) / 2.0 ==
          doctest::Approx(0.05268).epsilon(1e-3));

    ParetoFront scaled;
    scaled.offer(Expr::constant(0.0), 10.0);
    scaled.offer(add(var("dx"), var("dy")), 1.0);
    scaled.offer(add(add(var("dx"), var("dy")), var("r")), 0.9);
    CHECK(select_best(scaled).complexity == 3);

    ParetoFront singleton;
    singleton.offer(Expr::constant(1.0), 0.5);
    CHECK(select_best(singleton).complexity == 1);
  }

  TEST_CASE("select_best: invariant under uniform scaling on random fronts") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
      ParetoFront base, scaled;
      const double factor = rng.log_uniform(0.01, 100.0);
      double mse = rng.uniform(1.0, 4.0);
      Expr e = var("dx");
      for (int c = 1; c <= 9; c += 2) {
        if (c > 1) e = add(std::move(e), var("dy"));
        mse *= rng.uniform(0.05, 0.9);  // strictly decreasing, above the log floor
        base.offer(e, mse);
        scaled.offer(e, mse * factor);
      }
      CHECK(select_best(base).complexity == select_best(scaled).complexity);
    }
  }

  TEST_CASE("search: planted target dx + r lands on the front") {
    RegressionData data = synthetic_rows(200, 20);
    for (std::size_t i = 0; i < data.target.size(); ++i) {
      data.target[i] = data.features(i, 0) + data.features(i, 2);
    }
    GpConfig config = small_gp(21);
    const ParetoFront front = search(data, config);
    bool found = false;
    for (const auto* entry : front.sorted()) {
      if (entry->complexity <= 3 && entry->mse < 1e-8) found = true;
    }
    CHECK(found);
  }

  TEST_CASE("search: identical seeds give identical fronts") {
    RegressionData data = synthetic_rows(60, 22);
    for (std::size_t i = 0; i < data.target.size(); ++i) {
      data.target[i] = data.features(i, 4) / data.features(i, 2);
    }
    GpConfig config = small_gp(23);
    config.population = 64;
    config.generations = 10;
    const ParetoFront a = search(data, config);
    const ParetoFront b = search(data, config);
    const auto ea = a.sorted(), eb = b.sorted();
    REQUIRE(ea.size() == eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
      CHECK(ea[i]->complexity == eb[i]->complexity);
      CHECK(ea[i]->mse == eb[i]->mse);
      CHECK(to_infix(ea[i]->expr) == to_infix(eb[i]->expr));
    }
  }

  TEST_CASE("search: rejects tiny datasets") {
    RegressionData data = synthetic_rows(5, 24);
    CHECK_THROWS_AS(search(data, small_gp(25)), std::invalid_argument);
    data.target.clear();
    data.features = Tensor(0, kNames.size());
    CHECK_THROWS_AS(search(data, small_gp(26)), std::invalid_argument);
  }

  TEST_CASE("search: planted linear force combination is recovered to the noise floor") {
    // Target (a*m2*dx + b*m2*dy)/r^2 plus noise; the search must get within
    // 10x of the noise floor.
    RegressionData data = synthetic_rows(300, 27);
    Rng noise(28);
    const double sigma = 1e-3;
    for (std::size_t i = 0; i < data.target.size(); ++i) {
      const double dx = data.features(i, 0), dy = data.features(i, 1);
      const double r = data.features(i, 2), m2 = data.features(i, 4);
      data.target[i] =
          (-1.5 * m2 * dx + 0.5 * m2 * dy) / (r * r) + sigma * noise.normal();
    }
    GpConfig config;
    config.population = 768;
    config.generations = 60;
    config.max_depth = 7;
    config.const_opt_iters = 1;
    config.seed = 29;
    const ParetoFront front = search(data, config);
    double best = std::numeric_limits<double>::infinity();
    for (const auto* entry : front.sorted()) best = std::min(best, entry->mse);
    CHECK(best < 10.0 * sigma * sigma);
  }

  TEST_CASE("front CSV and regression_from_csv round trip") {
    const MessageTable table = [&] {
      MessageTable t;
      t.dim = 2;
      t.message_dim = 2;
      t.columns = {"dx", "dy", "r", "m1", "m2", "e0", "e1", "fx", "fy"};
      t.values = Tensor(12, 9);
      Rng rng(30);
      for (auto& v : t.values.data) v = rng.uniform(-1.0, 1.0);
      return t;
    }();
    const auto dir = std::filesystem::temp_directory_path();
    const std::string messages_path = (dir / "symgn_test_reg.csv").string();
    save_message_table(table, messages_path);

    const RegressionData data = regression_from_csv(messages_path, 1);
    CHECK(data.feature_names == std::vector<std::string>{"dx", "dy", "r", "m1", "m2"});
    CHECK(data.features.rows == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(data.target[i] == table.values(i, 6));  // e1 column
    }
    CHECK_THROWS_AS(regression_from_csv(messages_path, 2), std::invalid_argument);

    ParetoFront front;
    front.offer(reference_expression(), 0.125);
    front.offer(Expr::constant(0.5), 2.0);
    const std::string front_path = (dir / "symgn_test_front.csv").string();
    save_front_csv(front, front_path);
    std::ifstream in(front_path);
    std::string header, line1, line2;
    std::getline(in, header);
    std::getline(in, line1);
    std::getline(in, line2);
    CHECK(header == "complexity,mse,expression");
    CHECK(line1.substr(0, 2) == "1,");
    CHECK(line2.find("m2") != std::string::npos);
    // The printed expression parses back to the same tree.
    const std::size_t second_comma = line2.find(',', line2.find(',') + 1);
    const std::string expr_text = line2.substr(second_comma + 1);
    CHECK(parse_infix(expr_text, kNames).structurally_equal(reference_expression()));
    std::remove(messages_path.c_str());
    std::remove(front_path.c_str());
  }
}
