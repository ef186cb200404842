#include "symgn/symreg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string_view>

#include "io_util.hpp"
#include "symgn/analysis.hpp"
#include "symgn/errors.hpp"

namespace symgn {

namespace {

constexpr double kDivisionGuard = 1e-12;
constexpr double kLogMseFloor = 1e-12;
constexpr std::uint64_t kGpStream = 0x67702d73;

const char* op_symbol(ExprKind kind) {
  switch (kind) {
    case ExprKind::kAdd: return "+";
    case ExprKind::kSub: return "-";
    case ExprKind::kMul: return "*";
    case ExprKind::kDiv: return "/";
    default: return "?";
  }
}

std::unique_ptr<ExprNode> clone_node(const ExprNode& node) {
  auto out = std::make_unique<ExprNode>();
  out->kind = node.kind;
  out->value = node.value;
  out->var_name = node.var_name;
  out->var_index = node.var_index;
  if (node.lhs) out->lhs = clone_node(*node.lhs);
  if (node.rhs) out->rhs = clone_node(*node.rhs);
  return out;
}

int count_nodes(const ExprNode& node) {
  int n = 1;
  if (node.lhs) n += count_nodes(*node.lhs);
  if (node.rhs) n += count_nodes(*node.rhs);
  return n;
}

int node_depth(const ExprNode& node) {
  int d = 0;
  if (node.lhs) d = std::max(d, node_depth(*node.lhs));
  if (node.rhs) d = std::max(d, node_depth(*node.rhs));
  return d + 1;
}

/// Pre-order node lookup; index must be < count_nodes.
ExprNode* node_at(ExprNode* node, int& index) {
  if (index == 0) return node;
  --index;
  if (node->lhs) {
    if (ExprNode* hit = node_at(node->lhs.get(), index)) return hit;
  }
  if (node->rhs) {
    if (ExprNode* hit = node_at(node->rhs.get(), index)) return hit;
  }
  return nullptr;
}

double eval_node(const ExprNode& node, std::span<const double> row) {
  switch (node.kind) {
    case ExprKind::kConstant:
      return node.value;
    case ExprKind::kVariable:
      if (node.var_index < 0 ||
          static_cast<std::size_t>(node.var_index) >= row.size()) {
        throw std::out_of_range("eval: variable '" + node.var_name +
                                "' is not bound to a column");
      }
      return row[static_cast<std::size_t>(node.var_index)];
    case ExprKind::kAdd:
      return eval_node(*node.lhs, row) + eval_node(*node.rhs, row);
    case ExprKind::kSub:
      return eval_node(*node.lhs, row) - eval_node(*node.rhs, row);
    case ExprKind::kMul:
      return eval_node(*node.lhs, row) * eval_node(*node.rhs, row);
    case ExprKind::kDiv: {
      const double den = eval_node(*node.rhs, row);
      if (std::abs(den) < kDivisionGuard) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      return eval_node(*node.lhs, row) / den;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double eval_node_map(const ExprNode& node,
                     const std::unordered_map<std::string, double>& row) {
  switch (node.kind) {
    case ExprKind::kConstant:
      return node.value;
    case ExprKind::kVariable: {
      const auto it = row.find(node.var_name);
      if (it == row.end()) {
        throw std::out_of_range("eval: unbound variable '" + node.var_name + "'");
      }
      return it->second;
    }
    case ExprKind::kAdd:
      return eval_node_map(*node.lhs, row) + eval_node_map(*node.rhs, row);
    case ExprKind::kSub:
      return eval_node_map(*node.lhs, row) - eval_node_map(*node.rhs, row);
    case ExprKind::kMul:
      return eval_node_map(*node.lhs, row) * eval_node_map(*node.rhs, row);
    case ExprKind::kDiv: {
      const double den = eval_node_map(*node.rhs, row);
      if (std::abs(den) < kDivisionGuard) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      return eval_node_map(*node.lhs, row) / den;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Replace every subtree rooted deeper than max_depth allows by its leftmost
/// leaf, so repairs never invent material that was not already in the tree.
void truncate_to_depth(std::unique_ptr<ExprNode>& node, int remaining) {
  if (!node->lhs) return;  // leaf
  if (remaining <= 1) {
    ExprNode* leaf = node.get();
    while (leaf->lhs) leaf = leaf->lhs.get();
    auto replacement = std::make_unique<ExprNode>();
    replacement->kind = leaf->kind;
    replacement->value = leaf->value;
    replacement->var_name = leaf->var_name;
    replacement->var_index = leaf->var_index;
    node = std::move(replacement);
    return;
  }
  truncate_to_depth(node->lhs, remaining - 1);
  truncate_to_depth(node->rhs, remaining - 1);
}

void collect_constants(ExprNode* node, std::vector<ExprNode*>& out) {
  if (node->kind == ExprKind::kConstant) out.push_back(node);
  if (node->lhs) collect_constants(node->lhs.get(), out);
  if (node->rhs) collect_constants(node->rhs.get(), out);
}

void to_infix_node(const ExprNode& node, std::string& out) {
  switch (node.kind) {
    case ExprKind::kConstant:
      out += detail::g17(node.value);
      return;
    case ExprKind::kVariable:
      out += node.var_name;
      return;
    default:
      out += '(';
      to_infix_node(*node.lhs, out);
      out += ' ';
      out += op_symbol(node.kind);
      out += ' ';
      to_infix_node(*node.rhs, out);
      out += ')';
  }
}

}  // namespace

bool is_binary(ExprKind kind) {
  return kind != ExprKind::kConstant && kind != ExprKind::kVariable;
}

Expr::Expr() : root_(std::make_unique<ExprNode>()) {}

Expr Expr::constant(double value) {
  Expr e;
  e.root_->value = value;
  return e;
}

Expr Expr::variable(std::string name, int index) {
  Expr e;
  e.root_->kind = ExprKind::kVariable;
  e.root_->var_name = std::move(name);
  e.root_->var_index = index;
  return e;
}

Expr Expr::binary(ExprKind op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw std::invalid_argument("Expr::binary: not an operator");
  Expr e;
  e.root_->kind = op;
  e.root_->lhs = std::move(lhs.root_);
  e.root_->rhs = std::move(rhs.root_);
  return e;
}

Expr::Expr(const Expr& other) : root_(clone_node(*other.root_)) {}

Expr& Expr::operator=(const Expr& other) {
  if (this != &other) root_ = clone_node(*other.root_);
  return *this;
}

int Expr::complexity() const { return count_nodes(*root_); }

int Expr::depth() const { return node_depth(*root_); }

double Expr::eval(std::span<const double> row) const { return eval_node(*root_, row); }

double Expr::eval(const std::unordered_map<std::string, double>& row) const {
  return eval_node_map(*root_, row);
}

bool Expr::structurally_equal(const Expr& other) const {
  std::function<bool(const ExprNode&, const ExprNode&)> eq =
      [&eq](const ExprNode& a, const ExprNode& b) {
        if (a.kind != b.kind) return false;
        switch (a.kind) {
          case ExprKind::kConstant:
            return a.value == b.value;
          case ExprKind::kVariable:
            return a.var_name == b.var_name;
          default:
            return eq(*a.lhs, *b.lhs) && eq(*a.rhs, *b.rhs);
        }
      };
  return eq(*root_, *other.root_);
}

std::string to_infix(const Expr& expr) {
  std::string out;
  to_infix_node(expr.root(), out);
  return out;
}

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  std::span<const std::string> names;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("parse_infix: " + what + " at offset " +
                                std::to_string(pos) + " in '" + std::string(text) + "'");
  }

  std::unique_ptr<ExprNode> parse_expr() {
    auto lhs = parse_term();
    while (true) {
      skip_ws();
      if (pos >= text.size()) break;
      ExprKind op;
      if (text[pos] == '+') {
        op = ExprKind::kAdd;
      } else if (text[pos] == '-') {
        op = ExprKind::kSub;
      } else {
        break;
      }
      ++pos;
      auto node = std::make_unique<ExprNode>();
      node->kind = op;
      node->lhs = std::move(lhs);
      node->rhs = parse_term();
      lhs = std::move(node);
    }
    return lhs;
  }

  std::unique_ptr<ExprNode> parse_term() {
    auto lhs = parse_factor();
    while (true) {
      skip_ws();
      if (pos >= text.size()) break;
      ExprKind op;
      if (text[pos] == '*') {
        op = ExprKind::kMul;
      } else if (text[pos] == '/') {
        op = ExprKind::kDiv;
      } else {
        break;
      }
      ++pos;
      auto node = std::make_unique<ExprNode>();
      node->kind = op;
      node->lhs = std::move(lhs);
      node->rhs = parse_factor();
      lhs = std::move(node);
    }
    return lhs;
  }

  std::unique_ptr<ExprNode> parse_factor() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (eat('(')) {
      auto inner = parse_expr();
      if (!eat(')')) fail("missing ')'");
      return inner;
    }
    const char c = text[pos];
    if (c == '-' || c == '+' || c == '.' || (c >= '0' && c <= '9')) {
      char* end = nullptr;
      const double v = std::strtod(text.data() + pos, &end);
      if (end == text.data() + pos) fail("bad number");
      pos = static_cast<std::size_t>(end - text.data());
      auto node = std::make_unique<ExprNode>();
      node->value = v;
      return node;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
        ++pos;
      }
      const std::string name(text.substr(start, pos - start));
      for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
          auto node = std::make_unique<ExprNode>();
          node->kind = ExprKind::kVariable;
          node->var_name = name;
          node->var_index = static_cast<int>(i);
          return node;
        }
      }
      fail("unknown variable '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expr parse_infix(const std::string& text, std::span<const std::string> names) {
  Parser parser{text, 0, names};
  auto root = parser.parse_expr();
  parser.skip_ws();
  if (parser.pos != text.size()) parser.fail("trailing input");
  return Expr(std::move(root));
}

void GpConfig::validate() const {
  if (population < 2) throw std::invalid_argument("GpConfig: population must be >= 2");
  if (generations < 1) throw std::invalid_argument("GpConfig: generations must be >= 1");
  if (tournament < 1) throw std::invalid_argument("GpConfig: tournament must be >= 1");
  if (crossover_prob < 0.0 || crossover_prob > 1.0 || mutation_prob < 0.0 ||
      mutation_prob > 1.0) {
    throw std::invalid_argument("GpConfig: probabilities must lie in [0, 1]");
  }
  if (max_depth < 1) throw std::invalid_argument("GpConfig: max_depth must be >= 1");
  if (const_opt_iters < 0) {
    throw std::invalid_argument("GpConfig: const_opt_iters must be >= 0");
  }
  if (!(constant_range > 0.0)) {
    throw std::invalid_argument("GpConfig: constant_range must be > 0");
  }
}

double expr_mse(const Expr& expr, const RegressionData& data) {
  const std::size_t n = data.target.size();
  if (n == 0) throw std::invalid_argument("expr_mse: empty data");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = expr.eval(data.features.row(i));
    const double d = v - data.target[i];
    sum += d * d;
    // One poisoned sample poisons the whole expression; stop early.
    if (!std::isfinite(sum)) return std::numeric_limits<double>::infinity();
  }
  const double mse = sum / static_cast<double>(n);
  return std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
}

namespace {

std::unique_ptr<ExprNode> random_leaf(std::span<const std::string> names,
                                      const GpConfig& config, Rng& rng) {
  auto node = std::make_unique<ExprNode>();
  if (!names.empty() && rng.chance(0.7)) {
    const std::size_t pick = rng.index(names.size());
    node->kind = ExprKind::kVariable;
    node->var_name = names[pick];
    node->var_index = static_cast<int>(pick);
  } else {
    node->value = rng.uniform(-config.constant_range, config.constant_range);
  }
  return node;
}

std::unique_ptr<ExprNode> random_tree(std::span<const std::string> names,
                                      const GpConfig& config, Rng& rng, int depth) {
  if (depth <= 1 || rng.chance(0.3)) return random_leaf(names, config, rng);
  auto node = std::make_unique<ExprNode>();
  constexpr ExprKind kOps[] = {ExprKind::kAdd, ExprKind::kSub, ExprKind::kMul,
                               ExprKind::kDiv};
  node->kind = kOps[rng.index(4)];
  node->lhs = random_tree(names, config, rng, depth - 1);
  node->rhs = random_tree(names, config, rng, depth - 1);
  return node;
}

}  // namespace

Expr random_expr(std::span<const std::string> names, const GpConfig& config, Rng& rng) {
  // Ramped depth in [2, max_depth].
  int depth = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(
                      std::max(1, config.max_depth - 1))));
  depth = std::min(depth, config.max_depth);
  Expr e;
  e.root() = std::move(*random_tree(names, config, rng, depth));
  return e;
}

Expr mutate(const Expr& expr, std::span<const std::string> names,
            const GpConfig& config, Rng& rng) {
  Expr out = expr;
  int total = out.complexity();
  int pick = static_cast<int>(rng.index(static_cast<std::size_t>(total)));
  ExprNode* target = node_at(&out.root(), pick);

  if (rng.chance(0.6)) {
    // Point mutation: swap the node's kind in place, or jitter a constant.
    switch (target->kind) {
      case ExprKind::kConstant:
        target->value += rng.normal() * std::max(0.1, 0.3 * std::abs(target->value));
        break;
      case ExprKind::kVariable:
        if (names.size() > 1) {
          std::size_t pick_var = rng.index(names.size() - 1);
          if (names[pick_var] == target->var_name) pick_var = names.size() - 1;
          target->var_name = names[pick_var];
          target->var_index = static_cast<int>(pick_var);
        } else {
          target->value = rng.uniform(-config.constant_range, config.constant_range);
          target->kind = ExprKind::kConstant;
          target->var_name.clear();
          target->var_index = -1;
        }
        break;
      default: {
        constexpr ExprKind kOps[] = {ExprKind::kAdd, ExprKind::kSub, ExprKind::kMul,
                                     ExprKind::kDiv};
        std::size_t pick_op = rng.index(3);
        if (kOps[pick_op] == target->kind) pick_op = 3;
        target->kind = kOps[pick_op];
      }
    }
  } else {
    // Subtree replacement with a fresh shallow tree.
    *target = std::move(*random_tree(names, config, rng, 3));
  }

  std::unique_ptr<ExprNode> root = clone_node(out.root());
  truncate_to_depth(root, config.max_depth);
  Expr repaired;
  repaired.root() = std::move(*root);
  return repaired;
}

Expr crossover(const Expr& a, const Expr& b, const GpConfig& config, Rng& rng) {
  Expr out = a;
  int pick_a = static_cast<int>(rng.index(static_cast<std::size_t>(out.complexity())));
  ExprNode* site = node_at(&out.root(), pick_a);

  int pick_b = static_cast<int>(rng.index(static_cast<std::size_t>(b.complexity())));
  Expr donor = b;  // clone so the subtree can be moved out
  ExprNode* graft = node_at(&donor.root(), pick_b);
  *site = std::move(*graft);

  std::unique_ptr<ExprNode> root = clone_node(out.root());
  truncate_to_depth(root, config.max_depth);
  Expr repaired;
  repaired.root() = std::move(*root);
  return repaired;
}

namespace {

/// Deterministic 1-D minimizer: expanding bracket then golden section, with a
/// configurable evaluation budget. Returns the best point seen (never worse
/// than the start).
double line_minimize(const std::function<double(double)>& f, double x0, double f0,
                     int expand_steps, int golden_steps) {
  double best_x = x0;
  double best_f = f0;
  auto probe = [&](double x) {
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
    return v;
  };

  double step = std::max(0.25, 0.25 * std::abs(x0));
  double center = x0, fc = f0;
  double lo = x0 - step;
  double hi = x0 + step;
  double flo = probe(lo);
  double fhi = probe(hi);
  for (int i = 0; i < expand_steps; ++i) {
    if (flo < fc && flo <= fhi) {
      hi = center;
      fhi = fc;
      center = lo;
      fc = flo;
      step *= 2.0;
      lo = center - step;
      flo = probe(lo);
    } else if (fhi < fc) {
      lo = center;
      flo = fc;
      center = hi;
      fc = fhi;
      step *= 2.0;
      hi = center + step;
      fhi = probe(hi);
    } else {
      break;  // bracketed: flo >= fc <= fhi
    }
  }

  constexpr double kInvPhi = 0.61803398874989485;
  double m1 = hi - kInvPhi * (hi - lo);
  double m2 = lo + kInvPhi * (hi - lo);
  double f1 = probe(m1);
  double f2 = probe(m2);
  for (int i = 0;
       i < golden_steps && hi - lo > 1e-11 * (1.0 + std::abs(lo) + std::abs(hi)); ++i) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - kInvPhi * (hi - lo);
      f1 = probe(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + kInvPhi * (hi - lo);
      f2 = probe(m2);
    }
  }
  return best_x;
}

Expr optimize_constants_budgeted(const Expr& expr, const RegressionData& data,
                                 int passes, int expand_steps, int golden_steps) {
  Expr out = expr;
  std::vector<ExprNode*> constants;
  collect_constants(&out.root(), constants);
  if (constants.empty() || passes == 0) return out;

  double current = expr_mse(out, data);
  for (int pass = 0; pass < passes; ++pass) {
    for (ExprNode* node : constants) {
      const double start = node->value;
      auto objective = [&](double x) {
        node->value = x;
        return expr_mse(out, data);
      };
      node->value = line_minimize(objective, start, current, expand_steps, golden_steps);
      current = expr_mse(out, data);
    }
  }
  return out;
}

}  // namespace

Expr optimize_constants(const Expr& expr, const RegressionData& data,
                        const GpConfig& config) {
  return optimize_constants_budgeted(expr, data, config.const_opt_iters, 40, 44);
}

namespace {

void fold_node(std::unique_ptr<ExprNode>& node) {
  if (!node->lhs) return;
  fold_node(node->lhs);
  fold_node(node->rhs);
  if (node->lhs->kind != ExprKind::kConstant || node->rhs->kind != ExprKind::kConstant) {
    return;
  }
  double v = 0.0;
  const double a = node->lhs->value, b = node->rhs->value;
  switch (node->kind) {
    case ExprKind::kAdd: v = a + b; break;
    case ExprKind::kSub: v = a - b; break;
    case ExprKind::kMul: v = a * b; break;
    case ExprKind::kDiv:
      if (std::abs(b) < kDivisionGuard) return;  // keep the poisoned division
      v = a / b;
      break;
    default:
      return;
  }
  if (!std::isfinite(v)) return;
  auto folded = std::make_unique<ExprNode>();
  folded->value = v;
  node = std::move(folded);
}

}  // namespace

Expr fold_constants(const Expr& expr) {
  std::unique_ptr<ExprNode> root = clone_node(expr.root());
  fold_node(root);
  Expr out;
  out.root() = std::move(*root);
  return out;
}

void ParetoFront::offer(const Expr& expr, double mse) {
  if (!std::isfinite(mse)) return;
  const int complexity = expr.complexity();
  // Dominated by a simpler-or-equal entry with MSE <= ours: reject.
  for (auto it = entries_.begin(); it != entries_.end() && it->first <= complexity; ++it) {
    if (it->second.mse <= mse) return;
  }
  entries_.insert_or_assign(complexity, Entry{complexity, mse, expr});
  // Drop entries we now dominate.
  for (auto it = entries_.upper_bound(complexity); it != entries_.end();) {
    if (it->second.mse >= mse) {
      it = entries_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<const ParetoFront::Entry*> ParetoFront::sorted() const {
  std::vector<const Entry*> out;
  out.reserve(entries_.size());
  for (const auto& [c, entry] : entries_) out.push_back(&entry);
  return out;
}

ParetoFront search(const RegressionData& data, const GpConfig& config) {
  config.validate();
  if (data.target.empty()) throw std::invalid_argument("search: empty data");
  if (data.target.size() < 10) {
    throw std::invalid_argument("search: need at least 10 rows, have " +
                                std::to_string(data.target.size()));
  }
  if (data.features.rows != data.target.size() ||
      data.features.cols != data.feature_names.size()) {
    throw std::invalid_argument("search: feature/target shapes disagree");
  }

  Rng rng(derive_seed(config.seed, kGpStream));
  ParetoFront front;

  struct Individual {
    Expr expr;
    double mse;
    int complexity;
  };

  const auto fitness_less = [&config](const Individual& a, const Individual& b) {
    const double fa = a.mse + config.parsimony * a.complexity;
    const double fb = b.mse + config.parsimony * b.complexity;
    if (fa != fb) return fa < fb;
    return a.complexity < b.complexity;
  };

  // Tuning constants per offspring would dominate the runtime, so the loop
  // runs a cheap budget on a fraction of them and periodically polishes the
  // front entries with the precise budget.
  const auto make_individual = [&](Expr e, bool tune_constants) {
    e = fold_constants(e);
    if (tune_constants && config.const_opt_iters > 0) {
      std::vector<ExprNode*> constants;
      collect_constants(&e.root(), constants);
      if (!constants.empty()) {
        e = optimize_constants_budgeted(e, data, config.const_opt_iters, 8, 16);
      }
    }
    Individual ind{std::move(e), 0.0, 0};
    ind.mse = expr_mse(ind.expr, data);
    ind.complexity = ind.expr.complexity();
    front.offer(ind.expr, ind.mse);
    return ind;
  };

  const auto polish_front = [&] {
    if (config.const_opt_iters == 0) return;
    for (const auto* entry : front.sorted()) {
      const Expr polished =
          optimize_constants_budgeted(entry->expr, data, config.const_opt_iters, 40, 44);
      front.offer(polished, expr_mse(polished, data));
    }
  };

  std::vector<Individual> population;
  population.reserve(config.population);
  // Seed every bare variable and the target mean so the front always has
  // honest simplest entries.
  double mean = 0.0;
  for (double y : data.target) mean += y;
  mean /= static_cast<double>(data.target.size());
  population.push_back(make_individual(Expr::constant(mean), true));
  for (std::size_t i = 0;
       i < data.feature_names.size() && population.size() < config.population; ++i) {
    population.push_back(make_individual(
        Expr::variable(data.feature_names[i], static_cast<int>(i)), false));
  }
  while (population.size() < config.population) {
    population.push_back(
        make_individual(random_expr(data.feature_names, config, rng), rng.chance(0.25)));
  }

  const auto tournament = [&]() -> const Individual& {
    std::size_t best = rng.index(population.size());
    for (int i = 1; i < config.tournament; ++i) {
      const std::size_t contender = rng.index(population.size());
      if (fitness_less(population[contender], population[best])) best = contender;
    }
    return population[best];
  };

  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(population.size());

    std::vector<std::size_t> order(population.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (fitness_less(population[a], population[b])) return true;
      if (fitness_less(population[b], population[a])) return false;
      return a < b;  // stable under ties for determinism
    });
    for (std::size_t e = 0; e < std::min(config.elitism, population.size()); ++e) {
      next.push_back(population[order[e]]);
    }

    while (next.size() < config.population) {
      Expr child = [&] {
        // Sequence the tournaments explicitly; argument evaluation order
        // would make the rng stream compiler-dependent.
        const Individual& first = tournament();
        if (!rng.chance(config.crossover_prob)) return first.expr;
        const Individual& second = tournament();
        return crossover(first.expr, second.expr, config, rng);
      }();
      if (rng.chance(config.mutation_prob)) {
        child = mutate(child, data.feature_names, config, rng);
      }
      next.push_back(make_individual(std::move(child), rng.chance(0.25)));
    }
    population = std::move(next);
    if ((gen + 1) % 10 == 0) polish_front();
  }
  polish_front();
  return front;
}

Selection select_best(const ParetoFront& front) {
  const auto entries = front.sorted();
  if (entries.empty()) throw std::invalid_argument("select_best: empty front");

  // Occam rule: the fractional drop in log MSE per unit of added complexity,
  // relative to the next simplest entry. The simplest entry scores 0.
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const double prev = std::log(std::max(entries[i - 1]->mse, kLogMseFloor));
    const double cur = std::log(std::max(entries[i]->mse, kLogMseFloor));
    const double score =
        (prev - cur) / static_cast<double>(entries[i]->complexity -
                                           entries[i - 1]->complexity);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return {entries[best]->expr, entries[best]->complexity, entries[best]->mse};
}

void save_front_csv(const ParetoFront& front, const std::string& path) {
  auto out = detail::open_out(path);
  out << "complexity,mse,expression\n";
  for (const auto* entry : front.sorted()) {
    out << entry->complexity << ',' << detail::g17(entry->mse) << ','
        << to_infix(entry->expr) << '\n';
  }
  if (!out) throw IoError("failed writing front '" + path + "'");
}

RegressionData regression_from_csv(const std::string& messages_csv_path, int component) {
  const MessageTable table = load_message_table(messages_csv_path);
  if (component < 0 || component >= table.message_dim) {
    throw std::invalid_argument("symreg: component " + std::to_string(component) +
                                " out of range [0, " +
                                std::to_string(table.message_dim) + ")");
  }

  RegressionData data;
  const std::size_t n_features = table.feature_count();
  data.feature_names.assign(table.columns.begin(), table.columns.begin() + n_features);
  data.features = Tensor(table.values.rows, n_features);
  data.target.resize(table.values.rows);
  for (std::size_t i = 0; i < table.values.rows; ++i) {
    const double* row = table.values.data.data() + i * table.values.cols;
    double* dst = data.features.data.data() + i * n_features;
    for (std::size_t c = 0; c < n_features; ++c) dst[c] = row[c];
    data.target[i] = row[table.message_offset() + static_cast<std::size_t>(component)];
  }
  return data;
}

}  // namespace symgn
