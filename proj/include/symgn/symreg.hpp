#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "symgn/random.hpp"
#include "symgn/tensor.hpp"

namespace symgn {

enum class ExprKind : std::uint8_t { kConstant, kVariable, kAdd, kSub, kMul, kDiv };

bool is_binary(ExprKind kind);

struct ExprNode {
  ExprKind kind = ExprKind::kConstant;
  double value = 0.0;     // kConstant
  std::string var_name;   // kVariable
  int var_index = -1;     // column in the owning feature table
  std::unique_ptr<ExprNode> lhs, rhs;
};

/// Binary expression tree over {+, -, *, /}, feature variables and real
/// constants. Value type with deep copy; variables carry both their column
/// name and the index they were bound against.
class Expr {
 public:
  Expr();  // the constant 0
  static Expr constant(double value);
  static Expr variable(std::string name, int index);
  static Expr binary(ExprKind op, Expr lhs, Expr rhs);

  Expr(const Expr& other);
  Expr& operator=(const Expr& other);
  Expr(Expr&&) noexcept = default;
  Expr& operator=(Expr&&) noexcept = default;

  const ExprNode& root() const { return *root_; }
  ExprNode& root() { return *root_; }

  /// Operator, constant and variable occurrences each count one.
  int complexity() const;
  int depth() const;  // single node = 1

  /// Fast path: variables read row[var_index]. Division by |den| < 1e-12
  /// yields NaN, which poisons the sample.
  double eval(std::span<const double> row) const;

  /// Feature-map path; throws std::out_of_range for unbound variables.
  double eval(const std::unordered_map<std::string, double>& row) const;

  bool structurally_equal(const Expr& other) const;

 private:
  explicit Expr(std::unique_ptr<ExprNode> root) : root_(std::move(root)) {}
  std::unique_ptr<ExprNode> root_;

  friend Expr parse_infix(const std::string&, std::span<const std::string>);
};

/// Fully parenthesized infix, constants at 17 significant digits.
std::string to_infix(const Expr& expr);
/// Inverse of to_infix (also accepts unparenthesized operator chains with the
/// usual precedence). Variable names are bound against `names`.
Expr parse_infix(const std::string& text, std::span<const std::string> names);

struct GpConfig {
  std::size_t population = 1024;
  std::size_t generations = 200;
  int tournament = 6;
  double crossover_prob = 0.65;
  double mutation_prob = 0.4;
  int max_depth = 8;
  int const_opt_iters = 2;     // coordinate passes per offspring; 0 disables
  double parsimony = 0.0;      // fitness penalty per complexity unit
  std::size_t elitism = 4;
  double constant_range = 3.0; // fresh constants drawn uniform in +-range
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named feature columns plus one regression target.
struct RegressionData {
  std::vector<std::string> feature_names;
  Tensor features;             // n_rows x n_features
  std::vector<double> target;  // n_rows
};

/// Mean squared error over the data; infinity if any row evaluates invalid.
double expr_mse(const Expr& expr, const RegressionData& data);

Expr random_expr(std::span<const std::string> names, const GpConfig& config, Rng& rng);

/// Point mutation (operator/variable swap, constant jitter) or subtree
/// replacement; results are repaired to the depth cap by truncating offending
/// subtrees to their leftmost leaf.
Expr mutate(const Expr& expr, std::span<const std::string> names,
            const GpConfig& config, Rng& rng);

/// Swaps uniformly chosen subtrees, with the same depth repair.
Expr crossover(const Expr& a, const Expr& b, const GpConfig& config, Rng& rng);

/// Deterministic coordinate descent over the tree's constants (expanding
/// bracket + golden-section per constant). Never increases the MSE; returns
/// the input unchanged when it has no constants.
Expr optimize_constants(const Expr& expr, const RegressionData& data,
                        const GpConfig& config);

/// Constant-valued subtrees are collapsed to their value.
Expr fold_constants(const Expr& expr);

/// Best expression seen at each complexity, dominated entries dropped, so
/// stored MSE is strictly decreasing in complexity.
class ParetoFront {
 public:
  struct Entry {
    int complexity;
    double mse;
    Expr expr;
  };

  /// Ignores non-finite MSEs; keeps the incumbent on ties.
  void offer(const Expr& expr, double mse);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  /// Ascending complexity.
  std::vector<const Entry*> sorted() const;

 private:
  std::map<int, Entry> entries_;
};

/// Tournament GP with elitism; every evaluated expression is offered to the
/// front. Single-threaded and bit-deterministic per seed. Requires at least
/// 10 rows.
ParetoFront search(const RegressionData& data, const GpConfig& config);

struct Selection {
  Expr expr;
  int complexity = 0;
  double mse = 0.0;
};

/// Occam rule: entries sorted by complexity score
/// (ln MSE_prev - ln MSE_c) / (c - c_prev), the simplest entry scores 0, ties
/// break toward lower complexity. MSEs below 1e-12 are clamped for the logs
/// so that rounding-level fits do not masquerade as real improvements.
Selection select_best(const ParetoFront& front);

/// CSV rows of complexity, mse, parenthesized infix expression.
void save_front_csv(const ParetoFront& front, const std::string& path);

/// Columns of a message table ready for regression: features from the table,
/// target = the chosen message component.
RegressionData regression_from_csv(const std::string& messages_csv_path,
                                   int component);

}  // namespace symgn
