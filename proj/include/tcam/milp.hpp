// Mixed-integer linear programs: model container, bounded dual simplex and
// depth-first branch and bound.
#pragma once

#include <limits>
#include <string>
#include <vector>

namespace tcam::milp {

enum class VarType { Continuous, Integer, Binary };
enum class Sense { LE, GE, EQ };

struct Term {
  int var;
  double coef;
};

struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
  static LinExpr var(int v, double c = 1.0) {
    LinExpr e;
    e.terms.push_back({v, c});
    return e;
  }
  LinExpr& add(int v, double c) {
    terms.push_back({v, c});
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);

struct Variable {
  std::string name;
  VarType type;
  double lb;
  double ub;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // merged, constant folded into rhs
  Sense sense;
  double rhs;
};

/// Guard metadata for constraints produced by add_conditional.
struct Conditional {
  int guard;
  bool enforce_when;  // constraint holds when guard == enforce_when
  int constraint;
  double M;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Model {
public:
  int add_var(const std::string& name, VarType type, double lb, double ub);
  int add_continuous(const std::string& name, double lb = 0.0, double ub = kInf) {
    return add_var(name, VarType::Continuous, lb, ub);
  }
  int add_binary(const std::string& name) { return add_var(name, VarType::Binary, 0.0, 1.0); }
  int add_integer(const std::string& name, double lb, double ub) { return add_var(name, VarType::Integer, lb, ub); }

  int add_constraint(const LinExpr& lhs, Sense sense, double rhs, const std::string& name = "");
  void set_objective(const LinExpr& obj, bool minimize = true);

  void fix(int var, double value);
  void set_bounds(int var, double lb, double ub);

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const std::vector<Conditional>& conditionals() const { return conds_; }
  const LinExpr& objective() const { return obj_; }
  bool minimize() const { return minimize_; }
  int find_var(const std::string& name) const;

  double evaluate(const LinExpr& e, const std::vector<double>& x) const;
  double objective_value(const std::vector<double>& x) const { return evaluate(obj_, x); }
  /// Replays x against bounds, integrality and every constraint.
  bool check(const std::vector<double>& x, double tol = 1e-6, std::string* why = nullptr) const;

  /// CPLEX LP text for external cross-checking.
  std::string to_lp() const;

  void record_conditional(Conditional c) { conds_.push_back(c); }

private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<Conditional> conds_;
  LinExpr obj_;
  bool minimize_ = true;
};

/// Adds "guard == enforce_when implies lhs sense rhs" with a big-M relaxation.
/// Throws std::invalid_argument if M does not dominate the violation the
/// constraint can reach over the variable bounds.
int add_conditional(Model& m, int guard, const LinExpr& lhs, Sense sense, double rhs, double M,
                    bool enforce_when = false, const std::string& name = "");

enum class Status { Optimal, Infeasible, Unbounded, TimedOut };
std::string_view to_string(Status s);

struct Budget {
  long node_limit = 200000;
  double time_limit = 60.0;  // seconds
};

struct Solution {
  Status status = Status::Infeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double root_bound = 0.0;
  long nodes = 0;
  long lp_iterations = 0;
  long bound_violations = 0;  // child relaxation better than parent (should stay 0)
};

/// LP relaxation only (integrality ignored).
Solution solve_lp(const Model& m);
Solution solve(const Model& m, Budget budget = {});

}  // namespace tcam::milp
