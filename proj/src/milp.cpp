#include "tcam/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace tcam::milp {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& t : o.terms) terms.push_back({t.var, -t.coef});
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms) t.coef *= s;
  constant *= s;
  return *this;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }

namespace {

std::vector<Term> merged(const std::vector<Term>& in) {
  std::map<int, double> acc;
  for (const auto& t : in) acc[t.var] += t.coef;
  std::vector<Term> out;
  for (const auto& [v, c] : acc)
    if (c != 0.0) out.push_back({v, c});
  return out;
}

}  // namespace

int Model::add_var(const std::string& name, VarType type, double lb, double ub) {
  if (type == VarType::Binary) {
    lb = std::max(lb, 0.0);
    ub = std::min(ub, 1.0);
  }
  if (lb > ub) throw std::invalid_argument("empty bounds for " + name);
  vars_.push_back({name.empty() ? fmt::format("x{}", vars_.size()) : name, type, lb, ub});
  return static_cast<int>(vars_.size()) - 1;
}

int Model::add_constraint(const LinExpr& lhs, Sense sense, double rhs, const std::string& name) {
  for (const auto& t : lhs.terms)
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
      throw std::invalid_argument("constraint references undeclared variable");
  cons_.push_back({name.empty() ? fmt::format("c{}", cons_.size()) : name, merged(lhs.terms), sense, rhs - lhs.constant});
  return static_cast<int>(cons_.size()) - 1;
}

void Model::set_objective(const LinExpr& obj, bool minimize) {
  for (const auto& t : obj.terms)
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
      throw std::invalid_argument("objective references undeclared variable");
  obj_ = obj;
  obj_.terms = merged(obj.terms);
  minimize_ = minimize;
}

void Model::fix(int var, double value) { set_bounds(var, value, value); }

void Model::set_bounds(int var, double lb, double ub) {
  if (lb > ub) throw std::invalid_argument("empty bounds");
  vars_.at(static_cast<std::size_t>(var)).lb = lb;
  vars_.at(static_cast<std::size_t>(var)).ub = ub;
}

int Model::find_var(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return static_cast<int>(i);
  return -1;
}

double Model::evaluate(const LinExpr& e, const std::vector<double>& x) const {
  double v = e.constant;
  for (const auto& t : e.terms) v += t.coef * x.at(static_cast<std::size_t>(t.var));
  return v;
}

bool Model::check(const std::vector<double>& x, double tol, std::string* why) const {
  const auto fail = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  if (x.size() != vars_.size()) return fail("assignment size mismatch");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& v = vars_[i];
    if (x[i] < v.lb - tol || x[i] > v.ub + tol) return fail("bound violated on " + v.name);
    if (v.type != VarType::Continuous && std::abs(x[i] - std::round(x[i])) > tol) return fail("fractional " + v.name);
  }
  for (const auto& c : cons_) {
    double a = 0;
    for (const auto& t : c.terms) a += t.coef * x[static_cast<std::size_t>(t.var)];
    const double scale = 1.0 + std::abs(c.rhs);
    if ((c.sense == Sense::LE || c.sense == Sense::EQ) && a > c.rhs + tol * scale) return fail("violated " + c.name);
    if ((c.sense == Sense::GE || c.sense == Sense::EQ) && a < c.rhs - tol * scale) return fail("violated " + c.name);
  }
  return true;
}

std::string Model::to_lp() const {
  std::ostringstream out;
  const auto term_text = [&](const std::vector<Term>& ts) {
    std::string s;
    for (const auto& t : ts) {
      s += fmt::format(" {} {} {}", t.coef < 0 ? "-" : "+", std::abs(t.coef), vars_[static_cast<std::size_t>(t.var)].name);
    }
    return s.empty() ? std::string(" 0") : s;
  };
  out << (minimize_ ? "Minimize" : "Maximize") << "\n obj:" << term_text(obj_.terms);
  if (obj_.constant != 0.0) out << fmt::format(" {} {}", obj_.constant < 0 ? "-" : "+", std::abs(obj_.constant));
  out << "\nSubject To\n";
  for (const auto& c : cons_) {
    const char* op = c.sense == Sense::LE ? "<=" : c.sense == Sense::GE ? ">=" : "=";
    out << " " << c.name << ":" << term_text(c.terms) << " " << op << " " << c.rhs << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : vars_) {
    if (v.type == VarType::Binary) continue;
    const std::string lo = std::isinf(v.lb) ? "-inf" : fmt::format("{}", v.lb);
    const std::string hi = std::isinf(v.ub) ? "+inf" : fmt::format("{}", v.ub);
    out << " " << lo << " <= " << v.name << " <= " << hi << "\n";
  }
  std::string gen, bin;
  for (const auto& v : vars_) {
    if (v.type == VarType::Integer) gen += " " + v.name;
    if (v.type == VarType::Binary) bin += " " + v.name;
  }
  if (!gen.empty()) out << "Generals\n" << gen << "\n";
  if (!bin.empty()) out << "Binaries\n" << bin << "\n";
  out << "End\n";
  return out.str();
}

int add_conditional(Model& m, int guard, const LinExpr& lhs, Sense sense, double rhs, double M, bool enforce_when,
                    const std::string& name) {
  const auto& vars = m.vars();
  if (vars.at(static_cast<std::size_t>(guard)).type != VarType::Binary)
    throw std::invalid_argument("conditional guard must be binary");
  // range of lhs - rhs over the variable bounds
  double lo = lhs.constant - rhs, hi = lhs.constant - rhs;
  for (const auto& t : lhs.terms) {
    if (t.var == guard) throw std::invalid_argument("guard appears in its own constraint");
    const auto& v = vars.at(static_cast<std::size_t>(t.var));
    const double a = t.coef * v.lb, b = t.coef * v.ub;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  const bool le = sense == Sense::LE || sense == Sense::EQ;
  const bool ge = sense == Sense::GE || sense == Sense::EQ;
  if ((le && !(hi <= M)) || (ge && !(-lo <= M)))
    throw std::invalid_argument(fmt::format("big-M {} does not dominate conditional {}", M, name));
  // slack term: M * (guard) when enforced at 0, M * (1 - guard) when enforced at 1
  LinExpr relax = enforce_when ? LinExpr(M) - LinExpr::var(guard, M) : LinExpr::var(guard, M);
  int idx = -1;
  if (le) idx = m.add_constraint(lhs - relax, Sense::LE, rhs, name.empty() ? "" : name + (ge ? "_le" : ""));
  if (ge) idx = m.add_constraint(lhs + relax, Sense::GE, rhs, name.empty() ? "" : name + (le ? "_ge" : ""));
  m.record_conditional({guard, enforce_when, idx, M});
  return idx;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::TimedOut: return "timed_out";
  }
  return "?";
}

// ---- bounded dual simplex on a dense tableau ------------------------------------------

namespace {

constexpr double kLarge = 1e7;      // stand-in for infinite structural bounds
constexpr double kSlackLarge = 1e9;  // stand-in for infinite slack bounds
constexpr double kFeasTol = 1e-7;
constexpr double kPivotTol = 1e-9;

enum class LpStatus { Optimal, Infeasible, IterLimit };

class Tableau {
public:
  explicit Tableau(const Model& m) : n_(static_cast<int>(m.vars().size())), m_(static_cast<int>(m.constraints().size())) {
    cols_ = n_ + m_;
    a_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    rhs_.assign(m_, 0.0);
    lb_.assign(cols_, 0.0);
    ub_.assign(cols_, 0.0);
    x_.assign(cols_, 0.0);
    d_.assign(cols_, 0.0);
    basic_row_.assign(cols_, -1);
    at_upper_.assign(cols_, false);
    basis_.assign(m_, 0);
    const double sign = m.minimize() ? 1.0 : -1.0;
    for (const auto& t : m.objective().terms) d_[t.var] += sign * t.coef;
    for (int i = 0; i < m_; ++i) {
      const auto& c = m.constraints()[static_cast<std::size_t>(i)];
      for (const auto& t : c.terms) at(i, t.var) += t.coef;
      at(i, n_ + i) = 1.0;
      rhs_[i] = c.rhs;
      switch (c.sense) {
        case Sense::LE: lb_[n_ + i] = 0; ub_[n_ + i] = kSlackLarge; break;
        case Sense::GE: lb_[n_ + i] = -kSlackLarge; ub_[n_ + i] = 0; break;
        case Sense::EQ: lb_[n_ + i] = 0; ub_[n_ + i] = 0; break;
      }
      basis_[i] = n_ + i;
      basic_row_[n_ + i] = i;
    }
    for (int j = 0; j < n_; ++j) {
      const auto& v = m.vars()[static_cast<std::size_t>(j)];
      lb_[j] = std::isinf(v.lb) ? -kLarge : v.lb;
      ub_[j] = std::isinf(v.ub) ? kLarge : v.ub;
      at_upper_[j] = d_[j] < 0;
    }
    refresh();
  }

  void set_bounds(const std::vector<double>& lb, const std::vector<double>& ub) {
    for (int j = 0; j < n_; ++j) {
      lb_[j] = lb[j];
      ub_[j] = ub[j];
    }
    refresh();
  }

  LpStatus run(long max_iter, long& iterations) {
    long local = 0;
    const long bland_after = 20L * (m_ + cols_);
    for (;;) {
      if (local > 0 && local % 200 == 0) recompute_basics();
      // leaving row: largest bound violation
      int r = -1;
      double worst = kFeasTol;
      for (int i = 0; i < m_; ++i) {
        const int v = basis_[i];
        const double viol = std::max(lb_[v] - x_[v], x_[v] - ub_[v]);
        const double scaled = viol / (1.0 + std::abs(x_[v]) * 1e-9);
        if (local > bland_after) {
          if (viol > kFeasTol && (r < 0 || v < basis_[r])) r = i;
        } else if (scaled > worst) {
          worst = scaled;
          r = i;
        }
      }
      if (r < 0) return LpStatus::Optimal;
      if (local >= max_iter) return LpStatus::IterLimit;
      const int leave = basis_[r];
      const bool increase = x_[leave] < lb_[leave];
      const double target = increase ? lb_[leave] : ub_[leave];
      int enter = -1;
      double best_ratio = kInf, best_alpha = 0;
      for (int k = 0; k < cols_; ++k) {
        if (basic_row_[k] >= 0 || lb_[k] == ub_[k]) continue;
        const double alpha = at(r, k);
        if (std::abs(alpha) < kPivotTol) continue;
        // x_leave = rhs - sum alpha_k x_k
        const bool can_up = !at_upper_[k];
        const bool ok = increase ? ((alpha < 0 && can_up) || (alpha > 0 && !can_up))
                                 : ((alpha > 0 && can_up) || (alpha < 0 && !can_up));
        if (!ok) continue;
        const double ratio = std::abs(d_[k]) / std::abs(alpha);
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && local <= bland_after && std::abs(alpha) > std::abs(best_alpha))) {
          best_ratio = ratio;
          best_alpha = alpha;
          enter = k;
        }
      }
      if (enter < 0) return LpStatus::Infeasible;
      pivot(r, enter, target);
      ++local;
      ++iterations;
    }
  }

  double objective(const Model& m) const {
    double v = m.objective().constant;
    for (const auto& t : m.objective().terms) v += t.coef * x_[t.var];
    return v;
  }

  std::vector<double> structural() const { return {x_.begin(), x_.begin() + n_}; }
  bool hits_artificial_bound(const Model& m) const {
    for (int j = 0; j < n_; ++j) {
      const auto& v = m.vars()[static_cast<std::size_t>(j)];
      if ((std::isinf(v.ub) && x_[j] > kLarge * 0.5) || (std::isinf(v.lb) && x_[j] < -kLarge * 0.5)) return true;
    }
    return false;
  }

private:
  double& at(int r, int c) { return a_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return a_[static_cast<std::size_t>(r) * cols_ + c]; }

  // nonbasic values to their bounds with a dual-feasible side, then basics
  void refresh() {
    for (int k = 0; k < cols_; ++k) {
      if (basic_row_[k] >= 0) continue;
      if (lb_[k] != ub_[k]) {
        if (d_[k] < -1e-12) at_upper_[k] = true;
        else if (d_[k] > 1e-12) at_upper_[k] = false;
      }
      x_[k] = at_upper_[k] ? ub_[k] : lb_[k];
    }
    recompute_basics();
  }

  void recompute_basics() {
    for (int i = 0; i < m_; ++i) {
      double v = rhs_[i];
      const double* row = &a_[static_cast<std::size_t>(i) * cols_];
      for (int k = 0; k < cols_; ++k)
        if (basic_row_[k] < 0 && row[k] != 0.0) v -= row[k] * x_[k];
      x_[basis_[i]] = v;
    }
  }

  void pivot(int r, int enter, double target) {
    const int leave = basis_[r];
    const double alpha = at(r, enter);
    const double step = (x_[leave] - target) / alpha;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] -= at(i, enter) * step;
    x_[enter] += step;
    x_[leave] = target;
    at_upper_[leave] = target == ub_[leave] && target != lb_[leave];

    double* prow = &a_[static_cast<std::size_t>(r) * cols_];
    const double inv = 1.0 / alpha;
    for (int k = 0; k < cols_; ++k) prow[k] *= inv;
    rhs_[r] *= inv;
    prow[enter] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &a_[static_cast<std::size_t>(i) * cols_];
      const double f = row[enter];
      if (f == 0.0) continue;
      for (int k = 0; k < cols_; ++k)
        if (prow[k] != 0.0) row[k] -= f * prow[k];
      row[enter] = 0.0;
      rhs_[i] -= f * rhs_[r];
    }
    const double fd = d_[enter];
    if (fd != 0.0) {
      for (int k = 0; k < cols_; ++k)
        if (prow[k] != 0.0) d_[k] -= fd * prow[k];
      d_[enter] = 0.0;
    }
    basis_[r] = enter;
    basic_row_[enter] = r;
    basic_row_[leave] = -1;
  }

  int n_, m_, cols_;
  std::vector<double> a_, rhs_, lb_, ub_, x_, d_;
  std::vector<int> basis_, basic_row_;
  std::vector<bool> at_upper_;
};

long iteration_cap(const Model& m) { return 50L * static_cast<long>(m.vars().size() + m.constraints().size()) + 1000; }

}  // namespace

Solution solve_lp(const Model& m) {
  Solution s;
  Tableau t(m);
  const auto st = t.run(iteration_cap(m), s.lp_iterations);
  s.nodes = 1;
  if (st == LpStatus::Infeasible) {
    s.status = Status::Infeasible;
    return s;
  }
  if (st == LpStatus::IterLimit) {
    s.status = Status::TimedOut;
    return s;
  }
  s.x = t.structural();
  s.objective = t.objective(m);
  s.root_bound = s.objective;
  s.has_incumbent = true;
  s.status = t.hits_artificial_bound(m) ? Status::Unbounded : Status::Optimal;
  return s;
}

Solution solve(const Model& m, Budget budget) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  Solution best;
  const double sign = m.minimize() ? 1.0 : -1.0;  // internal objective is sign * objective
  const int n = static_cast<int>(m.vars().size());
  std::vector<double> lb0(n), ub0(n);
  for (int j = 0; j < n; ++j) {
    const auto& v = m.vars()[static_cast<std::size_t>(j)];
    lb0[j] = std::isinf(v.lb) ? -kLarge : v.lb;
    ub0[j] = std::isinf(v.ub) ? kLarge : v.ub;
    if (v.type != VarType::Continuous) {
      lb0[j] = std::ceil(lb0[j] - 1e-9);
      ub0[j] = std::floor(ub0[j] + 1e-9);
      if (lb0[j] > ub0[j]) {
        best.status = Status::Infeasible;
        return best;
      }
    }
  }
  struct Node {
    std::vector<double> lb, ub;
    double parent_bound;
  };
  std::vector<Node> stack;
  stack.push_back({lb0, ub0, -kInf});
  Tableau t(m);
  double incumbent = kInf;
  bool timed_out = false;
  bool first = true;
  const long lp_cap = iteration_cap(m);

  while (!stack.empty()) {
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    if (best.nodes >= budget.node_limit || elapsed > budget.time_limit) {
      timed_out = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++best.nodes;
    t.set_bounds(node.lb, node.ub);
    const auto st = t.run(lp_cap, best.lp_iterations);
    if (st == LpStatus::IterLimit) {
      timed_out = true;
      continue;
    }
    if (st == LpStatus::Infeasible) continue;
    const double obj = sign * t.objective(m);
    if (first) {
      best.root_bound = sign * obj;
      first = false;
      if (t.hits_artificial_bound(m)) {
        best.status = Status::Unbounded;
        return best;
      }
    }
    if (obj < node.parent_bound - 1e-6 * (1 + std::abs(node.parent_bound))) ++best.bound_violations;
    if (incumbent < kInf && obj >= incumbent - 1e-9 * (1 + std::abs(incumbent))) continue;
    const auto x = t.structural();
    int branch = -1;
    double best_frac = 0;
    for (int j = 0; j < n; ++j) {
      if (m.vars()[static_cast<std::size_t>(j)].type == VarType::Continuous) continue;
      const double f = x[j] - std::floor(x[j]);
      const double dist = std::min(f, 1 - f);
      if (dist > 1e-6 && dist > best_frac + 1e-12) {
        best_frac = dist;
        branch = j;
      }
    }
    if (branch < 0) {
      incumbent = obj;
      best.x = x;
      for (int j = 0; j < n; ++j)
        if (m.vars()[static_cast<std::size_t>(j)].type != VarType::Continuous) best.x[j] = std::round(x[j]);
      best.objective = sign * obj;
      best.has_incumbent = true;
      continue;
    }
    Node down{node.lb, node.ub, obj}, up{node.lb, node.ub, obj};
    down.ub[branch] = std::floor(x[branch]);
    up.lb[branch] = std::ceil(x[branch]);
    const bool up_first = x[branch] - std::floor(x[branch]) >= 0.5;
    if (up_first) {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }
  if (timed_out) {
    best.status = Status::TimedOut;
  } else {
    best.status = best.has_incumbent ? Status::Optimal : Status::Infeasible;
  }
  if (best.has_incumbent) best.objective = m.objective_value(best.x);
  return best;
}

}  // namespace tcam::milp
