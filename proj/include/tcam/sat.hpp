// Small CNF solver: DPLL with two watched literals and unit propagation.
#pragma once

#include <string>
#include <vector>

namespace tcam::sat {

/// DIMACS-style literal: +v / -v for variable v >= 1.
using Lit = int;

struct Cnf {
  int num_vars = 0;
  std::vector<std::vector<Lit>> clauses;

  int new_var() { return ++num_vars; }
  void add(std::vector<Lit> clause) { clauses.push_back(std::move(clause)); }
  std::string to_dimacs() const;
};

enum class Result { Sat, Unsat, Unknown };

struct Solution {
  Result result = Result::Unknown;
  std::vector<bool> model;  // index by variable, [0] unused
  long decisions = 0;
};

Solution solve(const Cnf& cnf, long decision_limit = 1000000);

}  // namespace tcam::sat
