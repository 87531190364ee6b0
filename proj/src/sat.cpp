#include "tcam/sat.hpp"

#include <cstdlib>
#include <sstream>

namespace tcam::sat {

std::string Cnf::to_dimacs() const {
  std::ostringstream out;
  out << "p cnf " << num_vars << " " << clauses.size() << "\n";
  for (const auto& c : clauses) {
    for (Lit l : c) out << l << " ";
    out << "0\n";
  }
  return out.str();
}

namespace {

// literal index: 2*v for +v, 2*v+1 for -v
inline int idx(Lit l) { return l > 0 ? 2 * l : 2 * (-l) + 1; }

class Solver {
public:
  explicit Solver(const Cnf& cnf) : n_(cnf.num_vars), value_(n_ + 1, 0), watches_(2 * (n_ + 1)) {
    for (const auto& c : cnf.clauses) {
      std::vector<Lit> cl;
      for (Lit l : c) {
        bool dup = false;
        for (Lit m : cl) {
          if (m == l) dup = true;
          if (m == -l) taut_ = true;
        }
        if (!dup) cl.push_back(l);
        if (taut_) break;
      }
      if (taut_) {
        taut_ = false;
        continue;
      }
      if (cl.empty()) {
        empty_clause_ = true;
        continue;
      }
      if (cl.size() == 1) {
        units_.push_back(cl[0]);
        continue;
      }
      const int ci = static_cast<int>(clauses_.size());
      clauses_.push_back(cl);
      watches_[idx(-cl[0])].push_back(ci);
      watches_[idx(-cl[1])].push_back(ci);
    }
  }

  Solution run(long limit) {
    Solution s;
    if (empty_clause_) {
      s.result = Result::Unsat;
      return s;
    }
    for (Lit u : units_) {
      if (val(u) == -1) {
        s.result = Result::Unsat;
        return s;
      }
      if (val(u) == 0) assign(u);
    }
    if (!propagate()) {
      s.result = Result::Unsat;
      return s;
    }
    int next_var = 1;
    for (;;) {
      while (next_var <= n_ && value_[next_var] != 0) ++next_var;
      if (next_var > n_) {
        s.result = Result::Sat;
        s.model.assign(n_ + 1, false);
        for (int v = 1; v <= n_; ++v) s.model[v] = value_[v] > 0;
        s.decisions = decisions_;
        return s;
      }
      if (decisions_ >= limit) {
        s.result = Result::Unknown;
        s.decisions = decisions_;
        return s;
      }
      ++decisions_;
      decision_marks_.push_back({trail_.size(), false});
      assign(-next_var);
      while (!propagate()) {
        // chronological backtracking: flip the most recent unflipped decision
        while (!decision_marks_.empty() && decision_marks_.back().second) {
          undo_to(decision_marks_.back().first);
          decision_marks_.pop_back();
        }
        if (decision_marks_.empty()) {
          s.result = Result::Unsat;
          s.decisions = decisions_;
          return s;
        }
        auto& mark = decision_marks_.back();
        const Lit flipped = -trail_[mark.first];
        undo_to(mark.first);
        mark.second = true;
        assign(flipped);
      }
      next_var = 1;
    }
  }

private:
  int val(Lit l) const {
    const int v = value_[std::abs(l)];
    return l > 0 ? v : -v;
  }

  void assign(Lit l) {
    value_[std::abs(l)] = l > 0 ? 1 : -1;
    trail_.push_back(l);
  }

  void undo_to(std::size_t size) {
    while (trail_.size() > size) {
      value_[std::abs(trail_.back())] = 0;
      trail_.pop_back();
    }
    qhead_ = std::min(qhead_, size);
  }

  bool propagate() {
    while (qhead_ < trail_.size()) {
      const Lit p = trail_[qhead_++];
      // clauses watching -p became one literal shorter; watches_ keyed by the
      // literal whose assignment falsifies the watch
      auto& ws = watches_[idx(p)];
      std::size_t keep = 0;
      bool conflict = false;
      for (std::size_t i = 0; i < ws.size(); ++i) {
        const int ci = ws[i];
        if (conflict) {
          ws[keep++] = ci;
          continue;
        }
        auto& c = clauses_[ci];
        if (c[0] == -p) std::swap(c[0], c[1]);
        if (val(c[0]) == 1) {
          ws[keep++] = ci;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.size(); ++k)
          if (val(c[k]) != -1) {
            std::swap(c[1], c[k]);
            watches_[idx(-c[1])].push_back(ci);
            moved = true;
            break;
          }
        if (moved) continue;
        ws[keep++] = ci;
        if (val(c[0]) == -1) {
          conflict = true;
        } else if (val(c[0]) == 0) {
          assign(c[0]);
        }
      }
      ws.resize(keep);
      if (conflict) {
        qhead_ = trail_.size();
        return false;
      }
    }
    return true;
  }

  int n_;
  std::vector<int> value_;
  std::vector<std::vector<Lit>> clauses_;
  std::vector<std::vector<int>> watches_;
  std::vector<Lit> units_;
  std::vector<Lit> trail_;
  std::vector<std::pair<std::size_t, bool>> decision_marks_;
  std::size_t qhead_ = 0;
  long decisions_ = 0;
  bool empty_clause_ = false;
  bool taut_ = false;
};

}  // namespace

Solution solve(const Cnf& cnf, long decision_limit) {
  Solver s(cnf);
  return s.run(decision_limit);
}

}  // namespace tcam::sat
