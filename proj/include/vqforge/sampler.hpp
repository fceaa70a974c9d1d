#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vqforge {

struct CandidateRow {
  std::string id;
  std::string group;  // empty = no quota group
  std::vector<double> values;
};

struct SelectionProblem {
  std::vector<CandidateRow> candidates;        // M rows, equal length
  std::vector<std::vector<double>> reference;  // K x F
  int target_size = 0;                         // N
  int bins_per_feature = 10;                   // B
  std::map<std::string, std::pair<int, int>> group_quotas;  // group -> (min,max)

  void validate() const;
};

// Equal-frequency bins built on the reference corpus. A feature constant
// in the reference is degenerate: one bin, p = 1, contributes zero to any
// objective.
struct BinEdges {
  int bins = 0;
  std::vector<std::vector<double>> cuts;    // per feature, B-1 interior cuts
  std::vector<std::vector<double>> target;  // per feature, bin proportions
  std::vector<bool> degenerate;

  int bin_of(int feature, double value) const;
  int active_features() const;
};

BinEdges build_bins(const std::vector<std::vector<double>>& reference,
                    int bins_per_feature);

// J(S) = mean over non-degenerate features of sum_b |h_b/|S| - p_b|, in [0,2]
double evaluate_objective(const std::vector<std::vector<double>>& selection,
                          const BinEdges& bins);

enum class SolverMode { exact, heuristic };

SolverMode parse_solver_mode(const std::string& name);

struct SelectionResult {
  std::vector<std::string> selected_ids;  // sorted
  double objective = 0.0;
  SolverMode solver = SolverMode::heuristic;
  long iterations = 0;
  std::vector<double> per_feature_deviation;
};

// exact: depth-first branch-and-bound, provably optimal, ties resolved to
//        the lexicographically smallest id set; requires M <= 25.
// heuristic: greedy construction + first-improvement 1-swap local search,
//        swap cap swap_cap_factor*M. Both honor group quotas and are
//        deterministic for a given seed.
SelectionResult solve(const SelectionProblem& problem, SolverMode mode,
                      uint64_t seed, int swap_cap_factor = 50);

}  // namespace vqforge
