#include "vqforge/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "vqforge/error.hpp"

namespace vqforge {

void SelectionProblem::validate() const {
  int m = static_cast<int>(candidates.size());
  if (m == 0) fail(Errc::empty_error, "no candidates");
  if (target_size < 1 || target_size > m)
    fail(Errc::format_error, "target_size " + std::to_string(target_size) +
                                 " outside [1, " + std::to_string(m) + "]");
  if (bins_per_feature < 2) fail(Errc::format_error, "bins_per_feature < 2");
  size_t f = candidates.front().values.size();
  for (const auto& c : candidates)
    if (c.values.size() != f)
      fail(Errc::format_error, "candidate " + c.id + " has wrong feature count");
  for (const auto& r : reference)
    if (r.size() != f)
      fail(Errc::format_error, "reference row has wrong feature count");
  if (reference.size() < static_cast<size_t>(bins_per_feature))
    fail(Errc::format_error, "reference smaller than bin count");
  {
    std::set<std::string> ids;
    for (const auto& c : candidates)
      if (!ids.insert(c.id).second)
        fail(Errc::format_error, "duplicate candidate id " + c.id);
  }

  if (group_quotas.empty()) return;
  // joint satisfiability of the quotas
  std::map<std::string, int> avail;
  for (const auto& c : candidates) ++avail[c.group];
  long sum_min = 0, capacity = 0;
  for (const auto& [g, mm] : group_quotas) {
    auto [lo, hi] = mm;
    if (lo < 0 || hi < lo)
      fail(Errc::infeasible_quotas, "bad quota for group " + g);
    int have = avail.count(g) ? avail[g] : 0;
    if (have < lo)
      fail(Errc::infeasible_quotas, "group " + g + " has " +
                                        std::to_string(have) + " candidates, min is " +
                                        std::to_string(lo));
    sum_min += lo;
    capacity += std::min(have, hi);
  }
  for (const auto& [g, n] : avail)
    if (!group_quotas.count(g)) capacity += n;  // unconstrained groups
  if (sum_min > target_size)
    fail(Errc::infeasible_quotas, "quota minimums exceed target size");
  if (capacity < target_size)
    fail(Errc::infeasible_quotas, "quota maximums cannot reach target size");
}

// ---------------------------------------------------------------------------
// binning

int BinEdges::bin_of(int feature, double value) const {
  const auto& c = cuts[feature];
  if (degenerate[feature]) return 0;
  // first bin whose upper cut exceeds the value; outside values clamp
  return static_cast<int>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

int BinEdges::active_features() const {
  int n = 0;
  for (bool d : degenerate)
    if (!d) ++n;
  return n;
}

BinEdges build_bins(const std::vector<std::vector<double>>& reference,
                    int bins_per_feature) {
  if (reference.empty()) fail(Errc::empty_error, "empty reference");
  size_t F = reference.front().size();
  size_t K = reference.size();
  if (K < static_cast<size_t>(bins_per_feature))
    fail(Errc::format_error, "reference smaller than bin count");

  BinEdges edges;
  edges.bins = bins_per_feature;
  edges.cuts.resize(F);
  edges.target.resize(F);
  edges.degenerate.resize(F, false);

  std::vector<double> col(K);
  for (size_t f = 0; f < F; ++f) {
    for (size_t k = 0; k < K; ++k) col[k] = reference[k][f];
    std::sort(col.begin(), col.end());
    if (col.front() == col.back()) {
      edges.degenerate[f] = true;
      edges.target[f] = {1.0};
      continue;
    }
    auto& cuts = edges.cuts[f];
    cuts.resize(bins_per_feature - 1);
    for (int b = 1; b < bins_per_feature; ++b) {
      // type-7 quantile at b/B
      double h = static_cast<double>(K - 1) * b / bins_per_feature;
      size_t lo = static_cast<size_t>(std::floor(h));
      double frac = h - static_cast<double>(lo);
      cuts[b - 1] = lo + 1 < K ? col[lo] + frac * (col[lo + 1] - col[lo])
                               : col[lo];
    }
    auto& p = edges.target[f];
    p.assign(bins_per_feature, 0.0);
    for (size_t k = 0; k < K; ++k) p[edges.bin_of(static_cast<int>(f), col[k])] += 1.0;
    for (double& v : p) v /= static_cast<double>(K);
  }
  return edges;
}

double evaluate_objective(const std::vector<std::vector<double>>& selection,
                          const BinEdges& bins) {
  if (selection.empty()) fail(Errc::empty_error, "empty selection");
  size_t F = bins.target.size();
  int active = bins.active_features();
  if (active == 0) return 0.0;
  double total = 0;
  std::vector<double> h(bins.bins);
  for (size_t f = 0; f < F; ++f) {
    if (bins.degenerate[f]) continue;
    std::fill(h.begin(), h.end(), 0.0);
    for (const auto& row : selection) h[bins.bin_of(static_cast<int>(f), row[f])] += 1.0;
    double dev = 0;
    for (int b = 0; b < bins.bins; ++b)
      dev += std::fabs(h[b] / selection.size() - bins.target[f][b]);
    total += dev;
  }
  return total / active;
}

SolverMode parse_solver_mode(const std::string& name) {
  if (name == "exact") return SolverMode::exact;
  if (name == "heuristic") return SolverMode::heuristic;
  fail(Errc::config_error, "unknown solver mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// shared solver scaffolding

namespace {

struct Instance {
  int M = 0, N = 0, B = 0;
  std::vector<int> order;                 // candidate indices sorted by id
  std::vector<std::vector<int>> labels;   // [pos][feature], sorted order
  std::vector<int> features;              // indices of non-degenerate features
  std::vector<std::vector<double>> target;  // per active feature, bin mass
  std::vector<int> group_of;              // quota-group index per pos, -1 = free
  std::vector<std::pair<int, int>> quota; // per group (min, max)
  std::vector<std::vector<int>> group_suffix;  // [pos][group]: availability at pos..M
};

Instance build_instance(const SelectionProblem& p, const BinEdges& bins) {
  Instance ins;
  ins.M = static_cast<int>(p.candidates.size());
  ins.N = p.target_size;
  ins.B = bins.bins;

  ins.order.resize(ins.M);
  std::iota(ins.order.begin(), ins.order.end(), 0);
  std::sort(ins.order.begin(), ins.order.end(), [&](int a, int b) {
    return p.candidates[a].id < p.candidates[b].id;
  });

  for (size_t f = 0; f < bins.target.size(); ++f)
    if (!bins.degenerate[f]) {
      ins.features.push_back(static_cast<int>(f));
      ins.target.push_back(bins.target[f]);
    }

  ins.labels.resize(ins.M);
  for (int pos = 0; pos < ins.M; ++pos) {
    const auto& row = p.candidates[ins.order[pos]].values;
    ins.labels[pos].resize(ins.features.size());
    for (size_t j = 0; j < ins.features.size(); ++j)
      ins.labels[pos][j] = bins.bin_of(ins.features[j], row[ins.features[j]]);
  }

  std::map<std::string, int> group_index;
  for (const auto& [g, mm] : p.group_quotas) {
    group_index[g] = static_cast<int>(ins.quota.size());
    ins.quota.push_back(mm);
  }
  ins.group_of.resize(ins.M, -1);
  for (int pos = 0; pos < ins.M; ++pos) {
    auto it = group_index.find(p.candidates[ins.order[pos]].group);
    if (it != group_index.end()) ins.group_of[pos] = it->second;
  }
  int G = static_cast<int>(ins.quota.size());
  ins.group_suffix.assign(ins.M + 1, std::vector<int>(G + 1, 0));
  for (int pos = ins.M - 1; pos >= 0; --pos) {
    ins.group_suffix[pos] = ins.group_suffix[pos + 1];
    int g = ins.group_of[pos];
    ++ins.group_suffix[pos][g < 0 ? G : g];
  }
  return ins;
}

// histogram counts per active feature for a selection given as positions
struct Counts {
  std::vector<std::vector<int>> h;  // [feature][bin]
  int size = 0;

  Counts(size_t features, int bins) : h(features, std::vector<int>(bins, 0)) {}
  void add(const Instance& ins, int pos) {
    for (size_t j = 0; j < h.size(); ++j) ++h[j][ins.labels[pos][j]];
    ++size;
  }
  void remove(const Instance& ins, int pos) {
    for (size_t j = 0; j < h.size(); ++j) --h[j][ins.labels[pos][j]];
    --size;
  }
};

double objective_of(const Instance& ins, const Counts& c) {
  if (ins.features.empty() || c.size == 0) return 0.0;
  double total = 0;
  for (size_t j = 0; j < ins.features.size(); ++j) {
    double dev = 0;
    for (int b = 0; b < ins.B; ++b)
      dev += std::fabs(static_cast<double>(c.h[j][b]) / c.size - ins.target[j][b]);
    total += dev;
  }
  return total / static_cast<double>(ins.features.size());
}

// Can the partial selection still be completed within the quotas?
bool quota_completable(const Instance& ins, const std::vector<int>& sel_g,
                       int pos, int rem) {
  int G = static_cast<int>(ins.quota.size());
  if (G == 0) return true;
  long need = 0, cap = ins.group_suffix[pos][G];  // untagged availability
  for (int g = 0; g < G; ++g) {
    if (sel_g[g] > ins.quota[g].second) return false;
    need += std::max(0, ins.quota[g].first - sel_g[g]);
    cap += std::min(ins.group_suffix[pos][g], ins.quota[g].second - sel_g[g]);
  }
  return need <= rem && cap >= rem;
}

// ---------------------------------------------------------------------------
// exact branch-and-bound

struct ExactSolver {
  const Instance& ins;
  Counts counts;
  std::vector<int> sel_g;
  std::vector<int> chosen;
  std::vector<std::vector<std::vector<int>>> bin_suffix;  // [pos][feature][bin]

  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> best;
  long nodes = 0;

  explicit ExactSolver(const Instance& i)
      : ins(i),
        counts(i.features.size(), i.B),
        sel_g(i.quota.size(), 0) {
    bin_suffix.assign(
        ins.M + 1,
        std::vector<std::vector<int>>(ins.features.size(),
                                      std::vector<int>(ins.B, 0)));
    for (int pos = ins.M - 1; pos >= 0; --pos) {
      bin_suffix[pos] = bin_suffix[pos + 1];
      for (size_t j = 0; j < ins.features.size(); ++j)
        ++bin_suffix[pos][j][ins.labels[pos][j]];
    }
  }

  // Exact lower bound: the deviation that must remain after the best
  // possible placement of the remaining picks. Each added count moves one
  // bin of every feature; per feature the marginal |count - target| steps
  // are convex per bin, so taking the m smallest marginals is optimal.
  double lower_bound(int pos) const {
    if (ins.features.empty()) return 0.0;
    int m = ins.N - counts.size;
    double total = 0;
    std::vector<double> deltas;
    for (size_t j = 0; j < ins.features.size(); ++j) {
      double base = 0;
      deltas.clear();
      for (int b = 0; b < ins.B; ++b) {
        double t = ins.target[j][b] * ins.N;
        double c = counts.h[j][b];
        base += std::fabs(c - t);
        int avail = bin_suffix[pos][j][b];
        for (int step = 1; step <= avail; ++step)
          deltas.push_back(std::fabs(c + step - t) - std::fabs(c + step - 1 - t));
      }
      std::partial_sort(deltas.begin(),
                        deltas.begin() + std::min<size_t>(m, deltas.size()),
                        deltas.end());
      for (int i = 0; i < m && i < static_cast<int>(deltas.size()); ++i)
        base += deltas[i];
      total += base;
    }
    return total / (static_cast<double>(ins.features.size()) * ins.N);
  }

  void dfs(int pos) {
    ++nodes;
    if (counts.size == ins.N) {
      double obj = objective_of(ins, counts);
      if (obj < best_obj) {  // first optimum found is the lex-smallest set
        best_obj = obj;
        best = chosen;
      }
      return;
    }
    if (pos == ins.M) return;
    if (counts.size + (ins.M - pos) < ins.N) return;
    if (!quota_completable(ins, sel_g, pos, ins.N - counts.size)) return;
    if (lower_bound(pos) >= best_obj) return;

    int g = ins.group_of[pos];
    if (g < 0 || sel_g[g] < ins.quota[g].second) {
      if (g >= 0) ++sel_g[g];
      counts.add(ins, pos);
      chosen.push_back(pos);
      dfs(pos + 1);
      chosen.pop_back();
      counts.remove(ins, pos);
      if (g >= 0) --sel_g[g];
    }
    dfs(pos + 1);
  }
};

// ---------------------------------------------------------------------------
// greedy + first-improvement 1-swap

struct HeuristicSolver {
  const Instance& ins;
  Counts counts;
  std::vector<int> sel_g;
  std::vector<char> selected;
  long swaps = 0;

  explicit HeuristicSolver(const Instance& i)
      : ins(i), counts(i.features.size(), i.B), sel_g(i.quota.size(), 0),
        selected(i.M, 0) {}

  void add(int pos) {
    counts.add(ins, pos);
    selected[pos] = 1;
    int g = ins.group_of[pos];
    if (g >= 0) ++sel_g[g];
  }
  void remove(int pos) {
    counts.remove(ins, pos);
    selected[pos] = 0;
    int g = ins.group_of[pos];
    if (g >= 0) --sel_g[g];
  }

  void greedy() {
    while (counts.size < ins.N) {
      int best_pos = -1;
      double best_obj = std::numeric_limits<double>::infinity();
      int rem_after = ins.N - counts.size - 1;
      for (int pos = 0; pos < ins.M; ++pos) {
        if (selected[pos]) continue;
        int g = ins.group_of[pos];
        if (g >= 0 && sel_g[g] + 1 > ins.quota[g].second) continue;
        add(pos);
        double obj = free_completable(rem_after)
                         ? objective_of(ins, counts)
                         : std::numeric_limits<double>::infinity();
        remove(pos);
        if (obj < best_obj) {
          best_obj = obj;
          best_pos = pos;
        }
      }
      if (best_pos < 0)
        fail(Errc::infeasible_quotas, "greedy construction ran out of moves");
      add(best_pos);
    }
  }

  // completion must not run out of unselected candidates per group
  bool free_completable(int rem) const {
    int G = static_cast<int>(ins.quota.size());
    long cap = 0;
    std::vector<int> unsel(G + 1, 0);
    for (int pos = 0; pos < ins.M; ++pos) {
      if (selected[pos]) continue;
      int g = ins.group_of[pos];
      ++unsel[g < 0 ? G : g];
    }
    long need = 0;
    for (int g = 0; g < G; ++g) {
      if (unsel[g] < std::max(0, ins.quota[g].first - sel_g[g])) return false;
      need += std::max(0, ins.quota[g].first - sel_g[g]);
      cap += std::min(unsel[g], ins.quota[g].second - sel_g[g]);
    }
    cap += unsel[G];
    return need <= rem && cap >= rem;
  }

  bool quotas_ok_after_swap(int out_pos, int in_pos) const {
    int G = static_cast<int>(ins.quota.size());
    if (G == 0) return true;
    std::vector<int> g = sel_g;
    if (ins.group_of[out_pos] >= 0) --g[ins.group_of[out_pos]];
    if (ins.group_of[in_pos] >= 0) ++g[ins.group_of[in_pos]];
    for (int i = 0; i < G; ++i)
      if (g[i] < ins.quota[i].first || g[i] > ins.quota[i].second) return false;
    return true;
  }

  void local_search(long swap_cap) {
    double cur = objective_of(ins, counts);
    bool improved = true;
    while (improved && swaps < swap_cap) {
      improved = false;
      for (int out = 0; out < ins.M && !improved; ++out) {
        if (!selected[out]) continue;
        for (int in = 0; in < ins.M && !improved; ++in) {
          if (selected[in]) continue;
          if (!quotas_ok_after_swap(out, in)) continue;
          remove(out);
          add(in);
          double obj = objective_of(ins, counts);
          if (obj < cur - 1e-15) {
            cur = obj;
            ++swaps;
            improved = true;
          } else {
            remove(in);
            add(out);
          }
        }
      }
    }
  }
};

std::vector<double> per_feature_deviation(const SelectionProblem& p,
                                          const BinEdges& bins,
                                          const std::vector<std::string>& ids) {
  std::set<std::string> chosen(ids.begin(), ids.end());
  size_t F = bins.target.size();
  std::vector<double> out(F, 0.0);
  std::vector<std::vector<double>> h(F, std::vector<double>(bins.bins, 0.0));
  size_t n = 0;
  for (const auto& c : p.candidates) {
    if (!chosen.count(c.id)) continue;
    ++n;
    for (size_t f = 0; f < F; ++f)
      if (!bins.degenerate[f]) h[f][bins.bin_of(static_cast<int>(f), c.values[f])] += 1.0;
  }
  for (size_t f = 0; f < F; ++f) {
    if (bins.degenerate[f]) continue;
    double dev = 0;
    for (int b = 0; b < bins.bins; ++b)
      dev += std::fabs(h[f][b] / static_cast<double>(n) - bins.target[f][b]);
    out[f] = dev;
  }
  return out;
}

}  // namespace

SelectionResult solve(const SelectionProblem& problem, SolverMode mode,
                      uint64_t seed, int swap_cap_factor) {
  (void)seed;  // both solvers are fully deterministic
  problem.validate();
  BinEdges bins = build_bins(problem.reference, problem.bins_per_feature);
  Instance ins = build_instance(problem, bins);

  SelectionResult result;
  result.solver = mode;
  std::vector<int> positions;

  if (mode == SolverMode::exact) {
    if (ins.M > 25)
      fail(Errc::exact_too_large,
           "exact mode limited to 25 candidates, got " + std::to_string(ins.M));
    ExactSolver solver(ins);
    solver.dfs(0);
    positions = solver.best;
    result.objective = solver.best_obj;
    result.iterations = solver.nodes;
  } else {
    HeuristicSolver solver(ins);
    solver.greedy();
    solver.local_search(static_cast<long>(swap_cap_factor) * ins.M);
    for (int pos = 0; pos < ins.M; ++pos)
      if (solver.selected[pos]) positions.push_back(pos);
    result.objective = objective_of(ins, solver.counts);
    result.iterations = solver.swaps;
  }

  for (int pos : positions)
    result.selected_ids.push_back(problem.candidates[ins.order[pos]].id);
  std::sort(result.selected_ids.begin(), result.selected_ids.end());
  result.per_feature_deviation =
      per_feature_deviation(problem, bins, result.selected_ids);
  return result;
}

}  // namespace vqforge
