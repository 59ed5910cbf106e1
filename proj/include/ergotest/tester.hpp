#ifndef ERGOTEST_TESTER_HPP
#define ERGOTEST_TESTER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ergotest/empirical.hpp"
#include "ergotest/hypotheses.hpp"
#include "ergotest/parallel.hpp"
#include "ergotest/processes.hpp"
#include "ergotest/rng.hpp"

namespace ergotest {

/// Decision of the uniform test and the two set distances it compared.
struct TestVerdict {
  int decision = 1;
  SetDistance d0;
  SetDistance d1;
};

/// phi(X) = 0 if d-hat(X, H0) < d-hat(X, H1), and 1 otherwise (ties
/// included).
inline TestVerdict uniform_test(const TupleTable& frequencies, const HypothesisSet& h0, const HypothesisSet& h1,
                                std::size_t depth) {
  TestVerdict v;
  v.d0 = h0.minimize(frequencies, depth);
  v.d1 = h1.minimize(frequencies, depth);
  v.decision = v.d0.distance.value < v.d1.distance.value ? 0 : 1;
  return v;
}

inline TestVerdict uniform_test(const Sample& x, const HypothesisSet& h0, const HypothesisSet& h1,
                                const TupleEnumeration& enumeration, std::size_t depth) {
  require_same_alphabet(x.alphabet(), h0.alphabet());
  require_same_alphabet(x.alphabet(), h1.alphabet());
  require_same_alphabet(x.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  return uniform_test(frequency_table(x, depth), h0, h1, depth);
}

/// A Monte Carlo proportion with its normal-approximation 95% interval.
struct Proportion {
  std::size_t trials = 0;
  std::size_t hits = 0;

  double rate() const noexcept { return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials); }
  double half_width() const noexcept {
    if (trials == 0) return 0.0;
    double e = rate();
    return 1.96 * std::sqrt(e * (1.0 - e) / static_cast<double>(trials));
  }
  double lower() const noexcept { return std::max(0.0, rate() - half_width()); }
  double upper() const noexcept { return std::min(1.0, rate() + half_width()); }
};

/// Shared Monte Carlo settings. Trial t of cell (generator g, size s) in
/// experiment e always uses stream (seed; e, g, s, t).
struct MonteCarloOptions {
  std::uint64_t seed = 0;
  std::uint64_t experiment_id = 0;
  std::size_t threads = 1;
};

struct Generator {
  std::string name;
  ProcessPtr process;
  int label = 0;
};

struct CurveCell {
  std::string generator;
  int label = 0;
  std::size_t n = 0;
  Proportion errors;
};

struct ConsistencyReport {
  std::vector<std::size_t> sizes;
  std::vector<CurveCell> cells;  // generator-major, then size
  double alpha = 0.05;
  /// Smallest tested n from which every generator's error rate stays <= alpha
  /// at all larger tested sizes.
  std::optional<std::size_t> n_alpha;

  /// Largest error rate over generators at a given size index.
  const CurveCell& worst_at(std::size_t size_index) const {
    const CurveCell* worst = nullptr;
    for (const auto& c : cells) {
      if (c.n != sizes[size_index]) continue;
      if (worst == nullptr || c.errors.rate() > worst->errors.rate()) worst = &c;
    }
    return *worst;
  }
};

/// Error rates of the uniform test over seeded trials for every generator
/// and sample size.
inline ConsistencyReport consistency_curve(const HypothesisSet& h0, const HypothesisSet& h1,
                                           const std::vector<Generator>& generators,
                                           const std::vector<std::size_t>& sizes, std::size_t trials,
                                           const TupleEnumeration& enumeration, std::size_t depth, double alpha,
                                           const MonteCarloOptions& mc) {
  require_same_alphabet(h0.alphabet(), h1.alphabet());
  require_same_alphabet(h0.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  if (generators.empty() || sizes.empty() || trials == 0) {
    throw ValidationError("consistency curve needs generators, sizes and a positive trial count");
  }
  for (const auto& g : generators) {
    if (g.label != 0 && g.label != 1) throw ValidationError("generator " + g.name + " has label other than 0/1");
    const HypothesisSet& own = g.label == 0 ? h0 : h1;
    if (!own.contains(*g.process, depth)) {
      throw ValidationError("generator " + g.name + " is not a member of hypothesis H" + std::to_string(g.label));
    }
  }
  for (std::size_t n : sizes) {
    if (n == 0) throw ValidationError("sample sizes must be positive");
  }

  const std::size_t cells = generators.size() * sizes.size();
  std::vector<std::uint8_t> wrong(cells * trials, 0);
  const std::size_t a = enumeration.alphabet().size();
  parallel_for(cells * trials, mc.threads, [&](std::size_t task) {
    const std::size_t cell = task / trials;
    const std::size_t t = task % trials;
    const std::size_t g = cell / sizes.size();
    const std::size_t s = cell % sizes.size();
    Rng rng = make_stream(mc.seed, {mc.experiment_id, g, s, t});
    std::vector<Symbol> xs;
    generators[g].process->generate(sizes[s], rng, xs);
    TestVerdict v = uniform_test(frequency_table(xs, a, depth), h0, h1, depth);
    wrong[task] = v.decision != generators[g].label ? 1 : 0;
  });

  ConsistencyReport report;
  report.sizes = sizes;
  report.alpha = alpha;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto& g = generators[cell / sizes.size()];
    CurveCell c{g.name, g.label, sizes[cell % sizes.size()], {trials, 0}};
    for (std::size_t t = 0; t < trials; ++t) c.errors.hits += wrong[cell * trials + t];
    report.cells.push_back(std::move(c));
  }
  // Sizes are reported as given; n_alpha scans them in increasing order.
  std::vector<std::size_t> order(sizes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sizes[x] < sizes[y]; });
  for (std::size_t oi = order.size(); oi-- > 0;) {
    bool ok = true;
    for (std::size_t g = 0; g < generators.size(); ++g) {
      ok = ok && report.cells[g * sizes.size() + order[oi]].errors.rate() <= alpha;
    }
    if (!ok) break;
    report.n_alpha = sizes[order[oi]];
  }
  return report;
}

struct Lemma1Row {
  std::size_t n = 0;
  double percentile95 = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct Lemma1Table {
  DistanceValue exact;  // d(rho, xi) at the same depth
  std::vector<Lemma1Row> rows;
};

/// Monte Carlo law of |d-hat(X_1..n, xi) - d(rho, xi)| for X drawn from rho.
/// Both sides are truncated at the same depth, so truncation cancels.
inline Lemma1Table validate_lemma1(const Process& rho, const Process& xi, const std::vector<std::size_t>& sizes,
                                   std::size_t trials, const TupleEnumeration& enumeration, std::size_t depth,
                                   const MonteCarloOptions& mc) {
  if (trials == 0) throw ValidationError("convergence table needs a positive trial count");
  Lemma1Table table;
  table.exact = exact_distance(rho, xi, enumeration, depth);
  const TupleTable xi_table = xi.marginal_table(depth);
  const std::size_t a = enumeration.alphabet().size();
  std::vector<double> deviation(sizes.size() * trials);
  parallel_for(deviation.size(), mc.threads, [&](std::size_t task) {
    const std::size_t s = task / trials;
    const std::size_t t = task % trials;
    Rng rng = make_stream(mc.seed, {mc.experiment_id, 0, s, t});
    std::vector<Symbol> xs;
    rho.generate(sizes[s], rng, xs);
    double dhat = weighted_distance(frequency_table(xs, a, depth), xi_table, depth).value;
    deviation[task] = std::abs(dhat - table.exact.value);
  });
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    std::vector<double> v(deviation.begin() + static_cast<std::ptrdiff_t>(s * trials),
                          deviation.begin() + static_cast<std::ptrdiff_t>((s + 1) * trials));
    double sum = 0.0;
    for (double d : v) sum += d;
    std::sort(v.begin(), v.end());
    // Nearest-rank percentile.
    std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(trials)));
    table.rows.push_back(Lemma1Row{sizes[s], v[std::max<std::size_t>(rank, 1) - 1], sum / static_cast<double>(trials),
                                   v.back()});
  }
  return table;
}

enum class DeviationVerdict { satisfied, inconclusive, violated };

inline const char* to_string(DeviationVerdict v) {
  switch (v) {
    case DeviationVerdict::satisfied: return "satisfied";
    case DeviationVerdict::inconclusive: return "inconclusive";
    case DeviationVerdict::violated: return "violated";
  }
  return "?";
}

/// One side-by-side Monte Carlo check of a deviation inequality
/// P(left event) <= P(right event).
struct DeviationCheck {
  std::string inequality;  // "far" or "close"
  std::size_t m = 0;
  std::size_t k = 0;
  double epsilon = 0.0;
  double threshold = 0.0;  // threshold of the length-k event
  Proportion left;
  Proportion right;
  DeviationVerdict verdict = DeviationVerdict::satisfied;
};

/// Checks, for every epsilon,
///   far:   P(d(X_1..m, H) >= eps) <= P(d(X_1..k, H) >= eps - 2k/(m-k+1) - t_k)
///   close: P(d(X_1..m, H) <= eps) <= P(d(X_1..k, H) <= m eps/(m-k+1) + 2k/(m-k+1))
/// with the length-k event evaluated on the prefix of the same sample. A
/// check is violated only when the left interval lies wholly above the right.
inline std::vector<DeviationCheck> validate_lemma2(const Process& rho, const HypothesisSet& h, std::size_t m,
                                                   std::size_t k, const std::vector<double>& epsilons,
                                                   std::size_t trials, const TupleEnumeration& enumeration,
                                                   std::size_t depth, const MonteCarloOptions& mc) {
  if (!(k > 0 && 2 * k > 1 && m > 2 * k)) throw ValidationError("deviation check requires m > 2k > 1");
  if (trials == 0) throw ValidationError("deviation check needs a positive trial count");
  require_same_alphabet(rho.alphabet(), h.alphabet());
  require_same_alphabet(rho.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  const std::size_t a = enumeration.alphabet().size();
  std::vector<double> long_dist(trials), short_dist(trials);
  parallel_for(trials, mc.threads, [&](std::size_t t) {
    Rng rng = make_stream(mc.seed, {mc.experiment_id, 0, 0, t});
    std::vector<Symbol> xs;
    rho.generate(m, rng, xs);
    std::span<const Symbol> all(xs);
    long_dist[t] = h.minimize(frequency_table(all, a, depth), depth).distance.value;
    short_dist[t] = h.minimize(frequency_table(all.first(k), a, depth), depth).distance.value;
  });

  const double mk = static_cast<double>(m - k + 1);
  const double slack = 2.0 * static_cast<double>(k) / mk;
  const double tk = weight_tail(a, k);
  auto judge = [](DeviationCheck& c) {
    if (c.left.lower() > c.right.upper()) {
      c.verdict = DeviationVerdict::violated;
    } else if (c.left.rate() <= c.right.rate()) {
      c.verdict = DeviationVerdict::satisfied;
    } else {
      c.verdict = DeviationVerdict::inconclusive;
    }
  };
  std::vector<DeviationCheck> checks;
  for (double eps : epsilons) {
    DeviationCheck far{"far", m, k, eps, eps - slack - tk, {trials, 0}, {trials, 0}};
    DeviationCheck close{"close", m, k, eps, static_cast<double>(m) * eps / mk + slack, {trials, 0}, {trials, 0}};
    for (std::size_t t = 0; t < trials; ++t) {
      far.left.hits += long_dist[t] >= eps ? 1 : 0;
      far.right.hits += short_dist[t] >= far.threshold ? 1 : 0;
      close.left.hits += long_dist[t] <= eps ? 1 : 0;
      close.right.hits += short_dist[t] <= close.threshold ? 1 : 0;
    }
    judge(far);
    judge(close);
    checks.push_back(far);
    checks.push_back(close);
  }
  return checks;
}

struct SwitchingMember {
  double dwell = 0.0;
  std::shared_ptr<const SwitchingProcess> process;
  DistanceValue distance_to_center;
};

struct ImpossibilityReport {
  DistanceValue rho_nu;  // certified d(rho, nu)
  double epsilon = 0.0;
  double delta = 0.0;
  std::vector<SwitchingMember> admitted;
  std::vector<SwitchingMember> rejected;
  ConsistencyReport curve;
  std::vector<CurveCell> worst;  // per sample size
};

/// Tests H0 = {rho} against an explicit representation of the ball of
/// radius epsilon around nu that contains switching processes toggling
/// between nu and rho with rho-share delta and growing dwell times. Reports,
/// per sample size, the worst error over generators.
inline ImpossibilityReport impossibility_demo(const ProcessPtr& rho, const ProcessPtr& nu, double epsilon,
                                              double delta, const std::vector<double>& dwell_times,
                                              const std::vector<std::size_t>& sizes, std::size_t trials,
                                              const TupleEnumeration& enumeration, std::size_t depth,
                                              const MonteCarloOptions& mc) {
  ImpossibilityReport report;
  report.epsilon = epsilon;
  report.delta = delta;
  report.rho_nu = exact_distance(*rho, *nu, enumeration, depth);
  if (!(report.rho_nu.value - report.rho_nu.tail_bound > epsilon)) {
    throw ValidationError("rho and nu are not certifiably farther apart than epsilon");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");

  std::vector<ProcessPtr> members;
  for (double dwell : dwell_times) {
    SwitchingMember sm{dwell, SwitchingProcess::with_share(nu, rho, dwell, delta), {}};
    sm.distance_to_center = exact_distance(*sm.process, *nu, enumeration, depth);
    if (sm.distance_to_center.upper() <= epsilon) {
      members.push_back(sm.process);
      report.admitted.push_back(std::move(sm));
    } else {
      report.rejected.push_back(std::move(sm));
    }
  }
  FiniteHypothesis h0({rho});
  BallHypothesis h1(nu, epsilon, members, enumeration, depth);

  std::vector<Generator> generators{{"rho", rho, 0}, {"nu", nu, 1}};
  for (const auto& sm : report.admitted) {
    std::ostringstream name;
    name << "zeta_dwell_";
    if (sm.dwell == std::floor(sm.dwell) && sm.dwell < 1e15) {
      name << static_cast<std::uint64_t>(sm.dwell);
    } else {
      name << sm.dwell;
    }
    generators.push_back({name.str(), sm.process, 1});
  }
  report.curve = consistency_curve(h0, h1, generators, sizes, trials, enumeration, depth, 0.05, mc);
  for (std::size_t s = 0; s < sizes.size(); ++s) report.worst.push_back(report.curve.worst_at(s));
  return report;
}

}  // namespace ergotest

#endif  // ERGOTEST_TESTER_HPP
