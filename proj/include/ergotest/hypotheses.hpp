#ifndef ERGOTEST_HYPOTHESES_HPP
#define ERGOTEST_HYPOTHESES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergotest/empirical.hpp"
#include "ergotest/processes.hpp"

namespace ergotest {

/// Result of minimizing d-hat(X, .) over a hypothesis set.
struct SetDistance {
  DistanceValue distance;
  ProcessPtr witness;
  /// Index of the witness in the set's representation (grid point index for
  /// parametric families, before refinement).
  std::size_t witness_index = 0;
  /// Optimization gap: 0 for exact minima, the final search mesh otherwise.
  double tolerance = 0.0;
  std::size_t evaluations = 0;
};

/// A set H of stationary ergodic processes that can minimize d-hat(X, rho)
/// over rho in H. The representation of every shipped set is compact and
/// all-ergodic, so it coincides with its closure.
class HypothesisSet {
 public:
  explicit HypothesisSet(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}
  virtual ~HypothesisSet() = default;
  HypothesisSet(const HypothesisSet&) = delete;
  HypothesisSet& operator=(const HypothesisSet&) = delete;

  const Alphabet& alphabet() const noexcept { return alphabet_; }

  /// inf over the set of the distance between sample frequencies and member
  /// marginals, up to the declared tolerance.
  virtual SetDistance minimize(const TupleTable& frequencies, std::size_t depth) const = 0;

  /// Declared optimization tolerance eta.
  virtual double tolerance() const noexcept = 0;

  /// Marginal tables of a finite grid over the representation.
  virtual std::vector<TupleTable> representation_tables(std::size_t depth) const = 0;

  /// Whether the process is a member of the representation.
  virtual bool contains(const Process& process, std::size_t depth) const = 0;

  virtual std::string describe() const = 0;

 private:
  Alphabet alphabet_;
};

using HypothesisPtr = std::shared_ptr<const HypothesisSet>;

/// Finitely many processes; the minimum is exact. Ties go to the lowest
/// member index.
class FiniteHypothesis final : public HypothesisSet {
 public:
  explicit FiniteHypothesis(std::vector<ProcessPtr> members)
      : HypothesisSet(members.empty() || !members.front() ? Alphabet() : members.front()->alphabet()),
        members_(std::move(members)) {
    if (members_.empty()) throw ValidationError("finite hypothesis needs at least one member");
    for (const auto& m : members_) {
      if (!m) throw ValidationError("finite hypothesis member is null");
      require_same_alphabet(alphabet(), m->alphabet());
    }
  }

  const std::vector<ProcessPtr>& members() const noexcept { return members_; }

  SetDistance minimize(const TupleTable& frequencies, std::size_t depth) const override {
    const auto& tables = tables_at(depth);
    SetDistance best;
    best.distance.value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tables.size(); ++i) {
      DistanceValue d = weighted_distance(frequencies, tables[i], depth);
      if (d.value < best.distance.value) {
        best.distance = d;
        best.witness = members_[i];
        best.witness_index = i;
      }
    }
    best.evaluations = tables.size();
    return best;
  }

  double tolerance() const noexcept override { return 0.0; }

  std::vector<TupleTable> representation_tables(std::size_t depth) const override { return tables_at(depth); }

  bool contains(const Process& process, std::size_t depth) const override {
    if (process.alphabet() != alphabet()) return false;
    const auto& tables = tables_at(depth);
    TupleTable own = process.marginal_table(depth);
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (members_[i].get() == &process) return true;
      if (weighted_distance(own, tables[i], depth).value <= 1e-15) return true;
    }
    return false;
  }

  std::string describe() const override {
    std::string s = "finite{";
    for (std::size_t i = 0; i < members_.size(); ++i) s += (i ? ", " : "") + members_[i]->describe();
    return s + "}";
  }

 private:
  const std::vector<TupleTable>& tables_at(std::size_t depth) const {
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(depth);
    if (it == cache_.end()) {
      std::vector<TupleTable> tables;
      tables.reserve(members_.size());
      for (const auto& m : members_) tables.push_back(m->marginal_table(depth));
      it = cache_.emplace(depth, std::move(tables)).first;
    }
    return it->second;
  }

  std::vector<ProcessPtr> members_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::size_t, std::vector<TupleTable>> cache_;
};

/// Settings of the grid scan plus direct search used by parametric families.
struct SearchOptions {
  double resolution = 0.05;
  std::size_t refine_budget = 2000;
  double min_step = 1e-6;
  std::size_t max_grid_points = 2'000'000;
};

/// All k-th order Markov chains whose transition entries lie in a closed box
/// inside the gamma-interior of the simplex. Order 0 gives an i.i.d. family.
/// Free parameters are the first |A| - 1 entries of every row; the last entry
/// is implied.
class MarkovFamilyHypothesis final : public HypothesisSet {
 public:
  MarkovFamilyHypothesis(Alphabet alphabet, std::size_t order, std::vector<double> lower, std::vector<double> upper,
                         SearchOptions options = {}, double gamma = kDefaultGamma)
      : HypothesisSet(std::move(alphabet)), order_(order), options_(options), gamma_(gamma) {
    const std::size_t a = this->alphabet().size();
    rows_ = static_cast<std::size_t>(checked_pow(a, order_));
    if (lower.size() != rows_ * a || upper.size() != rows_ * a) {
      throw ValidationError("parameter box needs " + std::to_string(rows_) + " rows of " + std::to_string(a) +
                            " bounds");
    }
    if (!(options_.resolution > 0.0) || !(options_.min_step > 0.0)) {
      throw ValidationError("search resolution and minimum step must be positive");
    }
    lower_.resize(lower.size());
    upper_.resize(upper.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      double lo_sum = 0.0;
      double hi_sum = 0.0;
      std::vector<double> lo(a), hi(a);
      for (std::size_t j = 0; j < a; ++j) {
        lo[j] = std::max(lower[r * a + j], gamma_);
        hi[j] = std::min(upper[r * a + j], 1.0);
        lo_sum += lo[j];
        hi_sum += hi[j];
      }
      for (std::size_t j = 0; j < a; ++j) {
        // Entry j is also pinned by the others through the row sum.
        double l = std::max(lo[j], 1.0 - (hi_sum - hi[j]));
        double h = std::min(hi[j], 1.0 - (lo_sum - lo[j]));
        if (l > h + 1e-15 || lo_sum > 1.0 + 1e-12 || hi_sum < 1.0 - 1e-12) {
          throw ValidationError("parameter box row " + std::to_string(r) + " is empty after gamma-clipping");
        }
        lower_[r * a + j] = l;
        upper_[r * a + j] = std::max(l, h);
      }
    }
    // Grid axes over the free coordinates.
    for (std::size_t r = 0; r < rows_; ++r) {
      for (std::size_t j = 0; j + 1 < a; ++j) {
        double lo = lower_[r * a + j];
        double hi = upper_[r * a + j];
        std::vector<double> axis;
        for (std::size_t i = 0;; ++i) {
          double v = lo + static_cast<double>(i) * options_.resolution;
          if (v > hi - 1e-12) break;
          axis.push_back(v);
        }
        axis.push_back(hi);
        axes_.push_back(std::move(axis));
      }
    }
    std::size_t total = 1;
    for (const auto& axis : axes_) {
      if (total > options_.max_grid_points / axis.size()) {
        throw ValidationError("parameter grid exceeds " + std::to_string(options_.max_grid_points) + " points");
      }
      total *= axis.size();
    }
    grid_size_ = total;
  }

  std::size_t order() const noexcept { return order_; }
  std::size_t dimension() const noexcept { return axes_.size(); }
  std::size_t grid_size() const noexcept { return grid_size_; }
  const SearchOptions& options() const noexcept { return options_; }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }

  /// Grid scan, then local refinement from the best grid point of this grid
  /// and of every coarser grid r*2^j nested in it. Refinement depends only on
  /// its start, so halving the resolution never raises the result.
  SetDistance minimize(const TupleTable& frequencies, std::size_t depth) const override {
    const std::size_t dim = dimension();
    double width = 0.0;
    for (const auto& axis : axes_) width = std::max(width, axis.back() - axis.front());
    std::size_t levels = 1;
    for (double r = options_.resolution; r < width; r *= 2.0) ++levels;

    std::vector<double> level_best(levels, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> level_index(levels, 0);
    std::vector<double> theta(dim);
    std::size_t evaluations = 0;
    for (std::size_t g = 0; g < grid_size_; ++g) {
      grid_point(g, theta);
      if (!feasible(theta)) continue;
      double f = objective(frequencies, theta, depth);
      ++evaluations;
      std::size_t top = coarsest_level(g, levels);
      for (std::size_t j = 0; j <= top; ++j) {
        if (f < level_best[j]) {
          level_best[j] = f;
          level_index[j] = g;
        }
      }
    }
    if (!(level_best[0] < std::numeric_limits<double>::infinity())) {
      throw ValidationError("parameter box has no feasible grid point");
    }

    SetDistance out;
    out.distance = DistanceValue{std::numeric_limits<double>::infinity(), weight_tail(alphabet().size(), depth), depth};
    std::vector<double> best_theta;
    for (std::size_t j = 0; j < levels; ++j) {
      if (!(level_best[j] < std::numeric_limits<double>::infinity())) continue;
      if (std::find(level_index.begin(), level_index.begin() + static_cast<std::ptrdiff_t>(j), level_index[j]) !=
          level_index.begin() + static_cast<std::ptrdiff_t>(j)) {
        continue;
      }
      grid_point(level_index[j], theta);
      double value = level_best[j];
      double step = 0.0;
      evaluations += refine(frequencies, depth, theta, value, step);
      if (value < out.distance.value) {
        out.distance.value = value;
        out.witness_index = level_index[j];
        out.tolerance = step;
        best_theta = theta;
      }
    }
    out.witness = make_member(best_theta);
    out.evaluations = evaluations;
    return out;
  }

  double tolerance() const noexcept override { return options_.min_step; }

  std::vector<TupleTable> representation_tables(std::size_t depth) const override {
    std::vector<TupleTable> tables;
    std::vector<double> theta(dimension());
    for (std::size_t g = 0; g < grid_size_; ++g) {
      grid_point(g, theta);
      if (feasible(theta)) tables.push_back(chain_marginal_table(make_chain(theta), depth));
    }
    return tables;
  }

  bool contains(const Process& process, std::size_t) const override {
    const FiniteChain* chain = process.chain();
    if (chain == nullptr || process.alphabet() != alphabet() || chain->order > order_) return false;
    const std::size_t a = alphabet().size();
    for (std::size_t r = 0; r < rows_; ++r) {
      // A lower-order chain is the k-th order chain that ignores older context.
      std::size_t ctx = chain->rows() == 1 ? 0 : r % chain->rows();
      for (std::size_t j = 0; j < a; ++j) {
        double v = chain->prob(ctx, static_cast<Symbol>(j));
        if (v < lower_[r * a + j] - 1e-12 || v > upper_[r * a + j] + 1e-12) return false;
      }
    }
    return true;
  }

  /// The member at the given free parameters.
  ProcessPtr make_member(const std::vector<double>& theta) const {
    FiniteChain chain = make_chain(theta);
    if (order_ == 0) return std::make_shared<const IIDProcess>(alphabet(), chain.transition);
    return std::make_shared<const MarkovProcess>(alphabet(), order_, chain.transition, gamma_);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "markov_family(order=" << order_ << ", lower=" << detail::format_vector(lower_)
       << ", upper=" << detail::format_vector(upper_) << ")";
    return os.str();
  }

 private:
  // Largest j such that grid point g also lies on the grid of resolution
  // r*2^j: every axis index is a multiple of 2^j or the upper endpoint.
  std::size_t coarsest_level(std::size_t g, std::size_t levels) const {
    std::size_t top = levels - 1;
    for (const auto& axis : axes_) {
      std::size_t i = g % axis.size();
      g /= axis.size();
      if (i + 1 == axis.size() || i == 0) continue;
      std::size_t j = 0;
      while (j < top && i % (std::size_t{2} << j) == 0) ++j;
      top = j;
    }
    return top;
  }

  // Local refinement: Gauss-Newton steps, then a mesh-adaptive direct search
  // polling the coordinate directions plus fresh unit directions from a
  // fixed-seed generator. Returns the number of objective evaluations.
  std::size_t refine(const TupleTable& frequencies, std::size_t depth, std::vector<double>& best_theta, double& best,
                     double& step) const {
    const std::size_t dim = dimension();
    std::size_t count = gauss_newton(frequencies, depth, best_theta, best);
    step = 1e-2;
    Rng directions(0x5eed);
    std::vector<double> dir(dim);
    std::normal_distribution<double> gauss;
    auto poll = [&](const std::vector<double>& direction) {
      std::vector<double> candidate = best_theta;
      bool moved = false;
      for (std::size_t d = 0; d < dim; ++d) {
        candidate[d] = std::clamp(best_theta[d] + step * direction[d], axes_[d].front(), axes_[d].back());
        moved = moved || candidate[d] != best_theta[d];
      }
      if (!moved || !feasible(candidate)) return false;
      double f = objective(frequencies, candidate, depth);
      ++count;
      if (f < best) {
        best = f;
        best_theta = std::move(candidate);
        return true;
      }
      return false;
    };
    while (step >= options_.min_step && count < options_.refine_budget) {
      bool improved = false;
      for (std::size_t d = 0; d < dim && !improved && count < options_.refine_budget; ++d) {
        for (double sign : {1.0, -1.0}) {
          std::fill(dir.begin(), dir.end(), 0.0);
          dir[d] = sign;
          if ((improved = poll(dir))) break;
        }
      }
      for (std::size_t i = 0; i < 4 * dim && !improved && count < options_.refine_budget; ++i) {
        double norm = 0.0;
        for (auto& v : dir) {
          v = gauss(directions);
          norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : dir) v /= norm;
        improved = poll(dir);
      }
      if (!improved) step /= 2.0;
    }
    return count;
  }

  std::vector<double> flat_marginals(const std::vector<double>& theta, std::size_t depth) const {
    TupleTable t = chain_marginal_table(make_chain(theta), depth);
    std::vector<double> out;
    for (std::size_t l = 1; l <= depth; ++l) out.insert(out.end(), t.levels[l].begin(), t.levels[l].end());
    return out;
  }

  // Levenberg-Marquardt on the reweighted least-squares form of the weighted
  // L1 objective, |r| ~ r^2 / |r_prev|, with a finite-difference Jacobian.
  // Direct search alone stalls in the narrow kinked valleys along level sets
  // of the low-order marginals.
  std::size_t gauss_newton(const TupleTable& frequencies, std::size_t depth, std::vector<double>& theta,
                           double& best) const {
    const std::size_t dim = dimension();
    std::vector<double> f;
    std::vector<double> w;
    double weight = 1.0;
    for (std::size_t l = 1; l <= depth; ++l) {
      for (double v : frequencies.levels[l]) {
        weight *= 0.5;
        f.push_back(v);
        w.push_back(weight);
      }
    }
    const auto m = static_cast<Eigen::Index>(f.size());
    const auto n = static_cast<Eigen::Index>(dim);
    std::size_t evaluations = 0;
    double lambda = 1e-3;
    for (int iter = 0; iter < 100 && evaluations < options_.refine_budget / 2; ++iter) {
      std::vector<double> g = flat_marginals(theta, depth);
      Eigen::MatrixXd jac(m, n);
      for (std::size_t d = 0; d < dim; ++d) {
        const double h = 1e-7;
        std::vector<double> shifted = theta;
        double sign = theta[d] + h <= axes_[d].back() ? 1.0 : -1.0;
        shifted[d] += sign * h;
        std::vector<double> gs = flat_marginals(shifted, depth);
        ++evaluations;
        for (Eigen::Index i = 0; i < m; ++i) jac(i, static_cast<Eigen::Index>(d)) = (gs[i] - g[i]) / (sign * h);
      }
      Eigen::VectorXd r(m);
      Eigen::VectorXd wr(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        r(i) = f[i] - g[i];
        wr(i) = w[i] / std::max(std::abs(r(i)), 1e-12);
      }
      Eigen::MatrixXd normal = jac.transpose() * wr.asDiagonal() * jac;
      Eigen::VectorXd rhs = jac.transpose() * wr.asDiagonal() * r;
      bool accepted = false;
      while (!accepted && lambda < 1e10 && evaluations < options_.refine_budget / 2) {
        Eigen::MatrixXd damped = normal;
        for (Eigen::Index d = 0; d < n; ++d) damped(d, d) += lambda * (normal(d, d) + 1e-300);
        Eigen::VectorXd delta = damped.ldlt().solve(rhs);
        if (!delta.allFinite()) {
          lambda *= 10.0;
          continue;
        }
        std::vector<double> candidate = theta;
        for (double scale = 1.0; scale > 1e-6; scale /= 2.0) {
          for (std::size_t d = 0; d < dim; ++d) {
            candidate[d] = std::clamp(theta[d] + scale * delta(static_cast<Eigen::Index>(d)), axes_[d].front(),
                                      axes_[d].back());
          }
          if (feasible(candidate)) break;
          candidate = theta;
        }
        double value = objective(frequencies, candidate, depth);
        ++evaluations;
        if (value < best) {
          double moved = 0.0;
          for (std::size_t d = 0; d < dim; ++d) moved = std::max(moved, std::abs(candidate[d] - theta[d]));
          best = value;
          theta = std::move(candidate);
          lambda = std::max(lambda / 3.0, 1e-12);
          accepted = true;
          if (moved < options_.min_step) return evaluations;
        } else {
          lambda *= 4.0;
        }
      }
      if (!accepted) break;
    }
    return evaluations;
  }

  void grid_point(std::size_t g, std::vector<double>& theta) const {
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      theta[d] = axes_[d][g % axes_[d].size()];
      g /= axes_[d].size();
    }
  }

  bool feasible(const std::vector<double>& theta) const {
    const std::size_t a = alphabet().size();
    for (std::size_t r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j + 1 < a; ++j) sum += theta[r * (a - 1) + j];
      double last = 1.0 - sum;
      if (last < lower_[r * a + a - 1] - 1e-12 || last > upper_[r * a + a - 1] + 1e-12) return false;
    }
    return true;
  }

  FiniteChain make_chain(const std::vector<double>& theta) const {
    const std::size_t a = alphabet().size();
    FiniteChain chain{a, order_, std::vector<double>(rows_ * a), {}};
    for (std::size_t r = 0; r < rows_; ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j + 1 < a; ++j) {
        chain.transition[r * a + j] = theta[r * (a - 1) + j];
        sum += theta[r * (a - 1) + j];
      }
      chain.transition[r * a + a - 1] = std::max(0.0, 1.0 - sum);
    }
    chain.stationary = markov_stationary(chain.transition, a, order_);
    return chain;
  }

  double objective(const TupleTable& frequencies, const std::vector<double>& theta, std::size_t depth) const {
    return weighted_distance(frequencies, chain_marginal_table(make_chain(theta), depth), depth).value;
  }

  std::size_t order_;
  std::size_t rows_ = 0;
  SearchOptions options_;
  double gamma_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<std::vector<double>> axes_;
  std::size_t grid_size_ = 0;
};

/// An explicit representation of {mu : d(mu, center) <= radius}: the center
/// plus listed members, each certified inside the ball at construction.
class BallHypothesis final : public HypothesisSet {
 public:
  BallHypothesis(ProcessPtr center, double radius, std::vector<ProcessPtr> members,
                 const TupleEnumeration& enumeration, std::size_t depth)
      : HypothesisSet(center ? center->alphabet() : Alphabet()),
        center_(std::move(center)),
        radius_(radius),
        finite_(with_center(center_, members)) {
    if (!(radius_ >= 0.0)) throw ValidationError("ball radius must be nonnegative");
    for (std::size_t i = 0; i < members.size(); ++i) {
      DistanceValue d = exact_distance(*members[i], *center_, enumeration, depth);
      if (d.upper() > radius_) {
        std::ostringstream os;
        os << "ball member " << i << " has certified distance up to " << d.upper() << " from the center, above radius "
           << radius_;
        throw ValidationError(os.str());
      }
      certified_.push_back(d);
    }
  }

  const ProcessPtr& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }
  /// Representation: center first, then the listed members.
  const std::vector<ProcessPtr>& members() const noexcept { return finite_.members(); }
  /// Certified distance of each listed member (excluding the center).
  const std::vector<DistanceValue>& certified_distances() const noexcept { return certified_; }

  SetDistance minimize(const TupleTable& frequencies, std::size_t depth) const override {
    return finite_.minimize(frequencies, depth);
  }
  double tolerance() const noexcept override { return 0.0; }
  std::vector<TupleTable> representation_tables(std::size_t depth) const override {
    return finite_.representation_tables(depth);
  }
  bool contains(const Process& process, std::size_t depth) const override { return finite_.contains(process, depth); }

  std::string describe() const override {
    std::ostringstream os;
    os << "ball(center=" << center_->describe() << ", radius=" << radius_ << ", members=" << members().size() << ")";
    return os.str();
  }

 private:
  static std::vector<ProcessPtr> with_center(const ProcessPtr& center, const std::vector<ProcessPtr>& members) {
    if (!center) throw ValidationError("ball needs a center");
    std::vector<ProcessPtr> all{center};
    all.insert(all.end(), members.begin(), members.end());
    return all;
  }

  ProcessPtr center_;
  double radius_;
  FiniteHypothesis finite_;
  std::vector<DistanceValue> certified_;
};

/// d-hat(X, H) = inf over H of d-hat(X, rho).
inline SetDistance empirical_distance_to_set(const Sample& x, const HypothesisSet& h,
                                             const TupleEnumeration& enumeration, std::size_t depth) {
  require_same_alphabet(x.alphabet(), h.alphabet());
  require_same_alphabet(x.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  return h.minimize(frequency_table(x, depth), depth);
}

/// Upper estimate of the separation inf d(rho0, rho1) over the two
/// representations' grids. Diagnostic only.
inline double separation(const HypothesisSet& h0, const HypothesisSet& h1, const TupleEnumeration& enumeration,
                         std::size_t depth) {
  require_same_alphabet(h0.alphabet(), h1.alphabet());
  enumeration.check_depth(depth);
  auto t0 = h0.representation_tables(depth);
  auto t1 = h1.representation_tables(depth);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : t0) {
    for (const auto& b : t1) best = std::min(best, weighted_distance(a, b, depth).value);
  }
  return best;
}

}  // namespace ergotest

#endif  // ERGOTEST_HYPOTHESES_HPP
