#ifndef ERGOTEST_PROCESSES_HPP
#define ERGOTEST_PROCESSES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ergotest/enumeration.hpp"
#include "ergotest/rng.hpp"
#include "ergotest/sample.hpp"
#include "ergotest/tables.hpp"

namespace ergotest {

/// Default floor on Markov transition entries. Keeps every chain ergodic and
/// every parameter box compact.
inline constexpr double kDefaultGamma = 1e-3;

/// A k-th order chain over A: transition rows indexed by the lex code of the
/// previous k symbols, plus the stationary law of those k-blocks. Order 0 is
/// an i.i.d. source with a single row.
struct FiniteChain {
  std::size_t alphabet_size = 0;
  std::size_t order = 0;
  std::vector<double> transition;  // row-major, rows() x alphabet_size
  std::vector<double> stationary;  // one entry per context block

  std::size_t rows() const noexcept { return stationary.size(); }
  double prob(std::size_t context, Symbol next) const { return transition[context * alphabet_size + next]; }
  std::span<const double> row(std::size_t context) const {
    return std::span<const double>(transition).subspan(context * alphabet_size, alphabet_size);
  }
  /// Context after appending symbol s.
  std::size_t shift(std::size_t context, Symbol s) const noexcept {
    return rows() == 1 ? 0 : (context * alphabet_size + s) % rows();
  }
};

/// Unique left fixed point of the k-block chain induced by a k-th order
/// transition table. Throws when the fixed point is not unique or the
/// residual exceeds 1e-12.
inline std::vector<double> markov_stationary(std::span<const double> transition, std::size_t alphabet_size,
                                             std::size_t order) {
  const std::size_t n = static_cast<std::size_t>(checked_pow(alphabet_size, order));
  if (transition.size() != n * alphabet_size) throw ValidationError("transition table has wrong shape");
  if (n == 1) return {1.0};

  // Block chain: context c moves to shift(c, a) with probability P(a | c).
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t a = 0; a < alphabet_size; ++a) {
      std::size_t next = (c * alphabet_size + a) % n;
      block(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(next)) += transition[c * alphabet_size + a];
    }
  }
  Eigen::MatrixXd system = block.transpose() - Eigen::MatrixXd::Identity(block.rows(), block.cols());
  Eigen::FullPivLU<Eigen::MatrixXd> rank_check(system);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() != static_cast<Eigen::Index>(n) - 1) {
    throw ValidationError("chain is not ergodic: stationary distribution is not unique");
  }
  system.row(system.rows() - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(system.rows());
  rhs(rhs.size() - 1) = 1.0;
  Eigen::VectorXd pi = system.fullPivLu().solve(rhs);

  double residual = (pi.transpose() * block - pi.transpose()).cwiseAbs().maxCoeff();
  if (residual > 1e-12 || std::abs(pi.sum() - 1.0) > 1e-12) {
    throw ValidationError("stationary solve residual " + std::to_string(residual) + " above 1e-12");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::max(0.0, pi(static_cast<Eigen::Index>(i)));
  return out;
}

/// Exact marginals of a stationary chain for all words up to depth.
inline TupleTable chain_marginal_table(const FiniteChain& chain, std::size_t depth) {
  const std::size_t a = chain.alphabet_size;
  const std::size_t k = chain.order;
  TupleTable table = TupleTable::empty_word(a);
  table.levels.reserve(depth + 1);
  for (std::size_t l = 1; l <= depth; ++l) {
    std::vector<double> level(static_cast<std::size_t>(checked_pow(a, l)), 0.0);
    if (l <= k) {
      // Marginalize the stationary block law over its last k - l symbols.
      const std::size_t tail = static_cast<std::size_t>(checked_pow(a, k - l));
      for (std::size_t b = 0; b < chain.rows(); ++b) level[b / tail] += chain.stationary[b];
    } else {
      const auto& prev = table.levels[l - 1];
      const std::size_t ctx_count = chain.rows();
      for (std::size_t w = 0; w < level.size(); ++w) {
        std::size_t head = w / a;
        std::size_t ctx = ctx_count == 1 ? 0 : head % ctx_count;
        level[w] = prev[head] * chain.prob(ctx, static_cast<Symbol>(w % a));
      }
    }
    table.levels.push_back(std::move(level));
  }
  return table;
}

inline double chain_marginal(const FiniteChain& chain, const Word& word) {
  const std::size_t a = chain.alphabet_size;
  const std::size_t k = chain.order;
  if (word.empty()) return 1.0;
  if (word.size() <= k) {
    // Sum the block law over every completion of the word to k symbols.
    const std::size_t tail = static_cast<std::size_t>(checked_pow(a, k - word.size()));
    const std::size_t base = static_cast<std::size_t>(lex_code(word, a)) * tail;
    double p = 0.0;
    for (std::size_t t = 0; t < tail; ++t) p += chain.stationary[base + t];
    return p;
  }
  Word head(word.begin(), word.begin() + static_cast<std::ptrdiff_t>(k));
  double p = chain.stationary[static_cast<std::size_t>(lex_code(head, a))];
  std::size_t ctx = static_cast<std::size_t>(lex_code(head, a));
  for (std::size_t i = k; i < word.size(); ++i) {
    p *= chain.prob(ctx, word[i]);
    ctx = chain.shift(ctx, word[i]);
  }
  return p;
}

/// Draws n symbols from the chain started in its stationary law.
inline void chain_generate(const FiniteChain& chain, std::size_t n, Rng& rng, std::vector<Symbol>& out) {
  out.resize(n);
  const std::size_t a = chain.alphabet_size;
  std::size_t ctx = 0;
  std::size_t i = 0;
  if (chain.order > 0) {
    ctx = draw_categorical(chain.stationary, rng);
    Word block = word_of_code(ctx, chain.order, a);
    for (; i < n && i < chain.order; ++i) out[i] = block[i];
  }
  if (a == 2) {
    for (; i < n; ++i) {
      Symbol s = uniform01(rng) < chain.prob(ctx, 0) ? 0 : 1;
      out[i] = s;
      ctx = chain.shift(ctx, s);
    }
  } else {
    for (; i < n; ++i) {
      Symbol s = static_cast<Symbol>(draw_categorical(chain.row(ctx), rng));
      out[i] = s;
      ctx = chain.shift(ctx, s);
    }
  }
}

/// A stationary process over a finite alphabet with exact marginals and a
/// stationary sampler.
class Process {
 public:
  explicit Process(Alphabet alphabet) : alphabet_(std::move(alphabet)) {}
  virtual ~Process() = default;
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  const Alphabet& alphabet() const noexcept { return alphabet_; }

  /// rho(X_1..X_|B| = B).
  virtual double marginal(const Word& word) const = 0;

  /// rho(B) for every B with |B| <= depth.
  virtual TupleTable marginal_table(std::size_t depth) const = 0;

  /// Overwrites out with n symbols drawn from the process.
  virtual void generate(std::size_t n, Rng& rng, std::vector<Symbol>& out) const = 0;

  /// Chain representation, for i.i.d. and Markov sources only.
  virtual const FiniteChain* chain() const noexcept { return nullptr; }

  virtual std::string describe() const = 0;

  Sample sample(std::size_t n, Rng rng) const {
    if (n == 0) throw ValidationError("sample length must be positive");
    std::vector<Symbol> out;
    generate(n, rng, out);
    return Sample(alphabet_, std::move(out));
  }

 private:
  Alphabet alphabet_;
};

using ProcessPtr = std::shared_ptr<const Process>;

namespace detail {

inline void check_probability_vector(std::span<const double> p, double floor, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= floor) || v > 1.0) {
      std::ostringstream os;
      os << what << " entry " << v << " outside [" << floor << ", 1]";
      throw ValidationError(os.str());
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError(what + " does not sum to 1");
}

inline std::string format_vector(std::span<const double> v) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ']';
  return os.str();
}

}  // namespace detail

/// Process backed by a FiniteChain.
class ChainProcess : public Process {
 public:
  double marginal(const Word& word) const override { return chain_marginal(chain_, word); }
  TupleTable marginal_table(std::size_t depth) const override { return chain_marginal_table(chain_, depth); }
  void generate(std::size_t n, Rng& rng, std::vector<Symbol>& out) const override {
    chain_generate(chain_, n, rng, out);
  }
  const FiniteChain* chain() const noexcept override { return &chain_; }

 protected:
  ChainProcess(Alphabet alphabet, FiniteChain chain) : Process(std::move(alphabet)), chain_(std::move(chain)) {}
  FiniteChain chain_;
};

/// Independent draws from a fixed law p over the alphabet.
class IIDProcess final : public ChainProcess {
 public:
  IIDProcess(Alphabet alphabet, std::vector<double> p) : ChainProcess(alphabet, make_chain(alphabet, std::move(p))) {}

  std::span<const double> probabilities() const noexcept { return chain_.transition; }

  std::string describe() const override { return "iid" + detail::format_vector(chain_.transition); }

 private:
  static FiniteChain make_chain(const Alphabet& alphabet, std::vector<double> p) {
    if (p.size() != alphabet.size()) throw ValidationError("i.i.d. law has wrong length");
    detail::check_probability_vector(p, 0.0, "i.i.d. law");
    return FiniteChain{alphabet.size(), 0, std::move(p), {1.0}};
  }
};

/// k-th order Markov source started from its stationary block law. Every
/// transition entry must be at least gamma.
class MarkovProcess final : public ChainProcess {
 public:
  MarkovProcess(Alphabet alphabet, std::size_t order, std::vector<double> transition, double gamma = kDefaultGamma)
      : ChainProcess(alphabet, make_chain(alphabet, order, std::move(transition), gamma)) {}

  std::size_t order() const noexcept { return chain_.order; }

  std::string describe() const override {
    return "markov" + std::to_string(chain_.order) + detail::format_vector(chain_.transition);
  }

 private:
  static FiniteChain make_chain(const Alphabet& alphabet, std::size_t order, std::vector<double> transition,
                                double gamma) {
    if (order == 0) throw ValidationError("Markov order must be at least 1");
    const std::size_t a = alphabet.size();
    const std::size_t rows = static_cast<std::size_t>(checked_pow(a, order));
    if (transition.size() != rows * a) {
      throw ValidationError("transition table needs " + std::to_string(rows) + " rows of " + std::to_string(a));
    }
    for (std::size_t r = 0; r < rows; ++r) {
      detail::check_probability_vector(std::span<const double>(transition).subspan(r * a, a), gamma,
                                       "transition row " + std::to_string(r));
    }
    auto pi = markov_stationary(transition, a, order);
    return FiniteChain{a, order, std::move(transition), std::move(pi)};
  }
};

/// Finite mixture sum_j W_j mu_j. A sample picks one component, then draws
/// the whole sequence from it, so the mixture is stationary but not ergodic.
class FiniteMixture final : public Process {
 public:
  FiniteMixture(std::vector<ProcessPtr> components, std::vector<double> weights)
      : Process(components.empty() ? Alphabet() : components.front()->alphabet()),
        components_(std::move(components)),
        weights_(std::move(weights)) {
    if (components_.empty()) throw ValidationError("mixture needs at least one component");
    for (const auto& c : components_) {
      if (!c) throw ValidationError("mixture component is null");
    }
    if (weights_.size() != components_.size()) throw ValidationError("mixture weights and components differ in count");
    for (const auto& c : components_) require_same_alphabet(alphabet(), c->alphabet());
    detail::check_probability_vector(weights_, 0.0, "mixture weights");
  }

  const std::vector<ProcessPtr>& components() const noexcept { return components_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double marginal(const Word& word) const override {
    double p = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) p += weights_[j] * components_[j]->marginal(word);
    return p;
  }

  TupleTable marginal_table(std::size_t depth) const override {
    TupleTable out = TupleTable::empty_word(alphabet().size());
    for (std::size_t l = 1; l <= depth; ++l) {
      out.levels.emplace_back(static_cast<std::size_t>(checked_pow(alphabet().size(), l)), 0.0);
    }
    for (std::size_t j = 0; j < components_.size(); ++j) {
      TupleTable t = components_[j]->marginal_table(depth);
      for (std::size_t l = 1; l <= depth; ++l) {
        for (std::size_t c = 0; c < t.levels[l].size(); ++c) out.levels[l][c] += weights_[j] * t.levels[l][c];
      }
    }
    return out;
  }

  void generate(std::size_t n, Rng& rng, std::vector<Symbol>& out) const override {
    std::size_t j = draw_categorical(weights_, rng);
    components_[j]->generate(n, rng, out);
  }

  std::string describe() const override {
    std::string s = "mixture(";
    for (std::size_t j = 0; j < components_.size(); ++j) {
      s += (j ? ", " : "") + std::to_string(weights_[j]) + "*" + components_[j]->describe();
    }
    return s + ")";
  }

 private:
  std::vector<ProcessPtr> components_;
  std::vector<double> weights_;
};

/// z_i = x_i while a hidden two-state chain with transition matrix
/// [[1-p, p], [q, 1-q]] sits in state 1, and z_i = y_i in state 2. The hidden
/// chain, x and y are independent and all start stationary. Components must
/// be i.i.d. or Markov so marginals stay exactly computable.
class SwitchingProcess final : public Process {
 public:
  SwitchingProcess(double p, double q, ProcessPtr x_component, ProcessPtr y_component)
      : Process(x_component ? x_component->alphabet() : Alphabet()),
        p_(p),
        q_(q),
        x_(std::move(x_component)),
        y_(std::move(y_component)) {
    if (!x_ || !y_) throw ValidationError("switching process needs two components");
    if (!(p_ > 0.0 && p_ < 1.0) || !(q_ > 0.0 && q_ < 1.0)) {
      throw ValidationError("switching probabilities must lie in (0, 1)");
    }
    require_same_alphabet(alphabet(), y_->alphabet());
    if (x_->chain() == nullptr || y_->chain() == nullptr) {
      throw ValidationError("switching components must be i.i.d. or Markov processes");
    }
  }

  /// Member of the family whose hidden chain dwells 1/p steps on average in
  /// state 1 and spends a long-run share y_share in state 2.
  static std::shared_ptr<const SwitchingProcess> with_share(ProcessPtr x_component, ProcessPtr y_component,
                                                            double dwell, double y_share) {
    if (!(y_share > 0.0 && y_share < 1.0)) throw ValidationError("component share must lie in (0, 1)");
    if (!(dwell > 1.0)) throw ValidationError("expected dwell time must exceed 1");
    double p = 1.0 / dwell;
    double q = p * (1.0 - y_share) / y_share;
    return std::make_shared<const SwitchingProcess>(p, q, std::move(x_component), std::move(y_component));
  }

  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  const ProcessPtr& x_component() const noexcept { return x_; }
  const ProcessPtr& y_component() const noexcept { return y_; }

  /// Stationary probability of hidden state 1 (x emits): q / (p + q).
  double x_share() const noexcept { return q_ / (p_ + q_); }
  /// Stationary probability of hidden state 2 (y emits): p / (p + q).
  double y_share() const noexcept { return p_ / (p_ + q_); }

  double marginal(const Word& word) const override {
    std::vector<double> alpha = initial_state();
    std::vector<double> next(alpha.size());
    for (Symbol c : word) {
      step(alpha, c, next);
      alpha.swap(next);
    }
    return std::accumulate(alpha.begin(), alpha.end(), 0.0);
  }

  TupleTable marginal_table(std::size_t depth) const override {
    const std::size_t a = alphabet().size();
    TupleTable table = TupleTable::empty_word(a);
    for (std::size_t l = 1; l <= depth; ++l) {
      table.levels.emplace_back(static_cast<std::size_t>(checked_pow(a, l)), 0.0);
    }
    std::vector<std::vector<double>> stack(depth + 1);
    stack[0] = initial_state();
    fill_table(table, stack, 0, 0);
    return table;
  }

  void generate(std::size_t n, Rng& rng, std::vector<Symbol>& out) const override {
    std::vector<Symbol> ys;
    x_->generate(n, rng, out);
    y_->generate(n, rng, ys);
    bool in_x = uniform01(rng) < x_share();
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_x) out[i] = ys[i];
      double u = uniform01(rng);
      in_x = in_x ? !(u < p_) : (u < q_);
    }
  }

  std::string describe() const override {
    std::ostringstream os;
    os.precision(6);
    os << "switching(p=" << p_ << ", q=" << q_ << ", x=" << x_->describe() << ", y=" << y_->describe() << ")";
    return os.str();
  }

 private:
  // Forward variables are indexed by (hidden, x context, y context), the
  // hidden state being the one that emits the next symbol.
  std::size_t index(std::size_t h, std::size_t sx, std::size_t sy) const {
    const auto& cx = *x_->chain();
    const auto& cy = *y_->chain();
    return (h * cx.rows() + sx) * cy.rows() + sy;
  }

  std::vector<double> initial_state() const {
    const auto& cx = *x_->chain();
    const auto& cy = *y_->chain();
    std::vector<double> alpha(2 * cx.rows() * cy.rows());
    const double share[2] = {x_share(), y_share()};
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t sx = 0; sx < cx.rows(); ++sx) {
        for (std::size_t sy = 0; sy < cy.rows(); ++sy) {
          alpha[index(h, sx, sy)] = share[h] * cx.stationary[sx] * cy.stationary[sy];
        }
      }
    }
    return alpha;
  }

  void step(const std::vector<double>& alpha, Symbol c, std::vector<double>& out) const {
    const auto& cx = *x_->chain();
    const auto& cy = *y_->chain();
    const std::size_t a = alphabet().size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t sx = 0; sx < cx.rows(); ++sx) {
      for (std::size_t sy = 0; sy < cy.rows(); ++sy) {
        // State 1 emits x = c while y moves silently.
        double mx = alpha[index(0, sx, sy)] * cx.prob(sx, c);
        if (mx > 0.0) {
          std::size_t nx = cx.shift(sx, c);
          for (std::size_t y = 0; y < a; ++y) {
            out[index(0, nx, cy.shift(sy, static_cast<Symbol>(y)))] += mx * cy.prob(sy, static_cast<Symbol>(y));
          }
        }
        // State 2 emits y = c while x moves silently.
        double my = alpha[index(1, sx, sy)] * cy.prob(sy, c);
        if (my > 0.0) {
          std::size_t ny = cy.shift(sy, c);
          for (std::size_t x = 0; x < a; ++x) {
            out[index(1, cx.shift(sx, static_cast<Symbol>(x)), ny)] += my * cx.prob(sx, static_cast<Symbol>(x));
          }
        }
      }
    }
    const std::size_t half = out.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      double from_x = out[i];
      double from_y = out[half + i];
      out[i] = from_x * (1.0 - p_) + from_y * q_;
      out[half + i] = from_x * p_ + from_y * (1.0 - q_);
    }
  }

  void fill_table(TupleTable& table, std::vector<std::vector<double>>& stack, std::size_t len,
                  std::size_t code) const {
    const std::size_t a = alphabet().size();
    if (len + 1 >= stack.size()) return;
    stack[len + 1].resize(stack[len].size());
    for (std::size_t c = 0; c < a; ++c) {
      step(stack[len], static_cast<Symbol>(c), stack[len + 1]);
      std::size_t child = code * a + c;
      table.levels[len + 1][child] = std::accumulate(stack[len + 1].begin(), stack[len + 1].end(), 0.0);
      fill_table(table, stack, len + 1, child);
    }
  }

  double p_;
  double q_;
  ProcessPtr x_;
  ProcessPtr y_;
};

/// d(rho1, rho2) over all tuples of length <= depth, with the tail t_depth.
inline DistanceValue exact_distance(const Process& rho1, const Process& rho2, const TupleEnumeration& enumeration,
                                    std::size_t depth) {
  require_same_alphabet(rho1.alphabet(), rho2.alphabet());
  require_same_alphabet(rho1.alphabet(), enumeration.alphabet());
  enumeration.check_depth(depth);
  return weighted_distance(rho1.marginal_table(depth), rho2.marginal_table(depth), depth);
}

}  // namespace ergotest

#endif  // ERGOTEST_PROCESSES_HPP
