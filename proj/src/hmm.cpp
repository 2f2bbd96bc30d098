#include "seqmarkov/hmm.hpp"

#include <algorithm>
#include <cmath>

#include "seqmarkov/error.hpp"
#include "seqmarkov/logmath.hpp"
#include "seqmarkov/parallel.hpp"

namespace seqmarkov {

namespace {

std::span<const Cell> truncate_padding(std::span<const Cell> row) {
  const auto it = std::find(row.begin(), row.end(), kPadding);
  return row.first(static_cast<std::size_t>(it - row.begin()));
}

}  // namespace

void HiddenMarkovModel::validate() const {
  const auto s = initial.size();
  const auto m = static_cast<Eigen::Index>(alphabet.size());
  if (s < 1) throw DimensionError("HMM needs at least one hidden state");
  if (transitions.rows() != s || transitions.cols() != s)
    throw DimensionError("transition matrix must be S x S");
  if (emissions.rows() != s || emissions.cols() != m)
    throw DimensionError("emission matrix must be S x M");
  if (state_labels.size() != static_cast<std::size_t>(s))
    throw DimensionError("state label count must equal the number of states");
  if (!is_probability_vector(initial))
    throw InputError("initial probabilities must be non-negative and sum to 1");
  if (!is_row_stochastic(transitions))
    throw InputError("transition rows must be non-negative and sum to 1");
  if (!is_row_stochastic(emissions))
    throw InputError("emission rows must be non-negative and sum to 1");
}

std::vector<std::string> default_state_labels(std::size_t n_states) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n_states; ++i)
    labels.push_back("State " + std::to_string(i + 1));
  return labels;
}

HiddenMarkovModel embed_markov_model(const MarkovModel& m) {
  const auto n = static_cast<Eigen::Index>(m.alphabet.size());
  return HiddenMarkovModel{m.alphabet, m.alphabet.symbols(), m.initial,
                           m.transitions, Eigen::MatrixXd::Identity(n, n)};
}

bool has_identity_emissions(const HiddenMarkovModel& h) {
  return h.emissions.rows() == h.emissions.cols() &&
         h.emissions.isIdentity(0.0);
}

MarkovModel to_markov_model(const HiddenMarkovModel& h) {
  if (!has_identity_emissions(h))
    throw InputError("HMM does not have identity emissions");
  MarkovModel m;
  m.alphabet = h.alphabet;
  m.initial = h.initial;
  m.transitions = h.transitions;
  return m;
}

LogParameters::LogParameters(const HiddenMarkovModel& h)
    : initial(h.initial.array().log()),
      transitions(h.transitions.array().log()),
      emissions(h.emissions.array().log()) {}

ForwardResult log_forward(const LogParameters& lp, std::span<const Cell> row) {
  row = truncate_padding(row);
  const auto n_states = lp.initial.size();
  const auto len = static_cast<Eigen::Index>(row.size());
  ForwardResult out;
  out.log_alpha.resize(len, n_states);
  if (len == 0) return out;

  for (Eigen::Index s = 0; s < n_states; ++s)
    out.log_alpha(0, s) = lp.initial(s) + lp.emission(s, row[0]);

  std::vector<Eigen::Index> live;
  live.reserve(static_cast<std::size_t>(n_states));
  for (Eigen::Index t = 1; t < len; ++t) {
    live.clear();
    for (Eigen::Index r = 0; r < n_states; ++r)
      if (std::isfinite(out.log_alpha(t - 1, r))) live.push_back(r);
    for (Eigen::Index s = 0; s < n_states; ++s) {
      double m = neg_inf<double>();
      for (auto r : live) m = std::max(m, out.log_alpha(t - 1, r) + lp.transitions(r, s));
      double acc = neg_inf<double>();
      if (std::isfinite(m)) {
        double sum = 0;
        for (auto r : live) sum += std::exp(out.log_alpha(t - 1, r) + lp.transitions(r, s) - m);
        acc = m + std::log(sum);
      }
      out.log_alpha(t, s) = acc + lp.emission(s, row[static_cast<std::size_t>(t)]);
    }
  }
  out.log_likelihood = log_sum_exp(out.log_alpha.row(len - 1));
  return out;
}

ForwardResult log_forward(const HiddenMarkovModel& h, std::span<const Cell> row) {
  return log_forward(LogParameters(h), row);
}

Eigen::MatrixXd log_backward(const LogParameters& lp, std::span<const Cell> row) {
  row = truncate_padding(row);
  const auto n_states = lp.initial.size();
  const auto len = static_cast<Eigen::Index>(row.size());
  Eigen::MatrixXd beta(len, n_states);
  if (len == 0) return beta;
  beta.row(len - 1).setZero();

  Eigen::VectorXd next(n_states);
  for (Eigen::Index t = len - 2; t >= 0; --t) {
    const Cell y = row[static_cast<std::size_t>(t + 1)];
    for (Eigen::Index s = 0; s < n_states; ++s)
      next(s) = lp.emission(s, y) + beta(t + 1, s);
    for (Eigen::Index r = 0; r < n_states; ++r)
      beta(t, r) = log_sum_exp(lp.transitions.row(r).transpose() + next);
  }
  return beta;
}

Eigen::MatrixXd log_backward(const HiddenMarkovModel& h, std::span<const Cell> row) {
  return log_backward(LogParameters(h), row);
}

Eigen::MatrixXd posterior_states(const HiddenMarkovModel& h, std::span<const Cell> row) {
  const LogParameters lp(h);
  const auto fwd = log_forward(lp, row);
  const auto beta = log_backward(lp, row);
  Eigen::MatrixXd gamma = fwd.log_alpha + beta;
  if (!std::isfinite(fwd.log_likelihood)) {
    gamma.setZero();
    return gamma;
  }
  return (gamma.array() - fwd.log_likelihood).exp().matrix();
}

std::vector<double> sequence_log_likelihoods(const HiddenMarkovModel& h,
                                             const SequenceSet& s,
                                             unsigned threads) {
  const LogParameters lp(h);
  std::vector<double> out(s.n_sequences());
  const std::size_t blocks = (out.size() + kReductionBlock - 1) / kReductionBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(out.size(), (b + 1) * kReductionBlock);
    for (std::size_t i = b * kReductionBlock; i < end; ++i)
      out[i] = log_forward(lp, s.observed_row(i)).log_likelihood;
  });
  return out;
}

double log_likelihood(const HiddenMarkovModel& h, const SequenceSet& s,
                      unsigned threads) {
  if (!(h.alphabet == s.alphabet()))
    throw DimensionError("model and data alphabets differ");
  double total = 0;
  for (double v : sequence_log_likelihoods(h, s, threads)) total += v;
  return total;
}

namespace {

// Scores within a relative 1e-12 count as tied.
bool strictly_better(double v, double best) {
  if (!(v > best)) return false;
  if (std::isinf(best)) return true;
  return v - best > 1e-12 * std::max(1.0, std::abs(best));
}

}  // namespace

HiddenPath viterbi(const HiddenMarkovModel& h, std::span<const Cell> row) {
  row = truncate_padding(row);
  const LogParameters lp(h);
  const auto n_states = lp.initial.size();
  const auto len = static_cast<Eigen::Index>(row.size());
  HiddenPath path;
  if (len == 0) return path;

  Eigen::MatrixXd delta(len, n_states);
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> back(len, n_states);
  for (Eigen::Index s = 0; s < n_states; ++s) {
    delta(0, s) = lp.initial(s) + lp.emission(s, row[0]);
    back(0, s) = 0;
  }
  for (Eigen::Index t = 1; t < len; ++t) {
    for (Eigen::Index s = 0; s < n_states; ++s) {
      Eigen::Index best = 0;
      double best_value = delta(t - 1, 0) + lp.transitions(0, s);
      for (Eigen::Index r = 1; r < n_states; ++r) {
        const double v = delta(t - 1, r) + lp.transitions(r, s);
        if (strictly_better(v, best_value)) {
          best_value = v;
          best = r;
        }
      }
      back(t, s) = best;
      delta(t, s) = best_value + lp.emission(s, row[static_cast<std::size_t>(t)]);
    }
  }
  Eigen::Index state = 0;
  for (Eigen::Index s = 1; s < n_states; ++s)
    if (strictly_better(delta(len - 1, s), delta(len - 1, state))) state = s;
  path.log_probability = delta(len - 1, state);
  path.states.assign(static_cast<std::size_t>(len), 0);
  if (std::isinf(path.log_probability)) return path;
  for (Eigen::Index t = len - 1; t >= 0; --t) {
    path.states[static_cast<std::size_t>(t)] = static_cast<std::size_t>(state);
    state = back(t, state);
  }
  return path;
}

std::vector<HiddenPath> viterbi(const HiddenMarkovModel& h, const SequenceSet& s,
                                unsigned threads) {
  std::vector<HiddenPath> out(s.n_sequences());
  parallel_for(out.size(), threads,
               [&](std::size_t i) { out[i] = viterbi(h, s.observed_row(i)); });
  return out;
}

ExpectedCounts::ExpectedCounts(std::size_t n_states, std::size_t n_symbols)
    : initial(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states))),
      transitions(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states),
                                        static_cast<Eigen::Index>(n_states))),
      emissions(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states),
                                      static_cast<Eigen::Index>(n_symbols))) {}

ExpectedCounts& ExpectedCounts::operator+=(const ExpectedCounts& other) {
  initial += other.initial;
  transitions += other.transitions;
  emissions += other.emissions;
  log_likelihood += other.log_likelihood;
  return *this;
}

double accumulate_counts(const LogParameters& lp, std::span<const Cell> row,
                         double weight, ExpectedCounts& counts) {
  const auto fwd = log_forward(lp, row);
  accumulate_counts(lp, row, fwd, weight, counts);
  return fwd.log_likelihood;
}

void accumulate_counts(const LogParameters& lp, std::span<const Cell> row,
                       const ForwardResult& fwd, double weight,
                       ExpectedCounts& counts) {
  row = truncate_padding(row);
  const double ll = fwd.log_likelihood;
  if (row.empty() || !std::isfinite(ll) || !(weight > 0)) return;
  const auto beta = log_backward(lp, row);
  const auto n_states = lp.initial.size();
  const auto len = static_cast<Eigen::Index>(row.size());
  const double log_w = std::log(weight);

  for (Eigen::Index t = 0; t < len; ++t) {
    const Cell y = row[static_cast<std::size_t>(t)];
    for (Eigen::Index s = 0; s < n_states; ++s) {
      const double g = std::exp(fwd.log_alpha(t, s) + beta(t, s) - ll + log_w);
      if (t == 0) counts.initial(s) += g;
      if (is_symbol(y)) counts.emissions(s, y) += g;
    }
  }
  for (Eigen::Index t = 1; t < len; ++t) {
    const Cell y = row[static_cast<std::size_t>(t)];
    for (Eigen::Index r = 0; r < n_states; ++r) {
      const double a = fwd.log_alpha(t - 1, r);
      if (!std::isfinite(a)) continue;
      for (Eigen::Index s = 0; s < n_states; ++s) {
        const double v = a + lp.transitions(r, s) + lp.emission(s, y) + beta(t, s) - ll + log_w;
        if (std::isfinite(v)) counts.transitions(r, s) += std::exp(v);
      }
    }
  }
}

namespace {

template <typename Derived, typename CountDerived>
void update_rows(Eigen::MatrixBase<Derived>& param,
                 const Eigen::MatrixBase<CountDerived>& counts) {
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    double total = 0;
    for (Eigen::Index c = 0; c < param.cols(); ++c)
      if (param(r, c) != 0) total += counts(r, c);
    if (!(total > 0)) continue;
    for (Eigen::Index c = 0; c < param.cols(); ++c)
      param(r, c) = param(r, c) != 0 ? counts(r, c) / total : 0.0;
  }
}

}  // namespace

HiddenMarkovModel apply_counts(const HiddenMarkovModel& h, const ExpectedCounts& counts) {
  HiddenMarkovModel out = h;
  Eigen::Map<Eigen::RowVectorXd> init(out.initial.data(), out.initial.size());
  update_rows(init, counts.initial.transpose());
  update_rows(out.transitions, counts.transitions);
  update_rows(out.emissions, counts.emissions);
  return out;
}

EMStepResult em_step(const HiddenMarkovModel& h, const SequenceSet& s,
                     unsigned threads) {
  if (!(h.alphabet == s.alphabet()))
    throw DimensionError("model and data alphabets differ");
  const LogParameters lp(h);
  const std::size_t n = s.n_sequences();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<ExpectedCounts> partial(blocks, ExpectedCounts(h.n_states(), h.n_symbols()));
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kReductionBlock);
    for (std::size_t i = b * kReductionBlock; i < end; ++i)
      partial[b].log_likelihood += accumulate_counts(lp, s.observed_row(i), 1.0, partial[b]);
  });
  ExpectedCounts total(h.n_states(), h.n_symbols());
  for (const auto& p : partial) total += p;
  return {apply_counts(h, total), total.log_likelihood};
}

double relative_change(double previous, double current) {
  const double scale = std::abs(previous);
  return (current - previous) / (scale > 0 ? scale : 1.0);
}

HmmFit em_fit(const HiddenMarkovModel& h, const SequenceSet& s,
              const EMControl& control) {
  h.validate();
  auto step = em_step(h, s, control.threads);
  if (!std::isfinite(step.log_likelihood))
    throw EstimationError("initial log-likelihood is not finite");

  HmmFit fit{h, {}};
  fit.result.trace.push_back(step.log_likelihood);
  double current = step.log_likelihood;
  while (fit.result.iterations < control.max_iterations) {
    fit.model = std::move(step.model);
    ++fit.result.iterations;
    step = em_step(fit.model, s, control.threads);
    fit.result.change = relative_change(current, step.log_likelihood);
    current = step.log_likelihood;
    fit.result.trace.push_back(current);
    if (fit.result.change < control.relative_tolerance) break;
  }
  fit.result.log_likelihood = current;
  return fit;
}

}  // namespace seqmarkov
