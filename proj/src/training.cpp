#include "nsvlmc/training.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <string>

namespace nsvlmc {

void adam_step(Vec& params, const Vec& grad, AdamState& state, double lr) {
  if (params.size() != grad.size())
    throw DimensionMismatch("adam_step: params/grad length mismatch");
  if (!grad.allFinite()) throw NonFiniteGradient("adam_step: non-finite gradient");
  if (state.m.size() == 0) {
    state.m = Vec::Zero(params.size());
    state.v = Vec::Zero(params.size());
  }
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v.array() +
            (1.0 - state.beta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.t));
  // ascent: we maximize the ELBO
  params.array() += lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + state.eps);
}

namespace {

// Name the parameter groups whose gradient entries are non-finite, for the
// NonFiniteObjective diagnostic.
std::string offending_groups(const ParamStore& store, const Vec& grad) {
  std::set<std::string> bad;
  for (const auto& e : store.entries()) {
    const auto seg = grad.segment(e.offset, e.rows * e.cols);
    if (!seg.allFinite()) bad.insert(e.group);
  }
  std::string out;
  for (const auto& g : bad) {
    if (!out.empty()) out += ", ";
    out += g;
  }
  return out.empty() ? "(value only)" : out;
}

}  // namespace

TrainResult train(ModelState& state, const MultiTaskDataset& data,
                  const TrainConfig& cfg) {
  RngStream rng(cfg.seed, 1);
  AdamState adam;
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();

  double last = 0.0;
  for (int it = 0; it < cfg.iters; ++it) {
    const ElboDraws draws = make_elbo_draws(state, data, cfg.elbo, rng);
    const ElboResult r = elbo_value_and_grad(state, data, cfg.elbo, draws);
    if (!std::isfinite(r.value) || !r.grad.allFinite())
      throw NonFiniteObjective(
          "train: non-finite objective at step " + std::to_string(it) +
          "; offending groups: " + offending_groups(state.params, r.grad));
    adam_step(state.params.data(), r.grad, adam, cfg.lr);
    last = r.value;
    if (cfg.trace_every > 0 && (it % cfg.trace_every == 0 || it + 1 == cfg.iters)) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      result.trace.push_back({it, r.value, secs});
    }
  }
  result.final_elbo = last;
  return result;
}

}  // namespace nsvlmc
