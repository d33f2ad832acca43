#include <cmath>
#include <random>
#include <set>

#include "cogflow/blend.hpp"
#include "cogflow/cli.hpp"
#include "cogflow/cogspace.hpp"
#include "cogflow/flow.hpp"
#include "cogflow/polarize.hpp"
#include "cogflow/rng.hpp"
#include "cogflow/semantics.hpp"
#include "cogflow/stats.hpp"

namespace cogflow {

namespace {

Criterion check(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, std::nullopt,
          value <= threshold ? CriterionStatus::pass : CriterionStatus::fail, {}};
}

}  // namespace

std::vector<Criterion> builtin_invariants() {
  std::vector<Criterion> out;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double unity_gap = 0.0;
  double min_weight = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> s(n);
      for (auto& v : s) v = unit(rng);
      double sum = 0.0;
      for (double w : weight_vector(ScoreVector(s))) {
        sum += w;
        min_weight = std::min(min_weight, w);
      }
      unity_gap = std::max(unity_gap, std::abs(sum - 1.0));
    }
  }
  out.push_back(check("weights_partition_of_unity", unity_gap, 1e-12));
  out.push_back(check("weights_nonnegative", std::max(0.0, -min_weight), 0.0));

  double delta_error = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& a : enumerate_anchors(n)) {
      std::vector<double> s(a.bits().begin(), a.bits().end());
      const auto w = weight_vector(ScoreVector(s));
      for (std::size_t k = 0; k < w.size(); ++k) delta_error += std::abs(w[k] - (k + 1 == a.index() ? 1.0 : 0.0));
    }
  }
  out.push_back(check("weights_vertex_delta", delta_error, 0.0));

  double latin_violations = 0.0;
  for (std::size_t n = 1; n <= CognitiveSpace::kMaxDimensions; ++n) {
    const auto orders = build_chain_orders(n);
    for (std::size_t r = 0; r < n; ++r) {
      std::set<std::size_t> row(orders[r].begin(), orders[r].end());
      std::set<std::size_t> col;
      for (std::size_t c = 0; c < n; ++c) col.insert(orders[c][r]);
      latin_violations += (row.size() != n) + (col.size() != n);
    }
  }
  out.push_back(check("latin_square_orders", latin_violations, 0.0));

  const Vector mu = (Vector(2) << 3.0, -2.0).finished();
  const Vector x = (Vector(2) << 0.7, 1.3).finished();
  const double t0_err = (gaussian_field(mu, 0.25, x, 0.0) - (mu - x)).cwiseAbs().maxCoeff();
  const double t1_err = (gaussian_field(mu, 0.25, x, 1.0) - x).cwiseAbs().maxCoeff();
  out.push_back(check("gaussian_field_endpoints", std::max(t0_err, t1_err), 1e-12));

  const TargetDistribution mix({{0.3, mu, 0.25}, {0.7, -mu, 0.5}});
  double resp_gap = 0.0;
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    double sum = 0.0;
    for (double r : mixture_responsibilities(mix, x, t)) sum += r;
    resp_gap = std::max(resp_gap, std::abs(sum - 1.0));
  }
  out.push_back(check("mixture_responsibilities_sum", resp_gap, 1e-12));

  const TargetField field(TargetDistribution::gaussian(mu, 0.25));
  std::vector<Vector> ends;
  for (std::uint64_t i = 0; i < 4000; ++i) {
    ends.push_back(integrate(field, draw_initial_state(11, i, 2), {Solver::rk4, 100, false}).endpoint);
  }
  const auto m = sample_moments(ends);
  out.push_back(check("gaussian_pushforward_mean_z", max_z_score(m.mean, mu, m.mean_se), 4.0));

  auto shared = make_field(TargetDistribution::gaussian(mu, 0.25));
  std::vector<AnchorFields> anchors;
  for (const auto& a : enumerate_anchors(2)) anchors.push_back({a, {shared, shared}});
  BlendedField blended(std::make_shared<const BlendSpec>(shared, anchors, ScoreVector({0.3, 0.8}),
                                                         BlendMode::stochastic, 0.5),
                       3);
  const double collapse = (blended.eval(x, 0.4) - field.eval(x, 0.4)).cwiseAbs().maxCoeff();
  out.push_back(check("blend_identity_collapse", collapse, 1e-12));
  out.push_back(check("blend_eval_count", std::abs(static_cast<double>(blended.eval_count()) - 5.0), 0.0));
  return out;
}

}  // namespace cogflow
