#include <random>

#include "doctest.h"

#include "cogflow/blend.hpp"
#include "cogflow/errors.hpp"
#include "cogflow/semantics.hpp"

using namespace cogflow;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

FieldPtr gaussian(Vector mean, double var = 0.25) {
  return make_field(TargetDistribution::gaussian(std::move(mean), var));
}

// a * f + b * g, evaluated pointwise.
class CombinedField final : public VelocityField {
 public:
  CombinedField(FieldPtr f, FieldPtr g, double a, double b) : f_(std::move(f)), g_(std::move(g)), a_(a), b_(b) {}
  std::size_t dim() const override { return f_->dim(); }
  void eval_into(const Vector& x, double t, Vector& out) const override {
    out = a_ * f_->eval(x, t) + b_ * g_->eval(x, t);
  }

 private:
  FieldPtr f_, g_;
  double a_, b_;
};

// Anchor k, chain j gets a distinct Gaussian target so every term is visible.
std::vector<AnchorFields> distinct_anchors(std::size_t n, std::size_t d = 2) {
  std::vector<AnchorFields> out;
  for (const auto& a : enumerate_anchors(n)) {
    AnchorFields entry{a, {}};
    for (std::size_t j = 0; j < n; ++j) {
      Vector mu = Vector::Zero(static_cast<Eigen::Index>(d));
      mu[0] = static_cast<double>(a.index());
      mu[1] = 0.5 * static_cast<double>(j) - 1.0;
      entry.chains.push_back(gaussian(mu, 0.2 + 0.1 * static_cast<double>(j)));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<AnchorFields> uniform_anchors(std::size_t n, const FieldPtr& f) {
  std::vector<AnchorFields> out;
  for (const auto& a : enumerate_anchors(n)) out.push_back({a, std::vector<FieldPtr>(n, f)});
  return out;
}

std::shared_ptr<const BlendSpec> spec_of(std::size_t n, std::vector<double> s, BlendMode mode, double lambda = 0.5,
                                         DrawSchedule draws = DrawSchedule::per_evaluation) {
  return std::make_shared<const BlendSpec>(gaussian(vec({-1, 1})), distinct_anchors(n), ScoreVector(std::move(s)),
                                           mode, lambda, draws);
}

void check_close(const Vector& a, const Vector& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

}  // namespace

TEST_CASE("identical fields collapse the blend") {
  const auto star = gaussian(vec({0.3, -0.7}), 0.4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (auto mode : {BlendMode::stochastic, BlendMode::full_average}) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> s(n);
        for (auto& v : s) v = u(rng);
        auto spec = std::make_shared<const BlendSpec>(star, uniform_anchors(n, star), ScoreVector(s), mode, u(rng));
        auto field = make_blended_field(spec, static_cast<std::uint64_t>(trial));
        const Vector x = vec({u(rng), -u(rng)});
        const double t = u(rng);
        check_close(field.eval(x, t), star->eval(x, t), 1e-12);
      }
    }
  }
}

TEST_CASE("one dimension at s=0 averages anchor (0) with the base") {
  const auto base = gaussian(vec({-1, 1}));
  const auto low = gaussian(vec({2, 0}));
  const auto high = gaussian(vec({5, 5}));
  std::vector<AnchorFields> anchors{{CognitiveAnchor::from_index(1, 1), {low}}, {CognitiveAnchor::from_index(1, 2), {high}}};
  auto spec = std::make_shared<const BlendSpec>(base, anchors, ScoreVector({0.0}), BlendMode::full_average, 0.5);
  auto field = make_blended_field(spec, 0);
  const Vector x = vec({0.4, 0.1});
  check_close(field.eval(x, 0.3), 0.5 * (low->eval(x, 0.3) + base->eval(x, 0.3)), 1e-15);
}

TEST_CASE("at a vertex the full blend mixes the chain mean with the base share") {
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto anchors = distinct_anchors(n);
    const auto base = gaussian(vec({-1, 1}));
    for (const auto& a : enumerate_anchors(n)) {
      const std::vector<double> s(a.bits().begin(), a.bits().end());
      for (double lambda : {0.0, 0.3, 1.0}) {
        auto spec = std::make_shared<const BlendSpec>(base, anchors, ScoreVector(s), BlendMode::full_average, lambda);
        auto field = make_blended_field(spec, 9);
        const Vector x = vec({0.2, -0.4});
        Vector chain_mean = Vector::Zero(2);
        for (const auto& f : anchors[a.index() - 1].chains) chain_mean += f->eval(x, 0.6) / static_cast<double>(n);
        check_close(field.eval(x, 0.6), (1 - lambda) * chain_mean + lambda * base->eval(x, 0.6), 1e-14);
      }
    }
  }
}

TEST_CASE("full blend matches a direct sum over anchors and chains") {
  const std::size_t n = 3;
  const std::vector<double> s{0.2, 0.9, 0.55};
  const auto spec = spec_of(n, s, BlendMode::full_average, 0.35);
  auto field = make_blended_field(spec, 0);
  const Vector x = vec({0.5, 0.5});
  Vector expected = Vector::Zero(2);
  for (const auto& entry : spec->anchors()) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= entry.anchor.bit(i) ? s[i] : 1.0 - s[i];
    for (const auto& f : entry.chains) expected += 0.65 * w / n * f->eval(x, 0.4);
  }
  expected += 0.35 * spec->base().eval(x, 0.4);
  check_close(field.eval(x, 0.4), expected, 1e-13);
}

TEST_CASE("evaluation counts per call") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::uint64_t k = std::uint64_t{1} << n;
    auto stoch = make_blended_field(spec_of(n, std::vector<double>(n, 0.5), BlendMode::stochastic), 1);
    auto full = make_blended_field(spec_of(n, std::vector<double>(n, 0.5), BlendMode::full_average), 1);
    CHECK(stoch.spec().evaluations_per_call() == k + 1);
    CHECK(full.spec().evaluations_per_call() == n * k + 1);
    for (std::uint64_t call = 1; call <= 7; ++call) {
      stoch.eval(vec({0, 0}), 0.5);
      full.eval(vec({0, 0}), 0.5);
      CHECK(stoch.eval_count() == call * (k + 1));
      CHECK(full.eval_count() == call * (n * k + 1));
      CHECK(stoch.calls() == call);
    }
  }
  CHECK(spec_of(2, {0.5, 0.5}, BlendMode::stochastic)->evaluations_per_call() == 5);
  CHECK(spec_of(2, {0.5, 0.5}, BlendMode::full_average)->evaluations_per_call() == 9);
}

TEST_CASE("seeding") {
  const auto spec = spec_of(3, {0.3, 0.6, 0.2}, BlendMode::stochastic);
  auto a = make_blended_field(spec, 5), b = make_blended_field(spec, 5), c = make_blended_field(spec, 6);
  bool differs = false;
  for (int i = 0; i < 20; ++i) {
    const Vector va = a.eval(vec({0.1, 0.2}), 0.5);
    CHECK(va == b.eval(vec({0.1, 0.2}), 0.5));
    differs = differs || va != c.eval(vec({0.1, 0.2}), 0.5);
  }
  CHECK(differs);

  const auto full = spec_of(3, {0.3, 0.6, 0.2}, BlendMode::full_average);
  auto f1 = make_blended_field(full, 1), f2 = make_blended_field(full, 999);
  CHECK(f1.eval(vec({0.1, 0.2}), 0.5) == f2.eval(vec({0.1, 0.2}), 0.5));
}

TEST_CASE("chain draws are uniform") {
  const std::size_t n = 3;
  auto field = make_blended_field(spec_of(n, {0.5, 0.5, 0.5}, BlendMode::stochastic), 17);
  const std::size_t draws = 30'000;
  std::vector<double> counts(n, 0.0);
  for (std::uint64_t i = 0; i < draws; ++i) counts[field.chain_choice(i, i % 8)] += 1.0;
  for (double c : counts) {
    const double p = 1.0 / static_cast<double>(n);
    CHECK(std::abs(c / draws - p) <= 4.0 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST_CASE("per-step draws are shared by every stage of a step") {
  const auto spec = spec_of(2, {0.4, 0.7}, BlendMode::stochastic, 0.5, DrawSchedule::per_step);
  auto field = make_blended_field(spec, 3);
  field.begin_step(4);
  const Vector first = field.eval(vec({0.1, 0.1}), 0.3);
  CHECK(field.eval(vec({0.1, 0.1}), 0.3) == first);
  bool changed = false;
  for (std::size_t step = 5; step < 40 && !changed; ++step) {
    field.begin_step(step);
    changed = field.eval(vec({0.1, 0.1}), 0.3) != first;
  }
  CHECK(changed);
}

TEST_CASE("blend is linear in each inner field") {
  const std::size_t n = 2;
  const auto f1 = gaussian(vec({3, 1}), 0.3), f2 = gaussian(vec({-2, 4}), 0.6);
  const auto mixed = std::make_shared<const CombinedField>(f1, f2, 0.3, 0.7);
  auto with = [&](FieldPtr f) {
    auto anchors = distinct_anchors(n);
    anchors[2].chains[1] = std::move(f);
    return std::make_shared<const BlendSpec>(gaussian(vec({-1, 1})), anchors, ScoreVector({0.35, 0.6}),
                                             BlendMode::full_average, 0.5);
  };
  const Vector x = vec({0.3, -0.2});
  const Vector v1 = make_blended_field(with(f1), 0).eval(x, 0.45);
  const Vector v2 = make_blended_field(with(f2), 0).eval(x, 0.45);
  check_close(make_blended_field(with(mixed), 0).eval(x, 0.45), 0.3 * v1 + 0.7 * v2, 1e-13);
}

TEST_CASE("expected field check") {
  SUBCASE("identical chains agree exactly") {
    std::vector<AnchorFields> anchors;
    for (const auto& a : enumerate_anchors(2)) {
      anchors.push_back({a, std::vector<FieldPtr>(2, gaussian(vec({static_cast<double>(a.index()), 0})))});
    }
    const BlendSpec spec(gaussian(vec({0, 0})), anchors, ScoreVector({0.3, 0.8}), BlendMode::stochastic);
    const auto r = expected_field_check(spec, vec({0.2, 0.1}), 0.5, 100);
    REQUIRE(r.std_error.has_value());
    CHECK(r.std_error->maxCoeff() == 0.0);
    check_close(r.stochastic_mean, r.full_value, 1e-14);
  }
  SUBCASE("distinct chains agree statistically") {
    const auto spec = spec_of(2, {0.3, 0.8}, BlendMode::stochastic);
    const auto r = expected_field_check(*spec, vec({0.2, 0.1}), 0.5, 10'000, 8);
    REQUIRE(r.std_error.has_value());
    CHECK(r.std_error->minCoeff() > 0.0);
    for (Eigen::Index c = 0; c < 2; ++c) {
      CHECK(std::abs(r.stochastic_mean[c] - r.full_value[c]) <= 4.0 * (*r.std_error)[c]);
    }
  }
  SUBCASE("one draw has no standard error") {
    const auto r = expected_field_check(*spec_of(2, {0.3, 0.8}, BlendMode::stochastic), vec({0, 0}), 0.5, 1);
    CHECK_FALSE(r.std_error.has_value());
    CHECK(r.draws == 1);
  }
  SUBCASE("zero draws is an error") {
    CHECK_THROWS_AS(expected_field_check(*spec_of(2, {0.3, 0.8}, BlendMode::stochastic), vec({0, 0}), 0.5, 0),
                    ContractError);
  }
}

TEST_CASE("blend spec validation") {
  const auto base = gaussian(vec({0, 0}));
  auto anchors = distinct_anchors(2);
  CHECK_THROWS_AS(BlendSpec(base, anchors, ScoreVector({0.5}), BlendMode::full_average), ContractError);
  CHECK_THROWS_AS(BlendSpec(base, anchors, ScoreVector({0.5, 0.5}), BlendMode::full_average, 1.5), ContractError);
  CHECK_THROWS_AS(BlendSpec(nullptr, anchors, ScoreVector({0.5, 0.5}), BlendMode::full_average), ContractError);
  auto swapped = anchors;
  std::swap(swapped[1], swapped[2]);
  CHECK_THROWS_AS(BlendSpec(base, swapped, ScoreVector({0.5, 0.5}), BlendMode::full_average), ContractError);
  auto short_chain = anchors;
  short_chain[0].chains.pop_back();
  CHECK_THROWS_AS(BlendSpec(base, short_chain, ScoreVector({0.5, 0.5}), BlendMode::full_average), ContractError);
  auto wrong_dim = anchors;
  wrong_dim[3].chains[0] = gaussian(vec({0, 0, 0}));
  CHECK_THROWS_AS(BlendSpec(base, wrong_dim, ScoreVector({0.5, 0.5}), BlendMode::full_average), ContractError);

  auto field = make_blended_field(std::make_shared<const BlendSpec>(base, anchors, ScoreVector({0.5, 0.5}),
                                                                    BlendMode::full_average),
                                  0);
  CHECK_THROWS_AS(field.eval(vec({0, 0, 0}), 0.5), ContractError);
}
