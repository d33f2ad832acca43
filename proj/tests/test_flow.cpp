#include <cmath>

#include "doctest.h"

#include "cogflow/errors.hpp"
#include "cogflow/flow.hpp"
#include "cogflow/rng.hpp"
#include "cogflow/stats.hpp"

using namespace cogflow;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// v(x, t) = a x + b with constant coefficients.
class LinearField final : public VelocityField {
 public:
  LinearField(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  std::size_t dim() const override { return static_cast<std::size_t>(b_.size()); }
  void eval_into(const Vector& x, double, Vector& out) const override { out.noalias() = a_ * x + b_; }
  std::optional<AffineCoefficients> affine_at(double) const override { return AffineCoefficients{a_, b_}; }

 private:
  Matrix a_;
  Vector b_;
};

class ExplodingField final : public VelocityField {
 public:
  std::size_t dim() const override { return 1; }
  void eval_into(const Vector& x, double t, Vector& out) const override {
    out.resize(1);
    out[0] = t > 0.5 ? std::numeric_limits<double>::infinity() : x[0];
  }
};

class NonAffineField final : public VelocityField {
 public:
  std::size_t dim() const override { return 2; }
  void eval_into(const Vector& x, double, Vector& out) const override { out = x.array().sin(); }
};

FieldPtr gaussian(Vector mean, double var = 0.25) {
  return make_field(TargetDistribution::gaussian(std::move(mean), var));
}

// Base field f; anchors use `anchor_field` when given, otherwise f as well.
std::shared_ptr<const BlendSpec> single_field_spec(FieldPtr f, std::size_t n, double lambda = 0.5,
                                                   FieldPtr anchor_field = nullptr,
                                                   BlendMode mode = BlendMode::full_average) {
  std::vector<AnchorFields> anchors;
  for (const auto& a : enumerate_anchors(n)) anchors.push_back({a, std::vector<FieldPtr>(n, anchor_field ? anchor_field : f)});
  return std::make_shared<const BlendSpec>(f, anchors, ScoreVector(std::vector<double>(n, 0.5)), mode, lambda);
}

// Anchor k gets target mean shifted along a 2-D diagonal; base sits at (-1, 1).
std::shared_ptr<const BlendSpec> affine_blend(std::vector<double> s, double lambda,
                                              BlendMode mode = BlendMode::full_average) {
  const std::size_t n = s.size();
  std::vector<AnchorFields> anchors;
  for (const auto& a : enumerate_anchors(n)) {
    AnchorFields e{a, {}};
    for (std::size_t j = 0; j < n; ++j) {
      const double k = static_cast<double>(a.index());
      e.chains.push_back(gaussian(vec({k, 0.5 * k - static_cast<double>(j)}), 0.15 + 0.1 * static_cast<double>(j)));
    }
    anchors.push_back(std::move(e));
  }
  return std::make_shared<const BlendSpec>(gaussian(vec({-1, 1}), 0.4), anchors, ScoreVector(std::move(s)), mode,
                                           lambda);
}

}  // namespace

TEST_CASE("two Euler steps on v = -x") {
  const LinearField field(-Matrix::Identity(1, 1), Vector::Zero(1));
  CHECK(integrate(field, vec({1}), {Solver::euler, 2, false}).endpoint[0] == 0.25);
}

TEST_CASE("RK4 on v = x reaches e") {
  const LinearField field(Matrix::Identity(1, 1), Vector::Zero(1));
  CHECK(std::abs(integrate(field, vec({1}), {Solver::rk4, 20, false}).endpoint[0] - std::exp(1.0)) <= 1e-5);
}

TEST_CASE("zero field leaves the state untouched") {
  const LinearField field(Matrix::Zero(2, 2), Vector::Zero(2));
  for (auto s : {Solver::euler, Solver::midpoint, Solver::rk4}) {
    CHECK(integrate(field, vec({0.3, -7}), {s, 13, false}).endpoint == vec({0.3, -7}));
  }
}

TEST_CASE("trajectories hold N+1 states ending at the endpoint") {
  const auto field = gaussian(vec({1, 2}));
  for (auto s : {Solver::euler, Solver::midpoint, Solver::rk4}) {
    const auto r = integrate(*field, vec({0.1, 0.2}), {s, 17, true});
    REQUIRE(r.trajectory.size() == 18);
    CHECK(r.trajectory.front() == vec({0.1, 0.2}));
    CHECK(r.trajectory.back() == r.endpoint);
  }
  CHECK(integrate(*field, vec({0.1, 0.2}), {Solver::rk4, 17, false}).trajectory.empty());
}

TEST_CASE("non-finite states raise a divergence error with the step") {
  try {
    integrate(ExplodingField{}, vec({1}), {Solver::euler, 10, false});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    // The field blows up when evaluated at t = 0.6, so state x_7 is the first bad one.
    CHECK(e.step() == 7);
  }
  CHECK_THROWS_AS(integrate(ExplodingField{}, vec({1}), {Solver::euler, 0, false}), ContractError);
  CHECK_THROWS_AS(integrate(ExplodingField{}, vec({1, 2}), {Solver::euler, 4, false}), ContractError);
}

TEST_CASE("convergence order against a fine same-solver reference") {
  Matrix a(2, 2);
  a << -0.8, 1.5, -1.0, 0.2;
  const LinearField field(a, vec({0.5, -1}));
  const Vector x0 = vec({1, 0.5});
  struct Case {
    Solver solver;
    double order, tol;
  };
  for (const Case c : {Case{Solver::euler, 1.0, 0.15}, Case{Solver::midpoint, 2.0, 0.3}, Case{Solver::rk4, 4.0, 0.5}}) {
    const Vector ref = integrate(field, x0, {c.solver, 5120, false}).endpoint;
    std::vector<double> lx, ly;
    for (std::size_t n : {10, 20, 40, 80}) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log((integrate(field, x0, {c.solver, n, false}).endpoint - ref).norm()));
    }
    const double slope = -(ly.back() - ly.front()) / (lx.back() - lx.front());
    CHECK(std::abs(slope - c.order) <= c.tol);
  }
}

TEST_CASE("decoders") {
  const auto id = Decoder::identity();
  CHECK(id.decode(vec({1, 2})) == vec({1, 2}));
  CHECK(id.output_dim(5) == 5);
  Matrix m(1, 2);
  m << 2, -1;
  const auto aff = Decoder::affine(m, vec({0.5}));
  CHECK(aff.decode(vec({1, 3})) == vec({-0.5}));
  CHECK(aff.output_dim(2) == 1);
  CHECK_THROWS_AS(Decoder::affine(m, vec({0.5, 1})), ContractError);
  CHECK_THROWS_AS(aff.decode(vec({1, 2, 3})), ContractError);
}

TEST_CASE("sampling is deterministic, seed-isolated and thread-invariant") {
  const auto spec = affine_blend({0.3, 0.8}, 0.5, BlendMode::stochastic);
  const IntegrationConfig cfg{Solver::rk4, 20, false};
  const auto a = sample_blend(spec, 7, 12, cfg, Decoder::identity(), 1);
  const auto b = sample_blend(spec, 7, 12, cfg, Decoder::identity(), 4);
  CHECK(a.endpoints == b.endpoints);
  CHECK(a.decoded == a.endpoints);
  // A longer batch extends a shorter one: sample i depends only on (seed, i).
  const auto longer = sample_blend(spec, 7, 20, cfg, Decoder::identity(), 2);
  for (std::size_t i = 0; i < 12; ++i) CHECK(longer.endpoints[i] == a.endpoints[i]);
  const auto other = sample_blend(spec, 8, 12, cfg);
  CHECK(other.endpoints[0] != a.endpoints[0]);
  CHECK(a.metadata.eval_count == 12 * 20 * 4 * 5);
  CHECK(a.metadata.sample_eval_counts.size() == 12);
  CHECK_THROWS_AS(sample_blend(spec, 7, 0, cfg), ContractError);
}

TEST_CASE("pure base blend pushes noise onto the base target") {
  const auto spec = single_field_spec(gaussian(vec({2, -1}), 0.3), 2, 1.0, gaussian(vec({-5, 5})));
  const auto batch = sample_blend(spec, 3, 3000, {Solver::rk4, 50, false});
  const auto m = sample_moments(batch.endpoints);
  CHECK(max_z_score(m.mean, vec({2, -1}), m.mean_se) <= 3.0);
  CHECK(max_z_score(m.covariance, 0.3 * Matrix::Identity(2, 2), m.covariance_se) <= 3.0);
}

TEST_CASE("moment reference") {
  SUBCASE("zero field keeps the standard normal") {
    const auto zero = std::make_shared<const LinearField>(Matrix::Zero(2, 2), Vector::Zero(2));
    const auto path = moment_reference(*single_field_spec(zero, 2), 50);
    CHECK(path.final_mean() == Vector::Zero(2));
    CHECK(path.final_covariance() == Matrix::Identity(2, 2));
    CHECK(path.times.size() == 51);
  }
  SUBCASE("single Gaussian field reaches its target") {
    const auto path = moment_reference(*single_field_spec(gaussian(vec({3, -2}), 0.25), 1, 1.0, gaussian(vec({-5, 5}))));
    CHECK((path.final_mean() - vec({3, -2})).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((path.final_covariance() - 0.25 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-9);
  }
  SUBCASE("blend at the centre matches the sampler") {
    const auto spec = affine_blend({0.5, 0.5}, 0.5);
    const auto batch = sample_blend(spec, 11, 20'000, {Solver::rk4, 100, false});
    const auto m = sample_moments(batch.endpoints);
    const auto ref = moment_reference(*spec);
    CHECK(max_z_score(m.mean, ref.final_mean(), m.mean_se) <= 3.0);
    CHECK(max_z_score(m.covariance, ref.final_covariance(), m.covariance_se) <= 3.0);
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(moment_reference(*affine_blend({0.5, 0.5}, 0.5, BlendMode::stochastic)), ContractError);
    CHECK_THROWS_AS(moment_reference(*single_field_spec(std::make_shared<const NonAffineField>(), 1)), ContractError);
    CHECK_THROWS_AS(moment_reference(*affine_blend({0.5, 0.5}, 0.5), 0), ContractError);
  }
}

TEST_CASE("csv output") {
  CHECK(vectors_csv({vec({1, 0.1}), vec({-2.5, 1e-300})}) == "c1,c2\n1,0.1\n-2.5,1e-300\n");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
  CHECK(trajectories_csv({{vec({0}), vec({0.5}), vec({1})}}) == "sample,step,t,c1\n0,0,0,0\n0,1,0.5,0.5\n0,2,1,1\n");
}

TEST_CASE("generate binds prompts through the template backend") {
  const auto space = CognitiveSpace::from_names({"valence", "arousal"});
  SemanticModelParams params;
  params.position_bias = 0.5;
  const SemanticModel model(space, params);
  TemplateBackend backend;
  PolarizationCache cache;
  GenerationContext ctx{space, model, backend, cache};
  GenerationRequest req{.base_prompt = "a valley",
                        .score = ScoreVector({1.0, 0.0}),
                        .seed = 4,
                        .sample_count = 2000,
                        .mode = BlendMode::full_average,
                        .lambda = 0.0,
                        .draws = DrawSchedule::per_evaluation,
                        .integration = {Solver::rk4, 40, false},
                        .decoder = Decoder::identity(),
                        .threads = 1};
  const auto batch = generate(req, ctx);
  // Anchor (1,0): valence up, arousal down; chain weights average to 1.
  const auto m = sample_moments(batch.endpoints);
  CHECK(max_z_score(m.mean, vec({1, -1}), m.mean_se) <= 3.0);
  CHECK(generate(req, ctx).endpoints == batch.endpoints);
}

TEST_CASE("non-template backends need explicit bindings") {
  class EchoBackend final : public PolarizerBackend {
   public:
    std::string polarize(std::string_view p, const DimensionSpec& d, Pole pole) override {
      return std::string(p) + (pole == Pole::high ? " more " : " less ") + d.name;
    }
    std::string backend_id() const override { return "echo"; }
  };
  const auto space = CognitiveSpace::from_names({"valence"});
  EchoBackend backend;
  PolarizationCache cache;
  SemanticModelParams params;
  const SemanticModel bare(space, params);
  GenerationContext ctx{space, bare, backend, cache};
  CHECK_THROWS_AS(assemble_blend_spec(ctx, "a valley", ScoreVector({0.5}), BlendMode::full_average, 0.5),
                  BindingError);

  params.explicit_bindings.emplace("a valley more valence", TargetDistribution::gaussian(vec({2, 0}), 0.2));
  params.explicit_bindings.emplace("a valley less valence", TargetDistribution::gaussian(vec({-2, 0}), 0.2));
  const SemanticModel bound(space, params);
  GenerationContext ctx2{space, bound, backend, cache};
  const auto spec = assemble_blend_spec(ctx2, "a valley", ScoreVector({0.25}), BlendMode::full_average, 0.0);
  const auto ref = moment_reference(*spec);
  CHECK(std::abs(ref.final_mean()[0] - (0.75 * -2 + 0.25 * 2)) <= 0.5);
}
