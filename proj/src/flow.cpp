#include "cogflow/flow.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cogflow/errors.hpp"
#include "cogflow/parallel.hpp"
#include "cogflow/rng.hpp"

namespace cogflow {

namespace {

void check_finite(const Vector& x, std::size_t step) {
  if (!x.allFinite()) {
    throw DivergenceError("non-finite state after integration step " + std::to_string(step), step);
  }
}

}  // namespace

IntegrationResult integrate(Dynamics& field, const Vector& x0, const IntegrationConfig& config) {
  if (config.steps == 0) throw ContractError("integration needs at least one step");
  if (static_cast<std::size_t>(x0.size()) != field.dim()) throw ContractError("x0 dimension differs from the field");
  check_finite(x0, 0);

  const std::size_t n = config.steps;
  const double h = 1.0 / static_cast<double>(n);
  const auto d = x0.size();
  IntegrationResult result;
  if (config.record_trajectory) {
    result.trajectory.reserve(n + 1);
    result.trajectory.push_back(x0);
  }

  Vector x = x0;
  Vector k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    const double t_mid = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double t_next = static_cast<double>(i + 1) / static_cast<double>(n);
    field.begin_step(i);
    switch (config.solver) {
      case Solver::euler:
        field.velocity(x, t, k1);
        x += h * k1;
        break;
      case Solver::midpoint:
        field.velocity(x, t, k1);
        tmp.noalias() = x + (0.5 * h) * k1;
        field.velocity(tmp, t_mid, k2);
        x += h * k2;
        break;
      case Solver::rk4:
        field.velocity(x, t, k1);
        tmp.noalias() = x + (0.5 * h) * k1;
        field.velocity(tmp, t_mid, k2);
        tmp.noalias() = x + (0.5 * h) * k2;
        field.velocity(tmp, t_mid, k3);
        tmp.noalias() = x + h * k3;
        field.velocity(tmp, t_next, k4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        break;
    }
    check_finite(x, i + 1);
    if (config.record_trajectory) result.trajectory.push_back(x);
  }
  result.endpoint = std::move(x);
  return result;
}

IntegrationResult integrate(const VelocityField& field, const Vector& x0, const IntegrationConfig& config) {
  FieldDynamics dynamics(field);
  return integrate(dynamics, x0, config);
}

Decoder Decoder::affine(Matrix matrix, Vector offset) {
  if (matrix.rows() != offset.size()) throw ContractError("affine decoder: matrix rows differ from offset length");
  Decoder d;
  d.matrix_ = std::move(matrix);
  d.offset_ = std::move(offset);
  return d;
}

Vector Decoder::decode(const Vector& latent) const {
  if (!matrix_) return latent;
  if (matrix_->cols() != latent.size()) throw ContractError("affine decoder: matrix columns differ from latent size");
  return *matrix_ * latent + offset_;
}

std::size_t Decoder::output_dim(std::size_t latent_dim) const {
  return matrix_ ? static_cast<std::size_t>(matrix_->rows()) : latent_dim;
}

std::shared_ptr<const BlendSpec> assemble_blend_spec(GenerationContext& ctx, const std::string& base_prompt,
                                                     const ScoreVector& score, BlendMode mode, double lambda,
                                                     DrawSchedule draws) {
  if (score.size() != ctx.space.size()) throw ContractError("score vector does not match the cognitive space");
  const bool template_backend = ctx.backend.backend_id() == "template";
  auto bind = [&](const std::string& prompt) {
    if (!template_backend && !ctx.model.has_explicit_binding(prompt)) {
      throw BindingError("prompt '" + prompt + "' from backend " + ctx.backend.backend_id() +
                         " has no explicit binding");
    }
    return make_field(ctx.model.bind(prompt));
  };

  auto base = make_field(ctx.model.bind(base_prompt));
  std::vector<AnchorFields> anchors;
  for (auto& set : build_all_sets(ctx.backend, base_prompt, ctx.space, ctx.cache)) {
    AnchorFields entry{set.anchor, {}};
    for (const auto& chain : set.chains) entry.chains.push_back(bind(chain.result()));
    anchors.push_back(std::move(entry));
  }
  return std::make_shared<const BlendSpec>(std::move(base), std::move(anchors), score, mode, lambda, draws);
}

SampleBatch sample_blend(const std::shared_ptr<const BlendSpec>& spec, std::uint64_t seed, std::size_t count,
                         const IntegrationConfig& integration, const Decoder& decoder, std::size_t threads) {
  if (count == 0) throw ContractError("sample count must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  SampleBatch batch;
  batch.endpoints.resize(count);
  batch.decoded.resize(count);
  batch.metadata.seed = seed;
  batch.metadata.sample_eval_counts.resize(count);
  if (integration.record_trajectory) batch.trajectories.resize(count);

  parallel_for(count, threads, [&](std::size_t i) {
    try {
      BlendedField field(spec, sample_seed(seed, i, kBlendStream));
      auto result = integrate(field, draw_initial_state(seed, i, spec->dim()), integration);
      batch.decoded[i] = decoder.decode(result.endpoint);
      batch.endpoints[i] = std::move(result.endpoint);
      if (integration.record_trajectory) batch.trajectories[i] = std::move(result.trajectory);
      batch.metadata.sample_eval_counts[i] = field.eval_count();
    } catch (const DivergenceError& e) {
      throw DivergenceError("sample " + std::to_string(i) + ": " + e.what(), e.step());
    } catch (const ContractError& e) {
      throw ContractError("sample " + std::to_string(i) + ": " + e.what());
    }
  });

  for (auto c : batch.metadata.sample_eval_counts) batch.metadata.eval_count += c;
  batch.metadata.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return batch;
}

SampleBatch generate(const GenerationRequest& request, GenerationContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  auto spec = assemble_blend_spec(ctx, request.base_prompt, request.score, request.mode, request.lambda,
                                  request.draws);
  auto batch = sample_blend(spec, request.seed, request.sample_count, request.integration, request.decoder,
                            request.threads);
  batch.metadata.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return batch;
}

MomentPath moment_reference(const BlendSpec& spec, std::size_t steps) {
  if (spec.mode() != BlendMode::full_average) throw ContractError("moment_reference needs a full-average blend");
  if (steps == 0) throw ContractError("moment_reference needs at least one step");
  const auto d = static_cast<Eigen::Index>(spec.dim());

  auto coefficients = [&](double t) {
    auto require = [](const VelocityField& f, double time) {
      auto c = f.affine_at(time);
      if (!c) throw ContractError("moment_reference needs affine fields; got a non-affine field");
      return *c;
    };
    AffineCoefficients total{Matrix::Zero(d, d), Vector::Zero(d)};
    for (std::size_t k = 0; k < spec.anchors().size(); ++k) {
      const auto& chains = spec.anchors()[k].chains;
      const double scale = (1.0 - spec.lambda()) * spec.weights()[k] / static_cast<double>(chains.size());
      for (const auto& f : chains) {
        const auto c = require(*f, t);
        total.linear += scale * c.linear;
        total.offset += scale * c.offset;
      }
    }
    const auto c = require(spec.base(), t);
    total.linear += spec.lambda() * c.linear;
    total.offset += spec.lambda() * c.offset;
    return total;
  };

  struct State {
    Vector m;
    Matrix c;
  };
  auto deriv = [](const AffineCoefficients& a, const State& s) {
    return State{a.linear * s.m + a.offset, a.linear * s.c + s.c * a.linear.transpose()};
  };

  MomentPath path;
  path.times.reserve(steps + 1);
  path.means.reserve(steps + 1);
  path.covariances.reserve(steps + 1);
  State s{Vector::Zero(d), Matrix::Identity(d, d)};
  path.times.push_back(0.0);
  path.means.push_back(s.m);
  path.covariances.push_back(s.c);

  const double h = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    const double t_mid = (static_cast<double>(i) + 0.5) / static_cast<double>(steps);
    const double t_next = static_cast<double>(i + 1) / static_cast<double>(steps);
    const auto a0 = coefficients(t);
    const auto am = coefficients(t_mid);
    const auto a1 = coefficients(t_next);
    const State k1 = deriv(a0, s);
    const State k2 = deriv(am, {s.m + 0.5 * h * k1.m, s.c + 0.5 * h * k1.c});
    const State k3 = deriv(am, {s.m + 0.5 * h * k2.m, s.c + 0.5 * h * k2.c});
    const State k4 = deriv(a1, {s.m + h * k3.m, s.c + h * k3.c});
    s.m += (h / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    s.c += (h / 6.0) * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c);
    path.times.push_back(t_next);
    path.means.push_back(s.m);
    path.covariances.push_back(s.c);
  }
  return path;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string vectors_csv(const std::vector<Vector>& rows) {
  std::ostringstream out;
  const auto d = rows.empty() ? 0 : rows.front().size();
  for (Eigen::Index c = 0; c < d; ++c) out << (c ? "," : "") << 'c' << (c + 1);
  out << '\n';
  for (const auto& row : rows) {
    for (Eigen::Index c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  return out.str();
}

void write_vectors_csv(const std::filesystem::path& path, const std::vector<Vector>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << vectors_csv(rows);
  if (!out) throw IoError("cannot write " + path.string());
}

std::string trajectories_csv(const std::vector<std::vector<Vector>>& trajectories) {
  std::ostringstream out;
  const auto d = trajectories.empty() || trajectories.front().empty() ? 0 : trajectories.front().front().size();
  out << "sample,step,t";
  for (Eigen::Index c = 0; c < d; ++c) out << ",c" << (c + 1);
  out << '\n';
  for (std::size_t s = 0; s < trajectories.size(); ++s) {
    const auto& traj = trajectories[s];
    const double steps = static_cast<double>(traj.size() - 1);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      out << s << ',' << i << ',' << format_double(static_cast<double>(i) / steps);
      for (Eigen::Index c = 0; c < traj[i].size(); ++c) out << ',' << format_double(traj[i][c]);
      out << '\n';
    }
  }
  return out.str();
}

void write_trajectories_csv(const std::filesystem::path& path, const std::vector<std::vector<Vector>>& trajectories) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << trajectories_csv(trajectories);
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace cogflow
