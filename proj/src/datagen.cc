#include "extrap/datagen.h"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "extrap/errors.h"
#include "extrap/rng.h"

namespace extrap {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::size_t input_dim(const Teacher& teacher) {
  return std::visit(
      Overloaded{[](const MemorylessTeacher& t) { return t.gain.cols(); },
                 [](const LdsTeacher& t) { return t.system.input_dim(); }},
      teacher);
}

std::size_t output_dim(const Teacher& teacher) {
  return std::visit(
      Overloaded{[](const MemorylessTeacher& t) { return t.gain.rows(); },
                 [](const LdsTeacher& t) { return t.system.output_dim(); }},
      teacher);
}

std::string describe(const Teacher& teacher) {
  return std::visit(
      Overloaded{
          [](const MemorylessTeacher& t) {
            if (t.gain.size() == 1) {
              return fmt::format("memoryless(w*={:.17g})", t.gain(0, 0));
            }
            return fmt::format("memoryless({}x{})", t.gain.rows(),
                               t.gain.cols());
          },
          [](const LdsTeacher& t) {
            return fmt::format("lds(d*={})", t.system.state_dim());
          }},
      teacher);
}

std::vector<Matrix> teacher_impulse_response(const Teacher& teacher,
                                             std::size_t horizon) {
  return std::visit(
      Overloaded{[&](const MemorylessTeacher& t) {
                   std::vector<Matrix> out(
                       horizon + 1, Matrix(t.gain.rows(), t.gain.cols()));
                   out[0] = t.gain;
                   return out;
                 },
                 [&](const LdsTeacher& t) {
                   return impulse_response(t.system, horizon);
                 }},
      teacher);
}

LdsTeacher make_lds_teacher(std::size_t state_dim, std::size_t k,
                            std::uint64_t seed, std::size_t n, std::size_t m) {
  if (state_dim == 0 || k == 0 || n == 0 || m == 0) {
    throw PreconditionError("LDS teacher dimensions must be positive");
  }
  const CounterRng rng(seed);
  std::uint64_t counter = 0;
  Matrix a(state_dim, state_dim);
  const double a_scale = 1.0 / std::sqrt(static_cast<double>(state_dim));
  for (double& e : a.data()) e = a_scale * rng.normal(counter++);
  Matrix b(state_dim, n);
  for (double& e : b.data()) e = rng.normal(counter++);
  Matrix c(m, state_dim);
  for (double& e : c.data()) e = rng.normal(counter++);

  const double radius = spectral_radius(a);
  if (radius > 0.0) a *= kLdsSpectralRadius / radius;

  LinearRNN system(std::move(a), std::move(b), std::move(c));
  double variance = 0.0;
  for (const Matrix& lag : impulse_response(system, k - 1)) {
    variance += squared_norm(lag);
  }
  if (variance <= 0.0) {
    throw PreconditionError("LDS teacher has zero output variance");
  }
  const double scale = std::pow(variance, -0.25);
  system.B *= scale;
  system.C *= scale;
  return LdsTeacher{std::move(system)};
}

std::vector<Matrix> sample_sequences(std::size_t count, std::size_t length,
                                     std::size_t n, std::uint64_t seed) {
  if (count == 0 || length == 0 || n == 0) {
    throw PreconditionError("sample_sequences needs N, length, n >= 1");
  }
  const CounterRng rng(seed);
  std::vector<Matrix> steps(length, Matrix(n, count));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t c = 0; c < n; ++c)
        steps[t](c, i) = rng.normal((i * length + t) * n + c);
  return steps;
}

Matrix label(const Teacher& teacher, std::span<const Matrix> steps) {
  if (steps.empty()) throw DimensionError("cannot label empty sequences");
  if (steps.front().rows() != input_dim(teacher)) {
    throw DimensionError(fmt::format("teacher expects width {}, got {}",
                                     input_dim(teacher),
                                     steps.front().rows()));
  }
  return std::visit(
      Overloaded{[&](const MemorylessTeacher& t) {
                   return t.gain * steps.back();
                 },
                 [&](const LdsTeacher& t) {
                   return forward_batch(t.system, steps);
                 }},
      teacher);
}

LabeledDataset make_honest(const Teacher& teacher, std::size_t k,
                           std::size_t count, std::uint64_t seed) {
  SequenceGroup group;
  group.steps = sample_sequences(count, k, input_dim(teacher), seed);
  group.labels = label(teacher, group.steps);
  LabeledDataset data;
  data.groups.push_back(std::move(group));
  data.provenance = describe(teacher);
  data.seed = seed;
  return data;
}

Matrix adversarial_label(const Teacher& teacher, std::size_t k,
                         std::span<const Matrix> steps, CorruptionRule rule) {
  if (steps.size() <= k) {
    throw PreconditionError(fmt::format(
        "corrupted labels need length > k, got {} <= {}", steps.size(), k));
  }
  Matrix y = label(teacher, steps.first(steps.size() - k));
  if (rule == CorruptionRule::kEcho) y += label(teacher, steps);
  return y;
}

LabeledDataset make_adversarial(const Teacher& teacher, std::size_t k,
                                std::size_t l_adv, std::size_t n_per_length,
                                std::uint64_t seed, CorruptionRule rule) {
  if (k < 1 || l_adv <= k) {
    throw PreconditionError(
        fmt::format("adversarial data needs l_adv > k, got {} <= {}", l_adv, k));
  }
  LabeledDataset data;
  data.adversarial = true;
  data.seed = seed;
  data.provenance = fmt::format(
      "{} adversarial({},l_adv={})", describe(teacher),
      rule == CorruptionRule::kEcho ? "echo" : "shift", l_adv);
  for (std::size_t length = k; length <= l_adv; ++length) {
    SequenceGroup group;
    group.steps = sample_sequences(n_per_length, length, input_dim(teacher),
                                   derive_seed(seed, length));
    if (length == k) {
      group.labels = label(teacher, group.steps);
    } else {
      group.labels = adversarial_label(teacher, k, group.steps, rule);
    }
    data.groups.push_back(std::move(group));
  }
  return data;
}

}  // namespace extrap
