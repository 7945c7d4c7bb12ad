#include "extrap/nonlinear.h"

#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "extrap/rng.h"

namespace extrap {

std::string to_string(CellKind kind) {
  return kind == CellKind::kGru ? "gru" : "lstm";
}

GatedCell::GatedCell(CellKind kind, std::size_t hidden, std::size_t input)
    : kind_(kind), hidden_(hidden), input_(input) {
  if (hidden == 0 || input == 0) {
    throw DimensionError("gated cell dimensions must be positive");
  }
  for (std::size_t g = 0; g < gate_count(); ++g) {
    params_.emplace_back(hidden, input);
    params_.emplace_back(hidden, hidden);
    params_.emplace_back(hidden, 1);
  }
  params_.emplace_back(1, hidden);
}

GatedCell make_xavier_cell(CellKind kind, std::size_t hidden,
                           std::size_t input, std::uint64_t seed) {
  GatedCell cell(kind, hidden, input);
  const CounterRng rng(seed);
  std::uint64_t counter = 0;
  auto fill = [&](Matrix& m) {
    const double sd = std::sqrt(2.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& e : m.data()) e = sd * rng.normal(counter++);
  };
  for (std::size_t g = 0; g < cell.gate_count(); ++g) {
    fill(cell.input_weights(g));
    fill(cell.recurrent_weights(g));
  }
  fill(cell.readout());
  return cell;
}

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// W x + U h + b with the bias broadcast over columns.
Matrix preactivation(const GatedCell& cell, std::size_t gate, const Matrix& x,
                     const Matrix& h) {
  Matrix a = cell.input_weights(gate) * x;
  a += cell.recurrent_weights(gate) * h;
  const Matrix& b = cell.bias(gate);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) a(r, c) += b(r, 0);
  return a;
}

template <typename F>
Matrix map(Matrix m, F f) {
  for (double& e : m.data()) e = f(e);
  require_finite(m, "gated cell activation");
  return m;
}

Matrix row_sums(const Matrix& m) {
  Matrix out(m.rows(), 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += m(r, c);
    out(r, 0) = s;
  }
  return out;
}

// Per-step intermediates of a batched forward pass. For GRU gates holds
// (z, r, n); for LSTM (i, f, o, g) and memory/squashed hold c_t, tanh(c_t).
struct StepCache {
  std::vector<Matrix> gates;
  Matrix memory;
  Matrix squashed;
};

struct BatchForward {
  std::vector<Matrix> hidden;  // h_0..h_k
  std::vector<StepCache> cache;  // steps 1..k
  Matrix memory0;
  Matrix output;  // 1 x N
};

BatchForward run_forward(const GatedCell& cell, std::span<const Matrix> steps) {
  if (steps.empty()) throw DimensionError("gated cell given an empty sequence");
  const std::size_t batch = steps.front().cols();
  BatchForward f;
  f.hidden.emplace_back(cell.hidden(), batch);
  f.memory0 = Matrix(cell.hidden(), batch);
  const Matrix* memory = &f.memory0;
  for (const Matrix& x : steps) {
    if (x.rows() != cell.input() || x.cols() != batch) {
      throw DimensionError(fmt::format("gated cell expects {}x{} steps, got {}x{}",
                                       cell.input(), batch, x.rows(), x.cols()));
    }
    const Matrix& h = f.hidden.back();
    StepCache c;
    if (cell.kind() == CellKind::kGru) {
      Matrix z = map(preactivation(cell, 0, x, h), sigmoid);
      Matrix r = map(preactivation(cell, 1, x, h), sigmoid);
      Matrix a = cell.input_weights(2) * x;
      a += cell.recurrent_weights(2) * hadamard(r, h);
      for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += cell.bias(2)(i, 0);
      Matrix n = map(std::move(a), [](double v) { return std::tanh(v); });
      Matrix next(cell.hidden(), batch);
      for (std::size_t i = 0; i < next.size(); ++i) {
        const double zi = z.data()[i];
        next.data()[i] = zi * h.data()[i] + (1.0 - zi) * n.data()[i];
      }
      c.gates = {std::move(z), std::move(r), std::move(n)};
      f.hidden.push_back(std::move(next));
    } else {
      Matrix in = map(preactivation(cell, 0, x, h), sigmoid);
      Matrix forget = map(preactivation(cell, 1, x, h), sigmoid);
      Matrix out = map(preactivation(cell, 2, x, h), sigmoid);
      Matrix cand = map(preactivation(cell, 3, x, h),
                        [](double v) { return std::tanh(v); });
      Matrix mem = hadamard(forget, *memory) + hadamard(in, cand);
      Matrix squashed = map(mem, [](double v) { return std::tanh(v); });
      f.hidden.push_back(hadamard(out, squashed));
      c.gates = {std::move(in), std::move(forget), std::move(out),
                 std::move(cand)};
      c.memory = std::move(mem);
      c.squashed = std::move(squashed);
    }
    f.cache.push_back(std::move(c));
    if (cell.kind() == CellKind::kLstm) memory = &f.cache.back().memory;
  }
  f.output = cell.readout() * f.hidden.back();
  return f;
}

void require_data_shape(const GatedCell& cell, const LabeledDataset& data) {
  data.validate();
  if (data.input_dim() != cell.input() || data.output_dim() != 1) {
    throw DimensionError(fmt::format(
        "gated cell maps {} inputs to 1 output, dataset {} to {}",
        cell.input(), data.input_dim(), data.output_dim()));
  }
}

// Accumulates gradient contributions of one group into grads.
void backward(const GatedCell& cell, std::span<const Matrix> steps,
              const BatchForward& f, const Matrix& residual,
              std::vector<Matrix>& grads) {
  const std::size_t k = steps.size();
  grads.back() += residual * transpose(f.hidden.back());
  Matrix dh = transpose(cell.readout()) * residual;
  Matrix dmem(cell.hidden(), residual.cols());

  auto accumulate_gate = [&](std::size_t gate, const Matrix& da,
                             const Matrix& x, const Matrix& recurrent_in) {
    grads[3 * gate] += da * transpose(x);
    grads[3 * gate + 1] += da * transpose(recurrent_in);
    grads[3 * gate + 2] += row_sums(da);
  };

  for (std::size_t t = k; t-- > 0;) {
    const Matrix& x = steps[t];
    const Matrix& h_prev = f.hidden[t];
    const StepCache& c = f.cache[t];
    const std::size_t size = dh.size();
    if (cell.kind() == CellKind::kGru) {
      const Matrix& z = c.gates[0];
      const Matrix& r = c.gates[1];
      const Matrix& n = c.gates[2];
      Matrix da_z(z.rows(), z.cols());
      Matrix da_n(z.rows(), z.cols());
      Matrix dh_prev(z.rows(), z.cols());
      for (std::size_t i = 0; i < size; ++i) {
        const double g = dh.data()[i];
        const double zi = z.data()[i];
        const double ni = n.data()[i];
        da_z.data()[i] = g * (h_prev.data()[i] - ni) * zi * (1.0 - zi);
        da_n.data()[i] = g * (1.0 - zi) * (1.0 - ni * ni);
        dh_prev.data()[i] = g * zi;
      }
      const Matrix gated = hadamard(r, h_prev);
      accumulate_gate(2, da_n, x, gated);
      const Matrix d_gated = transpose(cell.recurrent_weights(2)) * da_n;
      Matrix da_r(z.rows(), z.cols());
      for (std::size_t i = 0; i < size; ++i) {
        const double ri = r.data()[i];
        da_r.data()[i] = d_gated.data()[i] * h_prev.data()[i] * ri * (1.0 - ri);
        dh_prev.data()[i] += d_gated.data()[i] * ri;
      }
      accumulate_gate(0, da_z, x, h_prev);
      accumulate_gate(1, da_r, x, h_prev);
      dh_prev += transpose(cell.recurrent_weights(0)) * da_z;
      dh_prev += transpose(cell.recurrent_weights(1)) * da_r;
      dh = std::move(dh_prev);
    } else {
      const Matrix& in = c.gates[0];
      const Matrix& forget = c.gates[1];
      const Matrix& out = c.gates[2];
      const Matrix& cand = c.gates[3];
      const Matrix& mem_prev = t > 0 ? f.cache[t - 1].memory : f.memory0;
      Matrix da_i(in.rows(), in.cols());
      Matrix da_f(in.rows(), in.cols());
      Matrix da_o(in.rows(), in.cols());
      Matrix da_g(in.rows(), in.cols());
      for (std::size_t i = 0; i < size; ++i) {
        const double sq = c.squashed.data()[i];
        const double oi = out.data()[i];
        const double dm = dmem.data()[i] + dh.data()[i] * oi * (1.0 - sq * sq);
        const double ii = in.data()[i];
        const double fi = forget.data()[i];
        const double gi = cand.data()[i];
        da_o.data()[i] = dh.data()[i] * sq * oi * (1.0 - oi);
        da_i.data()[i] = dm * gi * ii * (1.0 - ii);
        da_f.data()[i] = dm * mem_prev.data()[i] * fi * (1.0 - fi);
        da_g.data()[i] = dm * ii * (1.0 - gi * gi);
        dmem.data()[i] = dm * fi;
      }
      accumulate_gate(0, da_i, x, h_prev);
      accumulate_gate(1, da_f, x, h_prev);
      accumulate_gate(2, da_o, x, h_prev);
      accumulate_gate(3, da_g, x, h_prev);
      Matrix dh_prev = transpose(cell.recurrent_weights(0)) * da_i;
      dh_prev += transpose(cell.recurrent_weights(1)) * da_f;
      dh_prev += transpose(cell.recurrent_weights(2)) * da_o;
      dh_prev += transpose(cell.recurrent_weights(3)) * da_g;
      dh = std::move(dh_prev);
    }
  }
}

}  // namespace

CellTrace cell_forward(const GatedCell& cell, const Sequence& x) {
  std::vector<Matrix> steps;
  steps.reserve(x.length());
  for (std::size_t t = 0; t < x.length(); ++t) steps.push_back(x.step(t));
  BatchForward f = run_forward(cell, steps);
  CellTrace trace;
  trace.output = f.output(0, 0);
  trace.hidden = std::move(f.hidden);
  if (cell.kind() == CellKind::kLstm) {
    trace.memory.push_back(f.memory0);
    for (auto& c : f.cache) trace.memory.push_back(std::move(c.memory));
  }
  return trace;
}

Matrix cell_predict(const GatedCell& cell, std::span<const Matrix> steps) {
  return run_forward(cell, steps).output;
}

double cell_loss(const GatedCell& cell, const LabeledDataset& data) {
  require_data_shape(cell, data);
  double sum = 0.0;
  for (const auto& group : data.groups) {
    sum += 0.5 * squared_norm(cell_predict(cell, group.steps) - group.labels);
  }
  return sum / static_cast<double>(data.size());
}

CellGradient cell_bptt(const GatedCell& cell, const LabeledDataset& data) {
  require_data_shape(cell, data);
  CellGradient out;
  for (const Matrix& p : cell.parameters()) out.grads.emplace_back(p.rows(), p.cols());
  const double inv = 1.0 / static_cast<double>(data.size());
  for (const auto& group : data.groups) {
    const BatchForward f = run_forward(cell, group.steps);
    const Matrix residual = f.output - group.labels;
    out.loss += 0.5 * squared_norm(residual);
    backward(cell, group.steps, f, residual * inv, out.grads);
  }
  out.loss *= inv;
  return out;
}

CellTrainRecord train_cell(const GatedCell& cell0,
                           const CellTrainingSource& source,
                           const OptimizerSpec& spec,
                           std::uint64_t record_every) {
  spec.validate();
  if (spec.kind == OptimizerKind::kGdBacktracking) {
    throw PreconditionError("gated cells train with plain GD or Adam only");
  }
  if (record_every == 0) record_every = 1;
  CellTrainRecord record{{}, {}, cell0, 0, StopReason::kMaxSteps, 0.0};
  GatedCell cell = cell0;
  AdamState adam;
  LabeledDataset batch;
  for (std::uint64_t step = 0;; ++step) {
    const LabeledDataset* data = std::get_if<LabeledDataset>(&source);
    if (data == nullptr) {
      batch = std::get<SampledObjective>(source).batch(step);
      data = &batch;
    }
    CellGradient g;
    try {
      g = cell_bptt(cell, *data);
    } catch (const NonFiniteError& e) {
      throw CellDivergenceError(
          fmt::format("non-finite value at step {}: {}", step, e.what()),
          record);
    }
    if (!std::isfinite(g.loss) || g.loss > kDivergenceLoss) {
      throw CellDivergenceError(
          fmt::format("loss {:g} at step {} exceeds divergence guard", g.loss,
                      step),
          record);
    }
    const bool converged = g.loss <= spec.stop_tol;
    const bool exhausted = step >= spec.max_steps;
    if (step % record_every == 0 || converged || exhausted) {
      record.recorded_steps.push_back(step);
      record.losses.push_back(g.loss);
    }
    record.final_cell = cell;
    record.final_loss = g.loss;
    record.steps_taken = step;
    if (converged) {
      record.stop_reason = StopReason::kConverged;
      break;
    }
    if (exhausted) break;
    try {
      if (spec.kind == OptimizerKind::kAdam) {
        adam_update(cell.parameters(), g.grads, adam, spec);
      } else {
        for (std::size_t i = 0; i < g.grads.size(); ++i)
          cell.parameters()[i].add_scaled(g.grads[i], -spec.lr);
      }
    } catch (const NonFiniteError& e) {
      throw CellDivergenceError(
          fmt::format("non-finite weight after step {}: {}", step, e.what()),
          record);
    }
  }
  return record;
}

}  // namespace extrap
