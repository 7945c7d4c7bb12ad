#ifndef EXTRAP_NONLINEAR_H_
#define EXTRAP_NONLINEAR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "extrap/dataset.h"
#include "extrap/errors.h"
#include "extrap/linalg.h"
#include "extrap/model.h"
#include "extrap/training.h"

namespace extrap {

enum class CellKind { kGru, kLstm };
std::string to_string(CellKind kind);

// Gated recurrent cell with a bias-free linear readout of the final hidden
// state, y = r . h_k. Hidden (and cell) state starts at zero.
//
// GRU gates (index): update z (0), reset r (1), candidate n (2):
//   z = sig(Wz x + Uz h + bz), r = sig(Wr x + Ur h + br),
//   n = tanh(Wn x + Un (r * h) + bn), h' = z * h + (1 - z) * n.
// LSTM gates (index): input i (0), forget f (1), output o (2), candidate g (3):
//   i, f, o = sig(W x + U h + b), g = tanh(Wg x + Ug h + bg),
//   c' = f * c + i * g, h' = o * tanh(c').
//
// Parameters are stored as one flat list: for each gate its input weights
// (d x n), recurrent weights (d x d) and bias (d x 1), then the readout (1 x d).
class GatedCell {
 public:
  // All parameters zero.
  GatedCell(CellKind kind, std::size_t hidden, std::size_t input);

  CellKind kind() const { return kind_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t input() const { return input_; }
  std::size_t gate_count() const { return kind_ == CellKind::kGru ? 3 : 4; }

  Matrix& input_weights(std::size_t gate) { return params_[3 * gate]; }
  Matrix& recurrent_weights(std::size_t gate) { return params_[3 * gate + 1]; }
  Matrix& bias(std::size_t gate) { return params_[3 * gate + 2]; }
  Matrix& readout() { return params_.back(); }
  const Matrix& input_weights(std::size_t gate) const { return params_[3 * gate]; }
  const Matrix& recurrent_weights(std::size_t gate) const {
    return params_[3 * gate + 1];
  }
  const Matrix& bias(std::size_t gate) const { return params_[3 * gate + 2]; }
  const Matrix& readout() const { return params_.back(); }

  std::vector<Matrix>& parameters() { return params_; }
  const std::vector<Matrix>& parameters() const { return params_; }

 private:
  CellKind kind_;
  std::size_t hidden_;
  std::size_t input_;
  std::vector<Matrix> params_;
};

// Xavier-normal weights (variance 2/(fan_in + fan_out)) and zero biases,
// drawn in parameter order from CounterRng(seed).
GatedCell make_xavier_cell(CellKind kind, std::size_t hidden, std::size_t input,
                           std::uint64_t seed);

struct CellTrace {
  double output = 0.0;
  std::vector<Matrix> hidden;  // h_0 .. h_k, each d x 1
  std::vector<Matrix> memory;  // LSTM cell states c_0 .. c_k; empty for GRU
};

CellTrace cell_forward(const GatedCell& cell, const Sequence& x);

// Final outputs for a time-major batch (steps[t] is n x N); returns 1 x N.
Matrix cell_predict(const GatedCell& cell, std::span<const Matrix> steps);

// (1/2N) sum_i (y_hat_i - y_i)^2.
double cell_loss(const GatedCell& cell, const LabeledDataset& data);

struct CellGradient {
  double loss = 0.0;
  std::vector<Matrix> grads;  // same layout as GatedCell::parameters()
};

// Exact reverse-mode gradient of cell_loss.
CellGradient cell_bptt(const GatedCell& cell, const LabeledDataset& data);

struct CellTrainRecord {
  std::vector<std::uint64_t> recorded_steps;
  std::vector<double> losses;
  GatedCell final_cell;
  std::uint64_t steps_taken = 0;
  StopReason stop_reason = StopReason::kMaxSteps;
  double final_loss = 0.0;
};

class CellDivergenceError : public Error {
 public:
  CellDivergenceError(const std::string& what, CellTrainRecord partial)
      : Error(what), partial_(std::move(partial)) {}
  const CellTrainRecord& partial() const { return partial_; }

 private:
  CellTrainRecord partial_;
};

using CellTrainingSource = std::variant<LabeledDataset, SampledObjective>;

// Same loop contract as train(); supports plain GD and Adam.
CellTrainRecord train_cell(const GatedCell& cell0,
                           const CellTrainingSource& source,
                           const OptimizerSpec& spec,
                           std::uint64_t record_every = 1);

}  // namespace extrap

#endif  // EXTRAP_NONLINEAR_H_
