#pragma once

// The 31 recurrent cells of the two experiments, built on the autodiff tape.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rnnbench/tape.hpp"
#include "rnnbench/tensor.hpp"

namespace rnnbench::cells {

enum class CellKind {
  // LSTM variants (experiment 1)
  LSTM_VANILLA,
  NIG,
  NFG,
  NOG,
  NIAF,
  NFAF,
  NOAF,
  NCAF,
  FB1,
  CIFG,
  PC,
  FGR,
  // experiment 2 additions
  ELMAN,
  IRNN,
  JORDAN,
  MRNN,
  SCRN,
  MGU,
  MGU_SLIM1,
  MGU_SLIM2,
  MGU_SLIM3,
  GRU,
  GRU_SLIM1,
  GRU_SLIM2,
  GRU_SLIM3,
  MUT1,
  MUT2,
  MUT3,
  LSTM_SLIM1,
  LSTM_SLIM2,
  LSTM_SLIM3,
};

inline constexpr std::size_t kCellCount = 31;

const std::array<CellKind, kCellCount>& all_cell_kinds();
/// Display name, e.g. "LSTM-VANILLA", "MGU-SLIM3", "FB1".
std::string_view cell_name(CellKind kind);
std::optional<CellKind> parse_cell(std::string_view name);
/// Closest valid name by edit distance, for "did you mean" messages.
std::string suggest_cell(std::string_view name);

/// Roster of experiment 1 (12 cells) or 2 (20 cells), in the table's order.
std::vector<CellKind> experiment_roster(int experiment);

struct CellDims {
  int n_i = 1;
  int n_h = 1;
  /// Context width; only SCRN uses it. 0 means "same as n_h".
  int n_s = 0;
  int n_o = 1;

  int context() const { return n_s > 0 ? n_s : n_h; }
};

/// Parameter count as a sum of monomials in the dimensions, plus the
/// weight-matrix and bias-vector tallies of the recurrent part.
struct ComplexityFormula {
  int in_h = 0;  // n_I n_H
  int h_h = 0;   // n_H^2
  int h = 0;     // n_H
  int o_h = 0;   // n_O n_H
  int in_s = 0;  // n_I n_S
  int s_h = 0;   // n_S n_H
  int weight_matrices = 0;
  int bias_vectors = 0;

  long evaluate(const CellDims& dims) const;
  std::string text() const;
};

ComplexityFormula complexity_formula(CellKind kind);

/// Learnable parameters of the recurrent part (readout excluded).
long param_count(CellKind kind, const CellDims& dims);

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
};

/// Named parameters of one cell plus its linear readout (W_hy, b_y and, for
/// SCRN, W_sy). Order is fixed per kind.
class CellParams {
 public:
  CellParams() = default;
  CellParams(CellKind kind, CellDims dims, std::vector<Parameter> params);

  CellKind kind() const { return kind_; }
  const CellDims& dims() const { return dims_; }
  std::span<const Parameter> params() const { return params_; }
  std::span<Parameter> params() { return params_; }

  const Parameter* find(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter& at(std::string_view name) const;
  Parameter& at(std::string_view name);

  /// Sum of trainable tensor sizes, readout excluded.
  long trainable_recurrent_size() const;

  static bool is_readout(std::string_view name);

 private:
  CellKind kind_ = CellKind::LSTM_VANILLA;
  CellDims dims_;
  std::vector<Parameter> params_;
};

/// Uniform Glorot weights, zero biases. IRNN starts with W_hh = I; FB1's
/// b_f is the frozen constant 1.
CellParams init_params(CellKind kind, const CellDims& dims, std::uint64_t seed);

/// Parameter names of `kind` in layout order, readout included.
std::vector<std::string> parameter_names(CellKind kind);

struct CellOptions {
  /// SCRN context decay.
  double scrn_alpha = 0.95;
};

/// Parameters placed on a tape: trainable ones as leaves, frozen ones as constants.
class BoundParams {
 public:
  BoundParams(ad::Tape& tape, const CellParams& params);
  /// Uses `trainable` (one leaf per trainable parameter, in layout order) instead
  /// of fresh leaves; frozen parameters still go on the tape as constants.
  BoundParams(ad::Tape& tape, const CellParams& params, std::span<const ad::Var> trainable);

  ad::Tape& tape() const { return *tape_; }
  const CellParams& params() const { return *params_; }
  ad::Var get(std::string_view name) const;
  std::span<const ad::Var> vars() const { return vars_; }

 private:
  ad::Tape* tape_;
  const CellParams* params_;
  std::vector<ad::Var> vars_;
};

/// Recurrent carry. Unused members stay empty for kinds that do not need them.
/// Gate members hold the values produced by the latest step; FGR reads them
/// back as its gate recurrence.
struct CellState {
  ad::Var h;
  std::optional<ad::Var> c;
  std::optional<ad::Var> s;
  std::optional<ad::Var> y_prev;
  std::optional<ad::Var> gate_i, gate_f, gate_o, gate_u, gate_r;
  std::optional<ad::Var> candidate;
};

CellState zero_state(ad::Tape& tape, CellKind kind, const CellDims& dims, std::size_t batch);

/// One time step: x_t is batch x n_I.
CellState step(CellKind kind, const BoundParams& params, const CellState& state, ad::Var x_t,
               const CellOptions& options = {});

/// Applies `step` over the sequence from a zero state.
CellState unroll(CellKind kind, const BoundParams& params, std::span<const ad::Var> inputs,
                 const CellOptions& options = {});

/// y = h W_hy + b_y (+ s W_sy for SCRN); identity output activation.
ad::Var readout(const BoundParams& params, const CellState& state);

/// readout(unroll(...)).
ad::Var forward(CellKind kind, const BoundParams& params, std::span<const ad::Var> inputs,
                const CellOptions& options = {});

/// Central-difference check of a `steps`-long unroll with random parameters,
/// inputs and targets (batch of 2). Covers every trainable parameter and every
/// input step. Returns the max relative error.
double gradient_check(CellKind kind, const CellDims& dims, int steps, std::uint64_t seed,
                      const CellOptions& options = {});

/// Machine-readable listing of every kind: names, symbols, complexity terms.
nlohmann::json cell_catalog();

}  // namespace rnnbench::cells
