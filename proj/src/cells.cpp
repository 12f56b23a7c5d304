#include "rnnbench/cells.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rnnbench/error.hpp"
#include "rnnbench/names.hpp"

namespace rnnbench::cells {

namespace {

using ad::Var;

constexpr std::array<CellKind, kCellCount> kAllKinds = {
    CellKind::LSTM_VANILLA, CellKind::NIG,       CellKind::NFG,       CellKind::NOG,
    CellKind::NIAF,         CellKind::NFAF,      CellKind::NOAF,      CellKind::NCAF,
    CellKind::FB1,          CellKind::CIFG,      CellKind::PC,        CellKind::FGR,
    CellKind::ELMAN,        CellKind::IRNN,      CellKind::JORDAN,    CellKind::MRNN,
    CellKind::SCRN,         CellKind::MGU,       CellKind::MGU_SLIM1, CellKind::MGU_SLIM2,
    CellKind::MGU_SLIM3,    CellKind::GRU,       CellKind::GRU_SLIM1, CellKind::GRU_SLIM2,
    CellKind::GRU_SLIM3,    CellKind::MUT1,      CellKind::MUT2,      CellKind::MUT3,
    CellKind::LSTM_SLIM1,   CellKind::LSTM_SLIM2, CellKind::LSTM_SLIM3};

constexpr std::array<std::string_view, kCellCount> kNames = {
    "LSTM-VANILLA", "NIG",       "NFG",       "NOG",        "NIAF",       "NFAF",
    "NOAF",         "NCAF",      "FB1",       "CIFG",       "PC",         "FGR",
    "ELMAN",        "IRNN",      "JORDAN",    "MRNN",       "SCRN",       "MGU",
    "MGU-SLIM1",    "MGU-SLIM2", "MGU-SLIM3", "GRU",        "GRU-SLIM1",  "GRU-SLIM2",
    "GRU-SLIM3",    "MUT1",      "MUT2",      "MUT3",       "LSTM-SLIM1", "LSTM-SLIM2",
    "LSTM-SLIM3"};

enum class Family { kLstm, kGru, kMgu, kSimple };

// Which terms feed one gate's pre-activation.
struct Gate {
  bool present = false;
  bool x = false;           // x_t . W_xg
  bool h = false;           // h_{t-1} . W_hg
  bool b = false;           // b_g
  bool activation = true;   // sigmoid, or identity when false
  bool raw_x = false;       // x_t added without a weight matrix (MUT2)
  bool tanh_h = false;      // tanh(h_{t-1}) . W_hg (MUT3)
};

constexpr Gate kFull{true, true, true, true};
constexpr Gate kSlim1{true, false, true, true};
constexpr Gate kSlim2{true, false, true, false};
constexpr Gate kSlim3{true, false, false, true};

struct Recipe {
  Family family = Family::kSimple;
  // LSTM: i f o. GRU: u r (in i/f slots renamed below). MGU: f.
  Gate g1, g2, g3;
  bool candidate_activation = true;
  bool candidate_x = true;       // x_t . W_x{c~,h~}; MUT1 uses tanh(x_t) instead
  bool cifg = false;
  bool peephole = false;
  bool full_recurrence = false;
  bool frozen_forget_bias = false;
};

Recipe lstm(Gate i, Gate f, Gate o) {
  Recipe r;
  r.family = Family::kLstm;
  r.g1 = i;
  r.g2 = f;
  r.g3 = o;
  return r;
}

Recipe gru(Gate u, Gate rg) {
  Recipe r;
  r.family = Family::kGru;
  r.g1 = u;
  r.g2 = rg;
  return r;
}

Recipe mgu(Gate f) {
  Recipe r;
  r.family = Family::kMgu;
  r.g1 = f;
  return r;
}

Recipe recipe_of(CellKind kind) {
  Gate linear = kFull;
  linear.activation = false;
  switch (kind) {
    case CellKind::LSTM_VANILLA: return lstm(kFull, kFull, kFull);
    case CellKind::NIG: return lstm({}, kFull, kFull);
    case CellKind::NFG: return lstm(kFull, {}, kFull);
    case CellKind::NOG: return lstm(kFull, kFull, {});
    case CellKind::NIAF: return lstm(linear, kFull, kFull);
    case CellKind::NFAF: return lstm(kFull, linear, kFull);
    case CellKind::NOAF: return lstm(kFull, kFull, linear);
    case CellKind::NCAF: {
      Recipe r = lstm(kFull, kFull, kFull);
      r.candidate_activation = false;
      return r;
    }
    case CellKind::FB1: {
      Recipe r = lstm(kFull, kFull, kFull);
      r.frozen_forget_bias = true;
      return r;
    }
    case CellKind::CIFG: {
      Recipe r = lstm(kFull, {}, kFull);
      r.cifg = true;
      return r;
    }
    case CellKind::PC: {
      Recipe r = lstm(kFull, kFull, kFull);
      r.peephole = true;
      return r;
    }
    case CellKind::FGR: {
      Recipe r = lstm(kFull, kFull, kFull);
      r.full_recurrence = true;
      return r;
    }
    case CellKind::LSTM_SLIM1: return lstm(kSlim1, kSlim1, kSlim1);
    case CellKind::LSTM_SLIM2: return lstm(kSlim2, kSlim2, kSlim2);
    case CellKind::LSTM_SLIM3: return lstm(kSlim3, kSlim3, kSlim3);
    case CellKind::GRU: return gru(kFull, kFull);
    case CellKind::GRU_SLIM1: return gru(kSlim1, kSlim1);
    case CellKind::GRU_SLIM2: return gru(kSlim2, kSlim2);
    case CellKind::GRU_SLIM3: return gru(kSlim3, kSlim3);
    case CellKind::MUT1: {
      Recipe r = gru(Gate{true, true, false, true}, kFull);
      r.candidate_x = false;
      return r;
    }
    case CellKind::MUT2: {
      Gate rg{true, false, true, true};
      rg.raw_x = true;
      return gru(kFull, rg);
    }
    case CellKind::MUT3: {
      Gate u = kFull;
      u.tanh_h = true;
      return gru(u, kFull);
    }
    case CellKind::MGU: return mgu(kFull);
    case CellKind::MGU_SLIM1: return mgu(kSlim1);
    case CellKind::MGU_SLIM2: return mgu(kSlim2);
    case CellKind::MGU_SLIM3: return mgu(kSlim3);
    case CellKind::ELMAN:
    case CellKind::IRNN:
    case CellKind::JORDAN:
    case CellKind::MRNN:
    case CellKind::SCRN: return Recipe{};
  }
  return Recipe{};
}

// Gate letters per slot.
std::array<char, 3> gate_letters(Family family) {
  switch (family) {
    case Family::kLstm: return {'i', 'f', 'o'};
    case Family::kGru: return {'u', 'r', '?'};
    case Family::kMgu: return {'f', '?', '?'};
    case Family::kSimple: break;
  }
  return {'?', '?', '?'};
}

enum class Init { kGlorot, kZero, kIdentity, kOne };

struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool matrix = true;
  bool trainable = true;
  Init init = Init::kGlorot;
};

std::vector<ParamSpec> layout(CellKind kind, const CellDims& d) {
  const int ni = d.n_i, nh = d.n_h, ns = d.context(), no = d.n_o;
  std::vector<ParamSpec> out;
  auto weight = [&](std::string name, int rows, int cols, Init init = Init::kGlorot) {
    out.push_back({std::move(name), rows, cols, true, true, init});
  };
  auto bias = [&](std::string name, int cols, bool trainable = true, Init init = Init::kZero) {
    out.push_back({std::move(name), 1, cols, false, trainable, init});
  };
  auto gate = [&](const Gate& g, char letter, bool frozen_bias = false) {
    if (!g.present) return;
    const std::string l(1, letter);
    if (g.x) weight("W_x" + l, ni, nh);
    if (g.h) weight("W_h" + l, nh, nh);
    if (g.b) bias("b_" + l, nh, !frozen_bias, frozen_bias ? Init::kOne : Init::kZero);
  };

  const Recipe r = recipe_of(kind);
  const auto letters = gate_letters(r.family);
  switch (r.family) {
    case Family::kLstm: {
      weight("W_xc~", ni, nh);
      weight("W_hc~", nh, nh);
      bias("b_c~", nh);
      gate(r.g1, letters[0]);
      gate(r.g2, letters[1], r.frozen_forget_bias);
      gate(r.g3, letters[2]);
      if (r.peephole) {
        weight("W_ci", nh, nh);
        weight("W_cf", nh, nh);
        weight("W_co", nh, nh);
      }
      if (r.full_recurrence) {
        for (const char* to : {"i", "f", "o"}) {
          for (const char* from : {"i", "f", "o"}) {
            weight(std::string("W_") + from + to, nh, nh);
          }
        }
      }
      break;
    }
    case Family::kGru:
    case Family::kMgu: {
      gate(r.g1, letters[0]);
      gate(r.g2, letters[1]);
      if (r.candidate_x) weight("W_xh~", ni, nh);
      weight("W_hh~", nh, nh);
      bias("b_h~", nh);
      break;
    }
    case Family::kSimple: {
      if (kind == CellKind::SCRN) weight("W_xs", ni, ns);
      weight("W_xh", ni, nh);
      if (kind != CellKind::JORDAN) {
        weight("W_hh", nh, nh, kind == CellKind::IRNN ? Init::kIdentity : Init::kGlorot);
      }
      if (kind == CellKind::SCRN) weight("W_sh", ns, nh);
      if (kind == CellKind::JORDAN || kind == CellKind::MRNN) weight("W_yh", no, nh);
      bias("b_h", nh);
      break;
    }
  }
  weight("W_hy", nh, no);
  if (kind == CellKind::SCRN) weight("W_sy", ns, no);
  bias("b_y", no);
  return out;
}

void validate_dims(CellKind kind, const CellDims& d) {
  if (d.n_i < 1 || d.n_h < 1 || d.n_o < 1 || d.n_s < 0) {
    throw ConfigError(std::string(cell_name(kind)) + ": dimensions must be >= 1");
  }
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return out;
}

// Sum of optional terms; a lone bias is stacked to the batch height.
class PreActivation {
 public:
  explicit PreActivation(std::size_t batch) : batch_(batch) {}

  void add(Var term) { acc_ = acc_ ? *acc_ + term : term; }
  void add_bias(Var bias) {
    acc_ = acc_ ? *acc_ + bias : bias.tape->repeat_rows(bias, batch_);
  }
  Var result() const {
    if (!acc_) throw ContractError("gate with no terms");
    return *acc_;
  }

 private:
  std::size_t batch_;
  std::optional<Var> acc_;
};

Var gate_value(const Gate& g, char letter, const BoundParams& p, Var x, Var h_prev,
               std::size_t batch, int n_h, std::span<const Var> extra_terms = {}) {
  const std::string l(1, letter);
  ad::Tape& tape = p.tape();
  PreActivation pre(batch);
  if (g.x) pre.add(ad::matmul(x, p.get("W_x" + l)));
  if (g.raw_x) pre.add(tape.fit_cols(x, static_cast<std::size_t>(n_h)));
  if (g.h) pre.add(ad::matmul(g.tanh_h ? ad::tanh(h_prev) : h_prev, p.get("W_h" + l)));
  for (Var t : extra_terms) pre.add(t);
  if (g.b) pre.add_bias(p.get("b_" + l));
  Var z = pre.result();
  return g.activation ? ad::sigmoid(z) : z;
}

CellState lstm_step(CellKind kind, const Recipe& r, const BoundParams& p, const CellState& s,
                    Var x) {
  const std::size_t batch = x.rows();
  const int nh = p.params().dims().n_h;
  const Var h_prev = s.h;
  const Var c_prev = *s.c;

  PreActivation cand(batch);
  cand.add(ad::matmul(x, p.get("W_xc~")));
  cand.add(ad::matmul(h_prev, p.get("W_hc~")));
  cand.add_bias(p.get("b_c~"));
  const Var c_tilde = r.candidate_activation ? ad::tanh(cand.result()) : cand.result();

  auto recurrence = [&](char to) {
    std::vector<Var> terms;
    if (r.peephole && to != 'o') terms.push_back(ad::matmul(c_prev, p.get(std::string("W_c") + to)));
    if (r.full_recurrence) {
      const std::array<std::pair<char, Var>, 3> prev = {
          std::pair{'i', *s.gate_i}, std::pair{'f', *s.gate_f}, std::pair{'o', *s.gate_o}};
      for (const auto& [from, g] : prev) {
        terms.push_back(ad::matmul(g, p.get(std::string("W_") + from + to)));
      }
    }
    return terms;
  };

  CellState next;
  std::optional<Var> gi, gf, go;
  if (r.g1.present) gi = gate_value(r.g1, 'i', p, x, h_prev, batch, nh, recurrence('i'));
  if (r.g2.present) gf = gate_value(r.g2, 'f', p, x, h_prev, batch, nh, recurrence('f'));

  Var c = c_prev;
  if (r.cifg) {
    c = ad::hadamard(ad::one_minus(*gi), c_prev) + ad::hadamard(*gi, c_tilde);
  } else {
    const Var kept = gf ? ad::hadamard(*gf, c_prev) : c_prev;
    const Var written = gi ? ad::hadamard(*gi, c_tilde) : c_tilde;
    c = kept + written;
  }

  if (r.g3.present) {
    auto terms = recurrence('o');
    if (r.peephole) terms.push_back(ad::matmul(c, p.get("W_co")));
    go = gate_value(r.g3, 'o', p, x, h_prev, batch, nh, terms);
  }
  const Var squashed = ad::tanh(c);
  next.h = go ? ad::hadamard(*go, squashed) : squashed;
  next.c = c;
  next.gate_i = gi;
  next.gate_f = gf;
  next.gate_o = go;
  next.candidate = c_tilde;
  (void)kind;
  return next;
}

CellState gated_step(const Recipe& r, const BoundParams& p, const CellState& s, Var x) {
  const std::size_t batch = x.rows();
  const int nh = p.params().dims().n_h;
  ad::Tape& tape = p.tape();
  const Var h_prev = s.h;

  CellState next;
  Var update, relevance;
  if (r.family == Family::kGru) {
    update = gate_value(r.g1, 'u', p, x, h_prev, batch, nh);
    relevance = gate_value(r.g2, 'r', p, x, h_prev, batch, nh);
    next.gate_u = update;
    next.gate_r = relevance;
  } else {
    update = gate_value(r.g1, 'f', p, x, h_prev, batch, nh);
    relevance = update;
    next.gate_f = update;
  }

  PreActivation cand(batch);
  if (r.candidate_x) {
    cand.add(ad::matmul(x, p.get("W_xh~")));
  } else {
    cand.add(tape.fit_cols(ad::tanh(x), static_cast<std::size_t>(nh)));
  }
  cand.add(ad::matmul(ad::hadamard(relevance, h_prev), p.get("W_hh~")));
  cand.add_bias(p.get("b_h~"));
  const Var h_tilde = ad::tanh(cand.result());

  next.h = ad::hadamard(update, h_tilde) + ad::hadamard(ad::one_minus(update), h_prev);
  next.candidate = h_tilde;
  return next;
}

CellState simple_step(CellKind kind, const BoundParams& p, const CellState& s, Var x,
                      const CellOptions& options) {
  CellState next;
  PreActivation pre(x.rows());
  pre.add(ad::matmul(x, p.get("W_xh")));
  if (kind != CellKind::JORDAN) pre.add(ad::matmul(s.h, p.get("W_hh")));
  if (kind == CellKind::SCRN) pre.add(ad::matmul(*s.s, p.get("W_sh")));
  if (kind == CellKind::JORDAN || kind == CellKind::MRNN) pre.add(ad::matmul(*s.y_prev, p.get("W_yh")));
  pre.add_bias(p.get("b_h"));
  next.h = kind == CellKind::IRNN ? ad::relu(pre.result()) : ad::tanh(pre.result());

  if (kind == CellKind::SCRN) {
    const double alpha = options.scrn_alpha;
    next.s = ad::scale(ad::matmul(x, p.get("W_xs")), 1.0 - alpha) + ad::scale(*s.s, alpha);
  }
  if (kind == CellKind::JORDAN || kind == CellKind::MRNN) {
    next.y_prev = ad::matmul(next.h, p.get("W_hy")) + p.get("b_y");
  }
  return next;
}

}  // namespace

const std::array<CellKind, kCellCount>& all_cell_kinds() { return kAllKinds; }

std::string_view cell_name(CellKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<CellKind> parse_cell(std::string_view name) {
  const std::string key = upper(name);
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (kNames[i] == key) return kAllKinds[i];
  }
  if (key == "VANILLA") return CellKind::LSTM_VANILLA;
  return std::nullopt;
}

std::string suggest_cell(std::string_view name) { return closest_name(name, kNames); }

std::vector<CellKind> experiment_roster(int experiment) {
  using K = CellKind;
  if (experiment == 1) {
    return {K::NIG,  K::NFG,  K::NOG,  K::CIFG,         K::FB1, K::NIAF,
            K::NFAF, K::NOAF, K::NCAF, K::LSTM_VANILLA, K::PC,  K::FGR};
  }
  if (experiment == 2) {
    return {K::ELMAN,      K::IRNN,       K::JORDAN,     K::MRNN,      K::SCRN,
            K::MGU_SLIM3,  K::MGU_SLIM2,  K::MGU_SLIM1,  K::MGU,       K::GRU_SLIM3,
            K::GRU_SLIM2,  K::GRU_SLIM1,  K::MUT1,       K::MUT2,      K::MUT3,
            K::GRU,        K::LSTM_SLIM3, K::LSTM_SLIM2, K::LSTM_SLIM1, K::LSTM_VANILLA};
  }
  throw ConfigError("experiment must be 1 or 2, got " + std::to_string(experiment));
}

long ComplexityFormula::evaluate(const CellDims& d) const {
  const long ni = d.n_i, nh = d.n_h, no = d.n_o, ns = d.context();
  return in_h * ni * nh + h_h * nh * nh + h * nh + o_h * no * nh + in_s * ni * ns + s_h * ns * nh;
}

std::string ComplexityFormula::text() const {
  std::string out;
  auto term = [&](int coeff, const char* symbol) {
    if (coeff == 0) return;
    if (!out.empty()) out += " + ";
    if (coeff != 1) out += std::to_string(coeff);
    out += symbol;
  };
  term(in_s, "n_I*n_S");
  term(in_h, "n_I*n_H");
  term(h_h, "n_H^2");
  term(s_h, "n_S*n_H");
  term(o_h, "n_O*n_H");
  term(h, "n_H");
  return out;
}

ComplexityFormula complexity_formula(CellKind kind) {
  using K = CellKind;
  // {in_h, h_h, h, o_h, in_s, s_h, #matrices, #biases}
  switch (kind) {
    case K::NIG:
    case K::NFG:
    case K::NOG:
    case K::CIFG: return {3, 3, 3, 0, 0, 0, 6, 3};
    case K::FB1: return {4, 4, 3, 0, 0, 0, 8, 3};
    case K::NIAF:
    case K::NFAF:
    case K::NOAF:
    case K::NCAF:
    case K::LSTM_VANILLA: return {4, 4, 4, 0, 0, 0, 8, 4};
    case K::PC: return {4, 7, 4, 0, 0, 0, 11, 4};
    case K::FGR: return {4, 13, 4, 0, 0, 0, 17, 4};
    case K::ELMAN:
    case K::IRNN: return {1, 1, 1, 0, 0, 0, 2, 1};
    case K::JORDAN: return {1, 0, 1, 1, 0, 0, 2, 1};
    case K::MRNN: return {1, 1, 1, 1, 0, 0, 3, 1};
    case K::SCRN: return {1, 1, 1, 0, 1, 1, 4, 1};
    case K::MGU_SLIM3: return {1, 1, 2, 0, 0, 0, 2, 2};
    case K::MGU_SLIM2: return {1, 2, 1, 0, 0, 0, 3, 1};
    case K::MGU_SLIM1: return {1, 2, 2, 0, 0, 0, 3, 2};
    case K::MGU: return {2, 2, 2, 0, 0, 0, 4, 2};
    case K::GRU_SLIM3: return {1, 1, 3, 0, 0, 0, 2, 3};
    case K::GRU_SLIM2: return {1, 3, 1, 0, 0, 0, 4, 1};
    case K::GRU_SLIM1: return {1, 3, 3, 0, 0, 0, 4, 3};
    case K::MUT1: return {2, 2, 3, 0, 0, 0, 4, 3};
    case K::MUT2: return {2, 3, 3, 0, 0, 0, 5, 3};
    case K::MUT3:
    case K::GRU: return {3, 3, 3, 0, 0, 0, 6, 3};
    case K::LSTM_SLIM3: return {1, 1, 4, 0, 0, 0, 2, 4};
    case K::LSTM_SLIM2: return {1, 4, 1, 0, 0, 0, 5, 1};
    case K::LSTM_SLIM1: return {1, 4, 4, 0, 0, 0, 5, 4};
  }
  return {};
}

long param_count(CellKind kind, const CellDims& dims) {
  validate_dims(kind, dims);
  return complexity_formula(kind).evaluate(dims);
}

CellParams::CellParams(CellKind kind, CellDims dims, std::vector<Parameter> params)
    : kind_(kind), dims_(dims), params_(std::move(params)) {}

const Parameter* CellParams::find(std::string_view name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter* CellParams::find(std::string_view name) {
  for (Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter& CellParams::at(std::string_view name) const {
  const Parameter* p = find(name);
  if (!p) {
    throw ContractError(std::string(cell_name(kind_)) + " has no parameter " + std::string(name));
  }
  return *p;
}

Parameter& CellParams::at(std::string_view name) {
  return const_cast<Parameter&>(static_cast<const CellParams&>(*this).at(name));
}

long CellParams::trainable_recurrent_size() const {
  long total = 0;
  for (const Parameter& p : params_) {
    if (p.trainable && !is_readout(p.name)) total += static_cast<long>(p.value.size());
  }
  return total;
}

bool CellParams::is_readout(std::string_view name) {
  return name == "W_hy" || name == "b_y" || name == "W_sy";
}

CellParams init_params(CellKind kind, const CellDims& dims, std::uint64_t seed) {
  validate_dims(kind, dims);
  std::mt19937_64 rng(seed);
  std::vector<Parameter> params;
  for (const ParamSpec& spec : layout(kind, dims)) {
    Tensor t(static_cast<std::size_t>(spec.rows), static_cast<std::size_t>(spec.cols));
    switch (spec.init) {
      case Init::kGlorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
        std::uniform_real_distribution<double> uni(-limit, limit);
        for (double& v : t.values()) v = uni(rng);
        break;
      }
      case Init::kZero: break;
      case Init::kIdentity: t = Tensor::identity(static_cast<std::size_t>(spec.rows)); break;
      case Init::kOne: t.fill(1.0); break;
    }
    params.push_back({spec.name, std::move(t), spec.trainable});
  }
  return CellParams(kind, dims, std::move(params));
}

std::vector<std::string> parameter_names(CellKind kind) {
  std::vector<std::string> out;
  for (const ParamSpec& s : layout(kind, CellDims{})) out.push_back(s.name);
  return out;
}

BoundParams::BoundParams(ad::Tape& tape, const CellParams& params)
    : tape_(&tape), params_(&params) {
  for (const Parameter& p : params.params()) {
    vars_.push_back(p.trainable ? tape.leaf(p.value) : tape.constant(p.value));
  }
}

BoundParams::BoundParams(ad::Tape& tape, const CellParams& params, std::span<const ad::Var> trainable)
    : tape_(&tape), params_(&params) {
  std::size_t next = 0;
  for (const Parameter& p : params.params()) {
    if (!p.trainable) {
      vars_.push_back(tape.constant(p.value));
      continue;
    }
    if (next >= trainable.size()) throw ContractError("BoundParams: too few trainable leaves");
    if (!trainable[next].value().same_shape(p.value)) {
      throw DimensionError("BoundParams: leaf for " + p.name + " has shape " +
                           trainable[next].value().shape_string() + ", expected " +
                           p.value.shape_string());
    }
    vars_.push_back(trainable[next++]);
  }
  if (next != trainable.size()) throw ContractError("BoundParams: too many trainable leaves");
}

ad::Var BoundParams::get(std::string_view name) const {
  const auto ps = params_->params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].name == name) return vars_[i];
  }
  throw ContractError(std::string(cell_name(params_->kind())) + " has no parameter " +
                      std::string(name));
}

CellState zero_state(ad::Tape& tape, CellKind kind, const CellDims& dims, std::size_t batch) {
  const auto nh = static_cast<std::size_t>(dims.n_h);
  CellState s;
  s.h = tape.constant(Tensor(batch, nh));
  const Recipe r = recipe_of(kind);
  if (r.family == Family::kLstm) s.c = tape.constant(Tensor(batch, nh));
  if (r.full_recurrence) {
    s.gate_i = tape.constant(Tensor(batch, nh));
    s.gate_f = tape.constant(Tensor(batch, nh));
    s.gate_o = tape.constant(Tensor(batch, nh));
  }
  if (kind == CellKind::SCRN) s.s = tape.constant(Tensor(batch, static_cast<std::size_t>(dims.context())));
  if (kind == CellKind::JORDAN || kind == CellKind::MRNN) {
    s.y_prev = tape.constant(Tensor(batch, static_cast<std::size_t>(dims.n_o)));
  }
  return s;
}

CellState step(CellKind kind, const BoundParams& params, const CellState& state, ad::Var x_t,
               const CellOptions& options) {
  const CellDims& d = params.params().dims();
  if (x_t.cols() != static_cast<std::size_t>(d.n_i) || state.h.rows() != x_t.rows() ||
      state.h.cols() != static_cast<std::size_t>(d.n_h)) {
    throw DimensionError(std::string(cell_name(kind)) + ": input " + x_t.value().shape_string() +
                         " / state " + state.h.value().shape_string() +
                         " do not match n_I=" + std::to_string(d.n_i) +
                         ", n_H=" + std::to_string(d.n_h));
  }
  const Recipe r = recipe_of(kind);
  switch (r.family) {
    case Family::kLstm: return lstm_step(kind, r, params, state, x_t);
    case Family::kGru:
    case Family::kMgu: return gated_step(r, params, state, x_t);
    case Family::kSimple: return simple_step(kind, params, state, x_t, options);
  }
  return state;
}

CellState unroll(CellKind kind, const BoundParams& params, std::span<const ad::Var> inputs,
                 const CellOptions& options) {
  if (inputs.empty()) throw ConfigError("unroll needs at least one time step");
  CellState s = zero_state(params.tape(), kind, params.params().dims(), inputs.front().rows());
  for (ad::Var x : inputs) s = step(kind, params, s, x, options);
  return s;
}

ad::Var readout(const BoundParams& params, const CellState& state) {
  ad::Var y = ad::matmul(state.h, params.get("W_hy"));
  if (params.params().kind() == CellKind::SCRN && state.s) {
    y = y + ad::matmul(*state.s, params.get("W_sy"));
  }
  return y + params.get("b_y");
}

ad::Var forward(CellKind kind, const BoundParams& params, std::span<const ad::Var> inputs,
                const CellOptions& options) {
  return readout(params, unroll(kind, params, inputs, options));
}

double gradient_check(CellKind kind, const CellDims& dims, int steps, std::uint64_t seed,
                      const CellOptions& options) {
  if (steps < 1) throw ConfigError("gradient_check needs at least one step");
  constexpr std::size_t kBatch = 2;
  CellParams params = init_params(kind, dims, seed);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  std::vector<Tensor> tensors;
  for (Parameter& p : params.params()) {
    if (!p.trainable) continue;
    // Glorot weights stay; zero biases get random values so every path is exercised.
    if (p.value.rows() == 1 && std::all_of(p.value.values().begin(), p.value.values().end(),
                                           [](double v) { return v == 0.0; })) {
      for (double& v : p.value.values()) v = uni(rng);
    }
    tensors.push_back(p.value);
  }
  const std::size_t n_params = tensors.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < steps; ++t) {
    Tensor x(kBatch, static_cast<std::size_t>(dims.n_i));
    for (double& v : x.values()) v = normal(rng);
    tensors.push_back(std::move(x));
  }
  Tensor target(kBatch, static_cast<std::size_t>(dims.n_o));
  for (double& v : target.values()) v = normal(rng);

  const ad::TapeFunction f = [&](ad::Tape& tape, std::span<const ad::Var> leaves) {
    const BoundParams bound(tape, params, leaves.first(n_params));
    const ad::Var y = forward(kind, bound, leaves.subspan(n_params), options);
    return ad::mse_loss(y, tape.constant(target));
  };
  return ad::grad_check(f, tensors);
}

nlohmann::json cell_catalog() {
  nlohmann::json cells = nlohmann::json::array();
  const auto exp1 = experiment_roster(1);
  const auto exp2 = experiment_roster(2);
  for (CellKind k : kAllKinds) {
    const ComplexityFormula f = complexity_formula(k);
    nlohmann::json experiments = nlohmann::json::array();
    if (std::find(exp1.begin(), exp1.end(), k) != exp1.end()) experiments.push_back(1);
    if (std::find(exp2.begin(), exp2.end(), k) != exp2.end()) experiments.push_back(2);
    nlohmann::json symbols = nlohmann::json::array();
    nlohmann::json frozen = nlohmann::json::array();
    for (const ParamSpec& s : layout(k, CellDims{})) {
      if (CellParams::is_readout(s.name)) continue;
      symbols.push_back(s.name);
      if (!s.trainable) frozen.push_back(s.name);
    }
    cells.push_back({
        {"name", std::string(cell_name(k))},
        {"experiments", experiments},
        {"symbols", symbols},
        {"frozen", frozen},
        {"readout", k == CellKind::SCRN ? nlohmann::json{"W_hy", "W_sy", "b_y"}
                                        : nlohmann::json{"W_hy", "b_y"}},
        {"complexity",
         {{"formula", f.text()},
          {"terms",
           {{"n_I*n_H", f.in_h},
            {"n_H^2", f.h_h},
            {"n_H", f.h},
            {"n_O*n_H", f.o_h},
            {"n_I*n_S", f.in_s},
            {"n_S*n_H", f.s_h}}},
          {"weight_matrices", f.weight_matrices},
          {"bias_vectors", f.bias_vectors},
          {"at_n_I=1_n_H=10", f.evaluate(CellDims{1, 10, 0, 1})}}},
    });
  }
  return {{"cells", cells}};
}

}  // namespace rnnbench::cells
