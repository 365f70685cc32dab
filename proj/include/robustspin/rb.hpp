#pragma once

#include <cstdint>
#include <iosfwd>
#include <variant>
#include <vector>

#include "robustspin/family.hpp"
#include "robustspin/noise.hpp"
#include "robustspin/quantum.hpp"

namespace robustspin {

enum class RbAxis { I, X, Y, Z };

// Every gate is a rotation about sign * axis:
//   Pauli     e^{∓i σ π/2}, angle π (identity for I),
//   Clifford  e^{∓i σ π/4}, angle π/2, axis X or Y,
//   Recovery  angle π/2, axis X, Y or Z, chosen so the ideal final state
//             is an eigenstate of σ_z.
struct RbGate {
  enum class Kind { Pauli, Clifford, Recovery };
  Kind kind = Kind::Pauli;
  RbAxis axis = RbAxis::I;
  int sign = 1;

  // Ideal unitary up to global phase.
  Op2 unitary() const;
};

// P1 G1 P2 G2 ... Gl P(l+1) R P(l+2), in time order.
struct RbSequence {
  std::vector<RbGate> gates;
  int length = 0;          // number of Clifford gates
  int expected_final = 0;  // basis level the ideal sequence ends in
  int gate_set = 0;        // index of the random Clifford string it was cut from
};

struct RbSuiteOptions {
  std::vector<int> lengths{2, 4, 8, 16, 32, 64, 128};
  int n_gate_sets = 10;  // N_G
  int n_paulis = 4;      // N_P
  std::uint64_t seed = 1;
};

std::vector<RbSequence> generate_rb_suite(const RbSuiteOptions& opt);

// Applies the gates' ideal unitaries to |0>.
Op2 ideal_sequence_unitary(const RbSequence& seq);

struct RbSimOptions {
  // Identity Paulis idle for one π-pulse duration instead of taking no time.
  bool idle_identity = false;
  unsigned threads = 0;
};

// Physical pulse sequence; Z rotations are applied as frame shifts on the
// following pulses, so only X/Y rotations produce segments.
PulseSequence rb_pulse_sequence(const RbSequence& seq, const PulseFamily& family,
                                const RbSimOptions& opt = {});

struct RbCurve {
  std::vector<int> lengths;
  std::vector<double> mean_fidelities;
  std::vector<double> std_errors;
};

using RbError = std::variant<ErrorPoint, NoiseEnsemble>;

RbCurve simulate_rb(const std::vector<RbSequence>& suite, const PulseFamily& family,
                    const RbError& err, const RbSimOptions& opt = {});

struct RbFit {
  double fa = 0.0, fa_err = 0.0;
  double dif = 0.0, dif_err = 0.0;
  double rss = 0.0;
  bool identifiable = true;
};

// F(l) = 1/2 + 1/2 (1 - d_if) (2 F_a - 1)^l with F_a in [0.5, 1], d_if in [0, 1].
double rb_model(double fa, double dif, double l);
RbFit fit_rb(const std::vector<int>& lengths, const std::vector<double>& mean_fidelities);
RbFit fit_rb(const RbCurve& curve);

void write_rb_csv(std::ostream& os, const RbCurve& curve);
RbCurve read_rb_csv(std::istream& is);

}  // namespace robustspin
