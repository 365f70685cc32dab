#pragma once

#include <iosfwd>
#include <vector>

namespace robustspin {

// Photon counts from one signal/reference readout pair, averaged over
// n_datasets repetitions.
struct ContrastRecord {
  double i_sig_mean = 0.0;
  double i_ref_mean = 0.0;
  double i_sig_std = 0.0;
  double i_ref_std = 0.0;
  int n_datasets = 1;

  void validate() const;
};

struct Contrast {
  double c = 0.0;
  double dc = 0.0;
};

// C = (I_sig - I_ref) / I_ref,
// dC = (dI_sig I_ref + dI_ref I_sig) / I_sig^2.
Contrast contrast(const ContrastRecord& rec);

struct NormalizedPopulation {
  double value = 0.0;
  bool out_of_range = false;  // value outside [0, 1]; returned unclipped
};

// P = (C - C_min) / (C_max - C_min).
NormalizedPopulation normalize_population(double c, double c_min, double c_max);

// CSV columns: i_sig_mean,i_ref_mean,i_sig_std,i_ref_std,n_datasets
std::vector<ContrastRecord> read_contrast_csv(std::istream& is);
void write_contrast_csv(std::ostream& os, const std::vector<ContrastRecord>& recs);

}  // namespace robustspin
