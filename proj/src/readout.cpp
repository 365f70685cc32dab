#include "robustspin/readout.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "robustspin/errors.hpp"

namespace robustspin {

namespace {
constexpr const char* kHeader = "i_sig_mean,i_ref_mean,i_sig_std,i_ref_std,n_datasets";
}

void ContrastRecord::validate() const {
  require(std::isfinite(i_sig_mean) && std::isfinite(i_ref_mean), "contrast: means must be finite");
  require(i_ref_mean != 0.0, "contrast: reference mean is zero");
  require(i_sig_mean > 0.0 && i_ref_mean > 0.0, "contrast: count means must be positive");
  require(i_sig_std >= 0.0 && i_ref_std >= 0.0, "contrast: standard deviations must be >= 0");
  require(n_datasets >= 1, "contrast: n_datasets must be >= 1");
}

Contrast contrast(const ContrastRecord& rec) {
  rec.validate();
  Contrast out;
  out.c = (rec.i_sig_mean - rec.i_ref_mean) / rec.i_ref_mean;
  out.dc = (rec.i_sig_std * rec.i_ref_mean + rec.i_ref_std * rec.i_sig_mean) / (rec.i_sig_mean * rec.i_sig_mean);
  return out;
}

NormalizedPopulation normalize_population(double c, double c_min, double c_max) {
  require(std::isfinite(c) && std::isfinite(c_min) && std::isfinite(c_max), "normalize: inputs must be finite");
  require(c_max > c_min, "normalize: degenerate calibration, need C_max > C_min");
  NormalizedPopulation out;
  out.value = (c - c_min) / (c_max - c_min);
  out.out_of_range = out.value < 0.0 || out.value > 1.0;
  return out;
}

std::vector<ContrastRecord> read_contrast_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kHeader)
    throw IoError(std::string("contrast csv: expected header '") + kHeader + "'");
  std::vector<ContrastRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell[5];
    for (int k = 0; k < 5; ++k)
      if (!std::getline(ss, cell[k], ','))
        throw IoError("contrast csv: line " + std::to_string(lineno) + " needs 5 columns");
    ContrastRecord r;
    try {
      r.i_sig_mean = std::stod(cell[0]);
      r.i_ref_mean = std::stod(cell[1]);
      r.i_sig_std = std::stod(cell[2]);
      r.i_ref_std = std::stod(cell[3]);
      r.n_datasets = std::stoi(cell[4]);
    } catch (const std::exception&) {
      throw IoError("contrast csv: bad number on line " + std::to_string(lineno));
    }
    out.push_back(r);
  }
  return out;
}

void write_contrast_csv(std::ostream& os, const std::vector<ContrastRecord>& recs) {
  const auto old = os.precision(12);
  os << kHeader << '\n';
  for (const auto& r : recs)
    os << r.i_sig_mean << ',' << r.i_ref_mean << ',' << r.i_sig_std << ',' << r.i_ref_std << ',' << r.n_datasets
       << '\n';
  os.precision(old);
}

}  // namespace robustspin
