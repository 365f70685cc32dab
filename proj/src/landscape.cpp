#include "robustspin/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "robustspin/errors.hpp"
#include "robustspin/parallel.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::size_t closest_to_zero(const std::vector<double>& axis) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i)
    if (std::abs(axis[i]) < std::abs(axis[best])) best = i;
  return best;
}

std::vector<double> split_csv(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw IoError("landscape csv: bad number '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

void FidelityLandscape::validate() const {
  require(values.size() == detuning_axis.size(), "landscape: row count must match detuning axis");
  for (const auto& row : values) {
    require(row.size() == rabi_axis.size(), "landscape: column count must match Rabi axis");
    for (double v : row) require(v >= 0.0 && v <= 1.0, "landscape: values must lie in [0, 1]");
  }
}

double transfer_fidelity(const Waveform& w, const ErrorPoint& err) {
  const Op2 u = waveform_propagator(w, err);
  // |<1|U|0>|^2 is the Uhlmann fidelity for pure states
  return std::clamp(std::norm(u(1, 0)), 0.0, 1.0);
}

FidelityLandscape scan(const Waveform& w, const ScanOptions& opt, std::string label) {
  w.validate();
  require(opt.n >= 2, "scan: need at least 2 points per axis");
  require(opt.detuning_range >= 0.0 && opt.rabi_range >= 0.0, "scan: ranges must be >= 0");
  require(opt.rabi_range < 1.0, "scan: Rabi range must stay below 100%");

  FidelityLandscape map;
  map.pulse_label = std::move(label);
  const double span = opt.detuning_range * w.omega_max;
  map.detuning_axis = linspace(-span, span, opt.n);
  map.rabi_axis = linspace(-opt.rabi_range, opt.rabi_range, opt.n);
  map.values.assign(opt.n, std::vector<double>(opt.n, 0.0));
  parallel_for(opt.n, opt.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < opt.n; ++j)
      map.values[i][j] = transfer_fidelity(w, ErrorPoint{map.detuning_axis[i], map.rabi_axis[j], 0.0});
  });
  return map;
}

std::vector<std::pair<double, double>> detuning_cut(const Waveform& w, double range, std::size_t n) {
  w.validate();
  require(n >= 2, "detuning_cut: need at least 2 points");
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (double d : linspace(-range * w.omega_max, range * w.omega_max, n))
    out.emplace_back(d, transfer_fidelity(w, ErrorPoint{d, 0.0, 0.0}));
  return out;
}

double contour_area(const FidelityLandscape& map, double level) {
  require(level > 0.0 && level < 1.0, "contour_area: level must lie in (0, 1)");
  std::size_t hits = 0, total = 0;
  for (const auto& row : map.values)
    for (double v : row) {
      ++total;
      if (v >= level) ++hits;
    }
  require(total > 0, "contour_area: empty landscape");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double contour_extent(const FidelityLandscape& map, double level, Axis axis) {
  require(level > 0.0 && level < 1.0, "contour_extent: level must lie in (0, 1)");
  map.validate();
  require(!map.values.empty() && !map.rabi_axis.empty(), "contour_extent: empty landscape");
  std::size_t hits = 0, total = 0;
  if (axis == Axis::Detuning) {
    const std::size_t j = closest_to_zero(map.rabi_axis);
    for (const auto& row : map.values) {
      ++total;
      if (row[j] >= level) ++hits;
    }
  } else {
    for (double v : map.values[closest_to_zero(map.detuning_axis)]) {
      ++total;
      if (v >= level) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> contour_chords(const FidelityLandscape& map, double level, Axis axis) {
  require(level > 0.0 && level < 1.0, "contour_chords: level must lie in (0, 1)");
  map.validate();
  require(!map.values.empty() && !map.rabi_axis.empty(), "contour_chords: empty landscape");
  const std::size_t rows = map.values.size(), cols = map.rabi_axis.size();
  std::vector<double> out(axis == Axis::Detuning ? cols : rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (map.values[i][j] >= level) out[axis == Axis::Detuning ? j : i] += 1.0;
  for (double& c : out) c /= static_cast<double>(axis == Axis::Detuning ? rows : cols);
  return out;
}

void write_landscape_csv(std::ostream& os, const FidelityLandscape& map) {
  map.validate();
  const auto old_precision = os.precision(9);
  os << "# pulse=" << map.pulse_label << " rows=detuning cols=rabi\n";
  os << map.rabi_axis.size();
  for (double r : map.rabi_axis) os << ',' << r;
  os << '\n';
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    os << map.detuning_axis[i] / units::kTwoPi;
    for (double v : map.values[i]) os << ',' << v;
    os << '\n';
  }
  os.precision(old_precision);
}

FidelityLandscape read_landscape_csv(std::istream& is) {
  FidelityLandscape map;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# pulse=", 0) != 0)
    throw IoError("landscape csv: missing '# pulse=' header");
  const auto label_end = line.find(" rows=");
  map.pulse_label = line.substr(8, label_end == std::string::npos ? std::string::npos : label_end - 8);
  if (!std::getline(is, line)) throw IoError("landscape csv: missing axis row");
  auto head = split_csv(line);
  if (head.size() < 2) throw IoError("landscape csv: axis row too short");
  if (head[0] != static_cast<double>(head.size() - 1)) throw IoError("landscape csv: column count mismatch");
  map.rabi_axis.assign(head.begin() + 1, head.end());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split_csv(line);
    if (row.size() != map.rabi_axis.size() + 1) throw IoError("landscape csv: ragged row");
    map.detuning_axis.push_back(row[0] * units::kTwoPi);
    map.values.emplace_back(row.begin() + 1, row.end());
  }
  if (map.values.empty()) throw IoError("landscape csv: no data rows");
  try {
    map.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("landscape csv: ") + e.what());
  }
  return map;
}

}  // namespace robustspin
