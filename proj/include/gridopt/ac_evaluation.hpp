#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridopt/matrix.hpp"
#include "gridopt/network.hpp"
#include "gridopt/result.hpp"
#include "gridopt/system_matrices.hpp"

namespace gridopt {

/// Per-bus complex voltages, p.u., aligned with Network::buses.
struct VoltageProfile {
  std::vector<std::complex<double>> v;

  static VoltageProfile flat(std::size_t n) { return {{std::vector<std::complex<double>>(n, 1.0)}}; }

  static VoltageProfile from_angles(const std::vector<double>& theta) {
    VoltageProfile p;
    p.v.reserve(theta.size());
    for (double t : theta) p.v.push_back(std::polar(1.0, t));
    return p;
  }
};

struct Violation {
  std::size_t line = 0;
  std::string kind;     // "current" or "apparent"
  bool forward = true;
  double magnitude = 0.0;
  double limit = 0.0;
};

/// Exact AC evaluation of an operating point: S = diag(V) Y_bus* V*,
/// directed line currents/flows from the two line admittance matrices,
/// losses as S_fwd + S_rev.
struct AcEvaluation {
  std::vector<std::complex<double>> s_bus;
  std::vector<std::complex<double>> i_fwd, i_rev;
  std::vector<std::complex<double>> s_fwd, s_rev;
  std::vector<std::complex<double>> losses;
  std::vector<Violation> violations;
};

/// A per-unit apparent-power limit doubles as a per-unit current limit at
/// nominal voltage (|S| = |V||I| with V = 1).
inline double rating_to_current_limit(double rating_pu) {
  if (rating_pu <= 0.0) throw std::invalid_argument("rating must be positive");
  return rating_pu;
}

inline AcEvaluation evaluate_ac(const Network& net_in, const VoltageProfile& profile) {
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const std::size_t n = net.buses.size();
  const std::size_t nl = net.lines.size();
  if (profile.v.size() != n)
    throw std::invalid_argument("voltage profile must cover every bus");
  for (const std::complex<double>& v : profile.v)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) <= 0.0)
      throw std::invalid_argument("voltage profile entries must be finite and non-zero");

  const CMatrix y_bus = build_y_bus(net);
  const CMatrix y_fwd = build_y_line(net, LineDirection::forward);
  const CMatrix y_rev = build_y_line(net, LineDirection::reverse);

  AcEvaluation ev;
  ev.s_bus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::complex<double> current(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) current += y_bus(i, j) * profile.v[j];
    ev.s_bus[i] = profile.v[i] * std::conj(current);
  }

  ev.i_fwd.resize(nl);
  ev.i_rev.resize(nl);
  ev.s_fwd.resize(nl);
  ev.s_rev.resize(nl);
  ev.losses.resize(nl);
  for (std::size_t l = 0; l < nl; ++l) {
    std::complex<double> cf(0.0, 0.0), cr(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      cf += y_fwd(l, j) * profile.v[j];
      cr += y_rev(l, j) * profile.v[j];
    }
    ev.i_fwd[l] = cf;
    ev.i_rev[l] = cr;
    const std::size_t from = net.bus_pos(net.lines[l].from_bus);
    const std::size_t to = net.bus_pos(net.lines[l].to_bus);
    ev.s_fwd[l] = profile.v[from] * std::conj(cf);
    ev.s_rev[l] = profile.v[to] * std::conj(cr);
    ev.losses[l] = ev.s_fwd[l] + ev.s_rev[l];

    if (!net.lines[l].rating) continue;
    const double s_limit = *net.lines[l].rating;
    const double i_limit = rating_to_current_limit(s_limit);
    if (std::abs(ev.s_fwd[l]) > s_limit)
      ev.violations.push_back({l, "apparent", true, std::abs(ev.s_fwd[l]), s_limit});
    if (std::abs(ev.s_rev[l]) > s_limit)
      ev.violations.push_back({l, "apparent", false, std::abs(ev.s_rev[l]), s_limit});
    if (std::abs(ev.i_fwd[l]) > i_limit)
      ev.violations.push_back({l, "current", true, std::abs(ev.i_fwd[l]), i_limit});
    if (std::abs(ev.i_rev[l]) > i_limit)
      ev.violations.push_back({l, "current", false, std::abs(ev.i_rev[l]), i_limit});
  }
  return ev;
}

/// Exact-sine line flows at unit voltage magnitudes:
/// P_ij = sin(theta_i - theta_j) / x_ij.
inline std::vector<double> sine_flow(const Network& net, const std::vector<double>& theta) {
  if (theta.size() != net.buses.size())
    throw std::invalid_argument("theta must cover every bus");
  std::vector<double> flows(net.lines.size());
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    const Line& ln = net.lines[l];
    flows[l] = std::sin(theta[net.bus_pos(ln.from_bus)] - theta[net.bus_pos(ln.to_bus)]) / ln.x;
  }
  return flows;
}

/// One row of the small-angle accuracy table. rel_err is relative to delta
/// and NaN at delta = 0.
struct GapRow {
  double delta = 0.0;
  double sin_delta = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  bool beyond_pi6 = false;
};

inline std::vector<GapRow> linearization_gap(const std::vector<double>& theta_diffs) {
  std::vector<GapRow> rows;
  rows.reserve(theta_diffs.size());
  for (double d : theta_diffs) {
    GapRow r;
    r.delta = d;
    r.sin_delta = std::sin(d);
    r.abs_err = std::abs(r.sin_delta - d);
    r.rel_err = d == 0.0 ? std::numeric_limits<double>::quiet_NaN() : r.abs_err / std::abs(d);
    r.beyond_pi6 = std::abs(d) > M_PI / 6.0;
    rows.push_back(r);
  }
  return rows;
}

/// (delta, sin delta) samples over [-pi/2, pi/2] at 0.01-rad steps.
inline std::string sine_sweep_csv() {
  std::string out = "delta_rad,sin_delta\n";
  const int steps = static_cast<int>(std::floor(M_PI / 2.0 / 0.01));
  for (int k = -steps; k <= steps; ++k) {
    const double d = 0.01 * k;
    out += format_number(d) + "," + format_number(std::sin(d)) + "\n";
  }
  return out;
}

/// DC flow vs exact-sine flow at the dispatch angles, per line and in MW.
struct DcAcGap {
  std::vector<double> dc_flow_mw;
  std::vector<double> sine_flow_mw;
  std::vector<double> gap_mw;
  double max_gap_mw = 0.0;
  std::vector<std::size_t> sine_only_violations;  // rating exceeded only by the sine flow
};

inline DcAcGap dc_ac_gap(const Network& net_in, const DispatchResult& r) {
  if (r.theta_rad.empty())
    throw std::invalid_argument("dc_ac_gap needs an angle-formulation result (theta absent)");
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const std::vector<double> sine_pu = sine_flow(net, r.theta_rad);

  DcAcGap g;
  g.dc_flow_mw = r.flow_mw;
  g.sine_flow_mw.resize(net.lines.size());
  g.gap_mw.resize(net.lines.size());
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    g.sine_flow_mw[l] = sine_pu[l] * net.base_mva;
    g.gap_mw[l] = std::abs(g.sine_flow_mw[l] - g.dc_flow_mw[l]);
    g.max_gap_mw = std::max(g.max_gap_mw, g.gap_mw[l]);
    if (net.lines[l].rating) {
      const double cap_mw = *net.lines[l].rating * net.base_mva;
      if (std::abs(g.sine_flow_mw[l]) > cap_mw && std::abs(g.dc_flow_mw[l]) <= cap_mw)
        g.sine_only_violations.push_back(l);
    }
  }
  return g;
}

/// [[Re, -Im], [Im, Re]] real block form of a complex matrix.
inline Matrix complex_block(const CMatrix& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Matrix out(2 * r, 2 * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) = a(i, j).real();
      out(i, c + j) = -a(i, j).imag();
      out(r + i, j) = a(i, j).imag();
      out(r + i, c + j) = a(i, j).real();
    }
  return out;
}

/// Stacked [Re; Im] real form of a complex vector.
inline std::vector<double> complex_stack(const std::vector<std::complex<double>>& v) {
  std::vector<double> out(2 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i].real();
    out[v.size() + i] = v[i].imag();
  }
  return out;
}

/// Validation report for a dispatch checked against the exact AC quantities
/// at V = 1 /_ theta.
inline nlohmann::json validate_report(const Network& net_in, const DispatchResult& r) {
  const Network net = net_in.normalized ? net_in : to_per_unit(net_in);
  const DcAcGap gap = dc_ac_gap(net, r);
  const AcEvaluation ev = evaluate_ac(net, VoltageProfile::from_angles(r.theta_rad));
  const std::vector<std::string> keys = net.line_keys();

  nlohmann::json doc;
  doc["version"] = kVersion;
  doc["slack"] = r.slack_bus;
  doc["max_gap_mw"] = gap.max_gap_mw;
  doc["lines"] = nlohmann::json::array();
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    nlohmann::json jl{{"line", keys[l]},
                      {"dc_mw", gap.dc_flow_mw[l]},
                      {"sine_mw", gap.sine_flow_mw[l]},
                      {"gap_mw", gap.gap_mw[l]},
                      {"apparent_fwd_mva", std::abs(ev.s_fwd[l]) * net.base_mva},
                      {"apparent_rev_mva", std::abs(ev.s_rev[l]) * net.base_mva}};
    doc["lines"].push_back(jl);
  }
  doc["violations"] = nlohmann::json::array();
  for (const Violation& v : ev.violations)
    doc["violations"].push_back({{"line", keys[v.line]},
                                 {"kind", v.kind},
                                 {"direction", v.forward ? "forward" : "reverse"},
                                 {"magnitude_pu", v.magnitude},
                                 {"limit_pu", v.limit}});
  for (std::size_t l : gap.sine_only_violations)
    doc["violations"].push_back({{"line", keys[l]},
                                 {"kind", "sine_flow"},
                                 {"direction", "either"},
                                 {"magnitude_pu", std::abs(gap.sine_flow_mw[l]) / net.base_mva},
                                 {"limit_pu", *net.lines[l].rating}});
  return doc;
}

}  // namespace gridopt
