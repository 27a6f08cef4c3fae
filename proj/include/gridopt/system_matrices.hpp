#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridopt/matrix.hpp"
#include "gridopt/network.hpp"

namespace gridopt {

struct SlackChoice {
  int bus = 0;
};

namespace detail {

inline std::vector<std::string> bus_labels(const Network& net) {
  std::vector<std::string> labels;
  labels.reserve(net.buses.size());
  for (const Bus& b : net.buses) labels.push_back(std::to_string(b.id));
  return labels;
}

}  // namespace detail

/// Bus susceptance matrix: B_ii = sum of incident 1/x, B_ij = -1/x_ij.
/// Parallel lines add up. The DC matrices use b = 1/x, never Im(1/(r+jx)).
inline Matrix build_b_bus(const Network& net) {
  const std::size_t n = net.buses.size();
  Matrix b(n, n);
  for (const Line& l : net.lines) {
    const std::size_t i = net.bus_pos(l.from_bus);
    const std::size_t j = net.bus_pos(l.to_bus);
    const double s = 1.0 / l.x;
    b(i, i) += s;
    b(j, j) += s;
    b(i, j) -= s;
    b(j, i) -= s;
  }
  b.row_labels = detail::bus_labels(net);
  b.col_labels = b.row_labels;
  return b;
}

/// Line susceptance matrix (L x N): row for line (i,j) carries +1/x at i and
/// -1/x at j, so P_line = B_line * delta with flow positive from -> to.
inline Matrix build_b_line(const Network& net) {
  const std::size_t n = net.buses.size();
  Matrix b(net.lines.size(), n);
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const Line& l = net.lines[k];
    const double s = 1.0 / l.x;
    b(k, net.bus_pos(l.from_bus)) = s;
    b(k, net.bus_pos(l.to_bus)) = -s;
  }
  b.row_labels = net.line_keys();
  b.col_labels = detail::bus_labels(net);
  return b;
}

/// Bus reactance matrix: drop the slack row/column of B_bus, invert the
/// remainder, and pad zeros back in at the slack position.
inline Matrix build_x_bus(const Matrix& b_bus, const SlackChoice& slack) {
  if (!b_bus.square()) throw std::invalid_argument("B_bus must be square");
  const std::size_t n = b_bus.rows();
  std::size_t s = n;
  for (std::size_t i = 0; i < b_bus.col_labels.size(); ++i)
    if (b_bus.col_labels[i] == std::to_string(slack.bus)) s = i;
  if (s == n) throw std::invalid_argument("slack bus " + std::to_string(slack.bus) +
                                          " not among B_bus labels");

  Matrix reduced(n - 1, n - 1);
  for (std::size_t i = 0, ri = 0; i < n; ++i) {
    if (i == s) continue;
    for (std::size_t j = 0, rj = 0; j < n; ++j) {
      if (j == s) continue;
      reduced(ri, rj++) = b_bus(i, j);
    }
    ++ri;
  }
  Matrix inv;
  try {
    inv = invert(reduced);
  } catch (const NumericalError&) {
    throw NumericalError("reduced B_bus is singular; the network is disconnected");
  }
  Matrix x(n, n);
  for (std::size_t i = 0, ri = 0; i < n; ++i) {
    if (i == s) continue;
    for (std::size_t j = 0, rj = 0; j < n; ++j) {
      if (j == s) continue;
      x(i, j) = inv(ri, rj++);
    }
    ++ri;
  }
  x.row_labels = b_bus.row_labels;
  x.col_labels = b_bus.col_labels;
  return x;
}

/// PTDF matrix (L x N) for injections withdrawn at the slack bus.
struct PtdfMatrix {
  Matrix values;
  SlackChoice slack;

  std::size_t lines() const { return values.rows(); }
  std::size_t buses() const { return values.cols(); }
};

/// PTDF = B_line * X_bus, using the zero-padded X_bus so the slack column is
/// identically zero.
inline PtdfMatrix build_ptdf(const Network& net, const SlackChoice& slack) {
  net.bus_pos(slack.bus);  // throws if unknown
  const Matrix b_bus = build_b_bus(net);
  const Matrix x_bus = build_x_bus(b_bus, slack);
  PtdfMatrix p;
  p.values = build_b_line(net) * x_bus;
  p.slack = slack;
  return p;
}

/// Single PTDF element (X_im - X_jm - X_in + X_jn) / x_ij for injection at m,
/// withdrawal at n, on the line i-j.
struct LineEnds {
  int from = 0;
  int to = 0;
  double x = 0.0;
};

inline double ptdf_element(const Matrix& x_bus, const LineEnds& line, int m, int n) {
  auto pos = [&x_bus](int id) {
    for (std::size_t i = 0; i < x_bus.col_labels.size(); ++i)
      if (x_bus.col_labels[i] == std::to_string(id)) return i;
    throw std::invalid_argument("unknown bus id " + std::to_string(id));
  };
  const std::size_t i = pos(line.from);
  const std::size_t j = pos(line.to);
  const std::size_t mi = pos(m);
  const std::size_t ni = pos(n);
  if (line.x <= 0.0) throw std::invalid_argument("line reactance must be positive");
  return (x_bus(i, mi) - x_bus(j, mi) - x_bus(i, ni) + x_bus(j, ni)) / line.x;
}

/// PTDF for injection at m withdrawn at n: the column difference. Invariant
/// under the slack choice.
inline double ptdf_pair(const PtdfMatrix& p, std::size_t line_row, int m, int n) {
  if (line_row >= p.lines()) throw std::invalid_argument("line row out of range");
  auto pos = [&p](int id) {
    for (std::size_t i = 0; i < p.values.col_labels.size(); ++i)
      if (p.values.col_labels[i] == std::to_string(id)) return i;
    throw std::invalid_argument("unknown bus id " + std::to_string(id));
  };
  return p.values(line_row, pos(m)) - p.values(line_row, pos(n));
}

/// Line flows from a balanced injection vector (one entry per bus, p.u.).
inline std::vector<double> ptdf_flows(const PtdfMatrix& p, const std::vector<double>& injections) {
  if (injections.size() != p.buses())
    throw std::invalid_argument("injection vector length must match bus count");
  double sum = 0.0;
  for (double v : injections) sum += v;
  if (std::abs(sum) > 1e-9)
    throw std::invalid_argument("injections must balance to zero (got " + std::to_string(sum) + ")");
  return p.values * injections;
}

/// Bus admittance matrix: series admittances y = 1/(r+jx) plus the pi-model
/// half shunts j*b_sh/2 on the diagonal.
inline CMatrix build_y_bus(const Network& net) {
  using namespace std::complex_literals;
  const std::size_t n = net.buses.size();
  CMatrix y(n, n);
  for (const Line& l : net.lines) {
    const std::size_t i = net.bus_pos(l.from_bus);
    const std::size_t j = net.bus_pos(l.to_bus);
    const std::complex<double> series = 1.0 / std::complex<double>(l.r, l.x);
    const std::complex<double> shunt = 0.5i * l.b_sh;
    y(i, i) += series + shunt;
    y(j, j) += series + shunt;
    y(i, j) -= series;
    y(j, i) -= series;
  }
  y.row_labels = detail::bus_labels(net);
  y.col_labels = y.row_labels;
  return y;
}

enum class LineDirection { forward, reverse };

/// Directed line admittance matrix (L x N): I_line = Y_line * V. The forward
/// matrix measures currents entering at from_bus, the reverse one at to_bus.
inline CMatrix build_y_line(const Network& net, LineDirection direction) {
  using namespace std::complex_literals;
  const std::size_t n = net.buses.size();
  CMatrix y(net.lines.size(), n);
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const Line& l = net.lines[k];
    const std::size_t i = net.bus_pos(l.from_bus);
    const std::size_t j = net.bus_pos(l.to_bus);
    const std::complex<double> series = 1.0 / std::complex<double>(l.r, l.x);
    const std::complex<double> shunt = 0.5i * l.b_sh;
    if (direction == LineDirection::forward) {
      y(k, i) = shunt + series;
      y(k, j) = -series;
    } else {
      y(k, j) = shunt + series;
      y(k, i) = -series;
    }
  }
  y.row_labels = net.line_keys();
  y.col_labels = detail::bus_labels(net);
  return y;
}

}  // namespace gridopt
