#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridopt/system_matrices.hpp"
#include "support.hpp"

using namespace gridopt;

namespace {

Network three_bus(double x12, double x13, double x23) {
  Network net;
  net.base_mva = 100.0;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}, {3, false}};
  net.lines = {{1, 2, 0.0, x12, 0.0, std::nullopt},
               {1, 3, 0.0, x13, 0.0, std::nullopt},
               {2, 3, 0.0, x23, 0.0, std::nullopt}};
  return net;
}

// Signed nodal divergence of one PTDF column: +1 at the injection bus,
// -1 at the slack, 0 elsewhere.
std::vector<double> column_divergence(const Network& net, const Matrix& ptdf, std::size_t m) {
  std::vector<double> div(net.buses.size(), 0.0);
  for (std::size_t l = 0; l < net.lines.size(); ++l) {
    div[net.bus_pos(net.lines[l].from_bus)] += ptdf(l, m);
    div[net.bus_pos(net.lines[l].to_bus)] -= ptdf(l, m);
  }
  return div;
}

}  // namespace

TEST_CASE("B_bus matches the 3-bus pattern with distinct susceptances") {
  // b12 = 2, b13 = 4, b23 = 5 through x = 1/b.
  const Network net = three_bus(0.5, 0.25, 0.2);
  const Matrix b = build_b_bus(net);
  CHECK(b(0, 0) == Catch::Approx(6.0));   // b12+b13
  CHECK(b(0, 1) == Catch::Approx(-2.0));  // -b12
  CHECK(b(0, 2) == Catch::Approx(-4.0));  // -b13
  CHECK(b(1, 1) == Catch::Approx(7.0));   // b12+b23
  CHECK(b(1, 2) == Catch::Approx(-5.0));  // -b23
  CHECK(b(2, 2) == Catch::Approx(9.0));   // b13+b23
}

TEST_CASE("B_bus for unit reactances") {
  const Matrix b = build_b_bus(three_bus(1.0, 1.0, 1.0));
  const Matrix expect(3, 3, {2, -1, -1, -1, 2, -1, -1, -1, 2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(b(i, j) == Catch::Approx(expect(i, j)));
}

TEST_CASE("B_bus uses 1/x, not the imaginary part of 1/(r+jx)") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}};
  net.lines = {{1, 2, 0.02, 0.4, 0.0, std::nullopt}};  // r deliberately non-zero
  const Matrix b = build_b_bus(net);
  CHECK(b(0, 0) == Catch::Approx(2.5));
  CHECK(b(0, 1) == Catch::Approx(-2.5));
  CHECK(b(1, 1) == Catch::Approx(2.5));
}

TEST_CASE("B_bus invariants on random networks") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = to_per_unit(testsupport::random_network(rng, false));
    const Matrix b = build_b_bus(net);
    const std::size_t n = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(b(i, i) > 0.0);
      double row_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row_sum += b(i, j);
        CHECK(b(i, j) == Catch::Approx(b(j, i)).margin(1e-15));
        if (i != j) CHECK(b(i, j) <= 0.0);
      }
      CHECK(std::abs(row_sum) < 1e-12 * std::max(1.0, b.max_abs()));
    }
    // Reconstruction from B_line rows: B_bus = sum_l b_l (e_i - e_j)(e_i - e_j)'.
    Matrix rebuilt(n, n);
    for (const Line& l : net.lines) {
      const std::size_t i = net.bus_pos(l.from_bus);
      const std::size_t j = net.bus_pos(l.to_bus);
      const double s = 1.0 / l.x;
      rebuilt(i, i) += s;
      rebuilt(j, j) += s;
      rebuilt(i, j) -= s;
      rebuilt(j, i) -= s;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(rebuilt(i, j) - b(i, j)) < 1e-12);
  }
}

TEST_CASE("B_line rows carry exactly the two endpoint entries") {
  const Matrix b = build_b_line(three_bus(1.0, 1.0, 1.0));
  REQUIRE(b.rows() == 3);
  REQUIRE(b.cols() == 3);
  const Matrix expect(3, 3, {1, -1, 0, 1, 0, -1, 0, 1, -1});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(b(i, j) == Catch::Approx(expect(i, j)));
}

TEST_CASE("B_line with distinct susceptances") {
  const Matrix b = build_b_line(three_bus(0.5, 0.25, 0.2));
  CHECK(b(0, 0) == Catch::Approx(2.0));
  CHECK(b(0, 1) == Catch::Approx(-2.0));
  CHECK(b(0, 2) == 0.0);
  CHECK(b(1, 0) == Catch::Approx(4.0));
  CHECK(b(1, 2) == Catch::Approx(-4.0));
  CHECK(b(2, 1) == Catch::Approx(5.0));
  CHECK(b(2, 2) == Catch::Approx(-5.0));
}

TEST_CASE("B_line is rectangular when lines outnumber buses") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}, {3, false}, {4, false}};
  net.lines = {{1, 2, 0, 0.2, 0, std::nullopt},
               {2, 3, 0, 0.2, 0, std::nullopt},
               {3, 4, 0, 0.2, 0, std::nullopt},
               {4, 1, 0, 0.2, 0, std::nullopt},
               {1, 3, 0, 0.2, 0, std::nullopt}};
  const Matrix b = build_b_line(net);
  CHECK(b.rows() == 5);
  CHECK(b.cols() == 4);
}

TEST_CASE("X_bus: slack row/column zero, reduced inverse elsewhere") {
  const Matrix b = build_b_bus(three_bus(1.0, 1.0, 1.0));
  const Matrix x = build_x_bus(b, SlackChoice{1});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(x(0, k) == 0.0);
    CHECK(x(k, 0) == 0.0);
  }
  CHECK(x(1, 1) == Catch::Approx(2.0 / 3.0));
  CHECK(x(1, 2) == Catch::Approx(1.0 / 3.0));
  CHECK(x(2, 1) == Catch::Approx(1.0 / 3.0));
  CHECK(x(2, 2) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("X_bus of a single line is the reactance itself") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}};
  net.lines = {{1, 2, 0.0, 0.5, 0.0, std::nullopt}};
  const Matrix x = build_x_bus(build_b_bus(net), SlackChoice{1});
  CHECK(x(0, 0) == 0.0);
  CHECK(x(0, 1) == 0.0);
  CHECK(x(1, 0) == 0.0);
  CHECK(x(1, 1) == Catch::Approx(0.5));
}

TEST_CASE("X_bus of a disconnected network fails") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}, {3, false}, {4, false}};
  net.lines = {{1, 2, 0, 0.5, 0, std::nullopt}, {3, 4, 0, 0.5, 0, std::nullopt}};
  CHECK_THROWS_AS(build_x_bus(build_b_bus(net), SlackChoice{1}), NumericalError);
}

TEST_CASE("PTDF of the 3-bus system, slack at bus 1") {
  const PtdfMatrix p = build_ptdf(three_bus(1.0, 1.0, 1.0), SlackChoice{1});
  const Matrix expect(3, 3,
                      {0, -2.0 / 3.0, -1.0 / 3.0,
                       0, -1.0 / 3.0, -2.0 / 3.0,
                       0, 1.0 / 3.0, -1.0 / 3.0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(p.values(i, j) == Catch::Approx(expect(i, j)).margin(1e-12));
}

TEST_CASE("PTDF slack column is identically zero") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = to_per_unit(testsupport::random_network(rng, false));
    const PtdfMatrix p = build_ptdf(net, SlackChoice{1});
    for (std::size_t l = 0; l < p.lines(); ++l) CHECK(p.values(l, 0) == 0.0);
  }
}

TEST_CASE("PTDF columns satisfy nodal KCL on random networks") {
  std::mt19937 rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    const Network net = to_per_unit(testsupport::random_network(rng, false));
    const PtdfMatrix p = build_ptdf(net, SlackChoice{1});
    for (std::size_t m = 1; m < net.buses.size(); ++m) {
      const std::vector<double> div = column_divergence(net, p.values, m);
      for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const double expect = i == m ? 1.0 : (i == 0 ? -1.0 : 0.0);
        CHECK(std::abs(div[i] - expect) < 1e-9);
      }
    }
  }
}

TEST_CASE("ptdf_element: same-bus query cancels") {
  const Network net = three_bus(1.0, 1.0, 1.0);
  const Matrix x = build_x_bus(build_b_bus(net), SlackChoice{1});
  CHECK(ptdf_element(x, {1, 3, 1.0}, 2, 2) == 0.0);
}

TEST_CASE("ptdf_element hand value and slack invariance") {
  const Network net = three_bus(1.0, 1.0, 1.0);
  const Matrix x1 = build_x_bus(build_b_bus(net), SlackChoice{1});
  CHECK(ptdf_element(x1, {1, 3, 1.0}, 2, 1) == Catch::Approx(-1.0 / 3.0).margin(1e-12));

  const Matrix x2 = build_x_bus(build_b_bus(net), SlackChoice{2});
  CHECK(ptdf_element(x2, {1, 3, 1.0}, 2, 1) ==
        Catch::Approx(ptdf_element(x1, {1, 3, 1.0}, 2, 1)).margin(1e-12));
}

TEST_CASE("ptdf_pair basics") {
  const PtdfMatrix p = build_ptdf(three_bus(1.0, 1.0, 1.0), SlackChoice{1});
  // n = slack reduces to the plain column entry.
  CHECK(ptdf_pair(p, 2, 2, 1) == Catch::Approx(p.values(2, 1)).margin(1e-15));
  CHECK(ptdf_pair(p, 2, 3, 3) == 0.0);
  CHECK(ptdf_pair(p, 2, 2, 3) == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK_THROWS_AS(ptdf_pair(p, 2, 2, 9), std::invalid_argument);
}

TEST_CASE("ptdf_pair is invariant under the slack choice") {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 15; ++trial) {
    const Network net = to_per_unit(testsupport::random_network(rng, false));
    const int n = static_cast<int>(net.buses.size());
    std::uniform_int_distribution<int> bus_pick(1, n);
    const int slack_a = bus_pick(rng);
    int slack_b = bus_pick(rng);
    if (slack_b == slack_a) slack_b = slack_a == n ? 1 : slack_a + 1;
    const PtdfMatrix pa = build_ptdf(net, SlackChoice{slack_a});
    const PtdfMatrix pb = build_ptdf(net, SlackChoice{slack_b});
    std::uniform_int_distribution<std::size_t> line_pick(0, net.lines.size() - 1);
    for (int q = 0; q < 8; ++q) {
      const std::size_t l = line_pick(rng);
      const int m = bus_pick(rng);
      const int nn = bus_pick(rng);
      CHECK(ptdf_pair(pa, l, m, nn) == Catch::Approx(ptdf_pair(pb, l, m, nn)).margin(1e-10));
    }
  }
}

TEST_CASE("build_ptdf agrees with ptdf_element entry by entry") {
  std::mt19937 rng(78);
  const Network net = to_per_unit(testsupport::random_network(rng, false));
  const PtdfMatrix p = build_ptdf(net, SlackChoice{1});
  const Matrix x = build_x_bus(build_b_bus(net), SlackChoice{1});
  for (std::size_t l = 0; l < net.lines.size(); ++l)
    for (std::size_t m = 0; m < net.buses.size(); ++m) {
      const LineEnds ends{net.lines[l].from_bus, net.lines[l].to_bus, net.lines[l].x};
      CHECK(p.values(l, m) ==
            Catch::Approx(ptdf_element(x, ends, net.buses[m].id, 1)).margin(1e-12));
    }
}

TEST_CASE("ptdf_flows matches hand values and the angle-solve oracle") {
  const Network net = three_bus(1.0, 1.0, 1.0);
  const PtdfMatrix p = build_ptdf(net, SlackChoice{1});

  CHECK(ptdf_flows(p, {0, 0, 0}) == std::vector<double>{0, 0, 0});

  const std::vector<double> flows = ptdf_flows(p, {1.0, 0.0, -1.0});
  CHECK(flows[0] == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(flows[1] == Catch::Approx(2.0 / 3.0).margin(1e-12));
  CHECK(flows[2] == Catch::Approx(1.0 / 3.0).margin(1e-12));

  // Oracle: delta from the reduced nodal system, flows = B_line * delta.
  const Matrix b_bus = build_b_bus(net);
  Matrix reduced(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) reduced(i, j) = b_bus(i + 1, j + 1);
  const std::vector<double> delta_red = lu_solve(lu_factor(reduced), {0.0, -1.0});
  const std::vector<double> delta{0.0, delta_red[0], delta_red[1]};
  const std::vector<double> oracle = build_b_line(net) * delta;
  for (std::size_t l = 0; l < 3; ++l) CHECK(flows[l] == Catch::Approx(oracle[l]).margin(1e-12));

  CHECK_THROWS_AS(ptdf_flows(p, {1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("Y_bus of a two-bus line with shunts") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}};
  net.lines = {{1, 2, 0.0, 0.1, 0.2, std::nullopt}};
  const CMatrix y = build_y_bus(net);
  CHECK(y(0, 0).real() == Catch::Approx(0.0).margin(1e-15));
  CHECK(y(0, 0).imag() == Catch::Approx(-9.9));
  CHECK(y(0, 1).imag() == Catch::Approx(10.0));
  CHECK(y(1, 0).imag() == Catch::Approx(10.0));
  CHECK(y(1, 1).imag() == Catch::Approx(-9.9));
}

TEST_CASE("with r = 0 and no shunts, Im(Y_bus) = -B_bus") {
  std::mt19937 rng(55);
  const Network net = to_per_unit(testsupport::random_network(rng, false));
  const CMatrix y = build_y_bus(net);
  const Matrix b = build_b_bus(net);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      CHECK(std::abs(y(i, j).imag() + b(i, j)) < 1e-12 * std::max(1.0, b.max_abs()));
      CHECK(y(i, j).real() == 0.0);
    }
}

TEST_CASE("Y_bus entry is zero between unconnected buses") {
  const CMatrix y = build_y_bus(three_bus(1.0, 1.0, 1.0));
  Network net = three_bus(1.0, 1.0, 1.0);
  net.lines.pop_back();  // drop 2-3
  const CMatrix y2 = build_y_bus(net);
  CHECK(y2(1, 2) == std::complex<double>(0.0, 0.0));
  CHECK(y(1, 2) != std::complex<double>(0.0, 0.0));
}

TEST_CASE("Y_line forward/reverse rows") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}};
  net.lines = {{1, 2, 0.0, 0.1, 0.2, std::nullopt}};
  const CMatrix fwd = build_y_line(net, LineDirection::forward);
  const CMatrix rev = build_y_line(net, LineDirection::reverse);
  CHECK(fwd(0, 0).imag() == Catch::Approx(-9.9));
  CHECK(fwd(0, 1).imag() == Catch::Approx(10.0));
  CHECK(rev(0, 0).imag() == Catch::Approx(10.0));
  CHECK(rev(0, 1).imag() == Catch::Approx(-9.9));
}

TEST_CASE("without shunts the forward row is the negated reverse row") {
  std::mt19937 rng(56);
  const Network net = to_per_unit(testsupport::random_network(rng, false));
  const CMatrix fwd = build_y_line(net, LineDirection::forward);
  const CMatrix rev = build_y_line(net, LineDirection::reverse);
  for (std::size_t l = 0; l < fwd.rows(); ++l)
    for (std::size_t j = 0; j < fwd.cols(); ++j)
      CHECK(std::abs(fwd(l, j) + rev(l, j)) < 1e-15 * std::max(1.0, fwd.max_abs()));
}

TEST_CASE("parallel lines aggregate in B_bus but keep separate B_line rows") {
  Network net;
  net.normalized = true;
  net.buses = {{1, true}, {2, false}};
  net.lines = {{1, 2, 0.0, 0.5, 0.0, std::nullopt}, {1, 2, 0.0, 0.25, 0.0, std::nullopt}};
  const Matrix b = build_b_bus(net);
  CHECK(b(0, 0) == Catch::Approx(6.0));  // 2 + 4
  const Matrix bl = build_b_line(net);
  REQUIRE(bl.rows() == 2);
  CHECK(bl(0, 0) == Catch::Approx(2.0));
  CHECK(bl(1, 0) == Catch::Approx(4.0));
  CHECK(bl.row_labels == std::vector<std::string>{"1-2#1", "1-2#2"});
}
