#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace gridopt {

/// Malformed case document: syntax error, missing field, broken invariant.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Bus {
  int id = 0;
  bool is_slack = false;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;     // series resistance, p.u.
  double x = 0.0;     // series reactance, p.u.
  double b_sh = 0.0;  // total shunt susceptance, p.u. (b_sh/2 per end)
  std::optional<double> rating;  // thermal limit; absent = unbounded
};

struct Generator {
  int bus = 0;
  double cost = 0.0;  // marginal cost, currency/MWh
  double p_min = 0.0;
  double p_max = 0.0;
};

struct Load {
  int bus = 0;
  double p = 0.0;
  double q = 0.0;
};

struct Network {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  bool normalized = false;

  std::size_t bus_pos(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return i;
    throw std::invalid_argument("unknown bus id " + std::to_string(id));
  }

  std::optional<int> slack_bus() const {
    for (const Bus& b : buses)
      if (b.is_slack) return b.id;
    return std::nullopt;
  }

  double total_load_p() const {
    double s = 0.0;
    for (const Load& l : loads) s += l.p;
    return s;
  }

  double total_gen_pmax() const {
    double s = 0.0;
    for (const Generator& g : generators) s += g.p_max;
    return s;
  }

  /// Line keys "from-to#k", k counting parallel lines over the same
  /// (from,to) pair in file order.
  std::vector<std::string> line_keys() const {
    std::map<std::pair<int, int>, int> count;
    std::vector<std::string> keys;
    keys.reserve(lines.size());
    for (const Line& l : lines) {
      const int k = ++count[{l.from_bus, l.to_bus}];
      keys.push_back(std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus) + "#" +
                     std::to_string(k));
    }
    return keys;
  }
};

/// Reassign the slack designation (CLI --slack override).
inline Network with_slack(Network net, int slack_id) {
  net.bus_pos(slack_id);  // throws if unknown
  for (Bus& b : net.buses) b.is_slack = (b.id == slack_id);
  return net;
}

namespace detail {

inline double finite_number(const nlohmann::json& j, const char* field) {
  if (!j.is_number()) throw ParseError(std::string("field '") + field + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string("field '") + field + "' is not finite");
  return v;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* field,
                                     const char* context) {
  auto it = obj.find(field);
  if (it == obj.end())
    throw ParseError(std::string("missing required field '") + field + "' in " + context);
  return *it;
}

}  // namespace detail

namespace detail {
Network parse_case_impl(const std::string& text);
}

/// Parse a UTF-8 case document. Physical units are preserved
/// (normalized = false); structural invariants are enforced here.
inline Network parse_case(const std::string& text) {
  try {
    return detail::parse_case_impl(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid case document: ") + e.what());
  }
}

inline Network detail::parse_case_impl(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  if (!doc.is_object()) throw ParseError("case document must be a JSON object");

  Network net;
  net.base_mva = detail::finite_number(detail::require(doc, "base_mva", "case"), "base_mva");
  if (net.base_mva <= 0.0) throw ParseError("base_mva must be positive");

  int slack_count = 0;
  for (const auto& jb : detail::require(doc, "buses", "case")) {
    Bus b;
    b.id = detail::require(jb, "id", "bus").get<int>();
    if (b.id <= 0) throw ParseError("bus id must be a positive integer");
    b.is_slack = jb.value("slack", false);
    for (const Bus& other : net.buses)
      if (other.id == b.id) throw ParseError("duplicate bus id " + std::to_string(b.id));
    if (b.is_slack && ++slack_count > 1) throw ParseError("multiple slack buses");
    net.buses.push_back(b);
  }
  if (net.buses.empty()) throw ParseError("case has no buses");

  auto check_bus_ref = [&net](int id, const char* context) {
    for (const Bus& b : net.buses)
      if (b.id == id) return;
    throw ParseError(std::string("unknown bus reference ") + std::to_string(id) + " in " + context);
  };

  if (doc.contains("lines")) {
    for (const auto& jl : doc["lines"]) {
      Line l;
      l.from_bus = detail::require(jl, "from", "line").get<int>();
      l.to_bus = detail::require(jl, "to", "line").get<int>();
      check_bus_ref(l.from_bus, "line");
      check_bus_ref(l.to_bus, "line");
      if (l.from_bus == l.to_bus)
        throw ParseError("line endpoints coincide (bus " + std::to_string(l.from_bus) + ")");
      l.x = detail::finite_number(detail::require(jl, "x", "line"), "x");
      if (l.x <= 0.0) throw ParseError("non-positive reactance on line " +
                                       std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus));
      if (jl.contains("r")) l.r = detail::finite_number(jl["r"], "r");
      if (l.r < 0.0) throw ParseError("negative resistance");
      if (jl.contains("b_sh")) l.b_sh = detail::finite_number(jl["b_sh"], "b_sh");
      if (l.b_sh < 0.0) throw ParseError("negative shunt susceptance");
      if (jl.contains("rating_mva")) {
        const double rating = detail::finite_number(jl["rating_mva"], "rating_mva");
        if (rating <= 0.0) throw ParseError("non-positive line rating");
        l.rating = rating;
      }
      net.lines.push_back(l);
    }
  }

  if (doc.contains("generators")) {
    for (const auto& jg : doc["generators"]) {
      Generator g;
      g.bus = detail::require(jg, "bus", "generator").get<int>();
      check_bus_ref(g.bus, "generator");
      g.cost = detail::finite_number(detail::require(jg, "cost", "generator"), "cost");
      g.p_max = detail::finite_number(detail::require(jg, "p_max", "generator"), "p_max");
      if (jg.contains("p_min")) g.p_min = detail::finite_number(jg["p_min"], "p_min");
      if (g.p_min < 0.0 || g.p_min > g.p_max)
        throw ParseError("generator bounds must satisfy 0 <= p_min <= p_max");
      net.generators.push_back(g);
    }
  }

  if (doc.contains("loads")) {
    for (const auto& jl : doc["loads"]) {
      Load l;
      l.bus = detail::require(jl, "bus", "load").get<int>();
      check_bus_ref(l.bus, "load");
      l.p = detail::finite_number(detail::require(jl, "p", "load"), "p");
      if (l.p < 0.0) throw ParseError("negative load");
      if (jl.contains("q")) l.q = detail::finite_number(jl["q"], "q");
      net.loads.push_back(l);
    }
  }

  return net;
}

/// Emit the case back out in the same schema (round-trip companion of
/// parse_case).
inline std::string serialize_case(const Network& net) {
  nlohmann::json doc;
  doc["base_mva"] = net.base_mva;
  doc["buses"] = nlohmann::json::array();
  for (const Bus& b : net.buses) {
    nlohmann::json jb{{"id", b.id}};
    if (b.is_slack) jb["slack"] = true;
    doc["buses"].push_back(jb);
  }
  doc["lines"] = nlohmann::json::array();
  for (const Line& l : net.lines) {
    nlohmann::json jl{{"from", l.from_bus}, {"to", l.to_bus}, {"x", l.x}};
    if (l.r != 0.0) jl["r"] = l.r;
    if (l.b_sh != 0.0) jl["b_sh"] = l.b_sh;
    if (l.rating) jl["rating_mva"] = *l.rating;
    doc["lines"].push_back(jl);
  }
  doc["generators"] = nlohmann::json::array();
  for (const Generator& g : net.generators) {
    nlohmann::json jg{{"bus", g.bus}, {"cost", g.cost}, {"p_max", g.p_max}};
    if (g.p_min != 0.0) jg["p_min"] = g.p_min;
    doc["generators"].push_back(jg);
  }
  doc["loads"] = nlohmann::json::array();
  for (const Load& l : net.loads) {
    nlohmann::json jl{{"bus", l.bus}, {"p", l.p}};
    if (l.q != 0.0) jl["q"] = l.q;
    doc["loads"].push_back(jl);
  }
  return doc.dump(2) + "\n";
}

/// Divide every MW/MVA/MVAr quantity by base_mva. Impedances stay put (they
/// are already p.u.); costs stay in currency/MWh.
inline Network to_per_unit(Network net) {
  if (net.normalized) throw std::logic_error("network already normalized");
  const double base = net.base_mva;
  for (Line& l : net.lines)
    if (l.rating) l.rating = *l.rating / base;
  for (Generator& g : net.generators) {
    g.p_min /= base;
    g.p_max /= base;
  }
  for (Load& l : net.loads) {
    l.p /= base;
    l.q /= base;
  }
  net.normalized = true;
  return net;
}

struct Diagnostic {
  std::string code;
  std::string message;
  int bus = -1;
};

/// Non-throwing structural checks: connectivity, slack presence, capacity.
/// An empty list means the network is ready to solve.
inline std::vector<Diagnostic> validate_network(const Network& net) {
  std::vector<Diagnostic> out;

  if (!net.slack_bus())
    out.push_back({"no_slack", "no bus is marked as slack (set one in the case or via --slack)", -1});

  // Reachability from the slack bus (or the first bus) over the line graph.
  if (!net.buses.empty()) {
    std::vector<char> seen(net.buses.size(), 0);
    std::vector<std::size_t> stack;
    std::size_t start = 0;
    if (auto s = net.slack_bus()) start = net.bus_pos(*s);
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const Line& l : net.lines) {
        const std::size_t a = net.bus_pos(l.from_bus);
        const std::size_t b = net.bus_pos(l.to_bus);
        if (a == u && !seen[b]) { seen[b] = 1; stack.push_back(b); }
        if (b == u && !seen[a]) { seen[a] = 1; stack.push_back(a); }
      }
    }
    for (std::size_t i = 0; i < net.buses.size(); ++i)
      if (!seen[i])
        out.push_back({"disconnected",
                       "bus " + std::to_string(net.buses[i].id) + " is not connected to the slack",
                       net.buses[i].id});
  }

  if (net.total_gen_pmax() < net.total_load_p())
    out.push_back({"insufficient_capacity",
                   "total generation capacity is below total load; dispatch will be infeasible",
                   -1});

  return out;
}

}  // namespace gridopt
