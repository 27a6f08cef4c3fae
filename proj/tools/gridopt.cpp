// gridopt: case-file front end for the dispatch/OPF library.
//
// Exit codes: 0 solved/ok, 1 infeasible or unbounded, 2 input error,
// 3 numerical error.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridopt/gridopt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotOptimal = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw gridopt::ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::optional<std::string>& out_path, const std::string& payload) {
  if (!out_path) {
    std::cout << payload;
    return;
  }
  std::ofstream out(*out_path, std::ios::binary);
  if (!out) throw gridopt::ParseError("cannot write " + *out_path);
  out << payload;
}

gridopt::Network load_network(const std::string& case_path, std::optional<int> slack) {
  gridopt::Network net = gridopt::parse_case(read_file(case_path));
  if (slack) net = gridopt::with_slack(net, *slack);
  return net;
}

int status_exit(gridopt::SolveStatus s) {
  return s == gridopt::SolveStatus::optimal ? kExitOk : kExitNotOptimal;
}

std::string dispatch_csv(const gridopt::DispatchResult& r, const gridopt::Network& net) {
  std::string out = "# dispatch\ngen,bus,p_mw\n";
  for (std::size_t g = 0; g < r.p_g_mw.size(); ++g)
    out += std::to_string(g + 1) + "," + std::to_string(net.generators[g].bus) + "," +
           gridopt::format_number(r.p_g_mw[g]) + "\n";
  if (!r.flow_mw.empty()) {
    out += "# flows\nline,p_mw,limit_mw,binding\n";
    const auto keys = net.line_keys();
    for (std::size_t l = 0; l < r.flow_mw.size(); ++l) {
      std::string limit;
      if (net.lines[l].rating)
        limit = gridopt::format_number(*net.lines[l].rating *
                                       (net.normalized ? net.base_mva : 1.0));
      bool binding = false;
      for (const auto& b : r.binding_lines) binding |= b.line == l;
      out += keys[l] + "," + gridopt::format_number(r.flow_mw[l]) + "," + limit + "," +
             (binding ? "1" : "0") + "\n";
    }
  }
  out += "# lmp\nbus,price\n";
  for (std::size_t i = 0; i < r.lmp.size(); ++i)
    out += std::to_string(net.buses[i].id) + "," + gridopt::format_number(r.lmp[i]) + "\n";
  return out;
}

struct DcopfArgs {
  std::vector<std::string> cases;
  std::optional<int> slack;
  std::string formulation = "angle";
  double obj_scale = 1.0;
  std::optional<double> fd_eps;
  std::optional<std::string> out;
  std::string format = "json";
  unsigned jobs = 1;
};

int run_dcopf_one(const DcopfArgs& args, const std::string& case_path,
                  const std::optional<std::string>& out_path, std::string& message) {
  const gridopt::Network net = load_network(case_path, args.slack);
  gridopt::DcopfOptions opt;
  opt.obj_scale = args.obj_scale;

  const gridopt::DispatchResult r = args.formulation == "ptdf"
                                        ? gridopt::solve_dcopf_ptdf(net, opt)
                                        : gridopt::solve_dcopf_angle(net, opt);

  if (args.format == "csv") {
    write_output(out_path, dispatch_csv(r, net));
  } else {
    json doc = gridopt::report_to_json(r, net);
    if (args.fd_eps && r.status == gridopt::SolveStatus::optimal) {
      doc["fd_check"] = json::array();
      for (const gridopt::FdBusReport& fb : gridopt::verify_lmp_fd(net, r, *args.fd_eps))
        doc["fd_check"].push_back({{"bus", fb.bus},
                                   {"fd_price", fb.fd_price},
                                   {"lmp", fb.lmp},
                                   {"rel_gap", fb.rel_gap},
                                   {"pass", fb.pass},
                                   {"active_set_changed", fb.active_set_changed},
                                   {"resolve_failed", fb.resolve_failed}});
    }
    write_output(out_path, doc.dump(2) + "\n");
  }
  if (r.status != gridopt::SolveStatus::optimal)
    message = case_path + ": " + gridopt::to_string(r.status);
  return status_exit(r.status);
}

int run_dcopf(const DcopfArgs& args) {
  if (args.cases.size() == 1) {
    std::string message;
    const int rc = run_dcopf_one(args, args.cases[0], args.out, message);
    if (!message.empty()) std::cerr << message << "\n";
    return rc;
  }

  // Several cases: --out names a directory, one report per case stem.
  if (!args.out) throw gridopt::ParseError("--out directory is required with multiple cases");
  fs::create_directories(*args.out);
  std::vector<int> codes(args.cases.size(), kExitOk);
  std::vector<std::string> messages(args.cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= args.cases.size()) return;
      const std::string stem = fs::path(args.cases[i]).stem().string();
      const std::string ext = args.format == "csv" ? ".csv" : ".json";
      try {
        codes[i] = run_dcopf_one(args, args.cases[i],
                                 (fs::path(*args.out) / (stem + ext)).string(), messages[i]);
      } catch (const gridopt::ParseError& e) {
        codes[i] = kExitInput;
        messages[i] = args.cases[i] + ": " + e.what();
      } catch (const gridopt::NumericalError& e) {
        codes[i] = kExitNumerical;
        messages[i] = args.cases[i] + ": " + e.what();
      } catch (const std::exception& e) {
        codes[i] = kExitInput;
        messages[i] = args.cases[i] + ": " + e.what();
      }
    }
  };
  const unsigned jobs = std::max(1u, args.jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t + 1 < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  int rc = kExitOk;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!messages[i].empty()) std::cerr << messages[i] << "\n";
    rc = std::max(rc, codes[i]);
  }
  return rc;
}

int run_ed(const std::string& case_path, const std::string& method, double obj_scale,
           std::optional<std::string> out, const std::string& format) {
  const gridopt::Network net = load_network(case_path, std::nullopt);
  if (method == "merit") {
    const gridopt::MeritOrderResult r = gridopt::merit_order(net);
    json doc;
    doc["version"] = gridopt::kVersion;
    doc["status"] = "optimal";
    doc["method"] = "merit";
    doc["smp"] = r.smp;
    doc["objective_per_h"] = r.total_cost_per_h;
    doc["marginal_gen"] = r.marginal_gen ? json(*r.marginal_gen + 1) : json(nullptr);
    doc["breakpoints_mw"] = r.breakpoints_mw;
    doc["dispatch"] = json::array();
    for (std::size_t g = 0; g < r.dispatch_mw.size(); ++g)
      doc["dispatch"].push_back(
          {{"gen", g + 1}, {"bus", net.generators[g].bus}, {"p_mw", r.dispatch_mw[g]}});
    doc["warnings"] = json::array();
    if (r.degenerate) doc["warnings"].push_back("degenerate: zero demand");
    if (r.breakpoint_degenerate) doc["warnings"].push_back("breakpoint_degenerate");
    if (format == "csv") {
      std::string csv = "# dispatch\ngen,bus,p_mw\n";
      for (std::size_t g = 0; g < r.dispatch_mw.size(); ++g)
        csv += std::to_string(g + 1) + "," + std::to_string(net.generators[g].bus) + "," +
               gridopt::format_number(r.dispatch_mw[g]) + "\n";
      csv += "# summary\nsmp,total_cost_per_h\n" + gridopt::format_number(r.smp) + "," +
             gridopt::format_number(r.total_cost_per_h) + "\n";
      write_output(out, csv);
    } else {
      write_output(out, doc.dump(2) + "\n");
    }
    return kExitOk;
  }

  const gridopt::DispatchResult r = gridopt::economic_dispatch_lp(net, obj_scale);
  if (format == "csv")
    write_output(out, dispatch_csv(r, net));
  else
    write_output(out, gridopt::report_to_json(r, net).dump(2) + "\n");
  if (r.status != gridopt::SolveStatus::optimal)
    std::cerr << case_path << ": " << gridopt::to_string(r.status) << "\n";
  return status_exit(r.status);
}

int run_matrices(const std::string& case_path, std::optional<int> slack,
                 std::optional<std::string> out) {
  gridopt::Network net = load_network(case_path, slack);
  if (!net.normalized) net = gridopt::to_per_unit(net);
  const auto s = net.slack_bus();
  if (!s) throw gridopt::ParseError("no slack bus designated (case file or --slack)");

  const gridopt::Matrix b_bus = gridopt::build_b_bus(net);
  std::vector<std::pair<std::string, std::string>> files{
      {"b_bus.csv", gridopt::to_csv(b_bus)},
      {"b_line.csv", gridopt::to_csv(gridopt::build_b_line(net))},
      {"x_bus.csv", gridopt::to_csv(gridopt::build_x_bus(b_bus, gridopt::SlackChoice{*s}))},
      {"y_bus.csv", gridopt::to_csv(gridopt::build_y_bus(net))}};

  if (!out) {
    for (const auto& [name, payload] : files) std::cout << "# " << name << "\n" << payload;
    return kExitOk;
  }
  fs::create_directories(*out);
  for (const auto& [name, payload] : files) {
    std::ofstream f(fs::path(*out) / name, std::ios::binary);
    if (!f) throw gridopt::ParseError("cannot write into " + *out);
    f << payload;
  }
  return kExitOk;
}

int run_ptdf(const std::string& case_path, std::optional<int> slack,
             std::optional<std::string> out) {
  gridopt::Network net = load_network(case_path, slack);
  if (!net.normalized) net = gridopt::to_per_unit(net);
  const auto s = net.slack_bus();
  if (!s) throw gridopt::ParseError("no slack bus designated (case file or --slack)");
  const gridopt::PtdfMatrix p = gridopt::build_ptdf(net, gridopt::SlackChoice{*s});
  write_output(out, gridopt::to_csv(p.values));
  return kExitOk;
}

int run_curve(const std::string& case_path, std::optional<double> demand,
              std::optional<std::string> out) {
  const gridopt::Network net = load_network(case_path, std::nullopt);
  write_output(out, gridopt::curve_csv(gridopt::merit_order(net, demand)));
  return kExitOk;
}

int run_validate(const std::string& case_path, const std::string& report_path,
                 std::optional<std::string> out, std::optional<std::string> sweep_path) {
  const gridopt::Network net = load_network(case_path, std::nullopt);
  json rep;
  try {
    rep = json::parse(read_file(report_path));
  } catch (const json::parse_error& e) {
    throw gridopt::ParseError("report parse error: " + std::string(e.what()));
  }
  if (!rep.contains("theta_rad"))
    throw gridopt::ParseError("report has no theta_rad; validate needs an angle-formulation run");

  gridopt::DispatchResult r;
  r.status = gridopt::SolveStatus::optimal;
  r.formulation = rep.value("formulation", "angle");
  r.slack_bus = rep.value("slack", -1);
  r.theta_rad = rep["theta_rad"].get<std::vector<double>>();
  if (r.theta_rad.size() != net.buses.size())
    throw gridopt::ParseError("report bus count does not match the case");
  const gridopt::Network pu = gridopt::to_per_unit(net);
  const std::vector<double> flow_pu = gridopt::build_b_line(pu) * r.theta_rad;
  r.flow_mw.resize(flow_pu.size());
  for (std::size_t l = 0; l < flow_pu.size(); ++l) r.flow_mw[l] = flow_pu[l] * pu.base_mva;

  write_output(out, gridopt::validate_report(pu, r).dump(2) + "\n");
  if (sweep_path) write_output(sweep_path, gridopt::sine_sweep_csv());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridopt: dispatch, DC-OPF, LMP and AC validation for case files"};
  app.require_subcommand(1);

  DcopfArgs dc;
  std::string case_path, report_path, ed_method = "lp", ed_format = "json";
  std::optional<int> slack;
  std::optional<double> curve_demand;
  std::optional<std::string> out, sweep;
  double ed_scale = 1.0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--case", case_path, "case file (JSON)")->required();
    cmd->add_option("--slack", slack, "override the slack bus id");
    cmd->add_option("--out", out, "output path (default stdout)");
  };

  CLI::App* matrices = app.add_subcommand("matrices", "emit B_bus, B_line, X_bus, Y_bus CSVs");
  add_common(matrices);

  CLI::App* ptdf = app.add_subcommand("ptdf", "emit the PTDF matrix CSV");
  add_common(ptdf);

  CLI::App* ed = app.add_subcommand("ed", "copperplate economic dispatch");
  ed->add_option("--case", case_path, "case file (JSON)")->required();
  ed->add_option("--method", ed_method, "merit|lp")->check(CLI::IsMember({"merit", "lp"}));
  ed->add_option("--obj-scale", ed_scale, "internal objective scale");
  ed->add_option("--out", out, "output path (default stdout)");
  ed->add_option("--format", ed_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

  CLI::App* dcopf = app.add_subcommand("dcopf", "DC optimal power flow with LMPs");
  dcopf->add_option("--case", dc.cases, "case file(s) (JSON)")->required();
  dcopf->add_option("--slack", dc.slack, "override the slack bus id");
  dcopf->add_option("--formulation", dc.formulation, "angle|ptdf")
      ->check(CLI::IsMember({"angle", "ptdf"}));
  dcopf->add_option("--obj-scale", dc.obj_scale, "internal objective scale");
  dcopf->add_option("--fd-check", dc.fd_eps, "finite-difference LMP check epsilon (p.u.)");
  dcopf->add_option("--out", dc.out, "output file (or directory with multiple cases)");
  dcopf->add_option("--format", dc.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  dcopf->add_option("--jobs", dc.jobs, "worker threads for multiple cases");

  CLI::App* validate = app.add_subcommand("validate", "AC evaluation of a dispatch report");
  validate->add_option("--case", case_path, "case file (JSON)")->required();
  validate->add_option("--report", report_path, "dcopf JSON report to validate")->required();
  validate->add_option("--out", out, "output path (default stdout)");
  validate->add_option("--sine-sweep", sweep, "also write a (delta, sin delta) sweep CSV here");

  CLI::App* curve = app.add_subcommand("curve", "merit-order polyline CSV");
  curve->add_option("--case", case_path, "case file (JSON)")->required();
  curve->add_option("--demand", curve_demand, "demand override, MW");
  curve->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }

  try {
    if (matrices->parsed()) return run_matrices(case_path, slack, out);
    if (ptdf->parsed()) return run_ptdf(case_path, slack, out);
    if (ed->parsed()) return run_ed(case_path, ed_method, ed_scale, out, ed_format);
    if (dcopf->parsed()) return run_dcopf(dc);
    if (validate->parsed()) return run_validate(case_path, report_path, out, sweep);
    if (curve->parsed()) return run_curve(case_path, curve_demand, out);
  } catch (const gridopt::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const gridopt::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}
