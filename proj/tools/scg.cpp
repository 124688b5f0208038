#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "scg/acceptance.hpp"
#include "scg/error.hpp"
#include "scg/experiment.hpp"
#include "scg/fixtures.hpp"
#include "scg/graph_io.hpp"
#include "scg/oracle.hpp"

namespace {

scg::NodeSet parse_set(const scg::Graph& g, const std::string& csv) {
  scg::NodeSet s;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) s.insert(g.id(item));
  return s;
}

std::vector<scg::NodeId> parse_list(const scg::Graph& g, const std::string& csv) {
  std::vector<scg::NodeId> out;
  std::stringstream ss(csv);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(g.id(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scg: stochastic computation graph analysis and gradient estimation"};
  app.require_subcommand(1);

  auto* analyze = app.add_subcommand("analyze", "set-validity report for nodes of a graph file");
  std::string graph_path;
  std::vector<std::string> nodes;
  std::string q_critic, q_baseline, q_markov, q_sep;
  analyze->add_option("graph", graph_path, "graph JSON")->required();
  analyze->add_option("--node", nodes, "node to report on (repeatable; default all)");
  analyze->add_option("--critic", q_critic, "comma-separated critic set to check");
  analyze->add_option("--baseline", q_baseline, "comma-separated baseline set to check");
  analyze->add_option("--markov", q_markov, "comma-separated set to check for the Markov property");
  analyze->add_option("--separator", q_sep, "comma-separated separator S for u = node");

  auto* estimate = app.add_subcommand("estimate", "run an estimator menu and write result rows");
  std::string config_path, out_path;
  estimate->add_option("config", config_path, "experiment config JSON")->required();
  estimate->add_option("-o,--output", out_path, "CSV output (default: config's output, else stdout)");

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  bool list = false;
  std::vector<std::string> only;
  double tamper = 0.0;
  verify->add_flag("--list", list, "print criterion ids without running");
  verify->add_option("--only", only, "criterion ids to run");
  verify->add_option("--tamper", tamper, "")->group("");  // self-test hook

  auto* fix = app.add_subcommand("fixtures", "list, dump or report built-in fixtures");
  std::string dump, report, menu;
  fix->add_option("--dump", dump, "print a fixture's graph JSON");
  fix->add_option("--report", report, "print a fixture's analysis report");
  fix->add_option("--menu", menu, "print a built-in experiment menu");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      const scg::Graph g = scg::load_graph(graph_path);
      std::vector<scg::NodeId> ids;
      if (nodes.empty()) {
        ids = g.order();
      } else {
        for (const auto& n : nodes) ids.push_back(g.id(n));
      }
      scg::NodeQuery q;
      if (!q_critic.empty()) q.critic = parse_set(g, q_critic);
      if (!q_baseline.empty()) q.baseline = parse_set(g, q_baseline);
      if (!q_markov.empty()) q.markov = parse_set(g, q_markov);
      if (!q_sep.empty()) q.separator = parse_list(g, q_sep);
      nlohmann::json out = nlohmann::json::array();
      for (scg::NodeId v : ids) out.push_back(scg::analyze_node(g, v, q));
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (*estimate) {
      const scg::ExperimentConfig cfg = scg::load_config(config_path);
      const auto rows = scg::run_experiment(cfg);
      const std::string csv = scg::results_csv(rows);
      const std::string path = out_path.empty() ? cfg.output : out_path;
      if (path.empty() || path == "-") {
        std::cout << csv;
      } else {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw scg::Error(scg::Errc::ConfigError, "cannot write " + path);
        f << csv;
      }
      size_t failed = 0;
      for (const auto& r : rows) failed += r.pass ? 0 : 1;
      std::cerr << rows.size() << " rows, " << failed << " failed gates\n";
      return failed == 0 ? 0 : 1;
    }
    if (*verify) {
      if (list) {
        for (const auto& c : scg::criteria()) std::cout << c.id << " " << c.title << "\n";
        return 0;
      }
      scg::set_value_tamper(tamper);
      return scg::run_acceptance(std::cout, only) == 0 ? 0 : 1;
    }
    if (*fix) {
      if (!dump.empty()) {
        std::cout << scg::graph_to_json(scg::fixture(dump).graph).dump(2) << "\n";
      } else if (!report.empty()) {
        std::cout << scg::analysis_report(scg::fixture(report)).dump(2) << "\n";
      } else if (!menu.empty()) {
        scg::builtin_menu(menu);  // throws ConfigError for unknown names
        std::cout << nlohmann::json::parse(scg::builtin_menus().at(menu)).dump(2) << "\n";
      } else {
        for (const auto& f : scg::fixtures()) std::cout << f.name << "  " << f.summary << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "scg: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
