// fuseplan — command-line front end: parse and validate programs, find
// optimal clusterings, export/import LP models, check clusterings, run
// programs, and compare against greedy baselines and the oracle.
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fuseplan/baselines.hpp"
#include "fuseplan/fusion.hpp"
#include "fuseplan/interp.hpp"
#include "fuseplan/parse.hpp"

namespace fp = fuseplan;

namespace {

// Failure whose message (if any) was already printed; carries the exit code.
struct CliError : std::runtime_error {
  int code;
  explicit CliError(int c, const std::string& msg = "")
      : std::runtime_error(msg), code(c) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

fp::Program load_program(const std::string& path) {
  fp::Program p;
  try {
    p = fp::parse_program(read_file(path));
  } catch (const fp::ParseError& e) {
    std::cerr << path << ":" << e.what() << "\n";
    throw CliError(1);
  }
  auto violations = fp::validate(p);
  if (!violations.empty()) {
    for (const auto& v : violations)
      std::cerr << path << ": " << fp::violation_name(v.kind) << ": "
                << v.message << "\n";
    throw CliError(1);
  }
  return p;
}

nlohmann::json parse_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

fp::SolveOptions solver_options(int64_t max_nodes, double max_seconds,
                                bool seconds_given) {
  fp::SolveOptions o;
  o.max_nodes = max_nodes;
  if (seconds_given) {
    o.max_seconds = max_seconds;
  } else if (const char* env = std::getenv("FUSEPLAN_SOLVER_BUDGET_SECONDS")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && *end == '\0' && v >= 0)
      o.max_seconds = v;
    else
      std::cerr << "warning: ignoring invalid FUSEPLAN_SOLVER_BUDGET_SECONDS='"
                << env << "'\n";
  }
  return o;
}

// DOT rendering of a clustering: clusters as boxes, manifest members double
// bordered, fused edges heavy, infusible edges dashed.
std::string clustering_dot(const fp::DepGraph& g, const fp::Clustering& c) {
  std::ostringstream os;
  os << "digraph fuseplan {\n";
  os << "  node [fontname=\"monospace\"];\n";
  for (const auto& nd : g.nodes)
    if (nd.is_param) os << "  " << nd.name << " [shape=box];\n";
  for (size_t ci = 0; ci < c.clusters.size(); ++ci) {
    os << "  subgraph cluster_" << ci << " {\n";
    os << "    label=\"cluster " << ci << "\";\n";
    for (const auto& name : c.clusters[ci].nodes) {
      os << "    " << name << " [label=\"" << name << "@" << c.order_of(name)
         << "\"";
      if (c.is_manifest(name)) os << ", peripheries=2";
      os << "];\n";
    }
    os << "  }\n";
  }
  for (const auto& e : g.edges) {
    const std::string& pn = g.nodes[e.producer].name;
    const std::string& cn = g.nodes[e.consumer].name;
    os << "  " << pn << " -> " << cn << " [label=\"p" << e.port << "\"";
    if (!e.fusible)
      os << ", style=dashed";
    else if (c.is_fused(pn, cn, e.port))
      os << ", penwidth=2";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string clustering_text(const fp::Clustering& c) {
  return fp::clustering_to_json(c).dump(2) + "\n";
}

int count_produced(const fp::DepGraph& g) {
  int k = 0;
  for (const auto& nd : g.nodes)
    if (!nd.is_param) ++k;
  return k;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-optimal loop fusion for combinator array programs"};
  app.require_subcommand(1);

  std::string prog_path, out_path, dot_path, sol_path, inputs_path;
  std::string schedule_path, clustering_path;
  std::string cost = "reads-writes";
  std::string solver = "internal";
  std::string direction;
  int64_t max_nodes = 0;
  double max_seconds = 0;
  int limit = 7;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose,
               "Print progress details on standard error");

  const std::vector<std::string> kinds = {"clusters", "fused-edges",
                                          "manifest", "reads", "reads-writes"};
  auto add_prog = [&](CLI::App* s) {
    s->add_option("program", prog_path, "Program file")
        ->required()
        ->check(CLI::ExistingFile);
  };
  auto add_cost = [&](CLI::App* s) {
    s->add_option("--cost", cost,
                  "Cost kind to optimize (default: reads-writes)")
        ->check(CLI::IsMember(kinds));
  };
  auto add_budget = [&](CLI::App* s) {
    s->add_option("--max-nodes", max_nodes,
                  "Abort the solver after this many search nodes (0 = "
                  "unlimited)");
    s->add_option("--max-seconds", max_seconds,
                  "Abort the solver after this wall-clock budget in seconds "
                  "(0 = unlimited; default from "
                  "FUSEPLAN_SOLVER_BUDGET_SECONDS)");
  };
  auto add_out = [&](CLI::App* s, const char* what) {
    s->add_option("-o,--output", out_path,
                  std::string("Write ") + what + " here (default: standard "
                  "output)");
  };

  CLI::App* cmd_fuse =
      app.add_subcommand("fuse", "Find a cost-optimal clustering");
  add_prog(cmd_fuse);
  add_cost(cmd_fuse);
  add_budget(cmd_fuse);
  cmd_fuse->add_option("--solver", solver, "Solver backend")
      ->check(CLI::IsMember({"internal"}));
  add_out(cmd_fuse, "clustering JSON");
  cmd_fuse->add_option("--dot", dot_path,
                       "Also write the clustered graph in DOT format");

  CLI::App* cmd_graph =
      app.add_subcommand("graph", "Print the dependence graph");
  add_prog(cmd_graph);
  cmd_graph->add_option("--dot", dot_path,
                        "Write DOT here (default: standard output)");

  CLI::App* cmd_export =
      app.add_subcommand("export-lp", "Write the fusion ILP in LP format");
  add_prog(cmd_export);
  add_cost(cmd_export);
  add_out(cmd_export, "the LP model");

  CLI::App* cmd_import = app.add_subcommand(
      "import-sol", "Turn an external solver solution into a clustering");
  add_prog(cmd_import);
  add_cost(cmd_import);
  cmd_import
      ->add_option("--sol", sol_path,
                   "Solution file: one '<variable> <value>' pair per line; "
                   "variables not listed default to 0")
      ->required()
      ->check(CLI::ExistingFile);
  add_out(cmd_import, "clustering JSON");

  CLI::App* cmd_check =
      app.add_subcommand("check", "Validate a clustering against a program");
  add_prog(cmd_check);
  cmd_check->add_option("clustering", clustering_path, "Clustering JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* cmd_run = app.add_subcommand("run", "Evaluate a program");
  add_prog(cmd_run);
  cmd_run->add_option("--inputs", inputs_path, "Input arrays JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_run->add_option("--schedule", schedule_path,
                      "Clustering JSON; run the scheduled executor instead "
                      "of the reference interpreter")
      ->check(CLI::ExistingFile);
  add_out(cmd_run, "the output arrays JSON");

  CLI::App* cmd_greedy =
      app.add_subcommand("greedy", "Fuse with the greedy baseline");
  add_prog(cmd_greedy);
  cmd_greedy
      ->add_option("--direction", direction, "Probe order over producers")
      ->required()
      ->check(CLI::IsMember({"top-down", "bottom-up"}));
  add_cost(cmd_greedy);
  add_budget(cmd_greedy);
  add_out(cmd_greedy, "clustering JSON");

  CLI::App* cmd_oracle = app.add_subcommand(
      "oracle", "Exhaustively find the cheapest clustering (small programs)");
  add_prog(cmd_oracle);
  add_cost(cmd_oracle);
  cmd_oracle->add_option(
      "--limit", limit,
      "Refuse programs producing more than this many arrays (default 7)");
  add_out(cmd_oracle, "clustering JSON");

  CLI::App* cmd_compare = app.add_subcommand(
      "compare", "Tabulate ILP, greedy, and oracle objective values");
  add_prog(cmd_compare);
  add_cost(cmd_compare);
  add_budget(cmd_compare);
  cmd_compare->add_option("--limit", limit,
                          "Skip the oracle above this many produced arrays");

  for (CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; }))
    s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    fp::CostKind kind = fp::cost_kind_from_string(cost);

    if (cmd_fuse->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::FuseResult r = fp::fuse(
          g, kind,
          solver_options(max_nodes, max_seconds,
                         cmd_fuse->count("--max-seconds") > 0));
      if (verbose)
        std::cerr << "status " << fp::solve_status_name(r.status)
                  << ", objective " << r.clustering.objective << ", "
                  << r.nodes_explored << " search nodes\n";
      write_output(out_path, clustering_text(r.clustering));
      if (!dot_path.empty())
        write_output(dot_path, clustering_dot(g, r.clustering));
    } else if (cmd_graph->parsed()) {
      fp::Program p = load_program(prog_path);
      write_output(dot_path, fp::to_dot(fp::build_graph(p)));
    } else if (cmd_export->parsed()) {
      fp::Program p = load_program(prog_path);
      write_output(out_path,
                   fp::build_fusion_ilp(fp::build_graph(p), kind).write_lp());
    } else if (cmd_import->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::IlpModel model = fp::build_fusion_ilp(g, kind);
      std::map<std::string, int64_t> sol;
      try {
        sol = fp::parse_solution(read_file(sol_path));
      } catch (const std::exception& e) {
        std::cerr << sol_path << ": " << e.what() << "\n";
        throw CliError(1);
      }
      for (const auto& v : model.vars())
        if (!sol.count(v.name)) sol[v.name] = 0;
      std::string why;
      if (!model.check_feasible(sol, &why)) {
        std::cerr << "solution is infeasible: " << why << "\n";
        throw CliError(1);
      }
      int64_t objective = model.objective_value(sol);
      fp::canonicalize_manifest(g, sol);
      fp::Clustering c = fp::extract_clustering(g, kind, sol);
      c.objective = objective;
      c = fp::split_clusters(g, c);
      auto violations = fp::check_clustering(g, c);
      if (!violations.empty()) {
        for (const auto& v : violations)
          std::cerr << "rule " << v.rule << ": " << v.message << "\n";
        throw CliError(1);
      }
      if (verbose) std::cerr << "objective " << objective << "\n";
      write_output(out_path, clustering_text(c));
    } else if (cmd_check->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::Clustering c = fp::clustering_from_json(parse_json(clustering_path));
      auto violations = fp::check_clustering(g, c);
      for (const auto& v : violations)
        std::cout << "rule " << v.rule << ": " << v.message << "\n";
      if (!violations.empty()) throw CliError(1);
      std::cerr << "ok\n";
    } else if (cmd_run->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::Env inputs = fp::load_inputs(parse_json(inputs_path), p);
      fp::Env env;
      if (schedule_path.empty()) {
        env = fp::eval_program(p, inputs);
      } else {
        fp::Clustering c =
            fp::clustering_from_json(parse_json(schedule_path));
        env = fp::eval_scheduled(p, inputs, c.schedule());
      }
      fp::Env outs;
      for (const auto& r : p.returns)
        if (env.count(r)) outs[r] = env.at(r);
      write_output(out_path, fp::env_to_json(outs).dump(2) + "\n");
    } else if (cmd_greedy->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::GreedyResult r = fp::greedy_fuse(
          g, fp::greedy_direction_from_string(direction), kind,
          solver_options(max_nodes, max_seconds,
                         cmd_greedy->count("--max-seconds") > 0));
      if (verbose)
        std::cerr << "accepted " << r.accepted << " of " << r.attempted
                  << " fusions, objective " << r.clustering.objective << "\n";
      write_output(out_path, clustering_text(r.clustering));
    } else if (cmd_oracle->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::OracleOptions oo;
      oo.max_produced = limit;
      fp::OracleResult r = fp::oracle(g, kind, oo);
      if (!r.found) {
        std::cerr << "no feasible clustering exists\n";
        throw CliError(1);
      }
      if (verbose)
        std::cerr << r.feasible_partitions << " of " << r.partitions_explored
                  << " partitions feasible, objective " << r.objective << "\n";
      write_output(out_path, clustering_text(r.clustering));
    } else if (cmd_compare->parsed()) {
      fp::Program p = load_program(prog_path);
      fp::DepGraph g = fp::build_graph(p);
      fp::SolveOptions so =
          solver_options(max_nodes, max_seconds,
                         cmd_compare->count("--max-seconds") > 0);
      std::ostringstream table;
      table << std::left << std::setw(18) << "method" << std::right
            << std::setw(10) << "objective" << std::setw(10) << "clusters"
            << std::setw(10) << "manifest" << "\n";
      auto row = [&](const std::string& name, const fp::Clustering& c) {
        table << std::left << std::setw(18) << name << std::right
              << std::setw(10) << fp::cost_of(g, c, kind) << std::setw(10)
              << c.clusters.size() << std::setw(10) << c.manifest.size()
              << "\n";
      };
      row("ilp", fp::fuse(g, kind, so).clustering);
      row("greedy-top-down",
          fp::greedy_fuse(g, fp::GreedyDirection::TopDown, kind, so)
              .clustering);
      row("greedy-bottom-up",
          fp::greedy_fuse(g, fp::GreedyDirection::BottomUp, kind, so)
              .clustering);
      if (count_produced(g) <= limit) {
        fp::OracleOptions oo;
        oo.max_produced = limit;
        fp::OracleResult r = fp::oracle(g, kind, oo);
        if (r.found) row("oracle", r.clustering);
      } else {
        table << std::left << std::setw(18) << "oracle"
              << "  (skipped: produces " << count_produced(g) << " > limit "
              << limit << ")\n";
      }
      std::cout << table.str();
    }
  } catch (const CliError& e) {
    if (e.what() && *e.what()) std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const fp::EvalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
