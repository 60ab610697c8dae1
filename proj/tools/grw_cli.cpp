// Command-line front end: grw verify|solve|check <scenario>, grw report <dir>.
//
// Exit status: 0 when every requested assertion passed, 2 when an assertion
// failed, 1 on input errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "grw/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitAssertion = 2;

std::vector<int> parse_grids(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 16)
      throw grw::Error(grw::ErrorKind::BadParams, "--grids expects comma-separated sizes >= 16, got '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw grw::Error(grw::ErrorKind::BadParams, "--grids is empty");
  return out;
}

void print_summary(const grw::ScenarioResult& r, std::ostream& os) {
  for (const auto& op : r.operations) {
    os << (op.pass ? "PASS " : "FAIL ") << op.op;
    if (!op.error.empty()) os << "  [" << op.error << "]";
    os << "\n";
    for (const auto& id : op.identities) {
      os << "  " << (id.pass ? "pass " : "FAIL ") << id.name;
      if (id.kind == grw::CheckKind::Discretization && id.grids.size() >= 2 && std::isfinite(id.fitted_order))
        os << "  order " << id.fitted_order;
      if (!id.grids.empty()) {
        const auto& g = id.grids.back();
        os << "  " << (id.kind == grw::CheckKind::Inequality ? "min " : "max ")
           << (id.kind == grw::CheckKind::Inequality ? g.min_value : g.max_abs);
      }
      os << "\n";
    }
    for (const auto& w : op.warnings) os << "  warning: " << w << "\n";
  }
  os << (r.pass() ? "scenario " + r.name + ": PASS" : "scenario " + r.name + ": FAIL") << "\n";
}

int run_scenario_command(const std::string& path, grw::RunFlags flags, const std::string& out_flag) {
  const auto sc = grw::load_scenario(path);
  const auto result = grw::run_scenario(sc, flags);
  const std::string out = out_flag.empty() ? sc.out_dir : out_flag;
  grw::emit_outputs(result, out);
  print_summary(result, std::cout);
  return result.pass() ? kExitOk : kExitAssertion;
}

int report_command(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw grw::Error(grw::ErrorKind::IoError, "no manifest in '" + dir + "'");
  grw::Json manifest;
  try {
    manifest = grw::Json::parse(in);
  } catch (const std::exception& e) {
    throw grw::Error(grw::ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
  }
  std::cout << "scenario " << manifest.value("scenario", std::string("?")) << "\n";
  for (const auto& f : manifest.at("files")) {
    const std::string name = f.at("file");
    const fs::path p = fs::path(dir) / name;
    std::ifstream fin(p, std::ios::binary);
    if (!fin) throw grw::Error(grw::ErrorKind::IoError, "missing file '" + p.string() + "'");
    std::ostringstream ss;
    ss << fin.rdbuf();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(grw::fnv1a64(ss.str())));
    const bool intact = f.at("fnv1a64").get<std::string>() == hash;
    std::cout << "  " << name << (intact ? "" : "  (modified since written)") << "\n";
    if (name.size() > 12 && name.substr(name.size() - 12) == ".report.json") {
      const auto rep = grw::Json::parse(ss.str());
      for (const auto& op : rep.at("operations"))
        std::cout << "    " << (op.at("pass").get<bool>() ? "PASS " : "FAIL ") << op.at("operation").get<std::string>()
                  << "\n";
    }
  }
  const bool pass = manifest.value("pass", false);
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spacelike hypersurfaces in generalized Robertson-Walker spacetimes: identity checks and solvers"};
  app.require_subcommand(1);

  std::string scenario, out, grids, dir;
  std::uint64_t seed = 0;
  bool strict = false;

  auto add_scenario_options = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario, "Scenario file")->required();
    sub->add_option("--out", out, "Output directory (overrides the scenario's 'out')");
    sub->add_flag("--strict", strict, "Treat warnings as failures");
  };
  auto* verify = app.add_subcommand("verify", "Run every operation listed in the scenario");
  add_scenario_options(verify);
  verify->add_option("--grids", grids, "Refinement sizes, e.g. 32,64,128");
  verify->add_option("--seed", seed, "First perturbation seed (replaces the configured list)");
  auto* solve = app.add_subcommand("solve", "Run the scenario's solve and uniqueness operations");
  add_scenario_options(solve);
  solve->add_option("--seed", seed, "First perturbation seed (replaces the configured list)");
  auto* check = app.add_subcommand("check", "Evaluate the hypothesis conditions only");
  add_scenario_options(check);
  auto* report = app.add_subcommand("report", "Summarize an output directory");
  report->add_option("dir", dir, "Directory written by verify/solve/check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (report->parsed()) return report_command(dir);
    grw::RunFlags flags;
    flags.strict = strict;
    if (!grids.empty()) flags.grids = parse_grids(grids);
    if ((verify->parsed() && verify->count("--seed")) || (solve->parsed() && solve->count("--seed"))) flags.seed = seed;
    flags.mode = check->parsed() ? grw::RunMode::CheckOnly : solve->parsed() ? grw::RunMode::SolveOnly : grw::RunMode::All;
    return run_scenario_command(scenario, flags, out);
  } catch (const grw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return grw::is_assertion_failure(e.kind()) ? kExitAssertion : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
