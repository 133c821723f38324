// SPDX-License-Identifier: Apache-2.0
//
// gfnrom <gen|train|eval|bounds|report> --out RUN [--config FILE] [overrides]

#include "gfnrom/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace gfnrom;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string family;
  std::string grid;
  std::optional<std::size_t> base_side;
  std::string assignment;
  std::optional<std::size_t> epochs;
  std::optional<double> lr, l2, omega, train_fraction;
  std::string mode, optimizer;
  std::vector<std::string> eval_mesh;
  bool with_pod = false;
  std::optional<std::size_t> pod_rank;
  bool all_samples = false;
  std::vector<std::string> reference;
  bool verbose = false;
};

std::vector<std::size_t> parse_grid(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, 'x');) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size()) throw InvalidArgument("bad grid '" + s + "' (expected e.g. 10x10)");
    out.push_back(v);
  }
  return out;
}

RunConfig resolve(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty())
    j = read_json(o.config);
  else if (std::filesystem::exists(RunDir{o.out}.config()))
    j = read_json(RunDir{o.out}.config());
  std::optional<Profile> profile;
  if (!o.profile.empty()) profile = profile_from_name(o.profile);
  RunConfig c = RunConfig::from_json(j, profile, seed_from_env());
  if (o.seed) c.seed = c.train.seed = *o.seed;
  if (!o.family.empty()) c.data.family = family_from_name(o.family);
  if (!o.grid.empty()) c.data.grid = parse_grid(o.grid);
  if (o.base_side) c.data.base_side = *o.base_side;
  if (!o.assignment.empty()) c.data.assignment = o.assignment;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.lr) c.train.lr = *o.lr;
  if (o.l2) c.train.l2 = *o.l2;
  if (o.omega) c.train.omega = *o.omega;
  if (o.train_fraction) c.train.train_fraction = *o.train_fraction;
  if (!o.mode.empty()) c.train.mode = mode_from_name(o.mode);
  if (!o.optimizer.empty()) c.train.optimizer = optimizer_from_name(o.optimizer);
  if (!o.eval_mesh.empty()) {
    c.eval.meshes = o.eval_mesh;
    c.bounds.target = o.eval_mesh.front();
  }
  if (o.with_pod) c.eval.with_pod = true;
  if (o.pod_rank) c.eval.pod_rank = *o.pod_rank;
  if (o.all_samples) c.bounds.all_samples = true;
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--out", o.out, "run directory")->required();
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--profile", o.profile, "desk or paper defaults");
  cmd->add_option("--seed", o.seed, "seed (falls back to GFNROM_SEED, then 42)");
}

void add_data(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--family", o.family, "smooth, boundary_layer, bump or stress");
  cmd->add_option("--grid", o.grid, "parameter grid, e.g. 10x10");
  cmd->add_option("--base-side", o.base_side, "nodes per side of the base mesh");
  cmd->add_option("--assignment", o.assignment, "training mesh id, or two joined by '+'");
  cmd->add_option("--train-fraction", o.train_fraction, "share of samples used for training");
}

void add_train(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--lr", o.lr);
  cmd->add_option("--l2", o.l2);
  cmd->add_option("--omega", o.omega);
  cmd->add_option("--mode", o.mode, "fixed, adaptive or precomputed");
  cmd->add_option("--optimizer", o.optimizer, "adam or sgd");
  cmd->add_flag("--verbose", o.verbose, "print the loss every tenth of the run");
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GFN reduced order models on synthetic parametric fields"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("gen", "generate meshes and snapshots");
  add_common(gen, o);
  add_data(gen, o);

  auto* trn = app.add_subcommand("train", "train a model on the run's dataset");
  add_common(trn, o);
  add_train(trn, o);

  auto* ev = app.add_subcommand("eval", "mean relative errors on one or more meshes");
  add_common(ev, o);
  ev->add_option("--eval-mesh", o.eval_mesh, "mesh id (repeatable)");
  ev->add_flag("--with-pod", o.with_pod, "add the POD projection baseline");
  ev->add_option("--pod-rank", o.pod_rank, "POD rank (default: latent size)");

  auto* bnd = app.add_subcommand("bounds", "check the error bounds from the model mesh to a target mesh");
  add_common(bnd, o);
  bnd->add_option("--eval-mesh", o.eval_mesh, "target mesh id");
  bnd->add_flag("--all-samples", o.all_samples, "use every sample, not only the test split");

  auto* rep = app.add_subcommand("report", "tables and SVG plots for a run");
  rep->add_option("--out", o.out, "run directory")->required();
  rep->add_option("--reference", o.reference, "other run directories to tabulate first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "gfnrom: error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*gen) {
      const RunConfig c = resolve(o);
      const Dataset ds = cmd_gen(c, o.out);
      std::cout << "dataset: " << ds.size() << " samples (" << ds.train.size() << " train), meshes";
      for (const auto& id : ds.mesh_ids) std::cout << ' ' << id << '=' << ds.mesh(id)->size();
      std::cout << '\n';
    } else if (*trn) {
      const RunConfig c = resolve(o);
      const TrainResult r = cmd_train(c, o.out, o.verbose);
      std::cout << "trained " << c.train.epochs << " epochs (" << mode_name(c.train.mode)
                << "), loss " << r.history.front().total << " -> " << r.history.back().total << '\n';
    } else if (*ev) {
      const RunConfig c = resolve(o);
      for (const auto& r : cmd_eval(c, o.out)) {
        std::cout << r.mesh << ": train " << fixed(r.train_error, 3) << "% test "
                  << fixed(r.test_error, 3) << '%';
        if (r.pod_error) std::cout << " pod(" << r.pod_rank << ") " << fixed(*r.pod_error, 3) << '%';
        std::cout << '\n';
      }
    } else if (*bnd) {
      const RunConfig c = resolve(o);
      const BoundReport r = cmd_bounds(c, o.out);
      for (const BoundSummary* s : {&r.rom, &r.mapper, &r.autoencoder})
        std::cout << s->name << ": " << (s->pass ? "pass" : "FAIL") << " (" << s->violations
                  << " violations, min slack " << s->min_slack << ")\n";
    } else if (*rep) {
      std::vector<std::filesystem::path> refs(o.reference.begin(), o.reference.end());
      std::cout << cmd_report(o.out, refs).string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "gfnrom: error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
