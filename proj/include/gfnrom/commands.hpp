// SPDX-License-Identifier: Apache-2.0
//
// The batch pipeline behind the command line tool: run configuration, and the
// gen / train / eval / bounds / report steps operating on one run directory.

#pragma once

#include "gfnrom/baseline.hpp"
#include "gfnrom/bounds.hpp"
#include "gfnrom/datagen.hpp"
#include "gfnrom/rom.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iomanip>
#include <optional>
#include <sstream>

namespace gfnrom {

enum class Profile { Desk, Paper };

inline Profile profile_from_name(std::string_view s) {
  if (s == "desk") return Profile::Desk;
  if (s == "paper") return Profile::Paper;
  throw InvalidArgument("unknown profile '" + std::string(s) + "' (expected desk or paper)");
}

inline std::string_view profile_name(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

struct DataConfig {
  Family family = Family::Smooth;
  std::vector<std::size_t> grid{10, 10};
  std::size_t base_side = 30;  ///< nodes per side of the jittered base grid
  double jitter = 0.25;
  std::vector<double> fractions = default_fractions();
  std::string assignment = "large";
};

struct EvalConfig {
  std::vector<std::string> meshes{"large"};
  bool with_pod = false;
  std::size_t pod_rank = 0;  ///< 0 means the latent dimension
};

struct BoundsConfig {
  std::string target = "large";
  bool all_samples = false;  ///< default: test samples only
};

struct RunConfig {
  std::uint64_t seed = 42;
  Profile profile = Profile::Desk;
  DataConfig data;
  Architecture arch;
  TrainConfig train;
  EvalConfig eval;
  BoundsConfig bounds;

  /// Profile defaults: desk trains 500 epochs on a 30x30 base grid, paper
  /// uses the full 5000 epochs on 48x48.
  static RunConfig defaults(Profile p) {
    RunConfig c;
    c.profile = p;
    c.train.epochs = p == Profile::Desk ? 500 : 5000;
    c.data.base_side = p == Profile::Desk ? 30 : 48;
    return c;
  }

  void validate() const {
    train.validate();
    require(data.grid.size() == param_box(data.family).size(),
            std::string(family_name(data.family)) + " needs a grid with " +
                std::to_string(param_box(data.family).size()) + " counts");
    require(data.base_side >= 8, "base_side must be at least 8");
    Assignment::parse(data.assignment);
    require(!eval.meshes.empty(), "eval.meshes is empty");
  }

  nlohmann::json to_json() const {
    nlohmann::json t = train.to_json();
    t.erase("seed");
    t.erase("train_fraction");
    return {{"seed", seed},
            {"profile", profile_name(profile)},
            {"data",
             {{"family", family_name(data.family)},
              {"grid", data.grid},
              {"base_side", data.base_side},
              {"jitter", data.jitter},
              {"fractions", data.fractions},
              {"train_fraction", train.train_fraction},
              {"assignment", data.assignment}}},
            {"model",
             {{"gfn_width", arch.gfn_width},
              {"latent", arch.latent},
              {"mapper_hidden", arch.mapper_hidden}}},
            {"train", t},
            {"eval",
             {{"meshes", eval.meshes}, {"with_pod", eval.with_pod}, {"pod_rank", eval.pod_rank}}},
            {"bounds", {{"target", bounds.target}, {"all_samples", bounds.all_samples}}}};
  }

  /// Reads a config document on top of the profile defaults it names.
  /// `seed_fallback` applies when the document has no seed.
  static RunConfig from_json(const nlohmann::json& j, std::optional<Profile> profile = {},
                             std::optional<std::uint64_t> seed_fallback = {}) {
    try {
      Profile p = profile ? *profile
                          : profile_from_name(j.value("profile", std::string("desk")));
      RunConfig c = defaults(p);
      if (j.contains("seed"))
        c.seed = j.at("seed").get<std::uint64_t>();
      else if (seed_fallback)
        c.seed = *seed_fallback;
      if (j.contains("data")) {
        const auto& d = j.at("data");
        if (d.contains("family"))
          c.data.family = family_from_name(d.at("family").get<std::string>());
        c.data.grid = d.value("grid", c.data.grid);
        c.data.base_side = d.value("base_side", c.data.base_side);
        c.data.jitter = d.value("jitter", c.data.jitter);
        c.data.fractions = d.value("fractions", c.data.fractions);
        c.train.train_fraction = d.value("train_fraction", c.train.train_fraction);
        c.data.assignment = d.value("assignment", c.data.assignment);
      }
      if (j.contains("model")) {
        const auto& m = j.at("model");
        c.arch.gfn_width = m.value("gfn_width", c.arch.gfn_width);
        c.arch.latent = m.value("latent", c.arch.latent);
        c.arch.mapper_hidden = m.value("mapper_hidden", c.arch.mapper_hidden);
      }
      if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"), c.train);
      if (j.contains("eval")) {
        const auto& e = j.at("eval");
        c.eval.meshes = e.value("meshes", c.eval.meshes);
        c.eval.with_pod = e.value("with_pod", c.eval.with_pod);
        c.eval.pod_rank = e.value("pod_rank", c.eval.pod_rank);
      }
      if (j.contains("bounds")) {
        const auto& b = j.at("bounds");
        c.bounds.target = b.value("target", c.bounds.target);
        c.bounds.all_samples = b.value("all_samples", c.bounds.all_samples);
      }
      c.train.seed = c.seed;
      return c;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("bad config: ") + e.what());
    }
  }
};

inline std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("GFNROM_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw InvalidArgument(std::string("GFNROM_SEED is not an integer: ") + s);
  return v;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- paths inside a run directory

struct RunDir {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path model() const { return root / "model"; }
  std::filesystem::path loss() const { return root / "loss.csv"; }
  std::filesystem::path train_summary() const { return root / "train.json"; }
  std::filesystem::path eval_json(const std::string& id) const { return root / ("eval_" + id + ".json"); }
  std::filesystem::path eval_csv(const std::string& id) const { return root / ("eval_" + id + ".csv"); }
  std::filesystem::path bounds_json(const std::string& id) const { return root / ("bounds_" + id + ".json"); }
  std::filesystem::path bounds_csv(const std::string& id) const { return root / ("bounds_" + id + ".csv"); }
  std::filesystem::path report() const { return root / "report.md"; }
};

// ---- gen

inline Hierarchy hierarchy_for(const RunConfig& c) {
  return make_hierarchy(jittered_grid_mesh(c.data.base_side, c.seed, c.data.jitter), c.data.fractions);
}

inline Dataset cmd_gen(const RunConfig& c, const std::filesystem::path& out) {
  c.validate();
  const RunDir run{out};
  std::filesystem::create_directories(out);
  const auto h = hierarchy_for(c);
  Dataset ds = generate_dataset(c.data.family, c.data.grid, h.levels(),
                                Assignment::parse(c.data.assignment), c.seed, c.train.train_fraction);
  save_dataset(run.dataset(), ds);
  write_json(run.config(), c.to_json());
  return ds;
}

// ---- train

inline std::vector<Sample> training_samples(const Dataset& ds) {
  std::vector<Sample> out;
  for (std::size_t k = 0; k < ds.train.size(); ++k)
    out.push_back({ds.mus.col(static_cast<Eigen::Index>(ds.train[k])), ds.mesh(ds.train_mesh[k]),
                   ds.field(ds.train_mesh[k], ds.train[k])});
  return out;
}

inline Dataset load_run_dataset(const RunDir& run) {
  if (!std::filesystem::exists(run.dataset() / "manifest.json"))
    throw IoError("no dataset in " + run.root.string() + " (run gen first)");
  return load_dataset(run.dataset());
}

inline TrainResult cmd_train(const RunConfig& c, const std::filesystem::path& out,
                             bool verbose = false) {
  c.validate();
  const RunDir run{out};
  const Dataset ds = load_run_dataset(run);
  const auto data = training_samples(ds);
  require(!data.empty(), "dataset has no training samples");
  RomModel m = RomModel::create(data.front().mesh, ds.n_mu(), c.arch, c.train.omega, c.seed);
  const std::size_t every = std::max<std::size_t>(1, c.train.epochs / 10);
  auto progress = [&](const HistoryRow& r) {
    if (verbose && r.epoch % every == 0)
      std::cerr << "epoch " << r.epoch << " loss " << r.total << " recon " << r.recon << " map "
                << r.map << '\n';
  };
  TrainResult res = train(m, data, c.train, progress);
  write_history_csv(run.loss(), res.history);
  if (res.aborted) throw Error("training aborted after " + std::to_string(res.history.size()) +
                               " epochs: " + res.message);
  std::filesystem::remove_all(run.model());
  save_model(run.model(), m, c.train);
  nlohmann::json masters = nlohmann::json::array();
  for (const auto& mm : res.master_meshes) masters.push_back(mm->size());
  write_json(run.train_summary(),
             {{"epochs", c.train.epochs},
              {"mode", mode_name(c.train.mode)},
              {"assignment", ds.assignment},
              {"model_nodes", m.bundle.nodes()},
              {"master_sizes", masters},
              {"final", {{"total", res.history.back().total},
                         {"recon", res.history.back().recon},
                         {"map", res.history.back().map}}}});
  return res;
}

// ---- eval

struct EvalResult {
  std::string mesh;
  double train_error = 0.0;
  double test_error = 0.0;
  std::vector<double> per_sample;  ///< every dataset sample, in index order
  std::optional<double> pod_error;
  std::vector<double> pod_per_sample;
  std::size_t pod_rank = 0;
};

inline double mean_over(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i : idx)
    if (!std::isnan(v[i])) {
      s += v[i];
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::nan("");
}

inline Matrix columns(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

inline EvalResult evaluate(const RomModel& m, const Dataset& ds, const std::string& mesh_id,
                           bool with_pod, std::size_t pod_rank) {
  EvalResult r;
  r.mesh = mesh_id;
  const MeshPtr& mesh = ds.mesh(mesh_id);
  const Matrix& truth = ds.snapshots.at(mesh_id);
  mean_relative_error(m, ds.mus, truth, mesh, &r.per_sample);
  r.train_error = mean_over(r.per_sample, ds.train);
  r.test_error = mean_over(r.per_sample, ds.test);
  if (with_pod) {
    r.pod_rank = pod_rank ? pod_rank : m.latent_dim;
    const PodBasis b = pod_basis(columns(truth, ds.train), r.pod_rank);
    pod_projection_error(b, truth, &r.pod_per_sample);
    r.pod_error = mean_over(r.pod_per_sample, ds.test);
  }
  return r;
}

inline std::vector<EvalResult> cmd_eval(const RunConfig& c, const std::filesystem::path& out) {
  const RunDir run{out};
  const Dataset ds = load_run_dataset(run);
  const RomModel m = load_model(run.model());
  require(m.n_mu == ds.n_mu(), "checkpoint expects " + std::to_string(m.n_mu) +
                                   " parameters, dataset has " + std::to_string(ds.n_mu()));
  std::vector<EvalResult> results;
  for (const auto& id : c.eval.meshes) {
    EvalResult r = evaluate(m, ds, id, c.eval.with_pod, c.eval.pod_rank);
    nlohmann::json j = {{"mesh", id},
                        {"nodes", ds.mesh(id)->size()},
                        {"family", family_name(ds.family)},
                        {"assignment", ds.assignment},
                        {"train_samples", ds.train.size()},
                        {"test_samples", ds.test.size()},
                        {"train_error", r.train_error},
                        {"test_error", r.test_error}};
    if (r.pod_error) {
      j["pod_rank"] = r.pod_rank;
      j["pod_error"] = *r.pod_error;
    }
    write_json(run.eval_json(id), j);

    std::ofstream csv(run.eval_csv(id));
    if (!csv) throw IoError("cannot write " + run.eval_csv(id).string());
    csv << "sample,split";
    for (std::size_t k = 0; k < ds.n_mu(); ++k) csv << ",mu" << k + 1;
    csv << ",error";
    if (r.pod_error) csv << ",pod_error";
    csv << '\n';
    std::vector<char> is_train(ds.size(), 0);
    for (std::size_t i : ds.train) is_train[i] = 1;
    for (std::size_t s = 0; s < ds.size(); ++s) {
      csv << s << ',' << (is_train[s] ? "train" : "test");
      for (Eigen::Index k = 0; k < ds.mus.rows(); ++k)
        csv << ',' << io::exact(ds.mus(k, static_cast<Eigen::Index>(s)));
      csv << ',' << io::exact(r.per_sample[s]);
      if (r.pod_error) csv << ',' << io::exact(r.pod_per_sample[s]);
      csv << '\n';
    }
    results.push_back(std::move(r));
  }
  return results;
}

// ---- bounds

inline BoundReport cmd_bounds(const RunConfig& c, const std::filesystem::path& out) {
  const RunDir run{out};
  const Dataset ds = load_run_dataset(run);
  const RomModel m = load_model(run.model());
  const MeshPtr& target = ds.mesh(c.bounds.target);
  std::vector<std::size_t> idx = ds.test;
  if (c.bounds.all_samples) {
    idx.resize(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  // Analytic fields give exact values on the model mesh, which may be a
  // master mesh absent from the dataset.
  std::vector<BoundSample> samples;
  for (std::size_t s : idx) {
    const Vector mu = ds.mus.col(static_cast<Eigen::Index>(s));
    samples.push_back({mu, analytic_field(ds.family, mu, *m.bundle.mesh), ds.field(c.bounds.target, s)});
  }
  BoundReport r = verify_bounds(m, target, samples);
  nlohmann::json j = to_json(r);
  j["model_nodes"] = m.bundle.nodes();
  j["target"] = c.bounds.target;
  j["target_nodes"] = target->size();
  write_json(run.bounds_json(c.bounds.target), j);
  write_bound_summary_csv(run.bounds_csv(c.bounds.target), r);
  return r;
}

// ---- report

/// Colour on a white-to-red ramp for t in [0, 1].
inline std::string ramp(double t) {
  t = std::clamp(std::isnan(t) ? 0.0 : t, 0.0, 1.0);
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  std::ostringstream s;
  s << "rgb(255," << g << ',' << g << ')';
  return s.str();
}

/// Parameter-space error map: test samples as circles, training samples as
/// squares, filled by relative error.
inline std::string error_map_svg(const std::vector<std::vector<double>>& mu,
                                 const std::vector<bool>& is_train, const std::vector<double>& err,
                                 const std::string& title) {
  const double w = 420, h = 420, pad = 50;
  double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300, emax = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    lo0 = std::min(lo0, mu[i][0]);
    hi0 = std::max(hi0, mu[i][0]);
    const double y = mu[i].size() > 1 ? mu[i][1] : 0.0;
    lo1 = std::min(lo1, y);
    hi1 = std::max(hi1, y);
    if (!std::isnan(err[i])) emax = std::max(emax, err[i]);
  }
  auto sx = [&](double v) { return pad + (hi0 > lo0 ? (v - lo0) / (hi0 - lo0) : 0.5) * (w - 2 * pad); };
  auto sy = [&](double v) { return h - pad - (hi1 > lo1 ? (v - lo1) / (hi1 - lo1) : 0.5) * (h - 2 * pad); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h + 30
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  s << "<rect x=\"" << pad - 10 << "\" y=\"" << pad - 10 << "\" width=\"" << w - 2 * pad + 20
    << "\" height=\"" << h - 2 * pad + 20 << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double x = sx(mu[i][0]), y = sy(mu[i].size() > 1 ? mu[i][1] : 0.0);
    const std::string fill = ramp(emax > 0 ? err[i] / emax : 0.0);
    if (is_train[i])
      s << "<rect x=\"" << x - 6 << "\" y=\"" << y - 6 << "\" width=\"12\" height=\"12\" fill=\""
        << fill << "\" stroke=\"black\"/>\n";
    else
      s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"6\" fill=\"" << fill
        << "\" stroke=\"#444\"/>\n";
  }
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">mu1 ["
    << fixed(lo0, 3) << ", " << fixed(hi0, 3) << "]</text>\n";
  s << "<text x=\"15\" y=\"" << h / 2 << "\" transform=\"rotate(-90 15 " << h / 2
    << ")\" text-anchor=\"middle\">mu2 [" << fixed(lo1, 3) << ", " << fixed(hi1, 3) << "]</text>\n";
  s << "<text x=\"" << pad << "\" y=\"" << h + 20 << "\">white 0% to red " << fixed(emax)
    << "%; squares were seen in training</text>\n";
  s << "</svg>\n";
  return s.str();
}

/// Training loss on a log scale.
inline std::string loss_svg(const std::vector<std::pair<double, double>>& pts) {
  const double w = 520, h = 320, pad = 50;
  double xmax = 1.0, lmin = 1e300, lmax = -1e300;
  for (const auto& [e, l] : pts) {
    xmax = std::max(xmax, e);
    if (l > 0) {
      lmin = std::min(lmin, std::log10(l));
      lmax = std::max(lmax, std::log10(l));
    }
  }
  if (!(lmax > lmin)) lmax = lmin + 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
  for (const auto& [e, l] : pts) {
    if (!(l > 0)) continue;
    s << pad + e / xmax * (w - 2 * pad) << ','
      << h - pad - (std::log10(l) - lmin) / (lmax - lmin) * (h - 2 * pad) << ' ';
  }
  s << "\"/>\n<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">training loss (log10 "
    << fixed(lmin) << " to " << fixed(lmax) << ")</text>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">epoch 0 to "
    << xmax << "</text>\n</svg>\n";
  return s.str();
}

inline std::map<std::string, nlohmann::json> eval_files(const std::filesystem::path& dir) {
  std::map<std::string, nlohmann::json> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("eval_", 0) == 0 && e.path().extension() == ".json")
      out[name.substr(5, name.size() - 10)] = read_json(e.path());
  }
  return out;
}

inline const std::vector<std::string>& mesh_order() {
  static const std::vector<std::string> ids{"large", "medium", "small", "tiny"};
  return ids;
}

/// Writes report.md and SVG plots. `references` are other run directories
/// whose errors appear as extra rows; every row after the first also shows
/// its change relative to the first reference.
inline std::filesystem::path cmd_report(const std::filesystem::path& out,
                                        const std::vector<std::filesystem::path>& references = {}) {
  const RunDir run{out};
  if (!std::filesystem::is_directory(out)) throw IoError("no run directory " + out.string());
  const auto evals = eval_files(out);
  const bool has_loss = std::filesystem::exists(run.loss());
  if (evals.empty() && !has_loss)
    throw IoError("nothing to report in " + out.string() + " (run train and eval first)");

  std::vector<std::string> cols;
  std::vector<std::pair<std::filesystem::path, std::map<std::string, nlohmann::json>>> rows;
  for (const auto& r : references) {
    auto ev = eval_files(r);
    if (ev.empty()) throw IoError("no evaluation results in reference run " + r.string());
    rows.emplace_back(r, std::move(ev));
  }
  rows.emplace_back(out, evals);
  for (const auto& id : mesh_order())
    for (const auto& [dir, ev] : rows)
      if (ev.count(id) && std::find(cols.begin(), cols.end(), id) == cols.end()) cols.push_back(id);
  for (const auto& [dir, ev] : rows)
    for (const auto& [id, j] : ev)
      if (std::find(cols.begin(), cols.end(), id) == cols.end()) cols.push_back(id);

  std::ostringstream md;
  md << "# Run report: " << out.filename().string() << "\n\n";
  if (!evals.empty()) {
    md << "## Mean relative test error (%) by evaluation mesh\n\n| run | training meshes |";
    for (const auto& c : cols) md << ' ' << c << " |";
    md << "\n|---|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) md << "---|";
    md << '\n';
    const auto& ref = rows.front().second;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& [dir, ev] = rows[r];
      std::string assign = ev.empty() ? "" : ev.begin()->second.value("assignment", "");
      md << "| " << dir.filename().string() << " | " << assign << " |";
      for (const auto& c : cols) {
        if (!ev.count(c)) {
          md << " - |";
          continue;
        }
        const double e = ev.at(c).at("test_error").get<double>();
        md << ' ' << fixed(e);
        if (r > 0 && ref.count(c)) {
          const double d = e - ref.at(c).at("test_error").get<double>();
          md << " (" << (d >= 0 ? "+" : "") << fixed(d) << ")";
        }
        md << " |";
      }
      md << '\n';
    }
    bool any_pod = false;
    for (const auto& [id, j] : evals) any_pod = any_pod || j.contains("pod_error");
    if (any_pod) {
      md << "\n## POD projection baseline\n\n| mesh | rank | ROM test error | POD error |\n|---|---|---|---|\n";
      for (const auto& [id, j] : evals)
        if (j.contains("pod_error"))
          md << "| " << id << " | " << j.at("pod_rank") << " | " << fixed(j.at("test_error"))
             << " | " << fixed(j.at("pod_error")) << " |\n";
    }
    md << "\n## Error maps\n\n";
    for (const auto& [id, j] : evals) {
      std::vector<std::vector<double>> mu;
      std::vector<bool> is_train;
      std::vector<double> err;
      std::ifstream in(run.eval_csv(id));
      if (!in) throw IoError("cannot open " + run.eval_csv(id).string());
      std::string line;
      std::getline(in, line);
      std::vector<std::string> head;
      {
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) head.push_back(x);
      }
      const auto err_col = static_cast<std::size_t>(
          std::find(head.begin(), head.end(), "error") - head.begin());
      if (err_col >= head.size() || err_col < 3)
        throw IoError(run.eval_csv(id).string() + ": missing error column");
      while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        if (f.size() != head.size()) throw IoError(run.eval_csv(id).string() + ": ragged row");
        std::vector<double> m;
        for (std::size_t a = 2; a < err_col; ++a) m.push_back(std::stod(f[a]));
        mu.push_back(m);
        is_train.push_back(f[1] == "train");
        err.push_back(std::stod(f[err_col]));
      }
      const std::string svg = "error_map_" + id + ".svg";
      std::ofstream(out / svg) << error_map_svg(mu, is_train, err, "relative error (%) on " + id);
      md << "![" << id << "](" << svg << ")\n";
    }
  }
  if (has_loss) {
    const auto hist = io::read_csv(run.loss(), 1);
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : hist) pts.emplace_back(r.at(0), r.at(1));
    std::ofstream(out / "loss.svg") << loss_svg(pts);
    if (!pts.empty())
      md << "\n## Training\n\nEpochs: " << pts.back().first << ", loss " << pts.front().second
         << " -> " << pts.back().second << "\n\n![loss](loss.svg)\n";
  }
  for (const auto& id : mesh_order()) {
    if (!std::filesystem::exists(run.bounds_json(id))) continue;
    const auto b = read_json(run.bounds_json(id));
    md << "\n## Error bounds on " << id << " (delta " << b.at("delta").get<double>() << ")\n\n"
       << "| bound | max lhs | min rhs | min slack | pass |\n|---|---|---|---|---|\n";
    for (const char* name : {"rom", "mapper", "autoencoder"}) {
      const auto& s = b.at("bounds").at(name);
      md << "| " << name << " | " << s.at("max_lhs").get<double>() << " | "
         << s.at("min_rhs").get<double>() << " | " << s.at("min_slack").get<double>() << " | "
         << (s.at("pass").get<bool>() ? "yes" : "NO") << " |\n";
    }
  }
  std::ofstream f(run.report());
  if (!f) throw IoError("cannot write " + run.report().string());
  f << md.str();
  return run.report();
}

}  // namespace gfnrom
