// Copyright 2026 The aiscale Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// aiscale command-line driver.
//
// Failures print one line to stderr and exit 2:
//   error kind=<ErrorKind> message="<text>"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "aiscale/arch_search.hpp"
#include "aiscale/config.hpp"
#include "aiscale/cost_model.hpp"
#include "aiscale/datagen.hpp"
#include "aiscale/micro_trainer.hpp"
#include "aiscale/model_text.hpp"
#include "aiscale/oracle.hpp"
#include "aiscale/report.hpp"
#include "aiscale/scaling_sim.hpp"

namespace fs = std::filesystem;
using namespace aiscale;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "text";

  report::Format fmt() const { return report::parse_format(format); }
};

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

int report_error(const std::string& kind, const std::string& message) {
  std::cerr << "error kind=" << kind << " message=" << quoted(message) << "\n";
  return 2;
}

/// Writes `text` to stdout and, with --out-dir, to out_dir/name.
void deliver(const Globals& g, const std::string& name, const std::string& text) {
  std::cout << text;
  if (g.out_dir.empty()) return;
  fs::create_directories(g.out_dir);
  const auto path = fs::path(g.out_dir) / name;
  const std::string_view sv(text);
  datagen::write_file_bytes(path.string(),
                            {reinterpret_cast<const std::uint8_t*>(sv.data()), sv.size()});
}

std::string ext(const Globals& g) { return g.fmt() == report::Format::csv ? ".csv" : ".txt"; }

sim::ModelProfile resolve_profile(const std::string& spec) {
  if (spec == "small") return sim::fp32(sim::small_profile());
  if (spec == "medium") return sim::fp32(sim::medium_profile());
  if (spec == "large") return sim::fp32(sim::large_profile());
  return config::load_profile(spec);
}

// ---------------------------------------------------------------------------

struct DatagenArgs {
  std::uint64_t sims = 4;
  unsigned workers = 1;
  std::uint32_t grid = 0;
  double box = 0;
  std::uint32_t particles = 0;
  std::string out;
  bool desk_scale = false;
};

void run_datagen(const Globals& g, const DatagenArgs& a) {
  datagen::DatasetOptions opt;
  opt.sims = a.sims;
  opt.workers = a.workers;
  opt.master_seed = g.seed;
  opt.config = a.desk_scale ? datagen::SimConfig::desk_scale() : datagen::SimConfig{};
  if (a.grid) opt.config.grid_d = a.grid;
  if (a.box > 0) opt.config.box_side = a.box;
  if (a.particles) opt.config.particles_per_side = a.particles;
  opt.out_dir = !a.out.empty() ? a.out : (!g.out_dir.empty() ? g.out_dir : "dataset");
  const auto m = datagen::generate_dataset(opt);
  if (g.fmt() == report::Format::csv) {
    std::cout << "sims,samples,grid_d,subvolume_d,total_bytes,manifest\n"
              << m.sims_count << ',' << m.sample_count << ',' << m.grid_d << ',' << m.subvolume_d
              << ',' << m.total_bytes() << ',' << (opt.out_dir / datagen::kManifestName).string()
              << "\n";
  } else {
    std::cout << "simulations   " << m.sims_count << "\n"
              << "samples       " << m.sample_count << "\n"
              << "grid          " << m.grid_d << "^3 -> " << m.subvolume_d << "^3 sub-volumes\n"
              << "dataset size  " << report::format_bytes(static_cast<double>(m.total_bytes())) << "\n"
              << "manifest      " << (opt.out_dir / datagen::kManifestName).string() << "\n";
  }
}

// ---------------------------------------------------------------------------

struct SearchArgs {
  std::string targets = "4T,16T";
  double tolerance = 0.05;
  std::uint64_t candidates = 0;
  std::string window;
  std::uint64_t width = 32;
  unsigned threads = 1;
};

void run_search(const Globals& g, const SearchArgs& a) {
  search::SearchSpace space;
  std::vector<cost::CostReport> reports;
  if (a.candidates > 0) {
    // filter mode: sample cells at a fixed width and keep those in the window
    const auto bounds = config::parse_list(a.window.empty() ? "0,1P" : a.window);
    if (bounds.size() != 2) fail(ErrorKind::BadRange, "--window needs lo,hi");
    const auto target = search::FlopTarget::range(bounds[0], bounds[1]);
    std::vector<arch::ModelSpec> models;
    for (std::uint64_t i = 0; i < a.candidates; ++i) {
      auto m = search::model_for_width(search::sample_cell(space, derive_seed(g.seed, 20, i)), space,
                                       a.width);
      m.name = "candidate_" + std::to_string(i);
      models.push_back(std::move(m));
    }
    for (const auto& acc : search::filter_models(models, target, space.input, 1, a.threads)) {
      reports.push_back(acc.report);
      if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        arch::save_model(models[acc.index], (fs::path(g.out_dir) / (models[acc.index].name + ".model")).string());
      }
    }
  } else {
    const auto family = search::generate_scaled_family(space, config::parse_list(a.targets), g.seed,
                                                       a.tolerance);
    for (const auto& f : family) {
      reports.push_back(f.report);
      if (f.solved.tolerance_missed) {
        std::cerr << "warning: " << f.solved.model.name << " misses its target by more than "
                  << report::percent(a.tolerance) << "\n";
      }
      if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        arch::save_model(f.solved.model, (fs::path(g.out_dir) / (f.solved.model.name + ".model")).string());
      }
    }
  }
  deliver(g, "costs" + ext(g), report::emit(reports, g.fmt()));
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string model;
  std::string builtin;
  std::uint64_t batch = 1;
};

void run_estimate(const Globals& g, const EstimateArgs& a) {
  arch::ModelSpec m;
  if (!a.model.empty()) {
    m = arch::load_model(a.model);
  } else if (a.builtin == "small" || a.builtin.empty()) {
    m = arch::build_cosmo_net(arch::SmallNet{});
  } else if (a.builtin == "cells") {
    m = search::model_for_width(search::sample_cell({}, g.seed), {}, 32);
    m.name = "cells";
  } else {
    fail(ErrorKind::InvalidModel, "unknown builtin '" + a.builtin + "'");
  }
  const auto v = arch::validate_model(m);
  if (!v.ok()) fail(ErrorKind::InvalidModel, v.violations.front());
  deliver(g, "estimate" + ext(g), report::emit(std::vector{cost::estimate(m, a.batch)}, g.fmt()));
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::vector<std::string> profiles{"small", "medium", "large"};
  std::string cluster;
  std::string mode = "strong";
  std::string nodes = "1,2,4,8,16,32";
  std::string fractions = "1/64,1/32,1/16,1/8,1/4,1/2,1";
  double dataset_fraction = 1.0 / 32;
  unsigned threads = 1;
};

void run_simulate(const Globals& g, const SimulateArgs& a) {
  const sim::ClusterConfig cluster = a.cluster.empty() ? sim::ClusterConfig{} : config::load_cluster(a.cluster);
  std::vector<sim::ScalingRecord> all;
  for (const auto& spec : a.profiles) {
    const auto p = resolve_profile(spec);
    std::vector<sim::ScalingRecord> recs;
    if (a.mode == "strong") {
      std::vector<std::uint32_t> nodes;
      for (double n : config::parse_list(a.nodes)) nodes.push_back(static_cast<std::uint32_t>(n));
      recs = sim::strong_scaling(p, cluster, nodes, a.dataset_fraction, {}, a.threads);
    } else if (a.mode == "data") {
      recs = sim::data_scaling(p, cluster, config::parse_list(a.fractions), {}, a.threads);
    } else {
      fail(ErrorKind::InvalidConfig, "--mode must be strong or data");
    }
    all.insert(all.end(), recs.begin(), recs.end());
  }
  std::string text = report::emit(all, g.fmt());
  if (g.fmt() == report::Format::text && a.mode == "strong") {
    for (const auto& [name, s] : report::strong_speedups(all)) {
      text += "speedup " + name + " " + report::sig4(s) + "x\n";
    }
  }
  deliver(g, "scaling_" + a.mode + ext(g), text);
}

// ---------------------------------------------------------------------------

int run_oracle(const Globals& g, int cases) {
  bool ok = true;
  std::string out = g.fmt() == report::Format::csv ? "suite,case,counted_forward,model_forward,ratio,pass\n" : "";
  auto row = [&](const std::string& suite, const oracle::CaseResult& r) {
    ok = ok && r.pass;
    char line[256];
    if (g.fmt() == report::Format::csv) {
      std::snprintf(line, sizeof line, "%s,%s,%llu,%llu,%.17g,%d\n", suite.c_str(), r.name.c_str(),
                    static_cast<unsigned long long>(r.counted_forward),
                    static_cast<unsigned long long>(r.model_forward), r.ratio, r.pass ? 1 : 0);
    } else {
      std::snprintf(line, sizeof line, "%-5s %-44s fwd %10llu model %10llu ratio %.4f  %s\n",
                    suite.c_str(), r.name.c_str(), static_cast<unsigned long long>(r.counted_forward),
                    static_cast<unsigned long long>(r.model_forward), r.ratio, r.pass ? "PASS" : "FAIL");
    }
    out += line;
  };
  for (const auto& r : oracle::dense_suite(cases, g.seed)) row("dense", r);
  for (const auto& r : oracle::conv_suite(cases, g.seed)) row("conv", r);
  for (int i = 0; i < 3; ++i) {
    const auto m = i == 2 ? oracle::random_conv_net(derive_seed(g.seed, 14, i), true)
                          : oracle::random_dense_net(derive_seed(g.seed, 14, i), true);
    const auto gc = oracle::gradient_check(m, derive_seed(g.seed, 15, i));
    ok = ok && gc.pass;
    char line[160];
    if (g.fmt() == report::Format::csv) {
      std::snprintf(line, sizeof line, "grad,%s,%zu,0,%.17g,%d\n", oracle::describe(m).c_str(),
                    gc.checked, gc.max_rel_error, gc.pass ? 1 : 0);
    } else {
      std::snprintf(line, sizeof line, "grad  %-44s params %zu max rel err %.3g  %s\n",
                    oracle::describe(m).c_str(), gc.checked, gc.max_rel_error, gc.pass ? "PASS" : "FAIL");
    }
    out += line;
  }
  if (g.fmt() == report::Format::text) out += ok ? "oracle: PASS\n" : "oracle: FAIL\n";
  deliver(g, "oracle" + ext(g), out);
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::uint64_t sims = 4;
  std::uint32_t side = 16;
  int epochs = 50;
  double lr = 3e-3;
};

void run_train(const Globals& g, const TrainArgs& a) {
  const auto data = train::tiny_dataset(a.sims, a.side, g.seed);
  train::Net net = train::Net::build(train::tiny_conv_net(a.side), g.seed);
  train::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.learning_rate = a.lr;
  opt.seed = g.seed;
  const auto trace = train::train_tiny(net, data, opt);
  std::string text;
  if (g.fmt() == report::Format::csv) {
    text = report::emit_loss_trace(trace);
  } else {
    text = "samples " + std::to_string(data.size()) + ", epochs " + std::to_string(a.epochs) + "\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      text += "epoch " + std::to_string(i) + "  loss " + report::sig4(trace[i]) + "\n";
    }
  }
  // the loss trace always lands as CSV so `report` can read it back
  std::cout << text;
  if (!g.out_dir.empty()) {
    fs::create_directories(g.out_dir);
    const std::string csv = report::emit_loss_trace(trace);
    datagen::write_file_bytes((fs::path(g.out_dir) / "loss.csv").string(),
                              {reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()});
  }
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> costs;
  std::vector<std::string> scaling;
  std::string manifest;
  std::string loss;
  std::string cluster;
};

void run_report(const Globals& g, const ReportArgs& a) {
  std::vector<cost::CostReport> costs;
  for (const auto& p : a.costs) {
    auto c = report::parse_cost_csv(config::read_text(p));
    costs.insert(costs.end(), c.begin(), c.end());
  }
  std::vector<sim::ScalingRecord> records;
  for (const auto& p : a.scaling) {
    auto r = report::parse_scaling_csv(config::read_text(p));
    records.insert(records.end(), r.begin(), r.end());
  }
  std::optional<datagen::DatasetManifest> manifest;
  if (!a.manifest.empty()) manifest = datagen::read_manifest(a.manifest);
  std::vector<double> losses;
  if (!a.loss.empty()) {
    const auto trace = report::parse_loss_csv(config::read_text(a.loss));
    if (!trace.empty()) losses = {trace.front(), trace.back()};
  }
  const auto cluster = a.cluster.empty() ? sim::ClusterConfig{} : config::load_cluster(a.cluster);
  deliver(g, "summary" + ext(g),
          report::emit(report::summarize(costs, manifest, records, cluster, losses), g.fmt()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aiscale: cost models, synthetic data and scaling simulation for scientific DL"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  DatagenArgs dg;
  auto* c_datagen = app.add_subcommand("datagen", "Generate a synthetic cosmology dataset");
  c_datagen->add_option("--sims", dg.sims, "Number of simulations")->check(CLI::PositiveNumber);
  c_datagen->add_option("--workers", dg.workers, "Worker threads")->check(CLI::PositiveNumber);
  c_datagen->add_option("--grid", dg.grid, "Voxels per side (even)");
  c_datagen->add_option("--box", dg.box, "Box side length");
  c_datagen->add_option("--particles", dg.particles, "Particles per side");
  c_datagen->add_option("--out", dg.out, "Dataset directory (default: --out-dir or ./dataset)");
  c_datagen->add_flag("--desk-scale", dg.desk_scale, "64^3 grid, 32^3 sub-volumes");

  SearchArgs sa;
  auto* c_search = app.add_subcommand("search", "Generate a FLOP-targeted model family");
  c_search->add_option("--targets", sa.targets, "Per-sample training FLOP targets, ascending")
      ->capture_default_str();
  c_search->add_option("--tolerance", sa.tolerance, "Relative tolerance")->capture_default_str();
  c_search->add_option("--candidates", sa.candidates, "Filter mode: number of sampled cells");
  c_search->add_option("--window", sa.window, "Filter mode: FLOP window lo,hi");
  c_search->add_option("--width", sa.width, "Filter mode: channel width")->capture_default_str();
  c_search->add_option("--threads", sa.threads, "Evaluation threads")->capture_default_str();

  EstimateArgs ea;
  auto* c_estimate = app.add_subcommand("estimate", "Cost a model");
  c_estimate->add_option("--model", ea.model, "Model text file");
  c_estimate->add_option("--builtin", ea.builtin, "small | cells");
  c_estimate->add_option("--batch", ea.batch, "Batch size")->capture_default_str();

  SimulateArgs sm;
  auto* c_simulate = app.add_subcommand("simulate", "Simulate data-parallel scaling");
  c_simulate->add_option("--profile", sm.profiles, "small | medium | large | profile file")
      ->capture_default_str();
  c_simulate->add_option("--cluster", sm.cluster, "Cluster config file");
  c_simulate->add_option("--mode", sm.mode, "strong | data")
      ->check(CLI::IsMember({"strong", "data"}))
      ->capture_default_str();
  c_simulate->add_option("--nodes", sm.nodes, "Node counts for strong mode")->capture_default_str();
  c_simulate->add_option("--fractions", sm.fractions, "Dataset fractions for data mode")
      ->capture_default_str();
  c_simulate->add_option("--dataset-fraction", sm.dataset_fraction, "Dataset fraction in strong mode");
  c_simulate->add_option("--threads", sm.threads, "Sweep threads")->capture_default_str();

  int oracle_cases = 20;
  auto* c_oracle = app.add_subcommand("oracle", "Check the cost model against literal counting");
  c_oracle->add_option("--cases", oracle_cases, "Cases per suite")->capture_default_str();

  TrainArgs ta;
  auto* c_train = app.add_subcommand("train-tiny", "Train a tiny conv net on generated samples");
  c_train->add_option("--sims", ta.sims, "Simulations (8 samples each)")->capture_default_str();
  c_train->add_option("--side", ta.side, "Sub-volume side")->capture_default_str();
  c_train->add_option("--epochs", ta.epochs, "Epochs")->capture_default_str();
  c_train->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();

  ReportArgs ra;
  auto* c_report = app.add_subcommand("report", "Summarize prior outputs");
  c_report->add_option("--costs", ra.costs, "Cost CSV files")->required();
  c_report->add_option("--scaling", ra.scaling, "Scaling CSV files")->required();
  c_report->add_option("--manifest", ra.manifest, "Dataset manifest");
  c_report->add_option("--loss", ra.loss, "Loss trace CSV");
  c_report->add_option("--cluster", ra.cluster, "Cluster config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("ParseError", e.what());
  }

  try {
    if (c_datagen->parsed()) run_datagen(g, dg);
    else if (c_search->parsed()) run_search(g, sa);
    else if (c_estimate->parsed()) run_estimate(g, ea);
    else if (c_simulate->parsed()) run_simulate(g, sm);
    else if (c_oracle->parsed() && run_oracle(g, oracle_cases) != 0) {
      return report_error("OracleMismatch", "one or more oracle checks failed");
    }
    else if (c_train->parsed()) run_train(g, ta);
    else if (c_report->parsed()) run_report(g, ra);
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.detail());
  } catch (const std::exception& e) {
    return report_error("Internal", e.what());
  }
  return 0;
}
