#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hfsg/hfsg.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kInput = 3;
constexpr int kInvariant = 4;

struct SynthArgs {
  std::string recipe;
  std::uint64_t seed = 0;
  int frames = 90;
  std::string out_dir = ".";
  std::string stem;
  bool noisy = false;
  hfsg::NoiseProfile profile;
};

struct RunArgs {
  std::string packets;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string events;
};

struct EvalArgs {
  std::string graph;
  std::string gt;
  std::string out = "eval.json";
  std::string csv;
  int recall_k = 0;
};

struct DotArgs {
  std::string graph;
  std::string out;
};

// Defaults of the noisy synthetic setting.
hfsg::NoiseProfile noisy_profile(std::uint64_t seed) {
  hfsg::NoiseProfile p;
  p.dropout_p = 0.3;
  p.centroid_sigma = 0.03;
  p.bbox_jitter = 2.0;
  p.score_flip_p = 0.2;
  p.score_sigma = 0.05;
  p.distractor_p = 1.0;
  p.embedding_sigma = 0.3;
  p.seed = seed;
  return p;
}

void run_synth(const SynthArgs& a, CLI::App& cmd) {
  auto scene = hfsg::generate_scene(a.recipe, a.seed);
  hfsg::NoiseProfile profile = a.noisy ? noisy_profile(a.seed) : hfsg::NoiseProfile::noiseless(a.seed);
  // Explicit flags override the preset.
  auto given = [&](const char* name) { return cmd.get_option(name)->count() > 0; };
  if (given("--dropout")) profile.dropout_p = a.profile.dropout_p;
  if (given("--centroid-sigma")) profile.centroid_sigma = a.profile.centroid_sigma;
  if (given("--bbox-jitter")) profile.bbox_jitter = a.profile.bbox_jitter;
  if (given("--flip")) profile.score_flip_p = a.profile.score_flip_p;
  if (given("--score-sigma")) profile.score_sigma = a.profile.score_sigma;
  if (given("--distractor")) profile.distractor_p = a.profile.distractor_p;
  if (given("--embedding-sigma")) profile.embedding_sigma = a.profile.embedding_sigma;
  if (given("--noise-seed")) profile.seed = a.profile.seed;

  auto stream = hfsg::render_stream(scene, profile, a.frames);
  scene.trajectory = stream.trajectory;
  const std::string stem = a.stem.empty() ? a.recipe + "-" + std::to_string(a.seed) : a.stem;
  const std::filesystem::path dir(a.out_dir);
  hfsg::write_file_atomic(dir / (stem + ".gt.json"), hfsg::to_json(scene).dump(2) + "\n");
  hfsg::write_file_atomic(dir / (stem + ".packets.jsonl"), hfsg::serialize_packets(stream.packets));
  std::cout << (dir / (stem + ".gt.json")).string() << "\n" << (dir / (stem + ".packets.jsonl")).string() << "\n";
}

void run_run(const RunArgs& a) {
  hfsg::EngineConfig cfg;
  if (!a.config.empty()) {
    std::istringstream in(hfsg::read_file(a.config));
    cfg.load(in);
  }
  for (const auto& s : a.sets) cfg.set(s);
  cfg.validate();
  std::ifstream in(a.packets, std::ios::binary);
  if (!in) throw hfsg::ParseError("cannot open " + a.packets);
  const auto packets = hfsg::read_packets(in);
  const auto result = hfsg::run_pipeline(packets, cfg);
  hfsg::write_file_atomic(a.out, hfsg::serialize_graph(result.graph));
  if (!a.events.empty()) hfsg::write_file_atomic(a.events, hfsg::serialize_events(result.events));
  std::cerr << "frames " << result.frames_processed << ", nodes " << result.graph.nodes.size() << ", edges "
            << result.graph.edges.size() << "\n";
}

void run_eval(const EvalArgs& a) {
  const auto graph = hfsg::deserialize_graph(hfsg::read_file(a.graph));
  hfsg::json gj;
  try {
    gj = hfsg::json::parse(hfsg::read_file(a.gt));
  } catch (const hfsg::json::parse_error& e) {
    throw hfsg::ParseError(a.gt + ": " + e.what());
  }
  const auto gt = hfsg::gt_from_json(gj);
  hfsg::EvalParams params;
  params.recall_k = a.recall_k;
  const auto report = hfsg::evaluate(gt, graph, params);
  hfsg::write_file_atomic(a.out, hfsg::serialize_report(report));
  if (!a.csv.empty()) hfsg::write_file_atomic(a.csv, hfsg::report_csv(report));
  std::cout << hfsg::report_csv(report);
}

void run_dot(const DotArgs& a) {
  const auto graph = hfsg::deserialize_graph(hfsg::read_file(a.graph));
  const auto dot = hfsg::to_dot(graph);
  if (a.out.empty()) {
    std::cout << dot;
  } else {
    hfsg::write_file_atomic(a.out, dot);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental hierarchical functional scene-graph fusion"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a ground-truth scene and a packet stream");
  synth->add_option("--recipe", sa.recipe, "Scene recipe")
      ->required()
      ->check(CLI::IsMember(hfsg::builtin_recipe_names()));
  synth->add_option("--seed", sa.seed, "Scene seed");
  synth->add_option("--frames", sa.frames, "Number of frames")->check(CLI::PositiveNumber);
  synth->add_option("--out-dir", sa.out_dir, "Output directory");
  synth->add_option("--stem", sa.stem, "Output file stem (default <recipe>-<seed>)");
  synth->add_flag("--noisy", sa.noisy, "Use the noisy preset instead of a clean stream");
  synth->add_option("--dropout", sa.profile.dropout_p, "Per-node detection dropout probability");
  synth->add_option("--centroid-sigma", sa.profile.centroid_sigma, "RMS 3D centroid displacement, metres");
  synth->add_option("--bbox-jitter", sa.profile.bbox_jitter, "2D box edge jitter, pixels");
  synth->add_option("--flip", sa.profile.score_flip_p, "Probability a wrong neighbor outscores the true parent");
  synth->add_option("--score-sigma", sa.profile.score_sigma, "Score noise");
  synth->add_option("--distractor", sa.profile.distractor_p, "Probability a wrong pair gets a weak score");
  synth->add_option("--embedding-sigma", sa.profile.embedding_sigma, "Semantic embedding noise at a 32x32 px crop");
  synth->add_option("--noise-seed", sa.profile.seed, "Stream noise seed (default: scene seed)");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Fuse a packet stream into a scene graph");
  run->add_option("--packets", ra.packets, "Input .packets.jsonl")->required();
  run->add_option("--config", ra.config, "key=value configuration file");
  run->add_option("--set", ra.sets, "Override a configuration key (key=value)");
  run->add_option("--out", ra.out, "Output .graph.json")->required();
  run->add_option("--events", ra.events, "Output event log (JSONL)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a graph against ground truth");
  eval->add_option("--graph", ea.graph, "Predicted .graph.json")->required();
  eval->add_option("--gt", ea.gt, "Ground truth .gt.json")->required();
  eval->add_option("--out", ea.out, "Report path");
  eval->add_option("--csv", ea.csv, "Also write a one-row CSV summary");
  eval->add_option("--recall-k", ea.recall_k, "Also accept labels ranked within the top k (0 = off)")
      ->check(CLI::NonNegativeNumber);

  DotArgs da;
  auto* dot = app.add_subcommand("export-dot", "Write a Graphviz description of a graph");
  dot->add_option("--graph", da.graph, "Input .graph.json")->required();
  dot->add_option("--out", da.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*synth) run_synth(sa, *synth);
    if (*run) run_run(ra);
    if (*eval) run_eval(ea);
    if (*dot) run_dot(da);
  } catch (const hfsg::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kInvariant;
  } catch (const hfsg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInvariant;
  }
  return 0;
}
