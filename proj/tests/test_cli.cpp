#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "support.hpp"

using namespace hfsg;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(HFSG_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST(Cli, SynthWritesDeterministicFiles) {
  test::TempDir a("cli-a"), b("cli-b");
  ASSERT_EQ(run("synth --recipe cabinet-3drawer --seed 3 --frames 20 --noisy --out-dir " + a.path().string()), 0);
  ASSERT_EQ(run("synth --recipe cabinet-3drawer --seed 3 --frames 20 --noisy --out-dir " + b.path().string()), 0);
  for (const auto* f : {"cabinet-3drawer-3.gt.json", "cabinet-3drawer-3.packets.jsonl"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  std::ifstream in(a / "cabinet-3drawer-3.packets.jsonl");
  EXPECT_EQ(read_packets(in).size(), 20u);
}

TEST(Cli, RunAndEvalAreByteIdentical) {
  test::TempDir d("cli-run");
  ASSERT_EQ(run("synth --recipe oven-panel-switch --seed 1 --frames 40 --noisy --out-dir " + d.path().string()), 0);
  const auto packets = d / "oven-panel-switch-1.packets.jsonl";
  const auto gt = d / "oven-panel-switch-1.gt.json";
  for (const auto* tag : {"1", "2"}) {
    const std::string t(tag);
    ASSERT_EQ(run("run --packets " + packets + " --out " + (d / ("g" + t + ".json")) + " --events " +
                  (d / ("ev" + t + ".jsonl"))),
              0);
    ASSERT_EQ(run("eval --graph " + (d / ("g" + t + ".json")) + " --gt " + gt + " --out " + (d / ("e" + t + ".json"))),
              0);
  }
  EXPECT_EQ(slurp(d / "g1.json"), slurp(d / "g2.json"));
  EXPECT_EQ(slurp(d / "ev1.jsonl"), slurp(d / "ev2.jsonl"));
  EXPECT_EQ(slurp(d / "e1.json"), slurp(d / "e2.json"));
}

TEST(Cli, EvalOfGroundTruthGraphIsPerfect) {
  test::TempDir d("cli-eval");
  const auto scene = generate_scene("kitchen-small", 0);
  write_file_atomic(d / "gt.json", to_json(scene).dump(2));
  write_file_atomic(d / "graph.json", serialize_graph(graph_from_gt(scene)));
  ASSERT_EQ(run("eval --graph " + (d / "graph.json") + " --gt " + (d / "gt.json") + " --out " + (d / "e.json") +
                " --csv " + (d / "e.csv")),
            0);
  const auto j = json::parse(slurp(d / "e.json"));
  for (const auto* k : {"objects", "carriers", "units", "tabletop", "overall"}) EXPECT_EQ(j["nodes"][k]["recall"], 1.0) << k;
  for (const auto* k : {"overall", "hierarchical", "tabletop"}) EXPECT_EQ(j["triplets"][k]["recall"], 1.0) << k;
  const auto csv = slurp(d / "e.csv");
  EXPECT_EQ(csv.substr(csv.find('\n') + 1), "100.0,100.0,100.0,100.0,100.0,100.0,100.0,100.0\n");
}

TEST(Cli, ExportDotShowsChains) {
  test::TempDir d("cli-dot");
  const auto g = graph_from_gt(generate_scene("cabinet-3drawer", 0));
  write_file_atomic(d / "graph.json", serialize_graph(g));
  ASSERT_EQ(run("export-dot --graph " + (d / "graph.json") + " --out " + (d / "g.dot")), 0);
  const auto dot = slurp(d / "g.dot");
  EXPECT_EQ(dot.rfind("digraph scene {", 0), 0u);
  // Parse the arrows back and count object -> carrier -> unit paths.
  std::vector<std::pair<std::string, std::string>> arrows;
  std::istringstream in(dot);
  for (std::string line; std::getline(in, line);) {
    const auto a = line.find(" -> ");
    if (a == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      return s.substr(0, s.find_first_of(" ;["));
    };
    arrows.emplace_back(trim(line.substr(0, a)), trim(line.substr(a + 4)));
  }
  int two_hop = 0;
  for (const auto& [p, c] : arrows) {
    for (const auto& [p2, c2] : arrows) {
      if (p2 == c) ++two_hop;
    }
  }
  EXPECT_EQ(arrows.size(), 6u);
  EXPECT_EQ(two_hop, 3);
}

TEST(Cli, ExitCodes) {
  test::TempDir d("cli-codes");
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("run --packets x.jsonl"), 2);
  EXPECT_EQ(run("synth --recipe cabinet-3drawer --frames 0"), 2);
  EXPECT_EQ(run("synth --recipe spaceship --out-dir " + d.path().string()), 2);
  EXPECT_EQ(run("run --packets " + (d / "missing.jsonl") + " --out " + (d / "g.json")), 3);
  write_file_atomic(d / "broken.gt.json", "{\"recipe\": 3}");
  write_file_atomic(d / "g0.json", serialize_graph(SceneGraph{}));
  EXPECT_EQ(run("eval --graph " + (d / "g0.json") + " --gt " + (d / "broken.gt.json") + " --out " + (d / "e.json")), 3);
  write_file_atomic(d / "bad.jsonl", "{\"frame_id\": 0}\n");
  EXPECT_EQ(run("run --packets " + (d / "bad.jsonl") + " --out " + (d / "g.json")), 3);
  EXPECT_EQ(run("eval --graph " + (d / "missing.json") + " --gt " + (d / "missing.json")), 3);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, SetOverridesConfig) {
  test::TempDir d("cli-set");
  ASSERT_EQ(run("synth --recipe cabinet-3drawer --seed 0 --frames 30 --out-dir " + d.path().string()), 0);
  const auto packets = d / "cabinet-3drawer-0.packets.jsonl";
  write_file_atomic(d / "cfg.txt", "engine.stride = 2\n");
  ASSERT_EQ(run("run --packets " + packets + " --config " + (d / "cfg.txt") + " --out " + (d / "a.json") + " --events " +
                (d / "a.jsonl")),
            0);
  ASSERT_EQ(run("run --packets " + packets + " --config " + (d / "cfg.txt") + " --set edge.min_obs=1000 --out " +
                (d / "b.json")),
            0);
  EXPECT_TRUE(deserialize_graph(slurp(d / "b.json")).edges.empty());
  EXPECT_FALSE(deserialize_graph(slurp(d / "a.json")).edges.empty());
  // Stride 2 from the file: no event refers to an odd frame.
  std::istringstream ev(slurp(d / "a.jsonl"));
  for (std::string line; std::getline(ev, line);) {
    const auto e = json::parse(line);
    if (e.contains("frame")) {
      EXPECT_EQ(e["frame"].get<int>() % 2, 0) << line;
    }
  }
  EXPECT_EQ(run("run --packets " + packets + " --set nope=1 --out " + (d / "c.json")), 3);
}
