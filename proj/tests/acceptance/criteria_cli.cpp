// End-to-end CLI run on the bundled configs, twice per seed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "acceptance.hpp"

namespace collapsar::acceptance {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

struct Pipeline {
  bool ok = true;
  std::string failed_step;
  double seconds = 0.0;
};

Pipeline run_pipeline(const fs::path& cli, const fs::path& configs, const fs::path& root, int seed) {
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string log = (root / "cli.log").string();
  const std::string s = " --seed " + std::to_string(seed);
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  auto cfg = [&](const char* name) { return " --config " + q(configs / name); };
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"gen collapse", "gen" + cfg("gen_collapse.yaml") + s + " --out " + q(root / "gen_collapse")},
      {"train", "train" + cfg("train_collapse.yaml") + " --data " + q(root / "gen_collapse") + s + " --out " +
                    q(root / "train")},
      {"eval", "eval --checkpoint " + q(root / "train" / "checkpoint") + " --data " + q(root / "gen_collapse") + s +
                   " --out " + q(root / "eval")},
      {"analyze spectrum", "analyze" + cfg("analyze_spectrum.yaml") + " --checkpoint " +
                               q(root / "train" / "checkpoint") + s + " --out " + q(root / "spectrum")},
      {"analyze ia", "analyze" + cfg("analyze_ia.yaml") + " --checkpoint " + q(root / "train" / "checkpoint") + s +
                         " --out " + q(root / "ia")},
      {"gen ctr", "gen" + cfg("gen_ctr.yaml") + s + " --out " + q(root / "gen_ctr")},
      {"analyze mi", "analyze" + cfg("analyze_mi.yaml") + " --data " + q(root / "gen_ctr") + s + " --out " +
                         q(root / "mi")},
      {"gen two_task", "gen" + cfg("gen_two_task.yaml") + s + " --out " + q(root / "gen_two_task")},
      {"analyze entangle", "analyze" + cfg("analyze_entangle.yaml") + " --data " + q(root / "gen_two_task") + s +
                               " --out " + q(root / "entangle")},
  };
  Stopwatch sw;
  Pipeline out;
  for (const auto& [name, args] : steps) {
    const std::string cmd = q(cli) + " " + args + " >> " + q(log) + " 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      out.ok = false;
      out.failed_step = name;
      break;
    }
  }
  out.seconds = sw.seconds();
  return out;
}

}  // namespace

Outcome cli_smoke() {
  Checks c;
#ifndef COLLAPSAR_CLI_PATH
  c.expect(false, "built without the CLI target");
  return c.outcome("CLI unavailable");
#else
  const fs::path cli = COLLAPSAR_CLI_PATH;
  const fs::path configs = fs::path(COLLAPSAR_SOURCE_DIR) / "configs";
  const fs::path base = fs::temp_directory_path() / "collapsar_acceptance_cli";
  const Pipeline a = run_pipeline(cli, configs, base / "a", 7);
  const Pipeline b = run_pipeline(cli, configs, base / "b", 7);
  c.expect(a.ok, "run a failed at " + a.failed_step + " (see " + (base / "a" / "cli.log").string() + ")");
  c.expect(b.ok, "run b failed at " + b.failed_step);
  c.expect(a.seconds < 300.0, "pipeline took " + fmt(a.seconds) + " s");
  if (!a.ok || !b.ok) return c.outcome("pipeline incomplete");

  // Byte-identical artifacts.
  const char* files[] = {"gen_collapse/data.csv", "gen_collapse/manifest.json", "train/history.jsonl",
                         "train/metrics.json",    "eval/metrics.json",          "gen_ctr/data.csv",
                         "gen_two_task/data.csv"};
  for (const char* f : files) c.expect(slurp(base / "a" / f) == slurp(base / "b" / f), std::string(f) + " differs");
  for (const auto& e : fs::recursive_directory_iterator(base / "a" / "train" / "checkpoint")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), base / "a");
    c.expect(slurp(e.path()) == slurp(base / "b" / rel), rel.string() + " differs");
  }
  // Input paths in provenance differ by run directory; payloads must not.
  for (const char* r : {"spectrum/report.json", "ia/report.json", "mi/report.json", "entangle/report.json"}) {
    c.expect(read_json(base / "a" / r)["payload"] == read_json(base / "b" / r)["payload"],
             std::string(r) + " payload differs");
  }
  const auto ia = read_json(base / "a" / "ia" / "report.json")["payload"]["matrices"];
  c.expect(ia.size() == 1 && ia[0]["ia"].get<double>() >= 1.0, "IA report missing its value");
  const auto ent = read_json(base / "a" / "entangle" / "report.json")["payload"];
  c.expect(ent["panels"].size() == 6, "entangle report panels");
  c.expect(fs::exists(base / "a" / "spectrum" / "matrices.0.normalized_histogram.csv"), "spectrum CSV missing");
  c.expect(fs::exists(base / "a" / "train" / "resolved_config.yaml"), "resolved config missing");

  const double ia_value = ia.empty() ? 0.0 : ia[0]["ia"].get<double>();
  auto outcome = c.outcome("gen -> train -> eval -> analyze spectrum/ia/mi/entangle in " + fmt(a.seconds, 3) +
                           " s; repeat run identical; IA(high) " + fmt(ia_value));
  if (outcome.pass) fs::remove_all(base);
  return outcome;
#endif
}

}  // namespace collapsar::acceptance
