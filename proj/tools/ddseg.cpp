// ddseg: training-free segmentation from patch logits and self-attention.
//
//   ddseg --mode ot --logits L.ddt --attn up0::A0.ddt --attn up1::A1.ddt \
//         --classes classes.txt --guide image.png --out run/result
//   ddseg fixture --seed 7 --out fixture/

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "ddseg/error.hpp"
#include "ddseg/pipeline.hpp"
#include "ddseg/synthetic.hpp"

namespace {

ddseg::Grid parse_grid(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--grid", "expected HxW");
  try {
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--grid", "expected HxW");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution-discrepancy segmentation engine"};
  app.require_subcommand(0, 1);

  ddseg::RunConfig cfg;
  auto& eng = cfg.engine;

  std::string logits, classes, guide, out, grid, palette;
  std::vector<std::string> attn;

  const std::map<std::string, ddseg::Mode> modes{
      {"ot", ddseg::Mode::optimal_path},
      {"markov", ddseg::Mode::max_velocity},
      {"kl", ddseg::Mode::kl}};
  app.add_option("--mode", eng.mode, "Discrepancy mode")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->default_str("ot");
  app.add_option("--logits", logits, "DDT1 logits tensor [N, N_c]");
  app.add_option("--attn", attn, "Attention block TAG:WEIGHT:FILE (repeatable)");
  app.add_option("--classes", classes, "Class names, one per line");
  app.add_option("--guide", guide, "Guide image (PNG or P6 PPM)");
  app.add_option("--out", out, "Output prefix");
  app.add_option("--grid", grid, "Patch grid HxW (default: inferred)");
  app.add_option("--palette", palette, "Palette file of 'name r g b' lines");

  app.add_option("--epsilon", eng.sinkhorn.epsilon, "Entropic regularization")
      ->capture_default_str();
  app.add_option("--sinkhorn-iters", eng.sinkhorn.iterations,
                 "Sinkhorn iterations")
      ->capture_default_str();
  app.add_option("--ipf-iters", eng.velocity.ipf_iterations, "IPF iterations")
      ->capture_default_str();
  app.add_option("--tau", eng.velocity.tau, "Convergence threshold")
      ->capture_default_str();
  app.add_option("--max-steps", eng.velocity.max_steps, "Markov step cap")
      ->capture_default_str();
  app.add_option("--tau-scale", eng.velocity.scale, "Variation scaling")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ddseg::VariationScale>{
              {"raw", ddseg::VariationScale::raw},
              {"timesN", ddseg::VariationScale::times_n}}))
      ->default_str("timesN");
  app.add_option("--velocity-map", eng.velocity_map,
                 "Velocity score: deficit (1 - v) or direct (v)")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ddseg::VelocityMap>{
              {"deficit", ddseg::VelocityMap::deficit},
              {"direct", ddseg::VelocityMap::direct}}))
      ->default_str("deficit");
  app.add_option("--nms", eng.nms_threshold, "NMS confidence threshold")
      ->capture_default_str();
  app.add_option("--sigma-s2", eng.jbu.sigma_s_sq, "JBU spatial variance")
      ->capture_default_str();
  app.add_option("--sigma-r2", eng.jbu.sigma_r_sq, "JBU range variance")
      ->capture_default_str();
  app.add_option("--jbu-radius", eng.jbu.window_radius,
                 "JBU window half-width in patches")
      ->capture_default_str();
  app.add_option("--cost", eng.cost, "Attention-to-cost mapping")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ddseg::CostDirection>{
              {"raw", ddseg::CostDirection::raw},
              {"flip", ddseg::CostDirection::flip}}))
      ->default_str("raw");
  app.add_option("--path-norm", eng.path_norm, "Path map normalization")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ddseg::PathNorm>{
              {"softmax", ddseg::PathNorm::softmax},
              {"sum", ddseg::PathNorm::sum}}))
      ->default_str("softmax");
  app.add_option("--kl-dir", eng.kl_direction, "KL map orientation")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ddseg::KlDirection>{
              {"q_to_s", ddseg::KlDirection::q_to_s},
              {"s_to_q", ddseg::KlDirection::s_to_q}}))
      ->default_str("q_to_s");
  app.add_option("--workers", eng.workers, "Worker threads over classes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--debug-dumps", cfg.debug_dumps,
               "Write per-class patch maps as DDT1 tensors");
  app.add_flag("--timings", cfg.report_timings,
               "Add per-stage wall time to the report");

  auto* fixture = app.add_subcommand("fixture", "Write the two-cluster synthetic fixture");
  std::uint64_t seed = 1;
  std::string fixture_dir;
  fixture->add_option("--seed", seed, "RNG seed")->capture_default_str();
  fixture->add_option("--out", fixture_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fixture) {
      ddseg::write_fixture(ddseg::make_two_cluster_fixture(seed), fixture_dir);
      std::cout << "fixture written to " << fixture_dir << "\n";
      return 0;
    }

    for (const char* name : {"--logits", "--classes", "--guide", "--out"}) {
      if (app.count(name) == 0) {
        std::cerr << "ddseg: " << name << " is required\n" << app.help();
        return 2;
      }
    }
    cfg.logits_path = logits;
    cfg.classes_path = classes;
    cfg.guide_path = guide;
    cfg.out_prefix = out;
    if (!grid.empty()) cfg.grid = parse_grid(grid);
    if (!palette.empty()) cfg.palette_path = palette;
    for (const auto& a : attn) {
      cfg.attention.push_back(ddseg::parse_attention_source(a));
    }

    ddseg::RunOutputs outputs;
    const auto result = ddseg::run_segmentation(cfg, &outputs);
    std::cout << "labels: " << outputs.labels.string() << " ("
              << result.labels.height << "x" << result.labels.width << ")\n";
    if (outputs.color) std::cout << "color: " << outputs.color->string() << "\n";
    std::cout << "report: " << outputs.report.string() << "\n";
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ddseg::Error& e) {
    std::cerr << "ddseg: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ddseg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
