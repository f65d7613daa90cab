#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ddseg/error.hpp"
#include "ddseg/pipeline.hpp"
#include "ddseg/synthetic.hpp"
#include "ddseg/tensor_store.hpp"
#include "test_util.hpp"

namespace ddseg {
namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EngineOptions options_for(Mode mode) {
  EngineOptions opt;
  opt.mode = mode;
  return opt;
}

class FixtureModes : public ::testing::TestWithParam<Mode> {};

TEST_P(FixtureModes, RecoversThePlantedClusters) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto fx = make_two_cluster_fixture(seed);
    const auto res = segment(fx.inputs, options_for(GetParam()));
    const auto acc = testing::patch_accuracy(fx, res.labels);
    EXPECT_EQ(acc.unambiguous, 1.0) << mode_name(GetParam()) << " seed " << seed;
    if (GetParam() != Mode::kl) EXPECT_GE(acc.ambiguous, 0.9) << mode_name(GetParam());
    // The distractor never wins a patch, so only two candidates remain.
    EXPECT_EQ(res.diagnostics.candidates, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(res.labels.height, 32u);
    EXPECT_EQ(res.labels.width, 32u);
  }
}

INSTANTIATE_TEST_SUITE_P(AllModes, FixtureModes,
                         ::testing::Values(Mode::optimal_path, Mode::max_velocity, Mode::kl),
                         [](const auto& info) { return std::string(mode_name(info.param)); });

TEST(Segment, WorkerCountDoesNotChangeResults) {
  const auto fx = make_two_cluster_fixture(4);
  for (Mode mode : {Mode::optimal_path, Mode::max_velocity, Mode::kl}) {
    auto opt = options_for(mode);
    const auto serial = segment(fx.inputs, opt);
    opt.workers = 4;
    const auto parallel = segment(fx.inputs, opt);
    EXPECT_EQ(serial.labels, parallel.labels);
    ASSERT_EQ(serial.patch_maps.size(), parallel.patch_maps.size());
    for (std::size_t k = 0; k < serial.patch_maps.size(); ++k) {
      EXPECT_EQ(serial.patch_maps[k].values, parallel.patch_maps[k].values);
    }
  }
}

TEST(Segment, ClassesWithoutSurvivingPatchesAreDropped) {
  // Patch 0 is a confident class-0 patch; patch 1 is a near tie that
  // suppression removes from both classes. Class 1 wins patch 1 by a hair
  // and so is a candidate, but it has no confident cell left.
  SegmentationInputs in;
  in.logits.raw = Matrix(2, 2, std::vector<double>{5.0, 0.0, 0.0, 0.01});
  in.logits.grid = {1, 2};
  in.logits.class_names = {"a", "b"};
  in.guide = GuidanceImage{2, 4, std::vector<double>(24, 0.5)};
  const auto res = segment(in, options_for(Mode::kl));
  EXPECT_EQ(res.diagnostics.candidates, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(res.diagnostics.dropped, (std::vector<std::size_t>{1}));
  for (auto l : res.labels.labels) EXPECT_EQ(l, 0u);
}

TEST(Segment, RemovingAnAlreadyPrunedClassChangesNothing) {
  const auto fx = make_two_cluster_fixture(8);
  auto trimmed = fx.inputs;
  const Matrix& raw = fx.inputs.logits.raw;
  trimmed.logits.raw = Matrix(raw.rows(), 2);
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    trimmed.logits.raw(i, 0) = raw(i, 0);
    trimmed.logits.raw(i, 1) = raw(i, 1);
  }
  trimmed.logits.class_names.pop_back();
  for (Mode mode : {Mode::optimal_path, Mode::max_velocity, Mode::kl}) {
    EXPECT_EQ(segment(fx.inputs, options_for(mode)).labels,
              segment(trimmed, options_for(mode)).labels)
        << mode_name(mode);
  }
}

TEST(Segment, UniformLogitsGiveTheLowestCandidate) {
  SegmentationInputs in;
  in.logits.raw = Matrix(4, 3, 0.0);
  in.logits.grid = {2, 2};
  in.logits.class_names = {"a", "b", "c"};
  in.guide = GuidanceImage{4, 4, std::vector<double>(48, 0.2)};
  auto opt = options_for(Mode::kl);
  opt.nms_threshold = 0.0;
  const auto res = segment(in, opt);
  EXPECT_EQ(res.diagnostics.candidates, (std::vector<std::size_t>{0}));
  for (auto l : res.labels.labels) EXPECT_EQ(l, 0u);
}

TEST(Segment, EverythingSuppressedIsAnError) {
  SegmentationInputs in;
  in.logits.raw = Matrix(4, 2, 0.0);
  in.logits.grid = {2, 2};
  in.logits.class_names = {"a", "b"};
  in.guide = GuidanceImage{4, 4, std::vector<double>(48, 0.2)};
  EXPECT_THROW(segment(in, options_for(Mode::kl)), EmptyCandidatesError);
}

TEST(Segment, ModuleErrorsNameTheirStage) {
  auto fx = make_two_cluster_fixture(5);
  fx.inputs.attention.blocks.clear();
  try {
    segment(fx.inputs, options_for(Mode::optimal_path));
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "attention");
  }
  fx = make_two_cluster_fixture(5);
  fx.inputs.guide.pixels[0] = 2.0;
  try {
    segment(fx.inputs, options_for(Mode::kl));
    FAIL() << "expected a StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "logits");
  }
}

TEST(Report, SectionsFollowTheMode) {
  const auto fx = make_two_cluster_fixture(6);
  const auto ot = format_run_report(options_for(Mode::optimal_path),
                                    segment(fx.inputs, options_for(Mode::optimal_path)).diagnostics, false);
  EXPECT_NE(ot.find("max_marginal_error:"), std::string::npos);
  EXPECT_EQ(ot.find("[max_velocity]"), std::string::npos);

  const auto mv = format_run_report(options_for(Mode::max_velocity),
                                    segment(fx.inputs, options_for(Mode::max_velocity)).diagnostics, false);
  EXPECT_NE(mv.find("convergence_step_histogram:"), std::string::npos);
  EXPECT_NE(mv.find("ipf_col_residual:"), std::string::npos);
  EXPECT_EQ(mv.find("[optimal_path]"), std::string::npos);

  const auto kl = format_run_report(options_for(Mode::kl),
                                    segment(fx.inputs, options_for(Mode::kl)).diagnostics, false);
  EXPECT_NE(kl.find("[kl]"), std::string::npos);
  EXPECT_EQ(kl.find("[optimal_path]"), std::string::npos);
  EXPECT_EQ(kl.find("[max_velocity]"), std::string::npos);
  EXPECT_EQ(kl.find("[timing]"), std::string::npos);
  EXPECT_NE(kl.find("jbu_fallback_pixels: 0"), std::string::npos);
}

TEST(AttentionSource, Parsing) {
  const auto a = parse_attention_source("up1:0.25:/tmp/a.ddt");
  EXPECT_EQ(a.tag, "up1");
  EXPECT_EQ(a.weight, 0.25);
  EXPECT_EQ(a.path, "/tmp/a.ddt");
  EXPECT_EQ(parse_attention_source("up0::x.ddt").weight, 0.5);
  EXPECT_EQ(parse_attention_source("down1::x.ddt").weight, 0.0);
  EXPECT_EQ(parse_attention_source("b:1:c:/dir/x.ddt").path, "c:/dir/x.ddt");
  EXPECT_THROW(parse_attention_source("up0:x.ddt"), ParameterError);
  EXPECT_THROW(parse_attention_source("mid::x.ddt"), ParameterError);
  EXPECT_THROW(parse_attention_source("up0:-1:x.ddt"), ParameterError);
  EXPECT_THROW(parse_attention_source("up0:abc:x.ddt"), ParameterError);
  EXPECT_THROW(parse_attention_source(":1:x.ddt"), ParameterError);
}

TEST(InferGrid, PicksTheClosestAspect) {
  EXPECT_EQ(infer_grid(64, 1.0), (Grid{8, 8}));
  EXPECT_EQ(infer_grid(1024, 1.0), (Grid{32, 32}));
  EXPECT_EQ(infer_grid(12, 0.75), (Grid{3, 4}));
  EXPECT_EQ(infer_grid(7, 1.0), (Grid{1, 7}));
  EXPECT_THROW(infer_grid(0, 1.0), ShapeError);
}

TEST(RunSegmentation, WritesAllOutputs) {
  testing::TempDir dir("run");
  const auto fx = make_two_cluster_fixture(7);
  write_fixture(fx, dir.path());
  RunConfig cfg;
  cfg.logits_path = dir / "logits.ddt";
  cfg.classes_path = dir / "classes.txt";
  cfg.guide_path = dir / "guide.ppm";
  cfg.attention = {parse_attention_source("up0::" + (dir / "attn_up0.ddt").string()),
                   parse_attention_source("up1::" + (dir / "attn_up1.ddt").string())};
  cfg.out_prefix = dir / "out" / "seg";
  cfg.palette_path = dir / "palette.txt";
  cfg.debug_dumps = true;
  RunOutputs outs;
  const auto res = run_segmentation(cfg, &outs);
  EXPECT_TRUE(std::filesystem::exists(outs.labels));
  ASSERT_TRUE(outs.color.has_value());
  EXPECT_TRUE(std::filesystem::exists(*outs.color));
  EXPECT_EQ(read_label_map(outs.labels), res.labels);
  ASSERT_EQ(outs.dumps.size(), 2u);
  const auto dump = read_tensor(outs.dumps[0]);
  EXPECT_EQ(dump.shape(), (std::vector<std::uint64_t>{8, 8}));
  EXPECT_EQ(dump.to_f64(), res.patch_maps[0].values.values());
  // Labels from files match the in-memory fixture.
  EXPECT_EQ(res.labels, segment(fx.inputs, cfg.engine).labels);
}

TEST(RunSegmentation, MissingInputsFailInTheLoadStage) {
  testing::TempDir dir("run_missing");
  RunConfig cfg;
  cfg.logits_path = dir / "nope.ddt";
  EXPECT_THROW(run_segmentation(cfg), StageError);
}

#ifdef DDSEG_CLI_PATH
int run_cli(const std::string& args) {
  return std::system((std::string(DDSEG_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run_cli("fixture --seed 9 --out " + dir.path().string()), 0);
  const std::string d = dir.path().string() + "/";
  const std::string common = "--logits " + d + "logits.ddt --classes " + d + "classes.txt --guide " + d +
                             "guide.ppm --attn up0::" + d + "attn_up0.ddt --attn up1::" + d +
                             "attn_up1.ddt --palette " + d + "palette.txt";
  for (const char* mode : {"ot", "markov", "kl"}) {
    ASSERT_EQ(run_cli(std::string("--mode ") + mode + " " + common + " --out " + d + "a"), 0);
    ASSERT_EQ(run_cli(std::string("--mode ") + mode + " " + common + " --workers 3 --out " + d + "b"), 0);
    for (const char* ext : {".pgm", ".ppm", ".report.txt"}) {
      EXPECT_EQ(testing::file_bytes(d + "a" + ext), testing::file_bytes(d + "b" + ext)) << mode << ext;
    }
  }
  EXPECT_NE(read_text(d + "a.report.txt").find("mode: kl"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_NE(run_cli("--mode ot"), 0);
  EXPECT_NE(run_cli("--mode ot --logits /nonexistent --classes x --guide y --out z --attn up0::w"), 0);
}
#endif

}  // namespace
}  // namespace ddseg
