#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddseg/attention_fusion.hpp"
#include "ddseg/discrepancy_kl.hpp"
#include "ddseg/discrepancy_markov.hpp"
#include "ddseg/discrepancy_ot.hpp"
#include "ddseg/logits_prep.hpp"
#include "ddseg/segmap_assembly.hpp"
#include "ddseg/upsample_jbu.hpp"

namespace ddseg {

enum class Mode { optimal_path, max_velocity, kl };

std::string_view mode_name(Mode mode) noexcept;

struct EngineOptions {
  Mode mode = Mode::optimal_path;
  double nms_threshold = kDefaultNmsThreshold;

  SinkhornConfig sinkhorn;
  CostDirection cost = CostDirection::raw;
  PathNorm path_norm = PathNorm::softmax;

  VelocityConfig velocity;
  VelocityMap velocity_map = VelocityMap::deficit;

  KlDirection kl_direction = KlDirection::q_to_s;

  JbuConfig jbu;
  unsigned workers = 1;
};

struct SegmentationInputs {
  LogitsField logits;
  AttentionStack attention;  // may be empty in kl mode
  GuidanceImage guide;
};

struct ClassSolveReport {
  std::size_t class_index = 0;
  double row_error = 0.0;
  double col_error = 0.0;
  bool numerical_warning = false;
};

struct Diagnostics {
  Mode mode = Mode::optimal_path;
  Grid grid;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t class_count = 0;
  std::vector<std::size_t> candidates;  // after early rejection
  std::vector<std::size_t> dropped;     // candidates with every patch suppressed

  std::vector<ClassSolveReport> transport;  // optimal_path only

  std::optional<double> ipf_row_residual;  // max_velocity only
  std::optional<double> ipf_col_residual;
  std::map<int, std::size_t> step_histogram;

  std::size_t jbu_fallback_pixels = 0;
  std::vector<std::pair<std::string, double>> stage_seconds;
};

struct SegmentationResult {
  LabelMap labels;
  std::vector<DiscrepancyMap> patch_maps;  // h x w, one per surviving class
  Diagnostics diagnostics;
};

/// Runs early rejection, suppression and normalization, the per-class
/// discrepancy of the selected mode, joint bilateral upsampling and the
/// per-pixel argmax. Module errors are rethrown as StageError naming the
/// stage; an empty candidate set raises EmptyCandidatesError.
SegmentationResult segment(const SegmentationInputs& inputs,
                           const EngineOptions& options);

// ---------------------------------------------------------------------------
// File-level driver.

struct AttentionSource {
  std::string tag;
  double weight = 0.0;
  std::filesystem::path path;
};

/// Parses "TAG:WEIGHT:FILE". An empty WEIGHT takes the tag's default weight.
AttentionSource parse_attention_source(std::string_view text);

struct RunConfig {
  EngineOptions engine;
  std::filesystem::path logits_path;
  std::vector<AttentionSource> attention;
  std::filesystem::path classes_path;
  std::filesystem::path guide_path;
  std::filesystem::path out_prefix;
  std::optional<Grid> grid;
  std::optional<std::filesystem::path> palette_path;
  bool debug_dumps = false;
  bool report_timings = false;

  void validate() const;
};

struct RunOutputs {
  std::filesystem::path labels;
  std::optional<std::filesystem::path> color;
  std::filesystem::path report;
  std::vector<std::filesystem::path> dumps;
};

std::vector<std::string> read_class_names(const std::filesystem::path& path);

/// Factorization h * w = n whose aspect h / w is closest to `aspect`.
Grid infer_grid(std::size_t n, double aspect);

SegmentationInputs load_inputs(const RunConfig& cfg);

/// Loads inputs, runs `segment`, and writes PREFIX.pgm, PREFIX.ppm (with a
/// palette), PREFIX.report.txt and, with debug dumps, one DDT1 tensor per
/// class map (PREFIX.class<k>.ddt).
SegmentationResult run_segmentation(const RunConfig& cfg,
                                    RunOutputs* outputs = nullptr);

std::string format_run_report(const EngineOptions& options,
                              const Diagnostics& diagnostics,
                              bool include_timings);

void emit_run_report(const EngineOptions& options,
                     const Diagnostics& diagnostics,
                     const std::filesystem::path& path, bool include_timings);

}  // namespace ddseg
