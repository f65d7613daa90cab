#include "ddseg/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>

#include "ddseg/error.hpp"
#include "ddseg/image_io.hpp"
#include "ddseg/tensor_store.hpp"
#include "parallel.hpp"

namespace ddseg {
namespace {

class StageTimer {
 public:
  explicit StageTimer(Diagnostics& diag) : diag_(diag) {}

  template <typename Fn>
  decltype(auto) run(const char* stage, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      StageTimer& self;
      const char* stage;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        const std::chrono::duration<double> dt =
            std::chrono::steady_clock::now() - start;
        self.diag_.stage_seconds.emplace_back(stage, dt.count());
      }
    } record{*this, stage, start};
    try {
      return fn();
    } catch (const EmptyCandidatesError&) {
      throw;
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e.what());
    }
  }

 private:
  Diagnostics& diag_;
};

Matrix to_patch_grid(const std::vector<double>& values, Grid grid) {
  return Matrix(grid.h, grid.w, values);
}

std::string_view to_string(CostDirection d) {
  return d == CostDirection::raw ? "raw" : "flip";
}
std::string_view to_string(PathNorm n) {
  return n == PathNorm::softmax ? "softmax" : "sum";
}
std::string_view to_string(VariationScale s) {
  return s == VariationScale::raw ? "raw" : "times_n";
}
std::string_view to_string(VelocityMap m) {
  return m == VelocityMap::deficit ? "deficit" : "direct";
}
std::string_view to_string(KlDirection d) {
  return d == KlDirection::q_to_s ? "q_to_s" : "s_to_q";
}

std::string join(const std::vector<std::size_t>& v) {
  if (v.empty()) return "(none)";
  return fmt::format("{}", fmt::join(v, " "));
}

}  // namespace

std::string_view mode_name(Mode mode) noexcept {
  switch (mode) {
    case Mode::optimal_path: return "optimal_path";
    case Mode::max_velocity: return "max_velocity";
    case Mode::kl: return "kl";
  }
  return "unknown";
}

SegmentationResult segment(const SegmentationInputs& inputs,
                           const EngineOptions& options) {
  SegmentationResult result;
  Diagnostics& diag = result.diagnostics;
  StageTimer timer(diag);
  diag.mode = options.mode;

  const LogitsField& field = inputs.logits;
  const Grid grid = field.grid;

  // Early rejection, suppression, per-class normalization.
  std::vector<ClassDistribution> dists = timer.run("logits", [&] {
    field.validate();
    inputs.guide.validate();
    options.jbu.validate();
    const Matrix conf = class_confidence(field);
    diag.candidates = category_early_reject(conf);
    const KeepMask mask = nms_mask(conf, options.nms_threshold);
    std::vector<ClassDistribution> out;
    for (std::size_t c : diag.candidates) {
      try {
        out.push_back(normalize_per_class(field, mask, c));
      } catch (const EmptyClassError&) {
        diag.dropped.push_back(c);
      }
    }
    if (out.empty()) {
      throw EmptyCandidatesError(
          "logits: every candidate class is fully suppressed at NMS threshold " +
          fmt::format("{}", options.nms_threshold));
    }
    return out;
  });
  diag.grid = grid;
  diag.class_count = field.class_count();
  diag.height = inputs.guide.height;
  diag.width = inputs.guide.width;

  const std::size_t n = grid.size();
  const DegenerateTarget target(n);
  std::vector<std::vector<double>> scores(dists.size());

  switch (options.mode) {
    case Mode::optimal_path: {
      const auto [cost, kernel] = timer.run("attention", [&] {
        options.sinkhorn.validate();
        CostMatrix fused = fuse_attention(inputs.attention, grid);
        CostMatrix c = attention_to_cost(fused, options.cost);
        auto k = std::make_shared<const Matrix>(
            gibbs_kernel(c.c, options.sinkhorn.epsilon,
                         options.sinkhorn.underflow_floor));
        return std::pair{std::move(c), std::move(k)};
      });
      diag.transport.resize(dists.size());
      timer.run("discrepancy", [&] {
        detail::parallel_for(dists.size(), options.workers, [&](std::size_t k) {
          const TransportPlan plan =
              sinkhorn_solve(dists[k], target, kernel, options.sinkhorn);
          scores[k] = path_map(plan, cost, options.path_norm);
          diag.transport[k] = {dists[k].class_index, plan.row_error,
                               plan.col_error, plan.numerical_warning};
        });
      });
      break;
    }
    case Mode::max_velocity: {
      const TransitionMatrix t = timer.run("attention", [&] {
        options.velocity.validate();
        const CostMatrix fused = fuse_attention(inputs.attention, grid);
        return ipf_balance(fused.c, options.velocity.ipf_iterations);
      });
      diag.ipf_row_residual = t.row_residual;
      diag.ipf_col_residual = t.col_residual;
      std::vector<std::vector<int>> steps(dists.size());
      timer.run("discrepancy", [&] {
        detail::parallel_for(dists.size(), options.workers, [&](std::size_t k) {
          VelocityResult v = convergence_velocity(dists[k], t, options.velocity);
          scores[k] = velocity_discrepancy(v, options.velocity_map);
          steps[k] = std::move(v.steps);
        });
      });
      for (const auto& s : steps) {
        for (int l : s) ++diag.step_histogram[l];
      }
      break;
    }
    case Mode::kl: {
      timer.run("discrepancy", [&] {
        detail::parallel_for(dists.size(), options.workers, [&](std::size_t k) {
          scores[k] = kl_pointwise_map(dists[k], target, options.kl_direction);
        });
      });
      break;
    }
  }

  std::vector<Matrix> low(dists.size());
  for (std::size_t k = 0; k < dists.size(); ++k) {
    low[k] = to_patch_grid(scores[k], grid);
    result.patch_maps.push_back({dists[k].class_index, low[k]});
  }

  JbuResult up = timer.run("upsample", [&] {
    return jbu_upsample(low, inputs.guide, options.jbu);
  });
  diag.jbu_fallback_pixels = up.fallback_pixels;

  result.labels = timer.run("assemble", [&] {
    std::vector<DiscrepancyMap> maps;
    maps.reserve(up.maps.size());
    for (std::size_t k = 0; k < up.maps.size(); ++k) {
      maps.push_back({dists[k].class_index, std::move(up.maps[k])});
    }
    return assemble(maps);
  });
  return result;
}

// ---------------------------------------------------------------------------

AttentionSource parse_attention_source(std::string_view text) {
  const auto first = text.find(':');
  const auto second =
      first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw ParameterError("attention source must be TAG:WEIGHT:FILE, got '" +
                         std::string(text) + "'");
  }
  AttentionSource src;
  src.tag = std::string(text.substr(0, first));
  const std::string weight(text.substr(first + 1, second - first - 1));
  src.path = std::string(text.substr(second + 1));
  if (src.tag.empty() || src.path.empty()) {
    throw ParameterError("attention source needs a tag and a file: '" +
                         std::string(text) + "'");
  }
  if (weight.empty()) {
    const auto w = default_block_weight(src.tag);
    if (!w) {
      throw ParameterError("no default weight for attention tag '" + src.tag +
                           "'; give TAG:WEIGHT:FILE");
    }
    src.weight = *w;
  } else {
    std::size_t used = 0;
    try {
      src.weight = std::stod(weight, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != weight.size() || !(src.weight >= 0.0) ||
        !std::isfinite(src.weight)) {
      throw ParameterError("bad attention weight '" + weight + "'");
    }
  }
  return src;
}

void RunConfig::validate() const {
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ParameterError(std::string("missing ") + what);
    if (!std::filesystem::exists(p)) {
      throw IoError(std::string(what) + " not found: " + p.string());
    }
  };
  require(logits_path, "logits file");
  require(classes_path, "class list");
  require(guide_path, "guide image");
  if (out_prefix.empty()) throw ParameterError("missing output prefix");
  if (engine.mode != Mode::kl && attention.empty()) {
    throw ParameterError("optimal_path and max_velocity need --attn inputs");
  }
  for (const auto& a : attention) require(a.path, "attention file");
  if (palette_path) require(*palette_path, "palette");
  if (engine.workers == 0) throw ParameterError("workers must be >= 1");
}

std::vector<std::string> read_class_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class list " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  if (names.empty()) throw FormatError("class list is empty");
  return names;
}

Grid infer_grid(std::size_t n, double aspect) {
  if (n == 0) throw ShapeError("cannot lay out zero patches");
  Grid best{n, 1};
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t h = 1; h <= n; ++h) {
    if (n % h != 0) continue;
    const std::size_t w = n / h;
    // Differences of logs keep h x w and w x h exactly symmetric, so square
    // aspect ties resolve to the first (widest) layout.
    const double err = std::abs(std::log(static_cast<double>(h)) -
                                std::log(static_cast<double>(w)) -
                                std::log(aspect));
    if (err < best_err) {
      best_err = err;
      best = {h, w};
    }
  }
  return best;
}

SegmentationInputs load_inputs(const RunConfig& cfg) {
  cfg.validate();
  SegmentationInputs in;
  in.guide = read_guide_image(cfg.guide_path);
  const double aspect = static_cast<double>(in.guide.height) /
                        static_cast<double>(in.guide.width);

  const DenseTensor logits = read_tensor(cfg.logits_path);
  if (logits.ndim() != 2) {
    throw ShapeError("logits tensor must have shape [N, N_c]");
  }
  const auto rows = static_cast<std::size_t>(logits.shape()[0]);
  const auto cols = static_cast<std::size_t>(logits.shape()[1]);
  in.logits.raw = Matrix(rows, cols, logits.to_f64());
  in.logits.class_names = read_class_names(cfg.classes_path);
  if (in.logits.class_names.size() != cols) {
    throw ShapeError(fmt::format("class list has {} names but logits have {} "
                                 "columns",
                                 in.logits.class_names.size(), cols));
  }
  in.logits.grid = cfg.grid ? *cfg.grid : infer_grid(rows, aspect);
  if (in.logits.grid.size() != rows) {
    throw ShapeError("--grid does not match the logits patch count");
  }

  const double grid_aspect = static_cast<double>(in.logits.grid.h) /
                             static_cast<double>(in.logits.grid.w);
  for (const auto& src : cfg.attention) {
    const DenseTensor t = read_tensor(src.path);
    std::size_t heads = 1;
    std::size_t nb = 0;
    if (t.ndim() == 3 && t.shape()[1] == t.shape()[2]) {
      heads = static_cast<std::size_t>(t.shape()[0]);
      nb = static_cast<std::size_t>(t.shape()[1]);
    } else if (t.ndim() == 2 && t.shape()[0] == t.shape()[1]) {
      nb = static_cast<std::size_t>(t.shape()[0]);
    } else {
      throw ShapeError("attention tensor " + src.path.string() +
                       " must have shape [H, N_b, N_b]");
    }
    const std::vector<double> values = t.to_f64();
    AttentionBlock block;
    block.tag = src.tag;
    block.weight = src.weight;
    block.grid = nb == rows ? in.logits.grid : infer_grid(nb, grid_aspect);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto begin = values.begin() + static_cast<std::ptrdiff_t>(h * nb * nb);
      block.heads.emplace_back(
          nb, nb, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(nb * nb)));
    }
    in.attention.blocks.push_back(std::move(block));
  }
  return in;
}

SegmentationResult run_segmentation(const RunConfig& cfg, RunOutputs* outputs) {
  SegmentationInputs inputs;
  std::optional<Palette> palette;
  try {
    inputs = load_inputs(cfg);
    if (cfg.palette_path) palette = read_palette(*cfg.palette_path);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("load", e.what());
  }

  SegmentationResult result = segment(inputs, cfg.engine);

  RunOutputs out;
  const std::string prefix = cfg.out_prefix.string();
  out.labels = prefix + ".pgm";
  out.report = prefix + ".report.txt";
  try {
    if (cfg.out_prefix.has_parent_path()) {
      std::filesystem::create_directories(cfg.out_prefix.parent_path());
    }
    write_label_map(result.labels, out.labels, palette);
    if (palette) out.color = prefix + ".ppm";
    if (cfg.debug_dumps) {
      for (const auto& m : result.patch_maps) {
        std::filesystem::path p = fmt::format("{}.class{}.ddt", prefix, m.class_index);
        write_tensor(DenseTensor::from_f64({m.values.rows(), m.values.cols()},
                                           m.values.values()),
                     p);
        out.dumps.push_back(std::move(p));
      }
    }
    emit_run_report(cfg.engine, result.diagnostics, out.report,
                    cfg.report_timings);
  } catch (const Error& e) {
    throw StageError("write", e.what());
  }
  if (outputs) *outputs = std::move(out);
  return result;
}

std::string format_run_report(const EngineOptions& options,
                              const Diagnostics& d, bool include_timings) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out, "mode: {}\n", mode_name(d.mode));
  fmt::format_to(out, "patch_grid: {}x{}\n", d.grid.h, d.grid.w);
  fmt::format_to(out, "output_size: {}x{}\n", d.height, d.width);
  fmt::format_to(out, "classes: {}\n", d.class_count);
  fmt::format_to(out, "candidates: {}\n", join(d.candidates));
  fmt::format_to(out, "dropped_classes: {}\n", join(d.dropped));
  fmt::format_to(out, "nms_threshold: {}\n", options.nms_threshold);

  if (d.mode == Mode::optimal_path) {
    double worst = 0.0;
    std::size_t warnings = 0;
    for (const auto& t : d.transport) {
      worst = std::max({worst, t.row_error, t.col_error});
      warnings += t.numerical_warning ? 1 : 0;
    }
    fmt::format_to(out, "\n[optimal_path]\n");
    fmt::format_to(out, "epsilon: {}\n", options.sinkhorn.epsilon);
    fmt::format_to(out, "sinkhorn_iterations: {}\n", options.sinkhorn.iterations);
    fmt::format_to(out, "cost: {}\n", to_string(options.cost));
    fmt::format_to(out, "path_norm: {}\n", to_string(options.path_norm));
    fmt::format_to(out, "max_marginal_error: {:.6e}\n", worst);
    fmt::format_to(out, "numerical_warnings: {}\n", warnings);
    for (const auto& t : d.transport) {
      fmt::format_to(out, "class {}: row_error={:.6e} col_error={:.6e} warning={}\n",
                     t.class_index, t.row_error, t.col_error,
                     t.numerical_warning ? "yes" : "no");
    }
  }

  if (d.mode == Mode::max_velocity) {
    fmt::format_to(out, "\n[max_velocity]\n");
    fmt::format_to(out, "ipf_iterations: {}\n", options.velocity.ipf_iterations);
    fmt::format_to(out, "ipf_row_residual: {:.6e}\n", d.ipf_row_residual.value_or(0.0));
    fmt::format_to(out, "ipf_col_residual: {:.6e}\n", d.ipf_col_residual.value_or(0.0));
    fmt::format_to(out, "tau: {}\n", options.velocity.tau);
    fmt::format_to(out, "variation_scale: {}\n", to_string(options.velocity.scale));
    fmt::format_to(out, "velocity_map: {}\n", to_string(options.velocity_map));
    fmt::format_to(out, "max_steps: {}\n", options.velocity.max_steps);
    fmt::format_to(out, "convergence_step_histogram:\n");
    for (const auto& [l, count] : d.step_histogram) {
      fmt::format_to(out, "  l={}: {}\n", l, count);
    }
  }

  if (d.mode == Mode::kl) {
    fmt::format_to(out, "\n[kl]\n");
    fmt::format_to(out, "direction: {}\n", to_string(options.kl_direction));
  }

  fmt::format_to(out, "\n[upsample]\n");
  fmt::format_to(out, "sigma_s2: {}\n", options.jbu.sigma_s_sq);
  fmt::format_to(out, "sigma_r2: {}\n", options.jbu.sigma_r_sq);
  fmt::format_to(out, "window_radius: {}\n", options.jbu.window_radius);
  fmt::format_to(out, "jbu_fallback_pixels: {}\n", d.jbu_fallback_pixels);

  if (include_timings) {
    fmt::format_to(out, "\n[timing]\n");
    for (const auto& [stage, seconds] : d.stage_seconds) {
      fmt::format_to(out, "{}: {:.6f} s\n", stage, seconds);
    }
  }
  return fmt::to_string(buf);
}

void emit_run_report(const EngineOptions& options, const Diagnostics& d,
                     const std::filesystem::path& path, bool include_timings) {
  const std::string text = format_run_report(options, d, include_timings);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open report " + path.string());
  out << text;
  if (!out) throw IoError("error writing report " + path.string());
}

}  // namespace ddseg
