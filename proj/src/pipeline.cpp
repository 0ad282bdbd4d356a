#include "cardioreg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "cardioreg/error.hpp"
#include "cardioreg/metrics.hpp"
#include "cardioreg/seqio.hpp"
#include "cardioreg/svg_plot.hpp"
#include "cardioreg/synth.hpp"

namespace cardioreg::pipeline {

namespace {

std::vector<AttributeSeries> flatten(std::span<const std::vector<AttributeSeries>> sets) {
  std::vector<AttributeSeries> out;
  for (const auto& s : sets) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<AttributeSeries> normalized(std::span<const AttributeSeries> raw, const attributes::NormalizationStats& st) {
  std::vector<AttributeSeries> out;
  out.reserve(raw.size());
  for (const auto& s : raw) out.push_back(attributes::normalize_series(s, st));
  return out;
}

constexpr std::uint64_t kCorruptionAttempts = 20;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream * 1000003ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string sequence_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d", prefix, i);
  return buf;
}

codec::CodecModel load_model(const std::optional<fs::path>& path) {
  if (!path) throw Error(ErrorCode::config, "a codec model file is required (--model)");
  return codec::read_model(*path);
}

std::vector<SegSequence> load_all(const std::vector<fs::path>& dirs, int jobs) {
  std::vector<SegSequence> out(dirs.size());
  parallel_for(dirs.size(), jobs, [&](std::size_t i) { out[i] = seqio::load_sequence(dirs[i]); });
  return out;
}

json report_summary(const consistency::ConsistencyReport& r) { return json::parse(consistency::report_json(r)); }

}  // namespace

Calibration calibrate(std::span<const std::vector<AttributeSeries>> image_series,
                      std::span<const std::vector<AttributeSeries>> latent_series, double safety) {
  Calibration c;
  const auto img = flatten(image_series);
  c.stats_image = attributes::compute_stats(img);
  c.tau_image = consistency::calibrate_thresholds(normalized(img, c.stats_image), safety);
  const auto lat = flatten(latent_series);
  c.stats_latent = attributes::compute_stats(lat);
  c.tau_latent = consistency::calibrate_thresholds(normalized(lat, c.stats_latent), safety);
  return c;
}

Calibration calibrate_sequences(std::span<const SegSequence> references, const codec::CodecModel& model,
                                double safety, int jobs) {
  if (references.empty()) throw Error(ErrorCode::empty_input, "calibration needs reference sequences");
  const std::size_t n = references.size();
  std::vector<std::vector<AttributeSeries>> img(2 * n);
  std::vector<std::vector<AttributeSeries>> lat(2 * n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto m = model_for(model, references[i]);
    const auto traj = codec::encode_sequence(references[i], m);
    img[i] = attributes::extract_series(references[i]);
    img[n + i] = attributes::extract_series(codec::decode_sequence(traj, m));
    lat[i] = latent_series(traj);
    // encode copies the measured attributes, so the reconstruction's codes
    // carry exactly its image attributes
    lat[n + i] = img[n + i];
    for (auto& s : lat[n + i]) s.domain = Domain::latent;
  });
  return calibrate(img, lat, safety);
}

void write_calibration(const Calibration& c, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  consistency::write_thresholds(c.tau_image, dir / kThresholdsImage);
  consistency::write_thresholds(c.tau_latent, dir / kThresholdsLatent);
  attributes::write_stats(c.stats_image, dir / kStatsImage);
  attributes::write_stats(c.stats_latent, dir / kStatsLatent);
}

Calibration read_calibration(const fs::path& dir) {
  for (const char* name : {kThresholdsImage, kThresholdsLatent, kStatsImage, kStatsLatent})
    if (!fs::is_regular_file(dir / name)) throw Error(ErrorCode::config, "missing calibration file " + (dir / name).string());
  Calibration c;
  c.tau_image = consistency::read_thresholds(dir / kThresholdsImage);
  c.tau_latent = consistency::read_thresholds(dir / kThresholdsLatent);
  c.stats_image = attributes::read_stats(dir / kStatsImage, Domain::image);
  c.stats_latent = attributes::read_stats(dir / kStatsLatent, Domain::latent);
  return c;
}

std::array<double, kNumAttributes> raw_thresholds(const Calibration& c) {
  std::array<double, kNumAttributes> out{};
  for (auto a : kAllAttributes) {
    const auto& r = c.stats_image[a];
    if (!r) throw Error(ErrorCode::missing_threshold, std::string("no stats for ") + std::string(attribute_name(a)));
    out[static_cast<std::size_t>(index_of(a))] = c.tau_image.at(a) * (r->max - r->min);
  }
  return out;
}

codec::CodecModel model_for(const codec::CodecModel& base, const SegSequence& seq) {
  if (seq.frames.empty()) throw Error(ErrorCode::empty_input, "sequence has no frames");
  validate_uniform_geometry(seq);
  codec::CodecModel m = base;
  m.width = seq.frames.front().width();
  m.height = seq.frames.front().height();
  m.spacing = seq.frames.front().spacing();
  return m;
}

std::vector<AttributeSeries> latent_series(const LatentTrajectory& traj) {
  std::vector<AttributeSeries> out;
  for (auto a : kAllAttributes) {
    AttributeSeries s;
    s.attribute = a;
    s.domain = Domain::latent;
    s.values = traj.column(index_of(a));
    out.push_back(std::move(s));
  }
  return out;
}

consistency::ConsistencyReport check_image(const SegSequence& seq, const Calibration& c) {
  return consistency::check(attributes::extract_series(seq), c.stats_image, c.tau_image);
}

consistency::ConsistencyReport check_latent(const LatentTrajectory& traj, const Calibration& c) {
  return consistency::check(latent_series(traj), c.stats_latent, c.tau_latent);
}

namespace {

/// Largest |laplacian| / tau over all attributes at frames t-1..t+1.
double local_cost(const std::vector<std::vector<double>>& norm, const Calibration& c, std::size_t t) {
  const std::size_t n = norm.front().size();
  double cost = 0.0;
  for (auto a : kAllAttributes) {
    const auto& s = norm[static_cast<std::size_t>(index_of(a))];
    for (std::size_t u = t == 0 ? 0 : t - 1; u <= std::min(t + 1, n - 1); ++u) {
      const double prev = s[u == 0 ? 0 : u - 1];
      const double next = s[std::min(u + 1, n - 1)];
      cost = std::max(cost, std::abs(prev + next - 2.0 * s[u]) / c.tau_image.at(a));
    }
  }
  return cost;
}

/// Re-decodes the frames around image-domain flags from every search start
/// and keeps, frame by frame, the raster with the lowest local cost. The
/// latent trajectory is not changed.
void redecode_flagged(SegSequence& out, const LatentTrajectory& z, const codec::CodecModel& m, const Calibration& c) {
  const auto report = check_image(out, c);
  if (!report.any_inconsistent) return;
  const std::size_t n = out.frames.size();
  std::vector<bool> near(n, false);
  for (const auto& ar : report.attributes)
    for (std::size_t t = 0; t < n; ++t)
      if (ar.flags[t])
        for (std::size_t u = t == 0 ? 0 : t - 1; u <= std::min(t + 1, n - 1); ++u) near[u] = true;

  std::vector<std::vector<double>> norm;
  for (const auto& s : attributes::extract_series(out))
    norm.push_back(attributes::normalize_values(s.values, s.attribute, c.stats_image));
  for (std::size_t t = 0; t < n; ++t) {
    if (!near[t]) continue;
    double best = local_cost(norm, c, t);
    for (int k = 1; k < codec::kDecodeStarts; ++k) {
      LabelMap cand;
      AttributeVector got;
      try {
        cand = codec::decode_from(z[t], m, k);
        got = attributes::extract_attributes(cand);
      } catch (const Error&) {
        continue;
      }
      std::array<double, kNumAttributes> saved{};
      for (auto a : kAllAttributes) {
        const auto j = static_cast<std::size_t>(index_of(a));
        saved[j] = norm[j][t];
        norm[j][t] = attributes::normalize_values(std::span<const double>(&got.values[j], 1), a, c.stats_image)[0];
      }
      const double cost = local_cost(norm, c, t);
      if (cost < best) {
        best = cost;
        out.frames[t] = std::move(cand);
      } else {
        for (std::size_t j = 0; j < saved.size(); ++j) norm[j][t] = saved[j];
      }
    }
  }
}

}  // namespace

RegularizeResult regularize_sequence(const SegSequence& seq, const codec::CodecModel& model, const Calibration& c,
                                     const regularizer::RegularizerConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto m = model_for(model, seq);
  RegularizeResult r;
  r.latent_in = codec::encode_sequence(seq, m);
  r.latent_out = regularizer::regularize_trajectory(r.latent_in, c.tau_latent, c.stats_latent, cfg, &r.diagnostics);
  r.output = codec::decode_sequence(r.latent_out, m, seq.patient_id);
  redecode_flagged(r.output, r.latent_out, m, c);
  for (; r.repair_rounds < kRepairRounds; ++r.repair_rounds) {
    const auto report = check_image(r.output, c);
    if (!report.any_inconsistent) break;
    for (const auto& ar : report.attributes) {
      if (ar.flagged_frames == 0) continue;
      const int j = index_of(ar.attribute);
      const auto s = attributes::normalize_values(r.latent_out.column(j), ar.attribute, c.stats_latent);
      double peak = 0.0;
      for (double v : consistency::laplacian(s)) peak = std::max(peak, std::abs(v));
      if (peak <= 0.0) continue;
      auto res = regularizer::smooth_constrained(s, kRepairShrink * std::min(peak, c.tau_latent.at(ar.attribute)), cfg);
      r.latent_out.set_column(j, attributes::denormalize_values(res.values, ar.attribute, c.stats_latent));
      auto& d = r.diagnostics.attributes[static_cast<std::size_t>(j)];
      d.lambda += res.lambda;
      d.skipped = false;
    }
    r.output = codec::decode_sequence(r.latent_out, m, seq.patient_id);
    redecode_flagged(r.output, r.latent_out, m, c);
  }
  r.output.frame_period_s = seq.frame_period_s;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex guard;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::vector<std::pair<fs::path, fs::path>> sequence_jobs(const fs::path& input, const fs::path& output) {
  std::vector<std::pair<fs::path, fs::path>> out;
  if (seqio::is_sequence_dir(input)) {
    out.emplace_back(input, output);
    return out;
  }
  const auto dirs = seqio::find_sequences(input);
  if (dirs.empty()) throw Error(ErrorCode::empty_input, "no sequences under " + input.string());
  for (const auto& d : dirs) out.emplace_back(d, output / fs::relative(d, input));
  return out;
}

json cmd_synth(const SynthOptions& o) {
  if (o.sequences < 0 || o.references < 1) throw Error(ErrorCode::config, "need at least one reference sequence");
  o.model.validate();
  codec::write_model(o.model, o.out_dir / kModelName);

  std::vector<SegSequence> refs(static_cast<std::size_t>(o.references));
  parallel_for(refs.size(), o.jobs, [&](std::size_t i) {
    auto p = synth::random_cycle_params(mix_seed(o.seed, 1, i), o.frames);
    p.model = o.model;
    refs[i] = synth::gen_cycle(p).sequence;
    refs[i].patient_id = sequence_name("ref", static_cast<int>(i));
    seqio::save_sequence(refs[i], o.out_dir / "reference" / refs[i].patient_id);
  });
  const auto cal = calibrate_sequences(refs, o.model, o.safety, o.jobs);
  write_calibration(cal, o.out_dir / "calibration");
  const auto raw_tau = raw_thresholds(cal);

  parallel_for(static_cast<std::size_t>(o.sequences), o.jobs, [&](std::size_t i) {
    const auto name = sequence_name("seq", static_cast<int>(i));
    auto p = synth::random_cycle_params(mix_seed(o.seed, 2, i), o.frames);
    p.model = o.model;
    auto cycle = synth::gen_cycle(p);
    cycle.sequence.patient_id = name;
    const auto clean_dir = o.out_dir / "clean" / name;
    seqio::save_sequence(cycle.sequence, clean_dir);
    seqio::write_series_table(cycle.attributes, clean_dir / seqio::kAttributesName);
    seqio::write_latent_table(cycle.latents, clean_dir / seqio::kLatentName);

    // a spike can ask for a shape the codec cannot draw; such plans are redrawn
    std::vector<synth::CorruptionSpec> plan;
    SegSequence bad;
    for (std::uint64_t attempt = 0;; ++attempt) {
      plan = synth::random_corruptions(mix_seed(o.seed, 3 + 1000 * attempt, i), o.frames, raw_tau);
      try {
        bad = synth::apply_corruptions(cycle.sequence, plan, o.model);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::decode || attempt + 1 == kCorruptionAttempts) throw;
      }
    }
    const auto bad_dir = o.out_dir / "corrupted" / name;
    seqio::save_sequence(bad, bad_dir);
    json specs = json::array();
    for (const auto& s : plan) {
      specs.push_back({{"kind", std::string(synth::corruption_name(s.kind))},
                       {"magnitude", s.magnitude},
                       {"attribute", std::string(attribute_name(s.attribute))},
                       {"frames", s.frames},
                       {"shift", {s.shift_dx, s.shift_dy}},
                       {"seed", s.seed}});
    }
    seqio::write_text_file(bad_dir / "corruptions.json", specs.dump(2) + "\n");
  });

  json j;
  j["out_dir"] = o.out_dir.string();
  j["references"] = o.references;
  j["sequences"] = o.sequences;
  j["frames"] = o.frames;
  j["seed"] = o.seed;
  return j;
}

json cmd_calibrate(const CalibrateOptions& o) {
  const auto model = o.model_path ? codec::read_model(*o.model_path) : codec::CodecModel{};
  const auto refs = load_all(seqio::find_sequences(o.reference_dir), o.jobs);
  if (refs.empty()) throw Error(ErrorCode::empty_input, "no reference sequences under " + o.reference_dir.string());
  const auto cal = calibrate_sequences(refs, model, o.safety, o.jobs);
  write_calibration(cal, o.out_dir);
  json j;
  j["references"] = refs.size();
  json tau = json::object();
  for (auto a : kAllAttributes)
    tau[std::string(attribute_name(a))] = {{"image", cal.tau_image.at(a)}, {"latent", cal.tau_latent.at(a)}};
  j["tau"] = tau;
  j["out_dir"] = o.out_dir.string();
  return j;
}

json cmd_check(const CheckOptions& o) {
  const auto cal = read_calibration(o.calibration_dir);
  const auto jobs = sequence_jobs(o.input, o.out_dir.value_or(fs::path{}));
  std::vector<consistency::ConsistencyReport> reports(jobs.size());
  parallel_for(jobs.size(), o.jobs, [&](std::size_t i) {
    const auto& dir = jobs[i].first;
    if (o.domain == Domain::latent) {
      reports[i] = check_latent(seqio::read_latent_table(dir / seqio::kLatentName), cal);
    } else {
      reports[i] = check_image(seqio::load_sequence(dir), cal);
    }
    if (o.out_dir) {
      seqio::write_text_file(jobs[i].second / "consistency.json", consistency::report_json(reports[i]) + "\n");
      consistency::write_flags_csv(reports[i], jobs[i].second / "flags.csv");
    }
  });
  json j;
  j["domain"] = std::string(domain_name(o.domain));
  std::size_t inconsistent = 0;
  json seqs = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    inconsistent += reports[i].any_inconsistent ? 1 : 0;
    auto r = report_summary(reports[i]);
    r["sequence"] = jobs[i].first.string();
    seqs.push_back(r);
  }
  j["sequences"] = jobs.size();
  j["inconsistent"] = inconsistent;
  j["reports"] = seqs;
  return j;
}

json cmd_regularize(const RegularizeOptions& o) {
  o.config.validate();
  const auto cal = read_calibration(o.calibration_dir);
  json j;
  j["codec"] = o.codec == CodecChoice::reference ? "reference" : "external";
  json seqs = json::array();

  if (o.codec == CodecChoice::external) {
    std::vector<std::pair<fs::path, fs::path>> files;
    if (o.latent_in) {
      if (!o.latent_out) throw Error(ErrorCode::config, "--latent-out is required with --latent-in");
      files.emplace_back(*o.latent_in, *o.latent_out);
    } else {
      for (const auto& [in, out] : sequence_jobs(o.input, o.output))
        files.emplace_back(in / seqio::kLatentName, out / seqio::kLatentName);
    }
    std::vector<json> rows(files.size());
    parallel_for(files.size(), o.jobs, [&](std::size_t i) {
      const auto start = std::chrono::steady_clock::now();
      if (!fs::is_regular_file(files[i].first)) throw Error(ErrorCode::config, "missing latent table " + files[i].first.string());
      const auto traj = seqio::read_latent_table(files[i].first);
      regularizer::TrajectoryDiagnostics diag;
      const auto out = regularizer::regularize_trajectory(traj, cal.tau_latent, cal.stats_latent, o.config, &diag);
      seqio::write_latent_table(out, files[i].second);
      rows[i] = {{"input", files[i].first.string()},
                 {"output", files[i].second.string()},
                 {"frames", traj.length()},
                 {"feasible", diag.all_feasible},
                 {"consistent_after", !check_latent(out, cal).any_inconsistent},
                 {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    });
    for (auto& r : rows) seqs.push_back(std::move(r));
    j["sequences"] = seqs;
    return j;
  }

  const auto model = load_model(o.model_path);
  const auto jobs = sequence_jobs(o.input, o.output);
  std::vector<json> rows(jobs.size());
  parallel_for(jobs.size(), o.jobs, [&](std::size_t i) {
    const auto seq = seqio::load_sequence(jobs[i].first);
    const auto r = regularize_sequence(seq, model, cal, o.config);
    seqio::save_sequence(r.output, jobs[i].second);
    seqio::write_latent_table(r.latent_out, jobs[i].second / seqio::kLatentName);
    const auto after = check_image(r.output, cal);
    json lambdas = json::object();
    for (auto a : kAllAttributes) {
      const auto& d = r.diagnostics.attributes[static_cast<std::size_t>(index_of(a))];
      lambdas[std::string(attribute_name(a))] = d.skipped ? json(nullptr) : json(d.lambda);
    }
    rows[i] = {{"input", jobs[i].first.string()},
               {"output", jobs[i].second.string()},
               {"frames", seq.frames.size()},
               {"feasible", r.diagnostics.all_feasible},
               {"lambda", lambdas},
               {"repair_rounds", r.repair_rounds},
               {"consistent_after", !after.any_inconsistent},
               {"seconds", r.seconds}};
  });
  for (auto& r : rows) seqs.push_back(std::move(r));
  j["sequences"] = seqs;
  return j;
}

json cmd_baseline(const BaselineOptions& o) {
  const auto jobs = sequence_jobs(o.input, o.output);
  parallel_for(jobs.size(), o.jobs, [&](std::size_t i) {
    const auto seq = seqio::load_sequence(jobs[i].first);
    seqio::save_sequence(metrics::gaussian_baseline(seq, o.sigma), jobs[i].second);
  });
  json j;
  j["sequences"] = jobs.size();
  j["sigma"] = o.sigma ? json(*o.sigma) : json("T/20");
  return j;
}

json cmd_evaluate(const EvaluateOptions& o) {
  std::optional<Calibration> cal;
  if (o.calibration_dir) cal = read_calibration(*o.calibration_dir);
  const auto jobs = sequence_jobs(o.pred, o.gt);
  std::vector<metrics::Evaluation> evals(jobs.size());
  parallel_for(jobs.size(), o.jobs, [&](std::size_t i) {
    if (!seqio::is_sequence_dir(jobs[i].second))
      throw Error(ErrorCode::io, "no ground truth for " + jobs[i].first.string() + " at " + jobs[i].second.string());
    const auto pred = seqio::load_sequence(jobs[i].first);
    const auto gt = seqio::load_sequence(jobs[i].second);
    evals[i] = cal ? metrics::evaluate_pair(pred, gt, &cal->tau_image, &cal->stats_image) : metrics::evaluate_pair(pred, gt);
    if (o.out_dir) {
      const auto dir = seqio::is_sequence_dir(o.pred) ? *o.out_dir : *o.out_dir / fs::relative(jobs[i].first, o.pred);
      seqio::write_text_file(dir / "evaluation.json", metrics::evaluation_json(evals[i]) + "\n");
      metrics::write_frame_csv(evals[i], dir / "frames.csv");
    }
  });
  json j;
  json seqs = json::array();
  double dice_lv = 0.0;
  double hd_lv = 0.0;
  double ef_err = 0.0;
  std::size_t hd_count = 0;
  std::size_t anat = 0;
  std::size_t inconsistent = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto e = json::parse(metrics::evaluation_json(evals[i]));
    e["sequence"] = jobs[i].first.string();
    seqs.push_back(e);
    dice_lv += evals[i][metrics::Region::lv].mean_dice;
    if (evals[i][metrics::Region::lv].mean_hd_mm) {
      hd_lv += *evals[i][metrics::Region::lv].mean_hd_mm;
      ++hd_count;
    }
    ef_err += evals[i].ef_abs_error;
    anat += evals[i].anatomical_error_frames;
    if (evals[i].consistency && evals[i].consistency->any_inconsistent) ++inconsistent;
  }
  const double n = static_cast<double>(jobs.size());
  j["sequences"] = jobs.size();
  j["mean_dice_lv"] = dice_lv / n;
  j["mean_hd_lv_mm"] = hd_count ? json(hd_lv / static_cast<double>(hd_count)) : json(nullptr);
  j["mean_ef_abs_error"] = ef_err / n;
  j["anatomical_error_frames"] = anat;
  j["inconsistent_sequences"] = cal ? json(inconsistent) : json(nullptr);
  j["per_sequence"] = seqs;
  if (o.out_dir) seqio::write_text_file(*o.out_dir / "summary.json", j.dump(2) + "\n");
  return j;
}

json cmd_plot(const PlotOptions& o) {
  if (o.inputs.empty()) throw Error(ErrorCode::config, "nothing to plot");
  std::optional<attributes::NormalizationStats> stats;
  if (o.stats_path) stats = attributes::read_stats(*o.stats_path, Domain::image);
  std::vector<plot::SeriesSet> sets;
  for (const auto& [label, path] : o.inputs) {
    plot::SeriesSet set;
    set.label = label;
    if (fs::is_directory(path)) {
      set.series = attributes::extract_series(seqio::load_sequence(path));
    } else {
      set.series = seqio::read_series_table(path);
    }
    if (stats)
      for (auto& s : set.series) s = attributes::normalize_series(s, *stats);
    sets.push_back(std::move(set));
  }
  const auto files = plot::write_attribute_plots(sets, o.out_dir);
  json j;
  json list = json::array();
  for (const auto& f : files) list.push_back(f.string());
  j["files"] = list;
  return j;
}

}  // namespace cardioreg::pipeline
