#include <doctest.h>

#include <filesystem>

#include "cardioreg/error.hpp"
#include "cardioreg/pipeline.hpp"
#include "cardioreg/seqio.hpp"
#include "helpers.hpp"

using namespace cardioreg;
namespace fs = std::filesystem;

namespace {

/// Small synthetic dataset shared by the command tests.
const fs::path& dataset() {
  static const fs::path dir = [] {
    auto d = testing::temp_dir("pipeline_data");
    pipeline::SynthOptions o;
    o.out_dir = d;
    o.references = 3;
    o.sequences = 2;
    o.frames = 10;
    o.seed = 11;
    (void)pipeline::cmd_synth(o);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth writes the dataset layout") {
  const auto& d = dataset();
  CHECK(fs::is_regular_file(d / pipeline::kModelName));
  CHECK(seqio::find_sequences(d / "reference").size() == 3);
  CHECK(seqio::find_sequences(d / "clean").size() == 2);
  CHECK(seqio::find_sequences(d / "corrupted").size() == 2);
  for (const char* f : {pipeline::kThresholdsImage, pipeline::kThresholdsLatent, pipeline::kStatsImage, pipeline::kStatsLatent})
    CHECK(fs::is_regular_file(d / "calibration" / f));
  CHECK(fs::is_regular_file(d / "corrupted" / "seq_0000" / "corruptions.json"));
  CHECK(seqio::load_sequence(d / "clean" / "seq_0001").length() == 10);
}

TEST_CASE("calibrate reproduces the synthesized calibration") {
  const auto& d = dataset();
  pipeline::CalibrateOptions o;
  o.reference_dir = d / "reference";
  o.out_dir = testing::temp_dir("pipeline_cal");
  o.model_path = d / pipeline::kModelName;
  const auto j = pipeline::cmd_calibrate(o);
  CHECK(j["references"] == 3);
  const auto a = pipeline::read_calibration(o.out_dir);
  const auto b = pipeline::read_calibration(d / "calibration");
  for (auto attr : kAllAttributes) {
    CHECK(a.tau_image.at(attr) == doctest::Approx(b.tau_image.at(attr)));
    CHECK(a.tau_latent.at(attr) == doctest::Approx(b.tau_latent.at(attr)));
  }
  CHECK_THROWS_AS(pipeline::read_calibration(testing::temp_dir("pipeline_empty")), Error);
}

TEST_CASE("check, regularize, baseline and evaluate") {
  const auto& d = dataset();
  pipeline::CheckOptions chk;
  chk.input = d / "clean";
  chk.calibration_dir = d / "calibration";
  auto j = pipeline::cmd_check(chk);
  CHECK(j["sequences"] == 2);
  chk.domain = Domain::latent;
  j = pipeline::cmd_check(chk);
  CHECK(j["domain"] == "latent");
  CHECK(j["reports"].size() == 2);

  const auto out = testing::temp_dir("pipeline_reg");
  pipeline::RegularizeOptions reg;
  reg.input = d / "corrupted";
  reg.output = out / "a";
  reg.model_path = d / pipeline::kModelName;
  reg.calibration_dir = d / "calibration";
  j = pipeline::cmd_regularize(reg);
  REQUIRE(j["sequences"].size() == 2);
  CHECK(fs::is_regular_file(out / "a" / "seq_0000" / seqio::kLatentName));
  for (const auto& row : j["sequences"]) {
    CHECK(row["repair_rounds"].get<int>() >= 0);
    CHECK(row["repair_rounds"].get<int>() <= pipeline::kRepairRounds);
  }

  // deterministic across runs and thread counts
  reg.output = out / "b";
  reg.jobs = 2;
  (void)pipeline::cmd_regularize(reg);
  for (const char* s : {"seq_0000", "seq_0001"}) {
    const auto x = seqio::load_sequence(out / "a" / s);
    const auto y = seqio::load_sequence(out / "b" / s);
    CHECK(x.frames == y.frames);
  }

  pipeline::BaselineOptions base;
  base.input = d / "corrupted";
  base.output = out / "gauss";
  CHECK(pipeline::cmd_baseline(base)["sequences"] == 2);

  pipeline::EvaluateOptions ev;
  ev.pred = out / "a";
  ev.gt = d / "clean";
  ev.calibration_dir = d / "calibration";
  ev.out_dir = out / "eval";
  j = pipeline::cmd_evaluate(ev);
  CHECK(j["sequences"] == 2);
  CHECK(j["mean_dice_lv"].get<double>() > 0.8);
  CHECK(fs::is_regular_file(out / "eval" / "summary.json"));
  CHECK(fs::is_regular_file(out / "eval" / "seq_0000" / "frames.csv"));

  ev.gt = out / "nowhere";
  CHECK_THROWS_AS(pipeline::cmd_evaluate(ev), Error);
}

TEST_CASE("regularize on latent tables") {
  const auto& d = dataset();
  const auto out = testing::temp_dir("pipeline_latent");
  pipeline::RegularizeOptions reg;
  reg.codec = pipeline::CodecChoice::external;
  reg.calibration_dir = d / "calibration";
  reg.latent_in = d / "clean" / "seq_0000" / seqio::kLatentName;
  reg.latent_out = out / "z.csv";
  const auto j = pipeline::cmd_regularize(reg);
  CHECK(j["sequences"][0]["consistent_after"] == true);
  const auto before = seqio::read_latent_table(*reg.latent_in);
  const auto after = seqio::read_latent_table(*reg.latent_out);
  CHECK(after.length() == before.length());

  reg.latent_out.reset();
  CHECK_THROWS_AS(pipeline::cmd_regularize(reg), Error);
}

TEST_CASE("regularize needs a model file") {
  const auto& d = dataset();
  pipeline::RegularizeOptions reg;
  reg.input = d / "corrupted";
  reg.output = testing::temp_dir("pipeline_nomodel");
  reg.calibration_dir = d / "calibration";
  try {
    (void)pipeline::cmd_regularize(reg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
  }
  reg.config.target_fraction = 0.0;
  CHECK_THROWS_AS(pipeline::cmd_regularize(reg), Error);
}

TEST_CASE("plot writes one SVG per attribute") {
  const auto& d = dataset();
  pipeline::PlotOptions o;
  o.inputs = {{"clean", d / "clean" / "seq_0000"}, {"corrupted", d / "corrupted" / "seq_0000"}};
  o.out_dir = testing::temp_dir("pipeline_plot");
  o.stats_path = d / "calibration" / pipeline::kStatsImage;
  const auto j = pipeline::cmd_plot(o);
  CHECK(j["files"].size() >= static_cast<std::size_t>(kNumAttributes));
  for (const auto& f : j["files"]) CHECK(fs::file_size(f.get<std::string>()) > 0);
  CHECK_THROWS_AS(pipeline::cmd_plot({}), Error);
}

TEST_CASE("sequence jobs mirror the input tree") {
  const auto& d = dataset();
  const auto jobs = pipeline::sequence_jobs(d / "clean", "/out");
  REQUIRE(jobs.size() == 2);
  CHECK(jobs[1].second == fs::path("/out/seq_0001"));
  CHECK(pipeline::sequence_jobs(d / "clean" / "seq_0000", "/x").size() == 1);
  CHECK_THROWS_AS(pipeline::sequence_jobs(testing::temp_dir("pipeline_none"), "/x"), Error);
}

TEST_CASE("parallel_for rethrows") {
  std::vector<int> hit(20, 0);
  pipeline::parallel_for(hit.size(), 3, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(pipeline::parallel_for(5, 2, [](std::size_t i) {
                    if (i == 3) throw Error(ErrorCode::io, "boom");
                  }),
                  Error);
}
