#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cardioreg/error.hpp"
#include "cardioreg/pipeline.hpp"

namespace {

using namespace cardioreg;
using pipeline::json;

void print_text(const std::string& command, const json& j) {
  if (command == "synth") {
    std::cout << "wrote " << j["sequences"] << " sequences and " << j["references"] << " references to "
              << j["out_dir"].get<std::string>() << "\n";
  } else if (command == "calibrate") {
    std::cout << "calibrated on " << j["references"] << " reference sequences\n";
    for (const auto& [name, v] : j["tau"].items())
      std::cout << "  " << name << ": tau_image=" << v["image"] << " tau_latent=" << v["latent"] << "\n";
  } else if (command == "check") {
    for (const auto& r : j["reports"])
      std::cout << r["sequence"].get<std::string>() << ": "
                << (r["any_inconsistent"].get<bool>() ? "inconsistent" : "consistent") << " (" << r["flagged_frames"]
                << " flagged frames, ratio " << r["ratio_stat"] << ")\n";
    std::cout << j["inconsistent"] << "/" << j["sequences"] << " sequences inconsistent\n";
  } else if (command == "regularize") {
    for (const auto& r : j["sequences"]) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f s", r["seconds"].get<double>());
      std::cout << r["input"].get<std::string>() << " -> " << r["output"].get<std::string>() << ": " << buf
                << (r["consistent_after"].get<bool>() ? "" : " (still inconsistent)") << "\n";
    }
  } else if (command == "baseline") {
    std::cout << "filtered " << j["sequences"] << " sequences\n";
  } else if (command == "evaluate") {
    std::cout << "sequences: " << j["sequences"] << "\nmean Dice LV: " << j["mean_dice_lv"]
              << "\nmean HD LV (mm): " << j["mean_hd_lv_mm"] << "\nmean |EF error|: " << j["mean_ef_abs_error"]
              << "\nanatomical error frames: " << j["anatomical_error_frames"]
              << "\ninconsistent sequences: " << j["inconsistent_sequences"] << "\n";
  } else if (command == "plot") {
    for (const auto& f : j["files"]) std::cout << f.get<std::string>() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal regularization of cardiac segmentation sequences"};
  app.require_subcommand(1);
  int jobs = 1;
  bool as_json = false;
  std::uint64_t seed = 0;
  app.add_option("--jobs", jobs, "Sequences processed in parallel")->check(CLI::PositiveNumber);
  app.add_flag("--json", as_json, "Print a JSON summary on stdout");
  app.add_option("--seed", seed, "Random seed for synthesis");

  pipeline::SynthOptions synth_opt;
  std::string model_in;
  auto* synth = app.add_subcommand("synth", "Generate clean, corrupted and reference synthetic cycles");
  synth->add_option("out", synth_opt.out_dir, "Dataset directory")->required();
  synth->add_option("--sequences", synth_opt.sequences, "Test sequences")->check(CLI::NonNegativeNumber);
  synth->add_option("--references", synth_opt.references, "Calibration reference sequences")->check(CLI::PositiveNumber);
  synth->add_option("--frames", synth_opt.frames, "Frames per cycle")->check(CLI::Range(8, 100000));
  synth->add_option("--safety", synth_opt.safety, "Threshold safety factor");
  synth->add_option("--model", model_in, "Codec model JSON (default geometry when omitted)");

  pipeline::CalibrateOptions cal_opt;
  std::string cal_model;
  auto* calibrate = app.add_subcommand("calibrate", "Thresholds and normalization stats from reference sequences");
  calibrate->add_option("reference", cal_opt.reference_dir, "Reference sequence directory")->required();
  calibrate->add_option("-o,--out", cal_opt.out_dir, "Output directory")->required();
  calibrate->add_option("--model", cal_model, "Codec model JSON");
  calibrate->add_option("--safety", cal_opt.safety, "Threshold safety factor");

  pipeline::CheckOptions check_opt;
  std::string check_domain = "image";
  std::string check_out;
  auto* check = app.add_subcommand("check", "Consistency report of sequences");
  check->add_option("input", check_opt.input, "Sequence or directory of sequences")->required();
  check->add_option("-c,--calibration", check_opt.calibration_dir, "Calibration directory")->required();
  check->add_option("--domain", check_domain, "image or latent")->check(CLI::IsMember({"image", "latent"}));
  check->add_option("-o,--out", check_out, "Write per-sequence reports here");

  pipeline::RegularizeOptions reg_opt;
  std::string reg_model;
  std::string codec_choice = "reference";
  std::string latent_in;
  std::string latent_out;
  auto* regularize = app.add_subcommand("regularize", "Encode, regularize and decode sequences");
  regularize->add_option("input", reg_opt.input, "Sequence or directory of sequences");
  regularize->add_option("-o,--out", reg_opt.output, "Output directory");
  regularize->add_option("-c,--calibration", reg_opt.calibration_dir, "Calibration directory")->required();
  regularize->add_option("--model", reg_model, "Codec model JSON (reference codec)");
  regularize->add_option("--codec", codec_choice, "reference or external")->check(CLI::IsMember({"reference", "external"}));
  regularize->add_option("--latent-in", latent_in, "External codec: input latent table");
  regularize->add_option("--latent-out", latent_out, "External codec: output latent table");
  regularize->add_option("--lambda-residual", reg_opt.config.lambda_residual, "Penalty weight of residual dims");
  regularize->add_option("--search-updates", reg_opt.config.search_updates, "Bisection updates per attribute");
  regularize->add_option("--lambda-hi", reg_opt.config.lambda_hi, "Upper end of the lambda search");
  regularize->add_option("--inner-step", reg_opt.config.inner_step, "Inner step as a fraction of 1/Lipschitz");
  regularize->add_option("--inner-iters", reg_opt.config.inner_max_iters, "Inner iteration cap");
  regularize->add_option("--inner-tol", reg_opt.config.inner_grad_tol, "Inner gradient tolerance");
  regularize->add_option("--target-fraction", reg_opt.config.target_fraction,
                         "Flagged series are smoothed to this fraction of tau");

  pipeline::BaselineOptions base_opt;
  double sigma = -1.0;
  auto* baseline = app.add_subcommand("baseline", "Temporal Gaussian filter of label maps");
  baseline->add_option("input", base_opt.input, "Sequence or directory of sequences")->required();
  baseline->add_option("-o,--out", base_opt.output, "Output directory")->required();
  baseline->add_option("--sigma", sigma, "Gaussian sigma in frames (default T/20)")->check(CLI::NonNegativeNumber);

  pipeline::EvaluateOptions eval_opt;
  std::string eval_cal;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Compare predicted sequences against ground truth");
  evaluate->add_option("pred", eval_opt.pred, "Predicted sequence(s)")->required();
  evaluate->add_option("gt", eval_opt.gt, "Ground-truth sequence(s)")->required();
  evaluate->add_option("-c,--calibration", eval_cal, "Calibration directory for consistency reports");
  evaluate->add_option("-o,--out", eval_out, "Write JSON and per-frame CSV reports here");

  pipeline::PlotOptions plot_opt;
  std::vector<std::string> plot_inputs;
  std::string plot_stats;
  auto* plot = app.add_subcommand("plot", "SVG charts of attribute series");
  plot->add_option("inputs", plot_inputs, "label=path pairs (attributes.csv or sequence directory)")->required();
  plot->add_option("-o,--out", plot_opt.out_dir, "Output directory")->required();
  plot->add_option("--stats", plot_stats, "Normalize with these image-domain stats");

  CLI11_PARSE(app, argc, argv);

  try {
    json result;
    std::string command;
    if (*synth) {
      command = "synth";
      synth_opt.seed = seed;
      synth_opt.jobs = jobs;
      if (!model_in.empty()) synth_opt.model = codec::read_model(model_in);
      result = pipeline::cmd_synth(synth_opt);
    } else if (*calibrate) {
      command = "calibrate";
      cal_opt.jobs = jobs;
      if (!cal_model.empty()) cal_opt.model_path = cal_model;
      result = pipeline::cmd_calibrate(cal_opt);
    } else if (*check) {
      command = "check";
      check_opt.jobs = jobs;
      check_opt.domain = check_domain == "latent" ? Domain::latent : Domain::image;
      if (!check_out.empty()) check_opt.out_dir = check_out;
      result = pipeline::cmd_check(check_opt);
    } else if (*regularize) {
      command = "regularize";
      reg_opt.jobs = jobs;
      reg_opt.codec = codec_choice == "external" ? pipeline::CodecChoice::external : pipeline::CodecChoice::reference;
      if (!reg_model.empty()) reg_opt.model_path = reg_model;
      if (!latent_in.empty()) reg_opt.latent_in = latent_in;
      if (!latent_out.empty()) reg_opt.latent_out = latent_out;
      if (reg_opt.codec == pipeline::CodecChoice::reference && (reg_opt.input.empty() || reg_opt.output.empty()))
        throw Error(ErrorCode::config, "regularize needs an input and --out with the reference codec");
      if (reg_opt.codec == pipeline::CodecChoice::external && !reg_opt.latent_in &&
          (reg_opt.input.empty() || reg_opt.output.empty()))
        throw Error(ErrorCode::config, "external codec needs --latent-in/--latent-out or an input and --out");
      result = pipeline::cmd_regularize(reg_opt);
    } else if (*baseline) {
      command = "baseline";
      base_opt.jobs = jobs;
      if (sigma >= 0.0) base_opt.sigma = sigma;
      result = pipeline::cmd_baseline(base_opt);
    } else if (*evaluate) {
      command = "evaluate";
      eval_opt.jobs = jobs;
      if (!eval_cal.empty()) eval_opt.calibration_dir = eval_cal;
      if (!eval_out.empty()) eval_opt.out_dir = eval_out;
      result = pipeline::cmd_evaluate(eval_opt);
    } else if (*plot) {
      command = "plot";
      for (const auto& item : plot_inputs) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::config, "plot input must be label=path: " + item);
        plot_opt.inputs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
      }
      if (!plot_stats.empty()) plot_opt.stats_path = plot_stats;
      result = pipeline::cmd_plot(plot_opt);
    }
    if (as_json) {
      std::cout << result.dump(2) << "\n";
    } else {
      print_text(command, result);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
