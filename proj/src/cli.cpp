#include "vf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "vf/experiments.hpp"
#include "vf/manifest.hpp"

namespace vf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string joined_command_line(int argc, const char* const* argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

struct Shared {
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: all cores
  std::string command_line;
};

RunManifest base_manifest(const Shared& shared) {
  RunManifest m;
  m.command_line = shared.command_line;
  m.base_seed = shared.seed;
  return m;
}

void ensure_parent_dir(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

double mean_length(const UniqueVariantLog& vs) {
  return variant_stats(vs).mean_length;
}

int effective_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// --- subcommand bodies -----------------------------------------------------

struct PlayoutArgs {
  std::string net;
  std::string format = "auto";
  std::string out;
  PlayoutConfig cfg;
};

int run_playout(const PlayoutArgs& args, const Shared& shared) {
  NetFormat format = NetFormat::autodetect;
  if (args.format == "json") format = NetFormat::json_net;
  if (args.format == "pnml") format = NetFormat::pnml;
  const fs::path net_path = resolve_net_path(args.net);
  const PetriNet net = load_net(net_path, format);

  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[net_path.string()] = file_digest(net_path);
  manifest.config_hash = fnv1a64_hex(args.net + "|" + args.format);
  ensure_parent_dir(args.out);
  write_manifest(args.out + ".manifest.json", manifest);

  const SystemVariantSet vs = enumerate_variants(net, args.cfg);
  write_variants(args.out, vs.variants);
  const VariantStats st = variant_stats(vs.variants);
  std::cout << "playout: " << st.count << " variants, alphabet " << st.alphabet_size
            << ", mu " << st.max_length << ", mean " << st.mean_length << "\n";
  return 0;
}

struct SplitArgs {
  std::string variants;
  double ratio = -1.0;
  std::string bias;
  std::string out_observed;
  std::string out_heldout;
  std::string sidecar;
  std::string system_label;
  bool no_mu_constraint = false;
  double swap_fraction = 0.2;
};

int run_split(const SplitArgs& args, const Shared& shared) {
  if ((args.ratio > 0) == !args.bias.empty()) {
    throw Error("split: exactly one of --ratio / --bias is required");
  }
  const fs::path in_path = args.variants;
  UniqueVariantLog log = read_variants(in_path);
  SystemVariantSet vs;
  vs.variants = std::move(log);
  vs.alphabet = alphabet_of(vs.variants);

  SplitOptions opts;
  opts.enforce_mu = !args.no_mu_constraint;
  opts.swap_fraction = args.swap_fraction;

  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[in_path.string()] = file_digest(in_path);
  manifest.config_hash = fnv1a64_hex(args.variants + "|" + std::to_string(args.ratio) +
                                     "|" + args.bias);
  ensure_parent_dir(args.out_observed);
  ensure_parent_dir(args.out_heldout);
  write_manifest(args.out_observed + ".manifest.json", manifest);

  const SplitResult result =
      args.bias.empty()
          ? random_ratio_split(vs, args.ratio, shared.seed, opts)
          : bias_split(vs, bias_setup_from_string(args.bias), shared.seed, opts);

  write_variants(args.out_observed, result.observed);
  write_variants(args.out_heldout, result.heldout);

  json sidecar;
  sidecar["system"] = args.system_label.empty() ? in_path.stem().string()
                                                : args.system_label;
  sidecar["spec"] = args.bias.empty() ? json{{"kind", "ratio"}, {"ratio", args.ratio}}
                                      : json{{"kind", "bias"}, {"setup", args.bias}};
  sidecar["seed"] = shared.seed;
  sidecar["sizes"] = {{"system", vs.variants.size()},
                      {"observed", result.observed.size()},
                      {"heldout", result.heldout.size()}};
  sidecar["means"] = {{"observed", mean_length(result.observed)},
                      {"heldout", mean_length(result.heldout)}};
  const std::string sidecar_path =
      args.sidecar.empty() ? args.out_observed + ".split.json" : args.sidecar;
  std::ofstream side(sidecar_path, std::ios::binary);
  side << sidecar.dump(1) << "\n";

  std::cout << "split: observed " << result.observed.size() << " (mean "
            << mean_length(result.observed) << "), heldout " << result.heldout.size()
            << " (mean " << mean_length(result.heldout) << ")\n";
  return 0;
}

struct TrainArgs {
  std::string variants;
  std::string out;
  std::string kind = "adversarial";
  GeneratorConfig cfg;
  std::string anneal = "exponential";
  int order = 2;
  double smoothing = 0.0;
};

int run_train(const TrainArgs& args, const Shared& shared) {
  const fs::path in_path = args.variants;
  const UniqueVariantLog log = read_variants(in_path);

  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[in_path.string()] = file_digest(in_path);
  manifest.config_hash = fnv1a64_hex(args.kind + "|" + std::to_string(args.cfg.beta));
  ensure_parent_dir(args.out);
  write_manifest(args.out + ".manifest.json", manifest);

  TrainedGenerator gen;
  if (args.kind == "markov") {
    gen = markov_train(log, args.order, args.smoothing);
  } else if (args.kind == "adversarial") {
    GeneratorConfig cfg = args.cfg;
    cfg.seed = shared.seed;
    cfg.anneal = args.anneal == "linear" ? GeneratorConfig::Anneal::linear
                                         : GeneratorConfig::Anneal::exponential;
    gen = train(log, cfg);
  } else {
    throw Error("train: unknown --kind '" + args.kind + "'");
  }
  save_checkpoint(gen, args.out);
  std::cout << "train: " << args.kind << " model over " << log.size()
            << " variants -> " << args.out << "\n";
  return 0;
}

struct SampleArgs {
  std::string model;
  std::string mode = "naive";
  std::size_t k = 10000;
  std::size_t burn_in = 50;
  std::size_t thinning = 5;
  std::string out;
};

int run_sample(const SampleArgs& args, const Shared& shared) {
  const TrainedGenerator gen = load_checkpoint(args.model);

  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[args.model] = file_digest(args.model);
  manifest.config_hash =
      fnv1a64_hex(args.mode + "|k=" + std::to_string(args.k));
  ensure_parent_dir(args.out);
  write_manifest(args.out + ".manifest.json", manifest);

  SampleSet result;
  if (args.mode == "mh") {
    result = mh_sample(gen, args.k, shared.seed, {args.burn_in, args.thinning});
  } else if (args.mode == "naive") {
    result = naive_sample(gen, args.k, shared.seed);
  } else {
    throw Error("sample: unknown --mode '" + args.mode + "'");
  }
  write_sample_file(args.out, result);

  json meta;
  meta["mode"] = args.mode;
  meta["k"] = args.k;
  meta["seed"] = shared.seed;
  meta["draws"] = result.draws;
  meta["rejected"] = result.rejected;
  meta["unique"] = result.frequency.size();
  if (args.mode == "mh") {
    meta["proposals"] = result.proposals;
    meta["accepted"] = result.accepted;
    meta["degenerate"] = result.degenerate;
    meta["burn_in"] = args.burn_in;
    meta["thinning"] = args.thinning;
  }
  std::ofstream side(args.out + ".meta.json", std::ios::binary);
  side << meta.dump(1) << "\n";

  std::cout << "sample: " << result.frequency.size() << " unique variants from "
            << result.draws << " draws (" << result.rejected << " rejected)\n";
  return 0;
}

struct EvalArgs {
  std::string sampled;
  std::string system;
  std::string heldout;
  std::string out;
  std::string system_label;
  std::string setup_label = "70/30";
  std::string rq = "RQ2";
  double beta = 0.0;
  int k = 0;
  std::string mode = "naive";
};

int run_eval(const EvalArgs& args, const Shared& shared) {
  const SampleSet sampled = read_sample_file(args.sampled);
  SystemVariantSet vs;
  vs.variants = read_variants(args.system);
  vs.alphabet = alphabet_of(vs.variants);
  const UniqueVariantLog heldout = read_variants(args.heldout);

  RunManifest manifest = base_manifest(shared);
  for (const auto& p : {args.sampled, args.system, args.heldout}) {
    manifest.input_digests[p] = file_digest(p);
  }
  manifest.config_hash = fnv1a64_hex(args.sampled + "|" + args.system);

  const EvalResult r = evaluate(sampled, vs, heldout);
  const VariantStats st = variant_stats(vs.variants);

  RunRecord rec;
  rec.system = args.system_label.empty() ? fs::path(args.system).stem().string()
                                         : args.system_label;
  rec.rq = rq_from_string(args.rq);
  rec.setup = args.setup_label;
  rec.beta = args.beta;
  rec.k = args.k > 0 ? args.k : static_cast<int>(sampled.draws);
  rec.mode = args.mode;
  rec.seed = shared.seed;
  rec.eval = r;
  rec.system_variants = st.count;
  rec.system_alphabet = st.alphabet_size;
  rec.system_mu = st.max_length;

  if (!args.out.empty()) {
    ensure_parent_dir(args.out);
    write_manifest(args.out + ".manifest.json", manifest);
    std::ofstream out(args.out, std::ios::binary);
    out << runs_csv_header() << "\n" << runs_csv_row(rec) << "\n";
  }
  std::cout << "eval: tp " << r.tp << ", tp_u " << r.tp_u << ", unique "
            << r.unique_count << ", score " << r.score << " (false positives "
            << r.false_positives << ")\n";
  return 0;
}

struct SweepArgs {
  std::string plan;
  std::string out;
  std::string generator_override;
};

int run_sweep(const SweepArgs& args, const Shared& shared) {
  ExperimentPlan plan = plan_from_json_file(args.plan);
  if (shared.seed != 0) plan.base_seed = shared.seed;
  if (!args.generator_override.empty()) {
    if (args.generator_override == "markov") {
      plan.generator.kind = GeneratorChoice::Kind::markov;
    } else if (args.generator_override == "adversarial") {
      plan.generator.kind = GeneratorChoice::Kind::adversarial;
    } else {
      throw Error("sweep: unknown --generator '" + args.generator_override + "'");
    }
  }

  fs::create_directories(args.out);
  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[args.plan] = file_digest(args.plan);
  manifest.config_hash = fnv1a64_hex(plan_to_json_text(plan));
  manifest.base_seed = plan.base_seed;
  manifest.notes["generators"] = std::to_string(planned_generator_count(plan));
  write_manifest(fs::path(args.out) / "manifest.json", manifest);

  const auto records = run_plan(plan, effective_jobs(shared.jobs));
  write_report(records, args.out);

  std::size_t failures = 0;
  std::int64_t total_ms = 0;
  for (const auto& r : records) {
    if (r.failed) ++failures;
    total_ms += r.wall_ms;
    manifest.run_seeds[r.system + ":" + r.setup + ":beta" +
                       std::to_string(static_cast<long long>(r.beta)) + ":k" +
                       std::to_string(r.k) + ":rep" + std::to_string(r.replicate)] =
        r.seed;
  }
  manifest.notes["records"] = std::to_string(records.size());
  manifest.notes["failures"] = std::to_string(failures);
  manifest.notes["sum_point_wall_ms"] = std::to_string(total_ms);
  write_manifest(fs::path(args.out) / "manifest.json", manifest);

  std::cout << "sweep: " << records.size() << " records (" << failures
            << " failed) -> " << args.out << "\n";
  return 0;
}

struct ReportArgs {
  std::string runs;
  std::string out;
};

int run_report(const ReportArgs& args, const Shared& shared) {
  const auto records = read_runs_csv(args.runs);
  RunManifest manifest = base_manifest(shared);
  manifest.input_digests[args.runs] = file_digest(args.runs);
  manifest.config_hash = fnv1a64_hex(args.runs);
  fs::create_directories(args.out);
  write_manifest(fs::path(args.out) / "manifest.json", manifest);
  write_report(records, args.out);
  std::cout << "report: " << records.size() << " records -> " << args.out << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"variant playout, splitting, generation and evaluation workbench"};
  app.fallthrough();
  app.require_subcommand(1);

  Shared shared;
  shared.command_line = joined_command_line(argc, argv);
  app.add_option("--seed", shared.seed,
                 "random seed (sweeps derive per-stage seeds from it; "
                 "single-stage commands use it directly)");
  app.add_option("--jobs", shared.jobs, "worker threads (0 = all cores)");

  PlayoutArgs playout_args;
  auto* playout = app.add_subcommand("playout", "enumerate a net's variant language");
  playout->add_option("--net", playout_args.net, "net file (json-net or pnml)")
      ->required();
  playout->add_option("--format", playout_args.format, "auto|json|pnml");
  playout->add_option("--out", playout_args.out, "output variant file")->required();
  playout->add_option("--max-len", playout_args.cfg.max_variant_length,
                      "variant length cap");
  playout->add_option("--max-states", playout_args.cfg.max_states,
                      "explored state cap");
  playout->add_option("--max-silent-chain", playout_args.cfg.max_silent_chain,
                      "consecutive silent firing cap");

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "partition variants into observed/heldout");
  split->add_option("--variants", split_args.variants, "system variant file")
      ->required();
  split->add_option("--ratio", split_args.ratio, "observed fraction in (0,1)");
  split->add_option("--bias", split_args.bias, "bias setup b1|b2|b3|b4");
  split->add_option("--out-observed", split_args.out_observed, "observed output file")
      ->required();
  split->add_option("--out-heldout", split_args.out_heldout, "heldout output file")
      ->required();
  split->add_option("--sidecar", split_args.sidecar, "sidecar json path");
  split->add_option("--system", split_args.system_label, "system id for the sidecar");
  split->add_flag("--no-mu-constraint", split_args.no_mu_constraint,
                  "do not force a max-length variant into the observed side");
  split->add_option("--swap-fraction", split_args.swap_fraction,
                    "leaky setups: fraction of heldout exchanged");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a generator on a variant file");
  train_cmd->add_option("--variants", train_args.variants, "training variant file")
      ->required();
  train_cmd->add_option("--out", train_args.out, "checkpoint path")->required();
  train_cmd->add_option("--kind", train_args.kind, "adversarial|markov");
  train_cmd->add_option("--beta", train_args.cfg.beta, "temperature control");
  train_cmd->add_option("--epochs", train_args.cfg.epochs, "adversarial epochs");
  train_cmd->add_option("--pretrain", train_args.cfg.pretrain_epochs,
                        "pretraining epochs");
  train_cmd->add_option("--embedding-dim", train_args.cfg.embedding_dim, "");
  train_cmd->add_option("--hidden-dim", train_args.cfg.hidden_dim, "");
  train_cmd->add_option("--learning-rate", train_args.cfg.learning_rate, "");
  train_cmd->add_option("--adv-learning-rate", train_args.cfg.adv_learning_rate, "");
  train_cmd->add_option("--batch-size", train_args.cfg.batch_size, "");
  train_cmd->add_option("--anneal", train_args.anneal, "exponential|linear");
  train_cmd->add_option("--order", train_args.order, "markov order");
  train_cmd->add_option("--smoothing", train_args.smoothing, "markov add-lambda");

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "draw variants from a checkpoint");
  sample_cmd->add_option("--model", sample_args.model, "checkpoint path")->required();
  sample_cmd->add_option("--mode", sample_args.mode, "naive|mh");
  sample_cmd->add_option("--k", sample_args.k, "number of samples")->required();
  sample_cmd->add_option("--burn-in", sample_args.burn_in, "mh burn-in steps");
  sample_cmd->add_option("--thin", sample_args.thinning, "mh thinning stride");
  sample_cmd->add_option("--out", sample_args.out, "sample file")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "score a sample against the system");
  eval_cmd->add_option("--sampled", eval_args.sampled, "sample file with freq lines")
      ->required();
  eval_cmd->add_option("--system", eval_args.system, "system variant file")->required();
  eval_cmd->add_option("--heldout", eval_args.heldout, "heldout variant file")
      ->required();
  eval_cmd->add_option("--out", eval_args.out, "csv row output");
  eval_cmd->add_option("--system-label", eval_args.system_label, "");
  eval_cmd->add_option("--setup-label", eval_args.setup_label, "");
  eval_cmd->add_option("--rq", eval_args.rq, "");
  eval_cmd->add_option("--beta", eval_args.beta, "");
  eval_cmd->add_option("--k", eval_args.k, "");
  eval_cmd->add_option("--mode", eval_args.mode, "");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "run an experiment plan");
  sweep->add_option("--plan", sweep_args.plan, "plan json")->required();
  sweep->add_option("--out", sweep_args.out, "output directory")->required();
  sweep->add_option("--generator", sweep_args.generator_override,
                    "override the plan's generator kind");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "derive ci/curves/regression from runs.csv");
  report->add_option("--runs", report_args.runs, "runs.csv path")->required();
  report->add_option("--out", report_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (playout->parsed()) return run_playout(playout_args, shared);
    if (split->parsed()) return run_split(split_args, shared);
    if (train_cmd->parsed()) return run_train(train_args, shared);
    if (sample_cmd->parsed()) return run_sample(sample_args, shared);
    if (eval_cmd->parsed()) return run_eval(eval_args, shared);
    if (sweep->parsed()) return run_sweep(sweep_args, shared);
    if (report->parsed()) return run_report(report_args, shared);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vf::cli
