#include "vf/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vf/manifest.hpp"
#include "vf/stats.hpp"

namespace vf {

namespace {

using nlohmann::json;

std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string format_beta(double beta) {
  if (beta == std::floor(beta) && std::fabs(beta) < 1e15) {
    return std::to_string(static_cast<long long>(beta));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", beta);
  return buf;
}

}  // namespace

Rq rq_from_string(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), ::tolower);
  if (l == "rq1") return Rq::rq1;
  if (l == "rq2") return Rq::rq2;
  if (l == "rq3") return Rq::rq3;
  throw Error("unknown rq '" + s + "' (expected RQ1, RQ2 or RQ3)");
}

std::string to_string(Rq rq) {
  switch (rq) {
    case Rq::rq1: return "RQ1";
    case Rq::rq2: return "RQ2";
    case Rq::rq3: return "RQ3";
  }
  return "?";
}

std::string setup_label_for_ratio(double ratio) {
  const int pct = static_cast<int>(std::llround(ratio * 100.0));
  return std::to_string(pct) + "/" + std::to_string(100 - pct);
}

std::filesystem::path resolve_net_path(const std::string& ref) {
  namespace fs = std::filesystem;
  if (fs::exists(ref)) return ref;
  if (const char* dir = std::getenv("VF_DATA_DIR")) {
    const fs::path candidate = fs::path(dir) / ref;
    if (fs::exists(candidate)) return candidate;
  }
  throw Error("cannot resolve net reference '" + ref +
              "' (not found relative to cwd or $VF_DATA_DIR)");
}

std::uint64_t stage_seed(std::uint64_t base, const std::string& stage,
                         const std::string& point_label, int replicate) {
  return derive_seed(base, stage + ":" + point_label,
                     static_cast<std::uint64_t>(replicate));
}

// --- plan json --------------------------------------------------------------

namespace {

GeneratorChoice generator_from_json(const json& j) {
  GeneratorChoice g;
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "markov") {
      g.kind = GeneratorChoice::Kind::markov;
    } else if (kind == "adversarial") {
      g.kind = GeneratorChoice::Kind::adversarial;
    } else {
      throw Error("unknown generator kind '" + kind + "'");
    }
  }
  if (j.contains("markov_order")) g.markov_order = j.at("markov_order").get<int>();
  if (j.contains("markov_smoothing")) {
    g.markov_smoothing = j.at("markov_smoothing").get<double>();
  }
  auto& c = g.config;
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("pretrain_epochs")) c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  if (j.contains("embedding_dim")) c.embedding_dim = j.at("embedding_dim").get<int>();
  if (j.contains("hidden_dim")) c.hidden_dim = j.at("hidden_dim").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("adv_learning_rate")) {
    c.adv_learning_rate = j.at("adv_learning_rate").get<double>();
  }
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("anneal")) {
    c.anneal = j.at("anneal").get<std::string>() == "linear"
                   ? GeneratorConfig::Anneal::linear
                   : GeneratorConfig::Anneal::exponential;
  }
  return g;
}

json generator_to_json(const GeneratorChoice& g) {
  return json{
      {"kind", g.kind == GeneratorChoice::Kind::markov ? "markov" : "adversarial"},
      {"markov_order", g.markov_order},
      {"markov_smoothing", g.markov_smoothing},
      {"epochs", g.config.epochs},
      {"pretrain_epochs", g.config.pretrain_epochs},
      {"embedding_dim", g.config.embedding_dim},
      {"hidden_dim", g.config.hidden_dim},
      {"learning_rate", g.config.learning_rate},
      {"adv_learning_rate", g.config.adv_learning_rate},
      {"batch_size", g.config.batch_size},
      {"anneal",
       g.config.anneal == GeneratorConfig::Anneal::linear ? "linear" : "exponential"},
  };
}

}  // namespace

ExperimentPlan plan_from_json_text(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(origin + ": malformed plan: " + e.what());
  }
  try {
    ExperimentPlan plan;
    for (const auto& s : doc.at("systems")) {
      SystemRef ref;
      if (s.is_string()) {
        ref.net_path = s.get<std::string>();
        ref.id = std::filesystem::path(ref.net_path).stem().string();
      } else {
        ref.net_path = s.at("net").get<std::string>();
        ref.id = s.contains("id") ? s.at("id").get<std::string>()
                                  : std::filesystem::path(ref.net_path).stem().string();
      }
      plan.systems.push_back(std::move(ref));
    }
    if (plan.systems.empty()) throw Error(origin + ": plan lists no systems");
    plan.rq = rq_from_string(doc.at("rq").get<std::string>());
    if (doc.contains("k_grid")) plan.k_grid = doc.at("k_grid").get<std::vector<int>>();
    if (doc.contains("ratio_grid")) {
      plan.ratio_grid = doc.at("ratio_grid").get<std::vector<double>>();
    }
    if (doc.contains("bias_grid")) {
      plan.bias_grid = doc.at("bias_grid").get<std::vector<std::string>>();
    }
    if (doc.contains("beta_grid")) {
      plan.beta_grid = doc.at("beta_grid").get<std::vector<double>>();
    }
    if (doc.contains("base_seed")) plan.base_seed = doc.at("base_seed").get<std::uint64_t>();
    if (doc.contains("replicates")) plan.replicates = doc.at("replicates").get<int>();
    if (doc.contains("fixed_k")) plan.fixed_k = doc.at("fixed_k").get<int>();
    if (doc.contains("sample_mode")) {
      plan.sample_mode = doc.at("sample_mode").get<std::string>();
    }
    if (doc.contains("nested_k_draws")) {
      plan.nested_k_draws = doc.at("nested_k_draws").get<bool>();
    }
    if (doc.contains("generator")) plan.generator = generator_from_json(doc.at("generator"));
    if (doc.contains("playout")) {
      const auto& p = doc.at("playout");
      if (p.contains("max_variant_length")) {
        plan.playout.max_variant_length = p.at("max_variant_length").get<std::size_t>();
      }
      if (p.contains("max_states")) {
        plan.playout.max_states = p.at("max_states").get<std::size_t>();
      }
    }
    if (doc.contains("split_options")) {
      const auto& s = doc.at("split_options");
      if (s.contains("enforce_mu")) {
        plan.split_options.enforce_mu = s.at("enforce_mu").get<bool>();
      }
      if (s.contains("swap_fraction")) {
        plan.split_options.swap_fraction = s.at("swap_fraction").get<double>();
      }
    }
    if (plan.k_grid.empty() || plan.ratio_grid.empty() || plan.bias_grid.empty() ||
        plan.beta_grid.empty()) {
      throw Error(origin + ": plan grids must be non-empty");
    }
    if (plan.replicates < 1) throw Error(origin + ": replicates must be >= 1");
    return plan;
  } catch (const json::exception& e) {
    throw Error(origin + ": malformed plan: " + e.what());
  }
}

ExperimentPlan plan_from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open plan " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return plan_from_json_text(buf.str(), path.string());
}

std::string plan_to_json_text(const ExperimentPlan& plan) {
  json doc;
  json systems = json::array();
  for (const auto& s : plan.systems) {
    systems.push_back({{"id", s.id}, {"net", s.net_path}});
  }
  doc["systems"] = std::move(systems);
  doc["rq"] = to_string(plan.rq);
  doc["k_grid"] = plan.k_grid;
  doc["ratio_grid"] = plan.ratio_grid;
  doc["bias_grid"] = plan.bias_grid;
  doc["beta_grid"] = plan.beta_grid;
  doc["base_seed"] = plan.base_seed;
  doc["replicates"] = plan.replicates;
  doc["fixed_k"] = plan.fixed_k;
  doc["sample_mode"] = plan.sample_mode;
  doc["nested_k_draws"] = plan.nested_k_draws;
  doc["generator"] = generator_to_json(plan.generator);
  doc["playout"] = {{"max_variant_length", plan.playout.max_variant_length},
                    {"max_states", plan.playout.max_states}};
  doc["split_options"] = {{"enforce_mu", plan.split_options.enforce_mu},
                          {"swap_fraction", plan.split_options.swap_fraction}};
  return doc.dump(1);
}

// --- sweep execution ---------------------------------------------------------

namespace {

struct SplitPoint {
  std::string setup;             // label
  std::optional<double> ratio;   // random ratio split
  std::optional<BiasSetup> bias; // bias split
};

SplitResult make_split(const SystemVariantSet& vs, const SplitPoint& point,
                       std::uint64_t seed, const SplitOptions& opts) {
  if (point.ratio.has_value()) {
    return random_ratio_split(vs, *point.ratio, seed, opts);
  }
  return bias_split(vs, *point.bias, seed, opts);
}

TrainedGenerator train_point(const UniqueVariantLog& observed,
                             const GeneratorChoice& choice, double beta,
                             std::uint64_t seed) {
  if (choice.kind == GeneratorChoice::Kind::markov) {
    return markov_train(observed, choice.markov_order, choice.markov_smoothing);
  }
  GeneratorConfig cfg = choice.config;
  cfg.beta = beta;
  cfg.seed = seed;
  return train(observed, cfg);
}

SampleSet sample_point(const TrainedGenerator& gen, const std::string& mode,
                       std::size_t k, std::uint64_t seed, const MhOptions& mh) {
  if (mode == "mh") return mh_sample(gen, k, seed, mh);
  if (mode == "naive") return naive_sample(gen, k, seed);
  throw Error("unknown sample mode '" + mode + "'");
}

std::string sample_hash(const SampleSet& s) {
  std::string text;
  for (const auto& [v, count] : s.frequency) {
    for (const auto& e : v.events) {
      text += e;
      text += ' ';
    }
    text += '#';
    text += std::to_string(count);
    text += '\n';
  }
  return fnv1a64_hex(text);
}

// One training job: grid coordinates plus the k values evaluated on it.
struct Job {
  std::size_t system_index = 0;
  int replicate = 0;
  SplitPoint split;
  double beta = 0.0;
  std::vector<int> ks;
  std::size_t first_record = 0;  // slot of this job's first record
};

}  // namespace

std::size_t planned_generator_count(const ExperimentPlan& plan) {
  const std::size_t setups = plan.rq == Rq::rq1   ? 1
                             : plan.rq == Rq::rq2 ? plan.ratio_grid.size()
                                                  : plan.bias_grid.size();
  return plan.systems.size() * setups * plan.beta_grid.size() *
         static_cast<std::size_t>(plan.replicates);
}

std::vector<RunRecord> run_plan(const ExperimentPlan& plan, int jobs) {
  // Resolve and enumerate every system up front; unresolvable nets are a
  // plan-level error, not a grid-point failure.
  struct SystemData {
    SystemVariantSet vs;
    VariantStats stats;
  };
  std::vector<SystemData> systems;
  systems.reserve(plan.systems.size());
  for (const auto& ref : plan.systems) {
    const PetriNet net = load_net(resolve_net_path(ref.net_path));
    SystemData data;
    data.vs = enumerate_variants(net, plan.playout);
    if (data.vs.variants.empty()) {
      throw Error("system " + ref.id + " has an empty variant language");
    }
    data.stats = variant_stats(data.vs.variants);
    systems.push_back(std::move(data));
  }

  std::vector<SplitPoint> split_points;
  if (plan.rq == Rq::rq1) {
    split_points.push_back({"70/30", 0.7, std::nullopt});
  } else if (plan.rq == Rq::rq2) {
    for (double r : plan.ratio_grid) {
      split_points.push_back({setup_label_for_ratio(r), r, std::nullopt});
    }
  } else {
    for (const auto& s : plan.bias_grid) {
      if (s == "baseline") {
        split_points.push_back({"baseline", 0.7, std::nullopt});
      } else {
        split_points.push_back({s, std::nullopt, bias_setup_from_string(s)});
      }
    }
  }
  const std::vector<int> ks =
      plan.rq == Rq::rq1 ? plan.k_grid : std::vector<int>{plan.fixed_k};

  std::vector<Job> job_list;
  std::size_t record_count = 0;
  for (int rep = 0; rep < plan.replicates; ++rep) {
    for (std::size_t si = 0; si < plan.systems.size(); ++si) {
      for (const auto& sp : split_points) {
        for (double beta : plan.beta_grid) {
          Job job;
          job.system_index = si;
          job.replicate = rep;
          job.split = sp;
          job.beta = beta;
          job.ks = ks;
          job.first_record = record_count;
          record_count += ks.size();
          job_list.push_back(std::move(job));
        }
      }
    }
  }

  std::vector<RunRecord> records(record_count);

  auto run_job = [&](const Job& job) {
    const auto& ref = plan.systems[job.system_index];
    const auto& sys = systems[job.system_index];
    const std::string point_label =
        ref.id + ":" + job.split.setup + ":beta" + format_beta(job.beta);

    // Pre-fill the record slots with grid coordinates.
    for (std::size_t i = 0; i < job.ks.size(); ++i) {
      RunRecord& rec = records[job.first_record + i];
      rec.system = ref.id;
      rec.rq = plan.rq;
      rec.setup = job.split.setup;
      rec.beta = job.beta;
      rec.k = job.ks[i];
      rec.mode = plan.sample_mode;
      rec.replicate = job.replicate;
      rec.system_variants = sys.stats.count;
      rec.system_alphabet = sys.stats.alphabet_size;
      rec.system_mu = sys.stats.max_length;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::uint64_t split_seed = stage_seed(
          plan.base_seed, "split", ref.id + ":" + job.split.setup, job.replicate);
      const SplitResult split =
          make_split(sys.vs, job.split, split_seed, plan.split_options);

      const std::uint64_t train_seed =
          stage_seed(plan.base_seed, "train", point_label, job.replicate);
      const TrainedGenerator gen =
          train_point(split.observed, plan.generator, job.beta, train_seed);

      const std::uint64_t sample_seed =
          stage_seed(plan.base_seed, "sample", point_label, job.replicate);

      if (plan.rq == Rq::rq1 && plan.nested_k_draws && plan.sample_mode == "naive") {
        // One stream at the largest k; smaller k values are exact prefixes.
        const int k_max = *std::max_element(job.ks.begin(), job.ks.end());
        const auto draws = sample(gen, static_cast<std::size_t>(k_max), sample_seed);
        for (std::size_t i = 0; i < job.ks.size(); ++i) {
          SampleSet s;
          s.draws = static_cast<std::size_t>(job.ks[i]);
          for (std::size_t d = 0; d < s.draws; ++d) {
            if (draws[d].has_value()) {
              ++s.frequency[*draws[d]];
            } else {
              ++s.rejected;
            }
          }
          RunRecord& rec = records[job.first_record + i];
          rec.seed = sample_seed;
          rec.eval = evaluate(s, sys.vs, split.heldout);
          rec.artifact_hash = sample_hash(s);
        }
      } else {
        for (std::size_t i = 0; i < job.ks.size(); ++i) {
          RunRecord& rec = records[job.first_record + i];
          const std::uint64_t k_seed =
              plan.rq == Rq::rq1
                  ? derive_seed(sample_seed, "k", static_cast<std::uint64_t>(job.ks[i]))
                  : sample_seed;
          const SampleSet s =
              sample_point(gen, plan.sample_mode,
                           static_cast<std::size_t>(job.ks[i]), k_seed, MhOptions{});
          rec.seed = k_seed;
          rec.eval = evaluate(s, sys.vs, split.heldout);
          rec.artifact_hash = sample_hash(s);
        }
      }
    } catch (const std::exception& e) {
      for (std::size_t i = 0; i < job.ks.size(); ++i) {
        RunRecord& rec = records[job.first_record + i];
        rec.failed = true;
        rec.error = e.what();
      }
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    for (std::size_t i = 0; i < job.ks.size(); ++i) {
      records[job.first_record + i].wall_ms = ms;
    }
  };

  const int workers = std::max(1, jobs);
  if (workers == 1 || job_list.size() <= 1) {
    for (const auto& job : job_list) run_job(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n =
        std::min<int>(workers, static_cast<int>(job_list.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= job_list.size()) return;
          run_job(job_list[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  return records;
}

// --- stats -------------------------------------------------------------------

CIResult ci90(const std::vector<double>& scores) {
  if (scores.size() < 2) throw Error("ci90: need at least 2 observations");
  CIResult ci;
  ci.n = scores.size();
  ci.mean = mean(scores);
  const double sd = sample_sd(scores);
  if (sd == 0.0) {
    ci.half_width = 0.0;
    return ci;
  }
  const double t = student_t_quantile(0.95, static_cast<double>(scores.size() - 1));
  ci.half_width = t * sd / std::sqrt(static_cast<double>(scores.size()));
  return ci;
}

RegressionFit ols_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      FeatureExpansion expand, std::vector<std::string> base_names) {
  if (x.rows() != y.size()) throw Error("ols_fit: row count mismatch");
  if (base_names.empty()) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      base_names.push_back("x" + std::to_string(j));
    }
  }
  if (static_cast<Eigen::Index>(base_names.size()) != x.cols()) {
    throw Error("ols_fit: feature name count mismatch");
  }

  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    names.push_back(base_names[static_cast<std::size_t>(j)]);
    cols.push_back(x.col(j));
  }
  if (expand != FeatureExpansion::linear) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      names.push_back(base_names[static_cast<std::size_t>(j)] + "^2");
      cols.push_back(x.col(j).cwiseProduct(x.col(j)));
    }
    if (expand == FeatureExpansion::quadratic) {
      for (Eigen::Index a = 0; a < x.cols(); ++a) {
        for (Eigen::Index b = a + 1; b < x.cols(); ++b) {
          names.push_back(base_names[static_cast<std::size_t>(a)] + "*" +
                          base_names[static_cast<std::size_t>(b)]);
          cols.push_back(x.col(a).cwiseProduct(x.col(b)));
        }
      }
    }
  }

  const Eigen::Index n = x.rows();
  const Eigen::Index p = static_cast<Eigen::Index>(cols.size());
  if (n < p + 1) throw Error("ols_fit: fewer rows than expanded features");

  RegressionFit fit;
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd col = cols[static_cast<std::size_t>(j)];
    const double m = col.mean();
    col.array() -= m;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (sd > 0.0) {
      col /= sd;
    } else {
      fit.rank_deficient = true;  // constant feature collapses onto intercept
    }
    design.col(j + 1) = col;
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  if (cod.rank() < design.cols()) fit.rank_deficient = true;
  const Eigen::VectorXd coef = cod.solve(y);

  const double sst = (y.array() - y.mean()).square().sum();
  if (sst <= 0.0) throw Error("ols_fit: response has zero variance");
  const double ssr = (y - design * coef).squaredNorm();
  fit.r_squared = 1.0 - ssr / sst;
  fit.feature_names.push_back("intercept");
  for (const auto& nm : names) fit.feature_names.push_back(nm);
  fit.coefficients = coef;
  return fit;
}

// --- reporting ----------------------------------------------------------------

namespace {

constexpr const char* kRunsHeader =
    "system,rq,setup,beta,k,mode,seed,unique,tp,tp_u,score,rejected,wall_ms";

std::string record_to_csv(const RunRecord& r) {
  std::string row = r.system + "," + to_string(r.rq) + "," + r.setup + "," +
                    format_beta(r.beta) + "," + std::to_string(r.k) + "," + r.mode +
                    "," + std::to_string(r.seed) + ",";
  if (r.failed) {
    row += ",,,,,0";
  } else {
    // wall_ms is written as 0 so reruns are byte-identical; measured
    // timings live in the manifest.
    row += std::to_string(r.eval.unique_count) + "," + format_double(r.eval.tp) + "," +
           format_double(r.eval.tp_u) + "," + format_double(r.eval.score) + "," +
           std::to_string(r.eval.rejected) + ",0";
  }
  return row;
}

// Derived files (ci, curves, regression) are functions of the values as
// they appear in runs.csv, so `report` over a runs.csv reproduces the
// sweep's own outputs byte for byte.
double reported_score(const RunRecord& r) {
  return std::round(r.eval.score * 1e6) / 1e6;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

const char* runs_csv_header() { return kRunsHeader; }
std::string runs_csv_row(const RunRecord& record) { return record_to_csv(record); }

void write_report(const std::vector<RunRecord>& records,
                  const std::filesystem::path& out_dir) {
  if (records.empty()) throw Error("write_report: no records");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream runs(out_dir / "runs.csv", std::ios::binary);
    if (!runs) throw Error("cannot write runs.csv");
    runs << kRunsHeader << "\n";
    for (const auto& r : records) runs << record_to_csv(r) << "\n";
  }

  {
    std::ofstream sys(out_dir / "systems.csv", std::ios::binary);
    sys << "system,alphabet,variants,mu\n";
    std::map<std::string, const RunRecord*> per_system;
    for (const auto& r : records) per_system.emplace(r.system, &r);
    for (const auto& [id, rec] : per_system) {
      sys << id << "," << rec->system_alphabet << "," << rec->system_variants << ","
          << rec->system_mu << "\n";
    }
  }

  {
    // 90% CI of the scores per (setup-or-k, beta) group across systems.
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : records) {
      if (r.failed) continue;
      const std::string setup =
          r.rq == Rq::rq1 ? "k=" + std::to_string(r.k) : r.setup;
      groups[{setup, format_beta(r.beta)}].push_back(reported_score(r));
    }
    std::ofstream ci(out_dir / "ci.csv", std::ios::binary);
    ci << "setup,beta,mean,lo,hi,n\n";
    for (const auto& [key, scores] : groups) {
      if (scores.size() < 2) continue;
      const CIResult c = ci90(scores);
      ci << key.first << "," << key.second << "," << format_double(c.mean) << ","
         << format_double(c.mean - c.half_width) << ","
         << format_double(c.mean + c.half_width) << "," << c.n << "\n";
    }
  }

  // Per-(system, beta) k curves; meaningful when k varies (RQ1 sweeps).
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> curves;
  for (const auto& r : records) {
    if (!r.failed && r.rq == Rq::rq1) {
      curves[{r.system, format_beta(r.beta)}].push_back(&r);
    }
  }
  for (auto& [key, rows] : curves) {
    std::sort(rows.begin(), rows.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->k < b->k; });
    std::ofstream curve(out_dir / ("curve_" + key.first + "_beta" + key.second + ".csv"),
                        std::ios::binary);
    curve << "k,unique,tp,tp_u,score\n";
    for (const RunRecord* r : rows) {
      curve << r->k << "," << r->eval.unique_count << "," << format_double(r->eval.tp)
            << "," << format_double(r->eval.tp_u) << "," << format_double(r->eval.score)
            << "\n";
    }
  }

  {
    json reg;
    std::vector<const RunRecord*> ok;
    std::set<int> distinct_k;
    for (const auto& r : records) {
      if (!r.failed) {
        ok.push_back(&r);
        distinct_k.insert(r.k);
      }
    }
    if (distinct_k.size() >= 2 && ok.size() >= 11) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(ok.size()), 3);
      Eigen::VectorXd y(static_cast<Eigen::Index>(ok.size()));
      for (std::size_t i = 0; i < ok.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = ok[i]->k;
        x(static_cast<Eigen::Index>(i), 1) = static_cast<double>(ok[i]->system_mu);
        x(static_cast<Eigen::Index>(i), 2) = static_cast<double>(ok[i]->system_variants);
        y[static_cast<Eigen::Index>(i)] = reported_score(*ok[i]);
      }
      const std::vector<std::string> names{"k", "mu_vs", "n_vs"};
      for (const auto& [label, expansion] :
           std::vector<std::pair<std::string, FeatureExpansion>>{
               {"linear", FeatureExpansion::linear},
               {"quadratic", FeatureExpansion::quadratic}}) {
        try {
          const RegressionFit fit = ols_fit(x, y, expansion, names);
          json coefs = json::object();
          for (std::size_t i = 0; i < fit.feature_names.size(); ++i) {
            coefs[fit.feature_names[i]] = fit.coefficients[static_cast<Eigen::Index>(i)];
          }
          reg[label] = {{"r_squared", fit.r_squared},
                        {"rank_deficient", fit.rank_deficient},
                        {"coefficients", std::move(coefs)}};
        } catch (const Error& e) {
          reg[label] = {{"note", e.what()}};
        }
      }
      reg["n"] = ok.size();
      reg["features"] = names;
    } else {
      reg["note"] = "regression needs a k sweep (>= 2 distinct k, >= 11 points)";
    }
    std::ofstream out(out_dir / "regression.json", std::ios::binary);
    out << reg.dump(1) << "\n";
  }
}

std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
  if (line != kRunsHeader) throw Error(path.string() + ": unexpected header");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 13) throw Error(path.string() + ": malformed row: " + line);
    RunRecord r;
    r.system = f[0];
    r.rq = rq_from_string(f[1]);
    r.setup = f[2];
    r.beta = std::stod(f[3]);
    r.k = std::stoi(f[4]);
    r.mode = f[5];
    r.seed = std::stoull(f[6]);
    if (f[7].empty()) {
      r.failed = true;
    } else {
      r.eval.unique_count = std::stoull(f[7]);
      r.eval.tp = std::stod(f[8]);
      r.eval.tp_u = std::stod(f[9]);
      r.eval.score = std::stod(f[10]);
      r.eval.rejected = std::stoull(f[11]);
    }
    r.wall_ms = std::stoll(f[12]);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw Error(path.string() + ": no data rows");

  // Rejoin per-system features from the sibling systems.csv when present,
  // so report-from-csv can rebuild the regression file.
  const std::filesystem::path sidecar = path.parent_path() / "systems.csv";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream side(sidecar, std::ios::binary);
    std::string header;
    std::getline(side, header);
    std::map<std::string, std::array<std::size_t, 3>> features;
    while (std::getline(side, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 4) continue;
      features[f[0]] = {std::stoull(f[1]), std::stoull(f[2]), std::stoull(f[3])};
    }
    for (auto& r : records) {
      const auto it = features.find(r.system);
      if (it != features.end()) {
        r.system_alphabet = it->second[0];
        r.system_variants = it->second[1];
        r.system_mu = it->second[2];
      }
    }
  }
  return records;
}

RunRecord pipeline(const PipelineConfig& cfg) {
  ExperimentPlan plan;
  SystemRef ref;
  ref.id = cfg.system_id.empty()
               ? std::filesystem::path(cfg.net_path).stem().string()
               : cfg.system_id;
  ref.net_path = cfg.net_path;
  plan.systems.push_back(ref);
  plan.base_seed = cfg.base_seed;
  plan.generator = cfg.generator;
  plan.sample_mode = cfg.sample_mode;
  plan.fixed_k = cfg.k;
  plan.playout = cfg.playout;
  plan.split_options = cfg.split_options;
  plan.replicates = 1;
  plan.beta_grid = {cfg.generator.config.beta};
  if (std::holds_alternative<RandomRatio>(cfg.split.kind)) {
    plan.rq = Rq::rq2;
    plan.ratio_grid = {std::get<RandomRatio>(cfg.split.kind).ratio};
  } else {
    plan.rq = Rq::rq3;
    plan.bias_grid = {to_string(std::get<Bias>(cfg.split.kind).setup)};
  }
  auto records = run_plan(plan, 1);
  if (records.size() != 1) throw Error("pipeline: expected exactly one record");
  RunRecord rec = std::move(records.front());
  if (rec.failed) throw Error("pipeline failed at stage: " + rec.error);
  return rec;
}

}  // namespace vf
