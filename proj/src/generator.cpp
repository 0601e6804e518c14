#include "vf/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace vf {

namespace {

constexpr double kScoreClamp = 1e-6;

void init_uniform(std::vector<ParamSpan> spans, Rng& rng, double scale) {
  for (auto& s : spans) {
    for (std::ptrdiff_t i = 0; i < s.size; ++i) {
      s.data[i] = (2.0 * uniform_real(rng) - 1.0) * scale;
    }
  }
}

GeneratorNet make_generator_net(int vocab, int emb, int hidden, Rng& rng) {
  GeneratorNet g;
  g.embedding.resize(vocab, emb);
  g.gru.wz.resize(hidden, emb);
  g.gru.uz.resize(hidden, hidden);
  g.gru.wr.resize(hidden, emb);
  g.gru.ur.resize(hidden, hidden);
  g.gru.wn.resize(hidden, emb);
  g.gru.un.resize(hidden, hidden);
  g.gru.bz.resize(hidden);
  g.gru.br.resize(hidden);
  g.gru.bn.resize(hidden);
  g.out_w.resize(vocab, hidden);
  g.out_b.resize(vocab);
  init_uniform(param_spans(g), rng, 0.1);
  return g;
}

DiscriminatorNet make_discriminator_net(int vocab, int emb, int hidden, Rng& rng) {
  DiscriminatorNet d;
  d.embedding.resize(vocab, emb);
  d.gru.wz.resize(hidden, emb);
  d.gru.uz.resize(hidden, hidden);
  d.gru.wr.resize(hidden, emb);
  d.gru.ur.resize(hidden, hidden);
  d.gru.wn.resize(hidden, emb);
  d.gru.un.resize(hidden, hidden);
  d.gru.bz.resize(hidden);
  d.gru.br.resize(hidden);
  d.gru.bn.resize(hidden);
  d.head_w.resize(hidden);
  init_uniform(param_spans(d), rng, 0.1);
  return d;
}

std::vector<Eigen::MatrixXd> draw_gumbel(int width, int vocab, int batch, Rng& rng) {
  std::vector<Eigen::MatrixXd> noise;
  noise.reserve(static_cast<std::size_t>(width));
  for (int t = 0; t < width; ++t) {
    Eigen::MatrixXd g(vocab, batch);
    for (int b = 0; b < batch; ++b) {
      for (int v = 0; v < vocab; ++v) g(v, b) = gumbel(rng);
    }
    noise.push_back(std::move(g));
  }
  return noise;
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = uniform_real(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

std::vector<int> neural_walk(const NeuralGenerator& nn, const TokenCodec& codec,
                             Rng& rng) {
  const auto hidden = nn.gen.out_w.cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, 1);
  Eigen::MatrixXd x = nn.gen.embedding.row(0).transpose();  // PAD row as BOS
  std::vector<int> tokens;
  for (int t = 0; t < codec.width(); ++t) {
    h = gru_forward(nn.gen.gru, x, h, nullptr);
    Eigen::MatrixXd logits = nn.gen.out_w * h;
    logits.colwise() += nn.gen.out_b;
    const Eigen::VectorXd probs = column_softmax(logits).col(0);
    const int id = draw_categorical(probs, rng);
    tokens.push_back(id);
    if (id == TokenCodec::eos_id || id == TokenCodec::pad_id) break;
    x = nn.gen.embedding.row(id).transpose();
  }
  return tokens;
}

// --- markov ----------------------------------------------------------------

std::vector<int> shift_context(std::vector<int> ctx, int next) {
  ctx.erase(ctx.begin());
  ctx.push_back(next);
  return ctx;
}

std::vector<int> markov_walk(const MarkovModel& mm, const TokenCodec& codec, Rng& rng) {
  std::vector<int> ctx(static_cast<std::size_t>(mm.order), TokenCodec::pad_id);
  std::vector<int> tokens;
  const int vocab = codec.vocab_size();
  for (;;) {
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(vocab);
    const auto row = mm.table.find(ctx);
    double total = 0.0;
    for (int id = 1; id < vocab; ++id) {  // EOS and events; never PAD
      double w = mm.smoothing;
      if (row != mm.table.end()) {
        const auto it = row->second.find(id);
        if (it != row->second.end()) w += it->second;
      }
      weights[id] = w;
      total += w;
    }
    if (total <= 0.0) return tokens;  // dead end -> no EOS -> rejection
    const int next = draw_categorical(weights / total, rng);
    tokens.push_back(next);
    if (next == TokenCodec::eos_id) return tokens;
    if (tokens.size() > static_cast<std::size_t>(codec.max_len)) {
      return tokens;  // over-length without EOS -> rejection
    }
    ctx = shift_context(std::move(ctx), next);
  }
}

double markov_step_prob(const MarkovModel& mm, const TokenCodec& codec,
                        const std::vector<int>& ctx, int next) {
  const auto row = mm.table.find(ctx);
  double total = 0.0;
  double hit = mm.smoothing;
  for (int id = 1; id < codec.vocab_size(); ++id) {
    double w = mm.smoothing;
    if (row != mm.table.end()) {
      const auto it = row->second.find(id);
      if (it != row->second.end()) w += it->second;
    }
    if (id == next) hit = w;
    total += w;
  }
  return total > 0.0 ? hit / total : 0.0;
}

}  // namespace

double annealed_inv_temp(const GeneratorConfig& cfg, int epoch, int total) {
  if (total <= 0) return cfg.beta;
  const double frac = static_cast<double>(epoch + 1) / static_cast<double>(total);
  if (cfg.anneal == GeneratorConfig::Anneal::linear) {
    return 1.0 + (cfg.beta - 1.0) * frac;
  }
  return std::pow(cfg.beta, frac);
}

TrainedGenerator train(const UniqueVariantLog& log, const GeneratorConfig& cfg) {
  if (log.empty()) throw Error("train: empty variant log");
  if (cfg.beta <= 0.0) throw Error("train: beta must be positive");
  if (cfg.embedding_dim < 1 || cfg.hidden_dim < 1 || cfg.batch_size < 1 ||
      cfg.learning_rate <= 0.0 || cfg.epochs < 0 || cfg.pretrain_epochs < 0) {
    throw Error("train: invalid configuration");
  }
  for (const auto& v : log) {
    if (v.length() > 64) {
      throw Error("train: variant longer than 64 events is unsupported");
    }
  }

  TrainedGenerator out;
  out.codec = make_codec(log);
  out.config = cfg;

  std::vector<std::vector<int>> data;
  data.reserve(log.size());
  for (const auto& v : log) data.push_back(encode(out.codec, v));

  const int vocab = out.codec.vocab_size();
  const int width = out.codec.width();

  Rng init_rng = make_rng(derive_seed(cfg.seed, "gen-init"));
  NeuralGenerator nn;
  nn.gen = make_generator_net(vocab, cfg.embedding_dim, cfg.hidden_dim, init_rng);
  nn.disc = make_discriminator_net(vocab, cfg.embedding_dim, cfg.hidden_dim, init_rng);

  Adam opt_gen(cfg.learning_rate);
  Adam opt_gen_adv(cfg.adv_learning_rate);
  Adam opt_disc(cfg.adv_learning_rate);

  auto check_finite = [](double loss, const char* phase, int epoch) {
    if (!std::isfinite(loss)) {
      throw Error(std::string("non-finite ") + phase + " loss at epoch " +
                  std::to_string(epoch));
    }
  };

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Phase 1: maximum-likelihood pretraining with teacher forcing.
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, "pretrain-shuffle",
                                           static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<int>> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      GeneratorNet grad = GeneratorNet::zeros_like(nn.gen);
      const double loss = mle_loss(nn.gen, batch, &grad);
      check_finite(loss, "pretrain", epoch);
      opt_gen.step(param_spans(nn.gen), param_spans(grad), cfg.grad_clip);
      epoch_loss += loss;
      ++batches;
    }
    out.training_log.push_back(
        {epoch, "pretrain", epoch_loss / static_cast<double>(batches)});
  }

  // Phase 2: adversarial refinement on relaxed rollouts.
  Rng noise_rng = make_rng(derive_seed(cfg.seed, "adv-noise"));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double inv_temp = annealed_inv_temp(cfg, epoch, cfg.epochs);
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, "adv-shuffle",
                                           static_cast<std::uint64_t>(epoch)));
    shuffle(order, shuffle_rng);
    double d_loss_sum = 0.0;
    double g_loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<int>> real;
      for (std::size_t i = start; i < end; ++i) real.push_back(data[order[i]]);
      const int bsz = static_cast<int>(real.size());

      // Discriminator step against a detached rollout.
      {
        const auto noise = draw_gumbel(width, vocab, bsz, noise_rng);
        const Rollout roll = gen_rollout(nn.gen, noise, inv_temp);
        DiscriminatorNet dgrad = DiscriminatorNet::zeros_like(nn.disc);
        const double loss = disc_loss(nn.disc, real, roll.y, &dgrad);
        check_finite(loss, "disc", epoch);
        opt_disc.step(param_spans(nn.disc), param_spans(dgrad), cfg.grad_clip);
        d_loss_sum += loss;
      }
      // Generator step through a fresh rollout.
      {
        const auto noise = draw_gumbel(width, vocab, bsz, noise_rng);
        GeneratorNet ggrad = GeneratorNet::zeros_like(nn.gen);
        const double loss = gen_adv_loss(nn.gen, nn.disc, noise, inv_temp, &ggrad);
        check_finite(loss, "gen", epoch);
        opt_gen_adv.step(param_spans(nn.gen), param_spans(ggrad), cfg.grad_clip);
        g_loss_sum += loss;
      }
      ++batches;
    }
    out.training_log.push_back(
        {epoch, "disc", d_loss_sum / static_cast<double>(batches)});
    out.training_log.push_back(
        {epoch, "gen", g_loss_sum / static_cast<double>(batches)});
  }

  out.model = std::move(nn);
  return out;
}

TrainedGenerator markov_train(const UniqueVariantLog& log, int order, double smoothing) {
  if (log.empty()) throw Error("markov_train: empty variant log");
  if (order < 1) throw Error("markov_train: order must be >= 1");
  if (smoothing < 0.0) throw Error("markov_train: smoothing must be >= 0");

  TrainedGenerator out;
  out.codec = make_codec(log);
  if (order > out.codec.max_len) {
    throw Error("markov_train: order " + std::to_string(order) +
                " exceeds max variant length " + std::to_string(out.codec.max_len));
  }
  MarkovModel mm;
  mm.order = order;
  mm.smoothing = smoothing;
  for (const auto& v : log) {
    std::vector<int> ctx(static_cast<std::size_t>(order), TokenCodec::pad_id);
    const std::vector<int> enc = encode(out.codec, v);
    for (int id : enc) {
      mm.table[ctx][id] += 1.0;
      if (id == TokenCodec::eos_id) break;
      ctx = shift_context(std::move(ctx), id);
    }
  }
  out.model = std::move(mm);
  return out;
}

std::optional<Variant> sample_one(const TrainedGenerator& gen, Rng& rng) {
  std::vector<int> tokens;
  if (gen.is_markov()) {
    tokens = markov_walk(std::get<MarkovModel>(gen.model), gen.codec, rng);
  } else {
    tokens = neural_walk(std::get<NeuralGenerator>(gen.model), gen.codec, rng);
  }
  return decode(gen.codec, tokens);
}

std::vector<std::optional<Variant>> sample(const TrainedGenerator& gen, std::size_t n,
                                           std::uint64_t seed) {
  std::vector<std::optional<Variant>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(derive_seed(seed, "draw", i));
    out.push_back(sample_one(gen, rng));
  }
  return out;
}

double discriminator_score(const TrainedGenerator& gen, const Variant& v) {
  const std::vector<int> enc = encode(gen.codec, v);  // throws if unencodable
  double p;
  if (gen.is_markov()) {
    // Likelihood surrogate: geometric-mean per-step probability, mapped to
    // (0,1) via p/(1+p) so MH odds equal the model probability scale.
    const auto& mm = std::get<MarkovModel>(gen.model);
    std::vector<int> ctx(static_cast<std::size_t>(mm.order), TokenCodec::pad_id);
    double log_sum = 0.0;
    int steps = 0;
    for (int id : enc) {
      const double sp = markov_step_prob(mm, gen.codec, ctx, id);
      log_sum += std::log(std::max(sp, 1e-300));
      ++steps;
      if (id == TokenCodec::eos_id) break;
      ctx = shift_context(std::move(ctx), id);
    }
    const double gm = std::exp(log_sum / std::max(steps, 1));
    p = gm / (1.0 + gm);
  } else {
    const auto& nn = std::get<NeuralGenerator>(gen.model);
    const DiscCache cache = disc_forward_tokens(nn.disc, {enc});
    p = sigmoid(cache.logit[0]);
  }
  return std::clamp(p, kScoreClamp, 1.0 - kScoreClamp);
}

// --- checkpoint io ----------------------------------------------------------

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j))
                    .get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = arr.at(static_cast<std::size_t>(i)).get<double>();
  }
  return v;
}

json gru_to_json(const GruParams& p) {
  return json{{"wz", matrix_to_json(p.wz)}, {"uz", matrix_to_json(p.uz)},
              {"wr", matrix_to_json(p.wr)}, {"ur", matrix_to_json(p.ur)},
              {"wn", matrix_to_json(p.wn)}, {"un", matrix_to_json(p.un)},
              {"bz", vector_to_json(p.bz)}, {"br", vector_to_json(p.br)},
              {"bn", vector_to_json(p.bn)}};
}

GruParams gru_from_json(const json& j) {
  GruParams p;
  p.wz = matrix_from_json(j.at("wz"));
  p.uz = matrix_from_json(j.at("uz"));
  p.wr = matrix_from_json(j.at("wr"));
  p.ur = matrix_from_json(j.at("ur"));
  p.wn = matrix_from_json(j.at("wn"));
  p.un = matrix_from_json(j.at("un"));
  p.bz = vector_from_json(j.at("bz"));
  p.br = vector_from_json(j.at("br"));
  p.bn = vector_from_json(j.at("bn"));
  return p;
}

}  // namespace

void save_checkpoint(const TrainedGenerator& gen, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "vf-checkpoint";
  doc["version"] = 1;
  doc["kind"] = gen.is_markov() ? "markov" : "adversarial";
  json labels = json::array();
  for (int id = 2; id < gen.codec.vocab_size(); ++id) {
    labels.push_back(gen.codec.id_to_label[static_cast<std::size_t>(id)]);
  }
  doc["codec"] = {{"labels", labels}, {"max_len", gen.codec.max_len}};
  doc["config"] = {
      {"beta", gen.config.beta},
      {"seed", gen.config.seed},
      {"epochs", gen.config.epochs},
      {"pretrain_epochs", gen.config.pretrain_epochs},
      {"embedding_dim", gen.config.embedding_dim},
      {"hidden_dim", gen.config.hidden_dim},
      {"learning_rate", gen.config.learning_rate},
      {"adv_learning_rate", gen.config.adv_learning_rate},
      {"batch_size", gen.config.batch_size},
      {"anneal",
       gen.config.anneal == GeneratorConfig::Anneal::linear ? "linear" : "exponential"},
      {"grad_clip", gen.config.grad_clip},
  };
  json tlog = json::array();
  for (const auto& rec : gen.training_log) {
    tlog.push_back({{"epoch", rec.epoch}, {"phase", rec.phase}, {"loss", rec.loss}});
  }
  doc["training_log"] = std::move(tlog);

  if (gen.is_markov()) {
    const auto& mm = std::get<MarkovModel>(gen.model);
    json table = json::array();
    for (const auto& [ctx, nexts] : mm.table) {
      json row;
      row["ctx"] = ctx;
      json transitions = json::array();
      for (const auto& [id, count] : nexts) {
        transitions.push_back(json::array({id, count}));
      }
      row["next"] = std::move(transitions);
      table.push_back(std::move(row));
    }
    doc["markov"] = {{"order", mm.order}, {"smoothing", mm.smoothing},
                     {"table", std::move(table)}};
  } else {
    const auto& nn = std::get<NeuralGenerator>(gen.model);
    doc["neural"] = {
        {"generator",
         {{"embedding", matrix_to_json(nn.gen.embedding)},
          {"gru", gru_to_json(nn.gen.gru)},
          {"out_w", matrix_to_json(nn.gen.out_w)},
          {"out_b", vector_to_json(nn.gen.out_b)}}},
        {"discriminator",
         {{"embedding", matrix_to_json(nn.disc.embedding)},
          {"gru", gru_to_json(nn.disc.gru)},
          {"head_w", vector_to_json(nn.disc.head_w)},
          {"head_b", nn.disc.head_b}}},
    };
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << doc.dump(1) << '\n';
}

TrainedGenerator load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": malformed checkpoint: " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "vf-checkpoint") {
      throw Error(path.string() + ": not a checkpoint file");
    }
    if (doc.at("version").get<int>() != 1) {
      throw Error(path.string() + ": unsupported checkpoint version");
    }
    TrainedGenerator gen;
    std::set<std::string> alphabet;
    for (const auto& l : doc.at("codec").at("labels")) {
      alphabet.insert(l.get<std::string>());
    }
    gen.codec = make_codec(alphabet, doc.at("codec").at("max_len").get<int>());
    const auto& cfg = doc.at("config");
    gen.config.beta = cfg.at("beta").get<double>();
    gen.config.seed = cfg.at("seed").get<std::uint64_t>();
    gen.config.epochs = cfg.at("epochs").get<int>();
    gen.config.pretrain_epochs = cfg.at("pretrain_epochs").get<int>();
    gen.config.embedding_dim = cfg.at("embedding_dim").get<int>();
    gen.config.hidden_dim = cfg.at("hidden_dim").get<int>();
    gen.config.learning_rate = cfg.at("learning_rate").get<double>();
    gen.config.adv_learning_rate = cfg.at("adv_learning_rate").get<double>();
    gen.config.batch_size = cfg.at("batch_size").get<int>();
    gen.config.anneal = cfg.at("anneal").get<std::string>() == "linear"
                            ? GeneratorConfig::Anneal::linear
                            : GeneratorConfig::Anneal::exponential;
    gen.config.grad_clip = cfg.at("grad_clip").get<double>();
    for (const auto& rec : doc.at("training_log")) {
      gen.training_log.push_back({rec.at("epoch").get<int>(),
                                  rec.at("phase").get<std::string>(),
                                  rec.at("loss").get<double>()});
    }
    if (doc.at("kind").get<std::string>() == "markov") {
      MarkovModel mm;
      mm.order = doc.at("markov").at("order").get<int>();
      mm.smoothing = doc.at("markov").at("smoothing").get<double>();
      for (const auto& row : doc.at("markov").at("table")) {
        std::vector<int> ctx;
        for (const auto& c : row.at("ctx")) ctx.push_back(c.get<int>());
        auto& nexts = mm.table[ctx];
        for (const auto& tr : row.at("next")) {
          nexts[tr.at(0).get<int>()] = tr.at(1).get<double>();
        }
      }
      gen.model = std::move(mm);
    } else {
      NeuralGenerator nn;
      const auto& g = doc.at("neural").at("generator");
      nn.gen.embedding = matrix_from_json(g.at("embedding"));
      nn.gen.gru = gru_from_json(g.at("gru"));
      nn.gen.out_w = matrix_from_json(g.at("out_w"));
      nn.gen.out_b = vector_from_json(g.at("out_b"));
      const auto& d = doc.at("neural").at("discriminator");
      nn.disc.embedding = matrix_from_json(d.at("embedding"));
      nn.disc.gru = gru_from_json(d.at("gru"));
      nn.disc.head_w = vector_from_json(d.at("head_w"));
      nn.disc.head_b = d.at("head_b").get<double>();
      gen.model = std::move(nn);
    }
    return gen;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace vf
