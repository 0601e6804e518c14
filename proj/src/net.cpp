#include "vf/net.hpp"

#include <cmath>

#include "vf/variant.hpp"  // vf::Error

namespace vf {

GruParams GruParams::zeros_like(const GruParams& p) {
  GruParams z;
  z.wz = Eigen::MatrixXd::Zero(p.wz.rows(), p.wz.cols());
  z.uz = Eigen::MatrixXd::Zero(p.uz.rows(), p.uz.cols());
  z.wr = Eigen::MatrixXd::Zero(p.wr.rows(), p.wr.cols());
  z.ur = Eigen::MatrixXd::Zero(p.ur.rows(), p.ur.cols());
  z.wn = Eigen::MatrixXd::Zero(p.wn.rows(), p.wn.cols());
  z.un = Eigen::MatrixXd::Zero(p.un.rows(), p.un.cols());
  z.bz = Eigen::VectorXd::Zero(p.bz.size());
  z.br = Eigen::VectorXd::Zero(p.br.size());
  z.bn = Eigen::VectorXd::Zero(p.bn.size());
  return z;
}

GeneratorNet GeneratorNet::zeros_like(const GeneratorNet& g) {
  GeneratorNet z;
  z.embedding = Eigen::MatrixXd::Zero(g.embedding.rows(), g.embedding.cols());
  z.gru = GruParams::zeros_like(g.gru);
  z.out_w = Eigen::MatrixXd::Zero(g.out_w.rows(), g.out_w.cols());
  z.out_b = Eigen::VectorXd::Zero(g.out_b.size());
  return z;
}

DiscriminatorNet DiscriminatorNet::zeros_like(const DiscriminatorNet& d) {
  DiscriminatorNet z;
  z.embedding = Eigen::MatrixXd::Zero(d.embedding.rows(), d.embedding.cols());
  z.gru = GruParams::zeros_like(d.gru);
  z.head_w = Eigen::VectorXd::Zero(d.head_w.size());
  z.head_b = 0.0;
  return z;
}

std::vector<ParamSpan> param_spans(GruParams& p) {
  return {{p.wz.data(), p.wz.size()}, {p.uz.data(), p.uz.size()},
          {p.wr.data(), p.wr.size()}, {p.ur.data(), p.ur.size()},
          {p.wn.data(), p.wn.size()}, {p.un.data(), p.un.size()},
          {p.bz.data(), p.bz.size()}, {p.br.data(), p.br.size()},
          {p.bn.data(), p.bn.size()}};
}

std::vector<ParamSpan> param_spans(GeneratorNet& g) {
  std::vector<ParamSpan> spans{{g.embedding.data(), g.embedding.size()}};
  for (auto s : param_spans(g.gru)) spans.push_back(s);
  spans.push_back({g.out_w.data(), g.out_w.size()});
  spans.push_back({g.out_b.data(), g.out_b.size()});
  return spans;
}

std::vector<ParamSpan> param_spans(DiscriminatorNet& d) {
  std::vector<ParamSpan> spans{{d.embedding.data(), d.embedding.size()}};
  for (auto s : param_spans(d.gru)) spans.push_back(s);
  spans.push_back({d.head_w.data(), d.head_w.size()});
  spans.push_back({&d.head_b, 1});
  return spans;
}

Eigen::VectorXd flatten(std::vector<ParamSpan> spans) {
  std::ptrdiff_t total = 0;
  for (const auto& s : spans) total += s.size;
  Eigen::VectorXd flat(total);
  std::ptrdiff_t off = 0;
  for (const auto& s : spans) {
    for (std::ptrdiff_t i = 0; i < s.size; ++i) flat[off + i] = s.data[i];
    off += s.size;
  }
  return flat;
}

void unflatten(const Eigen::VectorXd& flat, std::vector<ParamSpan> spans) {
  std::ptrdiff_t off = 0;
  for (const auto& s : spans) {
    for (std::ptrdiff_t i = 0; i < s.size; ++i) s.data[i] = flat[off + i];
    off += s.size;
  }
}

namespace {

Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Eigen::MatrixXd affine(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x,
                       const Eigen::MatrixXd& u, const Eigen::MatrixXd& h,
                       const Eigen::VectorXd& b) {
  Eigen::MatrixXd out = w * x + u * h;
  out.colwise() += b;
  return out;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

Eigen::MatrixXd gru_forward(const GruParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& h_prev, GruCache* cache) {
  const Eigen::MatrixXd z = sigmoid_m(affine(p.wz, x, p.uz, h_prev, p.bz));
  const Eigen::MatrixXd r = sigmoid_m(affine(p.wr, x, p.ur, h_prev, p.br));
  const Eigen::MatrixXd rh = r.cwiseProduct(h_prev);
  const Eigen::MatrixXd n = affine(p.wn, x, p.un, rh, p.bn).array().tanh().matrix();
  Eigen::MatrixXd h = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h_prev);
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = z;
    cache->r = r;
    cache->n = n;
    cache->rh = rh;
    cache->h = h;
  }
  return h;
}

Eigen::MatrixXd gru_backward(const GruParams& p, const GruCache& c,
                             const Eigen::MatrixXd& dh, GruParams* grad,
                             Eigen::MatrixXd* dh_prev) {
  const Eigen::MatrixXd dn = dh.cwiseProduct((1.0 - c.z.array()).matrix());
  const Eigen::MatrixXd dz = dh.cwiseProduct(c.h_prev - c.n);
  Eigen::MatrixXd dhp = dh.cwiseProduct(c.z);

  const Eigen::MatrixXd da_n =
      dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
  const Eigen::MatrixXd drh = p.un.transpose() * da_n;
  const Eigen::MatrixXd dr = drh.cwiseProduct(c.h_prev);
  dhp += drh.cwiseProduct(c.r);

  const Eigen::MatrixXd da_r =
      dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));
  const Eigen::MatrixXd da_z =
      dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));

  if (grad != nullptr) {
    grad->wn += da_n * c.x.transpose();
    grad->un += da_n * c.rh.transpose();
    grad->bn += da_n.rowwise().sum();
    grad->wr += da_r * c.x.transpose();
    grad->ur += da_r * c.h_prev.transpose();
    grad->br += da_r.rowwise().sum();
    grad->wz += da_z * c.x.transpose();
    grad->uz += da_z * c.h_prev.transpose();
    grad->bz += da_z.rowwise().sum();
  }

  dhp += p.uz.transpose() * da_z + p.ur.transpose() * da_r;
  if (dh_prev != nullptr) *dh_prev = dhp;
  return p.wz.transpose() * da_z + p.wr.transpose() * da_r + p.wn.transpose() * da_n;
}

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const double mx = scores.col(c).maxCoeff();
    Eigen::VectorXd e = (scores.col(c).array() - mx).exp();
    out.col(c) = e / e.sum();
  }
  return out;
}

Rollout gen_rollout(const GeneratorNet& g, const std::vector<Eigen::MatrixXd>& gumbel,
                    double inv_temp) {
  Rollout roll;
  roll.width = static_cast<int>(gumbel.size());
  if (roll.width == 0) throw Error("gen_rollout: empty noise sequence");
  roll.batch = static_cast<int>(gumbel[0].cols());
  const auto hidden = g.out_w.cols();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, roll.batch);
  Eigen::MatrixXd x =
      g.embedding.row(0).transpose().replicate(1, roll.batch);  // PAD row as BOS
  roll.gru.resize(static_cast<std::size_t>(roll.width));
  for (int t = 0; t < roll.width; ++t) {
    h = gru_forward(g.gru, x, h, &roll.gru[static_cast<std::size_t>(t)]);
    Eigen::MatrixXd logits = g.out_w * h;
    logits.colwise() += g.out_b;
    roll.logits.push_back(logits);
    const Eigen::MatrixXd y =
        column_softmax(inv_temp * (logits + gumbel[static_cast<std::size_t>(t)]));
    roll.y.push_back(y);
    if (t + 1 < roll.width) x = g.embedding.transpose() * y;
  }
  return roll;
}

namespace {

DiscCache disc_forward_impl(const DiscriminatorNet& d,
                            const std::vector<Eigen::MatrixXd>* soft,
                            const std::vector<std::vector<int>>* tokens) {
  const int width = soft != nullptr ? static_cast<int>(soft->size())
                                    : static_cast<int>((*tokens)[0].size());
  const int batch = soft != nullptr ? static_cast<int>((*soft)[0].cols())
                                    : static_cast<int>(tokens->size());
  DiscCache cache;
  cache.gru.resize(static_cast<std::size_t>(width));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d.head_w.size(), batch);
  for (int t = 0; t < width; ++t) {
    Eigen::MatrixXd x;
    if (soft != nullptr) {
      x = d.embedding.transpose() * (*soft)[static_cast<std::size_t>(t)];
    } else {
      x.resize(d.embedding.cols(), batch);
      for (int b = 0; b < batch; ++b) {
        x.col(b) = d.embedding
                       .row((*tokens)[static_cast<std::size_t>(b)]
                                     [static_cast<std::size_t>(t)])
                       .transpose();
      }
    }
    h = gru_forward(d.gru, x, h, &cache.gru[static_cast<std::size_t>(t)]);
  }
  cache.logit = (h.transpose() * d.head_w).array() + d.head_b;
  return cache;
}

}  // namespace

DiscCache disc_forward_soft(const DiscriminatorNet& d,
                            const std::vector<Eigen::MatrixXd>& y) {
  return disc_forward_impl(d, &y, nullptr);
}

DiscCache disc_forward_tokens(const DiscriminatorNet& d,
                              const std::vector<std::vector<int>>& tokens) {
  return disc_forward_impl(d, nullptr, &tokens);
}

void disc_backward(const DiscriminatorNet& d, const DiscCache& cache,
                   const std::vector<Eigen::MatrixXd>* soft_inputs,
                   const std::vector<std::vector<int>>* token_inputs,
                   const Eigen::VectorXd& dlogit, DiscriminatorNet* grad,
                   std::vector<Eigen::MatrixXd>* dy) {
  const int width = static_cast<int>(cache.gru.size());
  const int batch = static_cast<int>(dlogit.size());
  const Eigen::MatrixXd& h_last = cache.gru.back().h;

  if (grad != nullptr) {
    grad->head_w += h_last * dlogit;
    grad->head_b += dlogit.sum();
  }
  Eigen::MatrixXd dh = d.head_w * dlogit.transpose();

  if (dy != nullptr) {
    dy->assign(static_cast<std::size_t>(width),
               Eigen::MatrixXd::Zero(d.embedding.rows(), batch));
  }
  for (int t = width - 1; t >= 0; --t) {
    Eigen::MatrixXd dh_prev;
    const Eigen::MatrixXd dx =
        gru_backward(d.gru, cache.gru[static_cast<std::size_t>(t)], dh,
                     grad != nullptr ? &grad->gru : nullptr, &dh_prev);
    if (soft_inputs != nullptr) {
      if (grad != nullptr) {
        grad->embedding += (*soft_inputs)[static_cast<std::size_t>(t)] * dx.transpose();
      }
      if (dy != nullptr) {
        (*dy)[static_cast<std::size_t>(t)] = d.embedding * dx;
      }
    } else if (grad != nullptr) {
      for (int b = 0; b < batch; ++b) {
        grad->embedding.row((*token_inputs)[static_cast<std::size_t>(b)]
                                           [static_cast<std::size_t>(t)]) +=
            dx.col(b).transpose();
      }
    }
    dh = dh_prev;
  }
}

double mle_loss(const GeneratorNet& g, const std::vector<std::vector<int>>& batch,
                GeneratorNet* grad) {
  const int bsz = static_cast<int>(batch.size());
  if (bsz == 0) throw Error("mle_loss: empty batch");
  const int width = static_cast<int>(batch[0].size());
  const auto hidden = g.out_w.cols();
  const auto vocab = g.embedding.rows();

  // Forward with caches.
  std::vector<GruCache> caches(static_cast<std::size_t>(width));
  std::vector<Eigen::MatrixXd> probs(static_cast<std::size_t>(width));
  std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(width));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden, bsz);

  // Positions participate in the loss through their first EOS inclusive.
  std::vector<int> loss_steps(static_cast<std::size_t>(bsz), width);
  for (int b = 0; b < bsz; ++b) {
    for (int t = 0; t < width; ++t) {
      if (batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)] == 1) {
        loss_steps[static_cast<std::size_t>(b)] = t + 1;
        break;
      }
    }
  }
  double total_mask = 0.0;
  for (int s : loss_steps) total_mask += s;

  for (int t = 0; t < width; ++t) {
    Eigen::MatrixXd x(g.embedding.cols(), bsz);
    for (int b = 0; b < bsz; ++b) {
      const int prev =
          t == 0 ? 0
                 : batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(t - 1)];
      x.col(b) = g.embedding.row(prev).transpose();
    }
    xs[static_cast<std::size_t>(t)] = x;
    h = gru_forward(g.gru, x, h, &caches[static_cast<std::size_t>(t)]);
    Eigen::MatrixXd logits = g.out_w * h;
    logits.colwise() += g.out_b;
    probs[static_cast<std::size_t>(t)] = column_softmax(logits);
  }

  double loss = 0.0;
  for (int b = 0; b < bsz; ++b) {
    for (int t = 0; t < loss_steps[static_cast<std::size_t>(b)]; ++t) {
      const int target = batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)];
      loss -= std::log(std::max(probs[static_cast<std::size_t>(t)](target, b), 1e-300));
    }
  }
  loss /= total_mask;
  if (grad == nullptr) return loss;

  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(hidden, bsz);
  for (int t = width - 1; t >= 0; --t) {
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(vocab, bsz);
    for (int b = 0; b < bsz; ++b) {
      if (t < loss_steps[static_cast<std::size_t>(b)]) {
        dlogits.col(b) = probs[static_cast<std::size_t>(t)].col(b) / total_mask;
        const int target =
            batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)];
        dlogits(target, b) -= 1.0 / total_mask;
      }
    }
    const Eigen::MatrixXd& h_t = caches[static_cast<std::size_t>(t)].h;
    grad->out_w += dlogits * h_t.transpose();
    grad->out_b += dlogits.rowwise().sum();
    dh += g.out_w.transpose() * dlogits;

    Eigen::MatrixXd dh_prev;
    const Eigen::MatrixXd dx = gru_backward(
        g.gru, caches[static_cast<std::size_t>(t)], dh, &grad->gru, &dh_prev);
    for (int b = 0; b < bsz; ++b) {
      const int prev =
          t == 0 ? 0
                 : batch[static_cast<std::size_t>(b)][static_cast<std::size_t>(t - 1)];
      grad->embedding.row(prev) += dx.col(b).transpose();
    }
    dh = dh_prev;
  }
  return loss;
}

double disc_loss(const DiscriminatorNet& d,
                 const std::vector<std::vector<int>>& real_tokens,
                 const std::vector<Eigen::MatrixXd>& fake_y, DiscriminatorNet* grad) {
  const auto n_real = static_cast<double>(real_tokens.size());
  const auto n_fake = static_cast<double>(fake_y[0].cols());

  const DiscCache real_cache = disc_forward_tokens(d, real_tokens);
  const DiscCache fake_cache = disc_forward_soft(d, fake_y);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < real_cache.logit.size(); ++i) {
    loss += softplus(-real_cache.logit[i]) / n_real;  // -log D(real)
  }
  for (Eigen::Index i = 0; i < fake_cache.logit.size(); ++i) {
    loss += softplus(fake_cache.logit[i]) / n_fake;  // -log (1 - D(fake))
  }
  if (grad == nullptr) return loss;

  Eigen::VectorXd dreal(real_cache.logit.size());
  for (Eigen::Index i = 0; i < dreal.size(); ++i) {
    dreal[i] = (sigmoid(real_cache.logit[i]) - 1.0) / n_real;
  }
  Eigen::VectorXd dfake(fake_cache.logit.size());
  for (Eigen::Index i = 0; i < dfake.size(); ++i) {
    dfake[i] = sigmoid(fake_cache.logit[i]) / n_fake;
  }
  disc_backward(d, real_cache, nullptr, &real_tokens, dreal, grad, nullptr);
  disc_backward(d, fake_cache, &fake_y, nullptr, dfake, grad, nullptr);
  return loss;
}

double gen_adv_loss(const GeneratorNet& g, const DiscriminatorNet& d,
                    const std::vector<Eigen::MatrixXd>& gumbel, double inv_temp,
                    GeneratorNet* grad) {
  const Rollout roll = gen_rollout(g, gumbel, inv_temp);
  const DiscCache dcache = disc_forward_soft(d, roll.y);
  const auto batch = static_cast<double>(roll.batch);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < dcache.logit.size(); ++i) {
    loss += softplus(-dcache.logit[i]) / batch;  // -log D(fake)
  }
  if (grad == nullptr) return loss;

  Eigen::VectorXd dlogit(dcache.logit.size());
  for (Eigen::Index i = 0; i < dlogit.size(); ++i) {
    dlogit[i] = -sigmoid(-dcache.logit[i]) / batch;
  }
  std::vector<Eigen::MatrixXd> dy_from_disc;
  disc_backward(d, dcache, &roll.y, nullptr, dlogit, nullptr, &dy_from_disc);

  // BPTT through the rollout: y_t feeds both the discriminator and x_{t+1}.
  Eigen::MatrixXd dh_carry = Eigen::MatrixXd::Zero(g.out_w.cols(), roll.batch);
  Eigen::MatrixXd dx_next;  // gradient w.r.t. x_{t+1}, produced at step t+1
  for (int t = roll.width - 1; t >= 0; --t) {
    Eigen::MatrixXd dy = dy_from_disc[static_cast<std::size_t>(t)];
    if (dx_next.size() > 0) {
      dy += g.embedding * dx_next;                       // x_{t+1} = E^T y_t
      grad->embedding += roll.y[static_cast<std::size_t>(t)] * dx_next.transpose();
    }
    // Softmax backward at inverse temperature (noise is constant).
    const Eigen::MatrixXd& y = roll.y[static_cast<std::size_t>(t)];
    Eigen::MatrixXd dlogits(y.rows(), y.cols());
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double dot = y.col(c).dot(dy.col(c));
      dlogits.col(c) = inv_temp * y.col(c).cwiseProduct(
                                      (dy.col(c).array() - dot).matrix());
    }
    const Eigen::MatrixXd& h_t = roll.gru[static_cast<std::size_t>(t)].h;
    grad->out_w += dlogits * h_t.transpose();
    grad->out_b += dlogits.rowwise().sum();

    const Eigen::MatrixXd dh = dh_carry + g.out_w.transpose() * dlogits;
    Eigen::MatrixXd dh_prev;
    dx_next = gru_backward(g.gru, roll.gru[static_cast<std::size_t>(t)], dh,
                           &grad->gru, &dh_prev);
    dh_carry = dh_prev;
  }
  // x_0 is the PAD embedding row replicated across the batch.
  grad->embedding.row(0) += dx_next.rowwise().sum().transpose();
  return loss;
}

void Adam::step(std::vector<ParamSpan> params, std::vector<ParamSpan> grads,
                double clip_norm) {
  if (m_.empty()) {
    for (const auto& s : params) {
      m_.emplace_back(Eigen::VectorXd::Zero(s.size));
      v_.emplace_back(Eigen::VectorXd::Zero(s.size));
    }
  }
  double sq = 0.0;
  for (const auto& s : grads) {
    for (std::ptrdiff_t i = 0; i < s.size; ++i) sq += s.data[i] * s.data[i];
  }
  const double norm = std::sqrt(sq);
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::ptrdiff_t i = 0; i < params[k].size; ++i) {
      const double gval = grads[k].data[i] * scale;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gval;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gval * gval;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[k].data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace vf
