#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace vf {

// Single-layer gated recurrent cell, batched column-wise (one column per
// sequence). All math in double; gradients are hand-derived and checked
// against central finite differences in the test suite.
struct GruParams {
  Eigen::MatrixXd wz, uz, wr, ur, wn, un;  // (hidden x input), (hidden x hidden)
  Eigen::VectorXd bz, br, bn;

  static GruParams zeros_like(const GruParams& p);
};

struct GeneratorNet {
  Eigen::MatrixXd embedding;  // vocab x emb (row per token id; PAD row doubles as BOS)
  GruParams gru;
  Eigen::MatrixXd out_w;  // vocab x hidden
  Eigen::VectorXd out_b;  // vocab

  static GeneratorNet zeros_like(const GeneratorNet& g);
};

struct DiscriminatorNet {
  Eigen::MatrixXd embedding;  // vocab x emb
  GruParams gru;
  Eigen::VectorXd head_w;  // hidden
  double head_b = 0.0;

  static DiscriminatorNet zeros_like(const DiscriminatorNet& d);
};

// Flat views over every parameter, in a fixed traversal order. Used by the
// optimizer, the finite-difference check, and checkpoint serialization.
struct ParamSpan {
  double* data;
  std::ptrdiff_t size;
};
std::vector<ParamSpan> param_spans(GruParams& p);
std::vector<ParamSpan> param_spans(GeneratorNet& g);
std::vector<ParamSpan> param_spans(DiscriminatorNet& d);

Eigen::VectorXd flatten(std::vector<ParamSpan> spans);
void unflatten(const Eigen::VectorXd& flat, std::vector<ParamSpan> spans);

struct GruCache {
  Eigen::MatrixXd x, h_prev, z, r, n, rh, h;
};

// h = (1-z) . n + z . h_prev; returns h and fills the cache when given.
Eigen::MatrixXd gru_forward(const GruParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& h_prev, GruCache* cache);

// Backpropagates dh through one step. Accumulates parameter gradients into
// `grad` when non-null; returns dx and writes dh_prev.
Eigen::MatrixXd gru_backward(const GruParams& p, const GruCache& cache,
                             const Eigen::MatrixXd& dh, GruParams* grad,
                             Eigen::MatrixXd* dh_prev);

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores);
double sigmoid(double x);
double softplus(double x);  // log(1 + e^x), overflow-safe

// --- generator rollout (relaxed, differentiable) --------------------------

struct Rollout {
  std::vector<Eigen::MatrixXd> y;       // width x (vocab x batch) relaxed one-hots
  std::vector<Eigen::MatrixXd> logits;  // pre-noise output scores
  std::vector<GruCache> gru;
  int width = 0;
  int batch = 0;
};

// Unrolls the generator for `width` steps with frozen Gumbel noise (one
// vocab x batch matrix per step) at inverse temperature inv_temp.
Rollout gen_rollout(const GeneratorNet& g, const std::vector<Eigen::MatrixXd>& gumbel,
                    double inv_temp);

// --- discriminator ---------------------------------------------------------

struct DiscCache {
  std::vector<GruCache> gru;
  Eigen::VectorXd logit;  // per-sequence real/fake score before sigmoid
};

DiscCache disc_forward_soft(const DiscriminatorNet& d,
                            const std::vector<Eigen::MatrixXd>& y);
DiscCache disc_forward_tokens(const DiscriminatorNet& d,
                              const std::vector<std::vector<int>>& tokens);

// Backpropagates dlogit through the discriminator. Fills `grad` when
// non-null. When dy is non-null (soft inputs), writes d(loss)/d(y_t) there.
void disc_backward(const DiscriminatorNet& d, const DiscCache& cache,
                   const std::vector<Eigen::MatrixXd>* soft_inputs,
                   const std::vector<std::vector<int>>* token_inputs,
                   const Eigen::VectorXd& dlogit, DiscriminatorNet* grad,
                   std::vector<Eigen::MatrixXd>* dy);

// --- losses (deterministic given inputs; finite-difference friendly) ------

// Masked next-token cross entropy for teacher-forced sequences.
double mle_loss(const GeneratorNet& g, const std::vector<std::vector<int>>& batch,
                GeneratorNet* grad);

// -mean log D(real) - mean log(1 - D(fake)), stable softplus form.
double disc_loss(const DiscriminatorNet& d,
                 const std::vector<std::vector<int>>& real_tokens,
                 const std::vector<Eigen::MatrixXd>& fake_y, DiscriminatorNet* grad);

// -mean log D(G(noise)) with gradients flowing through the relaxed rollout.
double gen_adv_loss(const GeneratorNet& g, const DiscriminatorNet& d,
                    const std::vector<Eigen::MatrixXd>& gumbel, double inv_temp,
                    GeneratorNet* grad);

// --- optimizer -------------------------------------------------------------

class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  // Applies one update; clips the global gradient norm at clip_norm first.
  void step(std::vector<ParamSpan> params, std::vector<ParamSpan> grads,
            double clip_norm);

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<Eigen::VectorXd> m_, v_;
};

}  // namespace vf
