#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "adgan/graph.hpp"

namespace adgan {

// Per-batch mean losses logged every iteration. During the visual-only phase
// the latent entries are 0.
struct LossReport {
  double l_dv = 0.0;
  double l_gv = 0.0;
  double l_dl = 0.0;
  double l_gl = 0.0;
  double l_mse = 0.0;

  bool finite() const {
    return std::isfinite(l_dv) && std::isfinite(l_gv) && std::isfinite(l_dl) &&
           std::isfinite(l_gl) && std::isfinite(l_mse);
  }
};

// A network forward pass bound to some graph: input node -> output node.
// Losses only need this much, which also lets tests substitute closed-form
// critics.
template <typename T>
using NetFn = std::function<int(GraphT<T>&, int)>;

// Mean over examples of (||grad_x D(x_mix)||_2 - 1)^2 with
// x_mix_i = eps_i * x_real_i + (1 - eps_i) * x_fake_i. The weight lambda is
// applied by the caller. Requires a critic without batch coupling.
template <typename T>
int gradient_penalty_node(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                          const std::vector<T>& mix_draws);

// Convenience evaluation returning the scalar.
template <typename T>
T gradient_penalty(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                   const std::vector<T>& mix_draws);

// mean D(x_fake) - mean D(x_real) + lambda * GP (minimization form of the
// critic objective). With penalty_at_fakes the penalty is evaluated at the
// fake samples and mix_draws is ignored.
template <typename T>
int visual_critic_loss_node(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                            T lambda_gp, const std::vector<T>& mix_draws,
                            bool penalty_at_fakes = false);

// -mean D(G(z)).
template <typename T>
int visual_generator_loss_node(GraphT<T>& g, const NetFn<T>& critic, const NetFn<T>& generator,
                               int z);

// Stable BCE on logits: mean softplus(-t_real) + mean softplus(t_fake);
// equals -mean log D(z_real) - mean log(1 - D(z_fake)).
template <typename T>
int latent_discriminator_loss_node(GraphT<T>& g, const NetFn<T>& critic_logit, int z_real,
                                   int z_fake);

// alpha * mean log(1 - D(G_l(x_hat))), the saturating form as printed;
// evaluates to -alpha * mean softplus(logit).
template <typename T>
int latent_generator_loss_node(GraphT<T>& g, const NetFn<T>& critic_logit,
                               const NetFn<T>& encoder, int x_hat, T alpha);

// beta * mean over the batch of ||z - G_l(G_v(z))||^2.
template <typename T>
int latent_cycle_mse_node(GraphT<T>& g, const NetFn<T>& encoder, const NetFn<T>& generator, int z,
                          T beta);

extern template int gradient_penalty_node<float>(GraphT<float>&, const NetFn<float>&, int, int,
                                                 const std::vector<float>&);
extern template int gradient_penalty_node<double>(GraphT<double>&, const NetFn<double>&, int, int,
                                                  const std::vector<double>&);
extern template float gradient_penalty<float>(GraphT<float>&, const NetFn<float>&, int, int,
                                              const std::vector<float>&);
extern template double gradient_penalty<double>(GraphT<double>&, const NetFn<double>&, int, int,
                                                const std::vector<double>&);
extern template int visual_critic_loss_node<float>(GraphT<float>&, const NetFn<float>&, int, int,
                                                   float, const std::vector<float>&, bool);
extern template int visual_critic_loss_node<double>(GraphT<double>&, const NetFn<double>&, int,
                                                    int, double, const std::vector<double>&, bool);
extern template int visual_generator_loss_node<float>(GraphT<float>&, const NetFn<float>&,
                                                      const NetFn<float>&, int);
extern template int visual_generator_loss_node<double>(GraphT<double>&, const NetFn<double>&,
                                                       const NetFn<double>&, int);
extern template int latent_discriminator_loss_node<float>(GraphT<float>&, const NetFn<float>&,
                                                          int, int);
extern template int latent_discriminator_loss_node<double>(GraphT<double>&, const NetFn<double>&,
                                                           int, int);
extern template int latent_generator_loss_node<float>(GraphT<float>&, const NetFn<float>&,
                                                      const NetFn<float>&, int, float);
extern template int latent_generator_loss_node<double>(GraphT<double>&, const NetFn<double>&,
                                                       const NetFn<double>&, int, double);
extern template int latent_cycle_mse_node<float>(GraphT<float>&, const NetFn<float>&,
                                                 const NetFn<float>&, int, float);
extern template int latent_cycle_mse_node<double>(GraphT<double>&, const NetFn<double>&,
                                                  const NetFn<double>&, int, double);

}  // namespace adgan
