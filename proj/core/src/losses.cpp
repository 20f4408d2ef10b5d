#include "adgan/losses.hpp"

#include "adgan/error.hpp"

namespace adgan {

template <typename T>
int gradient_penalty_node(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                          const std::vector<T>& mix_draws) {
  const auto& vr = g.value(x_real);
  const auto& vf = g.value(x_fake);
  if (!vr.same_shape(vf))
    throw ShapeError("gradient_penalty: real/fake batch shapes differ: " + shape_str(vr.shape) +
                     " vs " + shape_str(vf.shape));
  const int n = vr.dim(0);
  if (static_cast<int>(mix_draws.size()) != n)
    throw ShapeError("gradient_penalty: need one mix draw per example");
  for (T e : mix_draws) {
    if (!(e >= T(0) && e <= T(1))) throw ShapeError("gradient_penalty: mix draw outside [0,1]");
  }

  TensorT<T> eps_t({n});
  eps_t.data.assign(mix_draws.begin(), mix_draws.end());
  const int eps = g.leaf(std::move(eps_t));
  const int x_mix =
      g.add(g.mul_rowwise(x_real, eps), g.mul_rowwise(x_fake, g.rsub_scalar(eps, T(1))));

  const int scores = critic(g, x_mix);
  // Ones-seeded backward gives per-example input gradients because the
  // critic scores each example independently.
  const int gx = g.backward(scores, {x_mix})[0];
  const int norms = g.sqrt_(g.sumsq_rows(gx));
  const int dev = g.add_scalar(norms, T(-1));
  return g.mean_all(g.mul(dev, dev));
}

template <typename T>
T gradient_penalty(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                   const std::vector<T>& mix_draws) {
  return g.scalar_value(gradient_penalty_node(g, critic, x_real, x_fake, mix_draws));
}

template <typename T>
int visual_critic_loss_node(GraphT<T>& g, const NetFn<T>& critic, int x_real, int x_fake,
                            T lambda_gp, const std::vector<T>& mix_draws, bool penalty_at_fakes) {
  const int diff = g.sub(g.mean_all(critic(g, x_real)), g.mean_all(critic(g, x_fake)));
  int gp;
  if (penalty_at_fakes) {
    // Penalty at the fake samples, matching the printed objective: realised
    // as interpolation with eps = 0 everywhere.
    const std::vector<T> zeros(static_cast<std::size_t>(g.value(x_fake).dim(0)), T(0));
    gp = gradient_penalty_node(g, critic, x_real, x_fake, zeros);
  } else {
    gp = gradient_penalty_node(g, critic, x_real, x_fake, mix_draws);
  }
  const int loss = g.add(g.neg(diff), g.scale(gp, lambda_gp));
  if (!std::isfinite(static_cast<double>(g.scalar_value(loss))))
    throw TrainAbort("visual critic loss is not finite");
  return loss;
}

template <typename T>
int visual_generator_loss_node(GraphT<T>& g, const NetFn<T>& critic, const NetFn<T>& generator,
                               int z) {
  const int loss = g.neg(g.mean_all(critic(g, generator(g, z))));
  if (!std::isfinite(static_cast<double>(g.scalar_value(loss))))
    throw TrainAbort("visual generator loss is not finite");
  return loss;
}

template <typename T>
int latent_discriminator_loss_node(GraphT<T>& g, const NetFn<T>& critic_logit, int z_real,
                                   int z_fake) {
  const int t_real = critic_logit(g, z_real);
  const int t_fake = critic_logit(g, z_fake);
  return g.add(g.mean_all(g.softplus(g.neg(t_real))), g.mean_all(g.softplus(t_fake)));
}

template <typename T>
int latent_generator_loss_node(GraphT<T>& g, const NetFn<T>& critic_logit,
                               const NetFn<T>& encoder, int x_hat, T alpha) {
  if (!(alpha > T(0))) throw ConfigError("latent generator loss: alpha must be > 0");
  const int t = critic_logit(g, encoder(g, x_hat));
  // log(1 - sigmoid(t)) = -softplus(t).
  return g.scale(g.neg(g.mean_all(g.softplus(t))), alpha);
}

template <typename T>
int latent_cycle_mse_node(GraphT<T>& g, const NetFn<T>& encoder, const NetFn<T>& generator, int z,
                          T beta) {
  if (!(beta > T(0))) throw ConfigError("latent cycle loss: beta must be > 0");
  const int cycled = encoder(g, generator(g, z));
  const int diff = g.sub(z, cycled);
  return g.scale(g.mean_all(g.sumsq_rows(diff)), beta);
}

template int gradient_penalty_node<float>(GraphT<float>&, const NetFn<float>&, int, int,
                                          const std::vector<float>&);
template int gradient_penalty_node<double>(GraphT<double>&, const NetFn<double>&, int, int,
                                           const std::vector<double>&);
template float gradient_penalty<float>(GraphT<float>&, const NetFn<float>&, int, int,
                                       const std::vector<float>&);
template double gradient_penalty<double>(GraphT<double>&, const NetFn<double>&, int, int,
                                         const std::vector<double>&);
template int visual_critic_loss_node<float>(GraphT<float>&, const NetFn<float>&, int, int, float,
                                            const std::vector<float>&, bool);
template int visual_critic_loss_node<double>(GraphT<double>&, const NetFn<double>&, int, int,
                                             double, const std::vector<double>&, bool);
template int visual_generator_loss_node<float>(GraphT<float>&, const NetFn<float>&,
                                               const NetFn<float>&, int);
template int visual_generator_loss_node<double>(GraphT<double>&, const NetFn<double>&,
                                                const NetFn<double>&, int);
template int latent_discriminator_loss_node<float>(GraphT<float>&, const NetFn<float>&, int, int);
template int latent_discriminator_loss_node<double>(GraphT<double>&, const NetFn<double>&, int,
                                                    int);
template int latent_generator_loss_node<float>(GraphT<float>&, const NetFn<float>&,
                                               const NetFn<float>&, int, float);
template int latent_generator_loss_node<double>(GraphT<double>&, const NetFn<double>&,
                                                const NetFn<double>&, int, double);
template int latent_cycle_mse_node<float>(GraphT<float>&, const NetFn<float>&,
                                          const NetFn<float>&, int, float);
template int latent_cycle_mse_node<double>(GraphT<double>&, const NetFn<double>&,
                                           const NetFn<double>&, int, double);

}  // namespace adgan
