#include "polsar/dncnn/adam.hpp"

#include <cmath>

namespace polsar::nn {

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v, std::size_t t,
               double lr, const AdamConfig& cfg) {
  if (t == 0) throw InvalidArgument("Adam step counter starts at 1");
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw InvalidArgument("Adam: parameter, gradient and moment sizes differ");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
    params[i] = static_cast<T>(params[i] - update);
  }
}

template <class T>
AdamOptimizer<T>::AdamOptimizer(const Network<T>& net, AdamConfig cfg) : cfg_(cfg) {
  for (auto s : net.trainable()) {
    m_.emplace_back(s.size(), T(0));
    v_.emplace_back(s.size(), T(0));
  }
}

template <class T>
void AdamOptimizer<T>::step(Network<T>& net, const Network<T>& grads, double lr) {
  auto params = net.trainable();
  const auto g = grads.trainable();
  if (params.size() != m_.size() || g.size() != m_.size()) throw InvalidArgument("Adam: network layout changed");
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) adam_step<T>(params[i], g[i], m_[i], v_[i], t_, lr, cfg_);
}

template void adam_step<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                               std::size_t, double, const AdamConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                std::size_t, double, const AdamConfig&);
template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace polsar::nn
