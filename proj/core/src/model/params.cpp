#include "collapsar/model/params.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"

namespace collapsar {

std::size_t ParamStore::add_block(std::string name) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] == name) return i;
  }
  blocks_.push_back(std::move(name));
  return blocks_.size() - 1;
}

std::size_t ParamStore::add(std::size_t block, std::string name, Matrix value) {
  if (block >= blocks_.size()) throw ConfigError("parameter block out of range");
  params_.push_back({std::move(name), block, std::move(value)});
  return params_.size() - 1;
}

std::size_t ParamStore::block_index(const std::string& name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i] == name) return i;
  }
  throw ConfigError("unknown parameter block '" + name + "'");
}

std::vector<std::size_t> ParamStore::params_in_block(std::size_t block) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].block == block) out.push_back(i);
  }
  return out;
}

std::size_t ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Vector ParamStore::flatten() const {
  Vector out;
  out.reserve(count());
  for (const auto& p : params_) out.insert(out.end(), p.value.values().begin(), p.value.values().end());
  return out;
}

void ParamStore::unflatten(std::span<const double> values) {
  if (values.size() != count()) throw InputError("unflatten: size mismatch");
  std::size_t offset = 0;
  for (auto& p : params_) {
    auto dst = p.value.values();
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(offset),
              values.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
    offset += dst.size();
  }
}

Gradients::Gradients(const ParamStore& params) {
  grads_.reserve(params.size());
  for (const auto& p : params) grads_.emplace_back(p.value.rows(), p.value.cols());
}

void Gradients::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void Gradients::scale(double factor) {
  for (auto& g : grads_) {
    for (double& v : g.values()) v *= factor;
  }
}

void Gradients::add(const Gradients& other, double factor) {
  if (other.grads_.size() != grads_.size()) throw InputError("gradient sets differ in shape");
  for (std::size_t i = 0; i < grads_.size(); ++i) axpy(factor, other.grads_[i].values(), grads_[i].values());
}

Vector Gradients::flatten() const {
  Vector out;
  for (const auto& g : grads_) out.insert(out.end(), g.values().begin(), g.values().end());
  return out;
}

Mlp::Mlp(ParamStore& params, std::size_t block, const std::string& prefix, std::size_t in,
         const std::vector<std::size_t>& dims, bool relu, bool relu_last, Rng& rng,
         double init_scale)
    : in_(in), out_(dims.empty() ? in : dims.back()), relu_(relu), relu_last_(relu_last) {
  std::size_t prev = in;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (dims[l] == 0) throw ConfigError("MLP layer width must be positive");
    Matrix w(prev, dims[l]);
    const double sd = init_scale * std::sqrt(2.0 / static_cast<double>(prev));
    for (double& v : w.values()) v = sd * rng.normal();
    Dense layer;
    layer.w = params.add(block, prefix + ".w" + std::to_string(l), std::move(w));
    layer.b = params.add(block, prefix + ".b" + std::to_string(l), Matrix(1, dims[l]));
    layers_.push_back(layer);
    prev = dims[l];
  }
}

Vector Mlp::forward(const ParamStore& params, std::span<const double> x, Cache* cache) const {
  if (x.size() != in_) throw InputError("MLP input width mismatch");
  Vector cur(x.begin(), x.end());
  if (cache) {
    cache->acts.clear();
    cache->pre.clear();
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Matrix& w = params.value(layers_[l].w);
    const auto b = params.value(layers_[l].b).values();
    Vector next(b.begin(), b.end());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      if (cur[i] != 0.0) axpy(cur[i], w.row(i), next);
    }
    if (cache) {
      cache->acts.push_back(std::move(cur));
      cache->pre.push_back(next);
    }
    if (activates(l)) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur = std::move(next);
  }
  if (cache) cache->acts.push_back(cur);
  return cur;
}

Vector Mlp::backward(const ParamStore& params, const Cache& cache, std::span<const double> upstream,
                     Gradients* grads) const {
  if (upstream.size() != out_) throw InputError("MLP upstream width mismatch");
  Vector g(upstream.begin(), upstream.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (activates(l)) {
      const auto& pre = cache.pre[l];
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (!(pre[j] > 0.0)) g[j] = 0.0;
      }
    }
    const Matrix& w = params.value(layers_[l].w);
    const auto& x = cache.acts[l];
    if (grads) {
      Matrix& gw = (*grads)[layers_[l].w];
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) axpy(x[i], g, gw.row(i));
      }
      axpy(1.0, g, (*grads)[layers_[l].b].values());
    }
    Vector gx(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) gx[i] = dot(w.row(i), g);
    g = std::move(gx);
  }
  return g;
}

}  // namespace collapsar
