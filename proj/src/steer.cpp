// Copyright 2026 The steerq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "steerq/steer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <deque>

#include "steerq/error.hpp"
#include "steerq/lhs.hpp"
#include "steerq/parallel.hpp"
#include "steerq/random.hpp"

namespace steerq {

namespace {

constexpr double kLogFloor = 1e-14;
constexpr double kZeroValue = 1e-9;  // inner values below this need no refinement
constexpr double kSeedTol = 1e-8;     // seeds this close to feasible are used as given

struct Spectral {
  double eta = 0.0;
  Matrix log2;
};

Spectral spectral(const Matrix &m, bool want_log) {
  const auto e = linalg::eigh(m);
  Spectral s{linalg::eta_sum(e.values), {}};
  if (want_log) {
    RealVector l(e.values.size());
    for (int i = 0; i < l.size(); ++i) l(i) = std::log2(std::max(e.values(i), kLogFloor));
    s.log2 = linalg::from_eigen(e, l);
  }
  return s;
}

double bound_for(int num_outputs, int dim_B, bool restricted) {
  double b = std::log2(static_cast<double>(num_outputs));
  if (restricted) b = std::min(b, std::log2(static_cast<double>(dim_B)));
  return b;
}

}  // namespace

int default_dim_E(const Assemblage &a, const SteerConfig &cfg) {
  if (cfg.dim_E > 0) return cfg.dim_E;
  return a.dim_B() * a.num_outputs();
}

int grid_resolution(const SteerConfig &cfg, int num_inputs) {
  if (cfg.grid > 0) return cfg.grid;
  return num_inputs <= 3 ? 21 : 6;
}

std::vector<std::vector<double>> simplex_grid(int n, int g) {
  if (n < 1 || g < 2) fail(ErrorKind::kArgument, "simplex grid needs n >= 1 and g >= 2");
  std::vector<std::vector<double>> out;
  std::vector<int> k(n, 0);
  const int total = g - 1;
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      k[pos] = left;
      std::vector<double> p(n);
      for (int i = 0; i < n; ++i) p[i] = static_cast<double>(k[i]) / total;
      out.push_back(p);
      return;
    }
    for (int v = left; v >= 0; --v) {
      k[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, total);
  return out;
}

double strategy_cmi(const std::vector<Matrix> &ext_ops, int dim_B, int dim_E, int num_inputs, int num_outputs,
                    const BranchWeights &bw, std::vector<Matrix> *gradient) {
  const Instrument *inst = bw.instrument;
  const int ny = static_cast<int>(bw.w.cols());
  if (bw.w.rows() != num_inputs) fail(ErrorKind::kArgument, "weights need |X| rows");
  if (inst != nullptr && (inst->num_branches() != ny || inst->dim_in() != dim_B)) {
    fail(ErrorKind::kArgument, "weights and instrument disagree");
  }
  const int db = inst != nullptr ? inst->dim_out() : dim_B;
  const int n = num_inputs * num_outputs;
  const int dim = db * dim_E;
  if (gradient != nullptr) gradient->assign(n, Matrix::Zero(dim_B * dim_E, dim_B * dim_E));
  const bool want = gradient != nullptr;

  double total = 0.0;
  std::vector<Matrix> w(n);
  std::vector<Spectral> sw(n), swe(n);
  for (int y = 0; y < ny; ++y) {
    Matrix s = Matrix::Zero(dim, dim);
    bool any = false;
    for (int x = 0; x < num_inputs; ++x) {
      const double wx = bw.w(x, y);
      for (int o = 0; o < num_outputs; ++o) {
        const int i = o + num_outputs * x;
        if (wx <= 0.0) {
          w[i].resize(0, 0);
          continue;
        }
        w[i] = wx * (inst != nullptr ? inst->apply_extended(y, ext_ops[i], dim_E) : ext_ops[i]);
        s += w[i];
        any = true;
      }
    }
    if (!any) continue;
    for (int i = 0; i < n; ++i) {
      if (w[i].size() == 0) continue;
      sw[i] = spectral(w[i], want);
      swe[i] = spectral(linalg::trace_first(w[i], db, dim_E), want);
      total += swe[i].eta - sw[i].eta;
    }
    const Spectral ss = spectral(s, want);
    const Spectral sse = spectral(linalg::trace_first(s, db, dim_E), want);
    total += ss.eta - sse.eta;
    if (!want) continue;
    // d/dW_i: -I (x) log W_i^E - log S + log W_i + I (x) log S^E; the 1/ln2
    // terms cancel.
    const Matrix common = linalg::lift_second(sse.log2, db) - ss.log2;
    for (int i = 0; i < n; ++i) {
      if (w[i].size() == 0) continue;
      const Matrix g = common + sw[i].log2 - linalg::lift_second(swe[i].log2, db);
      const double wx = bw.w(i / num_outputs, y);
      (*gradient)[i] += wx * (inst != nullptr ? inst->adjoint_extended(y, g, dim_E) : g);
    }
  }
  return total;
}

double extension_value(const NSExtension &ext, std::span<const double> p_X) {
  BranchWeights bw{nullptr, Eigen::MatrixXd(ext.num_inputs, 1)};
  for (int x = 0; x < ext.num_inputs; ++x) bw.w(x, 0) = p_X[x];
  if (screens_off(ext)) return 0.0;
  return strategy_cmi(ext.ops, ext.dim_B, ext.dim_E, ext.num_inputs, ext.num_outputs, bw);
}

double cmi_of_extension(const Assemblage &a, std::span<const double> p_X, const NSExtension &ext) {
  require_distribution(p_X, a.num_inputs(), "p_X");
  const auto r = extension_residuals(ext, a);
  if (r.max() > 1e-7) {
    fail(ErrorKind::kInconsistency, "not a non-signaling extension (residual " + std::to_string(r.max()) + ")");
  }
  const double full = extension_value(ext, p_X);
  // I(A;B|EX): one branch per x.
  BranchWeights per_x{nullptr, Eigen::MatrixXd::Zero(a.num_inputs(), a.num_inputs())};
  for (int x = 0; x < a.num_inputs(); ++x) per_x.w(x, x) = p_X[x];
  const double conditional = strategy_cmi(ext.ops, ext.dim_B, ext.dim_E, a.num_inputs(), a.num_outputs(), per_x);
  if (std::abs(full - conditional) > 1e-8) {
    fail(ErrorKind::kInconsistency, "I(XA;B|E) = " + std::to_string(full) + " but I(A;B|EX) = " +
                                        std::to_string(conditional));
  }
  return full;
}

namespace {

bool all_rank_one(const Assemblage &a) {
  for (const auto &op : a.ops()) {
    const double t = op.trace();
    if (t <= kEigenFloor) continue;
    const auto e = linalg::eigh(op.matrix() / t);
    if (a.dim_B() >= 2 && e.values(a.dim_B() - 2) > 1e-9) return false;
  }
  return true;
}

using Blocks = std::vector<Matrix>;

double dot(const Blocks &a, const Blocks &b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i].adjoint() * b[i]).trace().real();
  return s;
}

Matrix psd_sqrt(const Matrix &y) {
  const auto e = linalg::eigh(linalg::hermitize(y));
  const RealVector s = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

// Blocks Y = L L^dag; the affine constraints enter through their normal
// component N(Y) = Y - P(Y) with multipliers and a quadratic penalty.
struct Factorized {
  const ExtensionConstraints &c;
  BranchWeights bw;
  int nx, na, db, de;

  Blocks square(const Blocks &l) const {
    Blocks y;
    for (const auto &m : l) y.push_back(m * m.adjoint());
    return y;
  }

  Blocks normal(const Blocks &y) const {
    Blocks p = y;
    c.project_affine(p);
    for (size_t i = 0; i < y.size(); ++i) p[i] = y[i] - p[i];
    return p;
  }

  double phi(const Blocks &l, const Blocks &lambda, double mu, Blocks *grad) const {
    const Blocks y = square(l);
    Blocks g;
    double f = strategy_cmi(y, db, de, nx, na, bw, grad != nullptr ? &g : nullptr);
    const Blocks n = normal(y);
    f += dot(lambda, n) + 0.5 * mu * dot(n, n);
    if (grad != nullptr) {
      grad->clear();
      for (size_t i = 0; i < l.size(); ++i) grad->push_back(2.0 * (g[i] + lambda[i] + mu * n[i]) * l[i]);
    }
    return f;
  }
};

// Limited-memory BFGS with Armijo backtracking. Returns true when it stopped
// on a small step rather than the iteration cap.
bool lbfgs(const Factorized &prob, Blocks &l, const Blocks &lambda, double mu, int iters, double gtol) {
  constexpr size_t kMemory = 10;
  std::deque<std::pair<Blocks, Blocks>> mem;
  Blocks g;
  double f = prob.phi(l, lambda, mu, &g);
  for (int it = 0; it < iters; ++it) {
    if (dot(g, g) <= gtol * gtol) return true;
    Blocks q = g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      alpha[i] = dot(mem[i].first, q) / dot(mem[i].second, mem[i].first);
      for (size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * mem[i].second[k];
    }
    const double gamma = mem.empty() ? 1e-2 / std::max(std::sqrt(dot(g, g)), 1e-300)
                                     : dot(mem.back().first, mem.back().second) /
                                           dot(mem.back().second, mem.back().second);
    for (auto &m : q) m *= gamma;
    for (size_t i = 0; i < mem.size(); ++i) {
      const double beta = dot(mem[i].second, q) / dot(mem[i].second, mem[i].first);
      for (size_t k = 0; k < q.size(); ++k) q[k] += (alpha[i] - beta) * mem[i].first[k];
    }
    for (auto &m : q) m = -m;
    double slope = dot(g, q);
    if (!(slope < 0.0)) {
      mem.clear();
      q = g;
      for (auto &m : q) m *= -1e-2;
      slope = dot(g, q);
      if (!(slope < 0.0)) return true;
    }
    Blocks next, g_next;
    double f_next = f;
    bool ok = false;
    double t = 1.0;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      next = l;
      for (size_t k = 0; k < l.size(); ++k) next[k] += t * q[k];
      f_next = prob.phi(next, lambda, mu, &g_next);
      if (f_next <= f + 1e-4 * t * slope) {
        ok = true;
        break;
      }
    }
    if (!ok) return true;
    Blocks s(l.size()), y(l.size());
    for (size_t k = 0; k < l.size(); ++k) {
      s[k] = next[k] - l[k];
      y[k] = g_next[k] - g[k];
    }
    if (dot(s, y) > 1e-16) {
      mem.emplace_back(std::move(s), std::move(y));
      if (mem.size() > kMemory) mem.pop_front();
    }
    const double gain = f - f_next;
    l = std::move(next);
    g = std::move(g_next);
    f = f_next;
    if (gain < 1e-13 * std::max(1.0, std::abs(f))) return true;
  }
  return false;
}

// Exactly feasible extension near y: the affine projection when it is
// already PSD, else the Dykstra projection, else a blend with the product
// extension.
std::optional<NSExtension> finalize(const ExtensionConstraints &c, const Blocks &y, const SteerConfig &cfg) {
  Blocks z = y;
  c.project_affine(z);
  double worst = 0.0;
  for (const auto &m : z) worst = std::min(worst, linalg::eigh(m).values(0));
  NSExtension ext{c.dim_B(), c.dim_E(), c.num_inputs(), c.num_outputs(), z};
  if (worst >= -1e-13) return ext;
  try {
    return project(c, y, cfg.project_tol, cfg.project_max_iters);
  } catch (const Error &err) {
    if (err.kind() != ErrorKind::kNumeric) throw;
  }
  const Matrix omega = Matrix::Identity(c.dim_E(), c.dim_E()) / double(c.dim_E());
  const NSExtension base = product_extension(c.assemblage(), omega);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double s = 0.5 * (lo + hi);
    bool psd = true;
    for (size_t i = 0; i < z.size() && psd; ++i)
      psd = linalg::eigh((1.0 - s) * z[i] + s * base.ops[i]).values(0) >= -1e-13;
    (psd ? hi : lo) = s;
  }
  for (size_t i = 0; i < z.size(); ++i) ext.ops[i] = (1.0 - hi) * z[i] + hi * base.ops[i];
  if (extension_residuals(ext, c.assemblage()).max() > cfg.project_tol) return std::nullopt;
  return ext;
}

struct Member {
  NSExtension ext;
  std::string origin;
  bool markov = false;  // E holds a hidden variable that screens B off: zero CMI for every p_X
};

struct Refined {
  NSExtension ext;
  double value = 0.0;
  bool converged = false;
};

struct Outcome {
  double value = 0.0;
  std::vector<double> p;
  int dim_E = 0;
};

// Parameter space of the outer search: a grid of parameter vectors and a
// decoder to distributions over X.
struct OuterSpace {
  std::vector<Eigen::VectorXd> grid;
  int params = 0;
  std::function<std::vector<double>(const Eigen::VectorXd &)> decode;
  double step = 0.1;
};

std::vector<double> project_simplex(const std::vector<double> &v) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0) theta = t;
  }
  std::vector<double> p(v.size());
  double total = 0.0;
  for (size_t i = 0; i < v.size(); ++i) total += p[i] = std::max(v[i] - theta, 0.0);
  for (auto &x : p) x /= total;
  return p;
}

std::vector<double> decode_simplex(const Eigen::VectorXd &q, int offset, int n) {
  std::vector<double> v(n);
  double rest = 1.0;
  for (int i = 0; i < n - 1; ++i) rest -= v[i] = q(offset + i);
  v[n - 1] = rest;
  return project_simplex(v);
}

OuterSpace simplex_space(int n, int g) {
  OuterSpace s;
  s.params = n - 1;
  for (const auto &p : simplex_grid(n, g)) {
    Eigen::VectorXd q(n - 1);
    for (int i = 0; i < n - 1; ++i) q(i) = p[i];
    s.grid.push_back(q);
  }
  s.decode = [n](const Eigen::VectorXd &q) { return decode_simplex(q, 0, n); };
  s.step = 1.0 / (g - 1);
  return s;
}

// p(x1 + |X1| x2) = p1(x1) p2(x2).
OuterSpace product_space(int n1, int n2, int g1, int g2) {
  OuterSpace s;
  s.params = (n1 - 1) + (n2 - 1);
  for (const auto &p2 : simplex_grid(n2, g2))
    for (const auto &p1 : simplex_grid(n1, g1)) {
      Eigen::VectorXd q(s.params);
      for (int i = 0; i < n1 - 1; ++i) q(i) = p1[i];
      for (int i = 0; i < n2 - 1; ++i) q(n1 - 1 + i) = p2[i];
      s.grid.push_back(q);
    }
  s.decode = [n1, n2](const Eigen::VectorXd &q) {
    const auto p1 = decode_simplex(q, 0, n1), p2 = decode_simplex(q, n1 - 1, n2);
    std::vector<double> p(n1 * n2);
    for (int x2 = 0; x2 < n2; ++x2)
      for (int x1 = 0; x1 < n1; ++x1) p[x1 + n1 * x2] = p1[x1] * p2[x2];
    return p;
  };
  s.step = 1.0 / (std::max(g1, g2) - 1);
  return s;
}

class Searcher {
 public:
  Searcher(const Assemblage &a, const Instrument *inst, std::optional<ClassicalChannel> channel,
           const SteerConfig &cfg)
      : a_(a), inst_(inst), channel_(std::move(channel)), cfg_(cfg) {
    ny_ = inst != nullptr ? inst->num_branches() : 1;
    if (channel_ && (channel_->num_in() != ny_ || channel_->num_out() != a.num_inputs())) {
      fail(ErrorKind::kArgument, "p(x|y) must be |Y| x |X|");
    }
    exact_ = all_rank_one(a) && forced_common_product(a, 2);
  }

  bool exact() const { return exact_; }
  const std::vector<Member> &pool() const { return pool_; }
  int version() const { return version_; }

  Eigen::MatrixXd weights(const std::vector<double> &p) const {
    Eigen::MatrixXd w(a_.num_inputs(), ny_);
    for (int y = 0; y < ny_; ++y)
      for (int x = 0; x < a_.num_inputs(); ++x) w(x, y) = channel_ ? (*channel_)(x, y) : p[x];
    return w;
  }

  double value(const NSExtension &e, const Eigen::MatrixXd &w) const {
    if (inst_ == nullptr && !channel_ && screens_off(e)) return 0.0;
    return strategy_cmi(e.ops, e.dim_B, e.dim_E, a_.num_inputs(), a_.num_outputs(), BranchWeights{inst_, w});
  }

  double member_value(size_t i, const Eigen::MatrixXd &w) const {
    return pool_[i].markov ? 0.0 : value(pool_[i].ext, w);
  }

  const ExtensionConstraints &constraints(int dim_E) {
    auto it = constraints_.find(dim_E);
    if (it == constraints_.end()) it = constraints_.emplace(dim_E, ExtensionConstraints(a_, dim_E)).first;
    return it->second;
  }

  void add(NSExtension e, std::string origin, bool markov = false) {
    markov = markov || (inst_ == nullptr && !channel_ && screens_off(e));
    pool_.push_back({std::move(e), std::move(origin), markov});
    ++version_;
  }

  // Accepts a seed when it is (or projects to) a feasible extension.
  bool add_seed(const NSExtension &e, const std::string &origin, bool markov = false) {
    if (e.dim_B != a_.dim_B() || e.num_inputs != a_.num_inputs() || e.num_outputs != a_.num_outputs()) return false;
    if (extension_residuals(e, a_).max() <= std::max(cfg_.project_tol, kSeedTol)) {
      add(e, origin, markov);
      return true;
    }
    try {
      add(project(constraints(e.dim_E), e.ops, cfg_.project_tol, cfg_.project_max_iters), origin);
      return true;
    } catch (const Error &err) {
      if (err.kind() != ErrorKind::kNumeric) throw;
      return false;
    }
  }

  // Product extension, classical extension when an LHS model exists and
  // random feasible points. `cap` limits every member to dim_E <= cap.
  void build_pool(int dim_E, std::optional<int> cap) {
    if (exact_) {
      add(product_extension(a_, Matrix::Identity(1, 1)), "product");
      return;
    }
    add(product_extension(a_, Matrix::Identity(dim_E, dim_E) / double(dim_E)), "product");
    if (cfg_.use_lhs_seed) add_lhs_seed(cap);
    random_dim_ = dim_E;
  }

  // Random feasible starting points, generated the first time a multi-start
  // refinement is needed.
  void ensure_random_starts() {
    if (random_done_ || exact_ || random_dim_ <= 1) return;
    random_done_ = true;
    const int db = a_.dim_B(), dim_E = random_dim_;
    std::vector<std::optional<NSExtension>> starts(cfg_.restarts);
    const auto &c = constraints(dim_E);
    parallel_for(cfg_.restarts, cfg_.threads, [&](int r) {
      Rng rng = Rng::stream(cfg_.seed, 1000 + r);
      const Matrix omega = random_density(dim_E, rng);
      std::vector<Matrix> blocks;
      for (const auto &op : a_.ops()) {
        const Matrix noise = random_density(db * dim_E, rng) - Matrix::Identity(db * dim_E, db * dim_E) / (db * dim_E);
        blocks.push_back(linalg::kron(op.matrix(), omega) + 0.5 * op.trace() * noise);
      }
      try {
        starts[r] = project(c, blocks, cfg_.project_tol, cfg_.project_max_iters);
      } catch (const Error &err) {
        if (err.kind() != ErrorKind::kNumeric) throw;
      }
    });
    for (int r = 0; r < cfg_.restarts; ++r)
      if (starts[r]) add(std::move(*starts[r]), "random-" + std::to_string(r));
  }

  // Pool members ordered by value at w.
  std::vector<std::pair<double, int>> ranked(const Eigen::MatrixXd &w) const {
    std::vector<std::pair<double, int>> v;
    for (size_t i = 0; i < pool_.size(); ++i) v.emplace_back(member_value(i, w), static_cast<int>(i));
    std::stable_sort(v.begin(), v.end(), [](const auto &l, const auto &r) { return l.first < r.first; });
    return v;
  }

  // Starts from the member that won last time; CMI is nonnegative, so a
  // zero value ends the scan.
  double pool_value(const Eigen::MatrixXd &w) const {
    const size_t n = pool_.size();
    double best = std::numeric_limits<double>::infinity();
    size_t winner = last_winner_ < n ? last_winner_ : 0;
    for (size_t k = 0; k < n && best > kZeroValue; ++k) {
      const size_t i = (last_winner_ + k) % n;
      const double v = member_value(i, w);
      if (v < best) {
        best = v;
        winner = i;
      }
    }
    last_winner_ = winner;
    return best;
  }

  Refined refine(const NSExtension &start, const Eigen::MatrixXd &w, int iters) {
    Refined out{start, value(start, w), true};
    if (out.value <= kZeroValue || start.dim_E == 1 || start.dim_B * start.dim_E > cfg_.max_refine_dim) return out;
    const auto &c = constraints(start.dim_E);
    Factorized prob{c, BranchWeights{inst_, w}, a_.num_inputs(), a_.num_outputs(), a_.dim_B(), start.dim_E};
    Blocks l;
    for (const auto &y : start.ops) l.push_back(psd_sqrt(y));
    Blocks lambda(l.size(), Matrix::Zero(l[0].rows(), l[0].cols()));
    double mu = cfg_.alm_penalty, previous = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int round = 0; round < cfg_.alm_rounds; ++round) {
      const bool inner_done = lbfgs(prob, l, lambda, mu, iters, std::clamp(1e-2 * previous, 1e-8, 1e-3));
      const Blocks n = prob.normal(prob.square(l));
      const double res = std::sqrt(dot(n, n));
      for (size_t k = 0; k < lambda.size(); ++k) lambda[k] += mu * n[k];
      if (res > 0.25 * previous) mu *= 10.0;
      previous = res;
      if (res < cfg_.alm_tol) {
        converged = inner_done;
        break;
      }
    }
    auto feasible = finalize(c, prob.square(l), cfg_);
    if (!feasible) {
      out.converged = false;
      return out;
    }
    const double v = value(*feasible, w);
    if (v < out.value) {
      out.ext = std::move(*feasible);
      out.value = v;
    }
    out.converged = converged;
    return out;
  }

  // Local minimization from the best `starts` pool members (all when
  // starts <= 0); the best result joins the pool.
  Refined refine_at(const std::vector<double> &p, int starts, int iters, std::vector<double> *values = nullptr) {
    const auto w = weights(p);
    if (starts <= 0 && pool_value(w) > kZeroValue) ensure_random_starts();
    const auto order = ranked(w);
    const int k = starts <= 0 ? static_cast<int>(order.size()) : std::min<int>(starts, order.size());
    Refined best;
    best.value = std::numeric_limits<double>::infinity();
    bool improved = false;  // best is not just a copy of a pool member
    for (int i = 0; i < k; ++i) {
      if (exact_) {
        best = {pool_[order[i].second].ext, order[i].first, true};
        break;
      }
      Refined r = refine(pool_[order[i].second].ext, w, iters);
      if (values != nullptr) values->push_back(r.value);
      if (r.value < best.value) {
        improved = r.value < order[i].first;
        best = std::move(r);
      }
      if (best.value <= kZeroValue) break;
    }
    if (improved) add(best.ext, "refined");
    return best;
  }

  SteeringEstimate search(const OuterSpace &space, const std::string &quantity) {
    SteeringEstimate est;
    est.quantity = quantity;
    est.exact = exact_;
    est.inner.method = exact_ ? "forced-product" : "augmented-lagrangian";
    const int n = static_cast<int>(space.grid.size());
    std::vector<std::vector<double>> ps(n);
    for (int i = 0; i < n; ++i) ps[i] = space.decode(space.grid[i]);

    using Entry = std::tuple<double, int, int>;  // stale value, index, pool version
    std::priority_queue<Entry> heap;
    for (int i = 0; i < n; ++i) heap.emplace(pool_value(weights(ps[i])), -i, version_);
    std::vector<bool> refined(n, false);
    std::vector<double> values(n, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    bool first = true;
    while (!heap.empty()) {
      auto [v, neg_i, ver] = heap.top();
      const int i = -neg_i;
      if (ver != version_) {
        heap.pop();
        const double now = pool_value(weights(ps[i]));
        heap.emplace(std::min(v, now), neg_i, version_);
        continue;
      }
      if (v <= best + cfg_.outer_tol) break;
      heap.pop();
      std::vector<double> start_values;
      const Refined r = refine_at(ps[i], first ? 0 : cfg_.refine_starts, cfg_.lbfgs_iters, &start_values);
      if (first) record_inner(est.inner, start_values, r.converged);
      first = false;
      refined[i] = true;
      values[i] = r.value;
      est.inner.converged = est.inner.converged && r.converged;
      if (r.value > best) {
        best = r.value;
        best_i = i;
        est.dim_E = r.ext.dim_E;
      }
    }
    while (!heap.empty()) {
      auto [v, neg_i, ver] = heap.top();
      heap.pop();
      values[-neg_i] = std::min(v, ver == version_ ? v : pool_value(weights(ps[-neg_i])));
    }
    for (int i = 0; i < n; ++i) est.trace.push_back({ps[i], values[i], refined[i]});
    est.p_X = ps[best_i];

    if (space.params > 0 && cfg_.nm_evals > 0) {
      auto objective = [&](const Eigen::VectorXd &q) {
        const auto p = space.decode(q);
        const Refined r = refine_at(p, cfg_.refine_starts, cfg_.nm_lbfgs_iters);
        est.trace.push_back({p, r.value, true});
        if (r.value > best) {
          best = r.value;
          est.p_X = p;
          est.dim_E = r.ext.dim_E;
        }
        return -r.value;
      };
      nelder_mead(objective, space.grid[best_i], space.step, cfg_.nm_evals);
    }
    est.raw_value = best;
    for (const auto &m : pool_) est.witnesses.push_back(m.ext);
    return est;
  }

 private:
  void add_lhs_seed(std::optional<int> cap) {
    try {
      const auto res = lhs_test(a_);
      if (res.status != LhsStatus::kFeasible || !res.model) return;
      const LhsModel model = prune_model(*res.model, 1e-12);
      const int n = std::max<int>(1, model.strategies.size());
      if (cap && n > *cap) return;
      add_seed(classical_extension(a_, model, cap ? *cap : 0), "classical", true);
    } catch (const Error &err) {
      if (err.kind() != ErrorKind::kCapacity && err.kind() != ErrorKind::kInconsistency) throw;
    }
  }

  static void record_inner(InnerStatus &s, std::vector<double> v, bool converged) {
    s.converged = converged;
    s.restarts_used = static_cast<int>(v.size());
    if (v.empty()) return;
    std::sort(v.begin(), v.end());
    s.best = v.front();
    s.median = v[v.size() / 2];
    s.spread = v.back() - v.front();
  }

  static void nelder_mead(const std::function<double(const Eigen::VectorXd &)> &f, const Eigen::VectorXd &x0,
                          double step, int max_evals) {
    const int n = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> xs{x0};
    std::vector<double> fs{f(x0)};
    int evals = 1;
    for (int i = 0; i < n && evals < max_evals; ++i) {
      Eigen::VectorXd x = x0;
      x(i) += x(i) + step <= 1.0 ? step : -step;
      xs.push_back(x);
      fs.push_back(f(x));
      ++evals;
    }
    if (static_cast<int>(xs.size()) < n + 1) return;
    while (evals < max_evals) {
      std::vector<int> order(n + 1);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int l, int r) { return fs[l] < fs[r]; });
      const int worst = order[n], second = order[n - 1], bestv = order[0];
      if (fs[worst] - fs[bestv] < 1e-7) break;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) centroid += xs[order[i]];
      centroid /= n;
      const Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
      const double fr = f(xr);
      ++evals;
      if (fr < fs[bestv] && evals < max_evals) {
        const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
        const double fe = f(xe);
        ++evals;
        if (fe < fr) {
          xs[worst] = xe;
          fs[worst] = fe;
        } else {
          xs[worst] = xr;
          fs[worst] = fr;
        }
      } else if (fr < fs[second]) {
        xs[worst] = xr;
        fs[worst] = fr;
      } else if (evals < max_evals) {
        const Eigen::VectorXd xc = centroid + 0.5 * (xs[worst] - centroid);
        const double fc = f(xc);
        ++evals;
        if (fc < fs[worst]) {
          xs[worst] = xc;
          fs[worst] = fc;
        } else {
          for (int i = 1; i <= n && evals < max_evals; ++i) {
            xs[order[i]] = xs[bestv] + 0.5 * (xs[order[i]] - xs[bestv]);
            fs[order[i]] = f(xs[order[i]]);
            ++evals;
          }
        }
      }
    }
  }

  const Assemblage &a_;
  const Instrument *inst_;
  std::optional<ClassicalChannel> channel_;
  SteerConfig cfg_;
  int ny_ = 1;
  bool exact_ = false;
  std::vector<Member> pool_;
  int version_ = 0;
  int random_dim_ = 0;
  bool random_done_ = false;
  mutable size_t last_winner_ = 0;
  std::map<int, ExtensionConstraints> constraints_;
};

void clip(SteeringEstimate &est, double upper) { est.value = std::clamp(est.raw_value, 0.0, upper); }

}  // namespace

SteeringEstimate ris_inner(const Assemblage &a, std::span<const double> p_X, int dim_E, const SteerConfig &cfg) {
  require_valid(a, "ris_inner");
  require_distribution(p_X, a.num_inputs(), "p_X");
  if (dim_E < 1) fail(ErrorKind::kArgument, "dim_E must be at least 1");
  Searcher s(a, nullptr, std::nullopt, cfg);
  s.build_pool(dim_E, dim_E);
  const std::vector<double> p(p_X.begin(), p_X.end());
  std::vector<double> values;
  const Refined r = s.refine_at(p, 0, cfg.lbfgs_iters, &values);
  SteeringEstimate est;
  est.quantity = "ris_inner";
  est.exact = s.exact();
  est.inner.method = s.exact() ? "forced-product" : "augmented-lagrangian";
  est.inner.converged = r.converged;
  est.inner.restarts_used = static_cast<int>(values.size());
  if (!values.empty()) {
    std::sort(values.begin(), values.end());
    est.inner.best = values.front();
    est.inner.median = values[values.size() / 2];
    est.inner.spread = values.back() - values.front();
  }
  est.raw_value = r.value;
  est.p_X = p;
  est.dim_E = s.exact() ? dim_E : r.ext.dim_E;
  est.outer_lower_bound = false;
  est.trace.push_back({p, r.value, true});
  for (const auto &m : s.pool()) est.witnesses.push_back(m.ext);
  clip(est, bound_for(a.num_outputs(), a.dim_B(), true));
  return est;
}

SteeringEstimate ris(const Assemblage &a, const SteerConfig &cfg, const std::vector<NSExtension> &seeds) {
  require_valid(a, "ris");
  Searcher s(a, nullptr, std::nullopt, cfg);
  s.build_pool(default_dim_E(a, cfg), std::nullopt);
  if (!s.exact())
    for (size_t i = 0; i < seeds.size(); ++i) s.add_seed(seeds[i], "seed-" + std::to_string(i));
  SteeringEstimate est =
      s.search(simplex_space(a.num_inputs(), grid_resolution(cfg, a.num_inputs())), "ris");
  if (s.exact()) est.dim_E = default_dim_E(a, cfg);
  clip(est, bound_for(a.num_outputs(), a.dim_B(), true));
  return est;
}

SteeringEstimate ris_product_inputs(const JointAssemblage &j, const SteerConfig &cfg,
                                    const std::vector<NSExtension> &seeds) {
  const Assemblage a = flatten(j);
  require_valid(a, "ris_product_inputs");
  Searcher s(a, nullptr, std::nullopt, cfg);
  s.build_pool(default_dim_E(a, cfg), std::nullopt);
  if (!s.exact())
    for (size_t i = 0; i < seeds.size(); ++i) s.add_seed(seeds[i], "seed-" + std::to_string(i));
  const int n1 = j.num_inputs1(), n2 = j.num_inputs2();
  SteeringEstimate est =
      s.search(product_space(n1, n2, grid_resolution(cfg, n1), grid_resolution(cfg, n2)), "ris_product_inputs");
  if (s.exact()) est.dim_E = default_dim_E(a, cfg);
  clip(est, bound_for(a.num_outputs(), a.dim_B(), true));
  return est;
}

std::vector<Strategy> default_strategy_library(const Assemblage &a, int rotation_grid) {
  std::vector<Strategy> lib;
  for (auto &named : instrument_library(a.dim_B(), rotation_grid)) {
    const int ny = named.instrument.num_branches();
    lib.push_back({named.name, named.instrument, std::nullopt});
    if (ny > 1 && named.name.rfind("mub", 0) == 0) {
      // Deterministic relays y -> x.
      long count = 1;
      for (int y = 0; y < ny; ++y) count *= a.num_inputs();
      if (count > 16) continue;
      for (long code = 0; code < count; ++code) {
        std::vector<int> map(ny);
        long rem = code;
        bool constant = true;
        for (int y = 0; y < ny; ++y) {
          map[y] = static_cast<int>(rem % a.num_inputs());
          rem /= a.num_inputs();
          constant = constant && map[y] == map[0];
        }
        if (constant) continue;
        std::string name = named.name + "-relay";
        for (int m : map) name += "-" + std::to_string(m);
        lib.push_back({name, named.instrument, ClassicalChannel::deterministic(a.num_inputs(), map)});
      }
    }
  }
  return lib;
}

SteeringEstimate is_lower(const Assemblage &a, const std::vector<Strategy> &library, const SteerConfig &cfg) {
  require_valid(a, "is_lower");
  if (library.empty()) fail(ErrorKind::kArgument, "strategy library is empty");
  SteeringEstimate best;
  best.raw_value = -std::numeric_limits<double>::infinity();
  for (const auto &strategy : library) {
    if (strategy.instrument.dim_in() != a.dim_B()) {
      fail(ErrorKind::kArgument, "strategy '" + strategy.name + "' does not act on dim_B");
    }
    SteeringEstimate est;
    if (strategy.instrument.num_branches() == 1 && !strategy.p_X_given_Y &&
        linalg::max_abs(strategy.instrument.kraus(0)[0] - Matrix::Identity(a.dim_B(), a.dim_B())) == 0.0 &&
        strategy.instrument.kraus(0).size() == 1) {
      est = ris(a, cfg);
    } else {
      Searcher s(a, &strategy.instrument, strategy.p_X_given_Y, cfg);
      s.build_pool(default_dim_E(a, cfg), std::nullopt);
      if (strategy.p_X_given_Y) {
        std::vector<double> values;
        const auto w = s.weights({});
        const Refined r = s.refine_at(std::vector<double>(a.num_inputs(), 0.0), 0, cfg.lbfgs_iters, &values);
        est.raw_value = r.value;
        est.dim_E = s.exact() ? default_dim_E(a, cfg) : r.ext.dim_E;
        est.exact = s.exact();
        est.inner.converged = r.converged;
        est.inner.restarts_used = static_cast<int>(values.size());
        est.inner.method = s.exact() ? "forced-product" : "augmented-lagrangian";
        std::vector<double> induced(a.num_inputs(), 0.0);
        const Matrix rho_b = a.bob_state();
        for (int y = 0; y < strategy.instrument.num_branches(); ++y) {
          const double py = strategy.instrument.apply(y, rho_b).trace().real();
          for (int x = 0; x < a.num_inputs(); ++x) induced[x] += py * w(x, y);
        }
        est.p_X = induced;
        est.trace.push_back({induced, r.value, true});
      } else {
        est = s.search(simplex_space(a.num_inputs(), grid_resolution(cfg, a.num_inputs())), "is_lower");
        if (s.exact()) est.dim_E = default_dim_E(a, cfg);
      }
    }
    est.strategy = strategy.name;
    if (est.raw_value > best.raw_value) best = std::move(est);
  }
  best.quantity = "is_lower";
  best.witnesses.clear();
  clip(best, bound_for(a.num_outputs(), a.dim_B(), false));
  return best;
}

double simulation_rate(const HermitianOp &psi_ABE, const RegisterLayout &layout,
                       const std::vector<std::vector<HermitianOp>> &povms, std::span<const double> p_X) {
  if (layout.size() != 3 || !layout.contains("A") || !layout.contains("B") || !layout.contains("E")) {
    fail(ErrorKind::kArgument, "layout must consist of registers A, B and E");
  }
  if (layout.total_dim() != psi_ABE.dim()) fail(ErrorKind::kArgument, "layout does not match the state");
  const auto e = linalg::eigh(psi_ABE.matrix());
  if (std::abs(psi_ABE.trace() - 1.0) > 1e-9 || e.values(e.values.size() - 1) < 1.0 - 1e-9) {
    fail(ErrorKind::kArgument, "simulation_rate needs a pure state");
  }
  const int nx = static_cast<int>(povms.size());
  require_distribution(p_X, nx, "p_X");
  // Reorder to A, B, E.
  std::vector<int> dims, perm;
  for (const auto &r : layout.registers()) dims.push_back(r.dim);
  for (const char *label : {"A", "B", "E"}) perm.push_back(layout.index_of(label));
  const Matrix psi = linalg::permute_subsystems(psi_ABE.matrix(), dims, perm);
  const int da = layout.dim_of("A"), db = layout.dim_of("B"), de = layout.dim_of("E");
  const int na = static_cast<int>(povms.front().size());
  std::vector<HermitianOp> ops;
  for (int x = 0; x < nx; ++x) {
    if (static_cast<int>(povms[x].size()) != na) fail(ErrorKind::kArgument, "POVMs need equal outcome counts");
    Matrix total = Matrix::Zero(da, da);
    for (const auto &effect : povms[x]) {
      if (effect.dim() != da) fail(ErrorKind::kArgument, "POVM effect has the wrong dimension");
      total += effect.matrix();
    }
    if (linalg::max_abs(total - Matrix::Identity(da, da)) > 1e-9) fail(ErrorKind::kArgument, "POVM is incomplete");
  }
  NSExtension ext{db, de, nx, na, {}};
  for (int x = 0; x < nx; ++x)
    for (int o = 0; o < na; ++o) {
      const Matrix lifted = linalg::lift_first(povms[x][o].matrix(), db * de);
      ext.ops.push_back(linalg::hermitize(linalg::trace_first(lifted * psi, da, db * de)));
    }
  return extension_value(ext, p_X);
}

}  // namespace steerq
