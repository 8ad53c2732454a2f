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

#include "steerq/random.hpp"

#include <cmath>

namespace steerq {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix ginibre(int rows, int cols, Rng &rng) {
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = Complex(rng.normal(), rng.normal());
  return g;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

int Rng::uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }

Vector random_pure_state(int dim, Rng &rng) {
  Vector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

Matrix haar_unitary(int dim, Rng &rng) { return random_isometry(dim, dim, rng); }

Matrix random_isometry(int rows, int cols, Rng &rng) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(rows, cols, rng));
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < cols; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0) q.col(j) *= d / mag;
  }
  return q;
}

Matrix random_density(int dim, Rng &rng, int rank) {
  const Matrix g = ginibre(dim, rank > 0 ? rank : dim, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return linalg::hermitize(rho);
}

std::vector<double> random_simplex(int n, Rng &rng) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto &x : w) {
    x = -std::log(1.0 - rng.uniform());
    total += x;
  }
  for (auto &x : w) x /= total;
  return w;
}

}  // namespace steerq
