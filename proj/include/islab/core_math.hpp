/*
 * Copyright 2026 The islab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ISLAB_CORE_MATH_HPP
#define ISLAB_CORE_MATH_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace islab {

using Vector = std::vector<double>;

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Deterministic generator. Substreams are derived from the seed and a stream
// id only, so the draws of stream k never depend on how many other streams
// exist or how far they have been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  Rng substream(std::uint64_t stream_id) const;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id);

// Scalar nonlinearities.
double sigmoid(double z);
double log_sigmoid(double z);  // ln sigmoid(z), stable for large |z|
double softplus(double z);
double softplus_inverse(double y);
double logit(double p);
inline double relu(double z) { return z > 0.0 ? z : 0.0; }
inline double relu_grad(double z) { return z > 0.0 ? 1.0 : 0.0; }

double gauss_sample(Rng& rng, double mean, double stddev);

Vector softmax(std::span<const double> v);
double log_sum_exp(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
Vector matvec(const Matrix& m, std::span<const double> x);
Matrix transpose(const Matrix& m);

// C = A * B.
Matrix matmul(const Matrix& a, const Matrix& b);
// C += A^T * B, with A (n x p), B (n x q), C (p x q). Summation over n runs in
// index order for every entry.
void accumulate_at_b(const Matrix& a, const Matrix& b, Matrix& c);

// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

}  // namespace islab

#endif  // ISLAB_CORE_MATH_HPP
