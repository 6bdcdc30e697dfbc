/* Copyright 2026 The CGNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Minimal dense layers with hand-written backward passes. Everything is
// templated on the scalar type so that the same code runs in single precision
// for training and in double precision for gradient checking.

#ifndef CGNET_NN_H_
#define CGNET_NN_H_

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace cgnet::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// C x H x W activations stored as a (C, H*W) row-major matrix, so each
// channel plane is contiguous.
template <typename T>
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  RowMatrix<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w)
      : channels(c), height(h), width(w), data(RowMatrix<T>::Zero(c, h * w)) {}
  T& at(int c, int y, int x) { return data(c, y * width + x); }
  T at(int c, int y, int x) const { return data(c, y * width + x); }
};

// Ordered collection of named parameter arrays. Gradients and optimizer
// moments use the same layout.
template <typename T>
class ParamSet {
 public:
  int Add(const std::string& name, int rows, int cols);
  int Find(const std::string& name) const;
  int Index(const std::string& name) const;  // throws when missing

  int size() const { return static_cast<int>(values_.size()); }
  Matrix<T>& operator[](int i) { return values_[i]; }
  const Matrix<T>& operator[](int i) const { return values_[i]; }
  Matrix<T>& operator[](const std::string& name) { return values_[Index(name)]; }
  const Matrix<T>& operator[](const std::string& name) const {
    return values_[Index(name)];
  }
  const std::string& name(int i) const { return names_[i]; }

  ParamSet ZerosLike() const;
  void SetZero();
  std::size_t NumScalars() const;
  bool SameLayout(const ParamSet& other) const;

  template <typename U>
  ParamSet<U> Cast() const {
    ParamSet<U> out;
    for (int i = 0; i < size(); ++i) {
      out.Add(names_[i], static_cast<int>(values_[i].rows()),
              static_cast<int>(values_[i].cols()));
      out[i] = values_[i].template cast<U>();
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix<T>> values_;
  std::map<std::string, int> index_;
};

// Square-kernel 2D convolution with zero padding. Weight is (Cout, Cin*k*k)
// with column index (ci*k + ky)*k + kx, bias is (Cout, 1).
struct ConvShape {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int OutSize(int in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

template <typename T>
void Im2Col(const FeatureMap<T>& in, const ConvShape& s, RowMatrix<T>& cols);

template <typename T>
FeatureMap<T> Conv2dForward(const FeatureMap<T>& in, const Matrix<T>& weight,
                            const Matrix<T>& bias, const ConvShape& s,
                            RowMatrix<T>& cols);

// Accumulates into dweight/dbias. When `din` is non-null it receives the
// input gradient (overwritten).
template <typename T>
void Conv2dBackward(const FeatureMap<T>& in, const RowMatrix<T>& cols,
                    const Matrix<T>& weight, const ConvShape& s,
                    const RowMatrix<T>& dout, Matrix<T>& dweight,
                    Matrix<T>& dbias, FeatureMap<T>* din);

template <typename M>
void ReluInPlace(M&& x) {
  using T = typename std::decay_t<M>::Scalar;
  x = x.cwiseMax(T(0));
}

// Zeroes gradient entries where the forward output was not positive.
template <typename Out, typename Grad>
void ReluBackward(const Out& out, Grad&& grad) {
  using T = typename std::decay_t<Grad>::Scalar;
  grad = (out.array() > T(0)).select(grad.array(), T(0)).matrix();
}

template <typename T>
T Sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x))
                   : std::exp(x) / (T(1) + std::exp(x));
}

// Column-wise softmax.
template <typename T>
Matrix<T> Softmax(const Matrix<T>& logits);

// Single LSTM layer over a sequence. Gates are stacked i, f, g, o.
template <typename T>
struct LstmCache {
  Matrix<T> inputs;  // (In, L)
  Matrix<T> gates;   // (4H, L) after nonlinearities
  Matrix<T> c;       // (H, L+1), column 0 is the zero state
  Matrix<T> h;       // (H, L+1)
};

template <typename T>
void LstmForward(const Matrix<T>& inputs, const Matrix<T>& wx,
                 const Matrix<T>& wh, const Matrix<T>& b, LstmCache<T>& cache);

// `dh` holds the gradient w.r.t. every output h_t as columns (H, L).
// Returns the input gradient (In, L).
template <typename T>
Matrix<T> LstmBackward(const LstmCache<T>& cache, const Matrix<T>& wx,
                       const Matrix<T>& wh, const Matrix<T>& dh, Matrix<T>& dwx,
                       Matrix<T>& dwh, Matrix<T>& db);

// Bilinear ROI sampling. Produces, for every ROI, a P x P grid per channel by
// averaging `samples` x `samples` bilinear taps per bin. The operation is
// linear in the feature map, so it is expressed as a sparse matrix S of shape
// (H*W, R*P*P) with output = features * S.
struct RoiBox {
  double x1, y1, x2, y2;  // image pixels
};

template <typename T>
Eigen::SparseMatrix<T> RoiAlignMatrix(const std::vector<RoiBox>& rois,
                                      int feat_height, int feat_width,
                                      double stride, int pooled, int samples);

// Weight initializers.
template <typename T>
void FillNormal(Matrix<T>& m, double stddev, std::mt19937_64& rng);
template <typename T>
void FillUniform(Matrix<T>& m, double limit, std::mt19937_64& rng);

}  // namespace cgnet::nn

#endif  // CGNET_NN_H_
