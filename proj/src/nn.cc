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

#include "cgnet/nn.h"

#include <algorithm>
#include <cmath>

namespace cgnet::nn {

template <typename T>
int ParamSet<T>::Add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw ShapeError("duplicate parameter '" + name + "'");
  index_[name] = size();
  names_.push_back(name);
  values_.push_back(Matrix<T>::Zero(rows, cols));
  return size() - 1;
}

template <typename T>
int ParamSet<T>::Find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

template <typename T>
int ParamSet<T>::Index(const std::string& name) const {
  const int i = Find(name);
  if (i < 0) throw ShapeError("no parameter named '" + name + "'");
  return i;
}

template <typename T>
ParamSet<T> ParamSet<T>::ZerosLike() const {
  ParamSet out;
  for (int i = 0; i < size(); ++i) {
    out.Add(names_[i], static_cast<int>(values_[i].rows()),
            static_cast<int>(values_[i].cols()));
  }
  return out;
}

template <typename T>
void ParamSet<T>::SetZero() {
  for (auto& v : values_) v.setZero();
}

template <typename T>
std::size_t ParamSet<T>::NumScalars() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

template <typename T>
bool ParamSet<T>::SameLayout(const ParamSet& other) const {
  if (other.size() != size()) return false;
  for (int i = 0; i < size(); ++i) {
    if (names_[i] != other.names_[i] || values_[i].rows() != other[i].rows() ||
        values_[i].cols() != other[i].cols()) {
      return false;
    }
  }
  return true;
}

template <typename T>
void Im2Col(const FeatureMap<T>& in, const ConvShape& s, RowMatrix<T>& cols) {
  const int k = s.kernel;
  const int ho = s.OutSize(in.height);
  const int wo = s.OutSize(in.width);
  cols.setZero(static_cast<Eigen::Index>(in.channels) * k * k,
               static_cast<Eigen::Index>(ho) * wo);
  for (int ci = 0; ci < in.channels; ++ci) {
    const T* plane = in.data.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols.row((ci * k + ky) * k + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ky;
          if (iy < 0 || iy >= in.height) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.pad + kx;
            if (ix < 0 || ix >= in.width) continue;
            row[oy * wo + ox] = plane[iy * in.width + ix];
          }
        }
      }
    }
  }
}

namespace {

template <typename T>
void Col2Im(const RowMatrix<T>& dcols, const ConvShape& s, FeatureMap<T>& din) {
  const int k = s.kernel;
  const int ho = s.OutSize(din.height);
  const int wo = s.OutSize(din.width);
  din.data.setZero();
  for (int ci = 0; ci < din.channels; ++ci) {
    T* plane = din.data.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = dcols.row((ci * k + ky) * k + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * s.stride - s.pad + ky;
          if (iy < 0 || iy >= din.height) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * s.stride - s.pad + kx;
            if (ix < 0 || ix >= din.width) continue;
            plane[iy * din.width + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
}

bool IsPointwise(const ConvShape& s) {
  return s.kernel == 1 && s.stride == 1 && s.pad == 0;
}

}  // namespace

template <typename T>
FeatureMap<T> Conv2dForward(const FeatureMap<T>& in, const Matrix<T>& weight,
                            const Matrix<T>& bias, const ConvShape& s,
                            RowMatrix<T>& cols) {
  const int k = s.kernel;
  if (weight.cols() != in.channels * k * k) {
    throw ShapeError("conv weight expects " + std::to_string(weight.cols()) +
                     " inputs, got " + std::to_string(in.channels * k * k));
  }
  FeatureMap<T> out(static_cast<int>(weight.rows()), s.OutSize(in.height),
                    s.OutSize(in.width));
  if (IsPointwise(s)) {
    out.data.noalias() = weight * in.data;
  } else {
    Im2Col(in, s, cols);
    out.data.noalias() = weight * cols;
  }
  out.data.colwise() += bias.col(0);
  return out;
}

template <typename T>
void Conv2dBackward(const FeatureMap<T>& in, const RowMatrix<T>& cols,
                    const Matrix<T>& weight, const ConvShape& s,
                    const RowMatrix<T>& dout, Matrix<T>& dweight,
                    Matrix<T>& dbias, FeatureMap<T>* din) {
  const RowMatrix<T>& x = IsPointwise(s) ? in.data : cols;
  dweight.noalias() += dout * x.transpose();
  dbias.col(0) += dout.rowwise().sum();
  if (din == nullptr) return;
  *din = FeatureMap<T>(in.channels, in.height, in.width);
  if (IsPointwise(s)) {
    din->data.noalias() = weight.transpose() * dout;
  } else {
    RowMatrix<T> dcols = weight.transpose() * dout;
    Col2Im(dcols, s, *din);
  }
}

template <typename T>
Matrix<T> Softmax(const Matrix<T>& logits) {
  Matrix<T> out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const T m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

template <typename T>
void LstmForward(const Matrix<T>& inputs, const Matrix<T>& wx,
                 const Matrix<T>& wh, const Matrix<T>& b, LstmCache<T>& cache) {
  const Eigen::Index hdim = wh.cols();
  const Eigen::Index len = inputs.cols();
  if (wx.cols() != inputs.rows() || wx.rows() != 4 * hdim) {
    throw ShapeError("LSTM input width mismatch");
  }
  cache.inputs = inputs;
  cache.gates.resize(4 * hdim, len);
  cache.c = Matrix<T>::Zero(hdim, len + 1);
  cache.h = Matrix<T>::Zero(hdim, len + 1);
  Matrix<T> pre = wx * inputs;
  pre.colwise() += b.col(0);
  Vector<T> z(4 * hdim);
  for (Eigen::Index t = 0; t < len; ++t) {
    z.noalias() = pre.col(t) + wh * cache.h.col(t);
    for (Eigen::Index u = 0; u < hdim; ++u) {
      const T i = Sigmoid(z(u));
      const T f = Sigmoid(z(hdim + u));
      const T g = std::tanh(z(2 * hdim + u));
      const T o = Sigmoid(z(3 * hdim + u));
      const T c = f * cache.c(u, t) + i * g;
      cache.c(u, t + 1) = c;
      cache.h(u, t + 1) = o * std::tanh(c);
      cache.gates(u, t) = i;
      cache.gates(hdim + u, t) = f;
      cache.gates(2 * hdim + u, t) = g;
      cache.gates(3 * hdim + u, t) = o;
    }
  }
}

template <typename T>
Matrix<T> LstmBackward(const LstmCache<T>& cache, const Matrix<T>& wx,
                       const Matrix<T>& wh, const Matrix<T>& dh, Matrix<T>& dwx,
                       Matrix<T>& dwh, Matrix<T>& db) {
  const Eigen::Index hdim = wh.cols();
  const Eigen::Index len = cache.inputs.cols();
  Matrix<T> dz(4 * hdim, len);
  Vector<T> dh_next = Vector<T>::Zero(hdim);
  Vector<T> dc_next = Vector<T>::Zero(hdim);
  for (Eigen::Index t = len - 1; t >= 0; --t) {
    for (Eigen::Index u = 0; u < hdim; ++u) {
      const T i = cache.gates(u, t);
      const T f = cache.gates(hdim + u, t);
      const T g = cache.gates(2 * hdim + u, t);
      const T o = cache.gates(3 * hdim + u, t);
      const T tc = std::tanh(cache.c(u, t + 1));
      const T dht = dh(u, t) + dh_next(u);
      const T dc = dc_next(u) + dht * o * (T(1) - tc * tc);
      dz(u, t) = dc * g * i * (T(1) - i);
      dz(hdim + u, t) = dc * cache.c(u, t) * f * (T(1) - f);
      dz(2 * hdim + u, t) = dc * i * (T(1) - g * g);
      dz(3 * hdim + u, t) = dht * tc * o * (T(1) - o);
      dc_next(u) = dc * f;
    }
    dh_next.noalias() = wh.transpose() * dz.col(t);
  }
  dwx.noalias() += dz * cache.inputs.transpose();
  dwh.noalias() += dz * cache.h.leftCols(len).transpose();
  db.col(0) += dz.rowwise().sum();
  return wx.transpose() * dz;
}

template <typename T>
Eigen::SparseMatrix<T> RoiAlignMatrix(const std::vector<RoiBox>& rois,
                                      int feat_height, int feat_width,
                                      double stride, int pooled, int samples) {
  std::vector<Eigen::Triplet<T>> taps;
  taps.reserve(rois.size() * pooled * pooled * samples * samples * 4);
  const double share = 1.0 / (samples * samples);
  for (std::size_t r = 0; r < rois.size(); ++r) {
    const RoiBox& roi = rois[r];
    const double bin_w = std::max(roi.x2 - roi.x1, 1.0) / pooled;
    const double bin_h = std::max(roi.y2 - roi.y1, 1.0) / pooled;
    for (int py = 0; py < pooled; ++py) {
      for (int px = 0; px < pooled; ++px) {
        const int col = static_cast<int>(r) * pooled * pooled + py * pooled + px;
        for (int sy = 0; sy < samples; ++sy) {
          for (int sx = 0; sx < samples; ++sx) {
            double fy = (roi.y1 + (py + (sy + 0.5) / samples) * bin_h) / stride - 0.5;
            double fx = (roi.x1 + (px + (sx + 0.5) / samples) * bin_w) / stride - 0.5;
            if (fy < -1.0 || fy > feat_height || fx < -1.0 || fx > feat_width) continue;
            fy = std::clamp(fy, 0.0, feat_height - 1.0);
            fx = std::clamp(fx, 0.0, feat_width - 1.0);
            const int y0 = static_cast<int>(fy);
            const int x0 = static_cast<int>(fx);
            const int y1 = std::min(y0 + 1, feat_height - 1);
            const int x1 = std::min(x0 + 1, feat_width - 1);
            const double ly = fy - y0, lx = fx - x0;
            auto tap = [&](int y, int x, double w) {
              if (w > 0.0) {
                taps.emplace_back(y * feat_width + x, col, static_cast<T>(w * share));
              }
            };
            tap(y0, x0, (1 - ly) * (1 - lx));
            tap(y0, x1, (1 - ly) * lx);
            tap(y1, x0, ly * (1 - lx));
            tap(y1, x1, ly * lx);
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<T> s(static_cast<Eigen::Index>(feat_height) * feat_width,
                           static_cast<Eigen::Index>(rois.size()) * pooled * pooled);
  s.setFromTriplets(taps.begin(), taps.end());
  return s;
}

template <typename T>
void FillNormal(Matrix<T>& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
  }
}

template <typename T>
void FillUniform(Matrix<T>& m, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(dist(rng));
  }
}

#define CGNET_NN_INSTANTIATE(T)                                                \
  template class ParamSet<T>;                                                  \
  template void Im2Col(const FeatureMap<T>&, const ConvShape&, RowMatrix<T>&); \
  template FeatureMap<T> Conv2dForward(const FeatureMap<T>&, const Matrix<T>&, \
                                       const Matrix<T>&, const ConvShape&,     \
                                       RowMatrix<T>&);                         \
  template void Conv2dBackward(const FeatureMap<T>&, const RowMatrix<T>&,      \
                               const Matrix<T>&, const ConvShape&,             \
                               const RowMatrix<T>&, Matrix<T>&, Matrix<T>&,    \
                               FeatureMap<T>*);                                \
  template Matrix<T> Softmax(const Matrix<T>&);                                \
  template void LstmForward(const Matrix<T>&, const Matrix<T>&,                \
                            const Matrix<T>&, const Matrix<T>&, LstmCache<T>&); \
  template Matrix<T> LstmBackward(const LstmCache<T>&, const Matrix<T>&,       \
                                  const Matrix<T>&, const Matrix<T>&,          \
                                  Matrix<T>&, Matrix<T>&, Matrix<T>&);         \
  template Eigen::SparseMatrix<T> RoiAlignMatrix<T>(                           \
      const std::vector<RoiBox>&, int, int, double, int, int);                 \
  template void FillNormal(Matrix<T>&, double, std::mt19937_64&);              \
  template void FillUniform(Matrix<T>&, double, std::mt19937_64&);

CGNET_NN_INSTANTIATE(float)
CGNET_NN_INSTANTIATE(double)

#undef CGNET_NN_INSTANTIATE

}  // namespace cgnet::nn
