// Copyright (c) 2026 The attnscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Independent reference computations for the unit and acceptance suites.
// Everything here uses plain loops and long double and never calls into the
// library's numeric paths.
#ifndef ATTNSCORE_TESTS_ORACLES_H_
#define ATTNSCORE_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "attnscore/error.h"
#include "attnscore/feature_store.h"
#include "attnscore/rng.h"

namespace oracle {

using attnscore::FrameMatrix;

inline FrameMatrix RandomFrames(attnscore::Rng& rng, int rows, int cols, double scale = 1.0,
                                double offset = 0.0) {
  FrameMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = offset + scale * rng.Normal();
  }
  return m;
}

/// Rows are softmax(sharpness * noise); strictly positive.
inline FrameMatrix RandomPosteriors(attnscore::Rng& rng, int rows, int cols,
                                    double sharpness = 2.0) {
  FrameMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    long double sum = 0;
    for (int c = 0; c < cols; ++c) {
      m(r, c) = std::exp(sharpness * rng.Normal());
      sum += m(r, c);
    }
    for (int c = 0; c < cols; ++c) m(r, c) = static_cast<double>(m(r, c) / sum);
  }
  return m;
}

inline long double Dot(const FrameMatrix& a, int ra, const FrameMatrix& b, int rb) {
  long double s = 0;
  for (int c = 0; c < a.cols(); ++c) {
    s += static_cast<long double>(a(ra, c)) * b(rb, c);
  }
  return s;
}

inline long double CosineRows(const FrameMatrix& a, int ra, const FrameMatrix& b, int rb) {
  return Dot(a, ra, b, rb) / std::sqrt(Dot(a, ra, a, ra) * Dot(b, rb, b, rb));
}

/// Kahan-compensated column means.
inline std::vector<long double> ColumnMeans(const FrameMatrix& m) {
  std::vector<long double> out(m.cols());
  for (int c = 0; c < m.cols(); ++c) {
    long double sum = 0, comp = 0;
    for (int r = 0; r < m.rows(); ++r) {
      const long double y = m(r, c) - comp;
      const long double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    out[c] = sum / m.rows();
  }
  return out;
}

inline long double CosineVec(const std::vector<long double>& a, const std::vector<long double>& b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

/// Mean over all (t, i) pairs of cos(test_t, enroll_i).
inline long double MeanPairwiseCosine(const FrameMatrix& test, const FrameMatrix& enroll) {
  long double s = 0;
  for (int t = 0; t < test.rows(); ++t) {
    for (int i = 0; i < enroll.rows(); ++i) s += CosineRows(test, t, enroll, i);
  }
  return s / (static_cast<long double>(test.rows()) * enroll.rows());
}

inline long double BruteKl(const std::vector<long double>& p, const std::vector<long double>& q) {
  long double s = 0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * std::log(p[k] / q[k]);
  return s;
}

inline std::vector<long double> FloorRow(const FrameMatrix& m, int r, long double floor) {
  std::vector<long double> out(m.cols());
  long double sum = 0;
  for (int c = 0; c < m.cols(); ++c) {
    out[c] = std::max<long double>(m(r, c), floor);
    sum += out[c];
  }
  for (auto& v : out) v /= sum;
  return out;
}

/// Attention matrix by double loop: weights proportional to
/// 1 / max(cost(t, i), floor).
inline std::vector<std::vector<long double>> BruteAttention(
    int rows, int cols, const std::function<long double(int, int)>& cost, long double floor) {
  std::vector<std::vector<long double>> w(rows, std::vector<long double>(cols));
  for (int t = 0; t < rows; ++t) {
    long double sum = 0;
    for (int i = 0; i < cols; ++i) {
      w[t][i] = 1.0L / std::max(cost(t, i), floor);
      sum += w[t][i];
    }
    for (auto& v : w[t]) v /= sum;
  }
  return w;
}

inline std::vector<std::vector<long double>> BruteKlAttention(const FrameMatrix& p_test,
                                                              const FrameMatrix& p_enroll,
                                                              long double kl_floor,
                                                              long double posterior_floor) {
  return BruteAttention(
      static_cast<int>(p_test.rows()), static_cast<int>(p_enroll.rows()),
      [&](int t, int i) {
        return BruteKl(FloorRow(p_test, t, posterior_floor),
                       FloorRow(p_enroll, i, posterior_floor));
      },
      kl_floor);
}

inline std::vector<std::vector<long double>> BruteDistanceAttention(const FrameMatrix& x_test,
                                                                    const FrameMatrix& x_enroll,
                                                                    long double dist_floor) {
  return BruteAttention(
      static_cast<int>(x_test.rows()), static_cast<int>(x_enroll.rows()),
      [&](int t, int i) {
        long double s = 0;
        for (int c = 0; c < x_test.cols(); ++c) {
          const long double d = static_cast<long double>(x_test(t, c)) - x_enroll(i, c);
          s += d * d;
        }
        return s;
      },
      dist_floor);
}

/// Brute-force attention-weighted score.
inline long double BruteAttentionScore(const std::vector<std::vector<long double>>& alpha,
                                       const FrameMatrix& test, const FrameMatrix& enroll) {
  long double d = 0;
  for (int t = 0; t < test.rows(); ++t) {
    for (int i = 0; i < enroll.rows(); ++i) {
      d += alpha[t][i] * CosineRows(test, t, enroll, i);
    }
  }
  return d / test.rows();
}

struct SweepResult {
  double eer;
  bool exact_crossing;
};

/// EER by evaluating every distinct-score midpoint with direct counting.
inline SweepResult BruteEer(const std::vector<double>& tgt, const std::vector<double>& non) {
  std::vector<double> all = tgt;
  all.insert(all.end(), non.begin(), non.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> thresholds{all.front() - 1.0};
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    thresholds.push_back((all[k] + all[k + 1]) / 2.0);
  }
  thresholds.push_back(all.back() + 1.0);

  double prev_far = 1.0, prev_frr = 0.0;
  for (double th : thresholds) {
    std::size_t fa = 0, fr = 0;
    for (double s : non) fa += s >= th;
    for (double s : tgt) fr += s < th;
    const double far = static_cast<double>(fa) / non.size();
    const double frr = static_cast<double>(fr) / tgt.size();
    if (far == frr) return {far, true};
    if (far < frr) {
      // Intersection of the two segments, solved on the FRR side.
      const double s = (prev_far - prev_frr) / ((prev_far - prev_frr) - (far - frr));
      return {prev_frr + s * (frr - prev_frr), false};
    }
    prev_far = far;
    prev_frr = frr;
  }
  return {0.5, false};
}

template <typename F>
attnscore::ErrorKind KindOf(F&& f) {
  try {
    f();
  } catch (const attnscore::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected attnscore::Error");
}

}  // namespace oracle

#endif  // ATTNSCORE_TESTS_ORACLES_H_
