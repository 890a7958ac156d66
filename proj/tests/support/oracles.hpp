#pragma once

// Independent reference implementations used by unit and acceptance tests.
// Nothing here calls into the stepping code of the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Two lumped subdomains m_i ċ_i + k_i c_i = C_i λ, C = (+1, -1), c_i(0) = 1.
struct SdofSample {
  double t = 0.0;
  double d[2] = {0.0, 0.0};
  double v[2] = {0.0, 0.0};
  double lambda = 0.0;
};

struct SdofSetup {
  double m[2] = {100.0, 1.0};
  double k[2] = {1.0, 100.0};
  double dt = 0.1;
  double dt_sub[2] = {0.05, 0.1};
  double theta[2] = {1.0, 0.5};
  bool baumgarte = false;
  double alpha = 0.0;
  int steps = 10;
};

// Builds the full per-step KKT system densely, unknown by unknown, and solves it with a
// column-pivoting QR. Unknowns: per subdomain and sublevel (v_j, d_j), then λ^{n+1}.
inline std::vector<SdofSample> sdof_dense_kkt(const SdofSetup& s) {
  const double sign[2] = {1.0, -1.0};
  SdofSample cur;
  cur.d[0] = cur.d[1] = 1.0;
  // consistent start: Σ C_i m_i⁻¹ (C_i λ - k_i d_i) = 0
  double schur = 1.0 / s.m[0] + 1.0 / s.m[1];
  double rhs = -(sign[0] * (-s.k[0]) / s.m[0] + sign[1] * (-s.k[1]) / s.m[1]);
  cur.lambda = rhs / schur;
  for (int i = 0; i < 2; ++i) cur.v[i] = (-s.k[i] * cur.d[i] + sign[i] * cur.lambda) / s.m[i];

  std::vector<SdofSample> out{cur};
  for (int n = 0; n < s.steps; ++n) {
    int eta[2];
    for (int i = 0; i < 2; ++i) eta[i] = static_cast<int>(std::lround(s.dt / s.dt_sub[i]));
    const int n_unknowns = 2 * eta[0] + 2 * eta[1] + 1;
    const int lam = n_unknowns - 1;
    auto v_at = [&](int i, int j) { return (i == 0 ? 0 : 2 * eta[0]) + 2 * (j - 1); };
    auto d_at = [&](int i, int j) { return v_at(i, j) + 1; };
    Mat A = Mat::Zero(n_unknowns, n_unknowns);
    Vec b = Vec::Zero(n_unknowns);
    int r = 0;
    for (int i = 0; i < 2; ++i) {
      const double h = s.dt_sub[i], th = s.theta[i];
      for (int j = 1; j <= eta[i]; ++j) {
        const double w = static_cast<double>(j) / eta[i];
        // m v_j + k d_j - C_i ((1 - w) λ^n + w λ^{n+1}) = 0
        A(r, v_at(i, j)) = s.m[i];
        A(r, d_at(i, j)) = s.k[i];
        A(r, lam) = -sign[i] * w;
        b(r) = sign[i] * (1.0 - w) * cur.lambda;
        ++r;
        // d_j - d_{j-1} - h ((1 - θ) v_{j-1} + θ v_j) = 0
        A(r, d_at(i, j)) = 1.0;
        A(r, v_at(i, j)) = -h * th;
        if (j == 1) {
          b(r) = cur.d[i] + h * (1.0 - th) * cur.v[i];
        } else {
          A(r, d_at(i, j - 1)) = -1.0;
          A(r, v_at(i, j - 1)) = -h * (1.0 - th);
        }
        ++r;
      }
    }
    for (int i = 0; i < 2; ++i) {
      if (s.baumgarte) {
        A(r, v_at(i, eta[i])) = sign[i];
        A(r, d_at(i, eta[i])) = sign[i] * s.alpha / s.dt;
      } else {
        A(r, d_at(i, eta[i])) = sign[i];
      }
    }
    Vec x = A.colPivHouseholderQr().solve(b);
    SdofSample next;
    next.t = cur.t + s.dt;
    for (int i = 0; i < 2; ++i) {
      next.d[i] = x(d_at(i, eta[i]));
      next.v[i] = x(v_at(i, eta[i]));
    }
    next.lambda = x(lam);
    out.push_back(next);
    cur = next;
  }
  return out;
}

// Standalone trapezoidal family for (M + M_s) ċ + K c = f(t) with the stabilization capacity
// applied to the weighted rate: M v^{n+1} + M_s((1-θ) v^n + θ v^{n+1}) + K d^{n+1} = f(t^{n+1}).
struct TrapezoidTrajectory {
  std::vector<Vec> d, v;
};

inline TrapezoidTrajectory trapezoid(const Mat& M, const Mat& M_s, const Mat& K, const std::function<Vec(double)>& f,
                                     const Vec& d0, double theta, double dt, int steps) {
  TrapezoidTrajectory out;
  Vec d = d0;
  Vec v = (M + M_s).fullPivLu().solve(f(0.0) - K * d0);
  out.d.push_back(d);
  out.v.push_back(v);
  const Mat lhs = M + theta * M_s + theta * dt * K;
  auto lu = lhs.fullPivLu();
  for (int n = 0; n < steps; ++n) {
    const double t = (n + 1) * dt;
    Vec predictor = d + (1.0 - theta) * dt * v;
    Vec v_new = lu.solve(f(t) - K * predictor - (1.0 - theta) * M_s * v);
    d = predictor + theta * dt * v_new;
    v = v_new;
    out.d.push_back(d);
    out.v.push_back(v);
  }
  return out;
}

inline int dense_rank(const Mat& A) {
  Eigen::FullPivLU<Mat> lu(A);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

// ξ0(χ) = coth χ − 1/χ evaluated directly, valid away from χ = 0.
inline double upwind_function(double chi) { return 1.0 / std::tanh(chi) - 1.0 / chi; }

}  // namespace oracle
