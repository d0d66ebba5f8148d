#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace fusioncausal {

enum class Family : std::uint8_t { Linear, Kernel };

inline const char* to_string(Family f) { return f == Family::Linear ? "linear" : "kernel"; }

struct FeatureConfig {
  Family family = Family::Linear;
  double bandwidth = 0.0;  // <= 0: median heuristic
  int landmarks = 150;
};

// Maps raw inputs to regression features: [1, u] for Linear, [1, psi(u)] with
// Nystrom RBF features for Kernel. psi is whitened by K_mm^{-1/2}, so the
// squared norm of the coefficient equals the RKHS norm of the fitted function.
class FeatureMap {
 public:
  FeatureMap() = default;

  static FeatureMap build(const Mat& raw, const Vec& w, const FeatureConfig& cfg) {
    FeatureMap f;
    f.family_ = cfg.family;
    f.in_dim_ = raw.cols();
    if (cfg.family == Family::Linear) return f;

    const Index n = raw.rows(), p = raw.cols();
    double wsum = w.sum();
    f.center_ = (raw.transpose() * w) / wsum;
    f.scale_.resize(p);
    for (Index j = 0; j < p; ++j) {
      double v = ((raw.col(j).array() - f.center_[j]).square() * w.array()).sum() / wsum;
      f.scale_[j] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
    Index L = std::min<Index>(cfg.landmarks, n);
    f.land_.resize(L, p);
    for (Index k = 0; k < L; ++k) {
      Index i = (k * n) / L;
      f.land_.row(k) = f.standardize(raw.row(i).transpose()).transpose();
    }
    if (cfg.bandwidth > 0) {
      f.bw_ = cfg.bandwidth;
    } else {
      std::vector<double> d;
      for (Index i = 0; i < L; ++i)
        for (Index j = i + 1; j < L; ++j) d.push_back((f.land_.row(i) - f.land_.row(j)).norm());
      std::sort(d.begin(), d.end());
      double med = d.empty() ? 1.0 : d[d.size() / 2];
      f.bw_ = med > 1e-12 ? med : 1.0;
    }
    Mat K(L, L);
    for (Index i = 0; i < L; ++i)
      for (Index j = 0; j < L; ++j) K(i, j) = f.rbf(f.land_.row(i).transpose(), f.land_.row(j).transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(K);
    double top = es.eigenvalues().maxCoeff();
    std::vector<Index> keep;
    for (Index k = 0; k < L; ++k)
      if (es.eigenvalues()[k] > 1e-9 * top) keep.push_back(k);
    f.proj_.resize(static_cast<Index>(keep.size()), L);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      Index k = keep[r];
      f.proj_.row(static_cast<Index>(r)) = es.eigenvectors().col(k).transpose() / std::sqrt(es.eigenvalues()[k]);
    }
    return f;
  }

  Family family() const { return family_; }
  Index dim() const { return family_ == Family::Linear ? in_dim_ + 1 : proj_.rows() + 1; }

  template <class Row>
  void apply(const Row& u, double* out) const {
    out[0] = 1.0;
    if (family_ == Family::Linear) {
      for (Index j = 0; j < in_dim_; ++j) out[j + 1] = u[j];
      return;
    }
    Vec s(in_dim_);
    for (Index j = 0; j < in_dim_; ++j) s[j] = (u[j] - center_[j]) / scale_[j];
    Vec k(land_.rows());
    for (Index l = 0; l < land_.rows(); ++l) k[l] = rbf(s, land_.row(l).transpose());
    Vec psi = proj_ * k;
    for (Index j = 0; j < psi.size(); ++j) out[j + 1] = psi[j];
  }

  template <class Row>
  double dot(const Row& u, const Vec& beta) const {
    if (family_ == Family::Linear) {
      double s = beta[0];
      for (Index j = 0; j < in_dim_; ++j) s += u[j] * beta[j + 1];
      return s;
    }
    Vec f(dim());
    apply(u, f.data());
    return f.dot(beta);
  }

  Mat design(const Mat& raw) const {
    Mat F(raw.rows(), dim());
    Vec tmp(dim());
    for (Index i = 0; i < raw.rows(); ++i) {
      apply(raw.row(i), tmp.data());
      F.row(i) = tmp.transpose();
    }
    return F;
  }

 private:
  Vec standardize(const Vec& u) const { return ((u - center_).array() / scale_.array()).matrix(); }
  double rbf(const Vec& s, const Vec& t) const { return std::exp(-(s - t).squaredNorm() / (2.0 * bw_ * bw_)); }

  Family family_ = Family::Linear;
  Index in_dim_ = 0;
  Vec center_, scale_;
  Mat land_, proj_;
  double bw_ = 1.0;
};

struct LinearSolveInfo {
  bool jittered = false;
};

// Weighted least squares. Exact QR solve when the design has full column rank;
// ridge jitter 1e-8 only on rank deficiency (or SingularDesign if disabled).
inline Vec solve_wls(const Mat& F, const Vec& y, const Vec& w, bool allow_jitter = true, LinearSolveInfo* info = nullptr) {
  Vec sw = w.array().sqrt();
  Mat A = sw.asDiagonal() * F;
  Vec b = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Mat> qr(A);
  qr.setThreshold(1e-11);
  if (qr.rank() == F.cols()) return qr.solve(b);
  if (!allow_jitter) fail(ErrorCode::SingularDesign, "rank-deficient design");
  if (info) info->jittered = true;
  Mat G = A.transpose() * A;
  G.diagonal().array() += 1e-8;
  return G.ldlt().solve(A.transpose() * b);
}

// Penalized weighted least squares; intercept (column 0) unpenalized.
inline Vec solve_ridge(const Mat& F, const Vec& y, const Vec& w, double lambda) {
  double ws = w.sum();
  Mat G = F.transpose() * w.asDiagonal() * F / ws;
  for (Index j = 1; j < G.rows(); ++j) G(j, j) += lambda;
  Vec rhs = F.transpose() * (w.array() * y.array()).matrix() / ws;
  return G.ldlt().solve(rhs);
}

struct LogisticResult {
  Vec beta;
  bool converged = false;
  int iterations = 0;
};

// Newton-Raphson for the weighted Bernoulli likelihood with optional ridge on
// non-intercept coefficients.
inline LogisticResult solve_logistic(const Mat& F, const Vec& y, const Vec& w, double lambda = 0.0, int max_iter = 100) {
  const Index n = F.rows(), p = F.cols();
  double ws = w.sum();
  LogisticResult r;
  r.beta = Vec::Zero(p);
  auto objective = [&](const Vec& b) {
    Vec eta = F * b;
    double s = 0;
    for (Index i = 0; i < n; ++i) {
      double e = eta[i];
      double log1pe = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      s += w[i] * (log1pe - y[i] * e);
    }
    return s / ws + 0.5 * lambda * b.tail(p - 1).squaredNorm();
  };
  double obj = objective(r.beta);
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it + 1;
    Vec eta = F * r.beta;
    Vec mu(n), wt(n);
    for (Index i = 0; i < n; ++i) {
      mu[i] = expit(eta[i]);
      wt[i] = w[i] * mu[i] * (1.0 - mu[i]) / ws;
    }
    Vec grad = F.transpose() * (w.array() * (y - mu).array()).matrix() / ws;
    Mat H = F.transpose() * wt.asDiagonal() * F;
    for (Index j = 1; j < p; ++j) {
      H(j, j) += lambda;
      grad[j] -= lambda * r.beta[j];
    }
    Vec step = H.ldlt().solve(grad);
    if (!step.allFinite()) break;
    double t = 1.0;
    Vec next = r.beta + step;
    double nobj = objective(next);
    while (nobj > obj + 1e-15 * std::abs(obj) && t > 1e-8) {
      t *= 0.5;
      next = r.beta + t * step;
      nobj = objective(next);
    }
    r.beta = next;
    obj = nobj;
    if ((t * step).lpNorm<Eigen::Infinity>() < 1e-11) {
      r.converged = true;
      break;
    }
    if (r.beta.lpNorm<Eigen::Infinity>() > 50) break;  // quasi-separation
  }
  return r;
}

// K-fold CV over the ridge grid; folds by stride in row order.
template <class Loss, class Fit>
double cv_select_lambda(Index n, const std::vector<double>& grid, Fit fit, Loss loss, int folds = 5) {
  double best = grid.front(), best_loss = std::numeric_limits<double>::infinity();
  for (double lam : grid) {
    double total = 0;
    for (int k = 0; k < folds; ++k) {
      std::vector<Index> tr, te;
      for (Index i = 0; i < n; ++i) (i % folds == k ? te : tr).push_back(i);
      if (tr.empty() || te.empty()) continue;
      Vec beta = fit(tr, lam);
      total += loss(te, beta);
    }
    if (total < best_loss) {
      best_loss = total;
      best = lam;
    }
  }
  return best;
}

inline const std::vector<double>& ridge_grid() {
  static const std::vector<double> g{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  return g;
}

inline Mat take_rows(const Mat& M, const std::vector<Index>& idx) {
  Mat out(static_cast<Index>(idx.size()), M.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = M.row(idx[r]);
  return out;
}

inline Vec take(const Vec& v, const std::vector<Index>& idx) {
  Vec out(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Index>(r)] = v[idx[r]];
  return out;
}

// Fitted regression f(u) = phi(u)' beta.
class Regressor {
 public:
  Regressor() = default;

  static Regressor fit(const Mat& raw, const Vec& target, const Vec& w, const FeatureConfig& cfg, double lambda = -1.0) {
    if (raw.rows() == 0) fail(ErrorCode::EmptyCell, "regression on an empty cell");
    Regressor r;
    r.map_ = FeatureMap::build(raw, w, cfg);
    Mat F = r.map_.design(raw);
    if (cfg.family == Family::Linear) {
      LinearSolveInfo info;
      r.beta_ = solve_wls(F, target, w, true, &info);
      r.jittered_ = info.jittered;
    } else {
      double lam = lambda;
      if (lam <= 0) {
        lam = cv_select_lambda(
            F.rows(), ridge_grid(),
            [&](const std::vector<Index>& tr, double l) { return solve_ridge(take_rows(F, tr), take(target, tr), take(w, tr), l); },
            [&](const std::vector<Index>& te, const Vec& b) {
              double s = 0;
              for (Index i : te) s += w[i] * std::pow(target[i] - F.row(i).dot(b), 2);
              return s;
            });
      }
      r.lambda_ = lam;
      r.beta_ = solve_ridge(F, target, w, lam);
    }
    Vec resid = target - F * r.beta_;
    r.n_train_ = raw.rows();
    r.rmse_ = std::sqrt((resid.array().square() * w.array()).sum() / w.sum());
    return r;
  }

  template <class Row>
  double predict(const Row& u) const {
    return map_.dot(u, beta_);
  }

  const Vec& coefficients() const { return beta_; }
  Index n_train() const { return n_train_; }
  double rmse() const { return rmse_; }
  bool jittered() const { return jittered_; }
  double lambda() const { return lambda_; }

 private:
  FeatureMap map_;
  Vec beta_;
  Index n_train_ = 0;
  double rmse_ = 0;
  bool jittered_ = false;
  double lambda_ = 0;
};

// Fitted P(label = 1 | u), clipped to [trim, 1 - trim].
class Classifier {
 public:
  Classifier() = default;

  static Classifier fit(const Mat& raw, const Vec& label, const Vec& w, const FeatureConfig& cfg, double trim, double lambda = -1.0) {
    if (raw.rows() == 0) fail(ErrorCode::EmptyCell, "classifier on an empty cell");
    double pos = 0, tot = 0;
    for (Index i = 0; i < label.size(); ++i) {
      pos += w[i] * label[i];
      tot += w[i];
    }
    if (pos <= 0 || pos >= tot) fail(ErrorCode::OneClassOnly, "both classes are required");
    Classifier c;
    c.trim_ = trim;
    c.map_ = FeatureMap::build(raw, w, cfg);
    Mat F = c.map_.design(raw);
    double lam = 0.0;
    if (cfg.family == Family::Kernel) {
      lam = lambda;
      if (lam <= 0) {
        lam = cv_select_lambda(
            F.rows(), ridge_grid(),
            [&](const std::vector<Index>& tr, double l) { return solve_logistic(take_rows(F, tr), take(label, tr), take(w, tr), l, 30).beta; },
            [&](const std::vector<Index>& te, const Vec& b) {
              double s = 0;
              for (Index i : te) {
                double p = std::clamp(expit(F.row(i).dot(b)), 1e-12, 1 - 1e-12);
                s -= w[i] * (label[i] * std::log(p) + (1 - label[i]) * std::log(1 - p));
              }
              return s;
            });
      }
    }
    auto res = solve_logistic(F, label, w, lam);
    c.beta_ = res.beta;
    c.converged_ = res.converged;
    c.iterations_ = res.iterations;
    c.lambda_ = lam;
    return c;
  }

  template <class Row>
  double raw_predict(const Row& u) const {
    return expit(map_.dot(u, beta_));
  }

  template <class Row>
  double predict(const Row& u) const {
    return std::clamp(raw_predict(u), trim_, 1.0 - trim_);
  }

  bool converged() const { return converged_; }
  int iterations() const { return iterations_; }
  double trim() const { return trim_; }
  const Vec& coefficients() const { return beta_; }

 private:
  FeatureMap map_;
  Vec beta_;
  double trim_ = 0.01;
  bool converged_ = false;
  int iterations_ = 0;
  double lambda_ = 0;
};

}  // namespace fusioncausal
