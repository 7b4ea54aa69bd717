// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Scoring and scaling analysis: valid submission rate, the march-of-9s
// normalized score, generalization gap, isoFLOP parabolas, compute-optimal
// frontier fits and the latency/loss Pareto frontier.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "archsmith/error.hpp"
#include "archsmith/fitness.hpp"

namespace archsmith {

inline double vsr(std::size_t valid_runs, std::size_t total_runs) {
  if (total_runs == 0) throw Error(ErrorCode::ZeroTotal, "no runs");
  if (valid_runs > total_runs) {
    throw Error(ErrorCode::InvalidArgument, "valid runs exceed total runs");
  }
  return static_cast<double>(valid_runs) / static_cast<double>(total_runs);
}

inline constexpr double kPhiSnap = 1e-12;

/// phi(s) = -log10|s - s_opt|, snapped to an integer within kPhiSnap so that
/// decimal inputs such as 0.99 give whole nines.
inline double march_of_9s(double s, double s_opt) {
  if (s == s_opt) throw Error(ErrorCode::AtOptimum, "score equals the optimum");
  const double phi = -std::log10(std::abs(s - s_opt));
  const double whole = std::round(phi);
  return std::abs(phi - whole) < kPhiSnap ? whole : phi;
}

struct ScoreContext {
  double s_min = 0.0;
  double s_sota = 0.0;
  double s_opt = 1.0;
  FitnessDirection direction = FitnessDirection::Maximize;

  void validate() const {
    if (s_min == s_opt || s_sota == s_opt) {
      throw Error(ErrorCode::DegenerateContext, "s_min and s_sota must differ from s_opt");
    }
    if (s_min == s_sota) throw Error(ErrorCode::DegenerateContext, "s_min equals s_sota");
  }
};

inline double normalized_score(double s, const ScoreContext& ctx) {
  ctx.validate();
  const double phi_min = march_of_9s(ctx.s_min, ctx.s_opt);
  const double phi_sota = march_of_9s(ctx.s_sota, ctx.s_opt);
  if (phi_sota == phi_min) {
    throw Error(ErrorCode::DegenerateContext, "phi(s_sota) equals phi(s_min)");
  }
  return (march_of_9s(s, ctx.s_opt) - phi_min) / (phi_sota - phi_min);
}

inline double generalization_gap(double best, double submitted, FitnessDirection direction) {
  return direction == FitnessDirection::Maximize ? best - submitted : submitted - best;
}

// --- isoFLOP parabola --------------------------------------------------------

struct ParabolaFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double x_min = 0.0;
  double y_min = 0.0;
  double residual = 0.0;  // root-mean-square

  double operator()(double x) const { return (a * x + b) * x + c; }
};

inline constexpr double kCurvatureTolerance = 1e-10;

/// Least-squares y = a x^2 + b x + c on (x, y) pairs, x already transformed.
inline ParabolaFit fit_parabola(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 3) throw Error(ErrorCode::TooFewPoints, "parabola needs at least 3 points");
  const auto n = static_cast<Eigen::Index>(xy.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [xi, yi] = xy[static_cast<std::size_t>(i)];
    if (!std::isfinite(xi) || !std::isfinite(yi)) {
      throw Error(ErrorCode::InvalidArgument, "non-finite point");
    }
    design(i, 0) = xi * xi;
    design(i, 1) = xi;
    design(i, 2) = 1.0;
    y(i) = yi;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw Error(ErrorCode::DegenerateFit, "fewer than 3 distinct sizes");
  const Eigen::VectorXd coef = qr.solve(y);
  ParabolaFit fit{coef(0), coef(1), coef(2)};
  if (!(fit.a > kCurvatureTolerance)) {
    throw Error(ErrorCode::DegenerateFit, "non-positive curvature, no minimum");
  }
  fit.x_min = -fit.b / (2.0 * fit.a);
  fit.y_min = fit(fit.x_min);
  fit.residual = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(n));
  return fit;
}

/// Fits loss against log10(model size).
inline ParabolaFit fit_isoflop_parabola(const std::vector<std::pair<double, double>>& size_loss) {
  std::vector<std::pair<double, double>> xy;
  xy.reserve(size_loss.size());
  for (const auto& [size, loss] : size_loss) {
    if (!(size > 0.0)) throw Error(ErrorCode::InvalidArgument, "model size must be positive");
    xy.emplace_back(std::log10(size), loss);
  }
  return fit_parabola(xy);
}

// --- compute-optimal frontier ------------------------------------------------

struct FrontierFit {
  double q = 0.0;
  double m = 0.0;
  std::vector<std::pair<double, double>> points;  // (budget FLOPs, min loss)
};

/// OLS line log10(loss) = q log10(C) + m.
inline FrontierFit fit_frontier(const std::vector<std::pair<double, double>>& minima) {
  if (minima.size() < 2) throw Error(ErrorCode::TooFewPoints, "frontier needs at least 2 budgets");
  const auto n = static_cast<Eigen::Index>(minima.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [budget, loss] = minima[static_cast<std::size_t>(i)];
    if (!(budget > 0.0) || !(loss > 0.0) || !std::isfinite(budget) || !std::isfinite(loss)) {
      throw Error(ErrorCode::InvalidArgument, "budgets and losses must be positive and finite");
    }
    design(i, 0) = std::log10(budget);
    design(i, 1) = 1.0;
    y(i) = std::log10(loss);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 2) throw Error(ErrorCode::DegenerateFit, "fewer than 2 distinct budgets");
  const Eigen::VectorXd coef = qr.solve(y);
  if (!std::isfinite(coef(0)) || !std::isfinite(coef(1))) {
    throw Error(ErrorCode::DegenerateFit, "non-finite frontier coefficients");
  }
  return FrontierFit{coef(0), coef(1), minima};
}

struct FrontierDelta {
  double dq = 0.0;
  double dm = 0.0;
};

inline FrontierDelta frontier_delta(const FrontierFit& fit, const FrontierFit& baseline) {
  return {fit.q - baseline.q, fit.m - baseline.m};
}

struct IsoflopPoint {
  double budget = 0.0;
  double model_size = 0.0;
  double val_loss = 0.0;
};

/// One parabola per budget, then a frontier through their minima.
inline FrontierFit fit_frontier_from_isoflops(const std::vector<IsoflopPoint>& points,
                                              std::map<double, ParabolaFit>* parabolas = nullptr) {
  std::map<double, std::vector<std::pair<double, double>>> by_budget;
  for (const auto& p : points) by_budget[p.budget].emplace_back(p.model_size, p.val_loss);
  std::vector<std::pair<double, double>> minima;
  for (const auto& [budget, pts] : by_budget) {
    const ParabolaFit fit = fit_isoflop_parabola(pts);
    if (parabolas) (*parabolas)[budget] = fit;
    minima.emplace_back(budget, fit.y_min);
  }
  return fit_frontier(minima);
}

// --- Pareto frontier ---------------------------------------------------------

struct LatencyLoss {
  double latency_ms = 0.0;
  double val_loss = 0.0;
  friend bool operator==(const LatencyLoss&, const LatencyLoss&) = default;
};

/// a dominates b when a <= b on both coordinates and a < b on at least one.
inline bool dominates(const LatencyLoss& a, const LatencyLoss& b) {
  return a.latency_ms <= b.latency_ms && a.val_loss <= b.val_loss &&
         (a.latency_ms < b.latency_ms || a.val_loss < b.val_loss);
}

/// Non-dominated points, sorted by latency then loss. Exact duplicates of a
/// frontier point are all kept.
inline std::vector<LatencyLoss> pareto_frontier(std::vector<LatencyLoss> points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.latency_ms) || !std::isfinite(p.val_loss)) {
      throw Error(ErrorCode::InvalidArgument, "non-finite point");
    }
  }
  std::sort(points.begin(), points.end(), [](const LatencyLoss& a, const LatencyLoss& b) {
    return a.latency_ms != b.latency_ms ? a.latency_ms < b.latency_ms : a.val_loss < b.val_loss;
  });
  std::vector<LatencyLoss> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const LatencyLoss& p = points[i];
    if (!out.empty() && out.back() == p) {
      out.push_back(p);
      continue;
    }
    const bool group_min = i == 0 || points[i - 1].latency_ms != p.latency_ms;
    if (group_min && (out.empty() || p.val_loss < out.back().val_loss)) out.push_back(p);
  }
  return out;
}

// --- CSV ---------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_csv_number(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidField,
                "line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  }
}

/// Reads rows under a header whose columns must include `columns`.
inline std::vector<std::vector<double>> read_csv_columns(std::istream& in,
                                                         const std::vector<std::string>& columns) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> index;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (index.empty()) {
      for (const auto& col : columns) {
        const auto it = std::find(cells.begin(), cells.end(), col);
        if (it == cells.end()) throw Error(ErrorCode::InvalidField, "CSV header lacks '" + col + "'");
        index.push_back(static_cast<std::size_t>(it - cells.begin()));
      }
      continue;
    }
    std::vector<double> row;
    for (std::size_t k : index) {
      if (k >= cells.size()) {
        throw Error(ErrorCode::InvalidField, "line " + std::to_string(line_no) + ": missing column");
      }
      row.push_back(parse_csv_number(cells[k], line_no));
    }
    rows.push_back(std::move(row));
  }
  if (index.empty()) throw Error(ErrorCode::InvalidField, "CSV has no header");
  return rows;
}

}  // namespace detail

inline std::vector<IsoflopPoint> read_isoflop_csv(std::istream& in) {
  std::vector<IsoflopPoint> out;
  for (const auto& r : detail::read_csv_columns(in, {"budget_flops", "model_size", "val_loss"})) {
    out.push_back({r[0], r[1], r[2]});
  }
  return out;
}

inline std::vector<LatencyLoss> read_latency_loss_csv(std::istream& in) {
  std::vector<LatencyLoss> out;
  for (const auto& r : detail::read_csv_columns(in, {"latency_ms", "val_loss"})) {
    out.push_back({r[0], r[1]});
  }
  return out;
}

}  // namespace archsmith
