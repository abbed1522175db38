// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rts/data/session.hpp"
#include "rts/fusion/policy.hpp"

namespace rts::eval {

inline constexpr double kMatchBefore = 0.5;  // seconds before a true onset
inline constexpr double kMatchAfter = 2.0;   // seconds after a true onset

struct MatchResult {
  std::size_t hits = 0, misses = 0, false_accepts = 0;
};

// Greedy one-to-one matching. Predictions are taken in time order; each
// claims the earliest unmatched truth whose window contains it.
inline MatchResult match_events(std::span<const double> predicted, std::span<const double> truth,
                                double before = kMatchBefore, double after = kMatchAfter) {
  std::vector<double> pred(predicted.begin(), predicted.end()), tru(truth.begin(), truth.end());
  std::sort(pred.begin(), pred.end());
  std::sort(tru.begin(), tru.end());
  std::vector<bool> used(tru.size(), false);
  MatchResult r;
  constexpr double kSlack = 1e-9;
  for (double p : pred) {
    bool hit = false;
    for (std::size_t k = 0; k < tru.size(); ++k) {
      if (used[k]) continue;
      if (p >= tru[k] - before - kSlack && p <= tru[k] + after + kSlack) {
        used[k] = true;
        hit = true;
        break;
      }
    }
    if (hit) ++r.hits;
    else ++r.false_accepts;
  }
  r.misses = tru.size() - r.hits;
  return r;
}

struct Rates {
  double frr = 0, far_session = 0, fa_per_hour = 0;
};

inline Rates compute_frr_far(std::size_t misses, std::size_t truths, std::size_t false_accepts,
                             std::size_t negative_sessions, double negative_hours) {
  if (truths == 0) throw InvalidInput("frr: no true triggers");
  Rates r;
  r.frr = static_cast<double>(misses) / static_cast<double>(truths);
  r.far_session = negative_sessions ? std::min(1.0, static_cast<double>(false_accepts) / negative_sessions) : 0.0;
  r.fa_per_hour = negative_hours > 0 ? static_cast<double>(false_accepts) / negative_hours : 0.0;
  return r;
}

// Per-session evaluation record: ground truth plus either a per-tick score
// trace (neural) or a fixed event list (FSM).
struct ScoredSession {
  std::string id;
  bool positive = false;
  data::Challenge challenge = data::Challenge::kNone;
  double duration = 0;
  std::vector<double> onsets;
  std::vector<float> scores;
};

struct OperatingPoint {
  double theta = 0;
  std::size_t hits = 0, misses = 0, false_accepts = 0;
  double frr = 0, far = 0, fa_per_hour = 0;
};

struct Totals {
  std::size_t truths = 0, negatives = 0;
  double negative_hours = 0;
};

inline Totals totals(std::span<const ScoredSession> sessions) {
  Totals t;
  for (const auto& s : sessions) {
    t.truths += s.onsets.size();
    if (!s.positive) {
      ++t.negatives;
      t.negative_hours += s.duration / 3600.0;
    }
  }
  return t;
}

// Event-level metrics from per-session prediction times.
inline OperatingPoint evaluate_events(std::span<const ScoredSession> sessions,
                                      const std::vector<std::vector<double>>& predicted, double theta = 0) {
  if (predicted.size() != sessions.size()) throw ShapeMismatch("evaluate: prediction list size");
  OperatingPoint op;
  op.theta = theta;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto m = match_events(predicted[i], sessions[i].onsets);
    op.hits += m.hits;
    op.misses += m.misses;
    op.false_accepts += m.false_accepts;
  }
  const auto t = totals(sessions);
  if (t.truths == 0) throw InvalidInput("evaluate: no true triggers among sessions");
  const auto r = compute_frr_far(op.misses, t.truths, op.false_accepts, t.negatives, t.negative_hours);
  op.frr = r.frr;
  op.far = r.far_session;
  op.fa_per_hour = r.fa_per_hour;
  return op;
}

namespace detail {

// Rising-edge extraction without the (0,1) range check, so sentinel
// thresholds outside the unit interval can be evaluated.
inline void trigger_times(std::span<const float> p, double theta, std::size_t cooldown, std::vector<double>& out) {
  out.clear();
  bool prev = false, have = false;
  std::size_t last = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    const bool above = static_cast<double>(p[t]) >= theta;
    if (above && !prev && (!have || t - last >= cooldown)) {
      out.push_back(static_cast<double>(t) * kTickSeconds);
      last = t;
      have = true;
    }
    prev = above;
  }
}

}  // namespace detail

inline OperatingPoint evaluate_threshold(std::span<const ScoredSession> sessions, double theta,
                                         std::size_t cooldown = fusion::kTriggerCooldown) {
  std::vector<std::vector<double>> pred(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) detail::trigger_times(sessions[i].scores, theta, cooldown, pred[i]);
  return evaluate_events(sessions, pred, theta);
}

struct DetCurve {
  std::vector<OperatingPoint> points;  // ascending theta
  bool degenerate = false;
};

struct EerResult {
  double eer = 0;
  double theta = 0;  // interpolated threshold at the crossing
  bool degenerate = false;
};

// Linear interpolation at the crossing of FRR and FAR. The curve is ordered
// by ascending threshold; the scan starts from the strict end (FRR high, FAR
// low) and stops at the first point where FRR - FAR is no longer positive.
// Starting there avoids the trivial FRR = FAR = 1 corner at tiny thresholds.
inline EerResult eer_from_curve(const DetCurve& c) {
  EerResult r;
  r.degenerate = c.degenerate;
  if (c.points.empty()) throw InvalidInput("eer: empty curve");
  for (std::size_t i = c.points.size(); i-- > 0;) {
    const auto& a = c.points[i];
    const double da = a.frr - a.far;
    if (da == 0) {
      r.eer = a.frr;
      r.theta = a.theta;
      return r;
    }
    if (da < 0 && i + 1 < c.points.size()) {
      const auto& b = c.points[i + 1];
      const double db = b.frr - b.far;
      const double w = da / (da - db);
      r.eer = a.frr + w * (b.frr - a.frr);
      r.theta = a.theta + w * (b.theta - a.theta);
      return r;
    }
    if (da < 0) break;
  }
  // No crossing: the curve lies on one side; report the closest approach.
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (std::abs(c.points[i].frr - c.points[i].far) < std::abs(c.points[best].frr - c.points[best].far)) best = i;
  r.eer = 0.5 * (c.points[best].frr + c.points[best].far);
  r.theta = c.points[best].theta;
  r.degenerate = true;
  return r;
}

// Thresholds at which the event lists can change: every distinct score,
// plus a sentinel above the maximum (no events at all).
inline std::vector<double> breakpoints(std::span<const ScoredSession> sessions) {
  std::vector<double> v;
  for (const auto& s : sessions)
    for (float x : s.scores) v.push_back(static_cast<double>(x));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  const double top = v.empty() ? 1.0 : v.back();
  v.push_back(std::nextafter(top, std::numeric_limits<double>::infinity()));
  return v;
}

inline DetCurve curve_at(std::span<const ScoredSession> sessions, const std::vector<double>& thetas,
                         std::size_t cooldown = fusion::kTriggerCooldown) {
  DetCurve c;
  c.points.resize(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t i) { c.points[i] = evaluate_threshold(sessions, thetas[i], cooldown); });
  // Constant scores everywhere: a single step, no real trade-off.
  std::optional<float> first;
  bool constant = true;
  for (const auto& s : sessions)
    for (float x : s.scores) {
      if (!first) first = x;
      constant = constant && x == *first;
    }
  c.degenerate = constant;
  return c;
}

// Exact EER over every score breakpoint.
inline EerResult compute_eer(std::span<const ScoredSession> sessions, DetCurve* curve_out = nullptr) {
  auto c = curve_at(sessions, breakpoints(sessions));
  auto r = eer_from_curve(c);
  if (curve_out) *curve_out = std::move(c);
  return r;
}

// 200 thresholds in (0,1): 100 log-spaced in [1e-4, 0.5] and their mirror
// images 1 - x, so both tails are resolved.
inline std::vector<double> log_grid(std::size_t n = 200) {
  const std::size_t half = n / 2;
  std::vector<double> lo(half);
  for (std::size_t i = 0; i < half; ++i)
    lo[i] = std::pow(10.0, -4.0 + (std::log10(0.5) + 4.0) * static_cast<double>(i) / static_cast<double>(half - 1));
  std::vector<double> g = lo;
  for (std::size_t i = half; i-- > 0;)
    if (lo[i] < 0.5) g.push_back(1.0 - lo[i]);
  if (g.size() < n) g.push_back(1.0 - 0.5e-4);
  std::sort(g.begin(), g.end());
  return g;
}

inline EerResult compute_grid_eer(std::span<const ScoredSession> sessions, DetCurve* curve_out = nullptr) {
  auto c = curve_at(sessions, log_grid());
  auto r = eer_from_curve(c);
  if (curve_out) *curve_out = std::move(c);
  return r;
}

// Lower envelope: sorted by FAR, FRR replaced by its running minimum.
inline std::vector<OperatingPoint> monotone_cleanup(const DetCurve& c) {
  auto pts = c.points;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.far != b.far ? a.far < b.far : a.frr > b.frr;
  });
  double best = 1.0;
  for (auto& p : pts) {
    best = std::min(best, p.frr);
    p.frr = best;
  }
  return pts;
}

inline std::string curve_dump(const DetCurve& c) {
  std::ostringstream o;
  o << "theta,frr,far\n";
  for (const auto& p : c.points) o << p.theta << "," << p.frr << "," << p.far << "\n";
  return o.str();
}

// Threshold with FRR within tol of target and the fewest false accepts,
// ties to the FRR closest to target. FRR is not monotone in theta: very low
// thresholds fire early and the cooldown then swallows the true onset, so
// nearest-FRR alone can land on a degenerate low-theta branch.
inline OperatingPoint calibrate_frr(std::span<const ScoredSession> sessions, double target = 0.2, double tol = 0.01) {
  DetCurve c = curve_at(sessions, breakpoints(sessions));
  const OperatingPoint* best = nullptr;
  for (const auto& p : c.points) {
    const double gap = std::abs(p.frr - target);
    if (gap > tol) continue;
    if (!best || p.false_accepts < best->false_accepts ||
        (p.false_accepts == best->false_accepts && gap < std::abs(best->frr - target)))
      best = &p;
  }
  if (!best)
    throw NumericError("calibration infeasible: no threshold gives FRR within " + std::to_string(tol) + " of " +
                       std::to_string(target) + "\n" + curve_dump(c));
  return *best;
}

struct ScenarioRow {
  data::Challenge challenge;
  std::size_t sessions = 0;
  std::size_t false_accepts = 0;
};

// False accepts per challenge tag for fixed per-session prediction times.
inline std::vector<ScenarioRow> scenario_breakdown(std::span<const ScoredSession> sessions,
                                                   const std::vector<std::vector<double>>& predicted) {
  if (predicted.size() != sessions.size()) throw ShapeMismatch("breakdown: prediction list size");
  std::vector<ScenarioRow> rows;
  for (auto c : data::kChallenges) rows.push_back({c, 0, 0});
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    for (auto& r : rows)
      if (r.challenge == sessions[i].challenge) {
        ++r.sessions;
        r.false_accepts += match_events(predicted[i], sessions[i].onsets).false_accepts;
      }
  }
  return rows;
}

inline std::vector<std::vector<double>> predictions_at(std::span<const ScoredSession> sessions, double theta,
                                                       std::size_t cooldown = fusion::kTriggerCooldown) {
  std::vector<std::vector<double>> pred(sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) detail::trigger_times(sessions[i].scores, theta, cooldown, pred[i]);
  return pred;
}

}  // namespace rts::eval
