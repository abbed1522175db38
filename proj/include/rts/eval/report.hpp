// Copyright 2026 The RTS Fusion Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rts/eval/experiment.hpp"

namespace rts::eval {

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// DET samples as theta,frr,far rows.
inline std::string det_csv(const DetCurve& c) {
  std::ostringstream o;
  o << "theta,frr,far\n";
  for (const auto& p : c.points) o << p.theta << ',' << p.frr << ',' << p.far << '\n';
  return o.str();
}

// Standalone SVG of one or more DET curves (FAR on x, FRR on y, both
// linear in [0,1]) with the raw samples embedded as a comment.
inline std::string det_svg(const std::vector<std::pair<std::string, DetCurve>>& curves,
                           const std::vector<std::pair<std::string, OperatingPoint>>& points = {}) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double W = 480, H = 480, M = 50;
  auto x = [&](double far) { return M + far * (W - 2 * M); };
  auto y = [&](double frr) { return H - M - frr * (H - 2 * M); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<!-- data\n";
  for (const auto& [name, c] : curves) o << "# " << name << "\n" << det_csv(c);
  for (const auto& [name, p] : points) o << "# " << name << " point frr=" << p.frr << " far=" << p.far << "\n";
  o << "-->\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(1) << "\" y2=\"" << y(1)
    << "\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    o << "<text x=\"" << x(v) << "\" y=\"" << H - M + 18 << "\" font-size=\"11\" text-anchor=\"middle\">" << v
      << "</text>\n";
    o << "<text x=\"" << M - 8 << "\" y=\"" << y(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << v
      << "</text>\n";
  }
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">FAR</text>\n";
  o << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << H / 2 << ")\">FRR</text>\n";
  std::size_t k = 0;
  for (const auto& [name, c] : curves) {
    const char* col = colors[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : monotone_cleanup(c)) o << x(p.far) << ',' << y(p.frr) << ' ';
    o << "\"/>\n";
    o << "<text x=\"" << W - M - 6 << "\" y=\"" << M + 16 + 14 * static_cast<double>(k)
      << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << col << "\">" << name << "</text>\n";
    ++k;
  }
  for (const auto& [name, p] : points) {
    const char* col = colors[k % 6];
    o << "<circle cx=\"" << x(p.far) << "\" cy=\"" << y(p.frr) << "\" r=\"4\" fill=\"" << col << "\"/>\n";
    o << "<text x=\"" << W - M - 6 << "\" y=\"" << M + 16 + 14 * static_cast<double>(k)
      << "\" font-size=\"11\" text-anchor=\"end\" fill=\"" << col << "\">" << name << "</text>\n";
    ++k;
  }
  o << "</svg>\n";
  return o.str();
}

// Sweep layout: variant, #Speech, #Gesture, #NP, EER, plus the fusion
// type and which comparison number the EER column holds.
inline std::string sweep_csv(const std::vector<VariantResult>& rows) {
  std::ostringstream o;
  o << "variant,#Speech,#Gesture,#NP,EER,fusion,metric,frr,far,fa_per_hour\n";
  for (const auto& r : rows)
    o << r.variant.key << ',' << r.variant.n_speech << ',' << r.variant.n_gesture << ','
      << (r.variant.fsm ? std::string("-") : std::to_string(r.parameters)) << ',' << fixed(r.value) << ','
      << r.variant.fusion_label() << ',' << r.metric << ',' << fixed(r.op.frr) << ',' << fixed(r.op.far) << ','
      << fixed(r.op.fa_per_hour, 2) << '\n';
  return o.str();
}

inline std::string sweep_text(const std::vector<VariantResult>& rows) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s %8s %9s %7s %8s  %-14s %s\n", "variant", "#Speech", "#Gesture", "#NP",
                "EER", "fusion", "metric");
  o << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %8zu %9zu %7s %7.2f%%  %-14s %s\n", r.variant.key.c_str(),
                  r.variant.n_speech, r.variant.n_gesture,
                  r.variant.fsm ? "-" : std::to_string(r.parameters).c_str(), 100.0 * r.value,
                  r.variant.fusion_label().c_str(), r.metric.c_str());
    o << buf;
  }
  return o.str();
}

inline nlohmann::json to_json(const OperatingPoint& p) {
  return {{"theta", p.theta}, {"hits", p.hits},   {"misses", p.misses}, {"false_accepts", p.false_accepts},
          {"frr", p.frr},     {"far", p.far},     {"fa_per_hour", p.fa_per_hour}};
}

inline nlohmann::json to_json(const VariantResult& r) {
  return {{"variant", r.variant.key},
          {"name", r.variant.name()},
          {"n_speech", r.variant.n_speech},
          {"n_gesture", r.variant.n_gesture},
          {"fusion", r.variant.fusion_label()},
          {"parameters", r.parameters},
          {"metric", r.metric},
          {"value", r.value},
          {"degenerate", r.degenerate},
          {"operating_point", to_json(r.op)},
          {"seconds", r.seconds}};
}

inline nlohmann::json to_json(const ChallengeResult& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"scenario", data::name(r.challenge)}, {"sessions", r.sessions}, {"false_accepts", r.false_accepts}});
  return {{"variant", c.variant.key}, {"val_frr", c.val_frr}, {"theta", c.theta},
          {"lambda", c.lambda},       {"total_false_accepts", c.total()}, {"scenarios", rows}};
}

inline std::string challenge_text(const std::vector<ChallengeResult>& results) {
  std::ostringstream o;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-22s", "scenario");
  o << buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, " %10s", r.variant.key.c_str());
    o << buf;
  }
  o << '\n';
  if (results.empty()) return o.str();
  for (std::size_t i = 0; i < results.front().rows.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-22s", std::string(data::name(results.front().rows[i].challenge)).c_str());
    o << buf;
    for (const auto& r : results) {
      std::snprintf(buf, sizeof buf, " %10zu", r.rows[i].false_accepts);
      o << buf;
    }
    o << '\n';
  }
  std::snprintf(buf, sizeof buf, "%-22s", "total");
  o << buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, " %10zu", r.total());
    o << buf;
  }
  o << '\n';
  return o.str();
}

}  // namespace rts::eval
