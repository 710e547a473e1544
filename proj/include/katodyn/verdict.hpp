#pragma once

// Kato / Dynkin classification of a sequence of norms evaluated along a
// dyadic scale sequence decreasing to 0.

#include <cmath>
#include <string>
#include <vector>

namespace katodyn {

enum class Verdict { Kato, DynkinNotKato, NotDynkin, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Kato: return "Kato";
    case Verdict::DynkinNotKato: return "DynkinNotKato";
    case Verdict::NotDynkin: return "NotDynkin";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct EvidenceRow {
  double scale = 0.0;  // t for heat-kernel norms, r for the classical test
  double value = 0.0;
  double error = 0.0;
  bool infinite = false;
};

// Decay is accepted when the last `tail` values decrease and either the last
// value is below `ratio` times the first or the log-log slope over the tail
// is at least `min_slope`.
struct VerdictRule {
  int terms = 8;
  int tail = 5;
  double ratio = 0.05;
  double min_slope = 0.1;
  double mono_tol = 1e-9;
};

struct KatoVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<EvidenceRow> evidence;
  double decay_exponent = 0.0;  // least-squares slope of log value against log scale
  std::string reason;
};

inline std::vector<double> dyadic_sequence(double start, int n) {
  std::vector<double> out;
  for (int k = 0; k < n; ++k) out.push_back(std::ldexp(start, -k));
  return out;
}

inline KatoVerdict classify_sequence(std::vector<EvidenceRow> rows, const VerdictRule& rule = {}) {
  KatoVerdict v;
  v.evidence = std::move(rows);
  const auto& e = v.evidence;
  if (e.empty()) {
    v.reason = "no evidence";
    return v;
  }
  for (const auto& r : e)
    if (r.infinite || !std::isfinite(r.value)) {
      v.verdict = Verdict::NotDynkin;
      v.decay_exponent = 0.0;
      v.reason = "norm diverges at scale " + std::to_string(r.scale);
      return v;
    }
  bool all_zero = true;
  for (const auto& r : e) all_zero = all_zero && r.value == 0.0;
  if (all_zero) {
    v.verdict = Verdict::Kato;
    v.reason = "identically zero";
    return v;
  }
  const int n = static_cast<int>(e.size());
  const int k = std::min(rule.tail, n);
  const int s = n - k;
  bool mono = true, strict = true;
  for (int i = s + 1; i < n; ++i) {
    if (e[i].value > e[i - 1].value * (1.0 + rule.mono_tol)) mono = false;
    if (!(e[i].value < e[i - 1].value)) strict = false;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = s; i < n; ++i) {
    if (e[i].value <= 0.0 || e[i].scale <= 0.0) continue;
    const double x = std::log(e[i].scale), y = std::log(e[i].value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2 && cnt * sxx - sx * sx > 0) v.decay_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  if (!mono) {
    v.verdict = Verdict::Inconclusive;
    v.reason = "tail is not monotone";
    return v;
  }
  const bool small = e.back().value < rule.ratio * e.front().value;
  if (strict && (small || v.decay_exponent >= rule.min_slope)) {
    v.verdict = Verdict::Kato;
    v.reason = small ? "last value below ratio times first" : "tail decays with positive slope";
    return v;
  }
  v.verdict = Verdict::DynkinNotKato;
  v.reason = "bounded without decay";
  return v;
}

}  // namespace katodyn
