#pragma once

namespace xsem {

// Precision / recall / F1 triple. A ratio with a zero denominator is reported
// as 0 and flagged.
struct PrfScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

// Harmonic mean; 0 when p + r == 0.
inline double F1(double p, double r) {
  return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

// Builds a PrfScore from raw numerators and denominators.
inline PrfScore MakePrf(double p_num, double p_den, double r_num,
                        double r_den) {
  PrfScore s;
  s.precision_undefined = !(p_den > 0.0);
  s.recall_undefined = !(r_den > 0.0);
  s.precision = s.precision_undefined ? 0.0 : p_num / p_den;
  s.recall = s.recall_undefined ? 0.0 : r_num / r_den;
  s.f1 = F1(s.precision, s.recall);
  return s;
}

}  // namespace xsem
