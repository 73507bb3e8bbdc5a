#include "rvae/biomarkers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rvae/csv.hpp"

namespace rvae {

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

Gender gender_from_string(std::string_view s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "female" || lower == "f") return Gender::Female;
  if (lower == "male" || lower == "m") return Gender::Male;
  throw ValidationError("unknown gender '" + std::string(s) + "'");
}

std::string_view biomarker_name(Biomarker b) { return kBiomarkerNames[static_cast<std::size_t>(b)]; }

std::optional<Biomarker> biomarker_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kBiomarkerCount; ++i) {
    if (kBiomarkerNames[i] == name) return static_cast<Biomarker>(i);
  }
  return std::nullopt;
}

std::string_view biomarker_unit(Biomarker b) {
  switch (b) {
    case Biomarker::iLVEDV:
    case Biomarker::iLVSV:
    case Biomarker::iRVEDV: return "mL/m2";
    case Biomarker::LVEF:
    case Biomarker::LVAC:
    case Biomarker::RVAC: return "%";
    case Biomarker::LVEDM: return "g";
    default: return "mL/s";
  }
}

double bsa_dubois(const Anthropometrics& a) {
  if (!(a.weight_kg > 20.0 && a.weight_kg < 300.0)) {
    throw ValidationError("weight_kg must lie in (20, 300)");
  }
  if (!(a.height_cm > 100.0 && a.height_cm < 250.0)) {
    throw ValidationError("height_cm must lie in (100, 250)");
  }
  return 0.007184 * std::pow(a.weight_kg, 0.425) * std::pow(a.height_cm, 0.725);
}

QcRejection::QcRejection(QcVerdict verdict)
    : ValidationError([&] {
        std::string msg = "volume curves rejected by QC:";
        for (const auto& r : verdict.reasons) msg += " " + r;
        return msg;
      }()),
      verdict_(std::move(verdict)) {}

namespace {

std::string prefixed(Chamber c, std::string_view rule) {
  return std::string(c == Chamber::LV ? "lv." : "rv.") + std::string(rule);
}

}  // namespace

QcVerdict qc_screen(const VolumeCurve& curve, const QcRules& rules) {
  QcVerdict v;
  auto fail = [&](std::string_view rule) { v.reasons.push_back(prefixed(curve.chamber, rule)); };
  const auto& f = curve.frames;
  if (f.size() < rules.min_frames) fail(qc_rule::kTooFewFrames);
  if (f.empty()) {
    v.passed = false;
    return v;
  }
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (!(f[k].time_ms > f[k - 1].time_ms)) {
      fail(qc_rule::kNonIncreasingTime);
      break;
    }
  }
  double vmax = f.front().volume_ml;
  double vmin = f.front().volume_ml;
  bool non_positive = false;
  for (const auto& fr : f) {
    vmax = std::max(vmax, fr.volume_ml);
    vmin = std::min(vmin, fr.volume_ml);
    if (!(fr.volume_ml > 0.0)) non_positive = true;
  }
  if (non_positive) fail(qc_rule::kNonPositiveVolume);
  const double ef = vmax > 0.0 ? 100.0 * (vmax - vmin) / vmax : 0.0;
  if (!(ef > rules.ef_min && ef < rules.ef_max)) fail(qc_rule::kEjectionFraction);
  if (vmax > 0.0) {
    if (std::abs(f.front().volume_ml - f.back().volume_ml) > rules.closure_fraction * vmax) {
      fail(qc_rule::kCycleNotClosed);
    }
    double jump = 0.0;
    for (std::size_t k = 1; k < f.size(); ++k) {
      jump = std::max(jump, std::abs(f[k].volume_ml - f[k - 1].volume_ml));
    }
    if (jump > rules.jump_fraction * vmax) fail(qc_rule::kVolumeJump);
  }
  v.passed = v.reasons.empty();
  return v;
}

QcVerdict qc_screen(const VolumeCurve& lv, const VolumeCurve& rv, const QcRules& rules) {
  QcVerdict a = qc_screen(lv, rules);
  QcVerdict b = qc_screen(rv, rules);
  a.reasons.insert(a.reasons.end(), b.reasons.begin(), b.reasons.end());
  a.passed = a.reasons.empty();
  return a;
}

namespace {

double cycle_period(const std::vector<VolumeFrame>& f) {
  const auto n = static_cast<double>(f.size());
  return (f.back().time_ms - f.front().time_ms) * n / (n - 1.0);
}

}  // namespace

std::vector<double> volume_derivative(const VolumeCurve& curve) {
  const auto& f = curve.frames;
  const std::size_t n = f.size();
  if (n < 3) throw ValidationError("volume_derivative: need at least 3 frames");
  const double period = cycle_period(f);
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t prev = (k + n - 1) % n;
    const std::size_t next = (k + 1) % n;
    double t_prev = f[prev].time_ms;
    double t_next = f[next].time_ms;
    if (k == 0) t_prev -= period;
    if (k == n - 1) t_next += period;
    d[k] = 1000.0 * (f[next].volume_ml - f[prev].volume_ml) / (t_next - t_prev);
  }
  return d;
}

ChamberFunction analyze_chamber(const VolumeCurve& curve, const ExtractionOptions& options) {
  if (!(options.early_fraction > 0.0 && options.early_fraction < 1.0)) {
    throw ConfigError("early_fraction must lie in (0, 1)");
  }
  const auto& f = curve.frames;
  const std::size_t n = f.size();
  const std::vector<double> dv = volume_derivative(curve);
  const double period = cycle_period(f);

  ChamberFunction out;
  for (std::size_t k = 0; k < n; ++k) {
    if (f[k].volume_ml > f[out.ed_frame].volume_ml) out.ed_frame = k;
    if (f[k].volume_ml < f[out.es_frame].volume_ml) out.es_frame = k;
  }
  out.edv = f[out.ed_frame].volume_ml;
  out.esv = f[out.es_frame].volume_ml;
  out.sv = out.edv - out.esv;
  out.ef = 100.0 * out.sv / out.edv;
  if (out.sv <= 0.0) return out;

  auto since = [&](std::size_t from, std::size_t k) {
    const double dt = f[k].time_ms - f[from].time_ms;
    return dt >= 0.0 ? dt : dt + period;
  };

  for (std::size_t k = out.ed_frame;; k = (k + 1) % n) {
    out.per = std::max(out.per, -dv[k]);
    if (k == out.es_frame) break;
  }

  const double diastole = since(out.es_frame, out.ed_frame);
  const double boundary = options.early_fraction * diastole;
  double boundary_volume = out.esv;
  for (std::size_t k = out.es_frame;; k = (k + 1) % n) {
    const double rel = since(out.es_frame, k);
    if (rel <= boundary) {
      out.pfr = std::max(out.pfr, dv[k]);
    } else {
      out.pafr = std::max(out.pafr, dv[k]);
    }
    if (k == out.ed_frame) break;
    const std::size_t next = (k + 1) % n;
    const double rel_next = next == out.es_frame ? diastole : since(out.es_frame, next);
    if (rel <= boundary && rel_next > boundary) {
      const double w = (boundary - rel) / (rel_next - rel);
      boundary_volume = f[k].volume_ml + w * (f[next].volume_ml - f[k].volume_ml);
    }
  }
  out.ac = 100.0 * (out.edv - boundary_volume) / out.sv;
  return out;
}

BiomarkerVector extract_biomarkers(const VolumeCurve& lv, const VolumeCurve& rv,
                                   const Anthropometrics& anthro, const ExtractionOptions& options) {
  QcVerdict verdict = qc_screen(lv, rv, options.qc);
  if (!verdict.passed) throw QcRejection(std::move(verdict));
  if (!lv.lv_mass_g || !(*lv.lv_mass_g > 0.0)) {
    throw ValidationError("LV curve carries no positive lv_mass_g");
  }
  const double bsa = bsa_dubois(anthro);
  const ChamberFunction l = analyze_chamber(lv, options);
  const ChamberFunction r = analyze_chamber(rv, options);

  BiomarkerVector b;
  b[Biomarker::iLVEDV] = l.edv / bsa;
  b[Biomarker::iLVSV] = l.sv / bsa;
  b[Biomarker::LVEF] = l.ef;
  b[Biomarker::LVEDM] = *lv.lv_mass_g;
  b[Biomarker::LVPER] = l.per;
  b[Biomarker::LVPFR] = l.pfr;
  b[Biomarker::LVPAFR] = l.pafr;
  b[Biomarker::LVAC] = l.ac;
  b[Biomarker::iRVEDV] = r.edv / bsa;
  b[Biomarker::RVPER] = r.per;
  b[Biomarker::RVPFR] = r.pfr;
  b[Biomarker::RVPAFR] = r.pafr;
  b[Biomarker::RVAC] = r.ac;
  return b;
}

// --- file formats -----------------------------------------------------------

namespace {

double require_number(const csv::Table& t, std::size_t row, std::size_t col, const std::string& file) {
  if (col >= t.rows[row].size()) {
    throw ValidationError(file + ": line " + std::to_string(t.line_numbers[row]) + " is short");
  }
  auto v = csv::parse_double(t.rows[row][col]);
  if (!v) {
    throw ValidationError(file + ": line " + std::to_string(t.line_numbers[row]) + ": '" +
                          t.rows[row][col] + "' is not a number");
  }
  return *v;
}

std::size_t require_column(const csv::Table& t, std::string_view name, const std::string& file) {
  auto c = t.column(name);
  if (!c) throw ValidationError(file + ": missing column '" + std::string(name) + "'");
  return *c;
}

}  // namespace

CurvePair read_curve_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  csv::Table t = csv::read(path);
  const std::size_t ct = require_column(t, "time_ms", file);
  const std::size_t cl = require_column(t, "lv_volume_ml", file);
  const std::size_t cr = require_column(t, "rv_volume_ml", file);
  CurvePair p;
  p.lv.chamber = Chamber::LV;
  p.rv.chamber = Chamber::RV;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double time = require_number(t, r, ct, file);
    p.lv.frames.push_back({time, require_number(t, r, cl, file)});
    p.rv.frames.push_back({time, require_number(t, r, cr, file)});
  }
  if (p.lv.frames.empty()) throw ValidationError(file + ": no frames");
  return p;
}

void write_curve_csv(const std::filesystem::path& path, const CurvePair& curves) {
  if (curves.lv.frames.size() != curves.rv.frames.size()) {
    throw ConfigError("write_curve_csv: LV and RV frame counts differ");
  }
  std::ostringstream out;
  out << "time_ms,lv_volume_ml,rv_volume_ml\n";
  for (std::size_t k = 0; k < curves.lv.frames.size(); ++k) {
    out << csv::format_double(curves.lv.frames[k].time_ms) << ','
        << csv::format_double(curves.lv.frames[k].volume_ml) << ','
        << csv::format_double(curves.rv.frames[k].volume_ml) << '\n';
  }
  csv::write_text(path, out.str());
}

SubjectSidecar read_sidecar_csv(const std::filesystem::path& path) {
  const std::string file = path.string();
  csv::Table t = csv::read(path);
  if (t.rows.size() != 1) throw ValidationError(file + ": expected exactly one data row");
  SubjectSidecar s;
  s.anthro.weight_kg = require_number(t, 0, require_column(t, "weight_kg", file), file);
  s.anthro.height_cm = require_number(t, 0, require_column(t, "height_cm", file), file);
  const std::size_t cg = require_column(t, "gender", file);
  if (cg >= t.rows[0].size()) throw ValidationError(file + ": missing gender value");
  s.anthro.gender = gender_from_string(t.rows[0][cg]);
  s.lv_mass_g = require_number(t, 0, require_column(t, "lv_mass_g", file), file);
  if (auto c = t.column("sbp_mmhg")) s.sbp_mmhg = require_number(t, 0, *c, file);
  return s;
}

void write_sidecar_csv(const std::filesystem::path& path, const SubjectSidecar& s) {
  std::ostringstream out;
  out << "weight_kg,height_cm,gender,lv_mass_g" << (s.sbp_mmhg ? ",sbp_mmhg" : "") << '\n';
  out << csv::format_double(s.anthro.weight_kg) << ',' << csv::format_double(s.anthro.height_cm) << ','
      << to_string(s.anthro.gender) << ',' << csv::format_double(s.lv_mass_g);
  if (s.sbp_mmhg) out << ',' << csv::format_double(*s.sbp_mmhg);
  out << '\n';
  csv::write_text(path, out.str());
}

// --- synthetic curves ---------------------------------------------------------

double synthesized_volume(const CurveShape& s, double t_ms) {
  const double period = s.period_ms;
  double t = std::fmod(t_ms, period);
  if (t < 0.0) t += period;
  const double sv = s.edv_ml - s.esv_ml;
  const double ts = s.systole_fraction * period;
  const double diastole = period - ts;
  const double pi = std::numbers::pi;
  if (t < ts) return s.esv_ml + sv * (1.0 + std::cos(pi * t / ts)) / 2.0;
  const double tau = t - ts;
  const double early = s.early_window * diastole;
  const double atrial_start = (1.0 - s.atrial_window) * diastole;
  const double early_sv = s.early_fill_share * sv;
  if (tau < early) return s.esv_ml + early_sv * (1.0 - std::cos(pi * tau / early)) / 2.0;
  if (tau < atrial_start) return s.esv_ml + early_sv;
  const double late = (tau - atrial_start) / (s.atrial_window * diastole);
  return s.esv_ml + early_sv + (sv - early_sv) * (1.0 - std::cos(pi * late)) / 2.0;
}

VolumeCurve synthesize_curve(const CurveShape& s, Chamber chamber) {
  if (s.frames < 3 || !(s.edv_ml > s.esv_ml) || !(s.esv_ml > 0.0) || !(s.period_ms > 0.0)) {
    throw ConfigError("synthesize_curve: invalid shape");
  }
  VolumeCurve c;
  c.chamber = chamber;
  c.frames.reserve(s.frames);
  for (std::size_t k = 0; k < s.frames; ++k) {
    const double t = s.period_ms * static_cast<double>(k) / static_cast<double>(s.frames);
    c.frames.push_back({t, synthesized_volume(s, t)});
  }
  return c;
}

ChamberFunction synthesized_function(const CurveShape& s) {
  const double pi = std::numbers::pi;
  const double sv = s.edv_ml - s.esv_ml;
  // Rates in mL/s, durations in ms.
  const double ts = s.systole_fraction * s.period_ms / 1000.0;
  const double diastole = s.period_ms / 1000.0 - ts;
  ChamberFunction f;
  f.edv = s.edv_ml;
  f.esv = s.esv_ml;
  f.sv = sv;
  f.ef = 100.0 * sv / s.edv_ml;
  f.per = sv * pi / (2.0 * ts);
  f.pfr = s.early_fill_share * sv * pi / (2.0 * s.early_window * diastole);
  f.pafr = (1.0 - s.early_fill_share) * sv * pi / (2.0 * s.atrial_window * diastole);
  f.ac = 100.0 * (1.0 - s.early_fill_share);
  return f;
}

}  // namespace rvae
