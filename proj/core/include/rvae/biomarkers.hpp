#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvae/error.hpp"

namespace rvae {

enum class Chamber { LV, RV };
enum class Gender { Female, Male };

std::string_view to_string(Gender g);
/// Accepts "female"/"male" (any case) and "F"/"M".
Gender gender_from_string(std::string_view s);

inline constexpr std::size_t kBiomarkerCount = 13;

/// Feature order used everywhere: model inputs, CSV columns, reports.
enum class Biomarker : std::size_t {
  iLVEDV, iLVSV, LVEF, LVEDM, LVPER, LVPFR, LVPAFR, LVAC, iRVEDV, RVPER, RVPFR, RVPAFR, RVAC
};

inline constexpr std::array<std::string_view, kBiomarkerCount> kBiomarkerNames = {
    "iLVEDV", "iLVSV", "LVEF",  "LVEDM", "LVPER",  "LVPFR", "LVPAFR",
    "LVAC",   "iRVEDV", "RVPER", "RVPFR", "RVPAFR", "RVAC"};

std::string_view biomarker_name(Biomarker b);
std::optional<Biomarker> biomarker_from_name(std::string_view name);
std::string_view biomarker_unit(Biomarker b);

struct BiomarkerVector {
  std::array<double, kBiomarkerCount> values{};

  double& operator[](Biomarker b) { return values[static_cast<std::size_t>(b)]; }
  double operator[](Biomarker b) const { return values[static_cast<std::size_t>(b)]; }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const BiomarkerVector&) const = default;
};

struct VolumeFrame {
  double time_ms = 0.0;
  double volume_ml = 0.0;
};

struct VolumeCurve {
  Chamber chamber = Chamber::LV;
  std::vector<VolumeFrame> frames;
  std::optional<double> lv_mass_g;
};

struct Anthropometrics {
  double weight_kg = 0.0;
  double height_cm = 0.0;
  Gender gender = Gender::Female;
};

/// DuBois body surface area in m^2. Throws ValidationError when weight is
/// outside (20, 300) kg or height outside (100, 250) cm.
double bsa_dubois(const Anthropometrics& anthro);

struct QcRules {
  std::size_t min_frames = 10;
  double ef_min = 15.0;           // percent, exclusive
  double ef_max = 90.0;           // percent, exclusive
  double closure_fraction = 0.15; // |first - last| / EDV
  double jump_fraction = 0.25;    // max |v[k+1] - v[k]| / EDV
};

struct QcVerdict {
  bool passed = true;
  std::vector<std::string> reasons;  // rule ids, prefixed "lv." / "rv."
};

/// Rule ids reported in QcVerdict::reasons (without chamber prefix).
namespace qc_rule {
inline constexpr std::string_view kTooFewFrames = "too_few_frames";
inline constexpr std::string_view kNonIncreasingTime = "non_increasing_time";
inline constexpr std::string_view kNonPositiveVolume = "non_positive_volume";
inline constexpr std::string_view kEjectionFraction = "ef_out_of_range";
inline constexpr std::string_view kCycleNotClosed = "cycle_not_closed";
inline constexpr std::string_view kVolumeJump = "volume_jump";
}  // namespace qc_rule

QcVerdict qc_screen(const VolumeCurve& curve, const QcRules& rules = {});
QcVerdict qc_screen(const VolumeCurve& lv, const VolumeCurve& rv, const QcRules& rules = {});

class QcRejection : public ValidationError {
 public:
  explicit QcRejection(QcVerdict verdict);
  const QcVerdict& verdict() const { return verdict_; }

 private:
  QcVerdict verdict_;
};

struct ExtractionOptions {
  double early_fraction = 0.6;  // leading share of diastole treated as early filling
  QcRules qc;
};

/// Volume-curve indices for a single chamber, unindexed.
struct ChamberFunction {
  double edv = 0.0;   // mL
  double esv = 0.0;   // mL
  double sv = 0.0;    // mL
  double ef = 0.0;    // %
  double per = 0.0;   // mL/s
  double pfr = 0.0;   // mL/s, early filling
  double pafr = 0.0;  // mL/s, atrial filling
  double ac = 0.0;    // % of SV gained during the atrial window
  std::size_t ed_frame = 0;
  std::size_t es_frame = 0;
};

/// Cyclic central-difference derivative in mL/s.
std::vector<double> volume_derivative(const VolumeCurve& curve);

ChamberFunction analyze_chamber(const VolumeCurve& curve, const ExtractionOptions& options = {});

/// Throws QcRejection when either curve fails QC and ValidationError when
/// the LV curve carries no mass.
BiomarkerVector extract_biomarkers(const VolumeCurve& lv, const VolumeCurve& rv,
                                   const Anthropometrics& anthro,
                                   const ExtractionOptions& options = {});

// --- file formats -----------------------------------------------------------

struct CurvePair {
  VolumeCurve lv;
  VolumeCurve rv;
};

/// CSV with header `time_ms,lv_volume_ml,rv_volume_ml` (column order free).
CurvePair read_curve_csv(const std::filesystem::path& path);
void write_curve_csv(const std::filesystem::path& path, const CurvePair& curves);

struct SubjectSidecar {
  Anthropometrics anthro;
  double lv_mass_g = 0.0;
  std::optional<double> sbp_mmhg;
};

/// Header `weight_kg,height_cm,gender,lv_mass_g[,sbp_mmhg]` plus one data row.
SubjectSidecar read_sidecar_csv(const std::filesystem::path& path);
void write_sidecar_csv(const std::filesystem::path& path, const SubjectSidecar& sidecar);

// --- synthetic curves ---------------------------------------------------------

/// Piecewise raised-cosine cardiac cycle: ejection, early filling,
/// diastasis, atrial kick. ED is at t = 0.
struct CurveShape {
  double edv_ml = 150.0;
  double esv_ml = 60.0;
  double period_ms = 1000.0;
  std::size_t frames = 50;
  double systole_fraction = 0.35;       // of the period
  double early_fill_share = 0.7;        // share of SV filled early
  double early_window = 0.4;            // of diastole
  double atrial_window = 0.3;           // trailing share of diastole
};

VolumeCurve synthesize_curve(const CurveShape& shape, Chamber chamber);
double synthesized_volume(const CurveShape& shape, double t_ms);

/// Closed-form indices of synthesize_curve for the default 60/40 diastolic
/// split (requires early_window <= 0.6 and atrial_window <= 0.4).
ChamberFunction synthesized_function(const CurveShape& shape);

}  // namespace rvae
