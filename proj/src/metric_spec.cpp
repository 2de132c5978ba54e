#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mdeval/metrics.hpp"

namespace mdeval {

namespace {

constexpr std::array<std::pair<MetricBase, std::string_view>, 9> kBaseNames{{
    {MetricBase::kAbsRel, "absrel"},
    {MetricBase::kAbsRelP, "absrel_p"},
    {MetricBase::kDelta, "delta"},
    {MetricBase::kRmse, "rmse"},
    {MetricBase::kRmseLog, "rmse_log"},
    {MetricBase::kRmseLogSI, "rmse_log_si"},
    {MetricBase::kWkdr, "wkdr"},
    {MetricBase::kBoundaryF1, "boundary_f1"},
    {MetricBase::kRelNormal, "relnormal"},
}};

std::string fmt_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("bad number '" + std::string(s) + "'");
  }
  return v;
}

long long parse_int(std::string_view s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += f(v[i]);
  }
  return out;
}

std::string_view alignment_label(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::kNone: return "No Align";
    case AlignmentMode::kScaleDepth: return "Depth Sc";
    case AlignmentMode::kAffineDepthL1: return "Depth Af";
    case AlignmentMode::kAffineDepthLstsq: return "Lst. Sq.";
    case AlignmentMode::kAffineDisparity: return "Disparity Af";
    case AlignmentMode::kPointmapScale: return "Point Sc";
    case AlignmentMode::kPointmapAffine: return "Point Af";
  }
  return "?";
}

bool same_relnormal(const RelNormalConfig& a, const RelNormalConfig& b) {
  return a.radius == b.radius && a.scales == b.scales && a.samples == b.samples &&
         a.normal_mode == b.normal_mode && a.plane_window == b.plane_window;
}

}  // namespace

std::string_view to_string(MetricBase base) {
  for (const auto& [b, n] : kBaseNames) {
    if (b == base) return n;
  }
  return "unknown";
}

MetricBase parse_metric_base(std::string_view name) {
  for (const auto& [b, n] : kBaseNames) {
    if (n == name) return b;
  }
  throw FormatError("unknown metric '" + std::string(name) + "'");
}

bool MetricParams::operator==(const MetricParams& o) const {
  return delta_exponent == o.delta_exponent && wkdr_tau == o.wkdr_tau &&
         wkdr_pairs == o.wkdr_pairs && f1_thresholds == o.f1_thresholds &&
         f1_tolerance == o.f1_tolerance && same_relnormal(relnormal, o.relnormal) &&
         alignment.truncation == o.alignment.truncation &&
         alignment.disparity_floor == o.alignment.disparity_floor &&
         alignment.depth_floor == o.alignment.depth_floor;
}

bool MetricSpec::uses_points() const { return base == MetricBase::kAbsRelP; }

void MetricSpec::validate() const {
  if (!(params.delta_exponent > 0.0)) throw InvalidInput("delta exponent must be > 0");
  if (!(params.wkdr_tau >= 1.0)) throw InvalidInput("WKDR tau must be >= 1");
  if (params.wkdr_pairs < 1) throw InvalidInput("WKDR pair budget must be >= 1");
  if (params.f1_thresholds.empty()) throw InvalidInput("BoundaryF1 needs thresholds");
  for (double t : params.f1_thresholds) {
    if (!(t > 1.0)) throw InvalidInput("BoundaryF1 thresholds must exceed 1");
  }
  if (params.f1_tolerance < 0) throw InvalidInput("BoundaryF1 tolerance must be >= 0");
  params.relnormal.validate();
}

std::string MetricSpec::to_string() const {
  const MetricParams d;
  std::vector<std::string> kv;
  switch (base) {
    case MetricBase::kDelta:
      if (params.delta_exponent != d.delta_exponent) kv.push_back("t=" + fmt_double(params.delta_exponent));
      break;
    case MetricBase::kWkdr:
      if (params.wkdr_tau != d.wkdr_tau) kv.push_back("tau=" + fmt_double(params.wkdr_tau));
      if (params.wkdr_pairs != d.wkdr_pairs) kv.push_back("pairs=" + std::to_string(params.wkdr_pairs));
      break;
    case MetricBase::kBoundaryF1:
      if (params.f1_thresholds != d.f1_thresholds) {
        kv.push_back("thresholds=" + join(params.f1_thresholds, fmt_double));
      }
      if (params.f1_tolerance != d.f1_tolerance) kv.push_back("tol=" + std::to_string(params.f1_tolerance));
      break;
    case MetricBase::kRelNormal: {
      const auto& r = params.relnormal;
      if (r.radius != d.relnormal.radius) kv.push_back("radius=" + std::to_string(r.radius));
      if (r.scales != d.relnormal.scales) {
        kv.push_back("scales=" + join(r.scales, [](int s) { return std::to_string(s); }));
      }
      if (r.samples != d.relnormal.samples) kv.push_back("samples=" + std::to_string(r.samples));
      if (r.normal_mode != d.relnormal.normal_mode) kv.push_back("normals=plane");
      if (r.plane_window != d.relnormal.plane_window) kv.push_back("window=" + std::to_string(r.plane_window));
      break;
    }
    default:
      break;
  }
  if (params.alignment.truncation != d.alignment.truncation) {
    kv.push_back("trunc=" + fmt_double(params.alignment.truncation));
  }
  if (params.alignment.disparity_floor != d.alignment.disparity_floor) {
    kv.push_back("eps_disp=" + fmt_double(params.alignment.disparity_floor));
  }
  if (params.alignment.depth_floor != d.alignment.depth_floor) {
    kv.push_back("eps_depth=" + fmt_double(params.alignment.depth_floor));
  }
  std::string out = std::string(mdeval::to_string(base)) + "@" + std::string(mdeval::to_string(alignment));
  if (!kv.empty()) {
    out += "[";
    for (std::size_t i = 0; i < kv.size(); ++i) {
      if (i) out += ",";
      out += kv[i];
    }
    out += "]";
  }
  return out;
}

MetricSpec MetricSpec::parse(std::string_view text) {
  MetricSpec spec;
  std::string_view head = text;
  std::string_view body;
  if (const auto lb = text.find('['); lb != std::string_view::npos) {
    if (text.back() != ']') throw FormatError("metric spec '" + std::string(text) + "' lacks ']'");
    head = text.substr(0, lb);
    body = text.substr(lb + 1, text.size() - lb - 2);
  }
  const auto at = head.find('@');
  spec.base = parse_metric_base(head.substr(0, at));
  if (at != std::string_view::npos) spec.alignment = parse_alignment_mode(head.substr(at + 1));
  if (!body.empty()) {
    for (std::string_view item : split(body, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw FormatError("bad metric parameter '" + std::string(item) + "'");
      const std::string_view key = item.substr(0, eq);
      const std::string_view val = item.substr(eq + 1);
      auto& p = spec.params;
      if (key == "t") {
        p.delta_exponent = parse_double(val);
      } else if (key == "tau") {
        p.wkdr_tau = parse_double(val);
      } else if (key == "pairs") {
        p.wkdr_pairs = static_cast<std::uint64_t>(parse_int(val));
      } else if (key == "thresholds") {
        p.f1_thresholds.clear();
        for (auto t : split(val, ';')) p.f1_thresholds.push_back(parse_double(t));
      } else if (key == "tol") {
        p.f1_tolerance = static_cast<int>(parse_int(val));
      } else if (key == "radius") {
        p.relnormal.radius = static_cast<int>(parse_int(val));
      } else if (key == "scales") {
        p.relnormal.scales.clear();
        for (auto s : split(val, ';')) p.relnormal.scales.push_back(static_cast<int>(parse_int(s)));
      } else if (key == "samples") {
        p.relnormal.samples = static_cast<std::uint64_t>(parse_int(val));
      } else if (key == "normals") {
        if (val == "plane") {
          p.relnormal.normal_mode = NormalMode::kPlaneFit;
        } else if (val == "cross") {
          p.relnormal.normal_mode = NormalMode::kCrossProduct;
        } else {
          throw FormatError("normals must be 'cross' or 'plane'");
        }
      } else if (key == "window") {
        p.relnormal.plane_window = static_cast<int>(parse_int(val));
      } else if (key == "trunc") {
        p.alignment.truncation = parse_double(val);
      } else if (key == "eps_disp") {
        p.alignment.disparity_floor = parse_double(val);
      } else if (key == "eps_depth") {
        p.alignment.depth_floor = parse_double(val);
      } else {
        throw FormatError("unknown metric parameter '" + std::string(key) + "'");
      }
    }
  }
  spec.validate();
  return spec;
}

std::string MetricSpec::row_label() const {
  std::string name;
  switch (base) {
    case MetricBase::kAbsRel: name = "AbsRel"; break;
    case MetricBase::kAbsRelP: name = "AbsRel_p"; break;
    case MetricBase::kDelta: name = "delta^" + fmt_double(params.delta_exponent); break;
    case MetricBase::kRmse: name = "RMSE"; break;
    case MetricBase::kRmseLog: name = "RMSE (log)"; break;
    case MetricBase::kRmseLogSI: name = "RMSE (log, SI)"; break;
    case MetricBase::kWkdr: name = "WKDR"; break;
    case MetricBase::kBoundaryF1: name = "Boundary F1"; break;
    case MetricBase::kRelNormal: name = "RelNormal"; break;
  }
  return name + " - " + std::string(alignment_label(alignment));
}

std::vector<MetricSpec> metric_catalog() {
  std::vector<MetricSpec> out;
  const std::array depth_modes{AlignmentMode::kNone, AlignmentMode::kScaleDepth,
                               AlignmentMode::kAffineDepthL1, AlignmentMode::kAffineDepthLstsq,
                               AlignmentMode::kAffineDisparity};
  auto add = [&](MetricBase b, AlignmentMode m, double t = 1.0) {
    MetricSpec s;
    s.base = b;
    s.alignment = m;
    s.params.delta_exponent = t;
    out.push_back(s);
  };
  for (AlignmentMode m : depth_modes) add(MetricBase::kAbsRel, m);
  for (AlignmentMode m : {AlignmentMode::kNone, AlignmentMode::kPointmapScale,
                          AlignmentMode::kPointmapAffine}) {
    add(MetricBase::kAbsRelP, m);
  }
  for (AlignmentMode m : depth_modes) add(MetricBase::kDelta, m, 0.125);
  for (AlignmentMode m : depth_modes) add(MetricBase::kDelta, m, 1.0);
  for (AlignmentMode m : depth_modes) add(MetricBase::kRmse, m);
  for (AlignmentMode m : depth_modes) add(MetricBase::kRmseLog, m);
  add(MetricBase::kRmseLogSI, AlignmentMode::kNone);
  add(MetricBase::kWkdr, AlignmentMode::kNone);
  add(MetricBase::kBoundaryF1, AlignmentMode::kNone);
  add(MetricBase::kRelNormal, AlignmentMode::kNone);
  return out;
}

}  // namespace mdeval
