#include "mdeval/sensitivity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mdeval/csv.hpp"

namespace mdeval {

namespace {

double to_double(const std::string& s, const char* what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  while (e > b && e[-1] == ' ') --e;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    throw FormatError(std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(' ') - b + 1);
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace

void ResponseSamples::validate() const {
  std::set<double> seen;
  for (const auto& p : points) {
    if (!(p.x >= 0.0) || !std::isfinite(p.x)) throw InvalidInput("intensities must be finite and >= 0");
    if (!std::isfinite(p.y)) throw InvalidInput("responses must be finite");
    if (!seen.insert(p.x).second) throw InvalidInput("repeated intensity in response samples");
  }
}

QuadraticFit fit_quadratic(std::span<const ResponsePoint> points) {
  std::set<double> nonzero;
  double s2 = 0, s3 = 0, s4 = 0, sxy = 0, sx2y = 0;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("non-finite response point");
    if (p.x != 0.0) nonzero.insert(p.x);
    const double x2 = p.x * p.x;
    s2 += x2;
    s3 += x2 * p.x;
    s4 += x2 * x2;
    sxy += p.x * p.y;
    sx2y += x2 * p.y;
  }
  if (nonzero.size() < 2) throw InvalidInput("quadratic fit needs two distinct non-zero intensities");
  const double det = s4 * s2 - s3 * s3;
  if (!(std::abs(det) > 1e-14 * s4 * s2)) throw InvalidInput("quadratic fit design is rank deficient");
  QuadraticFit f;
  f.a = (sx2y * s2 - s3 * sxy) / det;
  f.b = (s4 * sxy - s3 * sx2y) / det;
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = f.a * p.x * p.x + f.b * p.x - p.y;
    ss += r * r;
  }
  f.rms = std::sqrt(ss / static_cast<double>(points.size()));
  return f;
}

QuadraticFit fit_quadratic(const ResponseSamples& samples) {
  samples.validate();
  return fit_quadratic(std::span<const ResponsePoint>(samples.points));
}

double exchange_rate(const QuadraticFit& a, const QuadraticFit& b) {
  if (!(std::abs(b.b) >= 1e-12)) {
    throw UndefinedRateError("reference slope at zero is below 1e-12; exchange rate undefined");
  }
  return a.b / b.b;
}

double exchange_rate(const ResponseSamples& a, const ResponseSamples& b) {
  return exchange_rate(fit_quadratic(a), fit_quadratic(b));
}

SensitivityVector SensitivityVector::normalized_copy() const {
  SensitivityVector out = *this;
  double ss = 0.0;
  for (double r : rates) ss += r * r;
  if (!(ss > 0.0)) throw InvalidInput("cannot normalize a zero sensitivity vector");
  const double k = std::sqrt(static_cast<double>(kColumnCount) / ss);
  for (double& r : out.rates) r *= k;
  out.normalized = true;
  return out;
}

SensitivityVector sensitivity_vector(const ColumnResponses& metric, const ColumnResponses& reference) {
  SensitivityVector v;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const PerturbationColumn col = kAllColumns[c];
    const auto m = metric.find(col);
    const auto r = reference.find(col);
    if (m == metric.end() || r == reference.end()) {
      throw InvalidInput("missing responses for column " + std::string(to_string(col)));
    }
    if (v.metric.empty()) v.metric = m->second.metric;
    if (v.reference.empty()) v.reference = r->second.metric;
    const QuadraticFit fm = fit_quadratic(m->second);
    const QuadraticFit fr = fit_quadratic(r->second);
    if (fm.b < 0.0) {
      v.warnings.push_back(v.metric + ": negative slope at zero under " + std::string(to_string(col)));
    }
    v.rates[c] = exchange_rate(fm, fr);
  }
  return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InvalidInput("cosine similarity needs equal non-empty vectors");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (!(aa > 0.0) || !(bb > 0.0)) throw InvalidInput("cosine similarity of a zero vector");
  return std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
}

HumanResponses parse_human_csv(const std::string& text, const HumanIngestOptions& options) {
  struct Row {
    std::string annotator;
    bool gold;
    PerturbationColumn column;
    double x;
    int response;
  };
  const auto lines = text_lines(text);
  if (lines.empty()) throw FormatError("human CSV is empty");
  const auto header = split_csv_line(lines[0]);
  const std::vector<std::string> expected{"scene", "perturbation", "intensity", "annotator", "response"};
  std::vector<std::string> got;
  for (const auto& h : header) got.push_back(trim(h));
  if (got != expected) throw FormatError("human CSV header must be scene,perturbation,intensity,annotator,response");

  std::vector<Row> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 5) throw FormatError("human CSV line " + std::to_string(k + 1) + " needs 5 fields");
    Row r;
    r.annotator = trim(f[3]);
    if (r.annotator.empty()) throw FormatError("human CSV line " + std::to_string(k + 1) + ": empty annotator");
    const double resp = to_double(f[4], "response");
    if (resp != 0.0 && resp != 1.0) throw FormatError("responses must be 0 or 1");
    r.response = static_cast<int>(resp);
    const std::string pert = trim(f[1]);
    const double raw = to_double(f[2], "intensity");
    if (pert == "none") {
      r.gold = true;
      r.column = PerturbationColumn::kAffineDepth;
      r.x = 0.0;
    } else {
      r.column = parse_perturbation_column(pert);
      r.x = intensity_offset(r.column, raw);
      if (r.x < 0.0) throw FormatError("intensity below the identity for " + pert);
      r.gold = r.x == 0.0;
    }
    rows.push_back(std::move(r));
  }

  std::map<std::string, std::pair<int, int>> gold;  // correct, total
  std::set<std::string> annotators;
  for (const auto& r : rows) {
    annotators.insert(r.annotator);
    if (!r.gold) continue;
    auto& g = gold[r.annotator];
    g.first += r.response == 0;
    g.second += 1;
  }
  HumanResponses out;
  std::set<std::string> rejected;
  for (const auto& a : annotators) {
    const auto it = gold.find(a);
    if (it == gold.end()) throw FormatError("annotator '" + a + "' has no gold rows");
    const double acc = static_cast<double>(it->second.first) / it->second.second;
    if (acc < options.min_gold_accuracy) rejected.insert(a);
  }
  out.rejected_annotators.assign(rejected.begin(), rejected.end());

  std::map<PerturbationColumn, std::map<double, std::pair<double, std::size_t>>> sums;
  double fa_sum = 0.0;
  std::size_t fa_n = 0;
  for (const auto& r : rows) {
    if (rejected.count(r.annotator)) continue;
    ++out.rows_used;
    if (r.gold) {
      fa_sum += r.response;
      ++fa_n;
      continue;
    }
    auto& s = sums[r.column][r.x];
    s.first += r.response;
    s.second += 1;
  }
  if (fa_n == 0) throw FormatError("no gold rows left after annotator rejection");
  out.false_alarm_rate = fa_sum / static_cast<double>(fa_n);
  const double offset = options.anchor == AnchorMode::kInclude ? out.false_alarm_rate : 0.0;
  for (const auto& [col, by_x] : sums) {
    ResponseSamples s;
    s.metric = "human";
    s.column = col;
    s.points.push_back({0.0, 0.0, fa_n});
    for (const auto& [x, v] : by_x) {
      s.points.push_back({x, v.first / static_cast<double>(v.second) - offset, v.second});
    }
    out.samples[col] = std::move(s);
  }
  return out;
}

HumanResponses ingest_human_csv(const std::string& path, const HumanIngestOptions& options) {
  return parse_human_csv(read_text_file(path), options);
}

std::string sensitivity_csv(const std::vector<SensitivityRow>& rows) {
  std::string out = "metric";
  for (PerturbationColumn c : kAllColumns) out += "," + std::string(to_string(c));
  out += "\n";
  for (const auto& r : rows) {
    out += csv_field(r.label);
    for (double v : r.values) out += "," + fmt(v);
    out += "\n";
  }
  return out;
}

std::vector<SensitivityRow> parse_sensitivity_csv(const std::string& text) {
  const auto lines = text_lines(text);
  if (lines.empty()) throw FormatError("sensitivity CSV is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() != kColumnCount + 1) throw FormatError("sensitivity CSV needs 9 columns");
  std::array<std::size_t, kColumnCount> order{};
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto col = parse_perturbation_column(trim(header[c + 1]));
    order[c] = static_cast<std::size_t>(std::find(kAllColumns.begin(), kAllColumns.end(), col) -
                                        kAllColumns.begin());
  }
  std::vector<SensitivityRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto f = split_csv_line(lines[k]);
    if (f.size() != kColumnCount + 1) throw FormatError("sensitivity CSV row has the wrong width");
    SensitivityRow r;
    r.label = f[0];
    for (std::size_t c = 0; c < kColumnCount; ++c) r.values[order[c]] = to_double(f[c + 1], "rate");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_sensitivity_csv(const std::string& path, const std::vector<SensitivityRow>& rows) {
  write_text_file(path, sensitivity_csv(rows));
}

std::vector<SensitivityRow> read_sensitivity_csv(const std::string& path) {
  return parse_sensitivity_csv(read_text_file(path));
}

Image render_heat_table(const std::vector<SensitivityRow>& rows, int cell) {
  if (rows.empty()) throw InvalidInput("heat table needs at least one row");
  if (cell < 2) throw InvalidInput("heat table cell size must be >= 2");
  double vmax = 0.0;
  for (const auto& r : rows) {
    for (double v : r.values) {
      if (std::isfinite(v)) vmax = std::max(vmax, v);
    }
  }
  const int cols = static_cast<int>(kColumnCount);
  const int rws = static_cast<int>(rows.size());
  Image img(cols * cell + 1, rws * cell + 1, 3, 96);
  for (int r = 0; r < rws; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = rows[r].values[c];
      const double t = (vmax > 0.0 && std::isfinite(v)) ? std::clamp(v / vmax, 0.0, 1.0) : 0.0;
      const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - t)));
      for (int y = 1; y < cell; ++y) {
        for (int x = 1; x < cell; ++x) {
          img.at(r * cell + y, c * cell + x, 0) = 255;
          img.at(r * cell + y, c * cell + x, 1) = fade;
          img.at(r * cell + y, c * cell + x, 2) = fade;
        }
      }
    }
  }
  return img;
}

}  // namespace mdeval
