/*
 *  Copyright 2026 The sdgjudge Authors. All Rights Reserved.
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */
#include "sdgjudge/analytics.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sdgjudge/error.hpp"

namespace sdgjudge::analytics {

using nlohmann::json;

Proportions label_proportions(const RunResult& run) {
  const auto c = run.counts();
  Proportions p;
  p.n_judged = c.relevant + c.nonrelevant;
  p.n_failures = c.parse_failures + c.backend_failures;
  if (p.n_judged == 0) {
    throw Error(ErrorCode::kEmptyRun, "run for model '" + run.model_id + "' has no parseable verdicts");
  }
  p.pct_relevant = 100.0 * static_cast<double>(c.relevant) / static_cast<double>(p.n_judged);
  p.pct_nonrelevant = 100.0 * static_cast<double>(c.nonrelevant) / static_cast<double>(p.n_judged);
  return p;
}

namespace {

// Parseable labels of `b` aligned to `a`'s record order.
std::pair<std::vector<Label>, std::vector<Label>> aligned_labels(const RunResult& a,
                                                                 const RunResult& b) {
  if (a.goal_number != b.goal_number) {
    throw Error(ErrorCode::kValidation, "runs judge different goals");
  }
  std::unordered_map<std::string, Label> b_labels;
  for (const auto& r : b.records) {
    if (auto l = r.label()) b_labels.emplace(r.doc_key, *l);
  }
  std::pair<std::vector<Label>, std::vector<Label>> out;
  for (const auto& r : a.records) {
    const auto la = r.label();
    if (!la) continue;
    const auto it = b_labels.find(r.doc_key);
    if (it == b_labels.end()) continue;
    out.first.push_back(*la);
    out.second.push_back(it->second);
  }
  if (out.first.empty()) {
    throw Error(ErrorCode::kUndefinedComparison, "runs '" + a.model_id + "' and '" + b.model_id +
                                                     "' share no parseable documents");
  }
  return out;
}

}  // namespace

double agreement_rate(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "label vectors differ in length");
  if (a.empty()) throw Error(ErrorCode::kUndefinedComparison, "no labels to compare");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

std::optional<double> cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kInvalidArgument, "label vectors differ in length");
  if (a.empty()) throw Error(ErrorCode::kUndefinedComparison, "no labels to compare");
  // kappa = (p_o - p_e) / (1 - p_e), scaled by n^2 so the counts stay
  // integral and the 10-item textbook case lands on exactly 0.6.
  long long n = static_cast<long long>(a.size());
  long long agree = 0;
  long long a_rel = 0;
  long long b_rel = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    agree += a[i] == b[i] ? 1 : 0;
    a_rel += a[i] == Label::kRelevant ? 1 : 0;
    b_rel += b[i] == Label::kRelevant ? 1 : 0;
  }
  const long long chance = a_rel * b_rel + (n - a_rel) * (n - b_rel);
  const long long denominator = n * n - chance;
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(n * agree - chance) / static_cast<double>(denominator);
}

double pairwise_agreement(const RunResult& a, const RunResult& b) {
  const auto [la, lb] = aligned_labels(a, b);
  return agreement_rate(la, lb);
}

std::optional<double> cohen_kappa(const RunResult& a, const RunResult& b) {
  const auto [la, lb] = aligned_labels(a, b);
  return cohen_kappa(std::span<const Label>(la), std::span<const Label>(lb));
}

std::size_t VennPartition::marginal(int m) const {
  std::size_t total = 0;
  for (int mask = 0; mask < 8; ++mask) {
    if (mask & (1 << m)) total += regions[static_cast<std::size_t>(mask)];
  }
  return total;
}

std::string region_name(const VennPartition& venn, int mask) {
  if (mask == 0) return "none";
  std::vector<std::string> parts;
  for (int m = 0; m < 3; ++m) {
    if (mask & (1 << m)) parts.push_back(venn.models[static_cast<std::size_t>(m)]);
  }
  if (parts.size() == 1) return "only:" + parts.front();
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

VennPartition venn_partition(const RunResult& a, const RunResult& b, const RunResult& c,
                             Label label) {
  const RunResult* runs[3] = {&a, &b, &c};
  std::unordered_map<std::string, Label> labels[3];
  for (int i = 0; i < 3; ++i) {
    if (runs[i]->goal_number != a.goal_number) {
      throw Error(ErrorCode::kValidation, "runs judge different goals");
    }
    for (const auto& r : runs[i]->records) {
      if (auto l = r.label()) labels[i].emplace(r.doc_key, *l);
    }
  }
  VennPartition venn;
  venn.models = {a.model_id, b.model_id, c.model_id};
  for (const auto& [doc_key, la] : labels[0]) {
    const auto ib = labels[1].find(doc_key);
    const auto ic = labels[2].find(doc_key);
    if (ib == labels[1].end() || ic == labels[2].end()) continue;
    int mask = 0;
    if (la == label) mask |= 0b001;
    if (ib->second == label) mask |= 0b010;
    if (ic->second == label) mask |= 0b100;
    ++venn.regions[static_cast<std::size_t>(mask)];
    ++venn.universe;
  }
  if (venn.universe == 0) {
    throw Error(ErrorCode::kUndefinedComparison, "no document is parseable in all three runs");
  }
  return venn;
}

AgreementReport build_report(std::span<const RunResult> runs, int goal) {
  if (runs.size() != 3) {
    throw Error(ErrorCode::kArity, "agreement report needs exactly 3 runs, got " +
                                       std::to_string(runs.size()));
  }
  std::set<std::string> models;
  for (const auto& run : runs) {
    if (run.goal_number != goal) {
      throw Error(ErrorCode::kValidation, "run for '" + run.model_id + "' judges goal " +
                                              std::to_string(run.goal_number) + ", not " +
                                              std::to_string(goal));
    }
    if (!models.insert(run.model_id).second) {
      throw Error(ErrorCode::kValidation, "model '" + run.model_id + "' given twice");
    }
  }
  AgreementReport report;
  report.goal_number = goal;
  for (const auto& run : runs) report.runs.push_back({run.model_id, label_proportions(run)});
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      const PairStats stats{pairwise_agreement(runs[i], runs[j]), cohen_kappa(runs[i], runs[j])};
      report.pairwise[{runs[i].model_id, runs[j].model_id}] = stats;
      report.pairwise[{runs[j].model_id, runs[i].model_id}] = stats;
    }
  }
  report.venn_relevant = venn_partition(runs[0], runs[1], runs[2], Label::kRelevant);
  report.venn_nonrelevant = venn_partition(runs[0], runs[1], runs[2], Label::kNonRelevant);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kRegionKeys[8] = {"none",    "A_only",  "B_only",  "AB_only",
                                        "C_only",  "AC_only", "BC_only", "ABC"};

json venn_to_json(const VennPartition& v) {
  json regions = json::object();
  for (int mask = 0; mask < 8; ++mask) regions[kRegionKeys[mask]] = v.regions[mask];
  return {{"models", v.models}, {"regions", regions}, {"universe", v.universe}};
}

VennPartition venn_from_json(const json& j) {
  VennPartition v;
  const auto models = j.at("models").get<std::vector<std::string>>();
  if (models.size() != 3) throw Error(ErrorCode::kParse, "venn needs 3 models");
  std::copy(models.begin(), models.end(), v.models.begin());
  for (int mask = 0; mask < 8; ++mask) {
    v.regions[mask] = j.at("regions").at(kRegionKeys[mask]).get<std::size_t>();
  }
  v.universe = j.at("universe").get<std::size_t>();
  return v;
}

}  // namespace

json report_to_json(const AgreementReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) {
    runs.push_back({{"model_id", r.model_id},
                    {"n_judged", r.proportions.n_judged},
                    {"n_failures", r.proportions.n_failures},
                    {"pct_relevant", r.proportions.pct_relevant},
                    {"pct_nonrelevant", r.proportions.pct_nonrelevant}});
  }
  json pairwise = json::array();
  for (const auto& [models, stats] : report.pairwise) {
    pairwise.push_back({{"model_a", models.first},
                        {"model_b", models.second},
                        {"agreement_rate", stats.agreement},
                        {"kappa", stats.kappa ? json(*stats.kappa) : json("degenerate")}});
  }
  return {{"goal_number", report.goal_number},
          {"runs", std::move(runs)},
          {"pairwise", std::move(pairwise)},
          {"venn_relevant", venn_to_json(report.venn_relevant)},
          {"venn_nonrelevant", venn_to_json(report.venn_nonrelevant)}};
}

AgreementReport report_from_json(const json& j) {
  try {
    AgreementReport report;
    report.goal_number = j.at("goal_number").get<int>();
    for (const auto& r : j.at("runs")) {
      report.runs.push_back({r.at("model_id").get<std::string>(),
                             {r.at("pct_relevant").get<double>(), r.at("pct_nonrelevant").get<double>(),
                              r.at("n_judged").get<std::size_t>(),
                              r.at("n_failures").get<std::size_t>()}});
    }
    for (const auto& p : j.at("pairwise")) {
      PairStats stats;
      stats.agreement = p.at("agreement_rate").get<double>();
      if (p.at("kappa").is_number()) stats.kappa = p["kappa"].get<double>();
      report.pairwise[{p.at("model_a").get<std::string>(), p.at("model_b").get<std::string>()}] =
          stats;
    }
    report.venn_relevant = venn_from_json(j.at("venn_relevant"));
    report.venn_nonrelevant = venn_from_json(j.at("venn_nonrelevant"));
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
  }
}

std::string one_decimal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", value);
  return buf;
}

std::string proportions_table(const AgreementReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %9s %10s %12s %16s\n", "model", "n_judged",
                "n_failures", "pct_relevant", "pct_nonrelevant");
  out << line;
  for (const auto& r : report.runs) {
    std::snprintf(line, sizeof line, "%-20s %9zu %10zu %12s %16s\n", r.model_id.c_str(),
                  r.proportions.n_judged, r.proportions.n_failures,
                  one_decimal(r.proportions.pct_relevant).c_str(),
                  one_decimal(r.proportions.pct_nonrelevant).c_str());
    out << line;
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Files and plots
// ---------------------------------------------------------------------------

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out.flush()) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string venn_csv(const VennPartition& venn) {
  std::string out = "region,count\n";
  for (int mask : {1, 2, 4, 3, 5, 6, 7, 0}) {
    out += csv_field(region_name(venn, mask)) + "," +
           std::to_string(venn.regions[static_cast<std::size_t>(mask)]) + "\n";
  }
  return out;
}

}  // namespace

std::string render_proportions_svg(const AgreementReport& report) {
  constexpr double kWidth = 640;
  constexpr double kHeight = 400;
  constexpr double kBaseline = 340;
  constexpr double kPlotHeight = 280;
  constexpr double kBarWidth = 48;
  constexpr double kGroupWidth = 160;
  constexpr double kLeft = 80;

  std::ostringstream svg;
  svg << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")"
      << kHeight << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(">)" << '\n';
  svg << R"(<rect x="0" y="0" width="640" height="400" fill="#ffffff"/>)" << '\n';
  svg << R"(<text x="320" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">)"
      << "SDG " << report.goal_number << ": share of abstracts per label (%)</text>\n";
  for (int tick = 0; tick <= 100; tick += 25) {
    const double y = kBaseline - kPlotHeight * tick / 100.0;
    svg << R"(<line x1=")" << num(kLeft - 10) << R"(" y1=")" << num(y) << R"(" x2=")"
        << num(kWidth - 20) << R"(" y2=")" << num(y) << R"(" stroke="#dddddd"/>)" << '\n';
    svg << R"(<text x=")" << num(kLeft - 14) << R"(" y=")" << num(y + 4)
        << R"(" text-anchor="end" font-family="sans-serif" font-size="11">)" << tick
        << "</text>\n";
  }
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& run = report.runs[i];
    const double group_x = kLeft + kGroupWidth * static_cast<double>(i) + 16;
    const std::pair<const char*, double> bars[2] = {
        {"Relevant", run.proportions.pct_relevant},
        {"Non-Relevant", run.proportions.pct_nonrelevant}};
    for (int k = 0; k < 2; ++k) {
      const double h = kPlotHeight * bars[k].second / 100.0;
      const double x = group_x + k * (kBarWidth + 8);
      svg << R"(<rect class="bar" data-model=")" << xml_escape(run.model_id)
          << R"(" data-label=")" << bars[k].first << R"(" data-value=")"
          << one_decimal(bars[k].second) << R"(" x=")" << num(x) << R"(" y=")"
          << num(kBaseline - h) << R"(" width=")" << num(kBarWidth) << R"(" height=")" << num(h)
          << R"(" fill=")" << (k == 0 ? "#2b8cbe" : "#d95f0e") << R"("/>)" << '\n';
      svg << R"(<text x=")" << num(x + kBarWidth / 2) << R"(" y=")" << num(kBaseline - h - 4)
          << R"(" text-anchor="middle" font-family="sans-serif" font-size="11">)"
          << one_decimal(bars[k].second) << "</text>\n";
    }
    svg << R"(<text x=")" << num(group_x + kBarWidth + 4) << R"(" y=")" << num(kBaseline + 18)
        << R"(" text-anchor="middle" font-family="sans-serif" font-size="12">)"
        << xml_escape(run.model_id) << "</text>\n";
  }
  svg << R"(<rect x="440" y="360" width="12" height="12" fill="#2b8cbe"/>)"
      << R"(<text x="456" y="370" font-family="sans-serif" font-size="11">Relevant</text>)"
      << R"(<rect x="520" y="360" width="12" height="12" fill="#d95f0e"/>)"
      << R"(<text x="536" y="370" font-family="sans-serif" font-size="11">Non-Relevant</text>)"
      << '\n';
  svg << "</svg>\n";
  return svg.str();
}

std::string render_venn_svg(const VennPartition& venn, std::string_view title) {
  struct Spot {
    int mask;
    const char* id;
    int x;
    int y;
  };
  static constexpr Spot kSpots[] = {
      {0b001, "region-A", 145, 150},  {0b010, "region-B", 355, 150},
      {0b100, "region-C", 250, 330},  {0b011, "region-AB", 250, 130},
      {0b101, "region-AC", 190, 245}, {0b110, "region-BC", 310, 245},
      {0b111, "region-ABC", 250, 205}};
  static constexpr int kCircles[3][2] = {{200, 175}, {300, 175}, {250, 262}};
  static constexpr const char* kFill[3] = {"#1b9e77", "#d95f02", "#7570b3"};
  static constexpr int kNameSpots[3][2] = {{110, 60}, {390, 60}, {250, 395}};

  std::ostringstream svg;
  svg << R"(<svg xmlns="http://www.w3.org/2000/svg" width="500" height="420" viewBox="0 0 500 420">)"
      << '\n';
  svg << R"(<rect x="0" y="0" width="500" height="420" fill="#ffffff"/>)" << '\n';
  svg << R"(<text x="250" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">)"
      << xml_escape(title) << "</text>\n";
  for (int m = 0; m < 3; ++m) {
    svg << R"(<circle cx=")" << kCircles[m][0] << R"(" cy=")" << kCircles[m][1]
        << R"(" r="110" fill=")" << kFill[m] << R"(" fill-opacity="0.25" stroke=")" << kFill[m]
        << R"(" stroke-width="2"/>)" << '\n';
    svg << R"(<text x=")" << kNameSpots[m][0] << R"(" y=")" << kNameSpots[m][1]
        << R"(" text-anchor="middle" font-family="sans-serif" font-size="13">)"
        << xml_escape(venn.models[static_cast<std::size_t>(m)]) << " (" << venn.marginal(m)
        << ")</text>\n";
  }
  for (const auto& spot : kSpots) {
    svg << R"(<text id=")" << spot.id << R"(" x=")" << spot.x << R"(" y=")" << spot.y
        << R"(" text-anchor="middle" font-family="sans-serif" font-size="14">)"
        << venn.regions[static_cast<std::size_t>(spot.mask)] << "</text>\n";
  }
  svg << R"(<text id="region-none" x="480" y="410" text-anchor="end" font-family="sans-serif" font-size="12">none: )"
      << venn.none() << " of " << venn.universe << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> emit_report(const AgreementReport& report,
                                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const char* name, const std::string& content) {
    write_file(out_dir / name, content);
    written.push_back(out_dir / name);
  };
  emit("report.json", report_to_json(report).dump(2) + "\n");

  std::string csv = "model_id,n_judged,n_failures,pct_relevant,pct_nonrelevant\n";
  for (const auto& r : report.runs) {
    csv += csv_field(r.model_id) + "," + std::to_string(r.proportions.n_judged) + "," +
           std::to_string(r.proportions.n_failures) + "," + one_decimal(r.proportions.pct_relevant) +
           "," + one_decimal(r.proportions.pct_nonrelevant) + "\n";
  }
  emit("proportions.csv", csv);
  emit("venn_relevant.csv", venn_csv(report.venn_relevant));
  emit("venn_nonrelevant.csv", venn_csv(report.venn_nonrelevant));
  emit("proportions.svg", render_proportions_svg(report));
  const std::string goal = "SDG " + std::to_string(report.goal_number);
  emit("venn_relevant.svg", render_venn_svg(report.venn_relevant, goal + ": Relevant"));
  emit("venn_nonrelevant.svg", render_venn_svg(report.venn_nonrelevant, goal + ": Non-Relevant"));
  return written;
}

}  // namespace sdgjudge::analytics
