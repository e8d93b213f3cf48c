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
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdgjudge/records.hpp"

namespace sdgjudge::analytics {

struct Proportions {
  double pct_relevant = 0.0;
  double pct_nonrelevant = 0.0;
  std::size_t n_judged = 0;    // parseable verdicts
  std::size_t n_failures = 0;  // parse + backend failures

  bool operator==(const Proportions&) const = default;
};

/// Percentages over parseable verdicts. Throws kEmptyRun when there are
/// none.
Proportions label_proportions(const RunResult& run);

/// Fraction of shared, parseable documents with equal labels. Throws
/// kUndefinedComparison when the runs share none.
double pairwise_agreement(const RunResult& a, const RunResult& b);

/// Cohen's kappa over the shared, parseable documents. nullopt is the
/// degenerate marker: chance agreement is 1 (both raters constant on the
/// same label). Throws kUndefinedComparison when the runs share none.
std::optional<double> cohen_kappa(const RunResult& a, const RunResult& b);

/// Label-vector forms of the two statistics above.
double agreement_rate(std::span<const Label> a, std::span<const Label> b);
std::optional<double> cohen_kappa(std::span<const Label> a, std::span<const Label> b);

/// Region counts for three sets, indexed by membership mask
/// (bit 0 = A, bit 1 = B, bit 2 = C); index 0 is "in none".
struct VennPartition {
  std::array<std::string, 3> models;
  std::array<std::size_t, 8> regions{};
  std::size_t universe = 0;

  std::size_t only_a() const { return regions[0b001]; }
  std::size_t only_b() const { return regions[0b010]; }
  std::size_t only_c() const { return regions[0b100]; }
  std::size_t ab_only() const { return regions[0b011]; }
  std::size_t ac_only() const { return regions[0b101]; }
  std::size_t bc_only() const { return regions[0b110]; }
  std::size_t abc() const { return regions[0b111]; }
  std::size_t none() const { return regions[0]; }

  /// Sum of the four regions that contain set `m` (0, 1 or 2).
  std::size_t marginal(int m) const;
  bool operator==(const VennPartition&) const = default;
};

/// Human-readable region name for a mask, built from the model ids
/// ("only:phi", "phi+mistral", "phi+mistral+llama", "none").
std::string region_name(const VennPartition& venn, int mask);

/// Universe: documents parseable in all three runs. Throws
/// kUndefinedComparison when it is empty.
VennPartition venn_partition(const RunResult& a, const RunResult& b, const RunResult& c,
                             Label label);

struct RunSummary {
  std::string model_id;
  Proportions proportions;

  bool operator==(const RunSummary&) const = default;
};

struct PairStats {
  double agreement = 0.0;
  std::optional<double> kappa;

  bool operator==(const PairStats&) const = default;
};

struct AgreementReport {
  int goal_number = 0;
  std::vector<RunSummary> runs;
  /// Both (a, b) and (b, a) are present.
  std::map<std::pair<std::string, std::string>, PairStats> pairwise;
  VennPartition venn_relevant;
  VennPartition venn_nonrelevant;

  bool operator==(const AgreementReport&) const = default;
};

/// Exactly three runs on the same goal with distinct model ids (kArity /
/// kValidation otherwise).
AgreementReport build_report(std::span<const RunResult> runs, int goal);

nlohmann::json report_to_json(const AgreementReport& report);
AgreementReport report_from_json(const nlohmann::json& j);

/// Plain-text table of the proportions, one decimal place.
std::string proportions_table(const AgreementReport& report);

/// One decimal place, "C" locale.
std::string one_decimal(double value);

/// report.json, proportions.csv, venn_relevant.csv, venn_nonrelevant.csv,
/// proportions.svg, venn_relevant.svg, venn_nonrelevant.svg. Returns the
/// written paths.
std::vector<std::filesystem::path> emit_report(const AgreementReport& report,
                                               const std::filesystem::path& out_dir);

std::string render_proportions_svg(const AgreementReport& report);
std::string render_venn_svg(const VennPartition& venn, std::string_view title);

}  // namespace sdgjudge::analytics
