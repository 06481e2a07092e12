#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diffusim/diagnostics.hpp"

namespace diffusim {

/// Writes `t,value,label` rows with 17 significant digits. Labels may not
/// contain commas, quotes or line breaks.
void emit_series(const DecaySeries& series, const std::string& path);
void emit_series(const DecaySeries& series, std::ostream& out);

/// Inverse of emit_series; every row must carry the same label.
DecaySeries read_series(const std::string& path);
DecaySeries read_series(std::istream& in, const std::string& source = "<stream>");

/// Shortest round-trip decimal form used by every CSV the harness writes.
std::string format_double(double value);

enum class Comparison {
  AbsWithin,  ///< |measured - predicted| <= tolerance
  AtMost,     ///< measured <= predicted + tolerance
  AtLeast,    ///< measured >= predicted + tolerance
  Band,       ///< predicted - lower_slack <= measured <= predicted + tolerance
};

struct VerificationRecord {
  std::string experiment;
  std::string claim_id;
  std::string claim;
  double predicted = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::AbsWithin;
  double lower_slack = 0.0;  ///< only for Band
  bool pass = false;
  std::optional<FitResult> fit;
  std::string note;

  /// Sets pass from the comparison; a non-finite measurement never passes.
  void evaluate();
  /// Marks the record failed with a reason, measured becomes NaN.
  void fail_with(const std::string& reason);

  std::string criterion() const;
};

struct VerificationReport {
  std::string scenario;
  std::vector<VerificationRecord> records;

  bool all_pass() const;
  std::size_t failures() const;

  void write_table(std::ostream& out) const;
  void write_csv(std::ostream& out) const;
};

}  // namespace diffusim
