#include "diffusim/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace diffusim {

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

const char* comparison_name(Comparison c) {
  switch (c) {
    case Comparison::AbsWithin:
      return "abs-within";
    case Comparison::AtMost:
      return "at-most";
    case Comparison::AtLeast:
      return "at-least";
    case Comparison::Band:
      return "band";
  }
  return "?";
}

}  // namespace

std::string format_double(double value) {
  std::ostringstream os;
  os << std::setprecision(17) << value;
  return os.str();
}

void emit_series(const DecaySeries& series, std::ostream& out) {
  if (series.label().find_first_of(",\"\r\n") != std::string::npos) {
    throw std::invalid_argument("series label '" + series.label() +
                                "' contains a CSV delimiter");
  }
  out << "t,value,label\n";
  for (const auto& s : series.samples()) {
    out << format_double(s.t) << ',' << format_double(s.value) << ',' << series.label() << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing series '" + series.label() + "'");
  }
}

void emit_series(const DecaySeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  emit_series(series, out);
  out.close();
  if (!out) {
    throw std::runtime_error("failed writing " + path);
  }
}

DecaySeries read_series(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line) || line != "t,value,label") {
    throw std::runtime_error(source + ": missing 't,value,label' header");
  }
  DecaySeries series;
  bool labelled = false;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) {
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw std::runtime_error(source + ":" + std::to_string(row) + ": expected three fields");
    }
    const std::string label = line.substr(c2 + 1);
    if (!labelled) {
      series = DecaySeries(label);
      labelled = true;
    } else if (label != series.label()) {
      throw std::runtime_error(source + ":" + std::to_string(row) + ": mixed series labels");
    }
    auto parse = [&](std::size_t from, std::size_t to) {
      double v = 0.0;
      const char* first = line.data() + from;
      const char* last = line.data() + to;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) {
        throw std::runtime_error(source + ":" + std::to_string(row) + ": bad number");
      }
      return v;
    };
    series.add(parse(0, c1), parse(c1 + 1, c2));
  }
  return series;
}

DecaySeries read_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  return read_series(in, path);
}

void VerificationRecord::evaluate() {
  if (!std::isfinite(measured)) {
    pass = false;
    return;
  }
  switch (comparison) {
    case Comparison::AbsWithin:
      pass = std::abs(measured - predicted) <= tolerance;
      break;
    case Comparison::AtMost:
      pass = measured <= predicted + tolerance;
      break;
    case Comparison::AtLeast:
      pass = measured >= predicted + tolerance;
      break;
    case Comparison::Band:
      pass = measured >= predicted - lower_slack && measured <= predicted + tolerance;
      break;
  }
}

void VerificationRecord::fail_with(const std::string& reason) {
  measured = std::numeric_limits<double>::quiet_NaN();
  pass = false;
  fit.reset();
  note = reason;
}

std::string VerificationRecord::criterion() const {
  std::ostringstream os;
  os << std::setprecision(6);
  switch (comparison) {
    case Comparison::AbsWithin:
      os << "|m - " << predicted << "| <= " << tolerance;
      break;
    case Comparison::AtMost:
      os << "m <= " << predicted + tolerance;
      break;
    case Comparison::AtLeast:
      os << "m >= " << predicted + tolerance;
      break;
    case Comparison::Band:
      os << predicted - lower_slack << " <= m <= " << predicted + tolerance;
      break;
  }
  return os.str();
}

bool VerificationReport::all_pass() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
  std::size_t n = 0;
  for (const auto& r : records) {
    n += r.pass ? 0 : 1;
  }
  return n;
}

void VerificationReport::write_table(std::ostream& out) const {
  out << "scenario: " << scenario << '\n';
  if (records.empty()) {
    out << "(no experiments requested)\n";
    return;
  }
  std::size_t w_id = 8;
  for (const auto& r : records) {
    w_id = std::max(w_id, r.claim_id.size());
  }
  auto num = [](double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
  };
  out << std::left << std::setw(static_cast<int>(w_id) + 2) << "claim" << std::setw(14)
      << "predicted" << std::setw(14) << "measured" << std::setw(28) << "criterion"
      << "result\n";
  for (const auto& r : records) {
    out << std::left << std::setw(static_cast<int>(w_id) + 2) << r.claim_id << std::setw(14)
        << num(r.predicted) << std::setw(14) << num(r.measured) << std::setw(28) << r.criterion()
        << (r.pass ? "PASS" : "FAIL") << '\n';
    out << "    " << r.claim;
    if (r.fit) {
      out << " [fit over " << num(r.fit->t_lo) << ".." << num(r.fit->t_hi) << ", "
          << r.fit->n_samples << " samples, r^2 " << num(r.fit->r_squared) << "]";
    }
    if (!r.note.empty()) {
      out << " (" << r.note << ")";
    }
    out << '\n';
  }
  out << records.size() - failures() << '/' << records.size() << " claims pass\n";
}

void VerificationReport::write_csv(std::ostream& out) const {
  out << "experiment,claim_id,claim,predicted,measured,tolerance,comparison,lower_slack,pass,"
         "fit_slope,fit_r_squared,fit_t_lo,fit_t_hi,fit_samples,note\n";
  for (const auto& r : records) {
    out << r.experiment << ',' << r.claim_id << ',' << csv_quote(r.claim) << ','
        << format_double(r.predicted) << ',' << format_double(r.measured) << ','
        << format_double(r.tolerance) << ',' << comparison_name(r.comparison) << ','
        << format_double(r.lower_slack) << ',' << (r.pass ? "pass" : "fail") << ',';
    if (r.fit) {
      out << format_double(r.fit->slope) << ',' << format_double(r.fit->r_squared) << ','
          << format_double(r.fit->t_lo) << ',' << format_double(r.fit->t_hi) << ','
          << r.fit->n_samples;
    } else {
      out << ",,,,";
    }
    out << ',' << csv_quote(r.note) << '\n';
  }
}

}  // namespace diffusim
