#ifndef OTCONC_CSV_HPP_
#define OTCONC_CSV_HPP_

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otconc/harness.hpp"

namespace otconc {

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline constexpr const char* kCurveHeader =
    "dist,params,cost,p,a,N,trials,mean,stderr,seed";
inline constexpr const char* kTailHeader =
    "dist,params,cost,p,a,N,x,phat,ci_lo,ci_hi,trials,seed";

inline std::string curve_csv(const CurveTable& t) {
  std::ostringstream os;
  os << kCurveHeader << '\n';
  for (const auto& r : t.rows) {
    os << t.dist_name << ',' << t.params << ',' << t.cost_name << ','
       << fmt_real(t.p) << ',' << fmt_real(t.a) << ',' << r.N << ','
       << r.trials << ',' << fmt_real(r.mean) << ',' << fmt_real(r.stderr_)
       << ',' << t.seed << '\n';
  }
  return os.str();
}

inline std::string tail_csv(const TailTable& t) {
  std::ostringstream os;
  os << kTailHeader << '\n';
  for (const auto& r : t.rows) {
    os << t.dist_name << ',' << t.params << ',' << t.cost_name << ','
       << fmt_real(t.p) << ',' << fmt_real(t.a) << ',' << r.N << ','
       << fmt_real(r.x) << ',' << fmt_real(r.phat) << ','
       << fmt_real(r.ci_lo) << ',' << fmt_real(r.ci_hi) << ',' << r.trials
       << ',' << t.seed << '\n';
  }
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Parses the curve schema back into a table (used by the slope command).
inline CurveTable parse_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("curve csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCurveHeader)
    throw std::invalid_argument("curve csv: unexpected header: " + line);
  CurveTable t;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10)
      throw std::invalid_argument("curve csv: bad row: " + line);
    if (first) {
      t.dist_name = f[0];
      t.params = f[1];
      t.cost_name = f[2];
      t.p = std::stod(f[3]);
      t.a = std::stod(f[4]);
      t.seed = std::stoull(f[9]);
      first = false;
    }
    CurveTable::Row r;
    r.N = std::stoull(f[5]);
    r.trials = std::stoull(f[6]);
    r.mean = std::stod(f[7]);
    r.stderr_ = std::stod(f[8]);
    t.rows.push_back(r);
  }
  return t;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace otconc

#endif  // OTCONC_CSV_HPP_
