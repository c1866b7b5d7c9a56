#include "kvd/loads.hpp"

#include "kvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace kvd {

namespace {

double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw BadSpec("bad number '" + s + "' in time profile");
  }
  if (pos != s.size()) throw BadSpec("bad number '" + s + "' in time profile");
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double TimeProfile::operator()(double t) const {
  switch (kind) {
    case Kind::Constant: return 1.0;
    case Kind::Linear: return t;
    case Kind::Ramp: return std::min(t / param, 1.0);
    case Kind::Sine: return std::sin(param * t);
    case Kind::Table: {
      if (t <= table.front().first) return table.front().second;
      if (t >= table.back().first) return table.back().second;
      auto it = std::upper_bound(table.begin(), table.end(), t,
                                 [](double x, const auto& p) { return x < p.first; });
      const auto& [t1, v1] = *it;
      const auto& [t0, v0] = *(it - 1);
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return 0.0;
}

TimeProfile TimeProfile::parse(const std::string& text) {
  TimeProfile p;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "constant" && rest.empty()) {
    p.kind = Kind::Constant;
  } else if (head == "linear" && rest.empty()) {
    p.kind = Kind::Linear;
  } else if (head == "ramp") {
    p.kind = Kind::Ramp;
    p.param = to_double(rest);
    if (!(p.param > 0.0)) throw BadSpec("ramp time must be positive");
  } else if (head == "sin") {
    p.kind = Kind::Sine;
    p.param = to_double(rest);
  } else if (head == "table") {
    p.kind = Kind::Table;
    std::istringstream in(rest);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto c = item.find(':');
      if (c == std::string::npos) throw BadSpec("table entries are t:v pairs");
      p.table.emplace_back(to_double(item.substr(0, c)), to_double(item.substr(c + 1)));
    }
    if (p.table.empty()) throw BadSpec("empty time table");
    for (std::size_t i = 1; i < p.table.size(); ++i)
      if (!(p.table[i].first > p.table[i - 1].first)) throw BadSpec("time table must be strictly increasing");
  } else {
    throw BadSpec("unknown time profile '" + text + "'");
  }
  return p;
}

std::string TimeProfile::str() const {
  switch (kind) {
    case Kind::Constant: return "constant";
    case Kind::Linear: return "linear";
    case Kind::Ramp: return "ramp:" + fmt17(param);
    case Kind::Sine: return "sin:" + fmt17(param);
    case Kind::Table: {
      std::string s = "table:";
      for (std::size_t i = 0; i < table.size(); ++i) {
        if (i) s += ',';
        s += fmt17(table[i].first) + ":" + fmt17(table[i].second);
      }
      return s;
    }
  }
  return {};
}

VectorField LoadSpec::uniform(const Eigen::Vector2d& value, TimeProfile profile) {
  return [value, profile = std::move(profile)](double t, const Point&) -> Eigen::Vector2d { return value * profile(t); };
}

}  // namespace kvd
