/*
 * Copyright 2026 The gridmarket Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Case-file grammar (whitespace-separated tokens, '#' starts a comment):
//
//   case <name>            header keys come before any [section]
//   periods <T>            default 1
//   hub <bus>              PTDF reference bus, default: first bus
//   scheme expost|exante   default expost
//
//   [buses]                <id> load|hyperscaler|mdc|transit
//   [lines]                <id> <from> <to> <reactance> <limit>
//   [generators]           <id> <bus> <c0> <c1> <capacity> <emission>
//   [demand]               mode fixed|curves, then
//                            fixed:  elasticity <e>  and  load <bus> v...
//                            curves: curve <bus> <t> <b0> <b1>
//   [hyperscaler]          bus <b>, delta <v>, nu <v>, batch <id> <load>
//   [mdc]                  bus <b>, capacity <v>, batches <id...>,
//                          endowment <unit> v...      (section repeats)
//   [forward]              fraction <v>
//   [solver]               maxpivots <n>, pivottolerance <v>,
//                          complementaritytolerance <v>, parallel on|off,
//                          equilibrate on|off
//
// Value lists (load, endowment) take one value, broadcast to every period,
// or exactly one value per period.  Buses must be declared before they are
// referenced; unknown keys are rejected.

#include "gridmarket/case_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "gridmarket/aux_dispatch.hpp"

namespace gridmarket {

namespace {

std::string locate(const std::string& path, int line, int column,
                   const std::string& message) {
  std::ostringstream os;
  os << path << ":" << line << ":" << column << ": " << message;
  return os.str();
}

struct Token {
  std::string text;
  int column = 0;  // 1-based start of the token in its source line
};

/// Strip the '#' comment and split on blanks, keeping source columns.
std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  size_t end = line.find('#');
  if (end == std::string::npos) end = line.size();
  size_t i = 0;
  while (i < end) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < end && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

enum class Section {
  Header,
  Buses,
  Lines,
  Generators,
  Demand,
  Hyperscaler,
  Mdc,
  Forward,
  Solver,
};

class CaseParser {
 public:
  CaseParser(std::istream& in, std::string path)
      : in_(in), path_(std::move(path)) {}

  MarketCase run() {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++lineNo_;
      std::vector<Token> tok = tokenize(raw);
      if (tok.empty()) continue;
      if (tok.front().text.front() == '[') {
        enterSection(tok);
      } else {
        dispatch(tok);
      }
    }
    finish();
    return std::move(c_);
  }

 private:
  [[noreturn]] void fail(int column, const std::string& message) const {
    throw ParseError(path_, lineNo_, column, message);
  }

  void wantFields(const std::vector<Token>& tok, size_t n,
                  const std::string& syntax) const {
    if (tok.size() != n)
      fail(tok.front().column, "expected `" + syntax + "`");
  }

  double number(const Token& t) const {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size())
      fail(t.column, "expected a number, got '" + t.text + "'");
    return v;
  }

  int integer(const Token& t) const {
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(t.text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.text.size())
      fail(t.column, "expected an integer, got '" + t.text + "'");
    return v;
  }

  bool onOff(const Token& t) const {
    if (t.text == "on") return true;
    if (t.text == "off") return false;
    fail(t.column, "expected on or off, got '" + t.text + "'");
  }

  int busRef(const Token& t) const {
    int idx = c_.busIndex(t.text);
    if (idx < 0)
      fail(t.column, "unknown bus '" + t.text +
                         "' (buses must be declared before use)");
    return idx;
  }

  /// One value broadcast across periods, or one value per period.
  std::vector<double> valueSeries(const std::vector<Token>& tok,
                                  size_t first) const {
    const size_t count = tok.size() - first;
    if (count != 1 && count != static_cast<size_t>(c_.periods))
      fail(tok[first - 1].column,
           "expected 1 or " + std::to_string(c_.periods) + " values, got " +
               std::to_string(count));
    std::vector<double> v(c_.periods);
    for (int t = 0; t < c_.periods; ++t)
      v[t] = number(tok[first + (count == 1 ? 0 : t)]);
    return v;
  }

  void enterSection(const std::vector<Token>& tok) {
    const Token& t = tok.front();
    if (tok.size() != 1 || t.text.back() != ']')
      fail(t.column, "malformed section header");
    const std::string name = t.text.substr(1, t.text.size() - 2);
    static const std::map<std::string, Section> kSections = {
        {"buses", Section::Buses},       {"lines", Section::Lines},
        {"generators", Section::Generators}, {"demand", Section::Demand},
        {"hyperscaler", Section::Hyperscaler}, {"mdc", Section::Mdc},
        {"forward", Section::Forward},   {"solver", Section::Solver},
    };
    auto it = kSections.find(name);
    if (it == kSections.end()) fail(t.column, "unknown section [" + name + "]");
    section_ = it->second;
    if (section_ == Section::Mdc) {
      c_.mdcs.emplace_back();
      return;  // [mdc] may repeat, one spec per occurrence
    }
    if (!seenSections_.insert(section_).second)
      fail(t.column, "duplicate section [" + name + "]");
    if (section_ == Section::Hyperscaler) c_.hyperscaler.emplace();
    if (section_ == Section::Forward) c_.forwardPolicy.emplace();
  }

  void dispatch(const std::vector<Token>& tok) {
    switch (section_) {
      case Section::Header: header(tok); break;
      case Section::Buses: busRow(tok); break;
      case Section::Lines: lineRow(tok); break;
      case Section::Generators: generatorRow(tok); break;
      case Section::Demand: demandRow(tok); break;
      case Section::Hyperscaler: hyperscalerRow(tok); break;
      case Section::Mdc: mdcRow(tok); break;
      case Section::Forward: forwardRow(tok); break;
      case Section::Solver: solverRow(tok); break;
    }
  }

  void markKey(const Token& key) {
    // One scope per section occurrence; [mdc] scopes are per spec.
    const long scope = section_ == Section::Mdc
                           ? 1000 + static_cast<long>(c_.mdcs.size())
                           : static_cast<long>(section_);
    if (!seenKeys_.insert({scope, key.text}).second)
      fail(key.column, "duplicate key '" + key.text + "'");
  }

  void header(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    markKey(key);
    if (key.text == "case") {
      wantFields(tok, 2, "case <name>");
      c_.name = tok[1].text;
    } else if (key.text == "periods") {
      wantFields(tok, 2, "periods <count>");
      c_.periods = integer(tok[1]);
      if (c_.periods < 1) fail(tok[1].column, "periods must be >= 1");
    } else if (key.text == "hub") {
      wantFields(tok, 2, "hub <bus>");
      hub_ = tok[1];
      hubLine_ = lineNo_;
    } else if (key.text == "scheme") {
      wantFields(tok, 2, "scheme expost|exante");
      if (tok[1].text == "expost")
        c_.scheme = Scheme::ExPost;
      else if (tok[1].text == "exante")
        c_.scheme = Scheme::ExAnte;
      else
        fail(tok[1].column, "scheme must be expost or exante");
    } else {
      fail(key.column, "unknown key '" + key.text + "'");
    }
  }

  void busRow(const std::vector<Token>& tok) {
    wantFields(tok, 2, "<id> load|hyperscaler|mdc|transit");
    Bus b;
    b.id = tok[0].text;
    const std::string& kind = tok[1].text;
    if (kind == "load")
      b.kind = BusKind::ConventionalLoad;
    else if (kind == "hyperscaler")
      b.kind = BusKind::Hyperscaler;
    else if (kind == "mdc")
      b.kind = BusKind::Mdc;
    else if (kind == "transit")
      b.kind = BusKind::Transit;
    else
      fail(tok[1].column, "unknown bus kind '" + kind + "'");
    c_.buses.push_back(std::move(b));
  }

  void lineRow(const std::vector<Token>& tok) {
    wantFields(tok, 5, "<id> <from> <to> <reactance> <limit>");
    Line ln;
    ln.id = tok[0].text;
    ln.fromBus = busRef(tok[1]);
    ln.toBus = busRef(tok[2]);
    ln.reactance = number(tok[3]);
    ln.limit = number(tok[4]);
    c_.lines.push_back(std::move(ln));
  }

  void generatorRow(const std::vector<Token>& tok) {
    wantFields(tok, 6, "<id> <bus> <c0> <c1> <capacity> <emission>");
    Generator g;
    g.id = tok[0].text;
    g.bus = busRef(tok[1]);
    g.c0 = number(tok[2]);
    g.c1 = number(tok[3]);
    g.capacity = number(tok[4]);
    g.emissionRate = number(tok[5]);
    c_.generators.push_back(std::move(g));
  }

  void demandRow(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    if (key.text == "mode") {
      markKey(key);
      wantFields(tok, 2, "mode fixed|curves");
      if (tok[1].text == "fixed")
        fixedMode_ = true;
      else if (tok[1].text == "curves")
        fixedMode_ = false;
      else
        fail(tok[1].column, "demand mode must be fixed or curves");
      return;
    }
    if (!fixedMode_.has_value())
      fail(key.column, "demand rows need a prior `mode` line");
    if (key.text == "elasticity") {
      markKey(key);
      wantFields(tok, 2, "elasticity <value>");
      if (!*fixedMode_)
        fail(key.column, "elasticity applies to fixed demand only");
      elasticity_ = number(tok[1]);
      return;
    }
    if (key.text == "load") {
      if (!*fixedMode_) fail(key.column, "load rows need mode fixed");
      if (tok.size() < 3) fail(key.column, "expected `load <bus> <values...>`");
      const int bus = busRef(tok[1]);
      if (!fixedLoads_.emplace(bus, valueSeries(tok, 2)).second)
        fail(tok[1].column, "duplicate load row for bus '" + tok[1].text + "'");
      for (double v : fixedLoads_[bus])
        if (!(v > 0))
          fail(tok[2].column, "fixed loads must be positive to calibrate");
      return;
    }
    if (key.text == "curve") {
      if (*fixedMode_) fail(key.column, "curve rows need mode curves");
      wantFields(tok, 5, "curve <bus> <period> <b0> <b1>");
      DemandCurve dc;
      dc.bus = busRef(tok[1]);
      dc.period = integer(tok[2]);
      dc.b0 = number(tok[3]);
      dc.b1 = number(tok[4]);
      c_.demandCurves.push_back(dc);
      return;
    }
    fail(key.column, "unknown key '" + key.text + "'");
  }

  void hyperscalerRow(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    HyperscalerSpec& h = *c_.hyperscaler;
    if (key.text == "bus") {
      markKey(key);
      wantFields(tok, 2, "bus <bus>");
      h.bus = busRef(tok[1]);
    } else if (key.text == "delta") {
      markKey(key);
      wantFields(tok, 2, "delta <value>");
      h.delta = number(tok[1]);
    } else if (key.text == "nu") {
      markKey(key);
      wantFields(tok, 2, "nu <value>");
      h.gpuPowerFactor = number(tok[1]);
    } else if (key.text == "batch") {
      wantFields(tok, 3, "batch <id> <load>");
      h.batches.push_back({tok[1].text, number(tok[2])});
    } else {
      fail(key.column, "unknown key '" + key.text + "'");
    }
  }

  void mdcRow(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    MdcSpec& m = c_.mdcs.back();
    if (key.text == "bus") {
      markKey(key);
      wantFields(tok, 2, "bus <bus>");
      m.bus = busRef(tok[1]);
    } else if (key.text == "capacity") {
      markKey(key);
      wantFields(tok, 2, "capacity <value>");
      m.capacity = number(tok[1]);
    } else if (key.text == "batches") {
      markKey(key);
      for (size_t i = 1; i < tok.size(); ++i)
        m.admissibleBatches.push_back(tok[i].text);
    } else if (key.text == "endowment") {
      if (tok.size() < 3)
        fail(key.column, "expected `endowment <unit> <values...>`");
      std::vector<double> series = valueSeries(tok, 2);
      if (!m.curtailedEndowment.emplace(tok[1].text, std::move(series)).second)
        fail(tok[1].column, "duplicate endowment unit '" + tok[1].text + "'");
    } else {
      fail(key.column, "unknown key '" + key.text + "'");
    }
  }

  void forwardRow(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    markKey(key);
    if (key.text == "fraction") {
      wantFields(tok, 2, "fraction <value>");
      c_.forwardPolicy->fraction = number(tok[1]);
    } else {
      fail(key.column, "unknown key '" + key.text + "'");
    }
  }

  void solverRow(const std::vector<Token>& tok) {
    const Token& key = tok.front();
    markKey(key);
    wantFields(tok, 2, key.text + " <value>");
    SolverOverrides& o = c_.solverOverrides;
    if (key.text == "maxpivots")
      o.maxPivots = integer(tok[1]);
    else if (key.text == "pivottolerance")
      o.pivotTolerance = number(tok[1]);
    else if (key.text == "complementaritytolerance")
      o.complementarityTolerance = number(tok[1]);
    else if (key.text == "parallel")
      o.parallel = onOff(tok[1]);
    else if (key.text == "equilibrate")
      o.equilibrate = onOff(tok[1]);
    else
      fail(key.column, "unknown key '" + key.text + "'");
  }

  /// Resolve deferred references, calibrate fixed demand, and validate.
  void finish() {
    if (c_.name.empty())
      throw ParseError(path_, lineNo_, 1, "missing `case <name>` header");
    if (hub_) {
      lineNo_ = hubLine_;
      c_.hubBus = busRef(*hub_);
    }
    if (fixedMode_.value_or(false)) calibrateFixedDemand();
    auto violations = validateCase(c_);
    if (!violations.empty()) {
      std::ostringstream os;
      os << path_ << ": invalid case:";
      for (const std::string& v : violations) os << "\n  - " << v;
      throw CaseError(os.str());
    }
    checkDemandCoverage();
  }

  void calibrateFixedDemand() {
    if (!elasticity_.has_value())
      throw CaseError(path_ + ": fixed demand needs an elasticity");
    for (size_t i = 0; i < c_.buses.size(); ++i) {
      if (c_.buses[i].kind == BusKind::ConventionalLoad &&
          !fixedLoads_.count(static_cast<int>(i)))
        throw CaseError(path_ + ": no fixed load for load bus '" +
                        c_.buses[i].id + "'");
    }
    Eigen::MatrixXd loads =
        Eigen::MatrixXd::Zero(static_cast<int>(c_.buses.size()), c_.periods);
    for (const auto& [bus, series] : fixedLoads_)
      for (int t = 0; t < c_.periods; ++t) loads(bus, t) = series[t];
    try {
      DispatchSolution dispatch = leastCostDispatchDuals(c_, loads);
      std::vector<CalibrationPoint> points;
      for (const auto& [bus, series] : fixedLoads_)
        for (int t = 0; t < c_.periods; ++t)
          points.push_back({bus, t, series[t], dispatch.price(bus, t)});
      c_.demandCurves = calibrateDemand(points, *elasticity_);
    } catch (const DispatchError& e) {
      throw CaseError(path_ + ": demand calibration dispatch failed: " +
                      e.what());
    } catch (const CalibrationError& e) {
      throw CaseError(path_ + ": demand calibration failed: " + e.what());
    }
  }

  /// Every load bus needs a curve for every period, or assembly would
  /// reject the case much later with less context.
  void checkDemandCoverage() const {
    std::set<std::pair<int, int>> have;
    for (const DemandCurve& dc : c_.demandCurves) have.insert({dc.bus, dc.period});
    for (size_t i = 0; i < c_.buses.size(); ++i) {
      if (c_.buses[i].kind != BusKind::ConventionalLoad) continue;
      for (int t = 0; t < c_.periods; ++t)
        if (!have.count({static_cast<int>(i), t}))
          throw CaseError(path_ + ": no demand curve for load bus '" +
                          c_.buses[i].id + "', period " + std::to_string(t));
    }
  }

  std::istream& in_;
  std::string path_;
  int lineNo_ = 0;
  Section section_ = Section::Header;
  std::set<Section> seenSections_;
  std::set<std::pair<long, std::string>> seenKeys_;
  MarketCase c_;
  std::optional<Token> hub_;
  int hubLine_ = 0;
  std::optional<bool> fixedMode_;
  std::optional<double> elasticity_;
  std::map<int, std::vector<double>> fixedLoads_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void requireToken(const std::string& s, const std::string& what) {
  if (s.empty() || tokenize(s).size() != 1 || s.front() == '[' ||
      s.find('#') != std::string::npos)
    throw CaseError("cannot serialize " + what + " '" + s +
                    "': need one plain token");
}

}  // namespace

ParseError::ParseError(const std::string& path, int line, int column,
                       const std::string& message)
    : std::runtime_error(locate(path, line, column, message)),
      line_(line),
      column_(column) {}

MarketCase parseCase(std::istream& in, const std::string& path) {
  return CaseParser(in, path).run();
}

MarketCase loadCase(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open case file");
  return parseCase(in, path);
}

std::string serializeCase(const MarketCase& c) {
  requireToken(c.name, "case name");
  std::ostringstream os;
  os << "case " << c.name << "\n";
  os << "periods " << c.periods << "\n";
  if (c.hubBus >= 0 && c.hubBus < static_cast<int>(c.buses.size()))
    os << "hub " << c.buses[c.hubBus].id << "\n";
  os << "scheme " << (c.scheme == Scheme::ExPost ? "expost" : "exante")
     << "\n";
  auto busId = [&c](int idx) -> const std::string& {
    if (idx < 0 || idx >= static_cast<int>(c.buses.size()))
      throw CaseError("cannot serialize reference to unknown bus index " +
                      std::to_string(idx));
    return c.buses[idx].id;
  };

  os << "\n[buses]\n";
  for (const Bus& b : c.buses) {
    requireToken(b.id, "bus id");
    const char* kind = "transit";
    switch (b.kind) {
      case BusKind::ConventionalLoad: kind = "load"; break;
      case BusKind::Hyperscaler: kind = "hyperscaler"; break;
      case BusKind::Mdc: kind = "mdc"; break;
      case BusKind::Transit: kind = "transit"; break;
    }
    os << b.id << " " << kind << "\n";
  }

  if (!c.lines.empty()) {
    os << "\n[lines]\n";
    for (const Line& ln : c.lines) {
      requireToken(ln.id, "line id");
      os << ln.id << " " << busId(ln.fromBus) << " " << busId(ln.toBus) << " "
         << fmt(ln.reactance) << " " << fmt(ln.limit) << "\n";
    }
  }

  if (!c.generators.empty()) {
    os << "\n[generators]\n";
    for (const Generator& g : c.generators) {
      requireToken(g.id, "generator id");
      os << g.id << " " << busId(g.bus) << " " << fmt(g.c0) << " "
         << fmt(g.c1) << " " << fmt(g.capacity) << " " << fmt(g.emissionRate)
         << "\n";
    }
  }

  if (!c.demandCurves.empty()) {
    os << "\n[demand]\nmode curves\n";
    for (const DemandCurve& dc : c.demandCurves)
      os << "curve " << busId(dc.bus) << " " << dc.period << " "
         << fmt(dc.b0) << " " << fmt(dc.b1) << "\n";
  }

  if (c.hyperscaler) {
    const HyperscalerSpec& h = *c.hyperscaler;
    os << "\n[hyperscaler]\n";
    os << "bus " << busId(h.bus) << "\n";
    os << "delta " << fmt(h.delta) << "\n";
    os << "nu " << fmt(h.gpuPowerFactor) << "\n";
    for (const Batch& b : h.batches) {
      requireToken(b.id, "batch id");
      os << "batch " << b.id << " " << fmt(b.load) << "\n";
    }
  }

  for (const MdcSpec& m : c.mdcs) {
    os << "\n[mdc]\n";
    os << "bus " << busId(m.bus) << "\n";
    os << "capacity " << fmt(m.capacity) << "\n";
    if (!m.admissibleBatches.empty()) {
      os << "batches";
      for (const std::string& b : m.admissibleBatches) os << " " << b;
      os << "\n";
    }
    for (const auto& [unit, series] : m.curtailedEndowment) {
      requireToken(unit, "endowment unit");
      os << "endowment " << unit;
      for (double v : series) os << " " << fmt(v);
      os << "\n";
    }
  }

  if (c.forwardPolicy) {
    os << "\n[forward]\n";
    os << "fraction " << fmt(c.forwardPolicy->fraction) << "\n";
  }

  const SolverOverrides& o = c.solverOverrides;
  if (o.maxPivots || o.pivotTolerance || o.complementarityTolerance ||
      o.parallel || o.equilibrate) {
    os << "\n[solver]\n";
    if (o.maxPivots) os << "maxpivots " << *o.maxPivots << "\n";
    if (o.pivotTolerance)
      os << "pivottolerance " << fmt(*o.pivotTolerance) << "\n";
    if (o.complementarityTolerance)
      os << "complementaritytolerance " << fmt(*o.complementarityTolerance)
         << "\n";
    if (o.parallel) os << "parallel " << (*o.parallel ? "on" : "off") << "\n";
    if (o.equilibrate)
      os << "equilibrate " << (*o.equilibrate ? "on" : "off") << "\n";
  }
  return os.str();
}

void saveCase(const MarketCase& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CaseError("cannot open '" + path + "' for writing");
  out << serializeCase(c);
  if (!out) throw CaseError("failed writing case file '" + path + "'");
}

SolverConfig effectiveSolverConfig(const MarketCase& c,
                                   const SolverConfig& base) {
  SolverConfig cfg = base;
  const SolverOverrides& o = c.solverOverrides;
  if (o.maxPivots) cfg.maxPivots = *o.maxPivots;
  if (o.pivotTolerance) cfg.pivotTolerance = *o.pivotTolerance;
  if (o.complementarityTolerance)
    cfg.complementarityTolerance = *o.complementarityTolerance;
  if (o.parallel) cfg.useParallelKernel = *o.parallel;
  if (o.equilibrate) cfg.equilibrate = *o.equilibrate;
  return cfg;
}

}  // namespace gridmarket
