#include "stochproj/json_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace stochproj {

namespace {

using Index = Eigen::Index;

std::string at_index(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

const Json& member(const Json& j, const std::string& field, const char* key) {
  if (!j.is_object()) throw ParseError(field, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(field + "." + key, "missing");
  return *it;
}

const Json* optional_member(const Json& j, const char* key) {
  const auto it = j.find(key);
  return (it == j.end() || it->is_null()) ? nullptr : &*it;
}

const Json& array(const Json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError(field, "expected an array");
  return j;
}

double number(const Json& j, const std::string& field) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ParseError(field, "expected a number");
  return j.get<double>();
}

std::size_t count(const Json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ParseError(field, "expected a non-negative integer");
  return j.get<std::size_t>();
}

bool boolean(const Json& j, const std::string& field) {
  if (!j.is_boolean()) throw ParseError(field, "expected true or false");
  return j.get<bool>();
}

std::string text(const Json& j, const std::string& field) {
  if (!j.is_string()) throw ParseError(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& field) {
  array(j, field);
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at_index(field, i)));
  return out;
}

Point point(const Json& j, const std::string& field) {
  const auto v = numbers(j, field);
  if (v.empty()) throw ParseError(field, "empty point");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

std::vector<Point> points(const Json& j, const std::string& field) {
  array(j, field);
  std::vector<Point> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(point(j[i], at_index(field, i)));
    if (out.back().size() != out.front().size()) throw ParseError(at_index(field, i), "dimension differs from the first point");
  }
  return out;
}

Json point_json(const Point& p) {
  Json a = Json::array();
  for (Index k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

Json points_json(const std::vector<Point>& ps) {
  Json a = Json::array();
  for (const auto& p : ps) a.push_back(point_json(p));
  return a;
}

template <class F>
auto wrap(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ParseError(field, e.what());
  }
}

}  // namespace

Json to_json(const DiscreteMeasure& m) {
  return Json{{"points", points_json(m.points())}, {"weights", m.weights()}};
}

DiscreteMeasure measure_from_json(const Json& j, const std::string& field) {
  auto pts = points(member(j, field, "points"), field + ".points");
  auto w = numbers(member(j, field, "weights"), field + ".weights");
  if (pts.size() != w.size()) throw ParseError(field + ".weights", "length differs from points");
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) throw ParseError(at_index(field + ".weights", i), "weight must be finite and >= 0");
  }
  return wrap(field, [&] { return DiscreteMeasure(std::move(pts), std::move(w), MeasureOptions{0.0, 0.0}); });
}

Json to_json(const Grid& g) {
  return Json{{"lo", g.lo()}, {"hi", g.hi()}, {"n", g.counts()}};
}

Grid grid_from_json(const Json& j, const std::string& field) {
  auto lo = numbers(member(j, field, "lo"), field + ".lo");
  auto hi = numbers(member(j, field, "hi"), field + ".hi");
  const Json& nj = array(member(j, field, "n"), field + ".n");
  std::vector<std::size_t> n;
  for (std::size_t i = 0; i < nj.size(); ++i) n.push_back(count(nj[i], at_index(field + ".n", i)));
  return wrap(field, [&] { return Grid(std::move(lo), std::move(hi), std::move(n)); });
}

Json to_json(const GridFunction& f) {
  return Json{{"grid", to_json(f.grid)}, {"values", f.values}};
}

GridFunction grid_function_from_json(const Json& j, const std::string& field) {
  Grid g = grid_from_json(member(j, field, "grid"), field + ".grid");
  auto v = numbers(member(j, field, "values"), field + ".values");
  if (v.size() != g.size()) throw ParseError(field + ".values", "expected one value per grid node");
  return wrap(field, [&] { return GridFunction(std::move(g), std::move(v)); });
}

Json to_json(const Coupling& pi) {
  Json entries = Json::array();
  for (Index i = 0; i < pi.mass.rows(); ++i) {
    for (Index k = 0; k < pi.mass.cols(); ++k) {
      if (pi.mass(i, k) != 0.0) entries.push_back(Json::array({i, k, pi.mass(i, k)}));
    }
  }
  return Json{{"rows", pi.rows()}, {"cols", pi.cols()}, {"entries", entries}};
}

Coupling coupling_from_json(const Json& j, const std::string& field) {
  const std::size_t rows = count(member(j, field, "rows"), field + ".rows");
  const std::size_t cols = count(member(j, field, "cols"), field + ".cols");
  Coupling pi{Eigen::MatrixXd::Zero(static_cast<Index>(rows), static_cast<Index>(cols))};
  const Json& entries = array(member(j, field, "entries"), field + ".entries");
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const std::string f = at_index(field + ".entries", e);
    const Json& t = array(entries[e], f);
    if (t.size() != 3) throw ParseError(f, "expected [row, col, mass]");
    const std::size_t r = count(t[0], f + "[0]");
    const std::size_t c = count(t[1], f + "[1]");
    if (r >= rows || c >= cols) throw ParseError(f, "index out of range");
    pi.mass(static_cast<Index>(r), static_cast<Index>(c)) = number(t[2], f + "[2]");
  }
  return pi;
}

Json to_json(const AffineMax& f) {
  return Json{{"offsets", f.offsets}, {"slopes", points_json(f.slopes)}};
}

Json to_json(const Separator& s) {
  Json j{{"kind", to_string(s.kind)}, {"gap", s.gap}};
  if (!s.convex_function.empty()) j["convex_function"] = to_json(s.convex_function);
  if (s.grid_function) j["grid_function"] = to_json(*s.grid_function);
  if (!s.table.empty()) {
    Json t = Json::array();
    for (const auto& [x, v] : s.table) t.push_back(Json{{"point", point_json(x)}, {"value", v}});
    j["table"] = t;
  }
  return j;
}

Json to_json(const OrderCertificate& c) {
  Json j{{"holds", c.holds}, {"kind", to_string(c.kind)}};
  if (c.martingale) j["martingale"] = to_json(*c.martingale);
  if (c.laplacian_mass) j["laplacian_mass"] = *c.laplacian_mass;
  if (c.separator) j["separator"] = to_json(*c.separator);
  return j;
}

namespace {

OrderCertificate certificate_from_json(const Json& j, const std::string& field) {
  OrderCertificate c;
  c.holds = boolean(member(j, field, "holds"), field + ".holds");
  c.kind = wrap(field + ".kind", [&] { return parse_order_kind(text(member(j, field, "kind"), field + ".kind")); });
  if (const Json* m = optional_member(j, "martingale")) c.martingale = coupling_from_json(*m, field + ".martingale");
  if (const Json* m = optional_member(j, "laplacian_mass")) c.laplacian_mass = numbers(*m, field + ".laplacian_mass");
  return c;
}

}  // namespace

Json to_json(const DualCertificate& d) {
  Json j{{"direction", to_string(d.direction)},
         {"order", to_string(d.order)},
         {"nodes", points_json(d.nodes)},
         {"potential", d.potential},
         {"transformed", d.transformed},
         {"dual_value", d.dual_value},
         {"lp_value", d.lp_value},
         {"anchor", d.anchor},
         {"anchor_value", d.anchor_value},
         {"instance_hash", d.instance_hash}};
  if (d.grid) j["grid"] = to_json(*d.grid);
  if (!d.planes.empty()) j["planes"] = to_json(d.planes);
  return j;
}

DualCertificate dual_from_json(const Json& j, const std::string& field) {
  DualCertificate d;
  d.direction = wrap(field + ".direction", [&] { return parse_direction(text(member(j, field, "direction"), field + ".direction")); });
  d.order = wrap(field + ".order", [&] { return parse_order_kind(text(member(j, field, "order"), field + ".order")); });
  d.nodes = points(member(j, field, "nodes"), field + ".nodes");
  d.potential = numbers(member(j, field, "potential"), field + ".potential");
  d.transformed = numbers(member(j, field, "transformed"), field + ".transformed");
  d.dual_value = number(member(j, field, "dual_value"), field + ".dual_value");
  d.lp_value = number(member(j, field, "lp_value"), field + ".lp_value");
  d.anchor = count(member(j, field, "anchor"), field + ".anchor");
  d.anchor_value = number(member(j, field, "anchor_value"), field + ".anchor_value");
  d.instance_hash = count(member(j, field, "instance_hash"), field + ".instance_hash");
  if (const Json* g = optional_member(j, "grid")) {
    d.grid = grid_from_json(*g, field + ".grid");
    if (d.potential.size() != d.grid->size()) throw ParseError(field + ".potential", "expected one value per grid node");
  }
  if (const Json* p = optional_member(j, "planes")) {
    const std::string f = field + ".planes";
    d.planes.offsets = numbers(member(*p, f, "offsets"), f + ".offsets");
    d.planes.slopes = points(member(*p, f, "slopes"), f + ".slopes");
    if (d.planes.offsets.size() != d.planes.slopes.size()) throw ParseError(f + ".slopes", "length differs from offsets");
  }
  return d;
}

Json to_json(const ProjectionResult& r) {
  Json j{{"direction", to_string(r.direction)},
         {"order", to_string(r.order)},
         {"source", to_json(r.source)},
         {"vertex", to_json(r.vertex)},
         {"projection", to_json(r.projection)},
         {"coupling", to_json(r.coupling)},
         {"cost", r.cost},
         {"gap", r.duality_gap},
         {"certificate", to_json(r.order_certificate)},
         {"iterations", r.iterations},
         {"fw_gap", r.fw_gap},
         {"instance_hash", r.instance_hash}};
  if (r.cone_coupling) j["cone_coupling"] = to_json(*r.cone_coupling);
  if (r.laplacian_mass) j["laplacian_mass"] = *r.laplacian_mass;
  if (r.dual) j["dual"] = to_json(*r.dual);
  if (r.grid) j["grid"] = to_json(*r.grid);
  if (!r.candidate_support.empty()) j["candidate_support"] = points_json(r.candidate_support);
  return j;
}

ProjectionResult projection_from_json(const Json& j, const std::string& field) {
  ProjectionResult r{
      .direction = wrap(field + ".direction",
                        [&] { return parse_direction(text(member(j, field, "direction"), field + ".direction")); }),
      .order = wrap(field + ".order",
                    [&] { return parse_order_kind(text(member(j, field, "order"), field + ".order")); }),
      .source = measure_from_json(member(j, field, "source"), field + ".source"),
      .vertex = measure_from_json(member(j, field, "vertex"), field + ".vertex"),
      .projection = measure_from_json(member(j, field, "projection"), field + ".projection"),
      .coupling = coupling_from_json(member(j, field, "coupling"), field + ".coupling")};
  const std::size_t rows = r.direction == Direction::backward ? r.source.size() : r.projection.size();
  const std::size_t cols = r.direction == Direction::backward ? r.projection.size() : r.source.size();
  if (r.coupling.rows() != rows || r.coupling.cols() != cols) {
    throw ParseError(field + ".coupling", "shape does not match the measures");
  }
  r.cost = number(member(j, field, "cost"), field + ".cost");
  if (const Json* g = optional_member(j, "gap")) r.duality_gap = number(*g, field + ".gap");
  if (const Json* c = optional_member(j, "certificate")) r.order_certificate = certificate_from_json(*c, field + ".certificate");
  if (const Json* c = optional_member(j, "cone_coupling")) r.cone_coupling = coupling_from_json(*c, field + ".cone_coupling");
  if (const Json* m = optional_member(j, "laplacian_mass")) r.laplacian_mass = numbers(*m, field + ".laplacian_mass");
  if (const Json* d = optional_member(j, "dual")) r.dual = dual_from_json(*d, field + ".dual");
  if (const Json* g = optional_member(j, "grid")) r.grid = grid_from_json(*g, field + ".grid");
  if (const Json* c = optional_member(j, "candidate_support")) r.candidate_support = points(*c, field + ".candidate_support");
  if (const Json* v = optional_member(j, "iterations")) r.iterations = count(*v, field + ".iterations");
  if (const Json* v = optional_member(j, "fw_gap")) r.fw_gap = number(*v, field + ".fw_gap");
  if (const Json* v = optional_member(j, "instance_hash")) r.instance_hash = count(*v, field + ".instance_hash");
  return r;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path, std::string("invalid JSON (") + e.what() + ")");
  }
}

std::string dump(const Json& j) {
  return j.dump(2) + "\n";
}

void write_coupling_csv(std::ostream& os, const Coupling& pi) {
  std::ostringstream line;
  line.precision(17);
  os << "row,col,mass\n";
  for (Index i = 0; i < pi.mass.rows(); ++i) {
    for (Index k = 0; k < pi.mass.cols(); ++k) {
      if (pi.mass(i, k) == 0.0) continue;
      line.str("");
      line << i << ',' << k << ',' << pi.mass(i, k) << '\n';
      os << line.str();
    }
  }
}

}  // namespace stochproj
