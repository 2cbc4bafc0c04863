#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "stochproj/errors.hpp"
#include "stochproj/json_io.hpp"
#include "stochproj/projection.hpp"
#include "stochproj/suite.hpp"

namespace py = pybind11;
using namespace stochproj;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

DiscreteMeasure measure_of(const RowMatrix& points, const std::vector<double>& weights) {
  std::vector<Point> p;
  p.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) p.push_back(points.row(i).transpose());
  return DiscreteMeasure(std::move(p), weights);
}

RowMatrix points_of(const DiscreteMeasure& m) {
  RowMatrix out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t i = 0; i < m.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.point(i).transpose();
  return out;
}

std::string project(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const std::string& direction,
                    const std::string& order, const std::optional<Grid>& grid, bool canonical) {
  const Direction dir = parse_direction(direction);
  const OrderKind kind = parse_order_kind(order);
  OrderSpec spec = kind == OrderKind::convex ? OrderSpec::convex() : OrderSpec::trivial();
  std::vector<Point> candidates;
  if (kind == OrderKind::subharmonic) {
    if (!grid) throw InvalidArgument("subharmonic projections need a grid");
    spec = OrderSpec::subharmonic(*grid);
  } else if (grid) {
    if (dir == Direction::backward) {
      for (std::size_t k : grid->interior_nodes()) candidates.push_back(grid->node(k));
    } else {
      candidates = grid->nodes();
    }
  }
  const bool back = dir == Direction::backward;
  const ProjectionProblem p{dir, spec, back ? mu : nu, back ? nu : mu, std::move(candidates)};
  ProjectionOptions opts;
  opts.canonical = canonical;
  return dump(to_json(solve_projection(p, opts)));
}

std::string check(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const std::string& kind,
                  const std::optional<Grid>& grid) {
  OrderSpec spec;
  switch (parse_order_kind(kind)) {
    case OrderKind::convex: spec = OrderSpec::convex(); break;
    case OrderKind::trivial: spec = OrderSpec::trivial(); break;
    case OrderKind::subharmonic:
      if (!grid) throw InvalidArgument("the subharmonic order needs a grid");
      spec = OrderSpec::subharmonic(*grid);
      break;
  }
  return dump(to_json(check_order(mu, nu, spec)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Projections of discrete measures onto stochastic-order cones";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<DiscreteMeasure>(m, "Measure")
      .def(py::init(&measure_of), py::arg("points"), py::arg("weights"))
      .def_static("dirac", [](const Point& x) { return DiscreteMeasure::dirac(x); })
      .def_property_readonly("points", &points_of)
      .def_property_readonly("weights", &DiscreteMeasure::weights)
      .def_property_readonly("dim", &DiscreteMeasure::dim)
      .def("__len__", &DiscreteMeasure::size)
      .def("mean", [](const DiscreteMeasure& mu) { return Point(mean(mu)); })
      .def("moment", &moment, py::arg("k"))
      .def("to_json", [](const DiscreteMeasure& mu) { return dump(to_json(mu)); })
      .def("__repr__", [](const DiscreteMeasure& mu) {
        std::ostringstream os;
        os << "Measure(atoms=" << mu.size() << ", dim=" << mu.dim() << ")";
        return os.str();
      });

  py::class_<Grid>(m, "Grid")
      .def(py::init<std::vector<double>, std::vector<double>, std::vector<std::size_t>>(), py::arg("lo"),
           py::arg("hi"), py::arg("n"))
      .def_static("uniform", &Grid::uniform, py::arg("dim"), py::arg("lo"), py::arg("hi"), py::arg("n"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("counts", &Grid::counts)
      .def_property_readonly("spacings", &Grid::spacings)
      .def("__len__", &Grid::size)
      .def("nodes", [](const Grid& g) {
        RowMatrix out(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.dim()));
        for (std::size_t k = 0; k < g.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = g.node(k).transpose();
        return out;
      });

  m.def("w2_squared", [](const DiscreteMeasure& a, const DiscreteMeasure& b) {
    auto r = w2_squared(a, b);
    return py::make_tuple(r.cost, Eigen::MatrixXd(r.coupling.mass));
  });

  m.def("check_order_json", &check, py::arg("mu"), py::arg("nu"), py::arg("kind") = "convex",
        py::arg("grid") = std::nullopt);
  m.def("project_json", &project, py::arg("mu"), py::arg("nu"), py::arg("direction") = "backward",
        py::arg("order") = "convex", py::arg("grid") = std::nullopt, py::arg("canonical") = false);

  m.def("transform", [](const Grid& g, const std::vector<double>& values, const std::string& op) {
    const GridFunction f(g, values);
    if (op == "legendre") return legendre(f, g).values;
    if (op == "q2") return q2(f, g).values;
    if (op == "q2bar") return q2bar(f, g).values;
    if (op == "q2e") return q2e(f, g).values;
    if (op == "envelope") return subharmonic_envelope(f).values;
    throw InvalidArgument("unknown transform '" + op + "'");
  }, py::arg("grid"), py::arg("values"), py::arg("op"));

  m.def("suite_csv", [](std::uint64_t seed, std::size_t pairs, std::size_t projections, std::size_t transforms) {
    SuiteConfig c;
    c.seed = seed;
    c.order_pairs = pairs;
    c.projections = projections;
    c.transforms = transforms;
    std::ostringstream os;
    write_suite_csv(os, run_suite(c));
    return os.str();
  }, py::arg("seed") = 42, py::arg("pairs") = 100, py::arg("projections") = 20, py::arg("transforms") = 50);
}
