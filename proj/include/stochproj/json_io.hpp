#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "stochproj/duality.hpp"
#include "stochproj/errors.hpp"
#include "stochproj/measure.hpp"
#include "stochproj/order.hpp"
#include "stochproj/projection.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj {

using Json = nlohmann::json;

/// Malformed JSON document. `field()` is the dotted path of the offending value.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& field, const std::string& message)
      : InvalidArgument(field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Measures: {"points": [[x, ...], ...], "weights": [w, ...]}
Json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const Json& j, const std::string& field = "measure");

// Grids: {"lo": [...], "hi": [...], "n": [...]}
Json to_json(const Grid& g);
Grid grid_from_json(const Json& j, const std::string& field = "grid");

// Grid functions: {"grid": {...}, "values": [...]}, row-major nodes.
Json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const Json& j, const std::string& field = "function");

// Couplings as sparse triplets: {"rows": r, "cols": c, "entries": [[i, j, mass], ...]}
Json to_json(const Coupling& pi);
Coupling coupling_from_json(const Json& j, const std::string& field = "coupling");

Json to_json(const AffineMax& f);
Json to_json(const Separator& s);
Json to_json(const OrderCertificate& c);
Json to_json(const DualCertificate& d);
DualCertificate dual_from_json(const Json& j, const std::string& field = "dual");

Json to_json(const ProjectionResult& r);
ProjectionResult projection_from_json(const Json& j, const std::string& field = "result");

/// Parses a file; syntax errors become ParseError naming the file.
Json read_json_file(const std::string& path);
/// Sorted keys, two-space indent, shortest round-trip float formatting,
/// non-finite numbers written as null. Ends with a newline.
std::string dump(const Json& j);

/// Coupling as CSV lines "row,col,mass" with a header.
void write_coupling_csv(std::ostream& os, const Coupling& pi);

}  // namespace stochproj
