#pragma once

#include <string>

#include "otlab/measures.hpp"

namespace otlab {

// Structured text format shared by densities and plain fields:
//   otlab-density 1          (or otlab-field 1)
//   kind interval            (interval | disk | ellipse | rectangle)
//   params 0 1               (endpoints, or center/radii, or box corners)
//   grid 2000                (cells; two integers in 2D)
//   floor 0.2                (densities only, optional)
//   values
//   <whitespace separated node values, row-major>

DensityGrid load_density(const std::string& path);
void save_density(const DensityGrid& g, const std::string& path);

ScalarField load_field(const std::string& path);
void save_field(const ScalarField& f, const std::string& path);

DomainPtr make_domain(DomainKind kind, const std::vector<double>& params, int n1, int n2);

}  // namespace otlab
