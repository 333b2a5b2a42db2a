#include "otlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace otlab {

DomainPtr make_domain(DomainKind kind, const std::vector<double>& p, int n1, int n2) {
  switch (kind) {
    case DomainKind::interval:
      require(p.size() == 2, ErrorCode::config_error, "interval needs 2 params");
      return Domain::interval(p[0], p[1], n1);
    case DomainKind::disk:
      require(p.size() == 3, ErrorCode::config_error, "disk needs 3 params");
      return Domain::disk({p[0], p[1]}, p[2], n1, n2);
    case DomainKind::ellipse:
      require(p.size() == 4, ErrorCode::config_error, "ellipse needs 4 params");
      return Domain::ellipse({p[0], p[1]}, p[2], p[3], n1, n2);
    case DomainKind::rectangle:
      require(p.size() == 4, ErrorCode::config_error, "rectangle needs 4 params");
      return Domain::rectangle(p[0], p[1], p[2], p[3], n1, n2);
  }
  fail(ErrorCode::config_error, "bad domain kind");
}

namespace {

struct Parsed {
  bool is_density = false;
  DomainPtr dom;
  std::vector<double> values;
  double floor = 0.0;
};

Parsed parse_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open '" + path + "'");
  Parsed out;
  std::string magic;
  int version = 0;
  in >> magic >> version;
  require(version == 1 && (magic == "otlab-density" || magic == "otlab-field"),
          ErrorCode::io_error, "'" + path + "' is not an otlab density/field file");
  out.is_density = magic == "otlab-density";
  std::string key, kind_name;
  std::vector<double> params;
  int n1 = 0, n2 = 0;
  while (in >> key) {
    if (key == "kind") {
      in >> kind_name;
    } else if (key == "params") {
      DomainKind k = domain_kind_from_name(kind_name);
      int want = k == DomainKind::interval ? 2 : (k == DomainKind::disk ? 3 : 4);
      params.resize(want);
      for (double& x : params) in >> x;
    } else if (key == "grid") {
      in >> n1;
      DomainKind k = domain_kind_from_name(kind_name);
      if (k != DomainKind::interval) in >> n2;
    } else if (key == "floor") {
      in >> out.floor;
    } else if (key == "values") {
      break;
    } else {
      fail(ErrorCode::io_error, "unknown key '" + key + "' in '" + path + "'");
    }
  }
  require(!kind_name.empty() && n1 > 0, ErrorCode::io_error,
          "'" + path + "' is missing kind/grid headers");
  out.dom = make_domain(domain_kind_from_name(kind_name), params, n1, n2);
  int n = out.dom->mesh().cell_count();
  out.values.resize(n);
  for (int i = 0; i < n; ++i) {
    require(bool(in >> out.values[i]), ErrorCode::io_error,
            "'" + path + "': expected " + std::to_string(n) + " values");
  }
  return out;
}

void write_file(const char* magic, const DomainPtr& dom, const std::vector<double>& values,
                double floor, bool with_floor, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write '" + path + "'");
  out << magic << " 1\n";
  out << "kind " << domain_kind_name(dom->kind()) << "\n";
  out << "params";
  char buf[64];
  for (double p : dom->params()) {
    std::snprintf(buf, sizeof buf, " %.17g", p);
    out << buf;
  }
  out << "\n";
  out << "grid " << dom->mesh().n1;
  if (dom->dim() == 2) out << " " << dom->mesh().n2;
  out << "\n";
  if (with_floor) {
    std::snprintf(buf, sizeof buf, "%.17g", floor);
    out << "floor " << buf << "\n";
  }
  out << "values\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    out << buf << ((i + 1) % 8 == 0 ? "\n" : " ");
  }
  out << "\n";
  require(out.good(), ErrorCode::io_error, "short write to '" + path + "'");
}

}  // namespace

DensityGrid load_density(const std::string& path) {
  Parsed p = parse_file(path);
  require(p.is_density, ErrorCode::io_error, "'" + path + "' holds a field, not a density");
  return DensityGrid(p.dom, std::move(p.values), p.floor);
}

void save_density(const DensityGrid& g, const std::string& path) {
  write_file("otlab-density", g.domain(), g.values(), g.floor(), true, path);
}

ScalarField load_field(const std::string& path) {
  Parsed p = parse_file(path);
  return ScalarField(p.dom, std::move(p.values));
}

void save_field(const ScalarField& f, const std::string& path) {
  write_file("otlab-field", f.dom, f.v, 0.0, false, path);
}

}  // namespace otlab
