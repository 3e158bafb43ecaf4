#include "morph/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "morph/errors.hpp"

namespace morph {

using nlohmann::json;

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

constexpr const char *kHeatColor = "#f28c28";
constexpr const char *kLineColor = "#333333";

// Maps model coordinates (y up) to SVG coordinates (y down).
struct Canvas {
  BoundingBox box;
  double extent = 1.0;

  explicit Canvas(std::span<const Point2> pts) {
    box = bounding_box(pts);
    extent = std::max(box.max_extent(), 1e-12);
    const double pad = 0.05 * extent;
    box.lo = box.lo - Point2{pad, pad};
    box.hi = box.hi + Point2{pad, pad};
  }

  std::string xy(Point2 p) const { return format_g9(p.x) + "," + format_g9(-p.y); }

  std::string header() const {
    const double w = box.hi.x - box.lo.x;
    const double h = box.hi.y - box.lo.y;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_g9(box.lo.x) << ' '
       << format_g9(-box.hi.y) << ' ' << format_g9(w) << ' ' << format_g9(h)
       << "\" width=\"800\" height=\"" << format_g9(800.0 * h / w) << "\">\n";
    return os.str();
  }

  double line() const { return 0.002 * extent; }
};

std::string ring_path(const Canvas &c, std::span<const Point2> ring) {
  std::string d;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    d += (i == 0 ? "M" : "L") + c.xy(ring[i]) + " ";
  }
  return d + "Z ";
}

std::string fill_color(double rho, double floor) {
  const double t = std::clamp((rho - floor) / (1.0 - floor), 0.0, 1.0);
  const auto mix = [t](int white, int blue) {
    return static_cast<int>(std::lround(white + t * (blue - white)));
  };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 31), mix(255, 86), mix(255, 180));
  return buf;
}

}  // namespace

std::string design_svg(const PowerDiagram &diagram, const FeMesh &mesh,
                       std::span<const double> rho, std::span<const double> eta,
                       const Eigen::VectorXd *u, const SvgStyle &style) {
  const std::size_t n = mesh.num_cells();
  if (!rho.empty() && rho.size() != n) throw InvalidInput("rho has the wrong length");
  if (!eta.empty() && eta.size() != n) throw InvalidInput("eta has the wrong length");
  if (u && u->size() != static_cast<Eigen::Index>(2 * mesh.vertices.size())) {
    throw InvalidInput("displacement has the wrong length");
  }
  std::vector<Point2> pos = mesh.vertices;
  if (u) {
    for (std::size_t v = 0; v < pos.size(); ++v) {
      pos[v].x += style.display_scale * (*u)[2 * v];
      pos[v].y += style.display_scale * (*u)[2 * v + 1];
    }
  }
  std::vector<Point2> all = pos;
  all.insert(all.end(), diagram.domain.vertices.begin(), diagram.domain.vertices.end());
  const Canvas c(all);

  std::ostringstream os;
  os << c.header();
  const double hatch = 0.015 * c.extent;
  os << "<defs><pattern id=\"heat\" patternUnits=\"userSpaceOnUse\" width=\"" << format_g9(hatch)
     << "\" height=\"" << format_g9(hatch) << "\" patternTransform=\"rotate(45)\">"
     << "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"" << format_g9(hatch) << "\" stroke=\""
     << kHeatColor << "\" stroke-width=\"" << format_g9(0.4 * hatch) << "\"/></pattern></defs>\n";

  if (u) {
    os << "<path d=\"" << ring_path(c, diagram.domain.vertices)
       << "\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"" << format_g9(4 * c.line())
       << "\" stroke-width=\"" << format_g9(c.line()) << "\"/>\n";
  }

  std::vector<std::string> cell_paths(n);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto &tri = mesh.triangles[t];
    const Point2 ring[3] = {pos[tri[0]], pos[tri[1]], pos[tri[2]]};
    cell_paths[mesh.tri_cell[t]] += ring_path(c, ring);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cell_paths[i].empty()) continue;
    const std::string color = fill_color(rho.empty() ? 1.0 : rho[i], style.rho_floor);
    os << "<path d=\"" << cell_paths[i] << "\" fill=\"" << color << "\" stroke=\"" << color
       << "\" stroke-width=\"" << format_g9(0.5 * c.line()) << "\"/>\n";
    if (!eta.empty() && eta[i] > 0.5) {
      os << "<path d=\"" << cell_paths[i] << "\" fill=\"url(#heat)\" stroke=\"none\"/>\n";
    }
  }
  if (style.outline_cells) {
    for (std::size_t i = 0; i < n; ++i) {
      std::string d;
      for (const auto &loop : mesh.cell_loops[i]) {
        std::vector<Point2> ring;
        for (int v : loop) ring.push_back(pos[v]);
        d += ring_path(c, ring);
      }
      if (d.empty()) continue;
      os << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << kLineColor
         << "\" stroke-width=\"" << format_g9(c.line()) << "\"/>\n";
    }
  }
  if (style.show_sites) {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = mesh.cell_site_vertex[i];
      const Point2 p = v >= 0 ? pos[v] : diagram.sites[i];
      os << "<circle cx=\"" << format_g9(p.x) << "\" cy=\"" << format_g9(-p.y) << "\" r=\""
         << format_g9(3 * c.line()) << "\" fill=\"" << kLineColor << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string diagram_svg(const PowerDiagram &diagram) {
  const Canvas c(diagram.domain.vertices);
  std::ostringstream os;
  os << c.header();
  os << "<path d=\"" << ring_path(c, diagram.domain.vertices) << "\" fill=\"#f4f4f4\" stroke=\""
     << kLineColor << "\" stroke-width=\"" << format_g9(2 * c.line()) << "\"/>\n";
  for (const PowerCell &cell : diagram.cells) {
    std::string d;
    for (const auto &piece : cell.pieces) d += ring_path(c, piece.vertices);
    if (d.empty()) continue;
    os << "<path d=\"" << d << "\" fill=\"#dbe6f5\" stroke=\"" << kLineColor
       << "\" stroke-width=\"" << format_g9(c.line()) << "\"/>\n";
  }
  for (const Point2 &s : diagram.sites) {
    os << "<circle cx=\"" << format_g9(s.x) << "\" cy=\"" << format_g9(-s.y) << "\" r=\""
       << format_g9(3 * c.line()) << "\" fill=\"" << kLineColor << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_state_csv(std::ostream &os, const ProblemSpec &problem, const FeMesh &mesh,
                     std::size_t state, const Eigen::VectorXd &u) {
  const auto &targets = problem.boundary.states.at(state).targets;
  os << "target,x,y,uT_x,uT_y,usim_x,usim_y\n";
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const TargetPoint &tp = targets[t];
    const int v = mesh.target_nodes.at(state).at(t);
    const std::string name = tp.name.empty() ? "t" + std::to_string(t + 1) : tp.name;
    os << name << ',' << format_g9(tp.point.x) << ',' << format_g9(tp.point.y) << ','
       << format_g9(tp.u_target.x) << ',' << format_g9(tp.u_target.y) << ','
       << format_g9(u[2 * v]) << ',' << format_g9(u[2 * v + 1]) << '\n';
  }
}

void write_convergence_csv(std::ostream &os, std::span<const ConvergenceRow> rows,
                           std::size_t states) {
  os << "iteration,phase,F";
  for (std::size_t j = 1; j <= states; ++j) os << ",J_" << j;
  for (std::size_t j = 1; j <= states; ++j) os << ",C_" << j;
  os << ",R,grad_inf\n";
  for (const ConvergenceRow &r : rows) {
    if (r.pose_errors.size() != states || r.compliances.size() != states) {
      throw InvalidInput("convergence row has the wrong number of states");
    }
    os << r.iteration << ',' << r.phase << ',' << format_g9(r.objective);
    for (double j : r.pose_errors) os << ',' << format_g9(j);
    for (double c : r.compliances) os << ',' << format_g9(c);
    os << ',' << format_g9(r.regularization) << ',' << format_g9(r.gradient_norm) << '\n';
  }
}

DesignRecord make_design_record(const ProblemSpec &problem, const OptimizationResult &r) {
  DesignRecord rec;
  rec.problem = problem;
  rec.design = r.design;
  rec.sites = r.discretization->diagram.sites;
  rec.weights = r.discretization->diagram.weights;
  rec.thresholds = r.thresholds;
  rec.r_max = r.r_max;
  rec.converged = r.converged;
  return rec;
}

json design_to_json(const DesignRecord &rec) {
  json doc;
  doc["format"] = "morph-design";
  doc["version"] = 1;
  doc["problem"] = problem_to_json(rec.problem);
  doc["rho"] = rec.design.rho;
  doc["eta"] = rec.design.eta;
  doc["phi"] = rec.design.phi;
  json sites = json::array();
  for (const Point2 &s : rec.sites) sites.push_back({s.x, s.y});
  doc["sites"] = sites;
  doc["weights"] = rec.weights;
  if (rec.thresholds) {
    doc["thresholds"] = {{"rho", rec.thresholds->rho},
                         {"eta", rec.thresholds->eta},
                         {"sum_pose_error", rec.thresholds->sum_pose_error}};
  }
  doc["r_max"] = rec.r_max;
  doc["converged"] = rec.converged;
  doc["plane_strain"] = rec.problem.material.plane_strain;
  return doc;
}

namespace {

[[noreturn]] void bad(ValidationKind kind, const std::string &path, const std::string &msg) {
  throw ValidationError(kind, path, msg);
}

double number_at(const json &v, const std::string &path) {
  if (!v.is_number()) bad(ValidationKind::kSchema, path, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers_at(const json &doc, const std::string &key, std::size_t expected,
                               const std::string &path) {
  if (!doc.contains(key)) bad(ValidationKind::kSchema, path, "missing required key");
  const json &v = doc[key];
  if (!v.is_array()) bad(ValidationKind::kSchema, path, "expected a list of numbers");
  if (v.size() != expected) {
    bad(ValidationKind::kInvalidValue, path,
        "expected " + std::to_string(expected) + " values, got " + std::to_string(v.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number_at(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

}  // namespace

DesignRecord design_from_json(const json &doc) {
  if (!doc.is_object()) bad(ValidationKind::kSchema, "/", "expected an object");
  static const char *kKeys[] = {"format", "version", "problem", "rho", "eta", "phi",
                                "sites", "weights", "thresholds", "r_max", "converged",
                                "plane_strain"};
  for (const auto &[key, value] : doc.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      bad(ValidationKind::kSchema, "/" + key, "unknown key");
    }
  }
  if (doc.contains("format") && doc["format"] != "morph-design") {
    bad(ValidationKind::kSchema, "/format", "expected \"morph-design\"");
  }
  if (!doc.contains("problem")) bad(ValidationKind::kSchema, "/problem", "missing required key");

  DesignRecord rec;
  try {
    rec.problem = problem_from_json(doc["problem"]);
  } catch (const ValidationError &e) {
    throw ValidationError(e.kind(), "/problem" + (e.path() == "/" ? "" : e.path()),
                          e.message());
  }
  if (doc.contains("plane_strain")) {
    if (!doc["plane_strain"].is_boolean()) {
      bad(ValidationKind::kSchema, "/plane_strain", "expected true or false");
    }
    rec.problem.material.plane_strain = doc["plane_strain"].get<bool>();
  }
  const std::size_t n = rec.problem.mesh.cells;
  const std::size_t k = rec.problem.num_states();
  rec.design.rho = numbers_at(doc, "rho", n, "/rho");
  if (!doc.contains("eta") || !doc["eta"].is_array()) {
    bad(ValidationKind::kSchema, "/eta", "expected one list per state");
  }
  if (doc["eta"].size() != k) {
    bad(ValidationKind::kInvalidValue, "/eta",
        "expected " + std::to_string(k) + " rows, got " + std::to_string(doc["eta"].size()));
  }
  for (std::size_t j = 0; j < k; ++j) {
    json row{{"r", doc["eta"][j]}};
    rec.design.eta.push_back(numbers_at(row, "r", n, "/eta/" + std::to_string(j)));
  }
  rec.design.phi = doc.contains("phi") ? numbers_at(doc, "phi", n, "/phi")
                                       : std::vector<double>(n, 1.0);
  if (!doc.contains("sites") || !doc["sites"].is_array()) {
    bad(ValidationKind::kSchema, "/sites", "expected a list of points");
  }
  if (doc["sites"].size() != n) {
    bad(ValidationKind::kInvalidValue, "/sites", "expected " + std::to_string(n) + " sites");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = "/sites/" + std::to_string(i);
    const json &p = doc["sites"][i];
    if (!p.is_array() || p.size() != 2) bad(ValidationKind::kSchema, path, "expected [x, y]");
    rec.sites.push_back({number_at(p[0], path + "/0"), number_at(p[1], path + "/1")});
  }
  rec.weights = doc.contains("weights") ? numbers_at(doc, "weights", n, "/weights")
                                        : std::vector<double>(n, 0.0);
  if (doc.contains("thresholds")) {
    const json &t = doc["thresholds"];
    if (!t.is_object() || !t.contains("rho") || !t.contains("eta")) {
      bad(ValidationKind::kSchema, "/thresholds", "expected {rho, eta}");
    }
    ThresholdChoice tc;
    tc.rho = number_at(t["rho"], "/thresholds/rho");
    tc.eta = numbers_at(t, "eta", k, "/thresholds/eta");
    if (t.contains("sum_pose_error")) {
      tc.sum_pose_error = number_at(t["sum_pose_error"], "/thresholds/sum_pose_error");
    }
    rec.thresholds = tc;
  }
  if (doc.contains("r_max")) rec.r_max = number_at(doc["r_max"], "/r_max");
  if (doc.contains("converged")) {
    if (!doc["converged"].is_boolean()) {
      bad(ValidationKind::kSchema, "/converged", "expected true or false");
    }
    rec.converged = doc["converged"].get<bool>();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rec.design.rho[i];
    if (!(r >= rec.problem.material.rho_floor && r <= 1.0)) {
      bad(ValidationKind::kInvalidValue, "/rho/" + std::to_string(i), "outside [rho_floor, 1]");
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double e = rec.design.eta[j][i];
      if (!(e >= 0.0 && e <= 1.0)) {
        bad(ValidationKind::kInvalidValue,
            "/eta/" + std::to_string(j) + "/" + std::to_string(i), "outside [0, 1]");
      }
    }
  }
  return rec;
}

DesignRecord load_design_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open design file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ValidationError(ValidationKind::kSchema, "/", e.what());
  }
  return design_from_json(doc);
}

std::shared_ptr<const Discretization> rebuild_discretization(const DesignRecord &rec) {
  auto d = std::make_shared<Discretization>();
  d->diagram = build_power_diagram(rec.sites, rec.weights, rec.problem.domain);
  d->mesh = extract_fe_mesh(d->diagram, rec.problem.boundary);
  return d;
}

StagedOutput::StagedOutput(std::filesystem::path target) : target_(std::move(target)) {
  namespace fs = std::filesystem;
  const fs::path parent = fs::absolute(target_).parent_path();
  std::error_code ec;
  if (fs::exists(target_, ec) && !fs::is_directory(target_, ec)) {
    throw Error("output path exists and is not a directory: " + target_.string());
  }
  fs::create_directories(parent, ec);
  if (ec) throw Error("cannot create " + parent.string() + ": " + ec.message());
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const fs::path candidate =
        parent / ("." + target_.filename().string() + ".partial-" + std::to_string(rd() % 1000000));
    if (fs::create_directory(candidate, ec) && !ec) {
      staging_ = candidate;
      return;
    }
  }
  throw Error("cannot create a staging directory in " + parent.string() +
              (ec ? ": " + ec.message() : std::string()));
}

StagedOutput::~StagedOutput() {
  std::error_code ec;
  if (!staging_.empty()) std::filesystem::remove_all(staging_, ec);
}

void StagedOutput::write(const std::filesystem::path &relative, const std::string &contents) {
  if (committed_) throw Error("output already committed");
  const std::filesystem::path p = staging_ / relative;
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw Error("cannot create " + p.parent_path().string() + ": " + ec.message());
  std::ofstream out(p, std::ios::binary);
  out << contents;
  out.close();
  if (!out) throw Error("cannot write " + p.string());
}

void StagedOutput::commit() {
  namespace fs = std::filesystem;
  if (committed_) return;
  std::error_code ec;
  if (!fs::exists(target_, ec)) {
    fs::rename(staging_, target_, ec);
    if (ec) throw Error("cannot move output into " + target_.string() + ": " + ec.message());
    staging_.clear();
    committed_ = true;
    return;
  }
  for (const auto &entry : fs::recursive_directory_iterator(staging_)) {
    if (!entry.is_regular_file()) continue;
    const fs::path dest = target_ / fs::relative(entry.path(), staging_);
    fs::create_directories(dest.parent_path(), ec);
    if (!ec) fs::rename(entry.path(), dest, ec);
    if (ec) throw Error("cannot move output into " + dest.string() + ": " + ec.message());
  }
  committed_ = true;
}

}  // namespace morph
