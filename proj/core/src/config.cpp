#include "viflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace viflow {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string RawConfig::serialize() const {
  std::ostringstream out;
  for (const auto& sec : sections) {
    out << "[" << sec.name << "]\n";
    for (const auto& [k, v] : sec.kv) out << k << " = " << v << "\n";
  }
  return out.str();
}

const RawConfig::Section* RawConfig::find_section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

const std::string* RawConfig::find(const std::string& section, const std::string& key) const {
  const Section* s = find_section(section);
  if (!s) return nullptr;
  for (const auto& [k, v] : s->kv)
    if (k == key) return &v;
  return nullptr;
}

bool RawConfig::operator==(const RawConfig& other) const {
  if (sections.size() != other.sections.size()) return false;
  for (size_t i = 0; i < sections.size(); ++i)
    if (sections[i].name != other.sections[i].name || sections[i].kv != other.sections[i].kv)
      return false;
  return true;
}

RawConfig parse_raw_config(std::istream& in, const std::string& stream_name) {
  RawConfig cfg;
  std::string line;
  int lineno = 0;
  RawConfig::Section* cur = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(stream_name + ":" + std::to_string(lineno) + ": malformed section header");
      cfg.sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      cur = &cfg.sections.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(stream_name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    if (!cur)
      throw Error(stream_name + ":" + std::to_string(lineno) + ": key outside of a section");
    cur->kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

VectorField ProblemConfig::body_force() const {
  if (!fx.valid() && !fy.valid()) return nullptr;
  Expr ex = fx, ey = fy;
  return [ex, ey](const Vec2& p) {
    return Vec2(ex.valid() ? ex(p) : 0.0, ey.valid() ? ey(p) : 0.0);
  };
}

namespace {

double num(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw Error("config: bad number for " + what + ": '" + s + "'");
  }
}

bool flag(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error("config: bad boolean for " + what + ": '" + s + "'");
}

ScalarField scalar_field(const Expr& e) { return e.valid() ? e.field() : ScalarField(); }

VectorField vector_field(const Expr& ex, const Expr& ey) {
  if (!ex.valid() && !ey.valid()) return nullptr;
  Expr cx = ex, cy = ey;
  return [cx, cy](const Vec2& p) {
    return Vec2(cx.valid() ? cx(p) : 0.0, cy.valid() ? cy(p) : 0.0);
  };
}

}  // namespace

ProblemConfig parse_config(std::istream& in, const std::string& stream_name,
                           const std::string& base_dir) {
  ProblemConfig cfg;
  cfg.raw = parse_raw_config(in, stream_name);
  cfg.hash = fnv1a(cfg.raw.serialize());

  const auto* prob = cfg.raw.find_section("problem");
  if (!prob) throw Error("config: missing [problem] section");

  std::set<std::string> allowed_problem = {"mesh", "equation", "nu", "fx", "fy"};
  for (const auto& [k, v] : prob->kv) {
    if (!allowed_problem.count(k)) throw Error("config: unknown key '" + k + "' in [problem]");
    if (k == "mesh") cfg.mesh_path = v;
    if (k == "equation") cfg.equation = v;
    if (k == "nu") cfg.nu = num(v, "nu");
    if (k == "fx") cfg.fx = Expr::parse(v);
    if (k == "fy") cfg.fy = Expr::parse(v);
  }
  if (cfg.equation != "stokes" && cfg.equation != "navier-stokes-static" &&
      cfg.equation != "navier-stokes-total")
    throw Error("config: unknown equation '" + cfg.equation + "'");
  if (cfg.nu <= 0) throw Error("config: nu must be positive");
  if (!cfg.mesh_path.empty() && cfg.mesh_path.front() != '/' && !base_dir.empty())
    cfg.mesh_path = base_dir + "/" + cfg.mesh_path;

  for (const auto& sec : cfg.raw.sections) {
    if (sec.name.rfind("patch", 0) != 0) continue;
    std::istringstream hs(sec.name.substr(5));
    int tag = 0;
    if (!(hs >> tag) || tag < 1 || tag > 11)
      throw Error("config: bad patch section '[" + sec.name + "]' (expected [patch <1..11>])");
    BoundaryPatch p;
    p.tag = tag;
    p.kind = tag;
    Expr h, hx, hy, phi, phix, phiy, g, a11, a12, a21, a22;
    for (const auto& [k, v] : sec.kv) {
      if (k == "kind") {
        p.kind = static_cast<int>(num(v, "kind"));
      } else if (k == "h") {
        h = Expr::parse(v);
      } else if (k == "hx") {
        hx = Expr::parse(v);
      } else if (k == "hy") {
        hy = Expr::parse(v);
      } else if (k == "phi") {
        phi = Expr::parse(v);
      } else if (k == "phix") {
        phix = Expr::parse(v);
      } else if (k == "phiy") {
        phiy = Expr::parse(v);
      } else if (k == "g") {
        g = Expr::parse(v);
      } else if (k == "alpha11") {
        a11 = Expr::parse(v);
      } else if (k == "alpha12") {
        a12 = Expr::parse(v);
      } else if (k == "alpha21") {
        a21 = Expr::parse(v);
      } else if (k == "alpha22") {
        a22 = Expr::parse(v);
      } else if (k == "convex") {
        p.declared_convex = flag(v, "convex");
      } else {
        throw Error("config: unknown key '" + k + "' in [" + sec.name + "]");
      }
    }
    if (p.kind < 1 || p.kind > 11)
      throw Error("config: unknown patch kind " + std::to_string(p.kind) + " on patch " +
                  std::to_string(tag));

    // Kind-specific data wiring with validation of what is allowed.
    auto forbid = [&](bool cond, const std::string& what) {
      if (cond)
        throw Error("config: key '" + what + "' is not valid for kind " +
                    std::to_string(p.kind) + " (patch " + std::to_string(tag) + ")");
    };
    forbid(h.valid() && !(p.kind == 4 || p.kind == 5 || p.kind == 8 || p.kind == 9), "h");
    forbid((hx.valid() || hy.valid()) && p.kind != 1, "hx/hy");
    forbid(phi.valid() && !(p.kind == 2 || p.kind == 4 || p.kind == 7), "phi");
    forbid((phix.valid() || phiy.valid()) && !(p.kind == 3 || p.kind == 5 || p.kind == 6),
           "phix/phiy");
    forbid(g.valid() && !kind_has_threshold(p.kind), "g");
    forbid((a11.valid() || a12.valid() || a21.valid() || a22.valid()) && p.kind != 5, "alpha*");
    if (kind_has_threshold(p.kind) && !g.valid())
      throw Error("config: patch " + std::to_string(tag) + " (kind " + std::to_string(p.kind) +
                  ") needs a threshold g");

    p.h_vec = vector_field(hx, hy);
    p.h_scalar = scalar_field(h);
    p.phi_scalar = scalar_field(phi);
    p.phi_vec = vector_field(phix, phiy);
    p.g = scalar_field(g);
    if (p.kind == 5) {
      Expr e11 = a11, e12 = a12, e21 = a21, e22 = a22;
      p.alpha = [e11, e12, e21, e22](const Vec2& x) {
        Mat2 m;
        m(0, 0) = e11.valid() ? e11(x) : 0.0;
        m(0, 1) = e12.valid() ? e12(x) : 0.0;
        m(1, 0) = e21.valid() ? e21(x) : 0.0;
        m(1, 1) = e22.valid() ? e22(x) : 0.0;
        return m;
      };
    }
    for (const auto& q : cfg.patches)
      if (q.tag == tag) throw Error("config: duplicate [patch " + std::to_string(tag) + "]");
    cfg.patches.push_back(std::move(p));
  }

  if (const auto* sec = cfg.raw.find_section("solver")) {
    for (const auto& [k, v] : sec->kv) {
      if (k == "scheme")
        cfg.solver.scheme = v;
      else if (k == "tol")
        cfg.solver.tol = num(v, "tol");
      else if (k == "max_outer")
        cfg.solver.max_outer = static_cast<int>(num(v, "max_outer"));
      else if (k == "eps0")
        cfg.solver.eps0 = v == "auto" ? -1 : num(v, "eps0");
      else if (k == "eps_factor")
        cfg.solver.eps_factor = num(v, "eps_factor");
      else if (k == "eps_cutoff")
        cfg.solver.eps_cutoff = num(v, "eps_cutoff");
      else
        throw Error("config: unknown key '" + k + "' in [solver]");
    }
    if (cfg.solver.scheme != "oseen" && cfg.solver.scheme != "picard" &&
        cfg.solver.scheme != "regularized-path")
      throw Error("config: unknown scheme '" + cfg.solver.scheme + "'");
  }

  if (const auto* sec = cfg.raw.find_section("output")) {
    for (const auto& [k, v] : sec->kv) {
      if (k == "dir") {
        cfg.output.dir = v;
      } else if (k == "formats") {
        cfg.output.vtk = v.find("vtk") != std::string::npos;
        cfg.output.csv = v.find("csv") != std::string::npos;
        cfg.output.report = v.find("report") != std::string::npos;
      } else if (k == "export_matrices") {
        cfg.output.export_matrices = flag(v, "export_matrices");
      } else {
        throw Error("config: unknown key '" + k + "' in [output]");
      }
    }
  }

  if (const auto* sec = cfg.raw.find_section("mms")) {
    for (const auto& [k, v] : sec->kv) {
      if (k == "case")
        cfg.mms.case_name = v;
      else if (k == "levels")
        cfg.mms.levels = static_cast<int>(num(v, "levels"));
      else
        throw Error("config: unknown key '" + k + "' in [mms]");
    }
  }

  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::string dir;
  auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(in, path, dir);
}

}  // namespace viflow
