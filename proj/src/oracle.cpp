#include "lattice/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lattice/binary_io.hpp"
#include "lattice/config.hpp"
#include "lattice/error.hpp"

namespace lattice {

void MaterialConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("material config: ") + what);
  };
  require(E > 0.0, "E must be > 0");
  require(rho > 0.0, "rho must be > 0");
  require(A_jc > 0.0, "A_jc must be > 0");
  require(B_jc >= 0.0, "B_jc must be >= 0");
  require(n_jc > 0.0 && n_jc <= 1.0, "n_jc must be in (0, 1]");
  require(C_jc >= 0.0, "C_jc must be >= 0");
  require(eps0_dot > 0.0, "eps0_dot must be > 0");
  require(eps_d >= 0.0 && eps_d < eps_f, "need 0 <= eps_d < eps_f");
  require(d_max >= 0.0 && d_max < 1.0, "d_max must be in [0, 1)");
  require(k_b >= 0.0, "k_b must be >= 0");
}

MaterialConfig MaterialConfig::from_config(const Config& c) {
  MaterialConfig m;
  m.E = c.get_double("material.E", m.E);
  m.rho = c.get_double("material.rho", m.rho);
  m.A_jc = c.get_double("material.A_jc", m.A_jc);
  m.B_jc = c.get_double("material.B_jc", m.B_jc);
  m.n_jc = c.get_double("material.n_jc", m.n_jc);
  m.C_jc = c.get_double("material.C_jc", m.C_jc);
  m.eps0_dot = c.get_double("material.eps0_dot", m.eps0_dot);
  m.eps_d = c.get_double("material.eps_d", m.eps_d);
  m.eps_f = c.get_double("material.eps_f", m.eps_f);
  m.d_max = c.get_double("material.d_max", m.d_max);
  m.k_b = c.get_double("material.k_b", m.k_b);
  m.validate();
  return m;
}

void MaterialConfig::to_config(Config& c) const {
  c.set("material.E", E);
  c.set("material.rho", rho);
  c.set("material.A_jc", A_jc);
  c.set("material.B_jc", B_jc);
  c.set("material.n_jc", n_jc);
  c.set("material.C_jc", C_jc);
  c.set("material.eps0_dot", eps0_dot);
  c.set("material.eps_d", eps_d);
  c.set("material.eps_f", eps_f);
  c.set("material.d_max", d_max);
  c.set("material.k_b", k_b);
}

double wave_arrival(double height_mm, const MaterialConfig& mat) {
  return (height_mm * 1e-3) / std::sqrt(mat.E / mat.rho);
}

double flow_stress(double eps_p, double rate, const MaterialConfig& mat) {
  const double hardening = mat.A_jc + mat.B_jc * std::pow(eps_p, mat.n_jc);
  const double rate_factor = 1.0 + mat.C_jc * std::log(std::max(rate / mat.eps0_dot, 1.0));
  return hardening * rate_factor;
}

namespace {

// Plastic strain at which the elastic stress meets the flow stress; the
// residual is strictly decreasing on [lo, total_strain].
double return_map(double total_strain, double lo, double rate, const MaterialConfig& mat) {
  double hi = total_strain;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double residual = mat.E * (total_strain - mid) - flow_stress(mid, rate, mat);
    if (residual > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

SimRecord simulate_features(const GeomFeatures& features, std::string label,
                            const CrushInputs& in, const MaterialConfig& mat) {
  if (!(in.thickness_mm > 0.0)) throw ContractViolation("simulate: thickness must be > 0");
  if (!(in.strain_rate > 0.0)) throw ContractViolation("simulate: strain rate must be > 0");
  if (!(in.final_strain > 0.0 && in.final_strain <= kDefaultFinalStrain)) {
    throw ContractViolation("simulate: final strain must be in (0, 0.2]");
  }
  if (!(in.height_mm > 0.0)) throw ContractViolation("simulate: height must be > 0");
  if (features.relative_density >= 1.0) {
    throw DomainError("simulate: degenerate geometry (relative density >= 1)");
  }

  const double height_m = in.height_mm * 1e-3;
  const double area_m2 = features.total_length * in.thickness_mm * 1e-6;
  const double slenderness = features.max_free_span / in.thickness_mm;
  const double t_e = wave_arrival(in.height_mm, mat);

  SimRecord rec;
  rec.label = std::move(label);
  rec.thickness_mm = in.thickness_mm;
  rec.strain_rate = in.strain_rate;
  rec.height_mm = in.height_mm;
  rec.final_strain = in.final_strain;

  double eps_p = 0.0;
  double work = 0.0;
  double pd = 0.0, dmd = 0.0, elastic = 0.0;
  double rf_prev = 0.0, disp_prev = 0.0;

  for (int i = 0; i < kFineSteps; ++i) {
    const double strain = in.final_strain * (static_cast<double>(i) / (kFineSteps - 1));
    const double time = strain / in.strain_rate;
    const double disp = strain * height_m;

    const double trial = mat.E * (strain - eps_p);
    const double yield = flow_stress(eps_p, in.strain_rate, mat);
    bool plastic = false;
    double stress = trial;
    if (!(trial < yield)) {
      const double updated = return_map(strain, eps_p, in.strain_rate, mat);
      plastic = updated > eps_p;
      eps_p = std::max(eps_p, updated);
      stress = flow_stress(eps_p, in.strain_rate, mat);
    }
    const double damage =
        std::clamp((eps_p - mat.eps_d) / (mat.eps_f - mat.eps_d), 0.0, 1.0) * mat.d_max;
    const double softening = 1.0 / (1.0 + mat.k_b * slenderness * strain);
    const double rf = time <= t_e ? 0.0 : stress * area_m2 * softening * (1.0 - damage);

    if (i > 0) {
      work += 0.5 * (rf + rf_prev) * (disp - disp_prev);
      if (plastic) {
        const double elastic_target = rf * rf * height_m / (2.0 * mat.E * area_m2);
        const double inelastic = work - elastic_target - (pd + dmd);
        if (inelastic >= 0.0) {
          pd += (1.0 - damage) * inelastic;
          dmd += damage * inelastic;
          elastic = elastic_target;
        } else {
          elastic = work - pd - dmd;
        }
      } else {
        elastic = work - pd - dmd;
      }
    }

    if (!std::isfinite(rf) || !std::isfinite(work) || !std::isfinite(pd) ||
        !std::isfinite(dmd) || !std::isfinite(elastic)) {
      throw NumericalError("simulate: non-finite value at integration step " + std::to_string(i));
    }

    if (i % 2 == 0) {
      const int j = i / 2;
      rec.time[j] = time;
      rec.strain[j] = strain;
      rec.rf[j] = rf;
      rec.pd[j] = pd;
      rec.dmd[j] = dmd;
      rec.else_[j] = elastic;
    }
    rf_prev = rf;
    disp_prev = disp;
  }
  return rec;
}

SimRecord simulate_curves(const CurveSet& curves, std::string label, double thickness_mm,
                          double strain_rate, double final_strain, const MaterialConfig& mat) {
  mat.validate();
  if (!(thickness_mm > 0.0)) throw ContractViolation("simulate: thickness must be > 0");
  const GeomFeatures f = geometry_features(curves, thickness_mm);
  return simulate_features(f, std::move(label),
                           {thickness_mm, strain_rate, final_strain, kLatticeHeightMm}, mat);
}

SimRecord simulate(const DesignKey& key, double thickness_mm, double strain_rate,
                   double final_strain, const MaterialConfig& mat) {
  return simulate_curves(build_lattice(key), format_key(key), thickness_mm, strain_rate,
                         final_strain, mat);
}

void write_records_csv(std::ostream& out, const std::vector<SimRecord>& records) {
  out << "key,thickness_mm,rate_1_per_s,final_strain,step,time_s,strain,rf_N,pd_J,dmd_J,else_J\n";
  char buf[512];
  for (const auto& r : records) {
    for (int j = 0; j < kOutputSteps; ++j) {
      std::snprintf(buf, sizeof buf,
                    "%s,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    r.label.c_str(), r.thickness_mm, r.strain_rate, r.final_strain, j, r.time[j],
                    r.strain[j], r.rf[j], r.pd[j], r.dmd[j], r.else_[j]);
      out << buf;
    }
  }
}

std::vector<SimRecord> read_records_csv(std::istream& in) {
  std::vector<SimRecord> records;
  std::string line;
  if (!std::getline(in, line)) return records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) {
      throw FormatError("record CSV line " + std::to_string(line_no) + ": expected 11 columns");
    }
    const int step = std::stoi(cells[4]);
    if (step < 0 || step >= kOutputSteps) {
      throw FormatError("record CSV line " + std::to_string(line_no) + ": bad step");
    }
    if (step == 0) {
      SimRecord r;
      r.label = cells[0];
      r.thickness_mm = std::stod(cells[1]);
      r.strain_rate = std::stod(cells[2]);
      r.final_strain = std::stod(cells[3]);
      records.push_back(r);
    } else if (records.empty()) {
      throw FormatError("record CSV line " + std::to_string(line_no) + ": missing step 0");
    }
    auto& r = records.back();
    r.time[step] = std::stod(cells[5]);
    r.strain[step] = std::stod(cells[6]);
    r.rf[step] = std::stod(cells[7]);
    r.pd[step] = std::stod(cells[8]);
    r.dmd[step] = std::stod(cells[9]);
    r.else_[step] = std::stod(cells[10]);
  }
  return records;
}

namespace {
constexpr char kRecordMagic[9] = "LATREC\0\0";
}

void write_records_binary(std::ostream& out, const std::vector<SimRecord>& records) {
  binio::put_magic(out, kRecordMagic);
  binio::put_u32(out, kRecordBatchVersion);
  binio::put_u64(out, records.size());
  for (const auto& r : records) {
    binio::put_string(out, r.label);
    binio::put_f64(out, r.thickness_mm);
    binio::put_f64(out, r.strain_rate);
    binio::put_f64(out, r.height_mm);
    binio::put_f64(out, r.final_strain);
    for (const Series* s : {&r.time, &r.strain, &r.rf, &r.pd, &r.dmd, &r.else_}) {
      binio::put_f64s(out, *s);
    }
  }
}

std::vector<SimRecord> read_records_binary(std::istream& in) {
  binio::expect_magic(in, kRecordMagic, "record batch");
  const std::uint32_t version = binio::get_u32(in);
  if (version != kRecordBatchVersion) {
    throw FormatError("record batch version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kRecordBatchVersion) + ")");
  }
  const std::uint64_t count = binio::get_u64(in);
  std::vector<SimRecord> records;
  records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t k = 0; k < count; ++k) {
    SimRecord r;
    r.label = binio::get_string(in, 256);
    r.thickness_mm = binio::get_f64(in);
    r.strain_rate = binio::get_f64(in);
    r.height_mm = binio::get_f64(in);
    r.final_strain = binio::get_f64(in);
    for (Series* s : {&r.time, &r.strain, &r.rf, &r.pd, &r.dmd, &r.else_}) {
      binio::get_f64s(in, *s);
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_records(const std::string& path, const std::vector<SimRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write record batch '" + path + "'");
  write_records_binary(out, records);
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<SimRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open record batch '" + path + "'");
  return read_records_binary(in);
}

}  // namespace lattice
