#include "helm/experiments.hpp"

#include "helm/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace helm {

namespace {

const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h{
      "regime",   "source",   "n",        "k",          "rho",        "h_K",         "h_V",        "h_I",
      "h_P",      "clamped",  "triangles", "dofs",      "reference_dofs", "ref_K",   "gal_K",      "best_K",
      "ref_V",    "gal_V",    "best_V",   "ref_I",      "gal_I",      "best_I",      "ref_global", "gal_global",
      "best_global", "qo_K",  "qo_V",     "qo_I",       "qo_global",  "rel_K",       "rel_V",      "rel_I",
      "rel_global", "ok",     "error"};
  return h;
}

std::string csv_escape(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == ',' || c == '\n' || c == '\r' || c == '"') ? ';' : c;
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string fmt(double v) { return format_double(v); }

struct Fit {
  bool ok = false;
  RateFit rate;
};

Fit try_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  Fit f;
  if (xs.size() < 3) return f;
  try {
    f.rate = fit_rate(xs, ys);
    f.ok = true;
  } catch (const DomainError&) {
  }
  return f;
}

std::vector<Regime> regimes_in(const std::vector<SweepRow>& rows) {
  std::vector<Regime> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.regime) == out.end()) out.push_back(r.regime);
  return out;
}

std::vector<SourceKind> sources_in(const std::vector<SweepRow>& rows) {
  std::vector<SourceKind> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.source) == out.end()) out.push_back(r.source);
  return out;
}

PlotSeries series(const std::vector<SweepRow>& rows, Regime g, SourceKind s, double (*get)(const SweepRow&),
                  const std::string& label) {
  PlotSeries ps;
  ps.label = label;
  for (const auto& r : rows)
    if (r.regime == g && r.source == s && r.ok) {
      ps.x.push_back(r.k);
      ps.y.push_back(get(r));
    }
  return ps;
}

}  // namespace

void write_sweep_csv(const std::filesystem::path& p, const std::vector<SweepRow>& rows) {
  CsvWriter w(p, sweep_header());
  for (const auto& r : rows) {
    std::vector<std::string> c{regime_name(r.regime), source_name(r.source), std::to_string(r.n), fmt(r.k),
                               fmt(r.rho),           fmt(r.budget.hK),      fmt(r.budget.hV),   fmt(r.budget.hI),
                               fmt(r.budget.hP),     r.budget.clamped ? "1" : "0", std::to_string(r.triangles),
                               std::to_string(r.dofs), std::to_string(r.reference_dofs)};
    for (const auto& e : r.local) {
      c.push_back(fmt(e.reference));
      c.push_back(fmt(e.galerkin));
      c.push_back(fmt(e.best));
    }
    c.push_back(fmt(r.global.reference));
    c.push_back(fmt(r.global.galerkin));
    c.push_back(fmt(r.global.best));
    for (double q : r.qo_local) c.push_back(fmt(q));
    c.push_back(fmt(r.qo_global));
    for (double q : r.rel_local) c.push_back(fmt(q));
    c.push_back(fmt(r.rel_global));
    c.push_back(r.ok ? "1" : "0");
    c.push_back(csv_escape(r.error));
    w.row_mixed(c);
  }
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::string line;
  std::vector<std::string> header;
  std::vector<SweepRow> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      header = split_csv(line);
      for (const auto& name : sweep_header())
        if (std::find(header.begin(), header.end(), name) == header.end())
          throw ConfigError(p.string() + ": missing column '" + name + "'");
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " cells");
    auto get = [&](const std::string& name) -> const std::string& {
      return cells[static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin())];
    };
    auto num = [&](const std::string& name) {
      try {
        return std::stod(get(name));
      } catch (const std::exception&) {
        throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": bad number in column '" + name + "'");
      }
    };
    SweepRow r;
    r.regime = regime_from_name(get("regime"));
    r.source = source_from_name(get("source"));
    r.n = static_cast<int>(num("n"));
    r.k = num("k");
    r.rho = num("rho");
    r.budget.hK = num("h_K");
    r.budget.hV = num("h_V");
    r.budget.hI = num("h_I");
    r.budget.hP = num("h_P");
    r.budget.clamped = get("clamped") == "1";
    r.triangles = static_cast<long>(num("triangles"));
    r.dofs = static_cast<long>(num("dofs"));
    r.reference_dofs = static_cast<long>(num("reference_dofs"));
    const char* names[3] = {"K", "V", "I"};
    for (int i = 0; i < 3; ++i) {
      const std::string s = names[i];
      r.local[static_cast<std::size_t>(i)] = {num("ref_" + s), num("gal_" + s), num("best_" + s)};
      r.qo_local[static_cast<std::size_t>(i)] = num("qo_" + s);
      r.rel_local[static_cast<std::size_t>(i)] = num("rel_" + s);
    }
    r.global = {num("ref_global"), num("gal_global"), num("best_global")};
    r.qo_global = num("qo_global");
    r.rel_global = num("rel_global");
    r.ok = get("ok") == "1";
    r.error = get("error");
    rows.push_back(r);
  }
  if (header.empty()) throw ConfigError(p.string() + ": no header");
  return rows;
}

void write_loglog_svg(const std::filesystem::path& p, const std::string& title, const std::string& ylabel,
                      const std::vector<PlotSeries>& series) {
  const double W = 720, H = 480, L = 80, R = 240, T = 40, B = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.y[i])) {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
  if (!(xmin <= xmax)) xmin = 1, xmax = 10, ymin = 1, ymax = 10;
  double lx0 = std::floor(std::log10(xmin) * 10) / 10, lx1 = std::ceil(std::log10(xmax) * 10) / 10;
  double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));
  if (lx1 - lx0 < 0.1) lx0 -= 0.05, lx1 += 0.05;
  if (ly1 - ly0 < 1) ly1 = ly0 + 1;
  auto X = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto Y = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };

  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\"" << (H - T - B)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
    const double y = Y(std::pow(10.0, e));
    out << "<line x1=\"" << L << "\" x2=\"" << (W - R) << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n<text x=\"" << (L - 6) << "\" y=\"" << (y + 4) << "\" text-anchor=\"end\">1e" << e
        << "</text>\n";
  }
  {
    const double step = std::pow(10.0, std::floor(std::log10(std::pow(10.0, lx1) - std::pow(10.0, lx0)))) / 2;
    for (double x = std::ceil(std::pow(10.0, lx0) / step) * step; x <= std::pow(10.0, lx1); x += step)
      out << "<text x=\"" << X(x) << "\" y=\"" << (H - B + 18) << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  out << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 16) << "\" text-anchor=\"middle\">k</text>\n";
  out << "<text transform=\"translate(20," << (T + (H - T - B) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << ylabel << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* col = colors[si % 6];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.y[i])) {
        pts += fmt(X(s.x[i])) + "," + fmt(Y(s.y[i])) + " ";
        out << "<circle cx=\"" << X(s.x[i]) << "\" cy=\"" << Y(s.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
      }
    out << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"" << pts << "\"/>\n";
    const Fit f = try_fit(s.x, s.y);
    std::ostringstream lab;
    lab << s.label;
    if (f.ok) lab << " (slope " << std::round(f.rate.slope * 100) / 100 << ")";
    const double ly = T + 16 + 18 * static_cast<double>(si);
    out << "<line x1=\"" << (W - R + 12) << "\" x2=\"" << (W - R + 32) << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << col << "\"/><text x=\"" << (W - R + 38) << "\" y=\"" << ly << "\">" << lab.str()
        << "</text>\n";
  }
  out << "</svg>\n";
}

std::vector<std::filesystem::path> emit_report(const SweepResult& result, const std::vector<AcceptanceCheck>& checks,
                                               const std::filesystem::path& out_dir) {
  if (result.rows.empty()) throw DomainError("emit_report needs at least one sweep row");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> files;
  const auto& rows = result.rows;
  const auto regimes = regimes_in(rows);

  files.push_back(out_dir / "sweep.csv");
  write_sweep_csv(files.back(), rows);

  json fits = json::object();
  for (SourceKind s : sources_in(rows)) {
    const std::string sn = source_name(s);
    {
      files.push_back(out_dir / ("qo_" + sn + ".csv"));
      CsvWriter w(files.back(), {"regime", "n", "k", "dofs", "qo_K", "qo_V", "qo_I", "qo_global"});
      for (const auto& r : rows)
        if (r.source == s && r.ok)
          w.row_mixed({regime_name(r.regime), std::to_string(r.n), fmt(r.k), std::to_string(r.dofs),
                       fmt(r.qo_local[0]), fmt(r.qo_local[1]), fmt(r.qo_local[2]), fmt(r.qo_global)});
    }
    {
      files.push_back(out_dir / ("relerr_" + sn + ".csv"));
      CsvWriter w(files.back(), {"regime", "n", "k", "dofs", "rel_K", "rel_V", "rel_I", "rel_global"});
      for (const auto& r : rows)
        if (r.source == s && r.ok)
          w.row_mixed({regime_name(r.regime), std::to_string(r.n), fmt(r.k), std::to_string(r.dofs),
                       fmt(r.rel_local[0]), fmt(r.rel_local[1]), fmt(r.rel_local[2]), fmt(r.rel_global)});
    }
    struct Quantity {
      const char* key;
      const char* label;
      double (*get)(const SweepRow&);
    };
    const Quantity qs[] = {
        {"qo_global", "global QO constant", [](const SweepRow& r) { return r.qo_global; }},
        {"qo_K", "QO constant in K", [](const SweepRow& r) { return r.qo_local[0]; }},
        {"rel_global", "relative error", [](const SweepRow& r) { return r.rel_global; }},
        {"rel_K", "local-global relative error in K", [](const SweepRow& r) { return r.rel_local[0]; }},
        {"rel_I", "local-global relative error in I", [](const SweepRow& r) { return r.rel_local[2]; }},
        {"dofs", "DoFs", [](const SweepRow& r) { return static_cast<double>(r.dofs); }},
    };
    for (const auto& q : qs) {
      std::vector<PlotSeries> ser;
      for (Regime g : regimes) {
        ser.push_back(series(rows, g, s, q.get, regime_name(g)));
        const Fit f = try_fit(ser.back().x, ser.back().y);
        if (f.ok)
          fits[sn][q.key][regime_name(g)] = {{"slope", f.rate.slope}, {"intercept", f.rate.intercept},
                                             {"r2", f.rate.r2}};
      }
      files.push_back(out_dir / (std::string(q.key) + "_" + sn + ".svg"));
      write_loglog_svg(files.back(), std::string(q.label) + ", f_" + sn, q.label, ser);
    }
  }

  json summary;
  summary["format_version"] = kFormatVersion;
  summary["config"] = sweep_config_to_json(result.config);
  summary["fits"] = fits;
  json cj = json::array();
  bool all = true;
  for (const auto& c : checks) {
    cj.push_back({{"id", c.id}, {"description", c.description}, {"pass", c.pass}, {"value", c.value},
                  {"detail", c.detail}});
    all = all && c.pass;
  }
  summary["checks"] = cj;
  summary["all_pass"] = all;
  json timing = json::array();
  for (const auto& r : rows)
    timing.push_back({{"regime", regime_name(r.regime)}, {"source", source_name(r.source)}, {"n", r.n},
                      {"seconds", r.seconds}, {"ok", r.ok}, {"error", r.error}});
  summary["cells"] = timing;
  files.push_back(out_dir / "summary.json");
  write_json_file(files.back(), summary);
  return files;
}

std::vector<AcceptanceCheck> regime_checks(const SweepResult& result, const RegimeCheckLimits& lim) {
  std::vector<AcceptanceCheck> out;
  for (SourceKind s : sources_in(result.rows)) {
    const std::string sn = source_name(s);
    auto rows_of = [&](Regime g) { return result.select(g, s); };
    auto all_ok = [](const std::vector<const SweepRow*>& v) {
      return std::all_of(v.begin(), v.end(), [](const SweepRow* r) { return r->ok; });
    };
    if (const auto u1 = rows_of(Regime::U1); !u1.empty()) {
      AcceptanceCheck qo{"u1_qo_global_" + sn, "U1 global QO constant <= " + fmt(lim.qo_max), false, 0, ""};
      double worst = 0;
      for (const auto* r : u1) worst = std::max(worst, r->ok ? r->qo_global : INFINITY);
      qo.value = worst;
      qo.pass = all_ok(u1) && worst <= lim.qo_max;
      qo.detail = "max over " + std::to_string(u1.size()) + " wavenumbers";
      out.push_back(qo);

      AcceptanceCheck sl{"u1_rel_K_slope_" + sn,
                         "U1 cavity local-global relative error slope in " + fmt(lim.u1_slope) + " +- " +
                             fmt(lim.u1_slope_tol),
                         false, NAN, ""};
      std::vector<double> ks, ys;
      for (const auto* r : u1)
        if (r->ok) ks.push_back(r->k), ys.push_back(r->rel_local[0]);
      const Fit f = try_fit(ks, ys);
      if (f.ok && all_ok(u1)) {
        sl.value = f.rate.slope;
        sl.pass = std::abs(f.rate.slope - lim.u1_slope) <= lim.u1_slope_tol;
        sl.detail = "r2 = " + fmt(f.rate.r2);
      } else {
        sl.detail = "fewer than 3 successful cells";
      }
      out.push_back(sl);
    }
    if (const auto re = rows_of(Regime::RE); !re.empty()) {
      AcceptanceCheck sl{"re_rel_global_slope_" + sn, "RE global relative error slope <= " + fmt(lim.re_slope_max),
                         false, NAN, ""};
      std::vector<double> ks, ys;
      for (const auto* r : re)
        if (r->ok) ks.push_back(r->k), ys.push_back(r->rel_global);
      const Fit f = try_fit(ks, ys);
      if (f.ok && all_ok(re)) {
        sl.value = f.rate.slope;
        sl.pass = f.rate.slope <= lim.re_slope_max;
        sl.detail = "r2 = " + fmt(f.rate.r2);
      } else {
        sl.detail = "fewer than 3 successful cells";
      }
      out.push_back(sl);
    }
  }
  return out;
}

}  // namespace helm
