#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap::cli {

namespace {

struct Run {
  std::string label;
  fs::path dir;
  json manifest;
  std::string manifest_digest;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Numeric CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ManifestMismatch("column '" + name + "' missing");
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Table read_csv(const fs::path& p) {
  std::istringstream in(read_file(p));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw ManifestMismatch(p.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw ManifestMismatch(p.string() + ": ragged row");
    std::vector<double> r;
    for (const auto& c : cells) {
      try {
        r.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ManifestMismatch(p.string() + ": non-numeric cell '" + c + "'");
      }
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

Run load_run(const std::string& arg) {
  Run r;
  r.dir = fs::path(arg).lexically_normal();
  if (r.dir.filename().empty()) r.dir = r.dir.parent_path();
  r.label = r.dir.filename().string();
  const fs::path mp = r.dir / "manifest.json";
  if (!fs::exists(mp)) throw ManifestMismatch("no manifest in " + arg);
  const std::string bytes = read_file(mp);
  r.manifest_digest = sha256_hex(bytes);
  try {
    r.manifest = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ManifestMismatch("unreadable manifest in " + arg + ": " + e.what());
  }
  if (r.manifest.value("status", "") != "complete") throw ManifestMismatch("run " + arg + " is not complete");
  if (!r.manifest.contains("outputs") || !r.manifest.contains("scenario"))
    throw ManifestMismatch("manifest in " + arg + " lacks outputs or scenario");
  for (const auto& o : r.manifest["outputs"]) {
    const fs::path f = r.dir / o.at("path").get<std::string>();
    if (!fs::exists(f)) throw ManifestMismatch("missing output " + f.string());
    if (sha256_file(f) != o.at("sha256").get<std::string>()) throw ManifestMismatch("digest mismatch for " + f.string());
  }
  return r;
}

bool has_output(const Run& r, const std::string& name) {
  for (const auto& o : r.manifest["outputs"])
    if (o["path"] == name) return true;
  return false;
}

std::vector<double> epsilons(const Run& r) { return r.manifest.at("epsilons").get<std::vector<double>>(); }

std::string cell(const std::string& s) {
  // labels come from directory names; keep the CSV unambiguous
  std::string o;
  for (char c : s) o += (c == ',' || c == '\n' || c == '"') ? '_' : c;
  return o;
}

}  // namespace

json run_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  if (inputs.empty()) throw ConfigError("report needs at least one run directory");
  std::vector<Run> runs;
  std::set<std::string> labels;
  for (const auto& a : inputs) {
    Run r = load_run(a);
    std::string base = r.label;
    for (int k = 2; labels.count(r.label); ++k) r.label = base + "#" + std::to_string(k);
    labels.insert(r.label);
    runs.push_back(std::move(r));
  }

  // ε-sequences of ε-dependent scenarios must agree
  const std::set<std::string> eps_dependent{"evolve", "modes", "spectrum"};
  std::optional<std::vector<double>> eps_ref;
  std::string eps_owner;
  for (const Run& r : runs) {
    if (!eps_dependent.count(r.manifest["scenario"].get<std::string>())) continue;
    const auto e = epsilons(r);
    if (!eps_ref) {
      eps_ref = e;
      eps_owner = r.label;
    } else if (e != *eps_ref) {
      throw ManifestMismatch("epsilon sequence of " + r.label + " differs from " + eps_owner);
    }
  }

  OutputSink sink(out_dir);

  // dichotomy: local mass against time for each evolve run and ε
  std::string dich = "run,epsilon,t,local_mass,normalized\n";
  Chart dchart{"Local mass in Omega, normalized by its initial value", "t (slow time)", "local mass / initial", false,
               true, {}};
  for (const Run& r : runs) {
    if (r.manifest["scenario"] != "evolve") continue;
    for (double eps : epsilons(r)) {
      const std::string f = "timeseries_" + eps_tag(eps) + ".csv";
      if (!has_output(r, f)) throw ManifestMismatch(r.label + " lacks " + f);
      const Table t = read_csv(r.dir / f);
      const std::size_t ct = t.col("t"), cm = t.col("local_mass");
      if (t.rows.empty()) continue;
      const double m0 = t.rows[0][cm];
      Series s{r.label + " " + eps_tag(eps), {}, {}, false, {}};
      for (const auto& row : t.rows) {
        dich += cell(r.label) + "," + csv_number(eps) + "," + csv_number(row[ct]) + "," + csv_number(row[cm]) + "," +
                csv_number(row[cm] / m0) + "\n";
        s.x.push_back(row[ct]);
        s.y.push_back(row[cm] / m0);
      }
      dchart.series.push_back(std::move(s));
    }
  }
  sink.write("dichotomy.csv", dich);
  sink.write("dichotomy.svg", dchart.render());

  // drift cross-check from rays runs
  std::string fx = "run,xi1,x2,xi2,F_time,F_space,F_action,rel_space,rel_action\n";
  for (const Run& r : runs) {
    if (r.manifest["scenario"] != "rays" || !has_output(r, "drift.csv")) continue;
    const Table t = read_csv(r.dir / "drift.csv");
    const std::size_t a = t.col("xi1"), b = t.col("x2"), c = t.col("xi2"), ft = t.col("F_time"), fs_ = t.col("F_space"),
                      fa = t.col("F_action");
    for (const auto& row : t.rows) {
      const double den = std::fabs(row[ft]);
      fx += cell(r.label) + "," + csv_number(row[a]) + "," + csv_number(row[b]) + "," + csv_number(row[c]) + "," +
            csv_number(row[ft]) + "," + csv_number(row[fs_]) + "," + csv_number(row[fa]) + "," +
            csv_number(std::fabs(row[fs_] - row[ft]) / den) + "," + csv_number(std::fabs(row[fa] - row[ft]) / den) + "\n";
    }
  }
  sink.write("f_crosscheck.csv", fx);

  // Bohr-Sommerfeld table
  std::string sp = "run,epsilon,k,lambda_direct,lambda_bs,diff\n";
  Chart schart{"Bohr-Sommerfeld: |lambda_direct - lambda_BS|", "k", "difference", false, true, {}};
  for (const Run& r : runs) {
    if (r.manifest["scenario"] != "spectrum") continue;
    for (double eps : epsilons(r)) {
      const std::string f = "spectrum_" + eps_tag(eps) + ".csv";
      if (!has_output(r, f)) throw ManifestMismatch(r.label + " lacks " + f);
      const Table t = read_csv(r.dir / f);
      const std::size_t ck = t.col("k"), cd = t.col("lambda_direct"), cb = t.col("lambda_bs"), cf = t.col("diff");
      Series s{r.label + " " + eps_tag(eps), {}, {}, false, {}};
      for (const auto& row : t.rows) {
        sp += cell(r.label) + "," + csv_number(eps) + "," + csv_number(row[ck]) + "," + csv_number(row[cd]) + "," +
              csv_number(row[cb]) + "," + csv_number(row[cf]) + "\n";
        s.x.push_back(row[ck]);
        s.y.push_back(std::fabs(row[cf]));
      }
      schart.series.push_back(std::move(s));
    }
  }
  sink.write("spectrum_table.csv", sp);
  sink.write("spectrum_table.svg", schart.render());

  // trapped-set cloud
  std::string lc = "run,x2,xi2,xi1_root,F_residual\n";
  Chart lchart{"Trapped set: (x2, xi2) colored by log10 xi1", "x2", "xi2", false, false, {}};
  for (const Run& r : runs) {
    if (r.manifest["scenario"] != "lambda") continue;
    const Table t = read_csv(r.dir / "lambda_cloud.csv");
    const std::size_t a = t.col("x2"), b = t.col("xi2"), c = t.col("xi1_root"), d = t.col("F_residual");
    Series s{r.label, {}, {}, true, {}};
    for (const auto& row : t.rows) {
      lc += cell(r.label) + "," + csv_number(row[a]) + "," + csv_number(row[b]) + "," + csv_number(row[c]) + "," +
            csv_number(row[d]) + "\n";
      s.x.push_back(row[a]);
      s.y.push_back(row[b]);
      s.color_value.push_back(std::log10(row[c]));
    }
    lchart.series.push_back(std::move(s));
  }
  sink.write("lambda_cloud.csv", lc);
  sink.write("lambda_cloud.svg", lchart.render());

  // no timings here, so regenerating from unchanged runs is byte-identical
  json m;
  m["tool"] = "rossbytrap";
  m["format"] = 1;
  m["scenario"] = "report";
  json in = json::array();
  for (const Run& r : runs)
    in.push_back({{"run", r.label}, {"scenario", r.manifest["scenario"]}, {"manifest_sha256", r.manifest_digest}});
  m["inputs"] = in;
  m["epsilons"] = eps_ref ? json(*eps_ref) : json(nullptr);
  sink.commit(m);
  return m;
}

}  // namespace rossbytrap::cli
