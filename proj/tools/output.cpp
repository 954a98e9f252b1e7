#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "cli.hpp"
#include "rossbytrap/errors.hpp"

namespace rossbytrap::cli {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

// ---------------------------------------------------------------- digests

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

std::string sha256_file(const fs::path& p) { return sha256_hex(slurp(p)); }

// ---------------------------------------------------------------- sink

OutputSink::OutputSink(fs::path out_dir) : out_(std::move(out_dir)) {
  std::error_code ec;
  if (!fs::exists(out_)) {
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory " + out_.string() + ": " + ec.message());
    created_out_ = true;
  } else if (!fs::is_directory(out_)) {
    throw IoError(out_.string() + " exists and is not a directory");
  }
  stage_ = out_ / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(stage_, ec);
  fs::create_directory(stage_, ec);
  if (ec) throw IoError("cannot create staging directory in " + out_.string() + ": " + ec.message());
  // a stale manifest would claim completion for outputs this run replaces
  fs::remove(out_ / "manifest.json", ec);
}

OutputSink::~OutputSink() {
  std::error_code ec;
  fs::remove_all(stage_, ec);
  if (!committed_ && created_out_ && fs::is_empty(out_, ec)) fs::remove(out_, ec);
}

void OutputSink::write(const std::string& name, const std::string& bytes) {
  if (name.empty() || name.find('/') != std::string::npos || name == "manifest.json")
    throw IoError("invalid output name '" + name + "'");
  for (const auto& f : files_)
    if (f.first == name) throw IoError("output written twice: " + name);
  spit(stage_ / name, bytes);
  files_.emplace_back(name, sha256_hex(bytes));
}

void OutputSink::commit(json manifest) {
  std::sort(files_.begin(), files_.end());
  json outs = json::array();
  for (const auto& [name, digest] : files_) {
    std::error_code ec;
    fs::rename(stage_ / name, out_ / name, ec);
    if (ec) throw IoError("cannot move " + name + " into place: " + ec.message());
    outs.push_back({{"path", name}, {"sha256", digest}});
  }
  manifest["outputs"] = outs;
  manifest["status"] = "complete";
  const fs::path tmp = out_ / ".manifest.json.tmp";
  spit(tmp, manifest.dump(2) + "\n");
  std::error_code ec;
  fs::rename(tmp, out_ / "manifest.json", ec);
  if (ec) throw IoError("cannot write manifest: " + ec.message());
  committed_ = true;
}

// ---------------------------------------------------------------- snapshots

namespace {
constexpr char kMagic[8] = {'R', 'B', 'T', 'S', 'N', 'A', 'P', '1'};
constexpr std::size_t kHeader = 8 + 4 * 4 + 3 * 8;

template <class T>
void put(std::string& s, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

template <class T>
T take(const std::string& s, std::size_t& pos) {
  T v;
  std::memcpy(&v, s.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}
}  // namespace

std::string encode_snapshot(const StateField& U) {
  std::string s;
  s.reserve(kHeader + U.values.size() * 16);
  s.append(kMagic, 8);
  put<std::int32_t>(s, 1);
  put<std::int32_t>(s, 3);
  put<std::int32_t>(s, U.grid.N1);
  put<std::int32_t>(s, U.grid.N2);
  put<double>(s, U.grid.L1);
  put<double>(s, U.grid.epsilon);
  put<double>(s, U.time);
  for (const cdouble& z : U.values) {
    put<double>(s, z.real());
    put<double>(s, z.imag());
  }
  return s;
}

StateField decode_snapshot(const std::string& s) {
  if (s.size() < kHeader || std::memcmp(s.data(), kMagic, 8) != 0) throw IoError("not a field snapshot");
  std::size_t pos = 8;
  const auto version = take<std::int32_t>(s, pos);
  const auto comps = take<std::int32_t>(s, pos);
  Grid2D g;
  g.N1 = take<std::int32_t>(s, pos);
  g.N2 = take<std::int32_t>(s, pos);
  g.L1 = take<double>(s, pos);
  g.epsilon = take<double>(s, pos);
  const double t = take<double>(s, pos);
  if (version != 1 || comps != 3 || g.N1 < 1 || g.N2 < 1) throw IoError("unsupported snapshot header");
  const std::size_t n = 3 * static_cast<std::size_t>(g.N1) * g.N2;
  if (s.size() != kHeader + 16 * n) throw IoError("snapshot payload has the wrong size");
  StateField U(g);
  U.time = t;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = take<double>(s, pos);
    const double im = take<double>(s, pos);
    U.values[i] = {re, im};
  }
  return U;
}

StateField read_snapshot(const fs::path& p) { return decode_snapshot(slurp(p)); }

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string eps_tag(double eps) {
  char b[32];
  std::snprintf(b, sizeof b, "eps%.6g", eps);
  return b;
}

// ---------------------------------------------------------------- SVG

namespace {

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (int e = static_cast<int>(std::ceil(lo)); e <= static_cast<int>(std::floor(hi)); ++e) out.push_back(e);
    } else {
      for (int i = 0; i <= 4; ++i) out.push_back(lo + (hi - lo) * i / 4);
    }
    return out;
  }
};

Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* v : data)
    for (double x : *v) {
      if (!std::isfinite(x) || (log && x <= 0.0)) continue;
      const double y = log ? std::log10(x) : x;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  if (log) lo = std::floor(lo), hi = std::ceil(hi);
  return {lo, hi, log};
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string label(double v, bool log) {
  char b[32];
  if (log) std::snprintf(b, sizeof b, "1e%d", static_cast<int>(v));
  else std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(40 + 200 * t), b = static_cast<int>(220 - 180 * t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x50%02x", r, b);
  return buf;
}

}  // namespace

std::string Chart::render() const {
  const double W = 640, H = 420, L = 70, R = 160, T = 40, B = 50;
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = make_axis(xs, logx), ay = make_axis(ys, logy);
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" "
    << "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(W / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double px = ax.map(ax.log ? std::pow(10.0, t) : t, L, W - R);
    o << "<line x1=\"" << num(px) << "\" y1=\"" << H - B << "\" x2=\"" << num(px) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/><text x=\"" << num(px) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">"
      << label(t, ax.log) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(ay.log ? std::pow(10.0, t) : t, H - B, T);
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << num(py) << "\" x2=\"" << L << "\" y2=\"" << num(py)
      << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">"
      << label(t, ay.log) << "</text>\n";
  }
  o << "<text x=\"" << num((L + W - R) / 2) << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << esc(xlabel)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << num((T + H - B) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num((T + H - B) / 2) << ")\">" << esc(ylabel) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const std::string colour = kPalette[k % std::size(kPalette)];
    double cmin = 0.0, cmax = 1.0;
    if (!s.color_value.empty()) {
      cmin = *std::min_element(s.color_value.begin(), s.color_value.end());
      cmax = *std::max_element(s.color_value.begin(), s.color_value.end());
      if (cmax - cmin < 1e-300) cmax = cmin + 1.0;
    }
    std::string path;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) {
        if (!s.points) path += " ";  // break the line
        continue;
      }
      const double px = ax.map(s.x[i], L, W - R), py = ay.map(s.y[i], H - B, T);
      if (s.points) {
        const std::string c = s.color_value.empty() ? colour : ramp((s.color_value[i] - cmin) / (cmax - cmin));
        o << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"2\" fill=\"" << c << "\"/>\n";
      } else {
        path += (path.empty() || path.back() == ' ' ? "M" : "L") + num(px) + "," + num(py);
      }
    }
    if (!path.empty())
      o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
    const double ly = T + 14 + 16 * static_cast<double>(k);
    o << "<rect x=\"" << W - R + 10 << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\"" << colour
      << "\"/><text x=\"" << W - R + 26 << "\" y=\"" << num(ly + 1) << "\">" << esc(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace rossbytrap::cli
