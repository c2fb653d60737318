// twolocus command-line front end. Talks to the library only through twolocus.h.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twolocus/twolocus.h"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kCapacity = 3, kNumeric = 4 };

struct CliError {
  int code;
  std::string msg;
};

int exit_for(tl_status s) {
  switch (s) {
    case TL_OK: return kOk;
    case TL_ERR_INVALID_ARGUMENT:
    case TL_ERR_UNSUPPORTED: return kUsage;
    case TL_ERR_CAPACITY: return kCapacity;
    case TL_ERR_NUMERIC: return kNumeric;
    default: return kFailure;
  }
}

void check(tl_status s) {
  if (s != TL_OK) throw CliError{exit_for(s), tl_last_error()};
}

std::string take(char* p) {
  std::string s(p ? p : "");
  tl_string_free(p);
  return s;
}

struct ModelDeleter {
  void operator()(tl_model* m) const { tl_model_free(m); }
};
struct SeriesDeleter {
  void operator()(tl_series* s) const { tl_series_free(s); }
};
struct TableDeleter {
  void operator()(tl_table* t) const { tl_table_free(t); }
};
using ModelPtr = std::unique_ptr<tl_model, ModelDeleter>;
using SeriesPtr = std::unique_ptr<tl_series, SeriesDeleter>;
using TablePtr = std::unique_ptr<tl_table, TableDeleter>;

struct Common {
  std::string model = "paper-pim";
  std::string theta_a, theta_b;
  std::string selection;
  std::string format = "csv";
  std::string out;
  std::string approx = "auto";
  std::string arithmetic = "auto";
  double eps = 25;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError{kFailure, "cannot read " + path};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelPtr make_model(const Common& c) {
  json spec;
  if (c.model == "paper-pim") {
    spec["preset"] = "paper-pim";
  } else {
    bool inline_json = !c.model.empty() && c.model[0] == '{';
    if (!inline_json && !std::filesystem::exists(c.model)) throw CliError{kUsage, "--model: unknown preset or missing file " + c.model};
    std::string text = inline_json ? c.model : read_file(c.model);
    try {
      spec = json::parse(text);
    } catch (const json::exception& e) {
      throw CliError{kUsage, std::string("--model: ") + e.what()};
    }
  }
  if (!c.theta_a.empty()) spec["theta_a"] = c.theta_a;
  if (!c.theta_b.empty()) spec["theta_b"] = c.theta_b;
  if (!c.selection.empty()) {
    const std::string prefix = "sigma=";
    if (c.selection.rfind(prefix, 0) != 0) throw CliError{kUsage, "--selection expects sigma=<matrix>"};
    try {
      spec["sigma"] = json::parse(c.selection.substr(prefix.size()));
    } catch (const json::exception& e) {
      throw CliError{kUsage, std::string("--selection: ") + e.what()};
    }
  }
  tl_model* m = nullptr;
  check(tl_model_create(spec.dump().c_str(), &m));
  return ModelPtr(m);
}

int approx_flag(const std::string& s) {
  if (s == "on") return TL_APPROX_ON;
  if (s == "off") return TL_APPROX_OFF;
  return TL_APPROX_AUTO;
}

int arith_flag(const std::string& s) {
  if (s == "exact") return TL_EXACT;
  if (s == "float") return TL_FLOAT;
  return TL_AUTO;
}

double parse_rho(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    double p = std::stod(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(text);
    std::string qs = text.substr(slash + 1);
    double q = std::stod(qs, &used);
    if (used != qs.size() || q == 0) throw std::invalid_argument(text);
    return p / q;
  } catch (const std::exception&) {
    throw CliError{kUsage, "bad rho '" + text + "' (rational or inf)"};
  }
}

// "25:200:25" (inclusive range) or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw CliError{kUsage, "rho range must be lo:hi:step"};
    double lo = parse_rho(parts[0]), hi = parse_rho(parts[1]), step = parse_rho(parts[2]);
    if (!(step > 0) || !(hi >= lo) || std::isinf(hi)) throw CliError{kUsage, "bad rho range"};
    for (int k = 0;; ++k) {
      double r = lo + k * step;
      if (r > hi * (1 + 1e-12)) break;
      out.push_back(r);
      if (out.size() > 100000) throw CliError{kUsage, "rho grid too large"};
    }
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(parse_rho(item));
  }
  if (out.empty()) throw CliError{kUsage, "empty rho grid"};
  return out;
}

std::string num(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) {
    if (ch == '"') o += '"';
    o += ch;
  }
  return o + "\"";
}

std::string join(const json& arr, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (i) s += sep;
    s += arr[i].is_string() ? arr[i].get<std::string>() : arr[i].dump();
  }
  return s;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  check(tl_write_atomic(c.out.c_str(), text.c_str()));
}

std::string series_json(tl_series* s) {
  char* p = nullptr;
  check(tl_series_json(s, &p));
  return take(p);
}

SeriesPtr expand(const tl_model* m, const std::string& sample, int M, const Common& c) {
  tl_series* s = nullptr;
  check(tl_expand(m, sample.c_str(), M, arith_flag(c.arithmetic), approx_flag(c.approx), &s));
  return SeriesPtr(s);
}

int cmd_coeffs(const Common& c, const std::string& sample, int all, int M, bool roots) {
  auto model = make_model(c);
  std::vector<std::string> samples;
  if (all > 0) {
    char* d = nullptr;
    check(tl_samples(model.get(), all, 0, &d));
    samples = json::parse(take(d)).get<std::vector<std::string>>();
  } else {
    if (sample.empty()) throw CliError{kUsage, "coeffs needs --sample or --all"};
    samples.push_back(sample);
  }
  json docs = json::array();
  for (const auto& s : samples) {
    auto series = expand(model.get(), s, M, c);
    json d = json::parse(series_json(series.get()));
    if (roots) {
      char* r = nullptr;
      check(tl_series_roots(series.get(), -1, -1, &r));
      d["approximants"] = json::parse(take(r))["approximants"];
    }
    docs.push_back(d);
  }
  std::ostringstream os;
  if (c.format == "csv") {
    os << "sample,key,k,coeff,value\n";
    for (const auto& d : docs)
      for (std::size_t k = 0; k < d["coeffs"].size(); ++k)
        os << csv_field(d["sample"].get<std::string>()) << ',' << d["key"].get<std::string>() << ',' << k << ','
           << d["coeffs"][k].get<std::string>() << ',' << num(d["values"][k]) << '\n';
    if (roots) {
      os << "\nsample,approximant,numerator_roots,denominator_roots\n";
      for (const auto& d : docs)
        for (const auto& a : d["approximants"]) {
          std::string nr, dr;
          if (!a["degenerate"].get<bool>()) {
            for (const auto& r : a["numerator_roots"]) nr += (nr.empty() ? "" : ";") + num(r["value"]);
            for (const auto& r : a["denominator_roots"]) dr += (dr.empty() ? "" : ";") + num(r["value"]);
          } else {
            nr = dr = "degenerate";
          }
          os << csv_field(d["sample"].get<std::string>()) << ',' << a["label"].get<std::string>() << ',' << nr << ',' << dr << '\n';
        }
    }
  } else {
    os << (all > 0 ? docs.dump() : docs[0].dump()) << '\n';
  }
  emit(c, os.str());
  return kOk;
}

int cmd_curve(const Common& c, const std::string& sample, int M, const std::string& rho, const std::string& methods) {
  if (methods.empty()) throw CliError{kUsage, "curve needs a non-empty --methods list"};
  auto model = make_model(c);
  auto grid = parse_grid(rho);
  auto series = expand(model.get(), sample, M, c);
  char* p = nullptr;
  check(tl_curve(series.get(), model.get(), grid.data(), grid.size(), methods.c_str(), c.eps, &p));
  json doc = json::parse(take(p));
  std::ostringstream os;
  if (c.format == "csv") {
    os << "rho,method,label,value,pole,diagnostics\n";
    for (const auto& pt : doc["points"])
      os << num(pt["rho"]) << ',' << pt["method"].get<std::string>() << ',' << csv_field(pt["label"].get<std::string>()) << ','
         << num(pt["value"]) << ',' << (pt["pole"].get<bool>() ? 1 : 0) << ',' << csv_field(join(pt["diagnostics"], "; "))
         << '\n';
  } else {
    os << doc.dump() << '\n';
  }
  emit(c, os.str());
  return kOk;
}

int cmd_error_study(const Common& c, int n, const std::string& rho, const std::string& methods) {
  auto model = make_model(c);
  double r = parse_rho(rho);
  char* p = nullptr;
  check(tl_error_study(model.get(), n, r, methods.c_str(), approx_flag(c.approx), c.eps, &p));
  json doc = json::parse(take(p));
  std::ostringstream os;
  if (c.format == "csv") {
    os << "method";
    for (const auto& t : doc["thresholds"]) os << ",phi_" << num(t);
    os << ",failed_weight\n";
    for (const auto& row : doc["rows"]) {
      os << row["method"].get<std::string>();
      for (const auto& v : row["phi"]) os << ',' << num(v);
      os << ',' << num(row["failed_weight"]) << '\n';
    }
  } else {
    os << doc.dump() << '\n';
  }
  emit(c, os.str());
  return kOk;
}

int cmd_table(const Common& c, int n_max, int M) {
  if (c.out.empty()) throw CliError{kUsage, "table needs --out"};
  auto model = make_model(c);
  check(tl_table_build(model.get(), n_max, M, arith_flag(c.arithmetic), approx_flag(c.approx), c.out.c_str()));
  return kOk;
}

int cmd_lookup(const Common& c, const std::string& table, const std::string& sample, const std::string& rho, std::string method) {
  tl_table* t = nullptr;
  check(tl_table_open(table.c_str(), &t));
  TablePtr tp(t);
  if (method.empty()) {
    char* h = nullptr;
    check(tl_table_header(t, &h));
    method = "pade:" + std::to_string(json::parse(take(h))["M"].get<int>());
  }
  char* p = nullptr;
  check(tl_table_lookup(t, sample.c_str(), method.c_str(), parse_rho(rho), c.eps, &p));
  json d = json::parse(take(p));
  std::ostringstream os;
  if (c.format == "csv") {
    os << "sample,rho,method,label,value,pole\n";
    os << csv_field(d["sample"].get<std::string>()) << ',' << num(d["rho"]) << ',' << d["method"].get<std::string>() << ','
       << d["label"].get<std::string>() << ',' << num(d["value"]) << ',' << (d["pole"].get<bool>() ? 1 : 0) << '\n';
  } else {
    os << d.dump() << '\n';
  }
  emit(c, os.str());
  return d["pole"].get<bool>() ? kNumeric : kOk;
}

int cmd_exact(const Common& c, const std::string& sample, const std::string& rho, const std::string& mode) {
  auto model = make_model(c);
  char* p = nullptr;
  check(tl_exact(model.get(), sample.c_str(), rho.c_str(), mode.c_str(), &p));
  json d = json::parse(take(p));
  std::ostringstream os;
  if (c.format == "csv") {
    if (mode == "symbolic") {
      os << "sample,numerator,denominator,limit_inf\n";
      os << csv_field(d["sample"].get<std::string>()) << ',' << csv_field(join(d["numerator"], " ")) << ','
         << csv_field(join(d["denominator"], " ")) << ',' << d["limit_inf"].get<std::string>() << '\n';
    } else {
      os << "sample,rho,value,approx\n";
      os << csv_field(d["sample"].get<std::string>()) << ',' << d["rho"].get<std::string>() << ','
         << (d.contains("value") ? d["value"].get<std::string>() : "") << ',' << num(d["approx"]) << '\n';
    }
  } else {
    os << d.dump() << '\n';
  }
  emit(c, os.str());
  return kOk;
}

void add_common(CLI::App* app, Common& c, bool with_model = true) {
  if (with_model) {
    app->add_option("--model", c.model, "preset name (paper-pim), inline JSON, or a JSON file")->capture_default_str();
    app->add_option("--theta-a", c.theta_a, "mutation rate at locus A (rational)");
    app->add_option("--theta-b", c.theta_b, "mutation rate at locus B (rational)");
    app->add_option("--selection", c.selection, "selection at locus A, sigma=[[s11,s12],[s21,s22]]");
    app->add_option("--approx-g0", c.approx, "drop g_u^(0) for u >= 4")
        ->check(CLI::IsMember({"on", "off", "auto"}))
        ->capture_default_str();
    app->add_option("--arithmetic", c.arithmetic, "coefficient arithmetic")
        ->check(CLI::IsMember({"exact", "float", "auto"}))
        ->capture_default_str();
  }
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  app->add_option("--out", c.out, "output file (written atomically); stdout if absent");
  app->add_option("--eps", c.eps, "defect window half-width")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-locus sampling distributions: asymptotic series, Pade approximants and exact solutions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tl_version()));

  Common c;
  std::string sample, rho = "inf", methods, table, method, mode = "rational";
  int M = 4, all = 0, n = 10, n_max = 4;
  bool roots = false;

  auto* coeffs = app.add_subcommand("coeffs", "series coefficients q_0..q_M");
  add_common(coeffs, c);
  coeffs->add_option("--sample", sample, "a=[..];b=[..];c=[[..],[..]]");
  coeffs->add_option("--all", all, "every (0,0,c) sample with |c| = N");
  coeffs->add_option("--M", M, "highest order")->check(CLI::Range(0, 60))->capture_default_str();
  coeffs->add_flag("--roots", roots, "add the staircase Pade root report");

  auto* curve = app.add_subcommand("curve", "likelihood curve over a rho grid");
  add_common(curve, c);
  curve->add_option("--sample", sample)->required();
  curve->add_option("--M", M)->check(CLI::Range(0, 60))->capture_default_str();
  curve->add_option("--rho", rho, "lo:hi:step or a comma list")->required();
  curve->add_option("--methods", methods, "ps:M, pade:M, otr, exact (comma list)")->required();

  auto* study = app.add_subcommand("error-study", "distribution of relative errors over dimorphic samples");
  add_common(study, c);
  study->add_option("--n", n, "sample size")->check(CLI::Range(2, 40))->capture_default_str();
  study->add_option("--rho", rho)->required();
  methods = "ps:0,ps:1,ps:2,pade:1,pade:2,pade:3,pade:4,pade:5";
  study->add_option("--methods", methods)->capture_default_str();

  auto* tab = app.add_subcommand("table", "write a coefficient table");
  add_common(tab, c);
  tab->add_option("--n-max", n_max, "largest |c|")->check(CLI::Range(1, 40))->capture_default_str();
  tab->add_option("--M", M)->check(CLI::Range(0, 60))->capture_default_str();

  auto* look = app.add_subcommand("lookup", "evaluate a stored sample");
  add_common(look, c, false);
  look->add_option("--table", table)->required();
  look->add_option("--sample", sample)->required();
  look->add_option("--rho", rho)->capture_default_str();
  look->add_option("--method", method, "ps:M, pade:M or otr (default pade at the stored M)");

  auto* ex = app.add_subcommand("exact", "exact solution of the recursion");
  add_common(ex, c);
  ex->add_option("--sample", sample)->required();
  ex->add_option("--rho", rho, "nonnegative rational (ignored for symbolic)");
  ex->add_option("--mode", mode)->check(CLI::IsMember({"rational", "float", "symbolic"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*coeffs) return cmd_coeffs(c, sample, all, M, roots);
    if (*curve) return cmd_curve(c, sample, M, rho, methods);
    if (*study) return cmd_error_study(c, n, rho, methods);
    if (*tab) return cmd_table(c, n_max, M);
    if (*look) return cmd_lookup(c, table, sample, rho, method);
    if (*ex) {
      if (mode != "symbolic" && !ex->count("--rho")) throw CliError{kUsage, "exact needs --rho"};
      return cmd_exact(c, sample, rho, mode);
    }
  } catch (const CliError& e) {
    std::cerr << "twolocus: " << e.msg << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "twolocus: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
