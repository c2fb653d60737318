#include "twolocus/table.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "twolocus/errors.hpp"

namespace twolocus {

using nlohmann::json;

namespace {

std::string key_bytes(const SampleConfig& s) {
  auto k = canonical_key(s);
  return std::string(k.begin(), k.end());
}

json matrix_json(const std::vector<Rational>& P, int K) {
  json rows = json::array();
  for (int i = 0; i < K; ++i) {
    json row = json::array();
    for (int j = 0; j < K; ++j) row.push_back(rational_to_string(P[i * K + j]));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Rational> matrix_from_json(const json& j, int K) {
  if (!j.is_array() || static_cast<int>(j.size()) != K) throw IntegrityError("table header: bad mutation matrix");
  std::vector<Rational> out;
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != K) throw IntegrityError("table header: bad mutation matrix");
    for (const auto& v : row) out.push_back(parse_rational(v.get<std::string>()));
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string record_line(const TableRecord& r) {
  json j;
  j["key"] = key_hex(canonical_key(r.sample));
  j["sample"] = r.sample.to_string();
  json cs = json::array();
  for (const auto& c : r.coeffs) cs.push_back(rational_to_string(c));
  j["coeffs"] = cs;
  return j.dump();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ModelParams TableHeader::model() const {
  return ModelParams(MutationModel(theta_a, P_a, K), MutationModel(theta_b, P_b, L));
}

void CoefficientTable::sort() {
  std::sort(records.begin(), records.end(),
            [](const TableRecord& x, const TableRecord& y) { return key_bytes(x.sample) < key_bytes(y.sample); });
}

const TableRecord& CoefficientTable::find(const SampleConfig& sample) const {
  auto k = key_bytes(sample);
  auto it = std::lower_bound(records.begin(), records.end(), k,
                             [](const TableRecord& r, const std::string& key) { return key_bytes(r.sample) < key; });
  if (it == records.end() || key_bytes(it->sample) != k) throw NotFoundError("sample " + sample.to_string() + " is not in the table");
  return *it;
}

CoefficientTable build_table(const ModelParams& params, int n_max, int M, const ExpansionOptions& opts) {
  if (n_max < 1) throw InvalidArgument("table needs n-max >= 1");
  if (M < 0) throw InvalidArgument("table needs M >= 0");
  if (params.has_selection()) throw UnsupportedError("coefficient tables cover neutral models only");
  CoefficientTable t;
  auto& h = t.header;
  h.K = params.locus_a().K();
  h.L = params.locus_b().K();
  h.theta_a = params.locus_a().theta();
  h.theta_b = params.locus_b().theta();
  h.P_a = params.locus_a().P();
  h.P_b = params.locus_b().P();
  h.M = M;
  h.n_max = n_max;
  SampleConfig largest = enumerate_samples(n_max, h.K, h.L).front();
  h.exact = resolve_exact(opts.arithmetic, largest, M, params);
  h.approx_g0 = resolve_approx(opts.approx, largest);
  EngineOptions eo = opts.engine;
  eo.approx_g0 = h.approx_g0;
  std::optional<GEngine<Rational>> ex;
  std::optional<GEngine<long double>> fl;
  if (h.exact)
    ex.emplace(params, eo);
  else
    fl.emplace(params, eo);
  for (int n = 1; n <= n_max; ++n)
    for (const auto& s : enumerate_samples(n, h.K, h.L)) {
      auto se = h.exact ? expand_with(*ex, s, M) : expand_with(*fl, s, M);
      t.records.push_back({s, se.coeffs});
    }
  t.sort();
  return t;
}

std::string serialize_table(const CoefficientTable& t) {
  std::string body;
  for (const auto& r : t.records) {
    body += record_line(r);
    body += '\n';
  }
  const auto& h = t.header;
  json j;
  j["format"] = "twolocus-coefficients";
  j["version"] = h.version;
  j["K"] = h.K;
  j["L"] = h.L;
  j["theta_a"] = rational_to_string(h.theta_a);
  j["theta_b"] = rational_to_string(h.theta_b);
  j["P_a"] = matrix_json(h.P_a, h.K);
  j["P_b"] = matrix_json(h.P_b, h.L);
  j["approx_g0"] = h.approx_g0;
  j["arithmetic"] = h.exact ? "exact" : "float";
  j["M"] = h.M;
  j["n_max"] = h.n_max;
  j["records"] = t.records.size();
  j["checksum"] = hex64(fnv1a64(body));
  return j.dump() + "\n" + body;
}

CoefficientTable parse_table(const std::string& text) {
  auto nl = text.find('\n');
  if (nl == std::string::npos) throw IntegrityError("table has no header line");
  json h;
  try {
    h = json::parse(text.substr(0, nl));
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("table header is not valid JSON: ") + e.what());
  }
  CoefficientTable t;
  std::string body = text.substr(nl + 1);
  try {
    if (!h.is_object() || h.value("format", "") != "twolocus-coefficients") throw IntegrityError("not a coefficient table");
    int version = h.at("version").get<int>();
    if (version != kTableVersion)
      throw UnsupportedError("table version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kTableVersion) + ")");
    auto& H = t.header;
    H.version = version;
    H.K = h.at("K").get<int>();
    H.L = h.at("L").get<int>();
    if (H.K < 1 || H.L < 1 || H.K > 16 || H.L > 16) throw IntegrityError("table header: bad allele counts");
    H.theta_a = parse_rational(h.at("theta_a").get<std::string>());
    H.theta_b = parse_rational(h.at("theta_b").get<std::string>());
    H.P_a = matrix_from_json(h.at("P_a"), H.K);
    H.P_b = matrix_from_json(h.at("P_b"), H.L);
    H.approx_g0 = h.at("approx_g0").get<bool>();
    std::string ar = h.at("arithmetic").get<std::string>();
    if (ar != "exact" && ar != "float") throw IntegrityError("table header: bad arithmetic tag");
    H.exact = ar == "exact";
    H.M = h.at("M").get<int>();
    H.n_max = h.at("n_max").get<int>();
    auto count = h.at("records").get<std::size_t>();
    if (h.at("checksum").get<std::string>() != hex64(fnv1a64(body))) throw IntegrityError("table checksum mismatch");
    std::istringstream in(body);
    std::string line;
    std::string prev;
    while (std::getline(in, line)) {
      json r = json::parse(line);
      TableRecord rec;
      rec.sample = SampleConfig::parse(r.at("sample").get<std::string>());
      if (rec.sample.K() != H.K || rec.sample.L() != H.L) throw IntegrityError("record dimensions disagree with the header");
      if (r.at("key").get<std::string>() != key_hex(canonical_key(rec.sample))) throw IntegrityError("record key does not match its sample");
      for (const auto& c : r.at("coeffs")) rec.coeffs.push_back(parse_rational(c.get<std::string>()));
      if (static_cast<int>(rec.coeffs.size()) != H.M + 1) throw IntegrityError("record has the wrong number of coefficients");
      auto k = key_bytes(rec.sample);
      if (!t.records.empty() && !(prev < k)) throw IntegrityError("records are not in ascending key order");
      prev = k;
      t.records.push_back(std::move(rec));
    }
    if (t.records.size() != count) throw IntegrityError("record count disagrees with the header");
    (void)H.model();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed table: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IntegrityError(std::string("malformed table: ") + e.what());
  }
  return t;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path);
  }
}

void write_table(const CoefficientTable& t, const std::string& path) { atomic_write(path, serialize_table(t)); }

CoefficientTable read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

}  // namespace twolocus
