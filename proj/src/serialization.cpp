#include "recon/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace recon {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw InputError(std::string("malformed JSON in ") + what);
  return j;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = nr ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (Eigen::Index r = 0; r < nr; ++r) {
    if (static_cast<Eigen::Index>(rows[r].size()) != nc) throw InputError("ragged matrix rows");
    for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

json points_to_json(const std::vector<PointRep>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(vec_to_json(p.coords));
  return a;
}

std::vector<PointRep> points_from_json(const json& a) {
  std::vector<PointRep> pts;
  pts.reserve(a.size());
  for (const auto& row : a) pts.push_back({vec_from_json(row)});
  return pts;
}

json spec_to(const ManifoldSpec& spec) {
  json j;
  switch (spec.kind) {
    case ManifoldKind::FlatTorus:
      j["kind"] = "flat_torus";
      j["basis"] = mat_to_json(spec.basis);
      break;
    case ManifoldKind::Sphere:
      j["kind"] = "sphere";
      j["radius"] = spec.radius;
      j["n"] = spec.n;
      break;
    case ManifoldKind::MeshGraph: {
      j["kind"] = "mesh";
      json verts = json::array();
      for (const auto& v : spec.mesh.vertices) verts.push_back(vec_to_json(v));
      j["vertices"] = std::move(verts);
      json edges = json::array();
      for (const auto& e : spec.mesh.edges) edges.push_back(json::array({e.a, e.b, e.weight}));
      j["edges"] = std::move(edges);
      break;
    }
  }
  return j;
}

ManifoldSpec spec_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "flat_torus") return ManifoldSpec::flat_torus(mat_from_json(j.at("basis")));
  if (kind == "sphere") return ManifoldSpec::sphere(j.at("radius").get<double>(), j.at("n").get<int>());
  if (kind == "mesh") {
    MeshData mesh;
    for (const auto& v : j.at("vertices")) mesh.vertices.push_back(vec_from_json(v));
    for (const auto& e : j.at("edges"))
      mesh.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    return ManifoldSpec::mesh_graph(std::move(mesh));
  }
  throw InputError("unknown manifold kind: " + kind);
}

json params_to(const ReconstructionParams& p) {
  json j;
  j["bounds"] = {{"lambda", p.bounds.lambda}, {"R", p.bounds.R}, {"n", p.bounds.n}};
  j["eps0"] = p.eps0;
  j["eps1"] = p.eps1;
  j["sigma"] = p.sigma;
  j["s_exponent"] = p.s_exponent;
  j["rho_exponent"] = p.rho_exponent;
  j["neighborhood_exponent"] = p.neighborhood_exponent;
  j["rho0"] = p.rho0;
  j["c1_threshold"] = p.c1_threshold;
  j["C17"] = p.C17;
  j["constants"] = p.constants;
  return j;
}

ReconstructionParams params_from(const json& j) {
  ReconstructionParams p;
  const auto& b = j.at("bounds");
  p.bounds = {b.at("lambda").get<double>(), b.at("R").get<double>(), b.at("n").get<int>()};
  p.eps0 = j.at("eps0").get<double>();
  p.eps1 = j.at("eps1").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.s_exponent = j.at("s_exponent").get<double>();
  p.rho_exponent = j.at("rho_exponent").get<double>();
  p.neighborhood_exponent = j.at("neighborhood_exponent").get<double>();
  p.rho0 = j.at("rho0").get<double>();
  p.c1_threshold = j.at("c1_threshold").get<double>();
  p.C17 = j.at("C17").get<double>();
  p.constants = j.at("constants").get<std::map<std::string, double>>();
  return p;
}

json chart_to(const LocalChart& c) {
  json j;
  j["center"] = c.center_index;
  j["constellation"] = {
      {"p0", c.constellation.p0_index},
      {"p", c.constellation.p_indices},
      {"q", c.constellation.q_indices},
      {"case", c.constellation.case_tag == CaseTag::Outer ? "outer" : "inner"},
  };
  j["steps"] = c.step_indices;
  j["gram"] = mat_to_json(c.gram);
  j["gram_inverse"] = mat_to_json(c.gram_inverse);
  j["s"] = c.s_value;
  return j;
}

LocalChart chart_from(const json& j) {
  LocalChart c;
  c.center_index = j.at("center").get<int>();
  const auto& k = j.at("constellation");
  c.constellation.p0_index = k.at("p0").get<int>();
  c.constellation.p_indices = k.at("p").get<std::vector<int>>();
  c.constellation.q_indices = k.at("q").get<std::vector<int>>();
  const std::string tag = k.at("case").get<std::string>();
  if (tag != "outer" && tag != "inner") throw InputError("unknown chart case: " + tag);
  c.constellation.case_tag = tag == "outer" ? CaseTag::Outer : CaseTag::Inner;
  c.step_indices = j.at("steps").get<std::vector<int>>();
  c.gram = mat_from_json(j.at("gram"));
  c.gram_inverse = mat_from_json(j.at("gram_inverse"));
  c.s_value = j.at("s").get<double>();
  return c;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InputError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string spec_to_json(const ManifoldSpec& spec) { return spec_to(spec).dump(2); }

ManifoldSpec spec_from_json(const std::string& text) { return spec_from(parse(text, "manifold spec")); }

std::string params_to_json(const ReconstructionParams& params) { return params_to(params).dump(2); }

ReconstructionParams params_from_json(const std::string& text) {
  return params_from(parse(text, "params"));
}

std::string params_hash(const ReconstructionParams& params) {
  const std::string canon = params_to(params).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

void save_bundle(const DataBundle& bundle, const std::filesystem::path& path) {
  json j;
  j["net_y"] = {
      {"points", points_to_json(bundle.net_y.points)},
      {"anchor", bundle.net_y.anchor_index},
      {"ball_center", vec_to_json(bundle.net_y.ball_center.coords)},
      {"ball_radius", bundle.net_y.ball_radius},
  };
  json vectors = json::array();
  for (const auto& v : bundle.vectors) vectors.push_back(v.values);
  j["vectors"] = std::move(vectors);
  j["params"] = params_to(bundle.params);
  if (bundle.provenance) {
    j["provenance"] = {
        {"spec", spec_to(bundle.provenance->spec)},
        {"x_points", points_to_json(bundle.provenance->x_points)},
        {"report_indices", bundle.provenance->report_indices},
    };
  }
  atomic_write_text(path, j.dump());
}

DataBundle load_bundle(const std::filesystem::path& path) {
  const json j = parse(read_text(path), "data bundle");
  DataBundle b;
  const auto& ny = j.at("net_y");
  b.net_y.points = points_from_json(ny.at("points"));
  b.net_y.anchor_index = ny.at("anchor").get<int>();
  b.net_y.ball_center = {vec_from_json(ny.at("ball_center"))};
  b.net_y.ball_radius = ny.at("ball_radius").get<double>();
  for (const auto& row : j.at("vectors")) b.vectors.push_back({row.get<std::vector<double>>()});
  b.params = params_from(j.at("params"));
  if (j.contains("provenance")) {
    const auto& pj = j.at("provenance");
    Provenance prov;
    prov.spec = spec_from(pj.at("spec"));
    prov.x_points = points_from_json(pj.at("x_points"));
    prov.report_indices = pj.at("report_indices").get<std::vector<int>>();
    b.provenance = std::move(prov);
  }
  b.validate();
  return b;
}

std::string chart_to_json(const LocalChart& chart) { return chart_to(chart).dump(2); }

LocalChart chart_from_json(const std::string& text) { return chart_from(parse(text, "chart")); }

void save_charts(const std::map<int, LocalChart>& charts, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& [center, chart] : charts) arr.push_back(chart_to(chart));
  atomic_write_text(path, json{{"charts", std::move(arr)}}.dump());
}

std::map<int, LocalChart> load_charts(const std::filesystem::path& path) {
  const json j = parse(read_text(path), "chart set");
  std::map<int, LocalChart> charts;
  for (const auto& cj : j.at("charts")) {
    LocalChart c = chart_from(cj);
    charts.emplace(c.center_index, std::move(c));
  }
  return charts;
}

void save_matrix(const DistanceMatrix& matrix, const ReconstructionParams& params,
                 const std::filesystem::path& csv_path) {
  std::string csv = "i,j,value\n";
  std::map<int, std::size_t> histogram;
  for (std::size_t s = 0; s < matrix.sources.size(); ++s)
    for (int v = 0; v < matrix.node_count; ++v) {
      if (!std::isfinite(matrix.values[s][v])) continue;
      csv += std::to_string(matrix.sources[s]);
      csv += ',';
      csv += std::to_string(v);
      csv += ',';
      csv += fmt17(matrix.values[s][v]);
      csv += '\n';
      ++histogram[matrix.hops[s][v]];
    }
  atomic_write_text(csv_path, csv);

  json side;
  side["node_count"] = matrix.node_count;
  side["node_ids"] = matrix.node_ids;
  side["sources"] = matrix.sources;
  side["hops"] = matrix.hops;
  side["parents"] = matrix.parents;
  json unreachable = json::array();
  for (auto [a, b] : matrix.unreachable) unreachable.push_back(json::array({a, b}));
  side["unreachable"] = std::move(unreachable);
  json hist;
  for (auto [h, c] : histogram) hist[std::to_string(h)] = c;
  side["hop_histogram"] = std::move(hist);
  side["params_hash"] = params_hash(params);
  atomic_write_text(csv_path.string() + ".json", side.dump());
}

DistanceMatrix load_matrix(const std::filesystem::path& csv_path) {
  const json side = parse(read_text(csv_path.string() + ".json"), "matrix sidecar");
  DistanceMatrix m;
  m.node_count = side.at("node_count").get<int>();
  m.node_ids = side.at("node_ids").get<std::vector<int>>();
  m.sources = side.at("sources").get<std::vector<int>>();
  m.hops = side.at("hops").get<std::vector<std::vector<int>>>();
  m.parents = side.at("parents").get<std::vector<std::vector<int>>>();
  for (const auto& p : side.at("unreachable")) m.unreachable.push_back({p.at(0).get<int>(), p.at(1).get<int>()});

  std::map<int, std::size_t> row_of;
  for (std::size_t s = 0; s < m.sources.size(); ++s) row_of[m.sources[s]] = s;
  m.values.assign(m.sources.size(),
                  std::vector<double>(m.node_count, std::numeric_limits<double>::infinity()));

  std::ifstream in(csv_path);
  if (!in) throw InputError("cannot open " + csv_path.string());
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int i = 0, v = 0;
    char value[64] = {0};
    if (std::sscanf(line.c_str(), "%d,%d,%63s", &i, &v, value) != 3)
      throw InputError("malformed matrix CSV row: " + line);
    auto it = row_of.find(i);
    if (it == row_of.end() || v < 0 || v >= m.node_count)
      throw InputError("matrix CSV row outside the sidecar extents: " + line);
    m.values[it->second][v] = std::strtod(value, nullptr);
  }
  return m;
}

void save_kernel_samples(const KernelSampleSet& samples, const std::filesystem::path& json_path) {
  samples.validate();
  auto bin_path = json_path;
  bin_path.replace_extension(".bin");

  std::string raw;
  raw.reserve(sizeof(double) * samples.Z() * samples.Jy() * samples.T());
  for (const auto& per_y : samples.log_values)
    for (const auto& per_t : per_y)
      raw.append(reinterpret_cast<const char*>(per_t.data()), sizeof(double) * per_t.size());
  atomic_write_text(bin_path, raw);

  json j;
  j["y_indices"] = samples.y_indices;
  j["z_points"] = points_to_json(samples.z_points);
  j["times"] = samples.times;
  j["sigma"] = samples.sigma;
  j["case"] = samples.case_tag == KernelCaseTag::FullSources ? "full_sources" : "separated_sources";
  j["values_file"] = bin_path.filename().string();
  j["count"] = samples.Z() * samples.Jy() * samples.T();
  atomic_write_text(json_path, j.dump());
}

KernelSampleSet load_kernel_samples(const std::filesystem::path& json_path) {
  const json j = parse(read_text(json_path), "kernel samples");
  KernelSampleSet s;
  s.y_indices = j.at("y_indices").get<std::vector<int>>();
  s.z_points = points_from_json(j.at("z_points"));
  s.times = j.at("times").get<std::vector<double>>();
  s.sigma = j.at("sigma").get<double>();
  const std::string tag = j.at("case").get<std::string>();
  if (tag != "full_sources" && tag != "separated_sources")
    throw InputError("unknown kernel case tag: " + tag);
  s.case_tag = tag == "full_sources" ? KernelCaseTag::FullSources : KernelCaseTag::SeparatedSources;

  const auto bin_path = json_path.parent_path() / j.at("values_file").get<std::string>();
  const std::string raw = read_text(bin_path);
  const auto count = j.at("count").get<std::size_t>();
  if (raw.size() != count * sizeof(double) ||
      count != static_cast<std::size_t>(s.Z()) * s.Jy() * s.T())
    throw InputError("kernel sample sidecar size mismatch");

  const auto* cursor = reinterpret_cast<const double*>(raw.data());
  s.log_values.assign(s.Z(), std::vector<std::vector<double>>(s.Jy(), std::vector<double>(s.T())));
  for (auto& per_y : s.log_values)
    for (auto& per_t : per_y) {
      std::memcpy(per_t.data(), cursor, sizeof(double) * per_t.size());
      cursor += per_t.size();
    }
  s.validate();
  return s;
}

} // namespace recon
