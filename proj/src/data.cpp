#include "gtvmin/data.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gtvmin/errors.hpp"
#include "gtvmin/format.hpp"

namespace gtvmin {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kMaxCenterRedraws = 1000;
// Offsets the graph stream from the data stream drawn with the same seed.
constexpr std::uint64_t kGraphSeedOffset = 0x9E3779B97F4A7C15ULL;

void check_dimension(const LocalDataset &ds, const Eigen::VectorXd &w) {
  if (static_cast<Index>(w.size()) != ds.dimension())
    throw ValidationError("parameter vector has dimension " +
                          std::to_string(w.size()) + ", dataset expects " +
                          std::to_string(ds.dimension()));
}

Eigen::VectorXd draw_on_sphere(std::mt19937_64 &rng, Index d, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(d);
  do {
    for (Index k = 0; k < d; ++k)
      v[k] = normal(rng);
  } while (v.norm() == 0.0);
  return radius * v / v.norm();
}

ordered_json to_json(const Eigen::VectorXd &v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k)
    arr.push_back(v[k]);
  return arr;
}

Eigen::VectorXd vector_from_json(const ordered_json &arr, Index d,
                                 const std::string &what) {
  if (!arr.is_array() || arr.size() != d)
    throw ValidationError(what + " must be an array of length " + std::to_string(d));
  Eigen::VectorXd v(d);
  for (Index k = 0; k < d; ++k) {
    if (!arr[k].is_number())
      throw ValidationError(what + " has a non-numeric entry");
    v[k] = arr[k].get<double>();
  }
  return v;
}

std::string node_file(Index i) { return "node_" + std::to_string(i) + ".csv"; }

void write_dataset(const std::filesystem::path &path, const LocalDataset &ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  for (Index r = 0; r < ds.sample_count(); ++r) {
    for (Index c = 0; c < ds.dimension(); ++c)
      out << format_real(ds.features(r, c)) << ',';
    out << format_real(ds.labels[r]) << '\n';
  }
  if (!out)
    throw IoError("failed writing " + path.string());
}

LocalDataset read_dataset(const std::filesystem::path &path, Index d) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open dataset file " + path.string());
  std::vector<double> values;
  Index rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::istringstream fields(line);
    std::string tok;
    Index cols = 0;
    while (std::getline(fields, tok, ',')) {
      values.push_back(parse_real(tok, path.filename().string()));
      ++cols;
    }
    if (cols != d + 1)
      throw ValidationError(path.filename().string() + " row " +
                            std::to_string(rows + 1) + " has " +
                            std::to_string(cols) + " columns, expected " +
                            std::to_string(d + 1));
    ++rows;
  }
  LocalDataset ds;
  ds.features.resize(rows, d);
  ds.labels.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < d; ++c)
      ds.features(r, c) = values[r * (d + 1) + c];
    ds.labels[r] = values[r * (d + 1) + d];
  }
  ds.validate();
  return ds;
}

} // namespace

void LocalDataset::validate() const {
  if (features.rows() < 1)
    throw ValidationError("local dataset needs at least one sample");
  if (features.cols() < 1)
    throw ValidationError("local dataset needs at least one feature");
  if (labels.size() != features.rows())
    throw ValidationError("label count does not match feature rows");
  if (!features.allFinite() || !labels.allFinite())
    throw ValidationError("local dataset contains non-finite values");
}

double quadratic_loss(const LocalDataset &ds, const Eigen::VectorXd &w) {
  check_dimension(ds, w);
  return (ds.labels - ds.features * w).squaredNorm() /
         static_cast<double>(ds.sample_count());
}

Eigen::VectorXd quadratic_loss_gradient(const LocalDataset &ds,
                                        const Eigen::VectorXd &w) {
  check_dimension(ds, w);
  return (2.0 / static_cast<double>(ds.sample_count())) *
         (ds.features.transpose() * (ds.features * w - ds.labels));
}

void ScenarioParams::validate() const {
  if (cluster_sizes.empty())
    throw ValidationError("cluster_sizes must not be empty");
  for (Index s : cluster_sizes)
    if (s == 0)
      throw ValidationError("cluster sizes must be positive");
  if (dimension < 1)
    throw ValidationError("dimension d must be at least 1");
  if (samples_per_node < 1)
    throw ValidationError("m_per_node must be at least 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw ValidationError("noise_std must be non-negative");
  if (!(separation > 0.0) || !std::isfinite(separation))
    throw ValidationError("separation must be positive");
  graph.validate();
}

void Scenario::validate() const {
  if (datasets.empty())
    throw ValidationError("scenario has no nodes");
  if (graph.node_count() != datasets.size())
    throw ValidationError("graph node count differs from dataset count");
  std::vector<bool> covered(datasets.size(), false);
  for (const LocalDataset &ds : datasets) {
    ds.validate();
    if (ds.dimension() != dimension)
      throw ValidationError("datasets do not share dimension d");
  }
  for (const ClusterSpec &c : clusters) {
    c.validate(datasets.size());
    if (c.reference_params && static_cast<Index>(c.reference_params->size()) != dimension)
      throw ValidationError("cluster reference parameters have wrong dimension");
    for (Index m : c.members)
      covered[m] = true;
  }
  for (Index i = 0; i < covered.size(); ++i)
    if (!covered[i])
      throw ValidationError("node " + std::to_string(i) + " belongs to no cluster");
}

Scenario generate_scenario(const ScenarioParams &params) {
  params.validate();
  const Index d = params.dimension;
  std::mt19937_64 rng(params.seed);

  PlantedGraph planted = generate_planted_clusters(
      params.seed + kGraphSeedOffset, params.cluster_sizes, params.graph);

  const double radius = 0.5 * params.separation * std::sqrt(static_cast<double>(d));
  std::vector<Eigen::VectorXd> centers;
  for (Index c = 0; c < params.cluster_sizes.size(); ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxCenterRedraws)
        throw ValidationError("could not place " +
                              std::to_string(params.cluster_sizes.size()) +
                              " cluster centres with separation " +
                              format_real(params.separation) + " in dimension " +
                              std::to_string(d));
      Eigen::VectorXd candidate = draw_on_sphere(rng, d, radius);
      bool ok = true;
      for (const auto &other : centers)
        ok = ok && (candidate - other).norm() >= params.separation;
      if (ok) {
        centers.push_back(std::move(candidate));
        break;
      }
    }
  }

  Scenario s;
  s.dimension = d;
  s.seed = params.seed;
  s.params = params;
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index m = params.samples_per_node;
  for (Index c = 0; c < planted.clusters.size(); ++c) {
    ClusterSpec &cluster = planted.clusters[c];
    double epsilon = 0.0;
    // Members are consecutive node ranges, so datasets append in node order.
    for (Index k = 0; k < cluster.members.size(); ++k) {
      LocalDataset ds;
      ds.features.resize(m, d);
      for (Index r = 0; r < m; ++r)
        for (Index k = 0; k < d; ++k)
          ds.features(r, k) = normal(rng);
      Eigen::VectorXd noise(m);
      for (Index r = 0; r < m; ++r)
        noise[r] = params.noise_std * normal(rng);
      ds.labels = ds.features * centers[c] + noise;
      // Recorded from the stored labels so that clustering_error at the
      // true centre reproduces epsilon to rounding.
      epsilon += (ds.labels - ds.features * centers[c]).squaredNorm() /
                 static_cast<double>(m);
      s.datasets.push_back(std::move(ds));
    }
    cluster.reference_params = centers[c];
    cluster.epsilon = epsilon;
  }
  s.graph = std::move(planted.graph);
  s.clusters = std::move(planted.clusters);
  return s;
}

double clustering_error(const Scenario &scenario, const ClusterSpec &cluster,
                        const Eigen::VectorXd &w_bar) {
  cluster.validate(scenario.node_count());
  double sum = 0.0;
  for (Index i : cluster.members)
    sum += quadratic_loss(scenario.datasets[i], w_bar);
  return sum;
}

void write_scenario(const std::filesystem::path &dir, const Scenario &scenario) {
  scenario.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  write_graph(dir / "graph.txt", scenario.graph);

  ordered_json meta;
  meta["n"] = scenario.node_count();
  meta["d"] = scenario.dimension;
  meta["seed"] = scenario.seed;
  ordered_json clusters = ordered_json::array();
  for (const ClusterSpec &c : scenario.clusters) {
    ordered_json jc;
    jc["members"] = c.members;
    if (c.reference_params)
      jc["w_bar"] = to_json(*c.reference_params);
    if (c.epsilon)
      jc["epsilon"] = *c.epsilon;
    clusters.push_back(std::move(jc));
  }
  meta["clusters"] = std::move(clusters);
  if (scenario.params) {
    const ScenarioParams &p = *scenario.params;
    ordered_json gen;
    gen["cluster_sizes"] = p.cluster_sizes;
    gen["m_per_node"] = p.samples_per_node;
    gen["noise_std"] = p.noise_std;
    gen["separation"] = p.separation;
    gen["p_in"] = p.graph.p_in;
    gen["p_out"] = p.graph.p_out;
    gen["w_in"] = p.graph.w_in;
    gen["w_out"] = p.graph.w_out;
    meta["generator"] = std::move(gen);
  }
  {
    const auto path = dir / "meta.json";
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw IoError("cannot open " + path.string() + " for writing");
    out << meta.dump(2) << '\n';
    if (!out)
      throw IoError("failed writing " + path.string());
  }
  for (Index i = 0; i < scenario.node_count(); ++i)
    write_dataset(dir / node_file(i), scenario.datasets[i]);
}

Scenario read_scenario(const std::filesystem::path &dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path, std::ios::binary);
  if (!in)
    throw IoError("cannot open scenario metadata " + meta_path.string());
  ordered_json meta;
  try {
    meta = ordered_json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }

  Scenario s;
  try {
    s.dimension = meta.at("d").get<Index>();
    s.seed = meta.value("seed", std::uint64_t{0});
    s.graph = read_graph(dir / "graph.txt");
    const Index n = meta.contains("n") ? meta.at("n").get<Index>() : s.graph.node_count();
    if (n != s.graph.node_count())
      throw ValidationError("meta.json node count differs from graph.txt");
    for (const auto &jc : meta.at("clusters")) {
      ClusterSpec c;
      c.members = jc.at("members").get<std::vector<Index>>();
      if (jc.contains("w_bar"))
        c.reference_params = vector_from_json(jc.at("w_bar"), s.dimension, "w_bar");
      if (jc.contains("epsilon"))
        c.epsilon = jc.at("epsilon").get<double>();
      s.clusters.push_back(std::move(c));
    }
    if (meta.contains("generator")) {
      const auto &g = meta.at("generator");
      ScenarioParams p;
      p.seed = s.seed;
      p.dimension = s.dimension;
      p.cluster_sizes = g.at("cluster_sizes").get<std::vector<Index>>();
      p.samples_per_node = g.at("m_per_node").get<Index>();
      p.noise_std = g.at("noise_std").get<double>();
      p.separation = g.at("separation").get<double>();
      p.graph = {g.at("p_in").get<double>(), g.at("p_out").get<double>(),
                 g.at("w_in").get<double>(), g.at("w_out").get<double>()};
      s.params = p;
    }
    for (Index i = 0; i < n; ++i)
      s.datasets.push_back(read_dataset(dir / node_file(i), s.dimension));
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(meta_path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

} // namespace gtvmin
