#include "gtvmin/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "gtvmin/errors.hpp"
#include "gtvmin/format.hpp"

namespace gtvmin {

namespace {

constexpr double kDisconnectedTol = 1e-9;

std::vector<double> laplacian_spectrum(const SimilarityGraph &graph) {
  const Eigen::MatrixXd L = laplacian(graph);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("Laplacian eigendecomposition failed to converge");
  const Eigen::VectorXd &ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

} // namespace

SimilarityGraph::SimilarityGraph(Index n, std::vector<Edge> edges)
    : n_(n), adjacency_(n), degree_(n, 0.0) {
  if (n == 0)
    throw ValidationError("graph must have at least one node");
  for (Edge &e : edges) {
    if (e.u >= n || e.v >= n)
      throw ValidationError("edge {" + std::to_string(e.u) + "," +
                            std::to_string(e.v) + "} has a node index >= " +
                            std::to_string(n));
    if (e.u == e.v)
      throw ValidationError("self-loop at node " + std::to_string(e.u));
    if (!std::isfinite(e.weight) || e.weight <= 0.0)
      throw ValidationError("edge {" + std::to_string(e.u) + "," +
                            std::to_string(e.v) + "} has non-positive weight");
    if (e.u > e.v)
      std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge &a, const Edge &b) {
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  });
  for (const Edge &e : edges) {
    if (!edges_.empty() && edges_.back().u == e.u && edges_.back().v == e.v) {
      if (edges_.back().weight != e.weight)
        throw ValidationError("edge {" + std::to_string(e.u) + "," +
                              std::to_string(e.v) +
                              "} inserted twice with different weights");
      continue;
    }
    edges_.push_back(e);
  }
  for (const Edge &e : edges_) {
    adjacency_[e.u].push_back({e.v, e.weight});
    adjacency_[e.v].push_back({e.u, e.weight});
    degree_[e.u] += e.weight;
    degree_[e.v] += e.weight;
  }
}

std::span<const Neighbor> SimilarityGraph::neighbors(Index i) const {
  return adjacency_.at(i);
}

double SimilarityGraph::max_degree() const {
  return *std::max_element(degree_.begin(), degree_.end());
}

double SimilarityGraph::total_weight() const {
  double sum = 0.0;
  for (const Edge &e : edges_)
    sum += e.weight;
  return sum;
}

void ClusterSpec::validate(Index node_count) const {
  if (members.empty())
    throw ValidationError("cluster has no members");
  std::set<Index> seen;
  for (Index m : members) {
    if (m >= node_count)
      throw ValidationError("cluster member " + std::to_string(m) +
                            " out of range for " + std::to_string(node_count) +
                            " nodes");
    if (!seen.insert(m).second)
      throw ValidationError("cluster member " + std::to_string(m) +
                            " listed twice");
  }
  if (epsilon && !(*epsilon >= 0.0))
    throw ValidationError("cluster epsilon must be non-negative");
}

bool ClusterSpec::contains(Index node) const {
  return std::find(members.begin(), members.end(), node) != members.end();
}

Eigen::MatrixXd laplacian(const SimilarityGraph &graph) {
  const Index n = graph.node_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const Edge &e : graph.edges()) {
    L(e.u, e.v) -= e.weight;
    L(e.v, e.u) -= e.weight;
    L(e.u, e.u) += e.weight;
    L(e.v, e.v) += e.weight;
  }
  return L;
}

SimilarityGraph induced_subgraph(const SimilarityGraph &graph,
                                 const ClusterSpec &cluster) {
  cluster.validate(graph.node_count());
  std::vector<std::optional<Index>> local(graph.node_count());
  for (Index k = 0; k < cluster.members.size(); ++k)
    local[cluster.members[k]] = k;
  std::vector<Edge> edges;
  for (const Edge &e : graph.edges()) {
    if (local[e.u] && local[e.v])
      edges.push_back({*local[e.u], *local[e.v], e.weight});
  }
  return SimilarityGraph(cluster.members.size(), std::move(edges));
}

double lambda2(const SimilarityGraph &graph) {
  if (graph.node_count() < 2)
    throw ValidationError("lambda2 needs a graph with at least two nodes");
  return std::max(0.0, laplacian_spectrum(graph)[1]);
}

double lambda_max(const SimilarityGraph &graph) {
  if (graph.edges().empty())
    return 0.0;
  return laplacian_spectrum(graph).back();
}

Connectivity algebraic_connectivity(const SimilarityGraph &graph) {
  Connectivity c;
  c.lambda2 = lambda2(graph);
  c.disconnected = c.lambda2 <= kDisconnectedTol * graph.max_degree();
  return c;
}

double cluster_boundary(const SimilarityGraph &graph, const ClusterSpec &cluster) {
  cluster.validate(graph.node_count());
  std::vector<bool> inside(graph.node_count(), false);
  for (Index m : cluster.members)
    inside[m] = true;
  double sum = 0.0;
  for (const Edge &e : graph.edges())
    if (inside[e.u] != inside[e.v])
      sum += e.weight;
  return sum;
}

double cluster_interior_weight(const SimilarityGraph &graph,
                               const ClusterSpec &cluster) {
  cluster.validate(graph.node_count());
  std::vector<bool> inside(graph.node_count(), false);
  for (Index m : cluster.members)
    inside[m] = true;
  double sum = 0.0;
  for (const Edge &e : graph.edges())
    if (inside[e.u] && inside[e.v])
      sum += e.weight;
  return sum;
}

void PlantedPartitionParams::validate() const {
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw ValidationError("edge probabilities must lie in [0, 1]");
  if (p_out > p_in)
    throw ValidationError("p_out must not exceed p_in");
  if (!(w_in > 0.0) || !(w_out > 0.0) || !std::isfinite(w_in) ||
      !std::isfinite(w_out))
    throw ValidationError("edge weights w_in and w_out must be positive");
}

PlantedGraph generate_planted_clusters(std::uint64_t seed,
                                       std::span<const Index> cluster_sizes,
                                       const PlantedPartitionParams &params) {
  params.validate();
  if (cluster_sizes.empty())
    throw ValidationError("at least one cluster size is required");
  std::vector<ClusterSpec> clusters;
  std::vector<Index> label;
  for (Index size : cluster_sizes) {
    if (size == 0)
      throw ValidationError("cluster sizes must be positive");
    ClusterSpec c;
    for (Index k = 0; k < size; ++k) {
      c.members.push_back(label.size());
      label.push_back(clusters.size());
    }
    clusters.push_back(std::move(c));
  }
  const Index n = label.size();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const bool same = label[i] == label[j];
      // One draw per pair regardless of outcome keeps the stream aligned.
      const double u = unit(rng);
      if (u < (same ? params.p_in : params.p_out))
        edges.push_back({i, j, same ? params.w_in : params.w_out});
    }
  }
  return {SimilarityGraph(n, std::move(edges)), std::move(clusters)};
}

SimilarityGraph graph_from_embedding(const Embedding &embedding, Index k,
                                     double sigma) {
  const Index n = embedding.vectors.size();
  if (n == 0)
    throw ValidationError("embedding has no vectors");
  if (k >= n)
    throw ValidationError("neighbour count k must be smaller than node count");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ValidationError("kernel width sigma must be positive");
  const Eigen::Index dim = embedding.vectors.front().size();
  for (const auto &z : embedding.vectors) {
    if (z.size() != dim)
      throw ValidationError("embedding vectors differ in dimension");
    if (!z.allFinite())
      throw ValidationError("embedding contains non-finite entries");
  }

  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> chosen;
  std::vector<std::pair<double, Index>> dist(n);
  for (Index i = 0; i < n; ++i) {
    dist.clear();
    for (Index j = 0; j < n; ++j)
      if (j != i)
        dist.emplace_back((embedding.vectors[i] - embedding.vectors[j]).squaredNorm(), j);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                      dist.end());
    for (Index r = 0; r < k; ++r) {
      const Index j = dist[r].second;
      if (chosen.emplace(std::min(i, j), std::max(i, j)).second)
        edges.push_back({i, j, std::exp(-dist[r].first / (sigma * sigma))});
    }
  }
  // Weights may underflow to zero for far-apart points; such pairs carry no
  // similarity and are dropped.
  std::erase_if(edges, [](const Edge &e) { return !(e.weight > 0.0); });
  return SimilarityGraph(n, std::move(edges));
}

void write_graph(std::ostream &out, const SimilarityGraph &graph) {
  out << graph.node_count() << '\n';
  for (const Edge &e : graph.edges())
    out << e.u << ' ' << e.v << ' ' << format_real(e.weight) << '\n';
}

void write_graph(const std::filesystem::path &path, const SimilarityGraph &graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  write_graph(out, graph);
  if (!out)
    throw IoError("failed writing " + path.string());
}

SimilarityGraph read_graph(std::istream &in) {
  std::string line;
  auto next_line = [&](std::string &dst) {
    while (std::getline(in, dst)) {
      if (!dst.empty() && dst.back() == '\r')
        dst.pop_back();
      if (dst.find_first_not_of(" \t") != std::string::npos)
        return true;
    }
    return false;
  };
  if (!next_line(line))
    throw ValidationError("graph file is empty");
  std::istringstream header(line);
  std::string tok, extra;
  header >> tok;
  if (header >> extra)
    throw ValidationError("graph header must contain only the node count");
  const auto n = static_cast<Index>(parse_count(tok, "graph header"));
  if (n == 0)
    throw ValidationError("graph must have at least one node");

  std::vector<Edge> edges;
  std::set<std::pair<Index, Index>> seen;
  Index line_no = 1;
  while (next_line(line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string a, b, w;
    if (!(fields >> a >> b >> w) || (fields >> extra))
      throw ValidationError("graph line " + std::to_string(line_no) +
                            ": expected `i j weight`");
    Edge e{static_cast<Index>(parse_count(a, "graph edge")),
           static_cast<Index>(parse_count(b, "graph edge")),
           parse_real(w, "graph edge weight")};
    if (e.u == e.v)
      throw ValidationError("graph line " + std::to_string(line_no) + ": self-loop");
    if (!seen.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second)
      throw ValidationError("graph line " + std::to_string(line_no) +
                            ": duplicate edge");
    edges.push_back(e);
  }
  return SimilarityGraph(n, std::move(edges));
}

SimilarityGraph read_graph(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open graph file " + path.string());
  return read_graph(in);
}

} // namespace gtvmin
