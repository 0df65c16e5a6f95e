#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace platoon {

// Weighted undirected communication topology among n vehicles. Vehicle labels
// are 1-based at every external interface and map to indices 0..n-1 inside.
struct Graph {
  int n = 0;
  Eigen::MatrixXd weights;  // symmetric, zero diagonal, entries >= 0
};

struct SpectralData {
  Eigen::VectorXd eigenvalues;   // ascending; eigenvalues(0) == 0 when connected
  Eigen::MatrixXd eigenvectors;  // orthogonal; column 0 fixed to +1/sqrt(n)
};

Graph build_complete(int n, double k);
Graph build_path(int n, double k);
// circulant ring: node i linked with weight k to i+-1, ..., i+-p (mod n)
Graph build_p_cycle(int n, int p, double k);
// edges given as {i, j, weight} with 1-based labels
Graph build_from_edges(int n, const std::vector<std::array<double, 3>>& edges);

bool is_connected(const Graph& g);
void validate_graph(const Graph& g);
Eigen::MatrixXd laplacian(const Graph& g);
SpectralData spectral(const Graph& g);

// {"n": int, "edges": [[i, j, k], ...]} with 1-based labels
std::string graph_to_json(const Graph& g);
Graph graph_from_json(const std::string& text);

}  // namespace platoon
