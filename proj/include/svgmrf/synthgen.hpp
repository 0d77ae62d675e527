#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace svgmrf {

using Rng = std::mt19937_64;

struct SynthConfig {
    Eigen::Index clusters = 5;
    Eigen::Index dimension = 250;
    Eigen::Index modules = 5;
    /// One entry per cluster, or a single entry applied to all clusters.
    std::vector<Eigen::Index> samples{250};
    std::uint64_t seed = 1;
    Eigen::Index ba_attach = 1;
    double perturb_prob = 0.5;
    std::pair<double, double> weight_range{0.4, 1.0};
    std::pair<double, double> perturb_range{-0.04, 0.04};
    double diag_factor = 1.1;

    void validate() const;
    Eigen::Index module_size() const { return dimension / modules; }
    Eigen::Index samples_for(Eigen::Index cluster) const;
};

/// Undirected simple graph as an edge list with u < v.
struct Graph {
    Eigen::Index nodes = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;

    std::vector<Eigen::Index> degrees() const;
    bool connected() const;
};

/// Preferential attachment: a seed clique on attach + 1 nodes, then each new
/// node links to `attach` distinct existing nodes chosen with probability
/// proportional to their current degree.
Graph barabasi_albert_module(Eigen::Index nodes, Eigen::Index attach, Rng& rng);

/// Edge weights uniform on [-hi, -lo] U [lo, hi]; each diagonal entry is
/// diag_factor times the absolute off-diagonal row sum (1 for an isolated
/// node).
Eigen::MatrixXd module_precision(const Graph& graph, Rng& rng, const SynthConfig& cfg);

/// Recomputes the diagonal of a symmetric block by the dominance rule.
void apply_diagonal_rule(Eigen::MatrixXd& block, double diag_factor);

/// Parent of each cluster in a uniform random labeled tree rooted at 0;
/// the root's parent is -1.
std::vector<Eigen::Index> build_cluster_tree(Eigen::Index clusters, Rng& rng);

/// Decodes a Pruefer sequence over nodes 0..n-1 into the tree's edges.
std::vector<std::pair<Eigen::Index, Eigen::Index>> pruefer_edges(const std::vector<Eigen::Index>& sequence,
                                                                 Eigen::Index nodes);

struct PerturbationLog {
    std::vector<Eigen::Index> reweighted;
    Eigen::Index regenerated = -1;
};

struct PerturbedChild {
    Eigen::MatrixXd precision;
    PerturbationLog log;
};

/// Type (i): each module independently with probability perturb_prob gets
/// a uniform perturb_range draw added to every nonzero off-diagonal entry,
/// then its diagonal is recomputed. Type (ii): one uniformly chosen module
/// is replaced by a fresh Barabasi-Albert block.
PerturbedChild perturb_child(const Eigen::MatrixXd& parent, Rng& rng, const SynthConfig& cfg);

/// Same as above with the regenerated module fixed by the caller.
PerturbedChild perturb_child(const Eigen::MatrixXd& parent, Rng& rng, const SynthConfig& cfg,
                             Eigen::Index regenerated_module);

/// n draws x = L^{-T} z with L L^T = precision and z standard normal.
Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& precision, Eigen::Index n, Rng& rng);

struct GroundTruth {
    std::vector<Eigen::MatrixXd> precision;
    std::vector<Eigen::Index> parent;
    std::vector<PerturbationLog> perturbations;
};

struct SynthInstance {
    SynthConfig config;
    GroundTruth truth;
    std::vector<Eigen::MatrixXd> samples;
};

/// Whole instance. Tree, per-cluster precision and per-cluster samples each
/// draw from their own stream derived from cfg.seed, so changing the sample
/// counts leaves the ground truth unchanged.
SynthInstance generate(const SynthConfig& cfg);

GroundTruth generate_truth(const SynthConfig& cfg);

Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index);

}  // namespace svgmrf
