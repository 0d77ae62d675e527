#include "svgmrf/synthgen.hpp"

#include "svgmrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace svgmrf {

using Eigen::Index;

void SynthConfig::validate() const {
    if (clusters < 1 || dimension < 1 || modules < 1) {
        throw InvalidArgument("clusters, dimension and modules must be positive");
    }
    if (dimension % modules != 0) {
        throw InvalidArgument("dimension must be divisible by the module count");
    }
    if (ba_attach < 1) {
        throw InvalidArgument("attachment count must be positive");
    }
    if (module_size() < ba_attach + 1) {
        throw InvalidArgument("modules must have at least attach + 1 nodes");
    }
    if (samples.empty() || (samples.size() != 1 && samples.size() != static_cast<std::size_t>(clusters))) {
        throw InvalidArgument("sample counts must have one entry or one per cluster");
    }
    for (const Index n : samples) {
        if (n < 1) {
            throw InvalidArgument("sample counts must be positive");
        }
    }
    if (!(perturb_prob >= 0.0 && perturb_prob <= 1.0)) {
        throw InvalidArgument("perturbation probability must lie in [0, 1]");
    }
    if (!(weight_range.first > 0.0 && weight_range.second >= weight_range.first)) {
        throw InvalidArgument("weight range must be a positive interval");
    }
    if (!(perturb_range.second >= perturb_range.first)) {
        throw InvalidArgument("perturbation range must be an interval");
    }
    if (!(diag_factor > 1.0)) {
        throw InvalidArgument("diagonal factor must exceed 1");
    }
}

Index SynthConfig::samples_for(Index cluster) const {
    return samples.size() == 1 ? samples.front() : samples.at(static_cast<std::size_t>(cluster));
}

std::vector<Index> Graph::degrees() const {
    std::vector<Index> deg(static_cast<std::size_t>(nodes), 0);
    for (const auto& [u, v] : edges) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

bool Graph::connected() const {
    if (nodes <= 1) {
        return true;
    }
    std::vector<std::vector<Index>> adj(static_cast<std::size_t>(nodes));
    for (const auto& [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::vector<bool> seen(static_cast<std::size_t>(nodes), false);
    std::vector<Index> stack{0};
    seen[0] = true;
    Index count = 1;
    while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (const Index v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == nodes;
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) {
        return lo;
    }
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

Graph barabasi_albert_module(Index nodes, Index attach, Rng& rng) {
    if (attach < 1 || nodes < attach + 1) {
        throw InvalidArgument("Barabasi-Albert module needs attach >= 1 and nodes >= attach + 1");
    }
    Graph g;
    g.nodes = nodes;
    // One entry per edge endpoint.
    std::vector<Index> endpoints;
    for (Index u = 0; u <= attach; ++u) {
        for (Index v = u + 1; v <= attach; ++v) {
            g.edges.emplace_back(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }
    for (Index v = attach + 1; v < nodes; ++v) {
        std::set<Index> targets;
        std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
        while (static_cast<Index>(targets.size()) < attach) {
            targets.insert(endpoints[pick(rng)]);
        }
        for (const Index t : targets) {
            g.edges.emplace_back(t, v);
            endpoints.push_back(t);
            endpoints.push_back(v);
        }
    }
    return g;
}

void apply_diagonal_rule(Eigen::MatrixXd& block, double diag_factor) {
    for (Index i = 0; i < block.rows(); ++i) {
        double off = 0.0;
        for (Index j = 0; j < block.cols(); ++j) {
            if (j != i) {
                off += std::abs(block(i, j));
            }
        }
        block(i, i) = off > 0.0 ? diag_factor * off : 1.0;
    }
}

Eigen::MatrixXd module_precision(const Graph& graph, Rng& rng, const SynthConfig& cfg) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(graph.nodes, graph.nodes);
    std::bernoulli_distribution coin(0.5);
    for (const auto& [u, v] : graph.edges) {
        const double magnitude = uniform(rng, cfg.weight_range.first, cfg.weight_range.second);
        const double value = coin(rng) ? magnitude : -magnitude;
        block(u, v) = block(v, u) = value;
    }
    apply_diagonal_rule(block, cfg.diag_factor);
    return block;
}

std::vector<std::pair<Index, Index>> pruefer_edges(const std::vector<Index>& sequence, Index nodes) {
    if (nodes < 2 || static_cast<Index>(sequence.size()) != nodes - 2) {
        throw InvalidArgument("Pruefer sequence must have length nodes - 2");
    }
    std::vector<Index> degree(static_cast<std::size_t>(nodes), 1);
    for (const Index s : sequence) {
        if (s < 0 || s >= nodes) {
            throw InvalidArgument("Pruefer sequence entry out of range");
        }
        ++degree[static_cast<std::size_t>(s)];
    }
    std::priority_queue<Index, std::vector<Index>, std::greater<>> leaves;
    for (Index v = 0; v < nodes; ++v) {
        if (degree[static_cast<std::size_t>(v)] == 1) {
            leaves.push(v);
        }
    }
    std::vector<std::pair<Index, Index>> edges;
    for (const Index s : sequence) {
        const Index leaf = leaves.top();
        leaves.pop();
        edges.emplace_back(leaf, s);
        if (--degree[static_cast<std::size_t>(s)] == 1) {
            leaves.push(s);
        }
    }
    const Index a = leaves.top();
    leaves.pop();
    const Index b = leaves.top();
    edges.emplace_back(a, b);
    return edges;
}

std::vector<Index> build_cluster_tree(Index clusters, Rng& rng) {
    if (clusters < 1) {
        throw InvalidArgument("cluster count must be positive");
    }
    std::vector<Index> parent(static_cast<std::size_t>(clusters), -1);
    if (clusters == 1) {
        return parent;
    }
    std::vector<Index> sequence(static_cast<std::size_t>(clusters - 2));
    std::uniform_int_distribution<Index> pick(0, clusters - 1);
    for (auto& s : sequence) {
        s = pick(rng);
    }
    std::vector<std::vector<Index>> adj(static_cast<std::size_t>(clusters));
    for (const auto& [u, v] : pruefer_edges(sequence, clusters)) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::vector<bool> seen(static_cast<std::size_t>(clusters), false);
    std::queue<Index> frontier;
    frontier.push(0);
    seen[0] = true;
    while (!frontier.empty()) {
        const Index u = frontier.front();
        frontier.pop();
        auto& next = adj[static_cast<std::size_t>(u)];
        std::sort(next.begin(), next.end());
        for (const Index v : next) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                parent[static_cast<std::size_t>(v)] = u;
                frontier.push(v);
            }
        }
    }
    return parent;
}

PerturbedChild perturb_child(const Eigen::MatrixXd& parent, Rng& rng, const SynthConfig& cfg,
                             Index regenerated_module) {
    cfg.validate();
    const Index size = cfg.module_size();
    if (parent.rows() != cfg.dimension || parent.cols() != cfg.dimension) {
        throw InvalidArgument("parent precision does not match the configured dimension");
    }
    if (regenerated_module < 0 || regenerated_module >= cfg.modules) {
        throw InvalidArgument("regenerated module out of range");
    }
    PerturbedChild child;
    child.precision = parent;
    std::bernoulli_distribution select(cfg.perturb_prob);
    for (Index m = 0; m < cfg.modules; ++m) {
        if (!select(rng)) {
            continue;
        }
        child.log.reweighted.push_back(m);
        auto block = child.precision.block(m * size, m * size, size, size);
        for (Index j = 0; j < size; ++j) {
            for (Index i = 0; i < j; ++i) {
                if (block(i, j) != 0.0) {
                    const double delta = uniform(rng, cfg.perturb_range.first, cfg.perturb_range.second);
                    block(i, j) += delta;
                    block(j, i) = block(i, j);
                }
            }
        }
        Eigen::MatrixXd tmp = block;
        apply_diagonal_rule(tmp, cfg.diag_factor);
        block = tmp;
    }
    const Graph fresh = barabasi_albert_module(size, cfg.ba_attach, rng);
    child.precision.block(regenerated_module * size, regenerated_module * size, size, size) =
        module_precision(fresh, rng, cfg);
    child.log.regenerated = regenerated_module;
    return child;
}

PerturbedChild perturb_child(const Eigen::MatrixXd& parent, Rng& rng, const SynthConfig& cfg) {
    cfg.validate();
    const Index regenerated = std::uniform_int_distribution<Index>(0, cfg.modules - 1)(rng);
    return perturb_child(parent, rng, cfg, regenerated);
}

Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& precision, Index n, Rng& rng) {
    if (n < 0) {
        throw InvalidArgument("sample count must be nonnegative");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("precision matrix is not positive definite");
    }
    const Index d = precision.rows();
    std::normal_distribution<double> normal;
    Eigen::MatrixXd z(d, n);
    for (Index s = 0; s < n; ++s) {
        for (Index i = 0; i < d; ++i) {
            z(i, s) = normal(rng);
        }
    }
    // L^T x = z, so cov(x) = (L L^T)^{-1}.
    llt.matrixU().solveInPlace(z);
    return z.transpose();
}

Rng stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

GroundTruth generate_truth(const SynthConfig& cfg) {
    cfg.validate();
    GroundTruth truth;
    Rng tree_rng = stream(cfg.seed, 0, 0);
    truth.parent = build_cluster_tree(cfg.clusters, tree_rng);
    const auto k_count = static_cast<std::size_t>(cfg.clusters);
    truth.precision.assign(k_count, Eigen::MatrixXd());
    truth.perturbations.assign(k_count, PerturbationLog{});

    const Index size = cfg.module_size();
    {
        Rng rng = stream(cfg.seed, 1, 0);
        Eigen::MatrixXd root = Eigen::MatrixXd::Zero(cfg.dimension, cfg.dimension);
        for (Index m = 0; m < cfg.modules; ++m) {
            const Graph g = barabasi_albert_module(size, cfg.ba_attach, rng);
            root.block(m * size, m * size, size, size) = module_precision(g, rng, cfg);
        }
        truth.precision[0] = std::move(root);
    }
    // Breadth-first from the root so every parent exists before its children.
    std::vector<std::vector<Index>> children(k_count);
    for (std::size_t k = 1; k < k_count; ++k) {
        children[static_cast<std::size_t>(truth.parent[k])].push_back(static_cast<Index>(k));
    }
    std::queue<Index> frontier;
    frontier.push(0);
    while (!frontier.empty()) {
        const Index u = frontier.front();
        frontier.pop();
        for (const Index v : children[static_cast<std::size_t>(u)]) {
            Rng rng = stream(cfg.seed, 1, static_cast<std::uint64_t>(v));
            PerturbedChild child = perturb_child(truth.precision[static_cast<std::size_t>(u)], rng, cfg);
            truth.precision[static_cast<std::size_t>(v)] = std::move(child.precision);
            truth.perturbations[static_cast<std::size_t>(v)] = std::move(child.log);
            frontier.push(v);
        }
    }
    return truth;
}

SynthInstance generate(const SynthConfig& cfg) {
    SynthInstance inst;
    inst.config = cfg;
    inst.truth = generate_truth(cfg);
    for (Index k = 0; k < cfg.clusters; ++k) {
        Rng rng = stream(cfg.seed, 2, static_cast<std::uint64_t>(k));
        inst.samples.push_back(
            sample_gaussian(inst.truth.precision[static_cast<std::size_t>(k)], cfg.samples_for(k), rng));
    }
    return inst;
}

}  // namespace svgmrf
