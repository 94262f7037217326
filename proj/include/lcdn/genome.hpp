#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcdn/init.hpp"
#include "lcdn/layers.hpp"
#include "lcdn/rng.hpp"
#include "lcdn/tensor.hpp"

namespace lcdn {

using InnovId = std::uint32_t;
using GenomeId = std::uint64_t;

// One global counter hands out ids for every structural addition (nodes and
// edges, both populations), so genes align by history during crossover.
class InnovationCounter {
  public:
    InnovationCounter() = default;
    explicit InnovationCounter(InnovId start) : next_(start) {}

    InnovId fresh() { return next_.fetch_add(1, std::memory_order_relaxed); }
    InnovId peek() const { return next_.load(std::memory_order_relaxed); }
    void reset(InnovId value) { next_.store(value, std::memory_order_relaxed); }

    InnovationCounter(const InnovationCounter&) = delete;
    InnovationCounter& operator=(const InnovationCounter&) = delete;

  private:
    std::atomic<InnovId> next_{0};
};

struct HyperparamRanges {
    int conv_filters_min = 32, conv_filters_max = 80;
    int fc_units_min = 128, fc_units_max = 800;
    int kernel_min = 2, kernel_max = 7;
    int total_layers_min = 4, total_layers_max = 20;
    double dropout_min = 0.1, dropout_max = 0.9;

    int sample_kernel(Rng& rng) const { return rng.uniform_int(kernel_min, kernel_max); }
    int sample_filters(Rng& rng) const { return rng.uniform_int(conv_filters_min, conv_filters_max); }
    int sample_fc_units(Rng& rng) const { return rng.uniform_int(fc_units_min, fc_units_max); }
    double sample_rate(Rng& rng) const { return rng.uniform(dropout_min, dropout_max); }

    double kernel_width() const { return kernel_max - kernel_min; }
    double filters_width() const { return conv_filters_max - conv_filters_min; }
    double dropout_width() const { return dropout_max - dropout_min; }
};

struct EdgeGene {
    InnovId id = 0;
    InnovId from = 0;
    InnovId to = 0;
};

// module population: a gene is a layer of the CNN fragment
struct LayerGene {
    InnovId id = 0;
    LayerKind kind = LayerKind::conv2d; // conv2d | maxpool2d | dropout
    int kernel = 0;
    int filters = 0;
    double rate = 0;

    LayerSpec to_spec() const { return LayerSpec{kind, kernel, filters, 0, rate}; }
};

// individual population: a gene points at a module species
struct BlueprintGene {
    InnovId id = 0;
    int module_species = 0;
};

struct ModuleGenome {
    GenomeId genome_id = 0;
    InnovId input_id = 0, output_id = 0;
    std::map<InnovId, LayerGene> nodes;
    std::map<InnovId, EdgeGene> edges;
    double fitness = 0;
    int age = 0;
    std::optional<int> species_id;
};

struct LastLayerParams {
    Tensor weights; // [fc1_units x num_classes]
    Tensor biases;  // [num_classes]
};

struct ClassifierSpec {
    int fc1_units = 0;
    int num_classes = 0;
};

struct IndividualGenome {
    GenomeId genome_id = 0;
    InnovId input_id = 0, output_id = 0;
    std::map<InnovId, BlueprintGene> nodes;
    std::map<InnovId, EdgeGene> edges;
    ClassifierSpec classifier;
    LastLayerParams last_layer;
    double fitness = 0;
    int age = 0;
    std::optional<int> species_id;
};

namespace graph {

// adjacency over node ids plus the two virtual endpoints
template <class Genome>
std::map<InnovId, std::vector<InnovId>> successors(const Genome& g) {
    std::map<InnovId, std::vector<InnovId>> next;
    next[g.input_id];
    next[g.output_id];
    for (const auto& [id, _] : g.nodes) next[id];
    for (const auto& [_, e] : g.edges) next[e.from].push_back(e.to);
    return next;
}

// Kahn topological order over all nodes incl. endpoints; empty on a cycle.
template <class Genome>
std::vector<InnovId> topo_order(const Genome& g) {
    auto next = successors(g);
    std::map<InnovId, int> indeg;
    for (const auto& [id, _] : next) indeg[id];
    for (const auto& [_, outs] : next)
        for (InnovId t : outs) indeg[t]++;
    std::vector<InnovId> ready, order;
    for (const auto& [id, d] : indeg)
        if (d == 0) ready.push_back(id);
    while (!ready.empty()) {
        // smallest id first keeps the order deterministic
        auto it = std::min_element(ready.begin(), ready.end());
        InnovId id = *it;
        ready.erase(it);
        order.push_back(id);
        for (InnovId t : next[id])
            if (--indeg[t] == 0) ready.push_back(t);
    }
    if (order.size() != next.size()) return {};
    return order;
}

template <class Genome>
std::set<InnovId> reachable_from(const Genome& g, InnovId start, bool forward) {
    std::map<InnovId, std::vector<InnovId>> adj;
    for (const auto& [_, e] : g.edges) {
        if (forward)
            adj[e.from].push_back(e.to);
        else
            adj[e.to].push_back(e.from);
    }
    std::set<InnovId> seen{start};
    std::vector<InnovId> stack{start};
    while (!stack.empty()) {
        InnovId id = stack.back();
        stack.pop_back();
        for (InnovId t : adj[id])
            if (seen.insert(t).second) stack.push_back(t);
    }
    return seen;
}

} // namespace graph

// CoDeepNEAT-style minimal module: a single conv gene wired input -> gene -> output.
inline ModuleGenome new_module_genome(Rng& rng, const HyperparamRanges& ranges, InnovationCounter& counter) {
    ModuleGenome g;
    g.input_id = counter.fresh();
    g.output_id = counter.fresh();
    LayerGene gene;
    gene.id = counter.fresh();
    gene.kind = LayerKind::conv2d;
    gene.kernel = ranges.sample_kernel(rng);
    gene.filters = ranges.sample_filters(rng);
    g.nodes.emplace(gene.id, gene);
    const InnovId e1 = counter.fresh(), e2 = counter.fresh();
    g.edges.emplace(e1, EdgeGene{e1, g.input_id, gene.id});
    g.edges.emplace(e2, EdgeGene{e2, gene.id, g.output_id});
    return g;
}

// Individuals start as a feed-forward chain of 2..4 species pointers; branches
// only appear later through mutation.
inline IndividualGenome new_individual_genome(Rng& rng, const HyperparamRanges& ranges,
                                              InnovationCounter& counter,
                                              const std::vector<int>& module_species_ids,
                                              int num_classes) {
    if (module_species_ids.empty())
        throw std::invalid_argument("new_individual_genome: no module species to point at");
    IndividualGenome g;
    g.input_id = counter.fresh();
    g.output_id = counter.fresh();
    const int n_genes = rng.uniform_int(2, 4);
    InnovId prev = g.input_id;
    for (int i = 0; i < n_genes; ++i) {
        BlueprintGene gene;
        gene.id = counter.fresh();
        gene.module_species = module_species_ids[rng.index(module_species_ids.size())];
        g.nodes.emplace(gene.id, gene);
        const InnovId e = counter.fresh();
        g.edges.emplace(e, EdgeGene{e, prev, gene.id});
        prev = gene.id;
    }
    const InnovId e = counter.fresh();
    g.edges.emplace(e, EdgeGene{e, prev, g.output_id});

    g.classifier.fc1_units = ranges.sample_fc_units(rng);
    g.classifier.num_classes = num_classes;
    g.last_layer.weights =
        glorot_uniform<float>(g.classifier.fc1_units, num_classes,
                              {g.classifier.fc1_units, num_classes}, rng);
    g.last_layer.biases = Tensor({num_classes});
    return g;
}

namespace detail {

template <class Genome>
void validate_graph(const Genome& g, std::vector<std::string>& out) {
    std::set<InnovId> ids;
    ids.insert(g.input_id);
    ids.insert(g.output_id);
    if (g.input_id == g.output_id) out.push_back("input and output endpoints share an id");
    for (const auto& [id, node] : g.nodes) {
        if (!ids.insert(id).second) out.push_back("duplicate innovation id " + std::to_string(id));
        if (node.id != id) out.push_back("node key/id mismatch at " + std::to_string(id));
    }
    for (const auto& [id, e] : g.edges) {
        if (!ids.insert(id).second) out.push_back("duplicate innovation id " + std::to_string(id));
        if (e.id != id) out.push_back("edge key/id mismatch at " + std::to_string(id));
        const bool from_known = e.from == g.input_id || g.nodes.count(e.from);
        const bool to_known = e.to == g.output_id || g.nodes.count(e.to);
        if (!from_known || !to_known)
            out.push_back("edge " + std::to_string(id) + " references unknown node");
        if (e.to == g.input_id) out.push_back("edge " + std::to_string(id) + " enters the input endpoint");
        if (e.from == g.output_id) out.push_back("edge " + std::to_string(id) + " leaves the output endpoint");
    }
    if (graph::topo_order(g).empty() && !(g.nodes.empty() && g.edges.empty()))
        out.push_back("cycle in genome graph");

    const auto fwd = graph::reachable_from(g, g.input_id, true);
    const auto bwd = graph::reachable_from(g, g.output_id, false);
    for (const auto& [id, _] : g.nodes) {
        if (!fwd.count(id)) out.push_back("node " + std::to_string(id) + " unreachable from input");
        if (!bwd.count(id)) out.push_back("node " + std::to_string(id) + " does not reach output");
    }
    if (!fwd.count(g.output_id)) out.push_back("output endpoint unreachable from input");
}

} // namespace detail

inline std::vector<std::string> validate_genome(const ModuleGenome& g,
                                                const HyperparamRanges& ranges = {}) {
    std::vector<std::string> out;
    detail::validate_graph(g, out);
    for (const auto& [id, node] : g.nodes) {
        switch (node.kind) {
            case LayerKind::conv2d:
                if (node.kernel < ranges.kernel_min || node.kernel > ranges.kernel_max)
                    out.push_back("node " + std::to_string(id) + ": kernel out of range");
                if (node.filters < ranges.conv_filters_min || node.filters > ranges.conv_filters_max)
                    out.push_back("node " + std::to_string(id) + ": filters out of range");
                break;
            case LayerKind::maxpool2d:
                if (node.kernel < ranges.kernel_min || node.kernel > ranges.kernel_max)
                    out.push_back("node " + std::to_string(id) + ": kernel out of range");
                break;
            case LayerKind::dropout:
                if (node.rate < ranges.dropout_min || node.rate > ranges.dropout_max)
                    out.push_back("node " + std::to_string(id) + ": dropout rate out of range");
                break;
            default:
                out.push_back("node " + std::to_string(id) + ": kind not allowed in a module");
        }
    }
    return out;
}

inline std::vector<std::string> validate_genome(const IndividualGenome& g,
                                                const HyperparamRanges& ranges = {},
                                                const std::vector<int>* live_species = nullptr) {
    std::vector<std::string> out;
    detail::validate_graph(g, out);
    if (live_species)
        for (const auto& [id, node] : g.nodes)
            if (std::find(live_species->begin(), live_species->end(), node.module_species) ==
                live_species->end())
                out.push_back("node " + std::to_string(id) + ": dangling module species pointer");
    if (g.classifier.fc1_units < ranges.fc_units_min || g.classifier.fc1_units > ranges.fc_units_max)
        out.push_back("classifier fc1_units out of range");
    if (g.classifier.num_classes < 2) out.push_back("classifier num_classes must be >= 2");
    const std::vector<int> want_w{g.classifier.fc1_units, g.classifier.num_classes};
    if (g.last_layer.weights.shape != want_w)
        out.push_back("classifier/weights mismatch: last_layer weights " +
                      shape_str(g.last_layer.weights.shape) + " vs classifier " + shape_str(want_w));
    if (g.last_layer.biases.shape != std::vector<int>{g.classifier.num_classes})
        out.push_back("classifier/weights mismatch: last_layer biases " +
                      shape_str(g.last_layer.biases.shape));
    if (!g.last_layer.weights.all_finite() || !g.last_layer.biases.all_finite())
        out.push_back("last_layer contains non-finite values");
    return out;
}

} // namespace lcdn
