#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <set>

#include "lcdn/genome.hpp"
#include "lcdn/serialize.hpp"

using namespace lcdn;

TEST_CASE("new module genome is a minimal conv between the endpoints", "[genome]") {
    Rng rng(1);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_module_genome(rng, ranges, counter);
    REQUIRE(g.nodes.size() == 1);
    REQUIRE(g.edges.size() == 2);
    REQUIRE(g.fitness == 0.0);
    REQUIRE(g.age == 0);
    const auto& gene = g.nodes.begin()->second;
    REQUIRE(gene.kind == LayerKind::conv2d);
    bool in_edge = false, out_edge = false;
    for (const auto& [id, e] : g.edges) {
        if (e.from == g.input_id && e.to == gene.id) in_edge = true;
        if (e.from == gene.id && e.to == g.output_id) out_edge = true;
    }
    REQUIRE(in_edge);
    REQUIRE(out_edge);
    REQUIRE(validate_genome(g).empty());
}

TEST_CASE("module sampling covers the hyperparameter ranges uniformly", "[genome]") {
    Rng rng(2);
    InnovationCounter counter;
    HyperparamRanges ranges;
    std::array<int, 8> kernel_counts{};
    for (int i = 0; i < 10000; ++i) {
        auto g = new_module_genome(rng, ranges, counter);
        const auto& gene = g.nodes.begin()->second;
        REQUIRE(gene.kernel >= 2);
        REQUIRE(gene.kernel <= 7);
        REQUIRE(gene.filters >= 32);
        REQUIRE(gene.filters <= 80);
        kernel_counts[static_cast<std::size_t>(gene.kernel)]++;
    }
    for (int k = 2; k <= 7; ++k) {
        const double freq = kernel_counts[static_cast<std::size_t>(k)] / 10000.0;
        REQUIRE(freq == Catch::Approx(1.0 / 6).margin(0.02));
    }
}

TEST_CASE("module construction is deterministic given the seed", "[genome]") {
    Rng a(7), b(7);
    InnovationCounter ca, cb;
    HyperparamRanges ranges;
    auto ga = new_module_genome(a, ranges, ca);
    auto gb = new_module_genome(b, ranges, cb);
    REQUIRE(ga.input_id == gb.input_id);
    REQUIRE(ga.output_id == gb.output_id);
    REQUIRE(ga.nodes.begin()->first == gb.nodes.begin()->first);
    REQUIRE(ga.nodes.begin()->second.kernel == gb.nodes.begin()->second.kernel);
    REQUIRE(ga.nodes.begin()->second.filters == gb.nodes.begin()->second.filters);
}

TEST_CASE("new individuals are chains of 2 to 4 valid species pointers", "[genome]") {
    Rng rng(3);
    InnovationCounter counter;
    HyperparamRanges ranges;
    const std::vector<int> species{3, 8, 11};
    std::set<std::size_t> seen_counts;
    for (int i = 0; i < 10000; ++i) {
        auto g = new_individual_genome(rng, ranges, counter, species, 10);
        seen_counts.insert(g.nodes.size());
        REQUIRE(g.nodes.size() >= 2);
        REQUIRE(g.nodes.size() <= 4);
        if (i < 1000) {
            for (const auto& [id, n] : g.nodes)
                REQUIRE(std::find(species.begin(), species.end(), n.module_species) != species.end());
            REQUIRE(validate_genome(g).empty());
        }
    }
    REQUIRE(seen_counts == std::set<std::size_t>{2, 3, 4});
}

TEST_CASE("individual last layer shape follows the classifier spec", "[genome]") {
    Rng rng(4);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_individual_genome(rng, ranges, counter, {1}, 10);
    REQUIRE(g.last_layer.weights.shape == std::vector<int>({g.classifier.fc1_units, 10}));
    REQUIRE(g.last_layer.biases.shape == std::vector<int>({10}));
    REQUIRE(g.classifier.fc1_units >= 128);
    REQUIRE(g.classifier.fc1_units <= 800);
}

TEST_CASE("new individual requires a nonempty species list", "[genome]") {
    Rng rng(5);
    InnovationCounter counter;
    HyperparamRanges ranges;
    REQUIRE_THROWS_AS(new_individual_genome(rng, ranges, counter, {}, 10), std::invalid_argument);
}

TEST_CASE("validate_genome reports cycles", "[genome]") {
    Rng rng(6);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_individual_genome(rng, ranges, counter, {1}, 10);
    REQUIRE(validate_genome(g).empty());
    // wire a back edge between the first two genes
    auto it = g.nodes.begin();
    const InnovId a = it->first;
    const InnovId b = std::next(it)->first;
    const InnovId e = counter.fresh();
    g.edges.emplace(e, EdgeGene{e, b, a});
    const auto violations = validate_genome(g);
    REQUIRE(!violations.empty());
    bool mentions_cycle = false;
    for (const auto& v : violations)
        if (v.find("cycle") != std::string::npos) mentions_cycle = true;
    REQUIRE(mentions_cycle);
}

TEST_CASE("validate_genome reports classifier/weights mismatch", "[genome]") {
    Rng rng(7);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_individual_genome(rng, ranges, counter, {1}, 10);
    g.classifier.fc1_units += 1; // rows no longer match
    const auto violations = validate_genome(g);
    bool mentions = false;
    for (const auto& v : violations)
        if (v.find("classifier/weights mismatch") != std::string::npos) mentions = true;
    REQUIRE(mentions);
}

TEST_CASE("validate_genome flags unreachable nodes and bad endpoint edges", "[genome]") {
    Rng rng(8);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_module_genome(rng, ranges, counter);
    LayerGene orphan;
    orphan.id = counter.fresh();
    orphan.kind = LayerKind::dropout;
    orphan.rate = 0.5;
    g.nodes.emplace(orphan.id, orphan);
    auto violations = validate_genome(g);
    bool unreachable = false;
    for (const auto& v : violations)
        if (v.find("unreachable") != std::string::npos) unreachable = true;
    REQUIRE(unreachable);
}

TEST_CASE("innovation counter is monotone and ids never repeat", "[genome]") {
    Rng rng(9);
    InnovationCounter counter;
    HyperparamRanges ranges;
    std::set<InnovId> all;
    std::size_t expected = 0;
    for (int i = 0; i < 200; ++i) {
        auto m = new_module_genome(rng, ranges, counter);
        all.insert(m.input_id);
        all.insert(m.output_id);
        for (const auto& [id, _] : m.nodes) all.insert(id);
        for (const auto& [id, _] : m.edges) all.insert(id);
        expected += 2 + m.nodes.size() + m.edges.size();
    }
    REQUIRE(all.size() == expected);
    REQUIRE(counter.peek() == expected);
}

TEST_CASE("module serialization roundtrip is identity", "[genome][serialize]") {
    Rng rng(10);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_module_genome(rng, ranges, counter);
    g.fitness = 0.7321;
    g.age = 3;
    g.species_id = 5;
    auto j = to_json(g);
    auto back = module_from_json(j);
    REQUIRE(back.genome_id == g.genome_id);
    REQUIRE(back.input_id == g.input_id);
    REQUIRE(back.output_id == g.output_id);
    REQUIRE(back.nodes.size() == g.nodes.size());
    REQUIRE(back.nodes.begin()->second.kernel == g.nodes.begin()->second.kernel);
    REQUIRE(back.fitness == g.fitness);
    REQUIRE(back.age == g.age);
    REQUIRE(back.species_id == g.species_id);
    REQUIRE(to_json(back).dump() == j.dump());
}

TEST_CASE("individual serialization roundtrip preserves last-layer bits", "[genome][serialize]") {
    Rng rng(11);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_individual_genome(rng, ranges, counter, {2, 4}, 10);
    g.fitness = 0.25;
    auto j = to_json(g);
    auto back = individual_from_json(j);
    REQUIRE(back.last_layer.weights == g.last_layer.weights);
    REQUIRE(back.last_layer.biases == g.last_layer.biases);
    REQUIRE(back.classifier.fc1_units == g.classifier.fc1_units);
    REQUIRE(back.nodes.size() == g.nodes.size());
    for (const auto& [id, n] : g.nodes) REQUIRE(back.nodes.at(id).module_species == n.module_species);
    REQUIRE(to_json(back).dump() == j.dump());
}

TEST_CASE("serialization rejects wrong kind and schema", "[genome][serialize]") {
    Rng rng(12);
    InnovationCounter counter;
    HyperparamRanges ranges;
    auto g = new_module_genome(rng, ranges, counter);
    auto j = to_json(g);
    REQUIRE_THROWS(individual_from_json(j));
    j["schema_version"] = 999;
    REQUIRE_THROWS(module_from_json(j));
}
