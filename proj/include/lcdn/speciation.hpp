#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "lcdn/genome.hpp"
#include "lcdn/rng.hpp"

namespace lcdn {

template <class Genome>
struct SpeciesT {
    int id = 0;
    Genome representative; // snapshot from the previous generation's members
    std::vector<GenomeId> members;
    double mean_adjusted_fitness = 0;
};

template <class Genome>
struct SpeciesSetT {
    std::vector<SpeciesT<Genome>> species;
    double threshold = 3.0;
    int target_count = 4;
    int next_species_id = 0;

    std::vector<int> ids() const {
        std::vector<int> out;
        out.reserve(species.size());
        for (const auto& s : species) out.push_back(s.id);
        return out;
    }

    const SpeciesT<Genome>* find(int id) const {
        for (const auto& s : species)
            if (s.id == id) return &s;
        return nullptr;
    }
};

using ModuleSpeciesSet = SpeciesSetT<ModuleGenome>;
using IndividualSpeciesSet = SpeciesSetT<IndividualGenome>;

struct DistanceConfig {
    double structural_weight = 1.0;
    double hyper_weight = 0.5;
};

namespace detail {

// normalized difference of one matching gene pair, in [0,1]
inline double gene_diff(const LayerGene& a, const LayerGene& b, const HyperparamRanges& r) {
    if (a.kind != b.kind) return 1.0;
    switch (a.kind) {
        case LayerKind::conv2d:
            return 0.5 * (std::abs(a.kernel - b.kernel) / r.kernel_width() +
                          std::abs(a.filters - b.filters) / r.filters_width());
        case LayerKind::maxpool2d: return std::abs(a.kernel - b.kernel) / r.kernel_width();
        case LayerKind::dropout: return std::abs(a.rate - b.rate) / r.dropout_width();
        default: return 1.0;
    }
}

inline double gene_diff(const BlueprintGene& a, const BlueprintGene& b, const HyperparamRanges&) {
    return a.module_species == b.module_species ? 0.0 : 1.0;
}

} // namespace detail

// (E+D)/max(Na,Nb) over node genes aligned by innovation id, plus the weighted
// mean normalized hyperparameter difference over matching genes.
template <class Genome>
double compatibility_distance(const Genome& a, const Genome& b, const HyperparamRanges& ranges = {},
                              const DistanceConfig& cfg = {}) {
    std::size_t matching = 0, mismatched = 0;
    double hyper_sum = 0;
    auto ia = a.nodes.begin();
    auto ib = b.nodes.begin();
    while (ia != a.nodes.end() || ib != b.nodes.end()) {
        if (ia == a.nodes.end()) {
            ++mismatched;
            ++ib;
        } else if (ib == b.nodes.end()) {
            ++mismatched;
            ++ia;
        } else if (ia->first == ib->first) {
            ++matching;
            hyper_sum += detail::gene_diff(ia->second, ib->second, ranges);
            ++ia;
            ++ib;
        } else if (ia->first < ib->first) {
            ++mismatched;
            ++ia;
        } else {
            ++mismatched;
            ++ib;
        }
    }
    const std::size_t larger = std::max<std::size_t>({a.nodes.size(), b.nodes.size(), 1});
    const double structural = static_cast<double>(mismatched) / static_cast<double>(larger);
    const double hyper = matching ? hyper_sum / static_cast<double>(matching) : 0.0;
    return cfg.structural_weight * structural + cfg.hyper_weight * hyper;
}

// First-fit speciation against the previous generation's representatives.
// Assigns species_id on each genome and returns the refreshed set with
// representatives re-drawn from the new members.
template <class Genome>
SpeciesSetT<Genome> speciate(std::vector<Genome>& population, SpeciesSetT<Genome> prev, Rng& rng,
                             const HyperparamRanges& ranges = {}, const DistanceConfig& cfg = {}) {
    if (population.empty()) throw std::invalid_argument("speciate: empty population");
    SpeciesSetT<Genome> set = std::move(prev);
    for (auto& s : set.species) s.members.clear();

    for (auto& g : population) {
        SpeciesT<Genome>* home = nullptr;
        for (auto& s : set.species) {
            if (compatibility_distance(g, s.representative, ranges, cfg) <= set.threshold) {
                home = &s;
                break;
            }
        }
        if (!home) {
            SpeciesT<Genome> fresh;
            fresh.id = set.next_species_id++;
            fresh.representative = g;
            set.species.push_back(std::move(fresh));
            home = &set.species.back();
        }
        home->members.push_back(g.genome_id);
        g.species_id = home->id;
    }

    std::erase_if(set.species, [](const SpeciesT<Genome>& s) { return s.members.empty(); });

    std::map<GenomeId, const Genome*> by_id;
    for (const auto& g : population) by_id[g.genome_id] = &g;
    for (auto& s : set.species)
        s.representative = *by_id.at(s.members[rng.index(s.members.size())]);
    return set;
}

// Nudges the threshold toward the target species count.
inline double adjust_threshold(double threshold, std::size_t species_count, int target_count) {
    if (static_cast<int>(species_count) > target_count)
        threshold *= 1.1;
    else if (static_cast<int>(species_count) < target_count)
        threshold *= 0.9;
    return std::clamp(threshold, 0.05, 10.0);
}

template <class Genome>
void adjust_threshold(SpeciesSetT<Genome>& set) {
    set.threshold = adjust_threshold(set.threshold, set.species.size(), set.target_count);
}

// Fitness sharing: a member's adjusted fitness is raw/|S|, so the species mean
// is sum(raw)/|S|^2.
template <class Genome>
void update_shared_fitness(SpeciesSetT<Genome>& set, const std::vector<Genome>& population) {
    std::map<GenomeId, double> fit;
    for (const auto& g : population) fit[g.genome_id] = g.fitness;
    for (auto& s : set.species) {
        double sum = 0;
        for (GenomeId id : s.members) sum += fit.at(id);
        const double n = static_cast<double>(s.members.size());
        s.mean_adjusted_fitness = sum / (n * n);
    }
}

} // namespace lcdn
