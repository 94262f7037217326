#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>

#include "lcdn/genome.hpp"

namespace lcdn {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

inline std::string layer_kind_str(LayerKind k) { return kind_name(k); }

inline LayerKind layer_kind_from(const std::string& s) {
    if (s == "conv2d") return LayerKind::conv2d;
    if (s == "maxpool2d") return LayerKind::maxpool2d;
    if (s == "dropout") return LayerKind::dropout;
    throw std::runtime_error("unknown layer kind '" + s + "'");
}

namespace detail {

inline Json edges_to_json(const std::map<InnovId, EdgeGene>& edges) {
    Json arr = Json::array();
    for (const auto& [id, e] : edges) arr.push_back({{"id", id}, {"from", e.from}, {"to", e.to}});
    return arr;
}

inline std::map<InnovId, EdgeGene> edges_from_json(const Json& arr) {
    std::map<InnovId, EdgeGene> edges;
    for (const auto& j : arr) {
        EdgeGene e{j.at("id").get<InnovId>(), j.at("from").get<InnovId>(), j.at("to").get<InnovId>()};
        edges.emplace(e.id, e);
    }
    return edges;
}

inline Json tensor_to_json(const Tensor& t) {
    Json vals = Json::array();
    for (float v : t.data) vals.push_back(static_cast<double>(v));
    return vals;
}

inline Tensor tensor_from_json(const Json& vals, std::vector<int> shape) {
    std::vector<float> data;
    data.reserve(vals.size());
    for (const auto& v : vals) data.push_back(static_cast<float>(v.get<double>()));
    return Tensor(std::move(shape), std::move(data));
}

template <class Genome>
void common_to_json(const Genome& g, Json& j) {
    j["schema_version"] = kSchemaVersion;
    j["id"] = g.genome_id;
    j["input"] = g.input_id;
    j["output"] = g.output_id;
    j["edges"] = edges_to_json(g.edges);
    j["fitness"] = g.fitness;
    j["age"] = g.age;
    if (g.species_id)
        j["species"] = *g.species_id;
    else
        j["species"] = nullptr;
}

template <class Genome>
void common_from_json(const Json& j, Genome& g) {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("genome schema_version mismatch");
    g.genome_id = j.at("id").get<GenomeId>();
    g.input_id = j.at("input").get<InnovId>();
    g.output_id = j.at("output").get<InnovId>();
    g.edges = edges_from_json(j.at("edges"));
    g.fitness = j.at("fitness").get<double>();
    g.age = j.at("age").get<int>();
    if (!j.at("species").is_null()) g.species_id = j.at("species").get<int>();
}

} // namespace detail

inline Json to_json(const ModuleGenome& g) {
    Json j;
    j["kind"] = "module";
    detail::common_to_json(g, j);
    Json nodes = Json::array();
    for (const auto& [id, n] : g.nodes) {
        Json jn{{"id", id}, {"kind", layer_kind_str(n.kind)}};
        switch (n.kind) {
            case LayerKind::conv2d:
                jn["kernel"] = n.kernel;
                jn["filters"] = n.filters;
                break;
            case LayerKind::maxpool2d: jn["kernel"] = n.kernel; break;
            case LayerKind::dropout: jn["rate"] = n.rate; break;
            default: break;
        }
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    return j;
}

inline ModuleGenome module_from_json(const Json& j) {
    if (j.at("kind").get<std::string>() != "module")
        throw std::runtime_error("expected a module genome, got '" + j.at("kind").get<std::string>() + "'");
    ModuleGenome g;
    detail::common_from_json(j, g);
    for (const auto& jn : j.at("nodes")) {
        LayerGene n;
        n.id = jn.at("id").get<InnovId>();
        n.kind = layer_kind_from(jn.at("kind").get<std::string>());
        switch (n.kind) {
            case LayerKind::conv2d:
                n.kernel = jn.at("kernel").get<int>();
                n.filters = jn.at("filters").get<int>();
                break;
            case LayerKind::maxpool2d: n.kernel = jn.at("kernel").get<int>(); break;
            case LayerKind::dropout: n.rate = jn.at("rate").get<double>(); break;
            default: break;
        }
        g.nodes.emplace(n.id, n);
    }
    return g;
}

inline Json to_json(const IndividualGenome& g) {
    Json j;
    j["kind"] = "individual";
    detail::common_to_json(g, j);
    Json nodes = Json::array();
    for (const auto& [id, n] : g.nodes) nodes.push_back({{"id", id}, {"species", n.module_species}});
    j["nodes"] = nodes;
    j["classifier"] = {{"fc1_units", g.classifier.fc1_units}, {"num_classes", g.classifier.num_classes}};
    j["last_layer"] = {{"weights", detail::tensor_to_json(g.last_layer.weights)},
                       {"biases", detail::tensor_to_json(g.last_layer.biases)}};
    return j;
}

inline IndividualGenome individual_from_json(const Json& j) {
    if (j.at("kind").get<std::string>() != "individual")
        throw std::runtime_error("expected an individual genome, got '" + j.at("kind").get<std::string>() + "'");
    IndividualGenome g;
    detail::common_from_json(j, g);
    for (const auto& jn : j.at("nodes")) {
        BlueprintGene n{jn.at("id").get<InnovId>(), jn.at("species").get<int>()};
        g.nodes.emplace(n.id, n);
    }
    g.classifier.fc1_units = j.at("classifier").at("fc1_units").get<int>();
    g.classifier.num_classes = j.at("classifier").at("num_classes").get<int>();
    g.last_layer.weights = detail::tensor_from_json(j.at("last_layer").at("weights"),
                                                    {g.classifier.fc1_units, g.classifier.num_classes});
    g.last_layer.biases = detail::tensor_from_json(j.at("last_layer").at("biases"),
                                                   {g.classifier.num_classes});
    return g;
}

} // namespace lcdn
