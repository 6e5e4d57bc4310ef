#include "fabernet/network_io.hpp"

#include "fabernet/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace fabernet {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_network(std::ostream& out, const ReluNetwork& net) {
    const auto st = net.stats();
    out << "{\n  \"format\": \"fabernet-relu-1\",\n  \"dims\": [";
    for (std::size_t i = 0; i < st.dims.size(); ++i)
        out << (i ? ", " : "") << st.dims[i];
    out << "],\n  \"layers\": [\n";
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        out << "    {\"entries\": [";
        bool first = true;
        for (const auto& e : layers[l].entries()) {
            out << (first ? "" : ", ") << '[' << e.row << ", " << e.col << ", " << num(e.weight) << ']';
            first = false;
        }
        out << "], \"bias\": [";
        first = true;
        for (std::size_t r = 0; r < layers[l].bias().size(); ++r) {
            const double b = layers[l].bias()[r];
            if (b == 0.0)
                continue;
            out << (first ? "" : ", ") << '[' << r << ", " << num(b) << ']';
            first = false;
        }
        out << "]}" << (l + 1 < layers.size() ? "," : "") << '\n';
    }
    out << "  ],\n  \"stats\": {\"W\": " << st.W << ", \"L\": " << st.L << ", \"N_w\": " << st.N_w << "}\n}\n";
}

ReluNetwork read_network(std::istream& in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("network file is not valid JSON: ") + e.what());
    }
    try {
        const auto dims = doc.at("dims").get<std::vector<int>>();
        const auto& jl = doc.at("layers");
        if (dims.size() < 3 || jl.size() + 1 != dims.size())
            throw InvalidParameter("network file: dims and layers disagree");
        std::vector<Layer> layers;
        for (std::size_t l = 0; l < jl.size(); ++l) {
            Layer layer(dims[l + 1], dims[l]);
            for (const auto& e : jl[l].at("entries"))
                layer.add(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
            for (const auto& b : jl[l].at("bias"))
                layer.set_bias(b.at(0).get<int>(), b.at(1).get<double>());
            layers.push_back(std::move(layer));
        }
        ReluNetwork net(std::move(layers));
        if (doc.contains("stats")) {
            const auto st = net.stats();
            const auto& js = doc["stats"];
            if (js.at("W").get<std::size_t>() != st.W || js.at("L").get<int>() != st.L ||
                js.at("N_w").get<int>() != st.N_w)
                throw InvalidParameter("network file: stats block does not match the layers");
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("malformed network file: ") + e.what());
    }
}

void save_network(const std::string& path, const ReluNetwork& net) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_network(out, net);
}

ReluNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return read_network(in);
}

} // namespace fabernet
