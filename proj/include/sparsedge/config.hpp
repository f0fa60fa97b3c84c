#ifndef SPARSEDGE_CONFIG_HPP
#define SPARSEDGE_CONFIG_HPP

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sparsedge/errors.hpp"
#include "sparsedge/training.hpp"

namespace sparsedge {

/// Flat key=value run configuration. Unknown keys are rejected; seeds are
/// explicit (no wall-clock defaults).
struct RunConfig {
    TrainConfig train;
    std::string mnist_dir;   // falls back to $MNIST_DIR
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("bad integer list for " + key + ": " + s);
        }
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("bad boolean for " + key + ": " + s);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                                 line.back() == '\t'))
            line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value, got: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }

    static const char* known[] = {
        "layers", "fanouts", "z", "mode", "format", "epochs", "train_size",
        "test_size", "lr_base", "seed_init", "seed_il", "seed_shuffle",
        "pipelined", "bias", "mnist_dir"};
    for (const auto& [key, value] : kv) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown config key: " + key);
    }

    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("missing config key: " + key);
        return it->second;
    };
    auto get = [&](const std::string& key, const std::string& def) {
        auto it = kv.find(key);
        return it == kv.end() ? def : it->second;
    };

    RunConfig rc;
    TrainConfig& t = rc.train;
    t.topo = build_topology(detail::parse_int_list(need("layers"), "layers"),
                            detail::parse_int_list(need("fanouts"), "fanouts"));
    if (kv.count("z")) {
        HardwareConfig hw;
        for (int z : detail::parse_int_list(kv.at("z"), "z"))
            hw.z_list.push_back(z);
        t.hw = hw;
    }
    const std::string mode = get("mode", "real");
    if (mode == "real") {
        t.arith = real_arith();
        if (kv.count("format"))
            throw ConfigError("format= only applies to mode=fixed");
    } else if (mode == "fixed") {
        t.arith = fixed_arith(FxFormat::parse(need("format")));
    } else {
        throw ConfigError("mode must be real or fixed");
    }
    t.epochs = std::stoi(get("epochs", "5"));
    t.train_size = std::stoi(get("train_size", "-1"));
    t.test_size = std::stoi(get("test_size", "-1"));
    t.eta_base = std::stod(get("lr_base", "0.1"));
    t.seed_init = std::stoull(need("seed_init"));
    t.seed_il = std::stoull(need("seed_il"));
    t.seed_shuffle = std::stoull(need("seed_shuffle"));
    t.pipelined = detail::parse_bool(get("pipelined", "true"), "pipelined");
    t.use_bias = detail::parse_bool(get("bias", "true"), "bias");
    if (t.epochs < 0 || t.eta_base <= 0.0)
        throw ConfigError("epochs must be >= 0 and lr_base > 0");

    rc.mnist_dir = get("mnist_dir", "");
    if (rc.mnist_dir.empty()) {
        if (const char* env = std::getenv("MNIST_DIR")) rc.mnist_dir = env;
    }
    return rc;
}

inline RunConfig parse_run_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(IoError::Code::open_failed, "cannot read " + path);
    return parse_run_config(is);
}

}  // namespace sparsedge

#endif  // SPARSEDGE_CONFIG_HPP
