#include "bellman/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bellman {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (required.count(key) == 0 && optional.count(key) == 0)
            throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
    for (const std::string& key : required) {
        if (!obj.contains(key))
            throw ConfigError("missing key \"" + key + "\" in " + where);
    }
}

double as_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + " must be a number");
    return j.get<double>();
}

Vector as_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<int>(i)) = as_number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

Matrix as_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty())
        throw ConfigError(where + " must be a non-empty array of row arrays");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(where + " rows must be arrays of equal length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<int>(r), static_cast<int>(c)) =
                as_number(j[r][c], where + " entry");
    }
    return m;
}

ObservationKind parse_kind(const std::string& kind) {
    if (kind == "gaussian") return ObservationKind::Gaussian;
    if (kind == "poisson") return ObservationKind::Poisson;
    if (kind == "bernoulli") return ObservationKind::Bernoulli;
    if (kind == "nonconcave-stub") return ObservationKind::NonconcaveStub;
    throw ConfigError("unknown observation kind \"" + kind + "\"");
}

ParamTransform parse_transform(const std::string& name) {
    if (name == "identity") return ParamTransform::Identity;
    if (name == "log") return ParamTransform::Log;
    if (name == "logistic") return ParamTransform::LogisticSigned;
    throw ConfigError("unknown transform \"" + name + "\"");
}

// Slots are written "Q[0,0]", "c[1]", "Z[0,2]", ...
ParamSlot parse_slot(const std::string& text) {
    const auto lb = text.find('[');
    const auto rb = text.find(']');
    if (lb == std::string::npos || rb == std::string::npos || rb < lb)
        throw ConfigError("malformed slot \"" + text + "\" (expected e.g. \"Q[0,0]\")");
    const std::string target = text.substr(0, lb);
    const std::string inner = text.substr(lb + 1, rb - lb - 1);

    ParamSlot slot;
    bool vector_target = false;
    if (target == "c") { slot.target = ParamSlot::Target::C; vector_target = true; }
    else if (target == "T") slot.target = ParamSlot::Target::T;
    else if (target == "R") slot.target = ParamSlot::Target::R;
    else if (target == "Q") slot.target = ParamSlot::Target::Q;
    else if (target == "d") { slot.target = ParamSlot::Target::ObsIntercept; vector_target = true; }
    else if (target == "Z") slot.target = ParamSlot::Target::ObsLoading;
    else if (target == "H") slot.target = ParamSlot::Target::ObsNoise;
    else throw ConfigError("unknown slot target \"" + target + "\"");

    std::stringstream ss(inner);
    std::string part;
    std::vector<int> idx;
    while (std::getline(ss, part, ',')) {
        try {
            idx.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw ConfigError("malformed slot index in \"" + text + "\"");
        }
    }
    if (vector_target ? idx.size() != 1 : idx.size() != 2)
        throw ConfigError("slot \"" + text + "\" has the wrong number of indices");
    slot.row = idx[0];
    slot.col = vector_target ? 0 : idx[1];
    return slot;
}

ModelSpec parse_model(const json& root) {
    ModelSpec spec;
    const json& trans = root.at("transition");
    require_keys(trans, "\"transition\"", {"c", "T", "R", "Q"}, {});
    spec.c = as_vector(trans["c"], "transition.c");
    spec.T = as_matrix(trans["T"], "transition.T");
    spec.R = as_matrix(trans["R"], "transition.R");
    spec.Q = as_matrix(trans["Q"], "transition.Q");

    const json& obs = root.at("observation");
    require_keys(obs, "\"observation\"", {"kind", "d", "Z"}, {"H", "amplitude"});
    spec.kind = parse_kind(obs["kind"].get<std::string>());
    spec.obs_intercept = as_vector(obs["d"], "observation.d");
    spec.obs_loading = as_matrix(obs["Z"], "observation.Z");
    if (spec.kind == ObservationKind::Gaussian) {
        if (!obs.contains("H"))
            throw ConfigError("missing key \"H\" in \"observation\" (required for gaussian)");
        spec.obs_noise = as_matrix(obs["H"], "observation.H");
    } else if (obs.contains("H")) {
        throw ConfigError("unknown key \"H\" in \"observation\" (only gaussian models take H)");
    }
    if (obs.contains("amplitude")) {
        if (spec.kind != ObservationKind::NonconcaveStub)
            throw ConfigError("unknown key \"amplitude\" in \"observation\"");
        spec.ripple_amplitude = as_number(obs["amplitude"], "observation.amplitude");
    }
    return spec;
}

FilterConfig parse_filter(const json& block, int state_dim) {
    require_keys(block, "\"filter\"", {"x0", "P0"},
                 {"info_mode", "optimizer", "grad_tol", "max_iter"});
    FilterConfig cfg;
    cfg.x0 = as_vector(block["x0"], "filter.x0");
    if (cfg.x0.size() != state_dim)
        throw ConfigError("filter.x0 length does not match the state dimension");
    try {
        cfg.P0 = PDMatrix(as_matrix(block["P0"], "filter.P0"));
    } catch (const NotPositiveDefinite&) {
        throw ConfigError("filter.P0 is not positive definite");
    }
    if (cfg.P0.dim() != state_dim)
        throw ConfigError("filter.P0 dimension does not match the state dimension");

    if (block.contains("info_mode")) {
        const json& mode = block["info_mode"];
        if (mode.is_string()) {
            const std::string name = mode.get<std::string>();
            if (name == "fisher") cfg.info_mode = InformationMode::Fisher;
            else if (name == "realized") cfg.info_mode = InformationMode::Realized;
            else throw ConfigError("unknown info_mode \"" + name + "\"");
        } else if (mode.is_object()) {
            require_keys(mode, "\"info_mode\"", {"weighted"}, {});
            cfg.info_mode = InformationMode::Weighted;
            cfg.fisher_weight = as_number(mode["weighted"], "info_mode.weighted");
            if (cfg.fisher_weight < 0.0 || cfg.fisher_weight > 1.0)
                throw ConfigError("info_mode.weighted must lie in [0, 1]");
        } else {
            throw ConfigError("info_mode must be a string or {\"weighted\": w}");
        }
    }
    if (block.contains("optimizer")) {
        const std::string name = block["optimizer"].get<std::string>();
        if (name == "newton") cfg.optimizer = InnerOptimizer::Newton;
        else if (name == "quasi_newton") cfg.optimizer = InnerOptimizer::QuasiNewton;
        else throw ConfigError("unknown optimizer \"" + name + "\"");
    }
    if (block.contains("grad_tol")) {
        cfg.grad_tol = as_number(block["grad_tol"], "filter.grad_tol");
        if (!(cfg.grad_tol > 0.0)) throw ConfigError("filter.grad_tol must be positive");
    }
    if (block.contains("max_iter")) {
        cfg.max_iter = block["max_iter"].get<int>();
        if (cfg.max_iter < 1) throw ConfigError("filter.max_iter must be positive");
    }
    return cfg;
}

EstimationSettings parse_estimation(const json& block) {
    require_keys(block, "\"estimation\"", {"params"}, {"max_evals", "tol"});
    EstimationSettings est;
    const json& params = block["params"];
    if (!params.is_array() || params.empty())
        throw ConfigError("estimation.params must be a non-empty array");
    for (const json& p : params) {
        require_keys(p, "estimation.params entry", {"name", "transform", "init", "slot"}, {});
        ParamSpec spec;
        spec.name = p["name"].get<std::string>();
        spec.transform = parse_transform(p["transform"].get<std::string>());
        spec.init = as_number(p["init"], "param init");
        spec.slot = parse_slot(p["slot"].get<std::string>());
        est.params.push_back(std::move(spec));
    }
    if (est.params.size() > 20) throw ConfigError("estimation.params supports at most 20 entries");
    if (block.contains("max_evals")) {
        est.optimizer.max_evals = block["max_evals"].get<int>();
        if (est.optimizer.max_evals < 1) throw ConfigError("estimation.max_evals must be positive");
    }
    if (block.contains("tol")) {
        est.optimizer.tol = as_number(block["tol"], "estimation.tol");
        if (!(est.optimizer.tol > 0.0)) throw ConfigError("estimation.tol must be positive");
    }
    return est;
}

SimulationSettings parse_simulation(const json& block, int state_dim) {
    require_keys(block, "\"simulation\"", {"n", "seed"}, {"x0_true"});
    SimulationSettings sim;
    sim.n = block["n"].get<int>();
    if (sim.n < 0) throw ConfigError("simulation.n must be nonnegative");
    sim.seed = block["seed"].get<std::uint64_t>();
    sim.x0_true = block.contains("x0_true") ? as_vector(block["x0_true"], "simulation.x0_true")
                                            : Vector(Vector::Zero(state_dim));
    if (sim.x0_true.size() != state_dim)
        throw ConfigError("simulation.x0_true length does not match the state dimension");
    return sim;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }

    try {
        require_keys(root, "config root", {"version", "transition", "observation", "filter"},
                     {"estimation", "simulation"});
        if (!root["version"].is_number_integer() || root["version"].get<int>() != 1)
            throw ConfigError("unsupported config \"version\" (expected 1)");

        RunConfig cfg;
        cfg.model = parse_model(root);

        // Materialize once so structural problems surface as config errors.
        try {
            const StateTransition trans = build_transition(cfg.model);
            const auto model = build_observation(cfg.model);
            if (model->state_dim() != trans.state_dim())
                throw ConfigError("observation.Z column count does not match the state dimension");
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("invalid model: ") + e.what());
        }

        cfg.filter = parse_filter(root["filter"], cfg.model.state_dim());
        if (root.contains("estimation")) cfg.estimation = parse_estimation(root["estimation"]);
        if (root.contains("simulation"))
            cfg.simulation = parse_simulation(root["simulation"], cfg.model.state_dim());
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config structure error: ") + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace bellman
