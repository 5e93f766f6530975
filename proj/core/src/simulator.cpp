#include "qtrap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qtrap/error.hpp"

namespace qtrap {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(AccuracyMode m) { return m == AccuracyMode::deterministic ? "deterministic" : "stochastic"; }
const char* to_string(EnergySource s) { return s == EnergySource::functional ? "functional" : "tdp"; }

EnergyParams SimScenario::energy_params() const {
    EnergyParams p = energy;
    p.hops = hops_logical;
    return p;
}

void SimScenario::validate() const {
    auto fail = [](const std::string& field, const std::string& msg) { throw ValidationError(msg, field); };
    if (precisions.empty()) fail("precisions", "must list at least one precision");
    if (batches.empty()) fail("batches", "must list at least one batch size");
    if (hops_logical < 1) fail("hops", "must be >= 1");
    if (n_queries < 1) fail("n_queries", "must be >= 1");
    if (!(energy_noise_rel >= 0.0) || !std::isfinite(energy_noise_rel)) fail("energy_noise_rel", "must be >= 0");
    if (energy_source == EnergySource::tdp && !(tdp_watts > 0.0)) fail("tdp_watts", "must be > 0 in tdp mode");

    std::set<int> seen_b;
    for (int b : batches) {
        if (b < 1) fail("batches", "batch sizes must be >= 1");
        if (!seen_b.insert(b).second) fail("batches", "duplicate batch size " + std::to_string(b));
    }
    std::set<int> seen_p;
    for (int p : precisions) {
        const std::string tag = std::to_string(p);
        if (p <= 0) fail("precisions", "precisions must be positive");
        if (!seen_p.insert(p).second) fail("precisions", "duplicate precision " + tag);
        auto lat = latency.find(p);
        if (lat == latency.end()) fail("latency", "missing entry for " + tag + "-bit");
        if (!(lat->second.a_comp_s > 0.0)) fail("latency", "a_comp_s must be > 0 for " + tag + "-bit");
        if (!(lat->second.a_cast_s >= 0.0)) fail("latency", "a_cast_s must be >= 0 for " + tag + "-bit");
        if (p == energy.native_bits && lat->second.a_cast_s != 0.0) {
            fail("latency", "a_cast_s must be 0 at the native precision");
        }
        auto q = hop_success.find(p);
        if (q == hop_success.end()) fail("hop_success", "missing entry for " + tag + "-bit");
        if (!(q->second > 0.0 && q->second <= 1.0)) fail("hop_success", "q must lie in (0, 1] for " + tag + "-bit");
        auto v = peak_vram_gb.find(p);
        if (v == peak_vram_gb.end() || !(v->second > 0.0)) fail("peak_vram_gb", "needs a positive entry for " + tag + "-bit");
        if (energy_source == EnergySource::functional && p != energy.native_bits &&
            !energy.phi_by_precision.count(p)) {
            fail("energy.phi", "missing casting overhead for " + tag + "-bit");
        }
    }
    double prev = 0.0;
    for (const auto& [p, q] : hop_success) {
        (void)p;
        if (q < prev) fail("hop_success", "q must be non-decreasing in precision");
        prev = q;
    }
    try {
        energy.validate();
    } catch (const AnalysisError& e) {
        fail("energy", e.what());
    }
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sample_accuracy(std::mt19937_64& rng, double q, int hops, int n) {
    std::int64_t correct = 0;
    for (int i = 0; i < n; ++i) {
        bool ok = true;
        for (int k = 0; k < hops && ok; ++k) ok = uniform01(rng) < q;
        correct += ok ? 1 : 0;
    }
    return static_cast<double>(correct) / n;
}

}  // namespace

SimOutput simulate(const SimScenario& scenario) {
    scenario.validate();
    SimOutput out;
    out.truth = scenario;

    std::vector<int> precisions = scenario.precisions;
    std::vector<int> batches = scenario.batches;
    std::sort(precisions.begin(), precisions.end());
    std::sort(batches.begin(), batches.end());

    const EnergyParams energy = scenario.energy_params();
    const double k = scenario.hops_logical;
    const double n = scenario.n_queries;

    std::uint64_t cell = 0;
    for (int p : precisions) {
        const LatencyParams lat = scenario.latency.at(p);
        const double q = scenario.hop_success.at(p);
        for (int b : batches) {
            std::seed_seq seq{static_cast<std::uint32_t>(scenario.seed),
                              static_cast<std::uint32_t>(scenario.seed >> 32),
                              static_cast<std::uint32_t>(cell)};
            std::mt19937_64 rng(seq);
            ++cell;

            TelemetryRecord r;
            r.config = ConfigId{scenario.model, scenario.hardware, p, b, scenario.task};
            r.total_tokens = static_cast<std::int64_t>(scenario.n_queries) * scenario.hops_logical;
            // Each batch of B queries spends a_comp * B + a_cast per hop.
            r.duration_s = n * k * (lat.a_comp_s + lat.a_cast_s / b);
            r.sample_count = scenario.n_queries;
            r.accuracy = scenario.accuracy_mode == AccuracyMode::deterministic
                             ? std::pow(q, scenario.hops_logical)
                             : sample_accuracy(rng, q, scenario.hops_logical, scenario.n_queries);
            r.peak_vram_gb = scenario.peak_vram_gb.at(p);
            if (scenario.energy_source == EnergySource::functional) {
                double joules = energy_eval(energy, p, b);
                if (scenario.energy_noise_rel > 0.0) {
                    std::normal_distribution<double> noise(0.0, scenario.energy_noise_rel);
                    joules = std::max(0.0, joules * (1.0 + noise(rng)));
                }
                r.power = DirectJoules{joules};
            } else {
                r.power = TdpAnchor{scenario.tdp_watts};
            }
            r.source = "simulated:" + scenario.name + " seed=" + std::to_string(scenario.seed);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

namespace {

template <class T>
std::map<int, T> int_keyed(const json& obj, const std::string& field, const std::string& origin,
                           const std::function<T(const json&)>& read) {
    if (!obj.is_object()) throw ValidationError("expected an object keyed by precision", field, origin);
    std::map<int, T> out;
    for (const auto& [key, value] : obj.items()) {
        std::size_t used = 0;
        int bits = 0;
        try {
            bits = std::stoi(key, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != key.size() || key.empty()) throw ValidationError("precision key '" + key + "' is not an integer", field, origin);
        out[bits] = read(value);
    }
    return out;
}

double num(const json& v, const std::string& field, const std::string& origin) {
    if (!v.is_number()) throw ValidationError("expected a number", field, origin);
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError("non-finite number", field, origin);
    return d;
}

std::vector<int> int_list(const json& v, const std::string& field, const std::string& origin) {
    if (!v.is_array()) throw ValidationError("expected an array of integers", field, origin);
    std::vector<int> out;
    for (const auto& x : v) {
        if (!x.is_number_integer()) throw ValidationError("expected an array of integers", field, origin);
        out.push_back(x.get<int>());
    }
    return out;
}

}  // namespace

SimScenario parse_scenario(std::string_view json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what(), {}, origin);
    }
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object", {}, origin);

    static const std::set<std::string> known = {
        "name", "model", "hardware", "task", "native_bits", "hops", "n_queries", "precisions",
        "batches", "seed", "accuracy_mode", "energy_source", "energy_noise_rel", "tdp_watts",
        "energy", "latency", "hop_success", "peak_vram_gb"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) throw ValidationError("unknown field", key, origin);
    }
    auto required = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) throw ValidationError("missing required field", key, origin);
        return *it;
    };
    auto text = [&](const char* key, const std::string& fallback) {
        auto it = j.find(key);
        if (it == j.end()) return fallback;
        if (!it->is_string()) throw ValidationError("expected a string", key, origin);
        return it->get<std::string>();
    };

    SimScenario s;
    s.name = text("name", s.name);
    s.model = text("model", s.model);
    s.hardware = text("hardware", s.hardware);
    s.task = text("task", s.task);

    const json& hops = required("hops");
    if (!hops.is_number_integer()) throw ValidationError("expected an integer", "hops", origin);
    s.hops_logical = hops.get<int>();
    const json& nq = required("n_queries");
    if (!nq.is_number_integer()) throw ValidationError("expected an integer", "n_queries", origin);
    s.n_queries = nq.get<int>();
    s.precisions = int_list(required("precisions"), "precisions", origin);
    s.batches = int_list(required("batches"), "batches", origin);

    if (auto it = j.find("native_bits"); it != j.end()) {
        if (!it->is_number_integer()) throw ValidationError("expected an integer", "native_bits", origin);
        s.energy.native_bits = it->get<int>();
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_unsigned()) throw ValidationError("expected a non-negative integer", "seed", origin);
        s.seed = it->get<std::uint64_t>();
    }
    const std::string acc = text("accuracy_mode", "deterministic");
    if (acc == "deterministic") s.accuracy_mode = AccuracyMode::deterministic;
    else if (acc == "stochastic") s.accuracy_mode = AccuracyMode::stochastic;
    else throw ValidationError("expected deterministic or stochastic", "accuracy_mode", origin);
    const std::string src = text("energy_source", "functional");
    if (src == "functional") s.energy_source = EnergySource::functional;
    else if (src == "tdp") s.energy_source = EnergySource::tdp;
    else throw ValidationError("expected functional or tdp", "energy_source", origin);
    if (auto it = j.find("energy_noise_rel"); it != j.end()) s.energy_noise_rel = num(*it, "energy_noise_rel", origin);
    if (auto it = j.find("tdp_watts"); it != j.end()) s.tdp_watts = num(*it, "tdp_watts", origin);

    const json& energy = required("energy");
    if (!energy.is_object()) throw ValidationError("expected an object", "energy", origin);
    for (const auto& [key, value] : energy.items()) {
        (void)value;
        if (key != "gamma_static" && key != "alpha_mem" && key != "phi") {
            throw ValidationError("unknown field", "energy." + key, origin);
        }
    }
    s.energy.gamma_static = num(energy.value("gamma_static", json(0.0)), "energy.gamma_static", origin);
    s.energy.alpha_mem = num(energy.value("alpha_mem", json(0.0)), "energy.alpha_mem", origin);
    if (auto it = energy.find("phi"); it != energy.end()) {
        s.energy.phi_by_precision = int_keyed<double>(*it, "energy.phi", origin,
            [&](const json& v) { return num(v, "energy.phi", origin); });
    }

    s.latency = int_keyed<LatencyParams>(required("latency"), "latency", origin, [&](const json& v) {
        if (!v.is_object()) throw ValidationError("expected {a_comp_s, a_cast_s}", "latency", origin);
        LatencyParams lp;
        lp.a_comp_s = num(v.value("a_comp_s", json(0.0)), "latency.a_comp_s", origin);
        lp.a_cast_s = num(v.value("a_cast_s", json(0.0)), "latency.a_cast_s", origin);
        return lp;
    });
    s.hop_success = int_keyed<double>(required("hop_success"), "hop_success", origin,
        [&](const json& v) { return num(v, "hop_success", origin); });
    s.peak_vram_gb = int_keyed<double>(required("peak_vram_gb"), "peak_vram_gb", origin,
        [&](const json& v) { return num(v, "peak_vram_gb", origin); });

    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(e.detail(), e.field(), origin);
    }
    return s;
}

SimScenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string scenario_to_json(const SimScenario& s) {
    ordered_json j;
    j["name"] = s.name;
    j["model"] = s.model;
    j["hardware"] = s.hardware;
    j["task"] = s.task;
    j["native_bits"] = s.energy.native_bits;
    j["hops"] = s.hops_logical;
    j["n_queries"] = s.n_queries;
    j["precisions"] = s.precisions;
    j["batches"] = s.batches;
    j["seed"] = s.seed;
    j["accuracy_mode"] = to_string(s.accuracy_mode);
    j["energy_source"] = to_string(s.energy_source);
    j["energy_noise_rel"] = s.energy_noise_rel;
    j["tdp_watts"] = s.tdp_watts;
    ordered_json phi = ordered_json::object();
    for (const auto& [p, v] : s.energy.phi_by_precision) phi[std::to_string(p)] = v;
    j["energy"] = {{"gamma_static", s.energy.gamma_static}, {"alpha_mem", s.energy.alpha_mem}, {"phi", phi}};
    ordered_json lat = ordered_json::object();
    for (const auto& [p, v] : s.latency) lat[std::to_string(p)] = {{"a_comp_s", v.a_comp_s}, {"a_cast_s", v.a_cast_s}};
    j["latency"] = lat;
    ordered_json q = ordered_json::object();
    for (const auto& [p, v] : s.hop_success) q[std::to_string(p)] = v;
    j["hop_success"] = q;
    ordered_json vram = ordered_json::object();
    for (const auto& [p, v] : s.peak_vram_gb) vram[std::to_string(p)] = v;
    j["peak_vram_gb"] = vram;
    return j.dump(2);
}

}  // namespace qtrap
