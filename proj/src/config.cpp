#include "parasrc/config.hpp"

#include "parasrc/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace parasrc {

namespace {

using nlohmann::json;

Box parse_box(const json& j, const char* key) {
    if (!j.is_array() || (j.size() != 2 && j.size() != 4))
        throw InvalidArgument(std::string(key) + ": expected [x0, x1] or [x0, x1, y0, y1]");
    Box b;
    b.x0 = j[0].get<double>();
    b.x1 = j[1].get<double>();
    if (j.size() == 4) {
        b.y0 = j[2].get<double>();
        b.y1 = j[3].get<double>();
    }
    return b;
}

json box_json(const Box& b, int dim) {
    return dim == 1 ? json::array({b.x0, b.x1}) : json::array({b.x0, b.x1, b.y0, b.y1});
}

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace

FormKind parse_mode(const std::string& s) {
    if (s == "lip" || s == "lipschitz") return FormKind::Lipschitz;
    if (s == "hol" || s == "holder") return FormKind::Holder;
    throw InvalidArgument("mode must be 'lip' or 'hol', got '" + s + "'");
}

NoisePlacement parse_noise_placement(const std::string& s) {
    if (s == "nodal") return NoisePlacement::Nodal;
    if (s == "quadrature") return NoisePlacement::QuadraturePoint;
    throw InvalidArgument("noise must be 'nodal' or 'quadrature', got '" + s + "'");
}

std::string noise_placement_name(NoisePlacement p) { return p == NoisePlacement::Nodal ? "nodal" : "quadrature"; }

ProblemConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");

    static const std::set<std::string> known{"example", "dim", "domain", "omega", "omega0", "t0", "zeta",
                                             "diffusion", "reaction", "truth", "wave", "fine_factor",
                                             "forward_start", "h", "tau", "mode", "gamma_f", "gamma_u",
                                             "delta", "seed", "noise"};
    for (const auto& item : j.items())
        if (!known.count(item.key())) throw InvalidArgument("unknown config key '" + item.key() + "'");

    ProblemConfig c;
    if (j.contains("example")) {
        const int ex = get<int>(j, "example");
        if (ex != 0) c = example_config(ex);
    }
    if (j.contains("dim")) c.dim = get<int>(j, "dim");
    try {
        if (j.contains("domain")) c.domain = parse_box(j["domain"], "domain");
        if (j.contains("omega")) c.omega = parse_box(j["omega"], "omega");
        if (j.contains("omega0")) c.omega0 = parse_box(j["omega0"], "omega0");
    } catch (const json::exception&) {
        throw InvalidArgument("box entries must be numbers");
    }
    if (j.contains("t0")) c.t0 = get<double>(j, "t0");
    if (j.contains("zeta")) c.zeta = get<double>(j, "zeta");
    if (j.contains("diffusion")) c.diffusion = get<double>(j, "diffusion");
    if (j.contains("reaction")) c.reaction = get<double>(j, "reaction");
    if (j.contains("truth")) {
        const auto t = get<std::string>(j, "truth");
        if (t == "manufactured") c.truth = TruthKind::Manufactured;
        else if (t == "forward") c.truth = TruthKind::Forward;
        else throw InvalidArgument("truth must be 'manufactured' or 'forward'");
    }
    if (j.contains("wave")) c.wave = get<int>(j, "wave");
    if (j.contains("fine_factor")) c.fine_factor = get<int>(j, "fine_factor");
    if (j.contains("forward_start")) c.forward_start = get<double>(j, "forward_start");
    if (j.contains("h")) c.h_den = get<int>(j, "h");
    if (j.contains("tau")) c.tau_den = get<int>(j, "tau");
    if (j.contains("mode")) c.mode = parse_mode(get<std::string>(j, "mode"));
    if (j.contains("gamma_f")) c.gamma_f = get<double>(j, "gamma_f");
    if (j.contains("gamma_u")) c.gamma_u = get<double>(j, "gamma_u");
    if (j.contains("delta")) c.delta = get<double>(j, "delta");
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
    if (j.contains("noise")) c.noise_placement = parse_noise_placement(get<std::string>(j, "noise"));
    validate(c);
    return c;
}

ProblemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_json(const ProblemConfig& c) {
    json j;
    j["example"] = c.example;
    j["dim"] = c.dim;
    j["domain"] = box_json(c.domain, c.dim);
    j["omega"] = box_json(c.omega, c.dim);
    if (c.omega0) j["omega0"] = box_json(*c.omega0, c.dim);
    j["t0"] = c.t0;
    j["zeta"] = c.zeta;
    j["diffusion"] = c.diffusion;
    j["reaction"] = c.reaction;
    j["truth"] = c.truth == TruthKind::Forward ? "forward" : "manufactured";
    j["wave"] = c.wave;
    j["fine_factor"] = c.fine_factor;
    j["forward_start"] = c.forward_start;
    j["h"] = c.h_den;
    j["tau"] = c.tau_den;
    j["mode"] = mode_name(c.mode);
    j["gamma_f"] = c.gamma_f;
    j["gamma_u"] = c.gamma_u;
    j["delta"] = c.delta;
    j["seed"] = c.seed;
    j["noise"] = noise_placement_name(c.noise_placement);
    return j.dump(2);
}

} // namespace parasrc
