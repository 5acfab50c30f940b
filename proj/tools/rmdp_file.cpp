#include "rmdp_file.hpp"

#include "drpg/errors.hpp"

#include <fstream>
#include <sstream>

namespace drpg::cli {

using nlohmann::json;

namespace {

json tensor_to_json(const Tensor3& t) {
    json out = json::array();
    for (std::size_t s = 0; s < t.states(); ++s) {
        json state = json::array();
        for (std::size_t a = 0; a < t.actions(); ++a) {
            const auto row = t.row(s, a);
            state.push_back(std::vector<double>(row.data(), row.data() + row.size()));
        }
        out.push_back(std::move(state));
    }
    return out;
}

const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) {
        throw InvalidInput(std::string("missing field '") + name + "'");
    }
    return j.at(name);
}

double number(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number()) {
        throw InvalidInput(std::string("field '") + name + "' must be a number");
    }
    return v.get<double>();
}

Vector vector_from_json(const json& j, const char* name) {
    if (!j.is_array()) {
        throw InvalidInput(std::string("field '") + name + "' must be an array");
    }
    Vector out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw InvalidInput(std::string("field '") + name + "' must hold numbers");
        }
        out(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return out;
}

Tensor3 tensor_from_json(const json& j, std::size_t S, std::size_t A, const char* name) {
    if (!j.is_array() || j.size() != S) {
        throw InvalidInput(std::string("field '") + name + "' must have num_states entries");
    }
    Tensor3 out(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        if (!j[s].is_array() || j[s].size() != A) {
            throw InvalidInput(std::string("field '") + name + "' must be S x A x S");
        }
        for (std::size_t a = 0; a < A; ++a) {
            const Vector row = vector_from_json(j[s][a], name);
            if (row.size() != static_cast<Eigen::Index>(S)) {
                throw InvalidInput(std::string("field '") + name + "' must be S x A x S");
            }
            out.row(s, a) = row;
        }
    }
    return out;
}

std::vector<double> to_std(const Vector& v) {
    return {v.data(), v.data() + v.size()};
}

} // namespace

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(to_std(m.row(r).transpose()));
    }
    return out;
}

Matrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty()) {
        throw InvalidInput(std::string("field '") + name + "' must be a nonempty array of rows");
    }
    const Vector first = vector_from_json(j[0], name);
    Matrix out(static_cast<Eigen::Index>(j.size()), first.size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Vector row = vector_from_json(j[r], name);
        if (row.size() != first.size()) {
            throw InvalidInput(std::string("field '") + name + "' has ragged rows");
        }
        out.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return out;
}

json to_json(const RmdpFile& file) {
    const TabularMdp& mdp = file.mdp;
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["num_states"] = mdp.states();
    doc["num_actions"] = mdp.actions();
    doc["gamma"] = mdp.gamma();
    doc["rho"] = to_std(mdp.rho());
    doc["cost"] = tensor_to_json(mdp.cost());
    doc["nominal"] = tensor_to_json(file.nominal.tensor());

    const AmbiguitySpec& spec = file.ambiguity;
    json amb;
    amb["kind"] = std::string(to_string(spec.kind()));
    if (is_sa_rectangular(spec.kind())) {
        amb["budgets"] = matrix_to_json(spec.budgets());
    } else if (is_s_rectangular(spec.kind())) {
        amb["budgets"] = to_std(spec.budgets().col(0));
    } else if (spec.kind() == AmbiguityKind::RContamination) {
        amb["r"] = spec.contamination();
    }
    doc["ambiguity"] = std::move(amb);

    if (file.parametric) {
        const ParametricBlock& p = *file.parametric;
        json block;
        block["features"] = matrix_to_json(p.features.phi);
        if (!p.features.centers.empty()) {
            block["centers"] = p.features.centers;
            block["sigmas"] = p.features.sigmas;
        }
        block["theta_c"] = to_std(p.set.center.theta);
        block["lambda_c"] = matrix_to_json(p.set.center.lam);
        block["kappa_theta"] = p.set.kappa_theta;
        block["kappa_lambda"] = p.set.kappa_lambda;
        block["lambda_min"] = p.set.lambda_min;
        block["norm"] = p.set.norm == XiNorm::L1 ? "l1" : "linf";
        doc["parametric"] = std::move(block);
    }
    return doc;
}

RmdpFile rmdp_from_json(const json& doc) {
    try {
        if (!doc.is_object()) {
            throw InvalidInput("instance file must hold a JSON object");
        }
        const json& version = field(doc, "schema_version");
        if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
            throw InvalidInput("unsupported schema_version " + version.dump() + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
        }
        const json& js = field(doc, "num_states");
        const json& ja = field(doc, "num_actions");
        if (!js.is_number_unsigned() || !ja.is_number_unsigned() || js.get<std::size_t>() == 0 ||
            ja.get<std::size_t>() == 0) {
            throw InvalidInput("num_states and num_actions must be positive integers");
        }
        const auto S = js.get<std::size_t>();
        const auto A = ja.get<std::size_t>();
        const Vector rho = vector_from_json(field(doc, "rho"), "rho");
        if (rho.size() != static_cast<Eigen::Index>(S)) {
            throw InvalidInput("rho must have num_states entries");
        }
        TabularMdp mdp(tensor_from_json(field(doc, "cost"), S, A, "cost"), number(doc, "gamma"), rho);
        TransitionKernel nominal(tensor_from_json(field(doc, "nominal"), S, A, "nominal"));

        const json& amb = field(doc, "ambiguity");
        const json& kind_field = field(amb, "kind");
        if (!kind_field.is_string()) {
            throw InvalidInput("ambiguity kind must be a string");
        }
        const AmbiguityKind kind = ambiguity_kind_from_string(kind_field.get<std::string>());
        auto spec = [&]() {
            if (is_sa_rectangular(kind)) {
                return AmbiguitySpec::sa_rect(kind, nominal, matrix_from_json(field(amb, "budgets"), "budgets"));
            }
            if (is_s_rectangular(kind)) {
                return AmbiguitySpec::s_rect(kind, nominal, vector_from_json(field(amb, "budgets"), "budgets"));
            }
            if (kind == AmbiguityKind::RContamination) {
                return AmbiguitySpec::r_contamination(nominal, number(amb, "r"));
            }
            return AmbiguitySpec::singleton(nominal);
        }();

        RmdpFile out{std::move(mdp), std::move(nominal), std::move(spec), std::nullopt};
        if (doc.contains("parametric")) {
            const json& block = doc.at("parametric");
            ParametricBlock p;
            p.features.phi = matrix_from_json(field(block, "features"), "features");
            if (block.contains("centers")) {
                p.features.centers = to_std(vector_from_json(block.at("centers"), "centers"));
                p.features.sigmas = to_std(vector_from_json(field(block, "sigmas"), "sigmas"));
            }
            p.set.center.theta = vector_from_json(field(block, "theta_c"), "theta_c");
            p.set.center.lam = matrix_from_json(field(block, "lambda_c"), "lambda_c");
            p.set.kappa_theta = number(block, "kappa_theta");
            p.set.kappa_lambda = number(block, "kappa_lambda");
            p.set.lambda_min = number(block, "lambda_min");
            const std::string norm = block.value("norm", std::string("l1"));
            if (norm != "l1" && norm != "linf") {
                throw InvalidInput("parametric norm must be 'l1' or 'linf'");
            }
            p.set.norm = norm == "l1" ? XiNorm::L1 : XiNorm::Linf;
            if (p.features.phi.rows() != static_cast<Eigen::Index>(S) || !p.features.phi.allFinite()) {
                throw InvalidInput("features must be finite with one row per state");
            }
            try {
                validate_xi_set(p.set, S, A, p.features.dim());
            } catch (const ConfigError& e) {
                throw InvalidInput(std::string("parametric block: ") + e.what());
            }
            out.parametric = std::move(p);
        }
        return out;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed instance file: ") + e.what());
    }
}

std::string dump_rmdp(const RmdpFile& file) {
    return to_json(file).dump(2) + "\n";
}

void save_rmdp(const std::filesystem::path& path, const RmdpFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot open '" + path.string() + "' for writing");
    }
    out << dump_rmdp(file);
    if (!out) {
        throw InvalidInput("failed writing '" + path.string() + "'");
    }
}

RmdpFile load_rmdp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return rmdp_from_json(doc);
}

} // namespace drpg::cli
