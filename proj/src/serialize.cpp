#include "finn/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace finn {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {   // row-major nested arrays
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
    const auto nr = static_cast<Eigen::Index>(rows.size());
    const auto nc = nr > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd m(nr, nc);
    for (Eigen::Index r = 0; r < nr; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != nc)
            throw std::runtime_error("ragged matrix in JSON document");
        for (Eigen::Index c = 0; c < nc; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json grid_to_json(const TenorGrid& g) {
    return {{"k_count", g.k_count}, {"tau_max", g.tau_max}};
}

TenorGrid grid_from_json(const json& j) {
    return TenorGrid::make(j.at("k_count").get<int>(), j.at("tau_max").get<double>());
}

json svensson_to_json(const SvenssonParams& p) {
    return {{"date", p.date},   {"beta0", p.beta0}, {"beta1", p.beta1}, {"beta2", p.beta2},
            {"beta3", p.beta3}, {"tau1", p.tau1},   {"tau2", p.tau2}};
}

SvenssonParams svensson_from_json(const json& j) {
    SvenssonParams p;
    p.date = j.at("date").get<std::string>();
    p.beta0 = j.at("beta0").get<double>();
    p.beta1 = j.at("beta1").get<double>();
    p.beta2 = j.at("beta2").get<double>();
    p.beta3 = j.at("beta3").get<double>();
    p.tau1 = j.at("tau1").get<double>();
    p.tau2 = j.at("tau2").get<double>();
    return p;
}

json vol_payload(const VolModel& v) {
    return {{"coeffs", mat_to_json(v.coeffs)},
            {"fit_domain", json::array({v.fit_lo, v.fit_hi})},
            {"cap_m", v.cap_m},
            {"proportional", v.proportional},
            {"eigenvalues", vec_to_json(v.eigenvalues)}};
}

VolModel vol_payload_from(const json& j) {
    VolModel v;
    const Eigen::MatrixXd c = mat_from_json(j.at("coeffs"));
    if (c.rows() != 3 || c.cols() != 4)
        throw std::runtime_error("vol_model coeffs must be 3x4");
    v.coeffs = c;
    v.fit_lo = j.at("fit_domain")[0].get<double>();
    v.fit_hi = j.at("fit_domain")[1].get<double>();
    v.cap_m = j.at("cap_m").get<double>();
    v.proportional = j.at("proportional").get<bool>();
    const Eigen::VectorXd ev = vec_from_json(j.at("eigenvalues"));
    if (ev.size() != 3) throw std::runtime_error("vol_model needs 3 eigenvalues");
    v.eigenvalues = ev;
    return v;
}

void check_version(const json& j, int expected, const char* what) {
    const int got = j.at("version").get<int>();
    if (got != expected) {
        std::ostringstream msg;
        msg << what << " version mismatch: file has " << got << ", expected " << expected;
        throw std::runtime_error(msg.str());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << text;
}

}  // namespace

std::string curves_to_json(const CurveDataset& dataset) {
    json records = json::array();
    for (const auto& [sv, curve] : dataset.records)
        records.push_back({{"svensson", svensson_to_json(sv)}, {"rates", vec_to_json(curve.rates)}});

    json bounds = json::object();
    for (const auto& [name, b] : dataset.filter_report.bounds)
        bounds[name] = json::array({b.first, b.second});

    json doc = {{"version", kCurvesVersion},
                {"grid", grid_to_json(dataset.grid)},
                {"records", std::move(records)},
                {"filter_report",
                 {{"rows_in", dataset.filter_report.rows_in},
                  {"dropped_parse", dataset.filter_report.dropped_parse},
                  {"dropped_quantile", dataset.filter_report.dropped_quantile},
                  {"dropped_positivity", dataset.filter_report.dropped_positivity},
                  {"rows_out", dataset.filter_report.rows_out},
                  {"bounds", std::move(bounds)}}}};
    return doc.dump(2);
}

CurveDataset curves_from_json(const std::string& text) {
    const json doc = json::parse(text);
    check_version(doc, kCurvesVersion, "curves");
    CurveDataset ds;
    ds.grid = grid_from_json(doc.at("grid"));
    for (const auto& rec : doc.at("records")) {
        DiscreteCurve curve;
        curve.grid = ds.grid;
        curve.rates = vec_from_json(rec.at("rates"));
        if (curve.rates.size() != ds.grid.k_count)
            throw std::runtime_error("record rate vector does not match grid");
        ds.records.emplace_back(svensson_from_json(rec.at("svensson")), std::move(curve));
    }
    const json& fr = doc.at("filter_report");
    ds.filter_report.rows_in = fr.at("rows_in").get<long>();
    ds.filter_report.dropped_parse = fr.at("dropped_parse").get<long>();
    ds.filter_report.dropped_quantile = fr.at("dropped_quantile").get<long>();
    ds.filter_report.dropped_positivity = fr.at("dropped_positivity").get<long>();
    ds.filter_report.rows_out = fr.at("rows_out").get<long>();
    for (const auto& [name, b] : fr.at("bounds").items())
        ds.filter_report.bounds[name] = {b[0].get<double>(), b[1].get<double>()};
    return ds;
}

std::string vol_to_json(const VolModel& vols) {
    json doc = vol_payload(vols);
    doc["version"] = kVolVersion;
    return doc.dump(2);
}

VolModel vol_from_json(const std::string& text) {
    const json doc = json::parse(text);
    check_version(doc, kVolVersion, "vol_model");
    return vol_payload_from(doc);
}

std::string model_to_json(const NetworkParams& p) {
    json weights = json::array(), biases = json::array();
    for (const auto& w : p.weights) weights.push_back(mat_to_json(w));
    for (const auto& b : p.biases) biases.push_back(vec_to_json(b));
    json doc = {{"version", kModelVersion},
                {"layer_sizes", p.layer_sizes},
                {"weights", std::move(weights)},
                {"biases", std::move(biases)},
                {"norm_stats",
                 {{"shift", vec_to_json(p.norm.shift)}, {"scale", vec_to_json(p.norm.scale)}}},
                {"input_layout", p.input_layout},
                {"grid", grid_to_json(p.grid)},
                {"vol_model", vol_payload(p.vols)}};
    return doc.dump(2);
}

NetworkParams model_from_json(const std::string& text) {
    const json doc = json::parse(text);
    check_version(doc, kModelVersion, "model checkpoint");
    NetworkParams p;
    p.layer_sizes = doc.at("layer_sizes").get<std::vector<int>>();
    for (const auto& w : doc.at("weights")) p.weights.push_back(mat_from_json(w));
    for (const auto& b : doc.at("biases")) p.biases.push_back(vec_from_json(b));
    p.norm.shift = vec_from_json(doc.at("norm_stats").at("shift"));
    p.norm.scale = vec_from_json(doc.at("norm_stats").at("scale"));
    p.input_layout = doc.at("input_layout").get<std::vector<std::string>>();
    p.grid = grid_from_json(doc.at("grid"));
    p.vols = vol_payload_from(doc.at("vol_model"));

    if (p.weights.size() != p.biases.size() || p.weights.size() + 1 != p.layer_sizes.size())
        throw std::runtime_error("checkpoint layer count inconsistent");
    for (std::size_t l = 0; l < p.weights.size(); ++l)
        if (p.weights[l].rows() != p.layer_sizes[l + 1] || p.weights[l].cols() != p.layer_sizes[l] ||
            p.biases[l].size() != p.layer_sizes[l + 1])
            throw std::runtime_error("checkpoint weight shapes inconsistent with layer_sizes");
    if (p.norm.shift.size() != p.layer_sizes.front() || p.norm.scale.size() != p.layer_sizes.front())
        throw std::runtime_error("checkpoint norm_stats size mismatch");
    return p;
}

void save_curves(const CurveDataset& dataset, const std::string& path) {
    write_file(path, curves_to_json(dataset));
}
CurveDataset load_curves(const std::string& path) { return curves_from_json(read_file(path)); }
void save_vol(const VolModel& vols, const std::string& path) { write_file(path, vol_to_json(vols)); }
VolModel load_vol(const std::string& path) { return vol_from_json(read_file(path)); }
void save_model(const NetworkParams& params, const std::string& path) {
    write_file(path, model_to_json(params));
}
NetworkParams load_model(const std::string& path) { return model_from_json(read_file(path)); }

}  // namespace finn
