#include "amprt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace amprt {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError(std::string("trailing characters in ") + what + " '" + s + "'", line);
        if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what, line);
        return v;
    } catch (const std::logic_error&) {
        throw ParseError(std::string("cannot parse ") + what + " '" + s + "'", line);
    }
}

double parse_label(const std::string& s, std::size_t line) {
    if (s == "1" || s == "+1") return 1.0;
    if (s == "-1") return -1.0;
    throw ParseError("label must be -1 or +1, got '" + s + "'", line);
}

std::string format(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

void write_vector_line(std::ostream& os, const char* tag, const Eigen::VectorXd& v) {
    os << tag;
    for (Eigen::Index j = 0; j < v.size(); ++j) os << ',' << format_exact(v[j]);
    os << '\n';
}

void write_rows(std::ostream& os, const Eigen::MatrixXd& X, const Eigen::VectorXd& yt, const Eigen::VectorXd& yn) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        os << "x," << format_exact(yt[i]) << ',' << format_exact(yn[i]);
        for (Eigen::Index j = 0; j < X.cols(); ++j) os << ',' << format_exact(X(i, j));
        os << '\n';
    }
}

}  // namespace

std::string format_exact(double v) { return format("%.17g", v); }
std::string format_table(double v) { return format("%.12g", v); }

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw ShapeError("table row width does not match the header");
    rows.push_back(std::move(row));
}

void Table::write(std::ostream& os) const {
    for (const auto& [k, v] : meta) os << "# " << k << ": " << v << '\n';
    for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "\t" : "") << columns[j];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "\t" : "") << r[j];
        os << '\n';
    }
}

void Table::write_file(const std::string& path) const {
    std::ostringstream os;
    write(os);
    write_text_file(path, os.str());
}

std::vector<LogitRecord> parse_logits(std::istream& is) {
    std::vector<LogitRecord> out;
    std::string raw;
    std::size_t line = 0;
    bool header = false;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        const auto f = split(s, ',');
        if (!header) {
            if (f.size() != 3 || f[0] != "id" || f[1] != "z" || f[2] != "yhat")
                throw ParseError("expected header 'id,z,yhat'", line);
            header = true;
            continue;
        }
        if (f.size() != 3) throw ParseError("expected 3 fields, got " + std::to_string(f.size()), line);
        out.push_back({f[0], parse_number(f[1], line, "logit"), parse_label(f[2], line)});
    }
    if (!header) throw ParseError("missing header 'id,z,yhat'", line + 1);
    return out;
}

std::vector<LogitRecord> read_logits(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return parse_logits(is);
}

void write_logits(std::ostream& os, const std::vector<LogitRecord>& records) {
    os << "# " << kLogitsSchema << "\nid,z,yhat\n";
    for (const auto& r : records) os << r.id << ',' << format_exact(r.z) << ',' << (r.yhat > 0 ? "1" : "-1") << '\n';
}

void write_targets(std::ostream& os, const std::vector<std::pair<std::string, double>>& targets,
                   const std::string& config_json) {
    os << "# " << kTargetsSchema << "\n# config: " << config_json << "\nid,target\n";
    for (const auto& [id, t] : targets) os << id << ',' << format_exact(t) << '\n';
}

std::string fit_to_json(const BimodalFit& f) {
    nlohmann::ordered_json j;
    j["schema"] = kFitSchema;
    j["mu_plus"] = f.mu_plus;
    j["mu_minus"] = f.mu_minus;
    j["sigma_plus"] = f.sigma_plus;
    j["sigma_minus"] = f.sigma_minus;
    j["pi_plus"] = f.pi_plus;
    j["loglik"] = f.loglik;
    j["iterations"] = f.iterations;
    j["converged"] = f.converged;
    j["sigma_clamped"] = f.sigma_clamped;
    return j.dump(2) + "\n";
}

BimodalFit fit_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid fit JSON: ") + e.what(), 0);
    }
    if (!j.is_object() || j.value("schema", "") != kFitSchema) throw ParseError("fit file lacks schema '" + std::string(kFitSchema) + "'", 1);
    BimodalFit f;
    try {
        f.mu_plus = j.at("mu_plus").get<double>();
        f.mu_minus = j.at("mu_minus").get<double>();
        f.sigma_plus = j.at("sigma_plus").get<double>();
        f.sigma_minus = j.at("sigma_minus").get<double>();
        f.pi_plus = j.at("pi_plus").get<double>();
        f.loglik = j.value("loglik", 0.0);
        f.iterations = j.value("iterations", 0);
        f.converged = j.value("converged", false);
        f.sigma_clamped = j.value("sigma_clamped", false);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fit JSON: ") + e.what(), 0);
    }
    if (!(f.sigma_plus > 0.0 && f.sigma_minus > 0.0 && f.pi_plus > 0.0 && f.pi_plus < 1.0))
        throw ParseError("fit JSON: sigmas must be positive and pi_plus in (0, 1)", 0);
    return f;
}

void write_dataset(std::ostream& os, const GmmDataset& d, const std::string& config_json) {
    os << "# " << kDatasetSchema << "\n# model: gmm\n# config: " << config_json << '\n';
    write_vector_line(os, "mu", d.mu);
    write_rows(os, d.X, d.y_true, d.y_noisy);
}

void write_dataset(std::ostream& os, const GlmDataset& d, const std::string& config_json) {
    os << "# " << kDatasetSchema << "\n# model: glm\n# config: " << config_json << '\n';
    write_vector_line(os, "beta", d.beta);
    write_rows(os, d.X, d.y_true, d.y_noisy);
}

DatasetFile read_dataset(std::istream& is) {
    DatasetFile df;
    std::string raw;
    std::size_t line = 0;
    std::vector<std::vector<double>> rows;
    std::vector<double> yt, yn;
    bool schema = false, have_signal = false;
    while (std::getline(is, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s[0] == '#') {
            const std::string body = trim(s.substr(1));
            if (body == kDatasetSchema) schema = true;
            else if (body.rfind("model:", 0) == 0) df.model = trim(body.substr(6));
            else if (body.rfind("config:", 0) == 0) df.config_json = trim(body.substr(7));
            continue;
        }
        if (!schema) throw ParseError("missing '# " + std::string(kDatasetSchema) + "' header", line);
        const auto f = split(s, ',');
        if (f[0] == "mu" || f[0] == "beta") {
            if (have_signal) throw ParseError("duplicate signal line", line);
            df.signal.resize(static_cast<Eigen::Index>(f.size() - 1));
            for (std::size_t j = 1; j < f.size(); ++j) df.signal[j - 1] = parse_number(f[j], line, "signal entry");
            have_signal = true;
        } else if (f[0] == "x") {
            if (!have_signal) throw ParseError("sample line before the signal line", line);
            if (f.size() != static_cast<std::size_t>(df.signal.size()) + 3)
                throw ParseError("expected " + std::to_string(df.signal.size() + 3) + " fields", line);
            yt.push_back(parse_label(f[1], line));
            yn.push_back(parse_label(f[2], line));
            std::vector<double> r(f.size() - 3);
            for (std::size_t j = 3; j < f.size(); ++j) r[j - 3] = parse_number(f[j], line, "feature");
            rows.push_back(std::move(r));
        } else {
            throw ParseError("unknown line tag '" + f[0] + "'", line);
        }
    }
    if (!have_signal) throw ParseError("dataset has no signal line", line + 1);
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size()), d = df.signal.size();
    df.X.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) df.X(i, j) = rows[i][j];
    df.y_true = Eigen::Map<Eigen::VectorXd>(yt.data(), n);
    df.y_noisy = Eigen::Map<Eigen::VectorXd>(yn.data(), n);
    return df;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace amprt
