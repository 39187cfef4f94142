#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "amprt/bayesmix.hpp"
#include "amprt/glm_retrain.hpp"
#include "amprt/gmm_retrain.hpp"

namespace amprt {

inline constexpr const char* kLogitsSchema = "amprt-logits v1";
inline constexpr const char* kTargetsSchema = "amprt-targets v1";
inline constexpr const char* kDatasetSchema = "amprt-dataset v1";
inline constexpr const char* kFitSchema = "amprt-bimodal-fit v1";

// Shortest decimal text that round-trips ("%.17g").
std::string format_exact(double v);
// Table precision ("%.12g").
std::string format_table(double v);

// Tab-separated table preceded by '#' metadata lines ("# key: value").
struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row);
    void write(std::ostream& os) const;
    void write_file(const std::string& path) const;
};

// Logit file: '#' comment lines (the first names the schema), a header "id,z,yhat", then one
// record per line. yhat is -1 or +1. Errors carry the 1-based line number.
std::vector<LogitRecord> parse_logits(std::istream& is);
std::vector<LogitRecord> read_logits(const std::string& path);
void write_logits(std::ostream& os, const std::vector<LogitRecord>& records);

// Target file: schema line, "# config: <json>" line, header "id,target", rows in input order.
void write_targets(std::ostream& os, const std::vector<std::pair<std::string, double>>& targets,
                   const std::string& config_json);

std::string fit_to_json(const BimodalFit& fit);
BimodalFit fit_from_json(const std::string& text);

// Dataset file: schema line, "# model: gmm|glm", "# config: <json>" (params, link, seed, stream),
// then "mu,..." (or "beta,...") followed by one "x,y_true,y_noisy,x_1..x_d" line per sample.
void write_dataset(std::ostream& os, const GmmDataset& data, const std::string& config_json);
void write_dataset(std::ostream& os, const GlmDataset& data, const std::string& config_json);

struct DatasetFile {
    std::string model;        // "gmm" or "glm"
    std::string config_json;  // as embedded
    Eigen::VectorXd signal;   // mu or beta
    Eigen::MatrixXd X;
    Eigen::VectorXd y_true;
    Eigen::VectorXd y_noisy;
};

DatasetFile read_dataset(std::istream& is);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace amprt
