#include "dsdkit/table_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dsdkit/errors.hpp"

namespace dsdkit::harness {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError(where + ": bad integer '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError(where + ": bad number '" + s + "'");
    }
    return v;
}

std::string expected_header(int num_classes) {
    std::string h = "sample_id,video_id,frame_idx,noisy_label";
    for (int c = 0; c < num_classes; ++c) h += ",p" + std::to_string(c);
    return h;
}

}  // namespace

trcl::PredictionTable predictions_from_csv(const std::string& text,
                                           const std::string& origin) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError(origin + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line);
    if (header.size() < 6 || header[0] != "sample_id" || header[1] != "video_id" ||
        header[2] != "frame_idx" || header[3] != "noisy_label") {
        throw ParseError(origin + ":1: bad header '" + line + "'");
    }
    const int m = static_cast<int>(header.size()) - 4;
    for (int c = 0; c < m; ++c) {
        if (header[static_cast<std::size_t>(4 + c)] != "p" + std::to_string(c)) {
            throw ParseError(origin + ":1: bad probability column '" +
                             header[static_cast<std::size_t>(4 + c)] + "'");
        }
    }

    trcl::PredictionTable table;
    table.num_classes = m;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != 4 + m) {
            throw ParseError(where + ": expected " + std::to_string(4 + m) +
                             " fields, got " + std::to_string(fields.size()));
        }
        trcl::PredictionRow row;
        row.sample_id = parse_int(fields[0], where);
        row.video_id = parse_int(fields[1], where);
        row.frame_idx = parse_int(fields[2], where);
        const std::int64_t label = parse_int(fields[3], where);
        if (label < 0 || label >= m) {
            throw ParseError(where + ": label " + fields[3] + " outside [0, " +
                             std::to_string(m) + ")");
        }
        row.noisy_label = static_cast<int>(label);
        row.probs.reserve(static_cast<std::size_t>(m));
        for (int c = 0; c < m; ++c) {
            row.probs.push_back(parse_double(fields[static_cast<std::size_t>(4 + c)], where));
        }
        double sum = 0.0;
        for (double p : row.probs) {
            if (!(p >= 0.0)) throw ParseError(where + ": negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-4) {
            throw ParseError(where + ": probabilities sum to " + format_double(sum) +
                             " (> 1e-4 off)");
        }
        table.rows.push_back(std::move(row));
    }

    // Structural checks (frame monotonicity, duplicate ids) with row indexes
    // mapped back to file lines.
    try {
        trcl::validate_table(table);
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return table;
}

std::string predictions_to_csv(const trcl::PredictionTable& table) {
    std::string out = expected_header(table.num_classes) + "\n";
    for (const trcl::PredictionRow& row : table.rows) {
        out += std::to_string(row.sample_id);
        out += ",";
        out += std::to_string(row.video_id);
        out += ",";
        out += std::to_string(row.frame_idx);
        out += ",";
        out += std::to_string(row.noisy_label);
        for (double p : row.probs) {
            out += ",";
            out += format_double(p);
        }
        out += "\n";
    }
    return out;
}

trcl::PredictionTable load_predictions_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return predictions_from_csv(ss.str(), path);
}

void save_predictions_csv(const trcl::PredictionTable& table,
                          const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open for writing: " + path);
    os << predictions_to_csv(table);
}

namespace {

json config_to_json_obj(const trcl::CleaningConfig& cfg) {
    json j;
    j["strategy"] = static_cast<int>(cfg.strategy);
    j["combine_mode"] = cfg.combine_mode == trcl::CombineMode::kIntersection
                            ? "intersection"
                            : "union";
    j["alpha"] = cfg.alpha;
    j["iterations"] = cfg.iterations;
    j["protected_classes"] = cfg.protected_classes;
    return j;
}

trcl::CleaningConfig config_from_json_obj(const json& j) {
    trcl::CleaningConfig cfg;
    const int strategy = j.at("strategy").get<int>();
    if (strategy < 1 || strategy > 4) {
        throw ParseError("noise report: strategy must be 1..4");
    }
    cfg.strategy = static_cast<trcl::Strategy>(strategy);
    const std::string mode = j.at("combine_mode").get<std::string>();
    if (mode == "intersection") {
        cfg.combine_mode = trcl::CombineMode::kIntersection;
    } else if (mode == "union") {
        cfg.combine_mode = trcl::CombineMode::kUnion;
    } else {
        throw ParseError("noise report: bad combine_mode '" + mode + "'");
    }
    cfg.alpha = j.at("alpha").get<double>();
    cfg.iterations = j.at("iterations").get<int>();
    for (const auto& c : j.at("protected_classes")) {
        cfg.protected_classes.insert(c.get<int>());
    }
    return cfg;
}

}  // namespace

std::string noise_report_to_json(const trcl::NoiseReport& report) {
    json j;
    j["config"] = config_to_json_obj(report.config);
    j["thresholds"] = report.thresholds;
    j["confusion"] = report.confusion;
    j["joint"] = report.joint;
    j["flagged"] = json::array();
    for (const trcl::FlaggedSample& f : report.flagged) {
        j["flagged"].push_back({{"sample_id", f.sample_id},
                                {"noisy_label", f.noisy_label},
                                {"suggested_label", f.suggested_label},
                                {"margin", f.margin}});
    }
    j["iterations"] = json::array();
    for (std::int64_t s : report.iteration_sizes) {
        j["iterations"].push_back({{"flagged_count", s}});
    }
    return j.dump(2) + "\n";
}

trcl::NoiseReport noise_report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("noise report JSON: ") + e.what());
    }
    try {
        trcl::NoiseReport report;
        report.config = config_from_json_obj(j.at("config"));
        report.thresholds = j.at("thresholds").get<std::vector<double>>();
        report.confusion =
            j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
        report.joint = j.at("joint").get<std::vector<std::vector<double>>>();
        for (const auto& f : j.at("flagged")) {
            report.flagged.push_back({f.at("sample_id").get<std::int64_t>(),
                                      f.at("noisy_label").get<int>(),
                                      f.at("suggested_label").get<int>(),
                                      f.at("margin").get<double>()});
        }
        for (const auto& it : j.at("iterations")) {
            report.iteration_sizes.push_back(it.at("flagged_count").get<std::int64_t>());
        }
        return report;
    } catch (const json::exception& e) {
        throw ParseError(std::string("noise report JSON: ") + e.what());
    }
}

void save_noise_report(const trcl::NoiseReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open for writing: " + path);
    os << noise_report_to_json(report);
}

trcl::NoiseReport load_noise_report(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return noise_report_from_json(ss.str());
}

void save_truth_csv(const SynthDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParseError("cannot open for writing: " + path);
    os << "sample_id,true_label,noisy_label,is_noise\n";
    for (std::size_t i = 0; i < ds.table.rows.size(); ++i) {
        os << ds.table.rows[i].sample_id << "," << ds.true_labels[i] << ","
           << ds.table.rows[i].noisy_label << "," << (ds.noise_mask[i] ? 1 : 0)
           << "\n";
    }
}

std::set<std::int64_t> load_truth_noise_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw ParseError(path + ": empty file");
    std::set<std::int64_t> noise;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected 4 fields");
        }
        const std::string where = path + ":" + std::to_string(line_no);
        if (parse_int(fields[3], where) != 0) {
            noise.insert(parse_int(fields[0], where));
        }
    }
    return noise;
}

}  // namespace dsdkit::harness
