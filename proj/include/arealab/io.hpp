#pragma once

#include "arealab/store.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace arealab {

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
inline std::string format_number(double x) {
    if(std::isnan(x)) return "nan";
    if(std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for(int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if(std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

using Cell = std::variant<std::string, double, long long, bool>;

struct Table {
    std::vector<std::string>       header;
    std::vector<std::vector<Cell>> rows;
};

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string &s) {
    if(s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for(char ch : s) {
        if(ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

inline std::string cell_text(const Cell &c) {
    if(auto s = std::get_if<std::string>(&c)) return *s;
    if(auto d = std::get_if<double>(&c)) return format_number(*d);
    if(auto i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<bool>(c) ? "true" : "false";
}

inline std::string to_csv(const Table &t, const std::string &config_hash) {
    std::string out = "# config_hash=" + config_hash + "\r\n";
    for(std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + csv_field(t.header[i]);
    out += "\r\n";
    for(const auto &row : t.rows) {
        if(row.size() != t.header.size()) throw ParameterError("csv: row width does not match the header");
        for(std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
        out += "\r\n";
    }
    return out;
}

/// Replaces non-finite numbers by strings so the output stays valid JSON.
inline nlohmann::json finite_json(double x) {
    if(std::isfinite(x)) return x;
    return format_number(x);
}

/// Collects written artifacts and their checksums for the run manifest.
class ArtifactWriter {
  public:
    ArtifactWriter(std::filesystem::path dir, std::string config_hash) : dir_(std::move(dir)), hash_(std::move(config_hash)) {
        std::filesystem::create_directories(dir_);
    }

    void text(const std::string &name, const std::string &content) {
        auto p   = dir_ / name;
        auto tmp = p;
        tmp += ".tmp";
        std::filesystem::create_directories(p.parent_path());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if(!out) throw ResourceError("cannot write " + tmp.string());
            out << content;
        }
        std::filesystem::rename(tmp, p);
        files_[name] = sha256_hex(content);
    }

    void csv(const std::string &name, const Table &t) { text(name, to_csv(t, hash_)); }

    /// Sorted keys (nlohmann's default object is ordered by key), config hash embedded.
    void json(const std::string &name, nlohmann::json j) {
        j["config_hash"] = hash_;
        text(name, j.dump(2) + "\n");
    }

    void manifest(const nlohmann::json &config_echo, const std::string &command) {
        nlohmann::json m;
        m["command"]     = command;
        m["config"]      = config_echo;
        m["config_hash"] = hash_;
        m["artifacts"]   = nlohmann::json::object();
        for(const auto &[k, v] : files_) m["artifacts"][k] = {{"sha256", v}};
        text("manifest.json", m.dump(2) + "\n");
    }

    [[nodiscard]] const std::filesystem::path &dir() const { return dir_; }
    [[nodiscard]] const std::string &config_hash() const { return hash_; }
    [[nodiscard]] const std::map<std::string, std::string> &files() const { return files_; }

  private:
    std::filesystem::path              dir_;
    std::string                        hash_;
    std::map<std::string, std::string> files_;
};

// ---------------------------------------------------------------------------------
// Minimal SVG line plots

struct Series {
    std::string         label;
    std::vector<double> x, y;
};

inline std::string svg_plot(const std::string &title, const std::string &xlabel, const std::string &ylabel, const std::vector<Series> &series,
                            const std::string &config_hash) {
    const double W = 640, H = 400, ml = 70, mr = 20, mt = 40, mb = 50;
    double       x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for(const auto &s : series)
        for(std::size_t i = 0; i < s.x.size(); ++i)
            if(std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                x0 = std::min(x0, s.x[i]);
                x1 = std::max(x1, s.x[i]);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
    if(!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if(x1 == x0) x1 = x0 + 1;
    if(y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
    auto esc = [](const std::string &s) {
        std::string o;
        for(char c : s) {
            if(c == '<') o += "&lt;";
            else if(c == '>') o += "&gt;";
            else if(c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    };
    static const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    char               b[256];
    std::string        out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- config_hash=" + config_hash + " -->\n";
    std::snprintf(b, sizeof b, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" font-size=\"12\">\n", W, H);
    out += b;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(b, sizeof b, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, H - mb, W - mr, H - mb);
    out += b;
    std::snprintf(b, sizeof b, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", ml, mt, ml, H - mb);
    out += b;
    for(int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        std::snprintf(b, sizeof b, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", px(xv), H - mb + 16, format_number(std::round(xv * 1e4) / 1e4).c_str());
        out += b;
        std::snprintf(b, sizeof b, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%s</text>\n", ml - 6, py(yv) + 4, format_number(std::round(yv * 1e4) / 1e4).c_str());
        out += b;
    }
    out += "<text x=\"" + format_number(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + esc(title) + "</text>\n";
    out += "<text x=\"" + format_number(W / 2) + "\" y=\"" + format_number(H - 12) + "\" text-anchor=\"middle\">" + esc(xlabel) + "</text>\n";
    out += "<text x=\"16\" y=\"" + format_number(H / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + format_number(H / 2) + ")\">" + esc(ylabel) + "</text>\n";
    for(std::size_t si = 0; si < series.size(); ++si) {
        const auto &s = series[si];
        std::string pts;
        for(std::size_t i = 0; i < s.x.size(); ++i) {
            if(!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            std::snprintf(b, sizeof b, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
            pts += b;
        }
        const char *col = colors[si % 6];
        out += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        std::snprintf(b, sizeof b, "<text x=\"%g\" y=\"%g\" fill=\"%s\">%s</text>\n", W - mr - 150, mt + 14.0 * (si + 1), col, esc(s.label).c_str());
        out += b;
    }
    return out + "</svg>\n";
}

} // namespace arealab
