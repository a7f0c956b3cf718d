#include "mikado/io.hpp"

#include <bit>
#include <cctype>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "mikado/errors.hpp"

namespace mikado {

namespace {

constexpr int kImageVersion = 1;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) f.push_back(cell);
    return f;
}

double parse_double(const std::string& s, const std::string& where) {
    // strtod rather than stod: subnormal values set ERANGE but parse exactly
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isspace(static_cast<unsigned char>(s.front())))
        throw IoError(where + ": not a number: '" + s + "'");
    return v;
}

void byteswap_if_big(std::vector<double>& v) {
    if constexpr (std::endian::native == std::endian::big) {
        for (double& x : v) {
            unsigned char b[8];
            std::memcpy(b, &x, 8);
            for (int k = 0; k < 4; ++k) std::swap(b[k], b[7 - k]);
            std::memcpy(&x, b, 8);
        }
    }
}

Image load_binary(const std::string& path, const std::string& bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw IoError(path + ": malformed header (no newline)");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(bytes.substr(0, nl));
    } catch (const nlohmann::json::parse_error&) {
        throw IoError(path + ": malformed header");
    }
    if (!h.is_object() || !h.contains("version") || !h.contains("height") || !h.contains("width") ||
        !h.contains("dtype") || !h.contains("endian"))
        throw IoError(path + ": malformed header (missing fields)");
    if (!h["version"].is_number_integer() || h["version"].get<long long>() != kImageVersion)
        throw IoError(path + ": unsupported image format version " + h["version"].dump());
    if (!h["height"].is_number_unsigned() || !h["width"].is_number_unsigned())
        throw IoError(path + ": malformed header (height/width)");
    if (h["dtype"] != "f64" || h["endian"] != "little")
        throw IoError(path + ": unsupported dtype or endianness");

    Image img;
    img.height = h["height"].get<std::size_t>();
    img.width = h["width"].get<std::size_t>();
    const std::size_t expected = img.height * img.width * sizeof(double);
    const std::size_t got = bytes.size() - nl - 1;
    if (got < expected)
        throw IoError(path + ": truncated payload (expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(got) + ")");
    if (got > expected) throw IoError(path + ": unexpected trailing bytes after the payload");
    img.values.resize(img.height * img.width);
    std::memcpy(img.values.data(), bytes.data() + nl + 1, expected);
    byteswap_if_big(img.values);
    return img;
}

Image load_csv(const std::string& path, const std::string& text) {
    Image img;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line);
        if (img.height == 0) img.width = f.size();
        if (f.size() != img.width || f.empty())
            throw IoError(path + ":" + std::to_string(line_no) + ": ragged CSV image row");
        for (const auto& cell : f) img.values.push_back(parse_double(cell, path + ":" + std::to_string(line_no)));
        ++img.height;
    }
    if (img.height == 0) throw IoError(path + ": empty image");
    return img;
}

}  // namespace

void save_image(const std::string& path, const Image& image, ImageFormat format) {
    if (image.values.size() != image.height * image.width)
        throw ContractError("save_image: value count does not match height x width");
    if (format == ImageFormat::csv) {
        auto out = open_out(path);
        for (std::size_t r = 0; r < image.height; ++r) {
            for (std::size_t c = 0; c < image.width; ++c)
                out << (c ? "," : "") << fmt17(image.values[r * image.width + c]);
            out << '\n';
        }
        finish(out, path);
        return;
    }
    auto out = open_out(path, true);
    out << "{\"height\":" << image.height << ",\"width\":" << image.width
        << ",\"dtype\":\"f64\",\"endian\":\"little\",\"version\":" << kImageVersion << "}\n";
    std::vector<double> data = image.values;
    byteswap_if_big(data);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    finish(out, path);
}

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image '" + path + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw IoError(path + ": empty file");
    return bytes.front() == '{' ? load_binary(path, bytes) : load_csv(path, bytes);
}

void save_truth_csv(const std::string& path, const SceneTruth& truth) {
    if (truth.occupied.size() != truth.brightness.size())
        throw ContractError("save_truth_csv: occupancy and brightness differ in length");
    auto out = open_out(path);
    out << "site_index,occupied,brightness\n";
    for (std::size_t i = 0; i < truth.occupied.size(); ++i)
        out << i << ',' << (truth.occupied[i] ? 1 : 0) << ',' << fmt17(truth.brightness[i]) << '\n';
    finish(out, path);
}

SceneTruth load_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "site_index,occupied,brightness")
        throw IoError(path + ": expected header site_index,occupied,brightness");
    SceneTruth t;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto f = split(line);
        if (f.size() != 3) throw IoError(where + ": expected 3 fields");
        if (f[0] != std::to_string(t.occupied.size())) throw IoError(where + ": site_index out of sequence");
        if (f[1] != "0" && f[1] != "1") throw IoError(where + ": occupied must be 0 or 1");
        t.occupied.push_back(f[1] == "1");
        t.brightness.push_back(parse_double(f[2], where));
    }
    return t;
}

void save_occupancy_csv(const std::string& path, const ArrayGeometry& geom, const Occupancy& occupied,
                        const std::vector<double>& xhat) {
    if (occupied.size() != geom.n_sites() || xhat.size() != geom.n_sites())
        throw ContractError("save_occupancy_csv: site count mismatch");
    auto out = open_out(path);
    out << "site_index,row,col,occupied,xhat\n";
    for (std::size_t i = 0; i < occupied.size(); ++i)
        out << i << ',' << i / geom.n_cols << ',' << i % geom.n_cols << ',' << (occupied[i] ? 1 : 0) << ','
            << fmt17(xhat[i]) << '\n';
    finish(out, path);
}

Occupancy load_occupancy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open occupancy CSV '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "site_index,row,col,occupied,xhat")
        throw IoError(path + ": expected header site_index,row,col,occupied,xhat");
    Occupancy occ;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 5 || (f[3] != "0" && f[3] != "1"))
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
        occ.push_back(f[3] == "1");
    }
    return occ;
}

void save_trace_csv(const std::string& path, const std::vector<MikadoState>& trace) {
    auto out = open_out(path);
    out << "step,t_low,t_high,site_index,label,xhat\n";
    for (const auto& s : trace) {
        for (std::size_t k = 0; k < s.active_sites.size(); ++k) {
            const std::size_t site = s.active_sites[k];
            out << s.step << ',' << fmt17(s.t_low) << ',' << fmt17(s.t_high) << ',' << site << ','
                << label_code(s.labels[site]) << ',' << fmt17(s.last_estimate.xhat[k]) << '\n';
        }
    }
    finish(out, path);
}

}  // namespace mikado
