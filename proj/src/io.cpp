#include "slicematch/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "slicematch/errors.hpp"

namespace slicematch {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& token, const std::string& path, std::size_t line) {
    double out = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw parse_error(path + ":" + std::to_string(line) + ": cannot parse number '" + token +
                          "'");
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::ifstream open_for_read(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw parse_error(path + ": cannot open for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw parse_error(path + ": cannot open for writing");
    return out;
}

std::string lower_ext(const std::string& path) {
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

DiscreteMeasure read_measure_csv(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line)) throw parse_error(path + ": empty file");
    const std::vector<std::string> header = split_csv_line(strip_cr(line));

    bool has_weights = false;
    int dim = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "w") {
            if (c + 1 != header.size()) {
                throw parse_error(path + ":1: weight column must come last");
            }
            has_weights = true;
        } else if (header[c] == "x" + std::to_string(c)) {
            ++dim;
        } else {
            throw parse_error(path + ":1: unexpected column '" + header[c] +
                              "', expected x0,...,x{n-1}[,w]");
        }
    }
    if (dim < 1) throw parse_error(path + ":1: no coordinate columns");

    std::vector<double> coords;
    std::vector<double> weights;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        }
        for (int c = 0; c < dim; ++c) {
            coords.push_back(parse_double(cells[static_cast<std::size_t>(c)], path, lineno));
        }
        if (has_weights) {
            weights.push_back(parse_double(cells.back(), path, lineno));
        }
    }
    const std::size_t m = coords.size() / static_cast<std::size_t>(dim);
    if (m == 0) throw parse_error(path + ": no data rows");

    Eigen::MatrixXd pts(dim, static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        for (int c = 0; c < dim; ++c) {
            pts(c, static_cast<Eigen::Index>(j)) = coords[j * static_cast<std::size_t>(dim) +
                                                          static_cast<std::size_t>(c)];
        }
    }
    try {
        if (has_weights) {
            Eigen::VectorXd w =
                Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(m));
            return DiscreteMeasure(std::move(pts), std::move(w));
        }
        return DiscreteMeasure::uniform(std::move(pts));
    } catch (const std::invalid_argument& e) {
        throw parse_error(path + ": " + e.what());
    }
}

std::string measure_to_csv(const DiscreteMeasure& sigma) {
    std::ostringstream os;
    for (int c = 0; c < sigma.dim(); ++c) os << "x" << c << ",";
    os << "w\n";
    for (int j = 0; j < sigma.size(); ++j) {
        for (int c = 0; c < sigma.dim(); ++c) os << fmt_double(sigma.points()(c, j)) << ",";
        os << fmt_double(sigma.weights()[j]) << "\n";
    }
    return os.str();
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& sigma) {
    std::ofstream out = open_for_write(path, std::ios::out | std::ios::binary);
    out << measure_to_csv(sigma);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const std::string& cell : cells) row.push_back(parse_double(cell, path, lineno));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw parse_error(path + ":" + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(path + ": empty matrix");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.front().size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
    std::ostringstream os;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) os << ',';
            os << fmt_double(m(i, j));
        }
        os << '\n';
    }
    return os.str();
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_for_write(path, std::ios::out | std::ios::binary);
    out << matrix_to_csv(m);
}

namespace {

// PGM token reader skipping whitespace and # comments.
std::string next_pgm_token(std::istream& in, const std::string& path) {
    std::string token;
    int c = 0;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) return token;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    if (token.empty()) throw parse_error(path + ": truncated PGM header");
    return token;
}

int parse_pgm_int(std::istream& in, const std::string& path) {
    const std::string tok = next_pgm_token(in, path);
    int out = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || out < 0) {
        throw parse_error(path + ": bad PGM header field '" + tok + "'");
    }
    return out;
}

}  // namespace

IntensityGrid read_pgm(const std::string& path) {
    std::ifstream in = open_for_read(path, std::ios::in | std::ios::binary);
    const std::string magic = next_pgm_token(in, path);
    if (magic != "P2" && magic != "P5") {
        throw parse_error(path + ": expected PGM magic P2 or P5, got '" + magic + "'");
    }
    const int width = parse_pgm_int(in, path);
    const int height = parse_pgm_int(in, path);
    const int maxval = parse_pgm_int(in, path);
    if (width < 1 || height < 1) throw parse_error(path + ": empty PGM image");
    if (maxval < 1 || maxval > 255) {
        throw parse_error(path + ": only 8-bit PGM supported (maxval <= 255)");
    }

    IntensityGrid grid;
    grid.height = height;
    grid.width = width;
    grid.values.resize(static_cast<std::size_t>(height) * width);

    if (magic == "P2") {
        for (auto& v : grid.values) v = static_cast<double>(parse_pgm_int(in, path));
    } else {
        // P5: a single whitespace byte separates the header from the raster.
        std::vector<unsigned char> raw(grid.values.size());
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
            throw parse_error(path + ": truncated PGM raster");
        }
        for (std::size_t k = 0; k < raw.size(); ++k) grid.values[k] = raw[k];
    }
    for (double v : grid.values) {
        if (v > maxval) throw parse_error(path + ": sample exceeds declared maxval");
    }
    return grid;
}

void write_pgm(const std::string& path, const IntensityGrid& grid) {
    std::ofstream out = open_for_write(path, std::ios::out | std::ios::binary);
    out << "P5\n" << grid.width << " " << grid.height << "\n255\n";
    std::vector<unsigned char> raw(grid.values.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double v = std::clamp(grid.values[k], 0.0, 255.0);
        raw[k] = static_cast<unsigned char>(std::lround(v));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

bool is_image_path(const std::string& path) {
    const std::string ext = lower_ext(path);
    return ext == "pgm" || ext == "png";
}

IntensityGrid read_image(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == "pgm") return read_pgm(path);
    if (ext == "png") return read_png_gray(path);
    throw parse_error(path + ": unsupported image extension '" + ext + "'");
}

void write_image(const std::string& path, const IntensityGrid& grid) {
    const std::string ext = lower_ext(path);
    if (ext == "pgm") {
        write_pgm(path, grid);
    } else if (ext == "png") {
        write_png_gray(path, grid);
    } else {
        throw parse_error(path + ": unsupported image extension '" + ext + "'");
    }
}

DiscreteMeasure read_measure_any(const std::string& path) {
    if (is_image_path(path)) {
        try {
            return from_image(read_image(path));
        } catch (const std::invalid_argument& e) {
            throw parse_error(path + ": " + e.what());
        }
    }
    return read_measure_csv(path);
}

}  // namespace slicematch
