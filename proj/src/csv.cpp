#include "kinkqte/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kinkqte {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& field, std::size_t row, const std::string& column) {
    std::string t = trim(field);
    if (t.empty()) {
        throw ParseError("row " + std::to_string(row) + ", column '" + column + "': empty field");
    }
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') {
        throw ParseError("row " + std::to_string(row) + ", column '" + column +
                         "': cannot parse '" + t + "' as a number");
    }
    return v;
}

}  // namespace

Sample ingest(const std::string& path, const ColumnMap& columns, double kink_location) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open data file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyFile("data file is empty: " + path);

    std::vector<std::string> header = split_csv_line(line);
    long yi = -1, di = -1, xi = -1;
    for (std::size_t k = 0; k < header.size(); ++k) {
        std::string name = trim(header[k]);
        if (name == columns.outcome) yi = static_cast<long>(k);
        if (name == columns.treatment) di = static_cast<long>(k);
        if (name == columns.running) xi = static_cast<long>(k);
    }
    if (yi < 0) throw ParseError("header is missing outcome column '" + columns.outcome + "'");
    if (di < 0) throw ParseError("header is missing treatment column '" + columns.treatment + "'");
    if (xi < 0) throw ParseError("header is missing running column '" + columns.running + "'");

    Sample sample;
    std::size_t row = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        std::size_t need = static_cast<std::size_t>(std::max({yi, di, xi})) + 1;
        if (fields.size() < need) {
            throw ParseError("row " + std::to_string(row) + ": expected at least " +
                             std::to_string(need) + " fields, found " +
                             std::to_string(fields.size()));
        }
        double y = parse_double(fields[static_cast<std::size_t>(yi)], row, columns.outcome);
        double d = parse_double(fields[static_cast<std::size_t>(di)], row, columns.treatment);
        double x = parse_double(fields[static_cast<std::size_t>(xi)], row, columns.running);
        if (d != 0.0 && d != 1.0) {
            throw NonBinaryTreatment("row " + std::to_string(row) + ": treatment value " +
                                     trim(fields[static_cast<std::size_t>(di)]) +
                                     " is not 0 or 1");
        }
        sample.y.push_back(y);
        sample.d.push_back(static_cast<std::int8_t>(d));
        sample.x.push_back(x - kink_location);
    }
    if (sample.size() == 0) throw EmptyFile("data file has a header but no rows: " + path);
    return sample;
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string process_csv(std::span<const double> grid, std::span<const double> values) {
    if (grid.size() != values.size()) throw LengthMismatch("process_csv: length mismatch");
    std::ostringstream os;
    os << "grid,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        os << num(grid[i]) << "," << num(values[i]) << "\n";
    }
    return os.str();
}

std::string band_csv(const QteProcess& qte, const UniformBand& band) {
    std::ostringstream os;
    os << "theta,tau,lo,hi\n";
    for (std::size_t i = 0; i < qte.theta_grid.size(); ++i) {
        os << num(qte.theta_grid[i]) << "," << num(qte.tau[i]) << "," << num(band.lo[i]) << ","
           << num(band.hi[i]) << "\n";
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open output file: " + path);
    out << content;
    if (!out) throw InputError("failed writing output file: " + path);
}

}  // namespace kinkqte
