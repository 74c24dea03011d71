#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dperm/errors.hpp"
#include "dperm/gwas.hpp"

namespace dperm {

// 17 significant digits round-trip any double exactly.
inline std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ull;
    }
    return hash;
}

inline std::string to_hex(std::uint64_t value) {
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw io_error("read failure on '" + path + "'");
    return std::move(buffer).str();
}

inline void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw io_error("write failure on '" + path + "'");
}

inline std::string file_digest(const std::string& path) {
    return to_hex(fnv1a64(read_file(path)));
}

inline std::string snp_column_name(std::size_t snp_index, std::size_t p) {
    std::size_t width = std::to_string(p).size();
    if (width < 4) width = 4;
    std::string digits = std::to_string(snp_index + 1);
    return "SNP_" + std::string(width - digits.size(), '0') + digits;
}

// Cohort CSV: one row per individual, columns SNP_0001..SNP_p then phenotype.
inline std::string cohort_to_csv(const Cohort& cohort) {
    std::string out;
    out.reserve(cohort.n * (2 * cohort.p + 4) + 16 * cohort.p);
    for (std::size_t j = 0; j < cohort.p; ++j) {
        out += snp_column_name(j, cohort.p);
        out += ',';
    }
    out += "phenotype\n";
    for (std::size_t i = 0; i < cohort.n; ++i) {
        for (std::size_t j = 0; j < cohort.p; ++j) {
            out += static_cast<char>('0' + cohort.genotype(i, j));
            out += ',';
        }
        out += cohort.phenotype[i] == 1 ? "1\n" : "-1\n";
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace detail

inline Cohort cohort_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.empty()) {
        throw schema_error("cohort csv: missing header row");
    }
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "phenotype") {
        throw schema_error("cohort csv: header must end with a 'phenotype' column");
    }
    Cohort cohort;
    cohort.p = header.size() - 1;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw schema_error("cohort csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, found " +
                               std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < cohort.p; ++j) {
            if (fields[j] != "0" && fields[j] != "1" && fields[j] != "2") {
                throw schema_error("cohort csv line " + std::to_string(line_no) + ", field " +
                                   std::to_string(j + 1) + ": genotype must be 0, 1, or 2");
            }
            cohort.genotypes.push_back(static_cast<std::uint8_t>(fields[j][0] - '0'));
        }
        if (fields.back() == "1") {
            cohort.phenotype.push_back(1);
        } else if (fields.back() == "-1") {
            cohort.phenotype.push_back(-1);
        } else {
            throw schema_error("cohort csv line " + std::to_string(line_no) +
                               ": phenotype must be 1 or -1");
        }
    }
    cohort.n = cohort.phenotype.size();
    if (cohort.n == 0) throw schema_error("cohort csv: no data rows");
    return cohort;
}

inline Cohort load_cohort(const std::string& path) { return cohort_from_csv(read_file(path)); }

inline void save_cohort(const Cohort& cohort, const std::string& path) {
    write_file(path, cohort_to_csv(cohort));
}

}  // namespace dperm
