#pragma once
#include <json.hpp>
#include <variant>
#include <vector>
#include "wqed/builders.hpp"

namespace wqed {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// Shortest decimal that round-trips the double exactly.
std::string format_double(double x);

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    json meta;  // merged into the '#' header line
    void add_row(std::vector<Cell> cells);
};

// One CSV per table ('#'-prefixed JSON metadata line, then header, then rows,
// '\n' endings), optional matrix dumps, and an index.json manifest with
// SHA-256 digests. Refuses to overwrite existing files unless force.
struct OutputSet {
    std::vector<Table> tables;
    std::vector<ComplexMatrix> matrices;  // written via dump format, label = file stem
};

void write_outputs(const OutputSet& out, const json& config_echo, const std::string& task,
                   const std::string& dir, bool force);

// Textual matrix dump: header "dim N label", then dim*dim lines "re im"
// in row-major order, shortest round-trip floats.
void dump_matrix(const ComplexMatrix& mat, const std::string& path);
ComplexMatrix read_matrix(const std::string& path);

std::string read_file(const std::string& path);

} // namespace wqed
