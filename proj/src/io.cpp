#include "wqed/io.hpp"
#include "wqed/errors.hpp"
#include "wqed/sha256.hpp"
#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace wqed {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

static std::string cell_to_string(const Cell& c) {
    if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    const std::string& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

void Table::add_row(std::vector<Cell> cells) {
    if (cells.size() != columns.size())
        throw validation_error("row width does not match column count in table '" + name + "'");
    rows.push_back(std::move(cells));
}

static std::string render_table(const Table& t, const json& config_echo,
                                const std::string& task) {
    json meta;
    meta["config"] = config_echo;
    meta["table"] = t.name;
    meta["task"] = task;
    meta["version"] = kVersion;
    if (t.meta.is_object()) meta.update(t.meta);

    std::string out = "# " + meta.dump() + "\n";
    for (size_t i = 0; i < t.columns.size(); ++i) {
        if (i) out += ',';
        out += t.columns[i];
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += cell_to_string(row[i]);
        }
        out += '\n';
    }
    return out;
}

static std::string render_matrix(const ComplexMatrix& mat) {
    std::string out = "dim " + std::to_string(mat.dim()) + " " + mat.label + "\n";
    for (int i = 0; i < mat.dim(); ++i)
        for (int j = 0; j < mat.dim(); ++j) {
            const cplx v = mat.m(i, j);
            out += format_double(v.real());
            out += ' ';
            out += format_double(v.imag());
            out += '\n';
        }
    return out;
}

static void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open '" + path.string() + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw io_error("short write to '" + path.string() + "'");
}

void write_outputs(const OutputSet& out, const json& config_echo, const std::string& task,
                   const std::string& dir, bool force) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir + "': " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;  // name -> content
    for (const auto& t : out.tables)
        files.emplace_back(t.name + ".csv", render_table(t, config_echo, task));
    for (const auto& m : out.matrices) files.emplace_back(m.label + ".mat", render_matrix(m));

    if (!force) {
        for (const auto& [name, content] : files)
            if (fs::exists(fs::path(dir) / name))
                throw refused_overwrite("'" + (fs::path(dir) / name).string() +
                                        "' exists; pass --force to overwrite");
        if (fs::exists(fs::path(dir) / "index.json"))
            throw refused_overwrite("'" + (fs::path(dir) / "index.json").string() +
                                    "' exists; pass --force to overwrite");
    }

    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    json manifest;
    manifest["task"] = task;
    manifest["version"] = kVersion;
    manifest["files"] = json::array();
    for (const auto& [name, content] : files) {
        write_file(fs::path(dir) / name, content);
        manifest["files"].push_back(
            {{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    write_file(fs::path(dir) / "index.json", manifest.dump(2) + "\n");
}

void dump_matrix(const ComplexMatrix& mat, const std::string& path) {
    write_file(path, render_matrix(mat));
}

ComplexMatrix read_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open matrix file '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw parse_error("empty matrix file '" + path + "'");
    std::istringstream hdr(line);
    std::string tag;
    long long dim = 0;
    hdr >> tag >> dim;
    if (tag != "dim" || dim <= 0)
        throw parse_error("bad matrix header in '" + path + "': expected 'dim N label'");
    std::string label;
    std::getline(hdr, label);
    if (!label.empty() && label.front() == ' ') label.erase(0, 1);

    ComplexMatrix out;
    out.label = label;
    out.m.resize(dim, dim);
    for (long long i = 0; i < dim; ++i)
        for (long long j = 0; j < dim; ++j) {
            double re = 0, im = 0;
            if (!(f >> re >> im))
                throw parse_error("truncated matrix data in '" + path + "' at entry (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
            out.m(i, j) = cplx(re, im);
        }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace wqed
