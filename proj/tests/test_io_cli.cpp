#include <doctest.h>
#include <sys/wait.h>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include "test_util.hpp"
#include "wqed/io.hpp"
#include "wqed/run.hpp"
#include "wqed/sha256.hpp"
#include "wqed/swt.hpp"

using namespace wqed;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / "wqed_tests" / tag;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + WQED_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

int run_shell(const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

json minimal_config(const std::string& task) {
    json j;
    j["task"] = task;
    return j;
}

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("sha256 reference vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string(200, 'a')) ==
          "c2a908d98f5df987ade41b5fce213067efbcc21ef2240212a41e54b5e7c28ae5");
}

TEST_CASE("shortest round-trip doubles") {
    for (double x : {0.1, 1.0 / 3.0, 4.1079191812887462e-5, 1e-300, M_PI, 42.0, -7.25,
                     -0.007500562550629562}) {
        const std::string s = format_double(x);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(std::memcmp(&back, &x, sizeof(double)) == 0);
    }
    CHECK(format_double(42.0).find(',') == std::string::npos);
}

TEST_CASE("table rendering and metadata") {
    const fs::path dir = fresh_dir("render");
    Table t;
    t.name = "demo";
    t.columns = {"n", "x", "tag"};
    t.meta["note"] = "hello";
    t.add_row({1LL, 0.5, std::string("plain")});
    t.add_row({2LL, 1.0 / 3.0, std::string("a,b \"c\"")});
    CHECK(thrown_kind([&] { t.add_row({1LL}); }) == "ValidationError");

    OutputSet out;
    out.tables.push_back(t);
    write_outputs(out, minimal_config("h0-spectrum"), "h0-spectrum", dir.string(), false);

    const std::string text = read_file((dir / "demo.csv").string());
    REQUIRE(text.rfind("# {", 0) == 0);
    const size_t eol = text.find('\n');
    const json meta = json::parse(text.substr(2, eol - 2));
    CHECK(meta["table"] == "demo");
    CHECK(meta["task"] == "h0-spectrum");
    CHECK(meta["version"] == kVersion);
    CHECK(meta["note"] == "hello");
    CHECK(meta.contains("config"));

    std::vector<std::string> lines;
    for (size_t pos = 0, next; pos < text.size(); pos = next + 1) {
        next = text.find('\n', pos);
        lines.push_back(text.substr(pos, next - pos));
    }
    REQUIRE(lines.size() == 4);
    CHECK(lines[1] == "n,x,tag");
    CHECK(lines[2] == "1,0.5,plain");
    CHECK(lines[3] == "2,0.3333333333333333,\"a,b \"\"c\"\"\"");
    CHECK(text.back() == '\n');

    SUBCASE("empty table still writes header and manifest") {
        const fs::path d2 = fresh_dir("render_empty");
        Table e;
        e.name = "empty";
        e.columns = {"a", "b"};
        OutputSet o2;
        o2.tables.push_back(e);
        write_outputs(o2, minimal_config("h0-spectrum"), "h0-spectrum", d2.string(), false);
        const std::string txt = read_file((d2 / "empty.csv").string());
        CHECK(std::count(txt.begin(), txt.end(), '\n') == 2);
        CHECK(fs::exists(d2 / "index.json"));
    }
}

TEST_CASE("output manifest and overwrite discipline") {
    const fs::path dir = fresh_dir("manifest");
    OutputSet out;
    Table t;
    t.name = "zeta";
    t.columns = {"v"};
    t.add_row({0.25});
    out.tables.push_back(t);
    CMat m(2, 2);
    m << cplx(0, 1), cplx(2, 0), cplx(0.5, -0.5), cplx(0, 0);
    out.matrices.push_back({m, "mat"});

    write_outputs(out, minimal_config("swt"), "swt", dir.string(), false);

    const json idx = json::parse(read_file((dir / "index.json").string()));
    CHECK(idx["task"] == "swt");
    CHECK(idx["version"] == kVersion);
    REQUIRE(idx["files"].size() == 2);
    // sorted by name, digests match the bytes on disk
    CHECK(idx["files"][0]["name"] == "mat.mat");
    CHECK(idx["files"][1]["name"] == "zeta.csv");
    for (const auto& f : idx["files"]) {
        const std::string content = read_file((dir / f["name"].get<std::string>()).string());
        CHECK(f["sha256"] == sha256_hex(content));
        CHECK(f["bytes"] == content.size());
    }

    SUBCASE("second write refuses, force reproduces identical bytes") {
        const std::string before = read_file((dir / "zeta.csv").string());
        CHECK(thrown_kind([&] {
                  write_outputs(out, minimal_config("swt"), "swt", dir.string(), false);
              }) == "RefusedOverwrite");
        write_outputs(out, minimal_config("swt"), "swt", dir.string(), true);
        CHECK(read_file((dir / "zeta.csv").string()) == before);
    }
}

TEST_CASE("matrix dump round trip") {
    const fs::path dir = fresh_dir("dump");
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    CMat m(7, 7);
    for (int j = 0; j < 7; ++j)
        for (int i = 0; i < 7; ++i) m(i, j) = cplx(u(rng), u(rng));

    const std::string path = (dir / "m.dat").string();
    dump_matrix({m, "hprime"}, path);
    const ComplexMatrix back = read_matrix(path);
    CHECK(back.label == "hprime");
    REQUIRE(back.dim() == 7);
    CHECK((back.m - m).cwiseAbs().maxCoeff() == 0.0);

    SUBCASE("parse failures") {
        write_text(dir / "bad1.dat", "rows 3 x\n");
        CHECK(thrown_kind([&] { read_matrix((dir / "bad1.dat").string()); }) == "ParseError");
        write_text(dir / "bad2.dat", "dim 2 short\n0 0\n1 1\n");
        CHECK(thrown_kind([&] { read_matrix((dir / "bad2.dat").string()); }) == "ParseError");
        CHECK(thrown_kind([&] { read_matrix((dir / "missing.dat").string()); }) == "IoError");
    }
}

TEST_CASE("config validation") {
    SUBCASE("defaults") {
        const RunConfig c = parse_config(minimal_config("h0-spectrum"));
        CHECK(c.params.n_sites == 2);
        CHECK(c.params.gamma0 == 1.0);
        CHECK(c.params.omega == 1.0);
        CHECK(c.params.phi == 0.03);
        CHECK(c.params.eta == 0.0);
        CHECK(c.thresholds.gap_factor == 5.0);
        CHECK(c.grids.eta_over_phi.size() == 7);
        CHECK(c.grids.theta.size() == 64);
        CHECK(c.grids.beta.size() == 200);
        CHECK(c.threads == 1);
        CHECK_FALSE(c.force);
    }
    SUBCASE("typo suggestions") {
        json j = minimal_config("h0-spectrum");
        j["params"]["gamma"] = 0.5;
        try {
            parse_config(j);
            FAIL("expected a validation error");
        } catch (const Error& e) {
            CHECK(e.kind == "ValidationError");
            CHECK(std::string(e.what()).find("did you mean 'gamma0'") != std::string::npos);
        }
        try {
            parse_config(minimal_config("h0spectrum"));
            FAIL("expected a validation error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("h0-spectrum") != std::string::npos);
        }
    }
    SUBCASE("field checks") {
        auto bad = [](auto mut) {
            json j;
            j["task"] = "heff";
            mut(j);
            return thrown_kind([&] { parse_config(j); });
        };
        CHECK(bad([](json& j) { j["grids"]["beta"] = {0.0}; }) == "ValidationError");
        CHECK(bad([](json& j) { j["thresholds"]["q"] = 1.0; }) == "ValidationError");
        CHECK(bad([](json& j) { j["thresholds"]["gap_factor"] = 1.0; }) == "ValidationError");
        CHECK(bad([](json& j) { j["threads"] = 0; }) == "ValidationError");
        CHECK(bad([](json& j) { j["params"]["n_sites"] = 1; }) == "ValidationError");
        CHECK(bad([](json& j) {
                  j["modulation"] = {{"source", "explicit"}, {"v_re", 0.01}};
              }) == "ValidationError");
        CHECK(bad([](json& j) { j["modulation"]["source"] = "guess"; }) == "ValidationError");
        CHECK(thrown_kind([] { parse_config(minimal_config("analyze")); }) == "ValidationError");
        CHECK(thrown_kind([] { parse_config(json::array()); }) == "ValidationError");
    }
    SUBCASE("echo is a fixed point") {
        json j = minimal_config("sweep-theta");
        j["params"] = {{"n_sites", 24}, {"gamma0", 0.1}, {"phi", 0.03}, {"eta", 0.03}};
        j["modulation"] = {{"source", "explicit"},
                           {"v_re", 1e-4},
                           {"v_im", 0.0},
                           {"beta", 0.13},
                           {"theta", 0.2}};
        const RunConfig c1 = parse_config(j);
        const RunConfig c2 = parse_config(c1.echo());
        CHECK(c1.echo() == c2.echo());
        CHECK(c1.echo()["params"]["n_sites"] == 24);
        // execution plumbing stays out of the echo so reruns are byte-stable
        CHECK_FALSE(c1.echo().contains("output_dir"));
        CHECK_FALSE(c1.echo().contains("threads"));
    }
    SUBCASE("parse errors carry position info") {
        const fs::path dir = fresh_dir("cfg");
        write_text(dir / "broken.json", "{\"task\": \"swt\",,}");
        try {
            load_config((dir / "broken.json").string());
            FAIL("expected a parse error");
        } catch (const Error& e) {
            CHECK(e.kind == "ParseError");
        }
        CHECK(thrown_kind([&] { load_config((dir / "absent.json").string()); }) == "IoError");
    }
}

TEST_CASE("analyze task round trip") {
    const fs::path dir = fresh_dir("analyze");
    ArrayParams p;
    p.n_sites = 64;
    p.gamma0 = 1.0;
    p.phi = 0.03;
    const ComplexMatrix h = build_h0(p);
    dump_matrix(h, (dir / "h0.dat").string());

    json j = minimal_config("analyze");
    j["input"] = (dir / "h0.dat").string();
    j["params"]["n_sites"] = 64;
    const OutputSet out = run_task(parse_config(j));

    REQUIRE(out.tables.size() == 3);
    CHECK(out.tables[0].name == "spectrum");
    CHECK(out.tables[0].rows.size() == 64);
    CHECK(out.tables[1].name == "spacings");
    CHECK(out.tables[1].rows.size() == 63);
    CHECK(out.tables[2].name == "fractal");
    CHECK(out.tables[2].rows.size() == 64);
    // re-diagonalizing the dump reproduces the builder spectrum
    const Spectrum direct = eigendecompose(h);
    const Spectrum redone = eigendecompose(read_matrix((dir / "h0.dat").string()));
    for (int i = 0; i < 64; ++i) CHECK(std::abs(direct.values[i] - redone.values[i]) < 1e-12);
}

TEST_CASE("eta sweep matches the standalone transformation") {
    ArrayParams p;
    p.n_sites = 120;
    p.gamma0 = 0.1;
    p.omega = 1.0;
    p.phi = 0.03;
    p.eta = 0.03;

    json j = minimal_config("sweep-eta");
    j["params"] = {{"n_sites", 120}, {"gamma0", 0.1}, {"omega", 1.0}, {"phi", 0.03},
                   {"eta", 0.03}};
    j["grids"]["eta_over_phi"] = {1.0};
    const OutputSet out = run_task(parse_config(j));
    REQUIRE(out.tables.size() == 2);
    const Table& sweep = out.tables[0];
    const Table& bands = out.tables[1];
    REQUIRE(sweep.rows.size() == 60);

    const SwtResult ref = swt_hamiltonian(p);
    const Spectrum spec = eigendecompose(ref.h_prime);
    const SubradiantSet sel = select_subradiant(spec, SubradiantCriterion::by_count(60));
    for (size_t r = 0; r < sweep.rows.size(); ++r) {
        CHECK(std::get<std::string>(sweep.rows[r][7]) == "ok");
        const cplx want = spec.values[sel.indices[r]];
        CHECK(std::abs(std::get<double>(sweep.rows[r][4]) - want.real()) < 1e-12);
        CHECK(std::abs(std::get<double>(sweep.rows[r][5]) - want.imag()) < 1e-12);
    }
    REQUIRE(bands.rows.size() == 3);
    for (const auto& row : bands.rows) {
        CHECK(std::get<std::string>(row[10]) == "ok");
        const double d2 = std::get<double>(row[4]);
        CHECK(d2 >= 0.0);
        CHECK(d2 <= 1.1);
    }
}

TEST_CASE("theta sweep emits the physical pair") {
    json j = minimal_config("sweep-theta");
    j["params"] = {{"n_sites", 16}, {"gamma0", 1.0}, {"phi", 0.03}};
    j["modulation"] = {{"source", "explicit"},
                       {"v_re", 0.01},
                       {"v_im", 0.0},
                       {"beta", 0.13},
                       {"theta", 0.2}};
    const OutputSet out = run_task(parse_config(j));
    REQUIRE(out.tables.size() == 2);
    CHECK(out.tables[0].name == "sweep");
    CHECK(out.tables[0].rows.size() == 64 * 16);
    CHECK(out.tables[1].name == "physical");
    CHECK(out.tables[1].rows.size() == 2 * 16);
    CHECK(out.tables[0].meta["theta_physical"].size() == 2);
    // flags distinguish the tables
    CHECK(std::get<long long>(out.tables[0].rows[0][2]) == 0);
    CHECK(std::get<long long>(out.tables[1].rows[0][2]) == 1);
}

TEST_CASE("gap label task") {
    json j = minimal_config("labels");
    j["params"] = {{"n_sites", 60}, {"gamma0", 0.1}, {"omega", 1.0}, {"phi", 0.03},
                   {"eta", 0.03}};
    const OutputSet out = run_task(parse_config(j));
    REQUIRE(out.tables.size() == 1);
    CHECK(out.tables[0].name == "labels");
    CHECK(out.tables[0].meta["lattice_beta"].get<double>() > 0.0);
    CHECK(out.tables[0].meta.contains("sector_size"));
}

TEST_CASE("command line interface") {
    const fs::path dir = fresh_dir("cli");
    json j = minimal_config("h0-spectrum");
    j["params"]["n_sites"] = 4;
    write_text(dir / "cfg.json", j.dump(2) + "\n");
    const std::string cfg = (dir / "cfg.json").string();
    const std::string out1 = (dir / "out1").string();

    SUBCASE("happy path, refusal, force") {
        CHECK(run_cli("h0-spectrum --config \"" + cfg + "\" --out \"" + out1 + "\"") == 0);
        CHECK(fs::exists(fs::path(out1) / "spectrum.csv"));
        CHECK(fs::exists(fs::path(out1) / "index.json"));
        const std::string before = read_file((fs::path(out1) / "spectrum.csv").string());
        CHECK(run_cli("h0-spectrum --config \"" + cfg + "\" --out \"" + out1 + "\"") == 2);
        CHECK(run_cli("h0-spectrum --config \"" + cfg + "\" --out \"" + out1 + "\" --force") == 0);
        CHECK(read_file((fs::path(out1) / "spectrum.csv").string()) == before);
    }
    SUBCASE("argument and config failures exit 2") {
        CHECK(run_cli("swt --config \"" + cfg + "\" --out \"" + (dir / "x1").string() + "\"") == 2);
        CHECK(run_cli("h0-spectrum --out \"" + (dir / "x2").string() + "\"") == 2);
        CHECK(run_cli("h0-spectrum --config \"" + (dir / "nope.json").string() + "\"") == 2);
        CHECK(run_cli("h0-spectrum --config \"" + cfg + "\" --bogus") == 2);
        write_text(dir / "broken.json", "{not json");
        CHECK(run_cli("h0-spectrum --config \"" + (dir / "broken.json").string() + "\"") == 2);
        CHECK(run_cli("--help") == 0);
    }
    SUBCASE("numeric failures exit 3") {
        json big = minimal_config("full-ed");
        big["params"]["n_sites"] = 141;
        write_text(dir / "big.json", big.dump() + "\n");
        CHECK(run_cli("full-ed --config \"" + (dir / "big.json").string() + "\" --out \"" +
                      (dir / "x3").string() + "\"") == 3);
    }
    SUBCASE("matrix dumps are listed in the manifest") {
        json d = minimal_config("h0-spectrum");
        d["params"]["n_sites"] = 4;
        d["dump_matrices"] = true;
        write_text(dir / "dump.json", d.dump() + "\n");
        const std::string o = (dir / "out_dump").string();
        CHECK(run_cli("h0-spectrum --config \"" + (dir / "dump.json").string() + "\" --out \"" +
                      o + "\"") == 0);
        CHECK(fs::exists(fs::path(o) / "h0.mat"));
        const json idx = json::parse(read_file((fs::path(o) / "index.json").string()));
        bool found = false;
        for (const auto& f : idx["files"]) found = found || f["name"] == "h0.mat";
        CHECK(found);
    }
}

TEST_CASE("worker count does not change the bytes") {
    const fs::path dir = fresh_dir("threads");
    json j = minimal_config("sweep-theta");
    j["params"] = {{"n_sites", 16}, {"gamma0", 1.0}, {"phi", 0.03}};
    j["modulation"] = {{"source", "explicit"},
                       {"v_re", 0.01},
                       {"v_im", 0.0},
                       {"beta", 0.13},
                       {"theta", 0.2}};
    write_text(dir / "cfg.json", j.dump() + "\n");
    const std::string cfg = (dir / "cfg.json").string();
    const std::string o1 = (dir / "t1").string(), o4 = (dir / "t4").string(),
                      oe = (dir / "te").string();

    REQUIRE(run_cli("sweep-theta --config \"" + cfg + "\" --out \"" + o1 + "\" --threads 1") == 0);
    REQUIRE(run_cli("sweep-theta --config \"" + cfg + "\" --out \"" + o4 + "\" --threads 4") == 0);
    REQUIRE(run_shell("WQED_THREADS=3 \"" WQED_CLI_PATH "\" sweep-theta --config \"" + cfg +
                      "\" --out \"" + oe + "\"") == 0);
    for (const char* f : {"sweep.csv", "physical.csv", "index.json"}) {
        const std::string a = read_file((fs::path(o1) / f).string());
        CHECK(a == read_file((fs::path(o4) / f).string()));
        CHECK(a == read_file((fs::path(oe) / f).string()));
    }
}

}  // TEST_SUITE
